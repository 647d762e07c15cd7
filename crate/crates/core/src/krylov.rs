//! Preconditioned conjugate gradients and the CG-Lanczos condition estimate.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::fem::GlobalSystem;
use crate::la::{symmetric_eigen, DenseMatrix};
use crate::precond::{LinearOperator, Preconditioner};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualNorm {
    /// `‖r‖₂`.
    Unpreconditioned,
    /// `sqrt(r^T M⁻¹ r)`.
    Preconditioned,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PcgOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub norm: ResidualNorm,
}

impl Default for PcgOptions {
    fn default() -> Self {
        PcgOptions {
            tol: 1e-10,
            max_iter: 1000,
            norm: ResidualNorm::Unpreconditioned,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖r_k‖₂ / ‖r_0‖₂`, starting with `k = 0`.
    pub residuals: Vec<f64>,
    /// `sqrt(r_k^T z_k / r_0^T z_0)`, starting with `k = 0`.
    pub preconditioned_residuals: Vec<f64>,
    pub kappa: f64,
    pub ritz_min: f64,
    pub ritz_max: f64,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub t_setup: f64,
    pub t_solve: f64,
    pub converged: bool,
    pub tol: f64,
    pub norm: Option<ResidualNorm>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }

    /// CSV with columns `iteration,relative_residual,preconditioned_residual`.
    pub fn write_residual_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iteration,relative_residual,preconditioned_residual")?;
        for (k, (r, p)) in self
            .residuals
            .iter()
            .zip(&self.preconditioned_residuals)
            .enumerate()
        {
            writeln!(w, "{k},{r:e},{p:e}")?;
        }
        Ok(())
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Solves `A x = f` starting from `x0` (zero when `None`).
///
/// Stops when the selected residual norm has dropped by `tol` relative to
/// the initial one. Hitting `max_iter` is not an error; it leaves
/// `converged == false`.
pub fn pcg(
    a: &dyn LinearOperator,
    m: &dyn Preconditioner,
    f: &[f64],
    x0: Option<&[f64]>,
    opts: &PcgOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    check_len(n, f.len())?;
    check_len(n, m.dim())?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let start = Instant::now();
    let mut x = match x0 {
        Some(x0) => {
            check_len(n, x0.len())?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut q = vec![0.0; n];
    a.apply_into(&x, &mut q)?;
    let mut r: Vec<f64> = f.iter().zip(&q).map(|(fi, qi)| fi - qi).collect();
    let mut z = m.apply(&r)?;
    let mut rz = dot(&r, &z);
    let r0 = dot(&r, &r).sqrt();
    let mut report = SolveReport {
        tol: opts.tol,
        norm: Some(opts.norm),
        residuals: vec![1.0],
        preconditioned_residuals: vec![1.0],
        ..SolveReport::default()
    };
    if r0 == 0.0 {
        report.converged = true;
        report.kappa = 1.0;
        report.t_solve = start.elapsed().as_secs_f64();
        return Ok((x, report));
    }
    if !(rz > 0.0) {
        return Err(Error::Breakdown {
            iteration: 0,
            curvature: rz,
        });
    }
    let pz0 = rz.sqrt();
    let mut p = z.clone();

    for k in 0..opts.max_iter {
        a.apply_into(&p, &mut q)?;
        let curvature = dot(&p, &q);
        if !(curvature > 0.0) {
            return Err(Error::Breakdown {
                iteration: k,
                curvature,
            });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        report.alphas.push(alpha);
        report.iterations = k + 1;
        z = m.apply(&r)?;
        let rz_new = dot(&r, &z);
        let rel = dot(&r, &r).sqrt() / r0;
        let prel = rz_new.max(0.0).sqrt() / pz0;
        report.residuals.push(rel);
        report.preconditioned_residuals.push(prel);
        let measure = match opts.norm {
            ResidualNorm::Unpreconditioned => rel,
            ResidualNorm::Preconditioned => prel,
        };
        if measure <= opts.tol || rz_new == 0.0 {
            report.converged = true;
            break;
        }
        if !(rz_new > 0.0) {
            return Err(Error::Breakdown {
                iteration: k + 1,
                curvature: rz_new,
            });
        }
        let beta = rz_new / rz;
        report.betas.push(beta);
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    report.t_solve = start.elapsed().as_secs_f64();
    let (kappa, lo, hi) = lanczos_condition_estimate(&report.alphas, &report.betas);
    report.kappa = kappa;
    report.ritz_min = lo;
    report.ritz_max = hi;
    Ok((x, report))
}

/// The symmetric tridiagonal Lanczos matrix implied by CG coefficients.
pub fn lanczos_tridiagonal(alphas: &[f64], betas: &[f64]) -> DenseMatrix {
    let k = alphas.len();
    let mut t = DenseMatrix::zeros(k, k);
    for j in 0..k {
        let mut d = 1.0 / alphas[j];
        if j > 0 {
            d += betas[j - 1] / alphas[j - 1];
        }
        t.set(j, j, d);
        if j + 1 < k {
            let e = betas[j].sqrt() / alphas[j];
            t.set(j, j + 1, e);
            t.set(j + 1, j, e);
        }
    }
    t
}

/// `(κ, λ_min, λ_max)` of the Lanczos tridiagonal. Fewer than two
/// iterations leave `κ = 1`.
pub fn lanczos_condition_estimate(alphas: &[f64], betas: &[f64]) -> (f64, f64, f64) {
    if alphas.is_empty() {
        return (1.0, 1.0, 1.0);
    }
    let t = lanczos_tridiagonal(alphas, &betas[..betas.len().min(alphas.len() - 1)]);
    let (ev, _) = symmetric_eigen(&t);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if alphas.len() < 2 {
        return (1.0, lo, hi);
    }
    (hi / lo, lo, hi)
}

/// PCG on a Dirichlet-constrained system: zero initial correction on top
/// of the boundary lift.
pub fn solve_system(
    system: &GlobalSystem,
    m: &dyn Preconditioner,
    opts: &PcgOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let lift = system.lift();
    let al = system.a.spmv(&lift)?;
    let rhs: Vec<f64> = system.f.iter().zip(&al).map(|(f, a)| f - a).collect();
    let (mut x, report) = pcg(&system.a, m, &rhs, None, opts)?;
    for (xi, li) in x.iter_mut().zip(lift) {
        *xi += li;
    }
    Ok((x, report))
}
