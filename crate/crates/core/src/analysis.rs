//! Numerical checks of the condition-number theory.
//!
//! Everything here evaluates both sides of an inequality on concrete data:
//! local projections against the eigenvalue of the first discarded mode,
//! the stable splitting of a global function, and the final bound
//! `κ ≤ (1 + k₀) C₀²`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coarse::{local_coarse_function, CoarseMode, CoarseSpace, LocalSpectral};
use crate::decomp::SubdomainLayout;
use crate::error::{check_len, Error, Result};
use crate::fem::{element_stiffness, GlobalSystem};
use crate::krylov::SolveReport;
use crate::la::{EigenPairs, SparseSymMatrix};
use crate::precond::Preconditioner;

/// `Σ_{τ ∈ elements} v_τ^T K_τ v_τ` for a global vector `v`.
pub fn element_energy(system: &GlobalSystem, elements: &[usize], v: &[f64]) -> Result<f64> {
    check_len(system.n(), v.len())?;
    let mesh = &system.mesh;
    let mut total = 0.0;
    for &e in elements {
        let k = element_stiffness(system.coefficient.values[e], mesh.hx, mesh.hy)?;
        let ve = mesh.element_dofs(e).map(|d| v[d]);
        for a in 0..4 {
            for b in 0..4 {
                total += ve[a] * k[a][b] * ve[b];
            }
        }
    }
    Ok(total)
}

/// The mode-dependent factor `max_j (2 + 3/λ)` or `max_j (1 + 1/λ)`; this is
/// the constant `C₁` implied by the eigenvalue estimate.
pub fn c1(mode: CoarseMode, lambda_next: &[f64]) -> Result<f64> {
    if lambda_next.is_empty() {
        return Err(Error::InvalidInput(
            "no eigenvalue data for the bound".into(),
        ));
    }
    let term = |l: f64| match mode {
        CoarseMode::RGeneo => 2.0 + 3.0 / l,
        CoarseMode::Geneo => 1.0 + 1.0 / l,
    };
    Ok(lambda_next
        .iter()
        .map(|&l| term(l))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `C₀² = 2 + k₀(2k₀+1) C₁`.
pub fn c0_squared(mode: CoarseMode, k0: usize, lambda_next: &[f64]) -> Result<f64> {
    let k = k0 as f64;
    Ok(2.0 + k * (2.0 * k + 1.0) * c1(mode, lambda_next)?)
}

/// `(1 + k₀) C₀²`.
pub fn kappa_bound(mode: CoarseMode, k0: usize, lambda_next: &[f64]) -> Result<f64> {
    Ok((1.0 + k0 as f64) * c0_squared(mode, k0, lambda_next)?)
}

/// Measured quantities of one local projection `Π v = Σ_{k ≤ m} b(v, t_k) t_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub projected: Vec<f64>,
    /// `|Π v|²_a / |v|²_a`, at most one.
    pub energy_ratio: f64,
    /// `|v - Π v|²_a / |v|²_a`, at most one.
    pub complement_ratio: f64,
    /// `|a(Π v, v - Π v)| / |v|²_a`, zero in exact arithmetic.
    pub orthogonality_defect: f64,
    /// `λ_{m+1} b(w, w) / a(w, w)` for `w = v - Π v`, at most one.
    pub stability_ratio: f64,
}

/// Projection of a local vector (aligned with the pencil dofs) onto the
/// first `m` eigenvectors, with the `a`-form being the left matrix and the
/// `b`-form the right one.
pub fn local_projection(
    left: &SparseSymMatrix,
    right: &SparseSymMatrix,
    pairs: &EigenPairs,
    m: usize,
    v: &[f64],
) -> Result<Projection> {
    check_len(left.n(), v.len())?;
    if m > pairs.finite_count() {
        return Err(Error::InvalidInput(format!(
            "{m} modes requested, {} finite pairs available",
            pairs.finite_count()
        )));
    }
    let lambda = pairs.eigenvalues.get(m).copied().unwrap_or(f64::INFINITY);
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(
            "first discarded eigenvalue is zero".into(),
        ));
    }
    let bv = right.spmv(v)?;
    let mut pv = vec![0.0; v.len()];
    for k in 0..m {
        let t = pairs.vector(k);
        let c: f64 = t.iter().zip(&bv).map(|(a, b)| a * b).sum();
        for (p, ti) in pv.iter_mut().zip(t) {
            *p += c * ti;
        }
    }
    let w: Vec<f64> = v.iter().zip(&pv).map(|(a, b)| a - b).collect();
    let av = left.quad_form(v);
    let aw = left.quad_form(&w);
    let bw = right.quad_form(&w);
    let stability_ratio = if lambda.is_finite() {
        if aw > 0.0 {
            lambda * bw / aw
        } else {
            0.0
        }
    } else if bw <= 1e-14 * right.norm_inf() * w.iter().map(|x| x * x).sum::<f64>() {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(Projection {
        energy_ratio: left.quad_form(&pv) / av,
        complement_ratio: aw / av,
        orthogonality_defect: left.bilinear(&pv, &w).abs() / av,
        stability_ratio,
        projected: pv,
    })
}

/// Worst-case projection measurements of one subdomain over a sample.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ProjectionSummary {
    pub subdomain: usize,
    pub m: usize,
    pub lambda_next: f64,
    pub max_energy_ratio: f64,
    pub max_complement_ratio: f64,
    pub max_orthogonality_defect: f64,
    pub max_stability_ratio: f64,
}

/// Applies [`local_projection`] to `samples` seeded random vectors.
pub fn check_local_projections(
    local: &LocalSpectral,
    samples: usize,
    seed: u64,
) -> Result<ProjectionSummary> {
    let p = &local.problem;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (p.subdomain as u64) << 20);
    let mut s = ProjectionSummary {
        subdomain: p.subdomain,
        m: local.m,
        lambda_next: local.lambda_next(),
        ..ProjectionSummary::default()
    };
    for _ in 0..samples {
        let v: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = local_projection(&p.left, &p.right, &local.pairs, local.m, &v)?;
        s.max_energy_ratio = s.max_energy_ratio.max(r.energy_ratio);
        s.max_complement_ratio = s.max_complement_ratio.max(r.complement_ratio);
        s.max_orthogonality_defect = s.max_orthogonality_defect.max(r.orthogonality_defect);
        s.max_stability_ratio = s.max_stability_ratio.max(r.stability_ratio);
    }
    Ok(s)
}

/// `u = z₀ + Σ_j z_j` with `z₀` in the coarse space and `z_j` supported in
/// the interior of `Ω_j`.
#[derive(Clone, Debug)]
pub struct StableDecomposition {
    pub z0: Vec<f64>,
    /// `(subdomain dofs, values)` of each `z_j`.
    pub local: Vec<(Vec<usize>, Vec<f64>)>,
    /// `‖z₀‖²_a + Σ_j ‖z_j‖²_a`.
    pub energy: f64,
    pub energy_u: f64,
    /// `max |u - Σ z| / max |u|`.
    pub reconstruction_error: f64,
    pub c0_squared: f64,
    /// `energy / (C₀² energy_u)`, at most one by the theory.
    pub ratio: f64,
}

/// Splits `u` (zero on Dirichlet dofs) using the local projections of the
/// coarse space: `z₀ = Σ_j ξ_j Π_j u`, `z_j = ξ_j (u - Π_j u)`, where `Π_j`
/// maps onto the local coarse functions.
pub fn stable_decomposition(
    system: &GlobalSystem,
    layout: &SubdomainLayout,
    coarse: &CoarseSpace,
    u: &[f64],
) -> Result<StableDecomposition> {
    let n = system.n();
    check_len(n, u.len())?;
    if system.dirichlet.iter().any(|&d| u[d] != 0.0) {
        return Err(Error::InvalidInput(
            "decomposed function must vanish on the Dirichlet boundary".into(),
        ));
    }
    if coarse.locals.len() != layout.len() {
        return Err(Error::InvalidInput(
            "coarse space carries no spectral data for this layout".into(),
        ));
    }
    let mut z0 = vec![0.0; n];
    let mut local = Vec::with_capacity(layout.len());
    let mut energy = 0.0;
    for (s, l) in layout.subdomains.iter().zip(&coarse.locals) {
        let p = &l.problem;
        let v: Vec<f64> = p.dofs.iter().map(|&d| u[d]).collect();
        let bv = p.right.spmv(&v)?;
        let mut pi = vec![0.0; s.dofs.len()];
        for k in 0..l.m {
            let t = l.pairs.vector(k);
            let c: f64 = t.iter().zip(&bv).map(|(a, b)| a * b).sum();
            let y = local_coarse_function(p, layout, l.extension.as_ref(), t)?;
            for (q, yi) in pi.iter_mut().zip(y) {
                *q += c * yi;
            }
        }
        let mut zj = vec![0.0; s.dofs.len()];
        let mut zg = vec![0.0; n];
        for (k, &d) in s.dofs.iter().enumerate() {
            z0[d] += s.xi[k] * pi[k];
            zj[k] = s.xi[k] * (u[d] - pi[k]);
            zg[d] = zj[k];
        }
        energy += system.energy(&zg);
        local.push((s.dofs.clone(), zj));
    }
    energy += system.energy(&z0);

    let mut sum = z0.clone();
    for (dofs, vals) in &local {
        for (&d, &v) in dofs.iter().zip(vals) {
            sum[d] += v;
        }
    }
    let umax = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let err = u
        .iter()
        .zip(&sum)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let reconstruction_error = if umax > 0.0 { err / umax } else { err };
    let c0 = c0_squared(coarse.mode, layout.k0, &coarse.lambda_next())?;
    let energy_u = system.energy(u);
    let ratio = if energy_u > 0.0 {
        energy / (c0 * energy_u)
    } else if energy == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(StableDecomposition {
        z0,
        local,
        energy,
        energy_u,
        reconstruction_error,
        c0_squared: c0,
        ratio,
    })
}

/// Seeded random global vector in `[-1, 1]`, zero on Dirichlet dofs.
pub fn random_free_vector(system: &GlobalSystem, rng: &mut impl Rng) -> Vec<f64> {
    (0..system.n())
        .map(|d| {
            if system.is_dirichlet[d] {
                0.0
            } else {
                rng.random_range(-1.0..1.0)
            }
        })
        .collect()
}

/// One application of `M⁻¹ A` to damp the rough part of `v`.
pub fn filtered(system: &GlobalSystem, m: &dyn Preconditioner, v: &[f64]) -> Result<Vec<f64>> {
    let av = system.a.spmv(v)?;
    m.apply(&av)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoryReport {
    pub mode: CoarseMode,
    pub k0: usize,
    pub m: Vec<usize>,
    /// Subdomains whose `m_j` was raised past zero eigenvalues.
    pub shifted: Vec<usize>,
    pub lambda_next: Vec<f64>,
    pub c1: f64,
    pub c0_squared: f64,
    pub bound: f64,
    pub kappa: f64,
    pub bound_ok: bool,
    pub projections: Vec<ProjectionSummary>,
    /// Largest stable-decomposition energy ratio over the sampled functions.
    pub decomposition_ratio: Option<f64>,
}

/// Compares the measured condition estimate with `(1 + k₀) C₀²`.
pub fn condition_bounds(
    layout: &SubdomainLayout,
    coarse: &CoarseSpace,
    report: &SolveReport,
) -> Result<TheoryReport> {
    let lambda_next = coarse.lambda_next();
    if lambda_next.len() != layout.len() {
        return Err(Error::InvalidInput(
            "eigenvalue data missing for some subdomains".into(),
        ));
    }
    let c1 = c1(coarse.mode, &lambda_next)?;
    let c0 = c0_squared(coarse.mode, layout.k0, &lambda_next)?;
    let bound = (1.0 + layout.k0 as f64) * c0;
    Ok(TheoryReport {
        mode: coarse.mode,
        k0: layout.k0,
        m: coarse.m(),
        shifted: coarse
            .locals
            .iter()
            .filter(|l| l.shifted)
            .map(|l| l.subdomain())
            .collect(),
        lambda_next,
        c1,
        c0_squared: c0,
        bound,
        kappa: report.kappa,
        bound_ok: report.kappa <= bound,
        projections: Vec::new(),
        decomposition_ratio: None,
    })
}

impl TheoryReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "### {} (k0 = {})\n", self.mode, self.k0);
        let _ = writeln!(s, "| quantity | value |\n|---|---|");
        let _ = writeln!(s, "| C1 | {:.4} |", self.c1);
        let _ = writeln!(s, "| C0^2 | {:.4} |", self.c0_squared);
        let _ = writeln!(s, "| bound (1+k0) C0^2 | {:.4} |", self.bound);
        let _ = writeln!(s, "| measured kappa | {:.4} |", self.kappa);
        let _ = writeln!(s, "| bound holds | {} |", self.bound_ok);
        if let Some(r) = self.decomposition_ratio {
            let _ = writeln!(s, "| decomposition energy / (C0^2 energy) | {r:.4} |");
        }
        if !self.shifted.is_empty() {
            let _ = writeln!(s, "| m_j raised past zero modes | {:?} |", self.shifted);
        }
        let _ = writeln!(
            s,
            "\n| j | m_j | lambda_(m_j+1) | orth. defect | stability ratio |\n|---|---|---|---|---|"
        );
        for (j, (&m, &l)) in self.m.iter().zip(&self.lambda_next).enumerate() {
            let p = self.projections.iter().find(|p| p.subdomain == j);
            let (o, st) = p.map_or(("-".into(), "-".into()), |p| {
                (
                    format!("{:.2e}", p.max_orthogonality_defect),
                    format!("{:.6}", p.max_stability_ratio),
                )
            });
            let _ = writeln!(s, "| {j} | {m} | {l:.4e} | {o} | {st} |");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_eigenvalues_k0_4() {
        let b = kappa_bound(CoarseMode::RGeneo, 4, &[f64::INFINITY; 16]).unwrap();
        assert_eq!(b, 370.0);
    }

    #[test]
    fn single_subdomain_formula() {
        let b = kappa_bound(CoarseMode::RGeneo, 1, &[3.0]).unwrap();
        assert_eq!(b, 2.0 * (2.0 + 3.0 * 3.0));
        let g = kappa_bound(CoarseMode::Geneo, 1, &[1.0]).unwrap();
        assert_eq!(g, 2.0 * (2.0 + 3.0 * 2.0));
    }

    #[test]
    fn missing_data_errors() {
        assert!(kappa_bound(CoarseMode::Geneo, 2, &[]).is_err());
    }

    #[test]
    fn worst_subdomain_drives_bound() {
        let a = c1(CoarseMode::RGeneo, &[1.0, 0.5, 10.0]).unwrap();
        assert_eq!(a, 8.0);
    }
}
