//! Generalized symmetric eigenproblems `A t = λ B t` with `A`, `B` positive
//! semidefinite and `A + B` positive definite.
//!
//! Both matrices may be singular. The pencil is mapped to the definite
//! problem `A t = θ (A + B) t`, `θ ∈ [0, 1]`, and back via `λ = θ / (1 - θ)`.
//! Vectors in `ker B` have `θ = 1`, i.e. `λ = ∞`; they sort last and never
//! carry an eigenvector column.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::la::{DenseCholesky, DenseMatrix, Factorization, SparseSymMatrix};

/// `θ` at or above `1 - INFINITE_THETA_GAP` is classified as `λ = ∞`.
pub const INFINITE_THETA_GAP: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Pencils up to this dimension are solved densely.
    pub dense_cap: usize,
    /// Block width of the Krylov expansion in the sparse path.
    pub block_size: usize,
    /// Relative residual tolerance of the sparse path.
    pub tol: f64,
    pub max_block_steps: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            dense_cap: 200,
            block_size: 4,
            tol: 1e-11,
            max_block_steps: 3000,
            seed: 0x5eed,
        }
    }
}

/// Smallest eigenpairs of a semidefinite pencil.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    /// Ascending; `f64::INFINITY` marks `θ = 1` pairs, which come last.
    pub eigenvalues: Vec<f64>,
    /// One column per finite eigenvalue, in the same order.
    pub eigenvectors: DenseMatrix,
    /// Finite-pair eigenvectors satisfy `t_k^T B t_l = δ_kl`.
    pub b_normalized: bool,
}

impl EigenPairs {
    pub fn finite_count(&self) -> usize {
        self.eigenvalues
            .iter()
            .take_while(|l| l.is_finite())
            .count()
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        self.eigenvectors.column(k)
    }

    /// `θ = λ / (1 + λ)` of pair `k`.
    pub fn theta(&self, k: usize) -> f64 {
        let l = self.eigenvalues[k];
        if l.is_infinite() {
            1.0
        } else {
            l / (1.0 + l)
        }
    }
}

fn lambda_from_theta(theta: f64) -> f64 {
    if theta >= 1.0 - INFINITE_THETA_GAP {
        f64::INFINITY
    } else {
        theta.max(0.0) / (1.0 - theta)
    }
}

/// The `m_request` smallest eigenpairs of `A t = λ B t`.
pub fn gen_sym_eig(
    a: &SparseSymMatrix,
    b: &SparseSymMatrix,
    m_request: usize,
    opts: &EigenOptions,
) -> Result<EigenPairs> {
    check_len(a.n(), b.n())?;
    let n = a.n();
    let m = m_request.min(n);
    let sum = a.add(b)?;
    if n <= opts.dense_cap {
        dense_pencil(a, &sum, m)
    } else {
        krylov_pencil(a, b, &sum, m, opts)
    }
}

fn kernel_error(e: Error) -> Error {
    match e {
        Error::NotPositiveDefinite { pivot, value } => Error::KernelIntersection { pivot, value },
        other => other,
    }
}

fn dense_pencil(a: &SparseSymMatrix, sum: &SparseSymMatrix, m: usize) -> Result<EigenPairs> {
    let n = a.n();
    let chol = DenseCholesky::factorize(&sum.to_dense()).map_err(kernel_error)?;
    let l = chol.factor();
    let ad = a.to_dense().to_nalgebra();
    let x = l
        .solve_lower_triangular(&ad)
        .ok_or_else(|| Error::InvalidInput("singular triangular factor".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::InvalidInput("singular triangular factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let (thetas, s) = crate::la::dense::symmetric_eigen(&DenseMatrix::from_nalgebra(&c));

    let mut eigenvalues = Vec::with_capacity(m);
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for k in 0..m {
        let lambda = lambda_from_theta(thetas[k]);
        eigenvalues.push(lambda);
        if lambda.is_finite() {
            let sk = DMatrix::from_column_slice(n, 1, s.column(k));
            let t = l
                .tr_solve_lower_triangular(&sk)
                .ok_or_else(|| Error::InvalidInput("singular triangular factor".into()))?;
            // t^T (A+B) t = 1 and t^T B t = 1 - θ
            let scale = 1.0 / (1.0 - thetas[k].clamp(0.0, 1.0)).sqrt();
            columns.push(t.iter().map(|v| v * scale).collect());
        }
    }
    Ok(pack(n, eigenvalues, columns))
}

fn pack(n: usize, eigenvalues: Vec<f64>, columns: Vec<Vec<f64>>) -> EigenPairs {
    let k = columns.len();
    let data: Vec<f64> = columns.into_iter().flatten().collect();
    EigenPairs {
        eigenvalues,
        eigenvectors: DenseMatrix::from_column_major(n, k, data).expect("column sizes"),
        b_normalized: true,
    }
}

/// Basis of the search space, orthonormal in the `(A+B)` inner product, with
/// the products `(A+B) v` and `B v` kept alongside each column.
struct SearchSpace {
    v: Vec<Vec<f64>>,
    mv: Vec<Vec<f64>>,
    bv: Vec<Vec<f64>>,
    /// `V^T B V`
    h: DMatrix<f64>,
}

impl SearchSpace {
    fn dim(&self) -> usize {
        self.v.len()
    }

    /// Two passes of classical Gram-Schmidt in the `M` inner product.
    fn orthogonalize(&self, w: &mut [f64]) {
        for _ in 0..2 {
            for (v, mv) in self.v.iter().zip(&self.mv) {
                let c: f64 = mv.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
    }

    /// Appends `w` (already orthogonalized) if it is not numerically
    /// dependent; `ref_norm` is its `M`-norm before orthogonalization.
    fn push(
        &mut self,
        mut w: Vec<f64>,
        ref_norm: f64,
        m: &SparseSymMatrix,
        b: &SparseSymMatrix,
    ) -> bool {
        let mut mw = vec![0.0; w.len()];
        m.spmv_into(&w, &mut mw);
        let norm2: f64 = w.iter().zip(&mw).map(|(a, b)| a * b).sum();
        if !(norm2 > 0.0) || norm2.sqrt() <= 1e-10 * ref_norm {
            return false;
        }
        let inv = 1.0 / norm2.sqrt();
        w.iter_mut().for_each(|x| *x *= inv);
        mw.iter_mut().for_each(|x| *x *= inv);
        let mut bw = vec![0.0; w.len()];
        b.spmv_into(&w, &mut bw);
        let k = self.dim();
        self.h = self.h.clone().resize(k + 1, k + 1, 0.0);
        for i in 0..k {
            let x: f64 = self.v[i].iter().zip(&bw).map(|(a, b)| a * b).sum();
            self.h[(i, k)] = x;
            self.h[(k, i)] = x;
        }
        self.h[(k, k)] = w.iter().zip(&bw).map(|(a, b)| a * b).sum();
        self.v.push(w);
        self.mv.push(mw);
        self.bv.push(bw);
        true
    }

    fn combine(cols: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; cols[0].len()];
        for (c, &s) in cols.iter().zip(coeffs) {
            if s != 0.0 {
                for (o, x) in out.iter_mut().zip(c) {
                    *o += s * x;
                }
            }
        }
        out
    }
}

fn m_norm(w: &[f64], m: &SparseSymMatrix) -> f64 {
    m.quad_form(w).max(0.0).sqrt()
}

/// Largest `μ` of `B y = μ (A+B) y` by restarted block Rayleigh-Ritz over a
/// Krylov space of `(A+B)^{-1} B`; `μ = 1 - θ`.
fn krylov_pencil(
    a: &SparseSymMatrix,
    b: &SparseSymMatrix,
    m_mat: &SparseSymMatrix,
    nev: usize,
    opts: &EigenOptions,
) -> Result<EigenPairs> {
    let n = a.n();
    if nev == 0 {
        return Ok(pack(n, Vec::new(), Vec::new()));
    }
    let factor = Factorization::factorize(m_mat).map_err(kernel_error)?;
    let block = opts.block_size.max(1);
    let max_dim = (3 * nev + 4 * block).min(n);
    let keep = (nev + block).min(max_dim.saturating_sub(block)).max(nev);
    // backward-error scale of `B y - μ (A+B) y`
    let (b_norm, m_norm_inf) = (b.norm_inf(), m_mat.norm_inf());

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut space = SearchSpace {
        v: Vec::new(),
        mv: Vec::new(),
        bv: Vec::new(),
        h: DMatrix::zeros(0, 0),
    };
    let mut last_block: Vec<usize> = Vec::new();
    let add_random = |space: &mut SearchSpace, rng: &mut ChaCha8Rng| -> Vec<usize> {
        let mut added = Vec::new();
        for _ in 0..block {
            if space.dim() >= n {
                break;
            }
            let mut w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = m_norm(&w, m_mat);
            space.orthogonalize(&mut w);
            if space.push(w, r, m_mat, b) {
                added.push(space.dim() - 1);
            }
        }
        added
    };
    last_block.extend(add_random(&mut space, &mut rng));

    let mut steps = 0;
    let mut converged_count = 0;
    loop {
        let h = space.h.clone();
        let eig = nalgebra::SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..space.dim()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

        let exhausted = space.dim() >= n;
        if space.dim() >= nev {
            let mut all = true;
            converged_count = 0;
            for &k in order.iter().take(nev) {
                let mu = eig.eigenvalues[k];
                let s = eig.eigenvectors.column(k);
                let s = s.as_slice();
                let y = SearchSpace::combine(&space.v, s);
                let by = SearchSpace::combine(&space.bv, s);
                let my = SearchSpace::combine(&space.mv, s);
                let r: f64 = by
                    .iter()
                    .zip(&my)
                    .map(|(p, q)| (p - mu * q).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let y2: f64 = y.iter().map(|x| x * x).sum::<f64>().sqrt();
                if r <= opts.tol * (b_norm + mu.abs() * m_norm_inf) * y2 {
                    converged_count += 1;
                } else {
                    all = false;
                    break;
                }
            }
            if all || exhausted {
                let mut eigenvalues = Vec::with_capacity(nev);
                let mut columns = Vec::new();
                for &k in order.iter().take(nev) {
                    let mu = eig.eigenvalues[k].clamp(0.0, 1.0);
                    let lambda = lambda_from_theta(1.0 - mu);
                    eigenvalues.push(lambda);
                    if lambda.is_finite() {
                        let s = eig.eigenvectors.column(k);
                        let y = SearchSpace::combine(&space.v, s.as_slice());
                        let scale = 1.0 / mu.sqrt();
                        columns.push(y.into_iter().map(|x| x * scale).collect());
                    }
                }
                // θ=1 pairs are not in the Krylov space of (A+B)^{-1}B
                while eigenvalues.len() < nev {
                    eigenvalues.push(f64::INFINITY);
                }
                return Ok(pack(n, eigenvalues, columns));
            }
        }
        if steps >= opts.max_block_steps {
            return Err(Error::EigenNotConverged {
                converged: converged_count,
                requested: nev,
                iterations: steps,
            });
        }
        steps += 1;

        // expand with (A+B)^{-1} B applied to the newest block
        let mut fresh: Vec<(Vec<f64>, f64)> = Vec::with_capacity(last_block.len());
        for &idx in &last_block {
            let mut w = factor.solve(&space.bv[idx])?;
            let r = m_norm(&w, m_mat);
            space.orthogonalize(&mut w);
            fresh.push((w, r));
        }

        if space.dim() + fresh.len() > max_dim {
            let coeffs: Vec<Vec<f64>> = order
                .iter()
                .take(keep)
                .map(|&k| eig.eigenvectors.column(k).as_slice().to_vec())
                .collect();
            let s = DMatrix::from_fn(space.dim(), coeffs.len(), |i, j| coeffs[j][i]);
            let h = s.transpose() * &space.h * &s;
            let restarted = SearchSpace {
                v: coeffs
                    .iter()
                    .map(|s| SearchSpace::combine(&space.v, s))
                    .collect(),
                mv: coeffs
                    .iter()
                    .map(|s| SearchSpace::combine(&space.mv, s))
                    .collect(),
                bv: coeffs
                    .iter()
                    .map(|s| SearchSpace::combine(&space.bv, s))
                    .collect(),
                h: (&h + h.transpose()) * 0.5,
            };
            space = restarted;
        }

        last_block.clear();
        for (mut w, r) in fresh {
            space.orthogonalize(&mut w);
            if space.push(w, r, m_mat, b) {
                last_block.push(space.dim() - 1);
            }
        }
        if last_block.is_empty() && space.dim() < n {
            last_block.extend(add_random(&mut space, &mut rng));
        }
        if last_block.is_empty() && space.dim() < nev {
            return Err(Error::EigenNotConverged {
                converged: 0,
                requested: nev,
                iterations: steps,
            });
        }
    }
}
