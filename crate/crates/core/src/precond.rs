//! Additive Schwarz preconditioners.
//!
//! `M⁻¹ = R_H^T A_H⁻¹ R_H + Σ_j R_j^T A_j⁻¹ R_j`, where `R_j` restricts to
//! the interior dofs of `Ω_j` (Dirichlet dofs excluded) and `A_j` is the
//! matching principal submatrix of the global matrix.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarse::CoarseSpace;
use crate::decomp::SubdomainLayout;
use crate::error::{check_len, Error, Result};
use crate::fem::GlobalSystem;
use crate::la::{Factorization, SparseSymMatrix};

/// Symmetric linear operator on global vectors.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()>;
}

impl LinearOperator for SparseSymMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len(self.n(), x.len())?;
        check_len(self.n(), y.len())?;
        self.spmv_into(x, y);
        Ok(())
    }
}

pub trait Preconditioner: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>>;
}

#[derive(Clone, Copy, Debug)]
pub struct IdentityPreconditioner {
    pub n: usize,
}

impl Preconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, r.len())?;
        Ok(r.to_vec())
    }
}

#[derive(Clone, Debug)]
pub struct LocalSolver {
    pub subdomain: usize,
    /// Sorted global dofs of `V_{h,0}(Ω_j)`.
    pub dofs: Vec<usize>,
    factor: Factorization,
}

impl LocalSolver {
    /// `A_j⁻¹ R_j r` in local numbering.
    pub fn solve_restricted(&self, r: &[f64]) -> Vec<f64> {
        let rj: Vec<f64> = self.dofs.iter().map(|&d| r[d]).collect();
        let mut x = vec![0.0; rj.len()];
        self.factor.solve_into(&rj, &mut x);
        x
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factor
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct SetupTimings {
    pub local_factorizations: f64,
    pub eigenproblems: f64,
    pub coarse_assembly: f64,
}

impl SetupTimings {
    pub fn total(&self) -> f64 {
        self.local_factorizations + self.eigenproblems + self.coarse_assembly
    }
}

#[derive(Clone, Debug)]
pub struct SchwarzPreconditioner {
    n: usize,
    pub locals: Vec<LocalSolver>,
    pub coarse: Option<CoarseSpace>,
    pub timings: SetupTimings,
}

impl SchwarzPreconditioner {
    pub fn setup(
        system: &GlobalSystem,
        layout: &SubdomainLayout,
        coarse: Option<CoarseSpace>,
    ) -> Result<Self> {
        let n = system.n();
        check_len(layout.mesh.n_dofs(), n)?;
        let t0 = Instant::now();
        let locals = layout
            .subdomains
            .par_iter()
            .map(|s| {
                let dofs: Vec<usize> = s
                    .interior_dofs
                    .iter()
                    .copied()
                    .filter(|&d| !system.is_dirichlet[d])
                    .collect();
                let a_j = system.a.principal_submatrix(&dofs);
                let factor = Factorization::factorize(&a_j).map_err(|e| e.in_subdomain(s.index))?;
                Ok(LocalSolver {
                    subdomain: s.index,
                    dofs,
                    factor,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut timings = SetupTimings {
            local_factorizations: t0.elapsed().as_secs_f64(),
            ..SetupTimings::default()
        };
        let coarse = coarse.filter(|c| c.dim() > 0);
        if let Some(c) = &coarse {
            if c.basis.iter().any(|b| b.dofs.iter().any(|&d| d >= n)) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.basis.iter().flat_map(|b| &b.dofs).max().unwrap() + 1,
                });
            }
            timings.eigenproblems = c.timings.eigenproblems;
            timings.coarse_assembly = c.timings.assembly;
        }
        Ok(SchwarzPreconditioner {
            n,
            locals,
            coarse,
            timings,
        })
    }

    pub fn coarse_dim(&self) -> usize {
        self.coarse.as_ref().map_or(0, CoarseSpace::dim)
    }

    /// `Σ_j R_j^T A_j⁻¹ R_j r`.
    pub fn apply_one_level(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, r.len())?;
        let parts: Vec<Vec<f64>> = self
            .locals
            .par_iter()
            .map(|l| l.solve_restricted(r))
            .collect();
        let mut z = vec![0.0; self.n];
        for (l, x) in self.locals.iter().zip(parts) {
            for (&d, v) in l.dofs.iter().zip(x) {
                z[d] += v;
            }
        }
        Ok(z)
    }

    /// `R_H^T A_H⁻¹ R_H r` (zero without a coarse space).
    pub fn apply_coarse(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, r.len())?;
        match &self.coarse {
            Some(c) => c.apply(r),
            None => Ok(vec![0.0; self.n]),
        }
    }
}

impl Preconditioner for SchwarzPreconditioner {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        let (local, coarse) = rayon::join(|| self.apply_one_level(r), || self.apply_coarse(r));
        let mut z = coarse?;
        for (zi, li) in z.iter_mut().zip(local?) {
            *zi += li;
        }
        Ok(z)
    }
}
