//! GenEO and R-GenEO coarse spaces.
//!
//! GenEO solves, on every subdomain, the pencil
//! `a_{Ω_j}(u, t) = λ a_{Ω°_j}(ξ_j u, ξ_j t)` over all dofs of `Ω_j`.
//! R-GenEO solves `a_{Ω*_j}(u, t) = λ a_{Ω*_j}(η_j u, η_j t)` on the strip
//! only, keeps the eigenvector on the closure of the overlap zone and
//! replaces it on the core `ω°_j` by the a-harmonic extension of its values
//! on `Γ°_j`. In both cases the coarse basis vectors are `R_j^T ξ_j y`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomp::{Subdomain, SubdomainLayout};
use crate::error::{Error, Result};
use crate::fem::{assemble_elements, GlobalSystem};
use crate::la::{
    gen_sym_eig, independent_columns, DenseCholesky, DenseMatrix, EigenOptions, EigenPairs,
    Factorization, SparseSymMatrix,
};

/// Eigenvalues at or below this are treated as exact zeros when choosing
/// the number of retained modes.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoarseMode {
    Geneo,
    #[serde(rename = "rgeneo")]
    RGeneo,
}

impl fmt::Display for CoarseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoarseMode::Geneo => "geneo",
            CoarseMode::RGeneo => "rgeneo",
        })
    }
}

impl FromStr for CoarseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "geneo" => Ok(CoarseMode::Geneo),
            "rgeneo" | "r-geneo" => Ok(CoarseMode::RGeneo),
            other => Err(Error::InvalidInput(format!(
                "unknown coarse mode `{other}`"
            ))),
        }
    }
}

/// How many eigenvectors each subdomain contributes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeRule {
    Fixed(usize),
    /// All eigenpairs with `λ < τ`.
    Threshold(f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoarseOptions {
    pub rule: ModeRule,
    pub eigen: EigenOptions,
    /// Relative pivot tolerance for dropping near-dependent coarse columns.
    pub drop_tol: f64,
    /// Upper bound on eigenpairs computed per subdomain.
    pub max_modes: usize,
}

impl Default for CoarseOptions {
    fn default() -> Self {
        CoarseOptions {
            rule: ModeRule::Fixed(12),
            eigen: EigenOptions::default(),
            drop_tol: 1e-10,
            max_modes: 256,
        }
    }
}

/// One subdomain's generalized eigenproblem on its local dofs
/// (global Dirichlet dofs removed).
#[derive(Clone, Debug)]
pub struct LocalEigenProblem {
    pub subdomain: usize,
    pub mode: CoarseMode,
    pub left: SparseSymMatrix,
    pub right: SparseSymMatrix,
    /// Global dof of each local index, sorted.
    pub dofs: Vec<usize>,
    /// `ξ_j` (GenEO) or `η_j` (R-GenEO) on `dofs`.
    pub weights: Vec<f64>,
}

impl LocalEigenProblem {
    pub fn dim(&self) -> usize {
        self.dofs.len()
    }

    pub fn solve(&self, count: usize, opts: &EigenOptions) -> Result<EigenPairs> {
        gen_sym_eig(&self.left, &self.right, count, opts)
    }
}

fn free(dofs: &[usize], is_dirichlet: &[bool]) -> Vec<usize> {
    dofs.iter().copied().filter(|&d| !is_dirichlet[d]).collect()
}

fn weights_on(dofs: &[usize], source_dofs: &[usize], source: &[f64]) -> Vec<f64> {
    dofs.iter()
        .map(|d| {
            source_dofs
                .binary_search(d)
                .map(|k| source[k])
                .unwrap_or(0.0)
        })
        .collect()
}

pub fn build_geneo_pencil(
    system: &GlobalSystem,
    layout: &SubdomainLayout,
    j: usize,
) -> Result<LocalEigenProblem> {
    let s = subdomain(layout, j)?;
    if s.overlap_elements.is_empty() {
        return Err(Error::DegenerateGeometry(format!(
            "subdomain {j}: empty overlap zone"
        )));
    }
    let dofs = free(&s.dofs, &system.is_dirichlet);
    let left = assemble_elements(&system.mesh, &system.coefficient, &s.elements, &dofs)?;
    let overlap = assemble_elements(
        &system.mesh,
        &system.coefficient,
        &s.overlap_elements,
        &dofs,
    )?;
    let weights = weights_on(&dofs, &s.dofs, &s.xi);
    let right = overlap.scale_symmetric(&weights)?;
    Ok(LocalEigenProblem {
        subdomain: j,
        mode: CoarseMode::Geneo,
        left,
        right,
        dofs,
        weights,
    })
}

pub fn build_rgeneo_pencil(
    system: &GlobalSystem,
    layout: &SubdomainLayout,
    j: usize,
) -> Result<LocalEigenProblem> {
    let s = subdomain(layout, j)?;
    if s.star_elements.is_empty() {
        return Err(Error::DegenerateGeometry(format!(
            "subdomain {j}: no strip around the overlap zone"
        )));
    }
    let dofs = free(&s.star_dofs, &system.is_dirichlet);
    let left = assemble_elements(&system.mesh, &system.coefficient, &s.star_elements, &dofs)?;
    let weights = weights_on(&dofs, &s.star_dofs, &s.eta);
    let right = left.scale_symmetric(&weights)?;
    Ok(LocalEigenProblem {
        subdomain: j,
        mode: CoarseMode::RGeneo,
        left,
        right,
        dofs,
        weights,
    })
}

pub fn build_pencil(
    mode: CoarseMode,
    system: &GlobalSystem,
    layout: &SubdomainLayout,
    j: usize,
) -> Result<LocalEigenProblem> {
    match mode {
        CoarseMode::Geneo => build_geneo_pencil(system, layout, j),
        CoarseMode::RGeneo => build_rgeneo_pencil(system, layout, j),
    }
}

fn subdomain(layout: &SubdomainLayout, j: usize) -> Result<&Subdomain> {
    layout.subdomains.get(j).ok_or_else(|| {
        Error::InvalidInput(format!(
            "subdomain {j} out of range ({} subdomains)",
            layout.len()
        ))
    })
}

/// Cached a-harmonic extension from `Γ°_j` into the core `ω°_j`.
///
/// Free unknowns are the core dofs whose neighboring elements all lie in
/// `ω°_j` and that are not on the Dirichlet boundary; every other core dof
/// is prescribed.
#[derive(Clone, Debug)]
pub struct HarmonicExtension {
    /// All dofs of `ω°_j`, sorted.
    pub core_dofs: Vec<usize>,
    free: Vec<usize>,
    fixed: Vec<usize>,
    factor: Option<Factorization>,
    /// `A_{free,fixed}` as (free index, fixed index, value).
    coupling: Vec<(usize, usize, f64)>,
}

impl HarmonicExtension {
    pub fn new(system: &GlobalSystem, layout: &SubdomainLayout, j: usize) -> Result<Self> {
        let s = subdomain(layout, j)?;
        let mesh = &system.mesh;
        let core = &s.core_elements;
        let local = assemble_elements(mesh, &system.coefficient, core, &s.core_dofs)?;
        let (mut free, mut fixed) = (Vec::new(), Vec::new());
        for (k, &d) in s.core_dofs.iter().enumerate() {
            let inside = !system.is_dirichlet[d]
                && mesh.dof_elements(d).all(|e| core.binary_search(&e).is_ok());
            if inside {
                free.push(k);
            } else {
                fixed.push(k);
            }
        }
        let factor = if free.is_empty() {
            None
        } else {
            let a_ii = local.principal_submatrix(&free);
            Some(Factorization::factorize(&a_ii)?)
        };
        let coupling = local.block_triplets(&free, &fixed);
        Ok(HarmonicExtension {
            core_dofs: s.core_dofs.clone(),
            free,
            fixed,
            factor,
            coupling,
        })
    }

    /// Extends the prescribed values of `boundary` (aligned with
    /// `core_dofs`; entries at free dofs are ignored) harmonically.
    pub fn extend(&self, boundary: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_len(self.core_dofs.len(), boundary.len())?;
        let mut out = boundary.to_vec();
        let Some(factor) = &self.factor else {
            return Ok(out);
        };
        let mut rhs = vec![0.0; self.free.len()];
        for &(i, k, v) in &self.coupling {
            rhs[i] -= v * boundary[self.fixed[k]];
        }
        let w = factor.solve(&rhs)?;
        for (&k, wk) in self.free.iter().zip(w) {
            out[k] = wk;
        }
        Ok(out)
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }
}

/// a-harmonic extension of `trace` (values on `Γ°_j`, aligned with
/// `gamma_circ`) to all dofs of `ω°_j`, with zero data on any other
/// prescribed dof.
pub fn harmonic_extension(
    system: &GlobalSystem,
    layout: &SubdomainLayout,
    j: usize,
    trace: &[f64],
) -> Result<Vec<f64>> {
    let s = subdomain(layout, j)?;
    crate::error::check_len(s.gamma_circ.len(), trace.len())?;
    let ext = HarmonicExtension::new(system, layout, j)?;
    let mut boundary = vec![0.0; s.core_dofs.len()];
    for (&d, &v) in s.gamma_circ.iter().zip(trace) {
        let k = s.core_dofs.binary_search(&d).expect("Γ° lies in the core");
        boundary[k] = v;
    }
    ext.extend(&boundary)
}

/// A coarse basis vector, stored by its support.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseVector {
    pub subdomain: usize,
    pub dofs: Vec<usize>,
    pub values: Vec<f64>,
}

impl CoarseVector {
    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for (&d, &x) in self.dofs.iter().zip(&self.values) {
            v[d] = x;
        }
        v
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.dofs
            .iter()
            .zip(&self.values)
            .map(|(&d, &v)| v * x[d])
            .sum()
    }
}

/// Local coarse function `y` on the dofs of `Ω_j` (aligned with
/// `layout.subdomains[j].dofs`), before the partition of unity is applied.
pub fn local_coarse_function(
    problem: &LocalEigenProblem,
    layout: &SubdomainLayout,
    extension: Option<&HarmonicExtension>,
    t: &[f64],
) -> Result<Vec<f64>> {
    crate::error::check_len(problem.dim(), t.len())?;
    let s = subdomain(layout, problem.subdomain)?;
    let mut y = vec![0.0; s.dofs.len()];
    match problem.mode {
        CoarseMode::Geneo => {
            for (&d, &v) in problem.dofs.iter().zip(t) {
                let k = s.dofs.binary_search(&d).map_err(|_| mismatch(problem))?;
                y[k] = v;
            }
        }
        CoarseMode::RGeneo => {
            let ext = extension.ok_or_else(|| {
                Error::InvalidInput("R-GenEO coarse vectors need a harmonic extension".into())
            })?;
            if ext.core_dofs != s.core_dofs {
                return Err(mismatch(problem));
            }
            let value_at = |d: usize| problem.dofs.binary_search(&d).map(|k| t[k]).unwrap_or(0.0);
            for &d in &s.overlap_dofs {
                let k = s.dofs.binary_search(&d).map_err(|_| mismatch(problem))?;
                y[k] = value_at(d);
            }
            let mut boundary = vec![0.0; s.core_dofs.len()];
            for &d in &s.gamma_circ {
                let k = s
                    .core_dofs
                    .binary_search(&d)
                    .map_err(|_| mismatch(problem))?;
                boundary[k] = value_at(d);
            }
            let w = ext.extend(&boundary)?;
            for (&d, &v) in s.core_dofs.iter().zip(&w) {
                let k = s.dofs.binary_search(&d).map_err(|_| mismatch(problem))?;
                y[k] = v;
            }
        }
    }
    Ok(y)
}

fn mismatch(problem: &LocalEigenProblem) -> Error {
    Error::InvalidInput(format!(
        "local space of subdomain {} does not match the layout",
        problem.subdomain
    ))
}

/// `R_j^T ξ_j y` for the local eigenvector `t`.
pub fn build_coarse_vector(
    problem: &LocalEigenProblem,
    layout: &SubdomainLayout,
    extension: Option<&HarmonicExtension>,
    t: &[f64],
) -> Result<CoarseVector> {
    let y = local_coarse_function(problem, layout, extension, t)?;
    let s = subdomain(layout, problem.subdomain)?;
    let mut dofs = Vec::new();
    let mut values = Vec::new();
    for ((&d, &xi), &v) in s.dofs.iter().zip(&s.xi).zip(&y) {
        let w = xi * v;
        if w != 0.0 {
            dofs.push(d);
            values.push(w);
        }
    }
    Ok(CoarseVector {
        subdomain: problem.subdomain,
        dofs,
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeSelection {
    pub m: usize,
    /// `m` was raised to step past (numerically) zero eigenvalues.
    pub shifted: bool,
}

/// Number of retained modes for ascending `eigenvalues`.
///
/// When `λ_{m+1}` is zero the count is raised until it is not (or the list
/// is exhausted) so that `λ_{m+1} > 0`.
pub fn select_modes(eigenvalues: &[f64], rule: ModeRule) -> Result<ModeSelection> {
    let finite = eigenvalues.iter().take_while(|l| l.is_finite()).count();
    if finite == 0 {
        return Err(Error::InvalidInput(
            "no finite eigenvalues to select from".into(),
        ));
    }
    let mut m = match rule {
        ModeRule::Fixed(m) => m.min(finite),
        ModeRule::Threshold(tau) => eigenvalues.iter().take_while(|&&l| l < tau).count(),
    };
    let mut shifted = false;
    while m < finite && eigenvalues[m] <= ZERO_EIGENVALUE_TOL {
        m += 1;
        shifted = true;
    }
    Ok(ModeSelection { m, shifted })
}

/// Spectral data of one subdomain.
#[derive(Clone, Debug)]
pub struct LocalSpectral {
    pub problem: LocalEigenProblem,
    pub pairs: EigenPairs,
    pub m: usize,
    pub shifted: bool,
    pub extension: Option<HarmonicExtension>,
}

impl LocalSpectral {
    /// `λ_{m_j+1}`; infinite when every computed pair is retained.
    pub fn lambda_next(&self) -> f64 {
        self.pairs
            .eigenvalues
            .get(self.m)
            .copied()
            .unwrap_or(f64::INFINITY)
    }

    pub fn subdomain(&self) -> usize {
        self.problem.subdomain
    }
}

/// Eigenpairs with enough entries to apply `rule` and read `λ_{m+1}`.
pub fn solve_local(
    problem: &LocalEigenProblem,
    rule: ModeRule,
    opts: &CoarseOptions,
) -> Result<(EigenPairs, ModeSelection)> {
    let dim = problem.dim();
    let cap = opts.max_modes.min(dim);
    let mut count = match rule {
        ModeRule::Fixed(m) => m + 1,
        ModeRule::Threshold(_) => 16,
    }
    .min(cap)
    .max(1);
    let mut eigen = opts.eigen.clone();
    eigen.seed = eigen
        .seed
        .wrapping_add(0x9e37_79b9 * problem.subdomain as u64);
    loop {
        let pairs = problem.solve(count, &eigen)?;
        let mut sel = select_modes(&pairs.eigenvalues, rule)?;
        let computed = pairs.eigenvalues.len();
        let need_more = sel.m >= computed && pairs.finite_count() == computed && computed < dim;
        if !need_more {
            return Ok((pairs, sel));
        }
        if count >= cap {
            // keep the last computed pair as λ_{m+1}
            sel.m = computed - 1;
            return Ok((pairs, sel));
        }
        count = (2 * count).min(cap);
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct CoarseTimings {
    /// Pencil assembly, eigensolves and harmonic extensions (seconds).
    pub eigenproblems: f64,
    /// Galerkin coarse matrix, filtering and its factorization (seconds).
    pub assembly: f64,
}

#[derive(Clone, Debug)]
pub struct CoarseSpace {
    pub mode: CoarseMode,
    /// Retained basis vectors (columns of `R_H^T`).
    pub basis: Vec<CoarseVector>,
    /// Number of vectors before filtering, `Σ_j m_j`.
    pub raw_dim: usize,
    /// Indices (in the unfiltered list) of dropped near-dependent vectors.
    pub dropped: Vec<usize>,
    /// `A_H = R_H A R_H^T` on the retained vectors.
    pub a_h: DenseMatrix,
    factor: Option<DenseCholesky>,
    pub locals: Vec<LocalSpectral>,
    pub timings: CoarseTimings,
}

impl CoarseSpace {
    pub fn empty(mode: CoarseMode) -> Self {
        CoarseSpace {
            mode,
            basis: Vec::new(),
            raw_dim: 0,
            dropped: Vec::new(),
            a_h: DenseMatrix::zeros(0, 0),
            factor: None,
            locals: Vec::new(),
            timings: CoarseTimings::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn m(&self) -> Vec<usize> {
        self.locals.iter().map(|l| l.m).collect()
    }

    pub fn lambda_next(&self) -> Vec<f64> {
        self.locals.iter().map(LocalSpectral::lambda_next).collect()
    }

    /// `R_H r`.
    pub fn restrict(&self, r: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|b| b.dot(r)).collect()
    }

    /// `R_H^T c`, accumulated into `out`.
    pub fn prolong_add(&self, c: &[f64], out: &mut [f64]) {
        for (b, &ci) in self.basis.iter().zip(c) {
            for (&d, &v) in b.dofs.iter().zip(&b.values) {
                out[d] += ci * v;
            }
        }
    }

    /// `R_H^T A_H^{-1} R_H r`.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; r.len()];
        if let Some(f) = &self.factor {
            let c = f.solve(&self.restrict(r))?;
            self.prolong_add(&c, &mut out);
        }
        Ok(out)
    }

    pub fn solve_coarse(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match &self.factor {
            Some(f) => f.solve(rhs),
            None => Ok(Vec::new()),
        }
    }
}

fn boxes_touch(a: &Subdomain, b: &Subdomain) -> bool {
    let [ax0, ax1, ay0, ay1] = a.element_box;
    let [bx0, bx1, by0, by1] = b.element_box;
    // node ranges [x0, x1] overlap
    ax0 <= bx1 && bx0 <= ax1 && ay0 <= by1 && by0 <= ay1
}

/// Galerkin matrix `B^T A B` of a list of sparse basis vectors.
pub fn galerkin_matrix(
    a: &SparseSymMatrix,
    layout: &SubdomainLayout,
    basis: &[CoarseVector],
) -> DenseMatrix {
    let n = a.n();
    let rows: Vec<Vec<(usize, f64)>> = basis
        .par_iter()
        .enumerate()
        .map(|(i, bi)| {
            let si = &layout.subdomains[bi.subdomain];
            let mut x = vec![0.0; n];
            for (&d, &v) in bi.dofs.iter().zip(&bi.values) {
                x[d] = v;
            }
            let mut y = vec![0.0; n];
            for &k in &si.dofs {
                let (cols, vals) = a.row(k);
                y[k] = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
            }
            basis
                .iter()
                .enumerate()
                .skip(i)
                .filter(|(_, bj)| boxes_touch(si, &layout.subdomains[bj.subdomain]))
                .map(|(j, bj)| (j, bj.dot(&y)))
                .collect()
        })
        .collect();
    let k = basis.len();
    let mut h = DenseMatrix::zeros(k, k);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row {
            h.set(i, j, v);
            h.set(j, i, v);
        }
    }
    h
}

/// Builds every local eigenproblem, the coarse basis and the factored
/// coarse matrix. A single subdomain (no overlap) or zero requested modes
/// give an empty coarse space.
pub fn assemble_coarse(
    system: &GlobalSystem,
    layout: &SubdomainLayout,
    mode: CoarseMode,
    opts: &CoarseOptions,
) -> Result<CoarseSpace> {
    if layout.len() <= 1 && mode == CoarseMode::RGeneo {
        return Err(Error::DegenerateGeometry(
            "a single subdomain has no overlap zone for a strip".into(),
        ));
    }
    if layout.len() <= 1 || opts.rule == ModeRule::Fixed(0) {
        return Ok(CoarseSpace::empty(mode));
    }
    let t0 = Instant::now();
    let results: Vec<Result<(LocalSpectral, Vec<CoarseVector>)>> = (0..layout.len())
        .into_par_iter()
        .map(|j| local_spectral(system, layout, mode, j, opts).map_err(|e| e.in_subdomain(j)))
        .collect();
    let mut locals = Vec::with_capacity(layout.len());
    let mut raw = Vec::new();
    for r in results {
        let (local, vectors) = r?;
        locals.push(local);
        raw.extend(vectors);
    }
    let eig_time = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let full = galerkin_matrix(&system.a, layout, &raw);
    let (kept, dropped) = independent_columns(&full, opts.drop_tol);
    let a_h = full.principal_submatrix(&kept);
    let factor = if kept.is_empty() {
        None
    } else {
        Some(DenseCholesky::factorize(&a_h)?)
    };
    let raw_dim = raw.len();
    let mut keep_mask = vec![false; raw_dim];
    for &k in &kept {
        keep_mask[k] = true;
    }
    let basis = raw
        .into_iter()
        .zip(keep_mask)
        .filter_map(|(b, keep)| keep.then_some(b))
        .collect();
    Ok(CoarseSpace {
        mode,
        basis,
        raw_dim,
        dropped,
        a_h,
        factor,
        locals,
        timings: CoarseTimings {
            eigenproblems: eig_time,
            assembly: t1.elapsed().as_secs_f64(),
        },
    })
}

fn local_spectral(
    system: &GlobalSystem,
    layout: &SubdomainLayout,
    mode: CoarseMode,
    j: usize,
    opts: &CoarseOptions,
) -> Result<(LocalSpectral, Vec<CoarseVector>)> {
    let problem = build_pencil(mode, system, layout, j)?;
    let (pairs, sel) = solve_local(&problem, opts.rule, opts)?;
    let extension = match mode {
        CoarseMode::Geneo => None,
        CoarseMode::RGeneo => Some(HarmonicExtension::new(system, layout, j)?),
    };
    let vectors = (0..sel.m)
        .map(|k| build_coarse_vector(&problem, layout, extension.as_ref(), pairs.vector(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        LocalSpectral {
            problem,
            pairs,
            m: sel.m,
            shifted: sel.shifted,
            extension,
        },
        vectors,
    ))
}
