//! Bilinear (Q1) finite elements on a structured grid of the unit square.
//!
//! Dofs are numbered lexicographically with `x` fastest: the node at grid
//! position `(i, j)` has index `j * (nx + 1) + i`. Element `(ex, ey)` has
//! index `ey * nx + ex` and its four corners are listed counterclockwise
//! starting at the lower-left node.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::la::{Factorization, SparseSymMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredMesh {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl StructuredMesh {
    pub fn unit_square(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidInput(format!(
                "mesh needs at least one element per axis, got {nx}x{ny}"
            )));
        }
        Ok(StructuredMesh {
            nx,
            ny,
            hx: 1.0 / nx as f64,
            hy: 1.0 / ny as f64,
        })
    }

    pub fn n_dofs(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn n_elements(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn dof(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn dof_position(&self, dof: usize) -> (usize, usize) {
        (dof % (self.nx + 1), dof / (self.nx + 1))
    }

    pub fn dof_coords(&self, dof: usize) -> (f64, f64) {
        let (i, j) = self.dof_position(dof);
        (i as f64 * self.hx, j as f64 * self.hy)
    }

    #[inline]
    pub fn element(&self, ex: usize, ey: usize) -> usize {
        ey * self.nx + ex
    }

    #[inline]
    pub fn element_position(&self, e: usize) -> (usize, usize) {
        (e % self.nx, e / self.nx)
    }

    /// Corner dofs, counterclockwise from the lower-left corner.
    #[inline]
    pub fn element_dofs(&self, e: usize) -> [usize; 4] {
        let (ex, ey) = self.element_position(e);
        [
            self.dof(ex, ey),
            self.dof(ex + 1, ey),
            self.dof(ex + 1, ey + 1),
            self.dof(ex, ey + 1),
        ]
    }

    /// Elements sharing the node `dof` (one to four of them).
    pub fn dof_elements(&self, dof: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.dof_position(dof);
        let xs = i.saturating_sub(1)..(i + 1).min(self.nx);
        xs.flat_map(move |ex| {
            (j.saturating_sub(1)..(j + 1).min(self.ny)).map(move |ey| self.element(ex, ey))
        })
    }

    pub fn element_center(&self, e: usize) -> (f64, f64) {
        let (ex, ey) = self.element_position(e);
        ((ex as f64 + 0.5) * self.hx, (ey as f64 + 0.5) * self.hy)
    }
}

/// 4x4 element stiffness matrix for `∫_τ α ∇u·∇v` on one element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementMatrix {
    pub element: usize,
    pub values: [[f64; 4]; 4],
}

/// Q1 stiffness matrix of an `hx × hy` rectangle with constant coefficient
/// `alpha`, integrated with 2x2 Gauss quadrature (exact for this integrand).
pub fn element_stiffness(alpha: f64, hx: f64, hy: f64) -> Result<[[f64; 4]; 4]> {
    if !(alpha > 0.0 && hx > 0.0 && hy > 0.0) {
        return Err(Error::InvalidInput(format!(
            "element stiffness needs positive inputs, got alpha={alpha}, hx={hx}, hy={hy}"
        )));
    }
    // reference corners (ξ, η) counterclockwise from (-1, -1)
    const CORNERS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    let g = 1.0 / 3f64.sqrt();
    let det = hx * hy / 4.0;
    let mut k = [[0.0; 4]; 4];
    for &xi in &[-g, g] {
        for &eta in &[-g, g] {
            let grads: Vec<(f64, f64)> = CORNERS
                .iter()
                .map(|&(cx, cy)| {
                    let dxi = 0.25 * cx * (1.0 + cy * eta);
                    let deta = 0.25 * cy * (1.0 + cx * xi);
                    (dxi * 2.0 / hx, deta * 2.0 / hy)
                })
                .collect();
            for a in 0..4 {
                for b in 0..4 {
                    k[a][b] += alpha * det * (grads[a].0 * grads[b].0 + grads[a].1 * grads[b].1);
                }
            }
        }
    }
    Ok(k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientKind {
    Constant,
    Channels,
    Inclusions,
    Islands,
}

impl FromStr for CoefficientKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" => Ok(CoefficientKind::Constant),
            "channels" => Ok(CoefficientKind::Channels),
            "inclusions" => Ok(CoefficientKind::Inclusions),
            "islands" => Ok(CoefficientKind::Islands),
            other => Err(Error::InvalidInput(format!(
                "unknown coefficient kind `{other}`"
            ))),
        }
    }
}

impl fmt::Display for CoefficientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CoefficientKind::Constant => "constant",
            CoefficientKind::Channels => "channels",
            CoefficientKind::Inclusions => "inclusions",
            CoefficientKind::Islands => "islands",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDescriptor {
    pub kind: CoefficientKind,
    pub contrast: f64,
    pub seed: u64,
}

/// Piecewise constant diffusivity, one value per element.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    pub values: Vec<f64>,
    pub descriptor: CoefficientDescriptor,
}

impl CoefficientField {
    pub fn constant(mesh: &StructuredMesh, value: f64) -> Result<Self> {
        Self::from_values(mesh, vec![value; mesh.n_elements()])
    }

    pub fn from_values(mesh: &StructuredMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_elements() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_elements(),
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "coefficient values must be positive, found {bad}"
            )));
        }
        let (lo, hi) = min_max(&values);
        Ok(CoefficientField {
            values,
            descriptor: CoefficientDescriptor {
                kind: CoefficientKind::Constant,
                contrast: hi / lo,
                seed: 0,
            },
        })
    }

    pub fn contrast(&self) -> f64 {
        let (lo, hi) = min_max(&self.values);
        hi / lo
    }

    pub fn scaled(&self, c: f64) -> Self {
        CoefficientField {
            values: self.values.iter().map(|v| v * c).collect(),
            descriptor: self.descriptor,
        }
    }

    /// CSV with header `i,j,value`, one row per element.
    pub fn write_csv<W: Write>(&self, mesh: &StructuredMesh, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,j,value")?;
        for (e, v) in self.values.iter().enumerate() {
            let (i, j) = mesh.element_position(e);
            writeln!(w, "{i},{j},{v}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mesh: &StructuredMesh, r: R) -> Result<Self> {
        let mut values = vec![f64::NAN; mesh.n_elements()];
        for (lineno, line) in r.lines().enumerate() {
            let loc = format!("line {}", lineno + 1);
            let line = line.map_err(|e| Error::parse(&loc, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('i')) {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(Error::parse(loc, "expected `i,j,value`"));
            }
            let i: usize = f[0].parse().map_err(|_| Error::parse(&loc, "bad i"))?;
            let j: usize = f[1].parse().map_err(|_| Error::parse(&loc, "bad j"))?;
            let v: f64 = f[2].parse().map_err(|_| Error::parse(&loc, "bad value"))?;
            if i >= mesh.nx || j >= mesh.ny {
                return Err(Error::parse(loc, "element index outside mesh"));
            }
            values[mesh.element(i, j)] = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::parse("csv", "missing elements"));
        }
        Self::from_values(mesh, values)
    }

    /// Binary PGM (P5) of `log α`, top row = largest `y`.
    pub fn write_pgm<W: Write>(&self, mesh: &StructuredMesh, mut w: W) -> std::io::Result<()> {
        let (lo, hi) = min_max(&self.values);
        let (llo, lhi) = (lo.ln(), hi.ln());
        write!(w, "P5\n{} {}\n255\n", mesh.nx, mesh.ny)?;
        let mut bytes = Vec::with_capacity(mesh.n_elements());
        for ey in (0..mesh.ny).rev() {
            for ex in 0..mesh.nx {
                let v = self.values[mesh.element(ex, ey)].ln();
                let g = if lhi > llo {
                    (255.0 * (v - llo) / (lhi - llo)).round()
                } else {
                    0.0
                };
                bytes.push(g as u8);
            }
        }
        w.write_all(&bytes)
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Deterministic high-contrast fields: background 1, features `contrast`.
///
/// - `constant`: `α ≡ 1` (the contrast is ignored).
/// - `channels`: horizontal stripes one or two elements thick, one per band
///   of roughly 12 element rows, each spanning 40-100% of the width so that
///   it crosses vertical subdomain boundaries.
/// - `inclusions`: axis-aligned rectangles of 2-6 elements per side.
/// - `islands`: discs of radius 1.5-4 elements.
pub fn gen_coefficient(
    kind: CoefficientKind,
    contrast: f64,
    seed: u64,
    mesh: &StructuredMesh,
) -> Result<CoefficientField> {
    if !(contrast >= 1.0) || !contrast.is_finite() {
        return Err(Error::InvalidInput(format!(
            "contrast must be >= 1, got {contrast}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nx, ny) = (mesh.nx, mesh.ny);
    let mut values = vec![1.0; mesh.n_elements()];
    let mut paint = |ex: usize, ey: usize| values[ey * nx + ex] = contrast;
    match kind {
        CoefficientKind::Constant => {}
        CoefficientKind::Channels => {
            let band = 12usize;
            let count = (ny / band).max(1);
            let band_h = ny / count;
            for c in 0..count {
                let thick = if band_h >= 4 {
                    rng.random_range(1..=2)
                } else {
                    1
                };
                // keep one background row on each side inside the band
                let (lo, hi) = if band_h >= thick + 2 {
                    (c * band_h + 1, (c + 1) * band_h - thick - 1)
                } else {
                    (c * band_h, c * band_h)
                };
                let y0 = rng.random_range(lo..=hi);
                let len = ((nx as f64) * rng.random_range(0.4..=1.0)).round() as usize;
                let len = len.clamp(1, nx);
                let x0 = rng.random_range(0..=nx - len);
                for ey in y0..(y0 + thick).min(ny) {
                    for ex in x0..x0 + len {
                        paint(ex, ey);
                    }
                }
            }
        }
        CoefficientKind::Inclusions => {
            let count = (nx * ny / 150).max(1);
            for _ in 0..count {
                let w = rng.random_range(2..=6usize).min(nx);
                let h = rng.random_range(2..=6usize).min(ny);
                let x0 = rng.random_range(0..=nx - w);
                let y0 = rng.random_range(0..=ny - h);
                for ey in y0..y0 + h {
                    for ex in x0..x0 + w {
                        paint(ex, ey);
                    }
                }
            }
        }
        CoefficientKind::Islands => {
            let count = (nx * ny / 200).max(1);
            for _ in 0..count {
                let r: f64 = rng.random_range(1.5..=4.0);
                let cx: f64 = rng.random_range(0.0..nx as f64);
                let cy: f64 = rng.random_range(0.0..ny as f64);
                let x_lo = (cx - r).floor().max(0.0) as usize;
                let x_hi = ((cx + r).ceil() as usize).min(nx);
                let y_lo = (cy - r).floor().max(0.0) as usize;
                let y_hi = ((cy + r).ceil() as usize).min(ny);
                let mut painted = false;
                for ey in y_lo..y_hi {
                    for ex in x_lo..x_hi {
                        let (dx, dy) = (ex as f64 + 0.5 - cx, ey as f64 + 0.5 - cy);
                        if dx * dx + dy * dy <= r * r {
                            paint(ex, ey);
                            painted = true;
                        }
                    }
                }
                if !painted {
                    paint((cx as usize).min(nx - 1), (cy as usize).min(ny - 1));
                }
            }
        }
    }
    let contrast = if kind == CoefficientKind::Constant {
        1.0
    } else {
        contrast
    };
    Ok(CoefficientField {
        values,
        descriptor: CoefficientDescriptor {
            kind,
            contrast,
            seed,
        },
    })
}

/// Neumann (unconstrained) matrix of the full element sum.
pub fn assemble(mesh: &StructuredMesh, coeff: &CoefficientField) -> Result<SparseSymMatrix> {
    let all: Vec<usize> = (0..mesh.n_elements()).collect();
    let dofs: Vec<usize> = (0..mesh.n_dofs()).collect();
    assemble_elements(mesh, coeff, &all, &dofs)
}

/// Element sum over `elements`, restricted to the sorted dof list `dofs`.
/// Contributions to dofs outside the list are dropped, which is the same as
/// restricting the form to functions vanishing there.
pub fn assemble_elements(
    mesh: &StructuredMesh,
    coeff: &CoefficientField,
    elements: &[usize],
    dofs: &[usize],
) -> Result<SparseSymMatrix> {
    if coeff.values.len() != mesh.n_elements() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_elements(),
            got: coeff.values.len(),
        });
    }
    let kref = element_stiffness(1.0, mesh.hx, mesh.hy)?;
    let mut triplets = Vec::with_capacity(16 * elements.len());
    for &e in elements {
        let alpha = coeff.values[e];
        let local: Vec<Option<usize>> = mesh
            .element_dofs(e)
            .iter()
            .map(|d| dofs.binary_search(d).ok())
            .collect();
        for a in 0..4 {
            let Some(ra) = local[a] else { continue };
            for b in 0..4 {
                let Some(rb) = local[b] else { continue };
                triplets.push((ra, rb, alpha * kref[a][b]));
            }
        }
    }
    SparseSymMatrix::from_triplets_unchecked(dofs.len(), &triplets)
}

/// Local Neumann matrix of `a_D` together with its local-to-global dof map.
#[derive(Clone, Debug)]
pub struct LocalMatrix {
    pub matrix: SparseSymMatrix,
    /// Sorted global dofs; local index `k` is global dof `dofs[k]`.
    pub dofs: Vec<usize>,
}

/// Dofs touched by a set of elements, sorted.
pub fn element_set_dofs(mesh: &StructuredMesh, elements: &[usize]) -> Vec<usize> {
    let mut d: Vec<usize> = elements
        .iter()
        .flat_map(|&e| mesh.element_dofs(e))
        .collect();
    d.sort_unstable();
    d.dedup();
    d
}

pub fn sub_assemble(
    mesh: &StructuredMesh,
    coeff: &CoefficientField,
    elements: &[usize],
) -> Result<LocalMatrix> {
    if elements.is_empty() {
        return Err(Error::InvalidInput(
            "sub-assembly over an empty element set".into(),
        ));
    }
    let dofs = element_set_dofs(mesh, elements);
    let matrix = assemble_elements(mesh, coeff, elements, &dofs)?;
    Ok(LocalMatrix { matrix, dofs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirichletBoundary {
    /// `x = 0` and `x = 1`; the rest of the boundary is natural (Neumann).
    LeftRight,
    /// The whole boundary.
    All,
}

impl DirichletBoundary {
    pub fn dofs(&self, mesh: &StructuredMesh) -> Vec<usize> {
        (0..mesh.n_dofs())
            .filter(|&d| {
                let (i, j) = mesh.dof_position(d);
                let lr = i == 0 || i == mesh.nx;
                match self {
                    DirichletBoundary::LeftRight => lr,
                    DirichletBoundary::All => lr || j == 0 || j == mesh.ny,
                }
            })
            .collect()
    }
}

/// Dirichlet-constrained global system `A u = f` in keep-in-system form.
#[derive(Clone, Debug)]
pub struct GlobalSystem {
    pub mesh: StructuredMesh,
    pub coefficient: CoefficientField,
    /// Element-sum matrix before elimination.
    pub a_neumann: SparseSymMatrix,
    /// Dirichlet rows and columns replaced by identity.
    pub a: SparseSymMatrix,
    pub f: Vec<f64>,
    /// Sorted Dirichlet dofs.
    pub dirichlet: Vec<usize>,
    pub is_dirichlet: Vec<bool>,
}

/// Symmetric elimination of the Dirichlet dofs of `boundary` with values
/// `g(x, y)` at the dof coordinates; `load` is an optional assembled load
/// vector (zero when absent).
pub fn apply_dirichlet(
    a_neumann: SparseSymMatrix,
    mesh: &StructuredMesh,
    coefficient: &CoefficientField,
    boundary: DirichletBoundary,
    g: &dyn Fn(f64, f64) -> f64,
    load: Option<&[f64]>,
) -> Result<GlobalSystem> {
    let n = mesh.n_dofs();
    if a_neumann.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a_neumann.n(),
        });
    }
    if let Some(l) = load {
        crate::error::check_len(n, l.len())?;
    }
    let dirichlet = boundary.dofs(mesh);
    if dirichlet.is_empty() {
        return Err(Error::InvalidInput("empty Dirichlet set".into()));
    }
    let mut is_dirichlet = vec![false; n];
    let mut gvals = vec![0.0; n];
    for &d in &dirichlet {
        is_dirichlet[d] = true;
        let (x, y) = mesh.dof_coords(d);
        gvals[d] = g(x, y);
    }

    let mut f = load.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    let mut triplets = Vec::with_capacity(a_neumann.nnz());
    for i in 0..n {
        if is_dirichlet[i] {
            triplets.push((i, i, 1.0));
            f[i] = gvals[i];
            continue;
        }
        let (cols, vals) = a_neumann.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if is_dirichlet[j] {
                f[i] -= v * gvals[j];
            } else {
                triplets.push((i, j, v));
            }
        }
    }
    let a = SparseSymMatrix::from_triplets_unchecked(n, &triplets)?;
    Ok(GlobalSystem {
        mesh: *mesh,
        coefficient: coefficient.clone(),
        a_neumann,
        a,
        f,
        dirichlet,
        is_dirichlet,
    })
}

impl GlobalSystem {
    /// `-div(α ∇u) = 0`, `u = 1 - x` on `x ∈ {0, 1}`, natural elsewhere.
    pub fn model_problem(mesh: &StructuredMesh, coefficient: &CoefficientField) -> Result<Self> {
        let a = assemble(mesh, coefficient)?;
        apply_dirichlet(
            a,
            mesh,
            coefficient,
            DirichletBoundary::LeftRight,
            &|x, _| 1.0 - x,
            None,
        )
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.n()).filter(|&d| !self.is_dirichlet[d]).collect()
    }

    /// Boundary values at Dirichlet dofs, zero elsewhere.
    pub fn lift(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n()];
        for &d in &self.dirichlet {
            x[d] = self.f[d];
        }
        x
    }

    /// Sparse direct solve of the full system.
    pub fn solve_direct(&self) -> Result<Vec<f64>> {
        Factorization::factorize(&self.a)?.solve(&self.f)
    }

    /// Energy `v^T A_neumann v` of a vector that vanishes on Dirichlet dofs.
    pub fn energy(&self, v: &[f64]) -> f64 {
        self.a_neumann.quad_form(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_rejects_zero() {
        assert!(StructuredMesh::unit_square(0, 3).is_err());
    }

    #[test]
    fn every_dof_has_elements() {
        let m = StructuredMesh::unit_square(3, 2).unwrap();
        for d in 0..m.n_dofs() {
            let els: Vec<_> = m.dof_elements(d).collect();
            assert!(!els.is_empty() && els.len() <= 4);
            for e in els {
                assert!(m.element_dofs(e).contains(&d));
            }
        }
    }

    #[test]
    fn stiffness_rejects_nonpositive() {
        assert!(element_stiffness(0.0, 1.0, 1.0).is_err());
        assert!(element_stiffness(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn stiffness_rows_sum_to_zero() {
        let k = element_stiffness(3.7, 0.3, 0.05).unwrap();
        for row in k {
            assert!(row.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn stiffness_linear_in_alpha() {
        let k1 = element_stiffness(1.0, 0.25, 0.25).unwrap();
        let k2 = element_stiffness(2.0, 0.25, 0.25).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(k2[a][b], 2.0 * k1[a][b]);
            }
        }
    }

    #[test]
    fn single_element_assembly() {
        let m = StructuredMesh::unit_square(1, 1).unwrap();
        let c = CoefficientField::constant(&m, 1.0).unwrap();
        let a = assemble(&m, &c).unwrap();
        let k = element_stiffness(1.0, 1.0, 1.0).unwrap();
        let dofs = m.element_dofs(0);
        for a_ in 0..4 {
            for b in 0..4 {
                assert!((a.get(dofs[a_], dofs[b]) - k[a_][b]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constants_in_kernel() {
        let m = StructuredMesh::unit_square(2, 2).unwrap();
        let c = CoefficientField::constant(&m, 1.0).unwrap();
        let a = assemble(&m, &c).unwrap();
        for v in a.spmv(&vec![1.0; m.n_dofs()]).unwrap() {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn sub_assemble_rejects_empty() {
        let m = StructuredMesh::unit_square(2, 2).unwrap();
        let c = CoefficientField::constant(&m, 1.0).unwrap();
        assert!(sub_assemble(&m, &c, &[]).is_err());
    }

    #[test]
    fn unknown_kind() {
        assert!("stripes".parse::<CoefficientKind>().is_err());
        assert_eq!(
            "Channels".parse::<CoefficientKind>().unwrap(),
            CoefficientKind::Channels
        );
    }

    #[test]
    fn constant_field_is_one() {
        let m = StructuredMesh::unit_square(4, 4).unwrap();
        let c = gen_coefficient(CoefficientKind::Constant, 1.0, 3, &m).unwrap();
        assert!(c.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn generators_hit_exact_contrast() {
        let m = StructuredMesh::unit_square(48, 48).unwrap();
        for kind in [
            CoefficientKind::Channels,
            CoefficientKind::Inclusions,
            CoefficientKind::Islands,
        ] {
            let c = gen_coefficient(kind, 1e6, 11, &m).unwrap();
            assert_eq!(c.contrast(), 1e6, "{kind}");
        }
    }

    #[test]
    fn contrast_below_one_rejected() {
        let m = StructuredMesh::unit_square(4, 4).unwrap();
        assert!(gen_coefficient(CoefficientKind::Channels, 0.5, 0, &m).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let m = StructuredMesh::unit_square(6, 5).unwrap();
        let c = gen_coefficient(CoefficientKind::Inclusions, 1e4, 2, &m).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&m, &mut buf).unwrap();
        let back = CoefficientField::read_csv(&m, &buf[..]).unwrap();
        assert_eq!(back.values, c.values);
    }

    #[test]
    fn pgm_has_header_and_pixels() {
        let m = StructuredMesh::unit_square(5, 3).unwrap();
        let c = gen_coefficient(CoefficientKind::Channels, 1e6, 2, &m).unwrap();
        let mut buf = Vec::new();
        c.write_pgm(&m, &mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n5 3\n255\n"));
        assert_eq!(buf.len(), b"P5\n5 3\n255\n".len() + 15);
    }

    #[test]
    fn dirichlet_rows_are_identity() {
        let m = StructuredMesh::unit_square(3, 3).unwrap();
        let c = CoefficientField::constant(&m, 1.0).unwrap();
        let s = GlobalSystem::model_problem(&m, &c).unwrap();
        for &d in &s.dirichlet {
            let (cols, vals) = s.a.row(d);
            assert_eq!(cols, &[d]);
            assert_eq!(vals, &[1.0]);
            let (x, _) = m.dof_coords(d);
            assert_eq!(s.f[d], 1.0 - x);
        }
    }
}
