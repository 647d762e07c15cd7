#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgeneo::decomp::{build_partition, SubdomainLayout};
use rgeneo::fem::{
    gen_coefficient, CoefficientField, CoefficientKind, GlobalSystem, StructuredMesh,
};
use rgeneo::la::SparseSymMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn problem(
    p: usize,
    per: usize,
    kind: CoefficientKind,
    contrast: f64,
    overlap: usize,
    star: usize,
) -> (GlobalSystem, SubdomainLayout) {
    let mesh = StructuredMesh::unit_square(p * per, p * per).unwrap();
    let coeff = gen_coefficient(kind, contrast, 7, &mesh).unwrap();
    let sys = GlobalSystem::model_problem(&mesh, &coeff).unwrap();
    let layout = build_partition(&mesh, p, p, overlap, star).unwrap();
    (sys, layout)
}

pub fn random_field(mesh: &StructuredMesh, seed: u64) -> CoefficientField {
    let mut r = rng(seed);
    let v = (0..mesh.n_elements())
        .map(|_| r.random_range(0.1..10.0))
        .collect();
    CoefficientField::from_values(mesh, v).unwrap()
}

pub fn to_na(a: &SparseSymMatrix) -> DMatrix<f64> {
    let n = a.n();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let (c, v) = a.row(i);
        for (&j, &x) in c.iter().zip(v) {
            m[(i, j)] = x;
        }
    }
    m
}

pub fn dense_mv(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (a * DVector::from_column_slice(x)).as_slice().to_vec()
}

/// Exact Q1 stiffness on an `hx × hy` rectangle as the tensor sum
/// `S_x ⊗ M_y + M_x ⊗ S_y` of 1D stiffness and mass matrices, in
/// counterclockwise corner order.
pub fn q1_oracle(alpha: f64, hx: f64, hy: f64) -> [[f64; 4]; 4] {
    let s = |h: f64| [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
    let m = |h: f64| [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
    let (sx, sy, mx, my) = (s(hx), s(hy), m(hx), m(hy));
    // corner k -> (ix, iy)
    let pos = [(0, 0), (1, 0), (1, 1), (0, 1)];
    let mut k = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let (ia, ja) = pos[a];
            let (ib, jb) = pos[b];
            k[a][b] = alpha * (sx[ia][ib] * my[ja][jb] + mx[ia][ib] * sy[ja][jb]);
        }
    }
    k
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
