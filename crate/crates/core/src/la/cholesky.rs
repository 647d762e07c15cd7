//! Sparse Cholesky factorization in envelope (profile) storage.
//!
//! The matrix is symmetrically permuted with reverse Cuthill-McKee before
//! factoring. For the grid-like matrices of this crate (subdomain blocks,
//! overlap strips) RCM keeps the envelope close to the bandwidth of the
//! shortest grid direction, and all fill stays inside the envelope.

use std::collections::VecDeque;

use crate::error::{check_len, Error, Result};
use crate::la::SparseSymMatrix;

/// Relative pivot threshold below which a matrix is reported as singular.
const PIVOT_REL_TOL: f64 = 1e-14;

/// `P A P^T = L L^T` with `L` stored row-by-row over its envelope.
#[derive(Clone, Debug)]
pub struct Factorization {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// first stored column of each row of `L` (permuted numbering)
    first: Vec<usize>,
    /// offset of row `i` in `values`; row `i` holds `L[i, first[i]..=i]`
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl Factorization {
    pub fn factorize(a: &SparseSymMatrix) -> Result<Self> {
        let n = a.n();
        let perm = rcm_ordering(a);
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for &c in a.row(old).0 {
                let pc = iperm[c];
                if pc < first[new] {
                    first[new] = pc;
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            offsets.push(offsets[i] + (i - first[i] + 1));
        }
        let mut values = vec![0.0; offsets[n]];
        for (new, &old) in perm.iter().enumerate() {
            let (cols, vals) = a.row(old);
            for (&c, &v) in cols.iter().zip(vals) {
                let pc = iperm[c];
                if pc <= new {
                    values[offsets[new] + pc - first[new]] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let row_i = offsets[i];
            for j in fi..i {
                let fj = first[j];
                let start = fi.max(fj);
                let row_j = offsets[j];
                let li = &values[row_i + start - fi..row_i + j - fi];
                let lj = &values[row_j + start - fj..row_j + j - fj];
                let dot = dot(li, lj);
                let ljj = values[row_j + j - fj];
                let idx = row_i + j - fi;
                values[idx] = (values[idx] - dot) / ljj;
            }
            let diag_idx = row_i + i - fi;
            let orig = values[diag_idx];
            let li = &values[row_i..diag_idx];
            let d = orig - dot(li, li);
            if !(d > PIVOT_REL_TOL * orig.abs()) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    pivot: perm[i],
                    value: d,
                });
            }
            values[diag_idx] = d.sqrt();
        }

        Ok(Factorization {
            n,
            perm,
            first,
            offsets,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Stored entries of the triangular factor.
    pub fn factor_nnz(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, b.len())?;
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x);
        Ok(x)
    }

    /// Solves into `x`. Panics on length mismatch.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        assert_eq!(x.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.values[self.offsets[i]..self.offsets[i + 1]];
            let s = dot(&row[..i - fi], &y[fi..i]);
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.offsets[i]..self.offsets[i + 1]];
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for (yk, &l) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *yk -= l * xi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * c + k] * b[4 * c + k];
        }
    }
    let mut s = acc[0] + acc[1] + acc[2] + acc[3];
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// Reverse Cuthill-McKee ordering of the adjacency graph of `a`, started from
/// a pseudo-peripheral vertex in every connected component. Returns
/// `perm[new] = old`.
pub fn rcm_ordering(a: &SparseSymMatrix) -> Vec<usize> {
    let n = a.n();
    let degree: Vec<usize> = (0..n)
        .map(|i| a.row(i).0.iter().filter(|&&j| j != i).count())
        .collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut levels = vec![usize::MAX; n];

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(a, seed, &degree, &mut levels);
        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        let mut nbrs = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(
                a.row(v)
                    .0
                    .iter()
                    .copied()
                    .filter(|&w| w != v && !visited[w]),
            );
            nbrs.sort_by_key(|&w| (degree[w], w));
            for &w in &nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(
    a: &SparseSymMatrix,
    seed: usize,
    degree: &[usize],
    levels: &mut [usize],
) -> usize {
    let mut root = seed;
    let (mut ecc, mut last) = bfs_levels(a, root, levels);
    loop {
        let candidate = last
            .iter()
            .copied()
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(root);
        let (e, l) = bfs_levels(a, candidate, levels);
        if e > ecc {
            root = candidate;
            ecc = e;
            last = l;
        } else {
            return root;
        }
    }
}

/// Breadth-first level structure from `root`; returns the eccentricity and
/// the vertices of the last level.
fn bfs_levels(a: &SparseSymMatrix, root: usize, levels: &mut [usize]) -> (usize, Vec<usize>) {
    let mut touched = vec![root];
    levels[root] = 0;
    let mut frontier = vec![root];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &v in &frontier {
            for &w in a.row(v).0 {
                if levels[w] == usize::MAX {
                    levels[w] = depth + 1;
                    touched.push(w);
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        depth += 1;
        frontier = next;
    }
    for v in touched {
        levels[v] = usize::MAX;
    }
    (depth, frontier)
}
