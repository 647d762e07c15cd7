use std::io::{BufRead, Write};

use crate::error::{check_len, Error, Result};
use crate::la::DenseMatrix;

/// Symmetric sparse matrix in compressed row storage.
///
/// Both triangles are stored, so a row slice is the full row and `spmv` is a
/// plain CSR product. Column indices are strictly increasing within a row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    pub fn zeros(n: usize) -> Self {
        SparseSymMatrix {
            n,
            row_ptr: vec![0; n + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SparseSymMatrix {
            n: d.len(),
            row_ptr: (0..=d.len()).collect(),
            col_idx: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    /// Builds a matrix from full-pattern triplets; duplicates are summed.
    ///
    /// The caller supplies both `(i, j)` and `(j, i)` entries. Value symmetry
    /// is checked to a relative tolerance of `1e-12`.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let m = Self::from_triplets_unchecked(n, triplets)?;
        m.check_symmetric(1e-12)?;
        Ok(m)
    }

    /// Builds a matrix from lower-triangle triplets (`i >= j`), mirroring the
    /// strictly lower entries into the upper triangle.
    pub fn from_lower_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut full = Vec::with_capacity(2 * triplets.len());
        for &(i, j, v) in triplets {
            if i < j {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) is above the diagonal"
                )));
            }
            full.push((i, j, v));
            if i != j {
                full.push((j, i, v));
            }
        }
        Self::from_triplets_unchecked(n, &full)
    }

    pub(crate) fn from_triplets_unchecked(
        n: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut counts = vec![0usize; n + 1];
        for &(i, j, _) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) out of bounds for dimension {n}"
                )));
            }
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            scratch.clear();
            scratch.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            scratch.sort_unstable_by_key(|&(c, _)| c);
            for &(c, v) in &scratch {
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseSymMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_dense(d: &DenseMatrix) -> Result<Self> {
        if d.rows() != d.cols() {
            return Err(Error::InvalidInput("dense matrix is not square".into()));
        }
        let n = d.rows();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = d.get(i, j);
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &t)
    }

    fn check_symmetric(&self, rel_tol: f64) -> Result<()> {
        let scale = self.norm_inf().max(f64::MIN_POSITIVE);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let w = self.get(j, i);
                if (v - w).abs() > rel_tol * scale {
                    return Err(Error::InvalidInput(format!(
                        "matrix not symmetric at ({i}, {j}): {v} vs {w}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, x.len())?;
        let mut y = vec![0.0; self.n];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x`. Panics on length mismatch.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                x[i] * cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum::<f64>()
            })
            .sum()
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                x[i] * cols.iter().zip(vals).map(|(&j, &v)| v * y[j]).sum::<f64>()
            })
            .sum()
    }

    /// Maximum absolute row sum; an upper bound for the spectral norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Principal submatrix on the sorted index set `idx`.
    pub fn principal_submatrix(&self, idx: &[usize]) -> SparseSymMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (local, &g) in idx.iter().enumerate() {
            map[g] = local;
        }
        let mut row_ptr = Vec::with_capacity(idx.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for &g in idx {
            let (cols, vals) = self.row(g);
            scratch.clear();
            for (&c, &v) in cols.iter().zip(vals) {
                if map[c] != usize::MAX {
                    scratch.push((map[c], v));
                }
            }
            scratch.sort_unstable_by_key(|&(c, _)| c);
            for &(c, v) in &scratch {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseSymMatrix {
            n: idx.len(),
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Rectangular block `A[rows, cols]` as (row, col, value) triplets in
    /// local numbering of the two index sets.
    pub fn block_triplets(&self, rows: &[usize], cols: &[usize]) -> Vec<(usize, usize, f64)> {
        let mut map = vec![usize::MAX; self.n];
        for (local, &g) in cols.iter().enumerate() {
            map[g] = local;
        }
        let mut out = Vec::new();
        for (li, &g) in rows.iter().enumerate() {
            let (cs, vs) = self.row(g);
            for (&c, &v) in cs.iter().zip(vs) {
                if map[c] != usize::MAX {
                    out.push((li, map[c], v));
                }
            }
        }
        out
    }

    /// `D A D` with `D = diag(w)`.
    pub fn scale_symmetric(&self, w: &[f64]) -> Result<SparseSymMatrix> {
        check_len(self.n, w.len())?;
        let mut out = self.clone();
        for i in 0..self.n {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                out.values[k] *= w[i] * w[out.col_idx[k]];
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> SparseSymMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `self + other` on the union pattern.
    pub fn add(&self, other: &SparseSymMatrix) -> Result<SparseSymMatrix> {
        check_len(self.n, other.n)?;
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        row_ptr.push(0);
        for i in 0..self.n {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let a = ca.get(p).copied().unwrap_or(usize::MAX);
                let b = cb.get(q).copied().unwrap_or(usize::MAX);
                if a == b {
                    col_idx.push(a);
                    values.push(va[p] + vb[q]);
                    p += 1;
                    q += 1;
                } else if a < b {
                    col_idx.push(a);
                    values.push(va[p]);
                    p += 1;
                } else {
                    col_idx.push(b);
                    values.push(vb[q]);
                    q += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseSymMatrix {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d.set(i, j, v);
            }
        }
        d
    }

    /// Writes the lower triangle in Matrix Market `coordinate real symmetric`
    /// format (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let lower: usize = (0..self.n)
            .map(|i| self.row(i).0.iter().filter(|&&j| j <= i).count())
            .sum();
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, lower)?;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
                }
            }
        }
        Ok(())
    }

    /// Reads a Matrix Market `coordinate real symmetric` (or `general`
    /// with symmetric content) file.
    pub fn read_matrix_market<R: BufRead>(r: R) -> Result<SparseSymMatrix> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse("line 1", "empty input"))?;
        let header = header.map_err(|e| Error::parse("line 1", e.to_string()))?;
        let lower = header.to_ascii_lowercase();
        if !lower.starts_with("%%matrixmarket matrix coordinate real") {
            return Err(Error::parse("line 1", "unsupported Matrix Market header"));
        }
        let symmetric = lower.contains("symmetric");
        let mut size: Option<(usize, usize)> = None;
        let mut triplets = Vec::new();
        for (lineno, line) in lines {
            let loc = format!("line {}", lineno + 1);
            let line = line.map_err(|e| Error::parse(&loc, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('%') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match size {
                None => {
                    if fields.len() != 3 {
                        return Err(Error::parse(loc, "expected `rows cols nnz`"));
                    }
                    let rows: usize = parse_field(fields[0], &loc)?;
                    let cols: usize = parse_field(fields[1], &loc)?;
                    if rows != cols {
                        return Err(Error::parse(loc, "matrix is not square"));
                    }
                    size = Some((rows, parse_field(fields[2], &loc)?));
                }
                Some(_) => {
                    if fields.len() != 3 {
                        return Err(Error::parse(loc, "expected `i j value`"));
                    }
                    let i: usize = parse_field(fields[0], &loc)?;
                    let j: usize = parse_field(fields[1], &loc)?;
                    let v: f64 = parse_field(fields[2], &loc)?;
                    if i == 0 || j == 0 {
                        return Err(Error::parse(loc, "indices are 1-based"));
                    }
                    triplets.push((i - 1, j - 1, v));
                }
            }
        }
        let (n, nnz) = size.ok_or_else(|| Error::parse("header", "missing size line"))?;
        if triplets.len() != nnz {
            return Err(Error::parse(
                "body",
                format!("expected {nnz} entries, found {}", triplets.len()),
            ));
        }
        if symmetric {
            Self::from_lower_triplets(n, &triplets)
        } else {
            Self::from_triplets(n, &triplets)
        }
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, loc: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(loc, format!("cannot parse `{s}`")))
}
