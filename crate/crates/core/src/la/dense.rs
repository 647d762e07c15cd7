use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};

/// Dense matrix in column-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Column-major values; `data.len()` must equal `rows * cols`.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len(rows * cols, data.len())?;
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[j * rows + i] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, x.len())?;
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (yi, &a) in y.iter_mut().zip(self.column(j)) {
                    *yi += a * xj;
                }
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Largest entry of `|A - A^T|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols.min(self.rows) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn principal_submatrix(&self, idx: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(idx.len(), idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        DenseMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.as_slice().to_vec(),
        }
    }
}

/// Dense Cholesky factor `A = L L^T`.
#[derive(Clone, Debug)]
pub struct DenseCholesky {
    l: DMatrix<f64>,
}

impl DenseCholesky {
    pub fn factorize(a: &DenseMatrix) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::InvalidInput("Cholesky needs a square matrix".into()));
        }
        let n = a.rows();
        let mut l = a.to_nalgebra();
        for j in 0..n {
            let mut d = l[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = l[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        for j in 0..n {
            for i in 0..j {
                l[(i, j)] = 0.0;
            }
        }
        Ok(DenseCholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), b.len())?;
        let n = self.dim();
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[(i, k)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        Ok(x)
    }

    pub(crate) fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }
}

/// Greedy pivoted Cholesky that selects a numerically independent subset of
/// columns of an SPSD matrix.
///
/// A column is rejected once its Schur-complement diagonal drops below
/// `rel_tol` times its original diagonal. Returns `(kept, dropped)` index
/// lists; `kept` is sorted.
pub fn independent_columns(a: &DenseMatrix, rel_tol: f64) -> (Vec<usize>, Vec<usize>) {
    let n = a.rows();
    let orig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let mut resid = orig.clone();
    let mut active: Vec<bool> = (0..n).map(|i| orig[i] > 0.0).collect();
    // columns of the partial factor, one per kept pivot
    let mut factor_cols: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    loop {
        let mut best = None;
        let mut best_ratio = rel_tol;
        for i in 0..n {
            if active[i] {
                let ratio = resid[i] / orig[i];
                if ratio > best_ratio {
                    best_ratio = ratio;
                    best = Some(i);
                }
            }
        }
        let Some(p) = best else { break };
        active[p] = false;
        kept.push(p);
        let piv = resid[p].sqrt();
        let mut col = vec![0.0; n];
        for i in 0..n {
            if active[i] {
                let mut s = a.get(i, p);
                for f in &factor_cols {
                    s -= f[i] * f[p];
                }
                col[i] = s / piv;
                resid[i] -= col[i] * col[i];
            }
        }
        col[p] = piv;
        factor_cols.push(col);
    }
    kept.sort_unstable();
    let dropped = (0..n).filter(|i| kept.binary_search(i).is_err()).collect();
    (kept, dropped)
}

/// Eigenvalues (ascending) and eigenvectors of a dense symmetric matrix.
pub fn symmetric_eigen(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let eig = nalgebra::SymmetricEigen::new(a.to_nalgebra());
    let mut order: Vec<usize> = (0..a.rows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DenseMatrix::from_fn(a.rows(), a.rows(), |i, k| eig.eigenvectors[(i, order[k])]);
    (values, vectors)
}
