//! Small dense-matrix helpers and an unpivoted Householder QR.
//!
//! Only what the filter and selection code needs: thin factorizations of
//! tall matrices (N x m, m <= N) with N at most a few hundred.

use std::fmt;
use std::ops::{Index, IndexMut};

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data. Panics if the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "vector length differs from column count");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// Thin QR factorization `A = Q R` of a tall matrix by Householder
/// reflections, without column pivoting. Column order is preserved, so the
/// span of the first `j` columns of `Q` equals the span of the first `j`
/// columns of `A` whenever those are independent.
#[derive(Debug, Clone)]
pub struct ThinQr {
    /// N x m, orthonormal columns.
    pub q: Matrix,
    /// m x m, upper triangular.
    pub r: Matrix,
}

impl ThinQr {
    pub fn factor(a: &Matrix) -> ThinQr {
        Self::factor_with_columns(a, a.cols())
    }

    /// Like [`ThinQr::factor`], but `q` carries all N columns of the
    /// orthogonal factor; columns `m..N` span the orthogonal complement of
    /// the column space of `a`.
    pub fn factor_complete(a: &Matrix) -> ThinQr {
        Self::factor_with_columns(a, a.rows())
    }

    fn factor_with_columns(a: &Matrix, q_cols: usize) -> ThinQr {
        let (n, m) = (a.rows(), a.cols());
        assert!(m <= n, "thin QR needs rows >= cols");
        debug_assert!(q_cols >= m && q_cols <= n);

        // Column-major working copy; reflectors are stored in place below the diagonal.
        let mut work: Vec<Vec<f64>> = (0..m).map(|j| a.column(j)).collect();
        let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut r = Matrix::zeros(m, m);

        for j in 0..m {
            let x = &work[j][j..];
            let alpha = norm_sq(x).sqrt();
            let mut v = x.to_vec();
            // Reflect onto -sign(x0)*|x| e1 to avoid cancellation.
            let beta = if x[0] >= 0.0 { -alpha } else { alpha };
            v[0] -= beta;
            let vnorm_sq = norm_sq(&v);
            if vnorm_sq > 0.0 {
                for col in work.iter_mut().skip(j) {
                    let tail = &mut col[j..];
                    let s = 2.0 * dot(&v, tail) / vnorm_sq;
                    for (t, vi) in tail.iter_mut().zip(&v) {
                        *t -= s * vi;
                    }
                }
            }
            for (k, col) in work.iter().enumerate().skip(j) {
                r[(j, k)] = col[j];
            }
            reflectors.push(if vnorm_sq > 0.0 { v } else { Vec::new() });
        }

        // Accumulate Q = H_0 H_1 ... H_{m-1} applied to leading unit vectors.
        let mut q_vecs: Vec<Vec<f64>> = (0..q_cols)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                e
            })
            .collect();
        for j in (0..m).rev() {
            let v = &reflectors[j];
            if v.is_empty() {
                continue;
            }
            let vnorm_sq = norm_sq(v);
            for col in q_vecs.iter_mut() {
                let tail = &mut col[j..];
                let s = 2.0 * dot(v, tail) / vnorm_sq;
                for (t, vi) in tail.iter_mut().zip(v) {
                    *t -= s * vi;
                }
            }
        }

        let q = Matrix::from_fn(n, q_cols, |i, j| q_vecs[j][i]);
        ThinQr { q, r }
    }

    /// Smallest |R_jj| relative to the largest; a cheap rank indicator.
    pub fn min_relative_pivot(&self) -> f64 {
        let diag: Vec<f64> = self.r.diagonal().iter().map(|d| d.abs()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        diag.iter().cloned().fold(f64::INFINITY, f64::min) / max
    }

    /// Solves `R^T z = c` by forward substitution.
    pub fn solve_rt(&self, c: &[f64]) -> Vec<f64> {
        let m = self.r.rows();
        assert_eq!(c.len(), m);
        let mut z = vec![0.0; m];
        for i in 0..m {
            let mut s = c[i];
            for (k, zk) in z.iter().enumerate().take(i) {
                s -= self.r[(k, i)] * zk;
            }
            z[i] = s / self.r[(i, i)];
        }
        z
    }
}

/// Householder factorization grown one column at a time.
///
/// Used for the Arnoldi-style construction of polynomial bases where each
/// new column depends on the previous orthonormal vector.
#[derive(Debug, Clone)]
pub struct IncrementalHouseholder {
    n: usize,
    // Reflector j acts on entries j.. and is stored with its squared norm.
    reflectors: Vec<(Vec<f64>, f64)>,
}

impl IncrementalHouseholder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            reflectors: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.reflectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reflectors.is_empty()
    }

    fn reflect(v: &[f64], vnorm_sq: f64, j: usize, x: &mut [f64]) {
        if vnorm_sq == 0.0 {
            return;
        }
        let tail = &mut x[j..];
        let s = 2.0 * dot(v, tail) / vnorm_sq;
        for (t, vi) in tail.iter_mut().zip(v) {
            *t -= s * vi;
        }
    }

    /// Appends column `a`; returns its coefficients (the new column of R).
    pub fn push_column(&mut self, a: &[f64]) -> Vec<f64> {
        assert_eq!(a.len(), self.n);
        let j = self.reflectors.len();
        assert!(j < self.n, "factorization is already complete");
        let mut w = a.to_vec();
        for (i, (v, vn)) in self.reflectors.iter().enumerate() {
            Self::reflect(v, *vn, i, &mut w);
        }
        let x = &w[j..];
        let alpha = norm_sq(x).sqrt();
        let beta = if x[0] >= 0.0 { -alpha } else { alpha };
        let mut v = x.to_vec();
        v[0] -= beta;
        let vn = norm_sq(&v);
        let mut r = w[..j].to_vec();
        r.push(if vn == 0.0 { x[0] } else { beta });
        self.reflectors.push((v, vn));
        r
    }

    /// Column `j` of the orthogonal factor `H_0 .. H_{m-1}`, for any `j < n`.
    pub fn q_column(&self, j: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.n];
        e[j] = 1.0;
        for (i, (v, vn)) in self.reflectors.iter().enumerate().rev() {
            Self::reflect(v, *vn, i, &mut e);
        }
        e
    }
}
