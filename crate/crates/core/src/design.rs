//! Constraint systems for polynomial smoothing windows and the nested
//! orthonormal basis that drives order selection.
//!
//! Row `r` of the constraint matrix holds the window nodes raised to the
//! power `r`; its row space is the space of polynomials of degree <= order
//! sampled on the window. The projector onto that space depends only on the
//! row space, so internally the nodes are mapped affinely onto [-1, 1] and
//! graded by Chebyshev polynomials before orthonormalization. That keeps the
//! Householder factorization well conditioned while the nested spans stay
//! exactly the same as for raw monomials.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SgError};
use crate::linalg::{IncrementalHouseholder, Matrix};

/// Largest accepted window length.
pub const MAX_WINDOW_LEN: usize = 512;

/// Window geometry and the largest candidate polynomial order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    window_len: usize,
    max_order: usize,
    nodes: Vec<f64>,
}

impl DesignSpec {
    /// Unit-spaced nodes `1..=window_len`.
    pub fn new(window_len: usize, max_order: usize) -> Result<Self> {
        let nodes = (1..=window_len).map(|n| n as f64).collect();
        Self::with_nodes(nodes, max_order)
    }

    /// Arbitrary strictly increasing nodes. Non-uniform spacing is supported
    /// by the leave-one-out identity but is less exercised than the uniform case.
    pub fn with_nodes(nodes: Vec<f64>, max_order: usize) -> Result<Self> {
        let window_len = nodes.len();
        if window_len < 3 {
            return Err(SgError::InvalidArgument(format!(
                "window length must be at least 3, got {window_len}"
            )));
        }
        if window_len > MAX_WINDOW_LEN {
            return Err(SgError::InvalidArgument(format!(
                "window length must be at most {MAX_WINDOW_LEN}, got {window_len}"
            )));
        }
        if max_order > window_len - 2 {
            return Err(SgError::InvalidArgument(format!(
                "max order {max_order} exceeds window length - 2 = {}",
                window_len - 2
            )));
        }
        if nodes.iter().any(|t| !t.is_finite()) {
            return Err(SgError::InvalidArgument("nodes must be finite".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SgError::InvalidArgument("nodes must be strictly increasing".into()));
        }
        Ok(Self {
            window_len,
            max_order,
            nodes,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Same nodes, different order ceiling.
    pub fn with_max_order(&self, max_order: usize) -> Result<Self> {
        Self::with_nodes(self.nodes.clone(), max_order)
    }

    pub(crate) fn check_order(&self, order: usize) -> Result<()> {
        if order > self.max_order {
            return Err(SgError::InvalidArgument(format!(
                "order {order} exceeds max order {}",
                self.max_order
            )));
        }
        Ok(())
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.window_len {
            return Err(SgError::IndexOutOfRange {
                index,
                len: self.window_len,
            });
        }
        Ok(())
    }

    /// Nodes mapped affinely onto [-1, 1].
    pub(crate) fn scaled_nodes(&self) -> Vec<f64> {
        let lo = self.nodes[0];
        let hi = self.nodes[self.window_len - 1];
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        self.nodes.iter().map(|t| (t - mid) / half).collect()
    }
}

/// Chebyshev values `T_0(s) .. T_order(s)`. Degree-graded, so the first `j`
/// entries span the same functions as `1, s, .., s^(j-1)`.
pub(crate) fn graded_row(s: f64, order: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), order + 1);
    out[0] = 1.0;
    if order >= 1 {
        out[1] = s;
    }
    for j in 2..=order {
        out[j] = 2.0 * s * out[j - 1] - out[j - 2];
    }
}

/// N x (order+1) matrix whose row `i` is the graded basis evaluated at node `i`.
/// This is the transpose of a constraint matrix with the same row space as
/// [`build_design_matrix`].
pub(crate) fn graded_design_transpose(scaled: &[f64], order: usize) -> Matrix {
    let mut m = Matrix::zeros(scaled.len(), order + 1);
    let mut row = vec![0.0; order + 1];
    for (i, &s) in scaled.iter().enumerate() {
        graded_row(s, order, &mut row);
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    m
}

/// The (order+1) x N constraint matrix with rows `nodes^0, nodes^1, ..`.
pub fn build_design_matrix(spec: &DesignSpec, order: usize) -> Result<Matrix> {
    spec.check_order(order)?;
    Ok(Matrix::from_fn(order + 1, spec.window_len, |r, c| {
        spec.nodes[c].powi(r as i32)
    }))
}

/// Orthonormal columns `q_0..q_P` spanning the nested polynomial subspaces of
/// a window, with the cumulative leverages of every order.
///
/// Immutable once built; one basis serves any number of windows sharing the
/// same node geometry.
#[derive(Debug, Clone)]
pub struct NestedBasis {
    spec: DesignSpec,
    // Column-major, column k at [k*N .. (k+1)*N].
    q: Vec<f64>,
    leverage: Vec<f64>,
    complement: Vec<f64>,
    // Orthonormal basis of the complement of the top order, kept when it is
    // no larger than the basis itself (column-major, N - P - 1 columns).
    tail: Option<Vec<f64>>,
}

impl NestedBasis {
    pub fn spec(&self) -> &DesignSpec {
        &self.spec
    }

    pub fn window_len(&self) -> usize {
        self.spec.window_len
    }

    pub fn max_order(&self) -> usize {
        self.spec.max_order
    }

    /// Basis vector for degree `k`.
    pub fn q(&self, k: usize) -> &[f64] {
        let n = self.spec.window_len;
        &self.q[k * n..(k + 1) * n]
    }

    /// Diagonal of the projector onto polynomials of degree <= `order`.
    pub fn leverage(&self, order: usize) -> &[f64] {
        let n = self.spec.window_len;
        &self.leverage[order * n..(order + 1) * n]
    }

    /// Diagonal of the projector onto the orthogonal complement, `1 - leverage`.
    ///
    /// Accumulated from the squared entries of an orthonormal basis of the
    /// complement rather than by subtraction, so it keeps full relative
    /// precision when the leverage is within a few ulps of 1.
    pub fn leverage_complement(&self, order: usize) -> &[f64] {
        let n = self.spec.window_len;
        &self.complement[order * n..(order + 1) * n]
    }

    /// Orthonormal basis of the orthogonal complement of the degree `<= P_max`
    /// space, stored only when its dimension `N - P_max - 1` does not exceed
    /// `P_max + 1`. Column `j` is at `[j*N .. (j+1)*N]`.
    pub fn complement_basis(&self) -> Option<&[f64]> {
        self.tail.as_deref()
    }

    /// N x (P+1) matrix of basis columns.
    pub fn q_columns(&self) -> Matrix {
        let n = self.spec.window_len;
        Matrix::from_fn(n, self.spec.max_order + 1, |i, k| self.q[k * n + i])
    }

    /// N x (P+1) matrix; column p is the leverage vector of order p.
    pub fn leverage_by_order(&self) -> Matrix {
        let n = self.spec.window_len;
        Matrix::from_fn(n, self.spec.max_order + 1, |i, k| self.leverage[k * n + i])
    }

    /// Orthogonal projector onto polynomials of degree <= `order`.
    pub fn projection(&self, order: usize) -> Result<Matrix> {
        self.spec.check_order(order)?;
        let n = self.spec.window_len;
        let mut p = Matrix::zeros(n, n);
        for k in 0..=order {
            let q = self.q(k);
            for i in 0..n {
                for j in 0..n {
                    p[(i, j)] += q[i] * q[j];
                }
            }
        }
        Ok(p)
    }
}

/// Orthonormalizes the constraint rows in increasing degree with unpivoted
/// Householder reflections.
///
/// Columns are generated Arnoldi-style: the degree-`j+1` column is the
/// previous basis vector multiplied elementwise by the scaled nodes. Its span
/// together with `q_0..q_j` is exactly the degree `<= j+1` polynomial space,
/// so the subspaces stay nested, and each new column is already nearly
/// orthogonal to the old ones, which avoids the exponential ill-conditioning
/// of monomial or Chebyshev columns on equispaced nodes.
pub fn build_nested_basis(spec: &DesignSpec) -> NestedBasis {
    let n = spec.window_len;
    let orders = spec.max_order + 1;
    let scaled = spec.scaled_nodes();

    let mut house = IncrementalHouseholder::new(n);
    let mut q = Vec::with_capacity(n * orders);
    let mut column = vec![1.0; n];
    for k in 0..orders {
        house.push_column(&column);
        let qk = house.q_column(k);
        for ((c, s), qi) in column.iter_mut().zip(&scaled).zip(&qk) {
            *c = s * qi;
        }
        q.extend_from_slice(&qk);
    }

    let mut leverage = Vec::with_capacity(n * orders);
    let mut running = vec![0.0; n];
    for k in 0..orders {
        for (d, qi) in running.iter_mut().zip(&q[k * n..(k + 1) * n]) {
            *d += qi * qi;
        }
        leverage.extend_from_slice(&running);
    }

    // Complement of the top order from the completion columns, then peel
    // basis vectors off downwards.
    let mut complement = vec![0.0; n * orders];
    let keep_tail = n - orders <= orders;
    let mut tail_cols = Vec::new();
    let mut tail = vec![0.0; n];
    for j in orders..n {
        let qj = house.q_column(j);
        for (t, v) in tail.iter_mut().zip(&qj) {
            *t += v * v;
        }
        if keep_tail {
            tail_cols.extend_from_slice(&qj);
        }
    }
    for k in (0..orders).rev() {
        complement[k * n..(k + 1) * n].copy_from_slice(&tail);
        for (t, qi) in tail.iter_mut().zip(&q[k * n..(k + 1) * n]) {
            *t += qi * qi;
        }
    }

    NestedBasis {
        spec: spec.clone(),
        q,
        leverage,
        complement,
        tail: keep_tail.then_some(tail_cols),
    }
}

/// `A^T (A A^T)^{-1} A` for polynomials of degree <= `order`, formed from the
/// orthonormal basis rather than an explicit inverse.
pub fn projection_matrix(spec: &DesignSpec, order: usize) -> Result<Matrix> {
    spec.check_order(order)?;
    build_nested_basis(&spec.with_max_order(order)?).projection(order)
}
