//! Smoothing and leave-one-out prediction filters as minimum-norm solutions
//! of the window's polynomial constraint system.

use crate::design::{build_nested_basis, graded_design_transpose, DesignSpec, NestedBasis};
use crate::error::{Result, SgError};
use crate::linalg::{dot, Matrix, ThinQr};

/// Smallest usable leverage complement `1 - [P]_kk`.
///
/// The complement is a sum of squared basis entries that each carry an
/// absolute error of a few ulps, so below roughly `eps^2` it is noise.
/// Full-order windows legitimately reach complements near 1e-23 at N = 40.
pub const MIN_LEVERAGE_COMPLEMENT: f64 = 1e-30;

/// All smoothing filters of one order; column `k` targets sample `k`.
#[derive(Debug, Clone)]
pub struct SmootherBank {
    pub coefficients: Matrix,
    pub order: usize,
}

impl SmootherBank {
    pub fn new(basis: &NestedBasis, order: usize) -> Result<Self> {
        Ok(Self {
            coefficients: basis.projection(order)?,
            order,
        })
    }

    pub fn filter(&self, k: usize) -> Vec<f64> {
        self.coefficients.column(k)
    }

    /// Smoothed value at sample `k`.
    pub fn apply(&self, k: usize, x: &[f64]) -> f64 {
        dot(&self.filter(k), x)
    }
}

/// Filter predicting sample `target_index` from the other samples only.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorFilter {
    pub coefficients: Vec<f64>,
    pub target_index: usize,
    pub order: usize,
}

impl PredictorFilter {
    pub fn apply(&self, x: &[f64]) -> f64 {
        dot(&self.coefficients, x)
    }

    /// Coefficients with the (zero) target entry removed, i.e. the filter
    /// as applied to the training samples.
    pub fn training_coefficients(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.target_index)
            .map(|(_, c)| *c)
            .collect()
    }
}

/// Column `k` of `Q Q^T` for the first `order + 1` basis vectors.
pub(crate) fn smoother_from_basis(basis: &NestedBasis, order: usize, k: usize) -> Vec<f64> {
    let n = basis.window_len();
    let mut h = vec![0.0; n];
    for j in 0..=order {
        let q = basis.q(j);
        let w = q[k];
        for (hi, qi) in h.iter_mut().zip(q) {
            *hi += w * qi;
        }
    }
    h
}

/// Smoothing filter of the given order for target sample `k` (0-based).
pub fn make_smoother(spec: &DesignSpec, order: usize, k: usize) -> Result<Vec<f64>> {
    spec.check_index(k)?;
    let spec = spec.with_max_order(order)?;
    let basis = build_nested_basis(&spec);
    Ok(smoother_from_basis(&basis, order, k))
}

/// Minimum-norm solution of the constraint system whose `k`th column is
/// replaced by zeros, solved through a QR factorization of its transpose.
///
/// `order` may be as large as `N - 1`, in which case the system is singular
/// and an error is returned.
pub fn make_predictor_direct(spec: &DesignSpec, order: usize, k: usize) -> Result<PredictorFilter> {
    spec.check_index(k)?;
    let n = spec.window_len();
    if order >= n {
        return Err(SgError::InvalidArgument(format!(
            "order {order} needs at least {} samples, window has {n}",
            order + 1
        )));
    }
    let scaled = spec.scaled_nodes();
    let coefficients = column_deleted_min_norm(&scaled, order, k)?;
    Ok(PredictorFilter {
        coefficients,
        target_index: k,
        order,
    })
}

pub(crate) fn column_deleted_min_norm(scaled: &[f64], order: usize, k: usize) -> Result<Vec<f64>> {
    let n = scaled.len();
    // Distinct nodes: the reduced system has full row rank iff enough samples remain.
    if order + 1 > n - 1 {
        return Err(SgError::SingularSystem { order, training: n - 1 });
    }
    let mut at = graded_design_transpose(scaled, order);
    let target: Vec<f64> = at.row(k).to_vec();
    for j in 0..=order {
        at[(k, j)] = 0.0;
    }
    let qr = ThinQr::factor(&at);
    // A_k h = c with A_k^T = Q R  =>  h = Q z, R^T z = c.
    let z = qr.solve_rt(&target);
    let mut h = qr.q.matvec(&z);
    h[k] = 0.0;
    Ok(h)
}

/// Predictor obtained by rescaling the smoother:
/// `h_p = (h_s - P_kk e_k) / (1 - P_kk)`.
pub fn make_predictor_from_smoother(spec: &DesignSpec, order: usize, k: usize) -> Result<PredictorFilter> {
    spec.check_index(k)?;
    let spec = spec.with_max_order(order)?;
    let basis = build_nested_basis(&spec);
    predictor_from_basis(&basis, order, k)
}

pub fn predictor_from_basis(basis: &NestedBasis, order: usize, k: usize) -> Result<PredictorFilter> {
    basis.spec().check_order(order)?;
    basis.spec().check_index(k)?;
    let complement = basis.leverage_complement(order)[k];
    if complement < MIN_LEVERAGE_COMPLEMENT {
        return Err(SgError::DegenerateLeverage {
            index: k,
            order,
            leverage: basis.leverage(order)[k],
        });
    }
    let gamma = 1.0 / complement;
    let mut coefficients: Vec<f64> = smoother_from_basis(basis, order, k)
        .into_iter()
        .map(|h| gamma * h)
        .collect();
    coefficients[k] = 0.0;
    Ok(PredictorFilter {
        coefficients,
        target_index: k,
        order,
    })
}
