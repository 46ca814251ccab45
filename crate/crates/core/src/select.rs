//! Polynomial order selection by leave-one-out prediction error, plus the
//! two BIC baselines.
//!
//! The efficient path walks the nested basis once: after adding `q_p` it
//! has the smoothing residual and the leverages of order `p`, and the
//! leave-one-out residual of sample `k` is the smoothing residual divided by
//! `1 - leverage_k`. The conventional path refits every fold from scratch.

use serde::{Deserialize, Serialize};

use crate::design::{graded_design_transpose, DesignSpec, NestedBasis};
use crate::error::{Result, SgError};
use crate::filters::{column_deleted_min_norm, smoother_from_basis, MIN_LEVERAGE_COMPLEMENT};
use crate::linalg::{dot, norm_sq, Matrix, ThinQr};

/// Smoothing residual norms at or below this mean square are floored before
/// taking logarithms.
pub const RESIDUAL_FLOOR: f64 = 1e-300;

/// Per-order scores of a leave-one-out cross-validation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Total squared prediction error for each order.
    pub tpe_by_order: Vec<f64>,
    /// Squared norm of the smoothing residual for each order.
    pub residual_norm_by_order: Vec<f64>,
    /// N x (P+1); entry (k, p) is 1 / (1 - leverage_k) at order p.
    pub gamma_by_order: Matrix,
    pub best_order: usize,
}

impl SelectionResult {
    pub fn mean_gamma_by_order(&self) -> Vec<f64> {
        let g = &self.gamma_by_order;
        (0..g.cols())
            .map(|p| g.column(p).iter().sum::<f64>() / g.rows() as f64)
            .collect()
    }
}

/// Prediction-error totals within `TIE_RTOL * |x|^2` of the minimum count
/// as ties. Exact polynomial data leaves every order at or above its degree
/// with a rounding-level total; those must not outrank each other.
pub const TIE_RTOL: f64 = 1e-20;

/// Smallest order whose total is within the tie band of the minimum.
pub fn best_order_with_ties(tpe: &[f64], x: &[f64]) -> usize {
    let min = tpe.iter().cloned().fold(f64::INFINITY, f64::min);
    let band = min + TIE_RTOL * norm_sq(x);
    tpe.iter().position(|t| *t <= band).unwrap_or(0)
}

/// Index of the smallest value; ties resolve to the lowest index.
pub fn smallest_argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

fn check_window(x: &[f64], spec: &DesignSpec) -> Result<()> {
    if x.len() != spec.window_len() {
        return Err(SgError::InvalidArgument(format!(
            "window has {} samples, basis expects {}",
            x.len(),
            spec.window_len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SgError::InvalidArgument("window contains non-finite samples".into()));
    }
    Ok(())
}

/// Visits every order `0..=P_max` with its smoothing residual `x - P x` and
/// the residual's squared norm.
///
/// Normally the residual is accumulated upwards, `r_p = r_(p-1) - (q_p.x) q_p`.
/// When the basis keeps its complement (windows fitted close to
/// interpolation) the residual is instead built from the complement and
/// accumulated downwards, `r_(p-1) = r_p + (q_p.x) q_p`; near-interpolating
/// orders then have small residuals computed without cancellation, and the
/// norms are Parseval sums of squared coefficients. Orders are visited in
/// ascending order in the first case and descending order in the second.
pub(crate) fn residual_sweep(
    x: &[f64],
    basis: &NestedBasis,
    mut visit: impl FnMut(usize, &[f64], f64) -> Result<()>,
) -> Result<()> {
    let n = basis.window_len();
    let top = basis.max_order();
    match basis.complement_basis() {
        None => {
            let mut residual = x.to_vec();
            for p in 0..=top {
                let q = basis.q(p);
                let c = dot(q, x);
                for (r, qi) in residual.iter_mut().zip(q) {
                    *r -= c * qi;
                }
                visit(p, &residual, norm_sq(&residual))?;
            }
        }
        Some(tail) => {
            let mut residual = vec![0.0; n];
            let mut norm = 0.0;
            for u in tail.chunks_exact(n) {
                let c = dot(u, x);
                norm += c * c;
                for (r, ui) in residual.iter_mut().zip(u) {
                    *r += c * ui;
                }
            }
            for p in (0..=top).rev() {
                visit(p, &residual, norm)?;
                let q = basis.q(p);
                let c = dot(q, x);
                norm += c * c;
                for (r, qi) in residual.iter_mut().zip(q) {
                    *r += c * qi;
                }
            }
        }
    }
    Ok(())
}

/// Order-recursive leave-one-out selection over orders `0..=P_max` of the basis.
///
/// For each order the leave-one-out residual of sample `k` is the smoothing
/// residual divided by `1 - leverage_k`; the total of their squares is the
/// prediction error of that order. Cost is O(N P) given the basis.
pub fn select_order_cv(x: &[f64], basis: &NestedBasis) -> Result<SelectionResult> {
    check_window(x, basis.spec())?;
    let n = basis.window_len();
    let orders = basis.max_order() + 1;

    let mut tpe = vec![0.0; orders];
    let mut residual_norm = vec![0.0; orders];
    let mut gamma = Matrix::zeros(n, orders);

    residual_sweep(x, basis, |p, residual, norm| {
        let complement = basis.leverage_complement(p);
        let mut total = 0.0;
        for (i, (r, c)) in residual.iter().zip(complement).enumerate() {
            if *c < MIN_LEVERAGE_COMPLEMENT {
                return Err(SgError::DegenerateLeverage {
                    index: i,
                    order: p,
                    leverage: basis.leverage(p)[i],
                });
            }
            let pred_err = r / c;
            total += pred_err * pred_err;
            gamma[(i, p)] = 1.0 / c;
        }
        tpe[p] = total;
        residual_norm[p] = norm;
        Ok(())
    })?;

    Ok(SelectionResult {
        best_order: best_order_with_ties(&tpe, x),
        tpe_by_order: tpe,
        residual_norm_by_order: residual_norm,
        gamma_by_order: gamma,
    })
}

/// Leave-one-out selection by brute force: for every order and every fold
/// the column-deleted constraint system is rebuilt and solved for its
/// minimum-norm predictor.
pub fn conventional_cv(x: &[f64], spec: &DesignSpec) -> Result<SelectionResult> {
    check_window(x, spec)?;
    let n = spec.window_len();
    let orders = spec.max_order() + 1;
    let scaled = spec.scaled_nodes();

    let mut tpe = Vec::with_capacity(orders);
    let mut residual_norm = Vec::with_capacity(orders);
    let mut gamma = Matrix::zeros(n, orders);

    for p in 0..orders {
        let mut total = 0.0;
        for k in 0..n {
            let h = column_deleted_min_norm(&scaled, p, k)?;
            let err = x[k] - dot(&h, x);
            total += err * err;
        }
        tpe.push(total);

        // Full-system fit for the smoothing residual and leverages.
        let qr = ThinQr::factor(&graded_design_transpose(&scaled, p));
        let coeffs: Vec<f64> = (0..=p).map(|j| dot(&qr.q.column(j), x)).collect();
        let fitted = qr.q.matvec(&coeffs);
        let res: Vec<f64> = x.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        residual_norm.push(norm_sq(&res));
        for k in 0..n {
            gamma[(k, p)] = 1.0 / (1.0 - norm_sq(qr.q.row(k)));
        }
    }

    Ok(SelectionResult {
        best_order: best_order_with_ties(&tpe, x),
        tpe_by_order: tpe,
        residual_norm_by_order: residual_norm,
        gamma_by_order: gamma,
    })
}

/// Squared smoothing residual norms for orders `0..=P_max`.
pub fn residual_norms(x: &[f64], basis: &NestedBasis) -> Result<Vec<f64>> {
    check_window(x, basis.spec())?;
    let mut norms = vec![0.0; basis.max_order() + 1];
    residual_sweep(x, basis, |p, _, norm| {
        norms[p] = norm;
        Ok(())
    })?;
    Ok(norms)
}

/// BIC scores for large sample size and for high SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineScores {
    pub bic_n_by_order: Vec<f64>,
    pub bic_snr_by_order: Vec<f64>,
    pub best_order_bic_n: usize,
    pub best_order_bic_snr: usize,
}

/// Log mean-square residual, floored so that exact fits stay finite.
pub fn log_mean_square(residual_norm: f64, n: usize) -> f64 {
    let n = n as f64;
    (residual_norm.max(n * RESIDUAL_FLOOR) / n).ln()
}

pub fn bic_n(order: usize, n: usize, residual_norm: f64) -> f64 {
    let p1 = (order + 1) as f64;
    p1 * p1 * (n as f64).ln() + n as f64 * log_mean_square(residual_norm, n)
}

pub fn bic_snr(order: usize, n: usize, residual_norm: f64) -> f64 {
    let l = log_mean_square(residual_norm, n);
    n as f64 * l + f64::max(0.0, -((order + 2) as f64) * l)
}

pub fn score_bic(x: &[f64], basis: &NestedBasis) -> Result<BaselineScores> {
    let n = basis.window_len();
    let norms = residual_norms(x, basis)?;
    let bic_n_by_order: Vec<f64> = norms.iter().enumerate().map(|(p, r)| bic_n(p, n, *r)).collect();
    let bic_snr_by_order: Vec<f64> = norms.iter().enumerate().map(|(p, r)| bic_snr(p, n, *r)).collect();
    Ok(BaselineScores {
        best_order_bic_n: smallest_argmin(&bic_n_by_order),
        best_order_bic_snr: smallest_argmin(&bic_snr_by_order),
        bic_n_by_order,
        bic_snr_by_order,
    })
}

/// Smoothed value at sample `k` using the order chosen by cross-validation.
pub fn smooth_with_selected_order(x: &[f64], basis: &NestedBasis, k: usize) -> Result<(f64, usize)> {
    basis.spec().check_index(k)?;
    let order = select_order_cv(x, basis)?.best_order;
    let h = smoother_from_basis(basis, order, k);
    Ok((dot(&h, x), order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::build_nested_basis;

    #[test]
    fn tie_break_prefers_lowest_order() {
        assert_eq!(smallest_argmin(&[1.0, 0.0, 0.0, 2.0]), 1);
        assert_eq!(smallest_argmin(&[0.0, 0.0]), 0);
    }

    #[test]
    fn table_one_window() {
        let spec = DesignSpec::new(5, 2).unwrap();
        let basis = build_nested_basis(&spec);
        let x = [25.0, 4.0, -3.0, 4.0, 25.0];
        let res = select_order_cv(&x, &basis).unwrap();
        assert!((res.tpe_by_order[0] - 1071.875).abs() < 1e-10);
        assert!(res.tpe_by_order[2].abs() < 1e-20);
        assert_eq!(res.best_order, 2);
        // First fold at order 0: 25 - 15/2.
        let g = &res.gamma_by_order;
        let eps0 = (x[0] - x.iter().sum::<f64>() / 5.0) * g[(0, 0)];
        assert!((eps0 - 17.5).abs() < 1e-12);
    }

    #[test]
    fn constant_window_selects_zero() {
        let spec = DesignSpec::new(7, 5).unwrap();
        let basis = build_nested_basis(&spec);
        let res = select_order_cv(&[3.5; 7], &basis).unwrap();
        assert!(res.tpe_by_order[0] < 1e-25);
        assert_eq!(res.best_order, 0);
    }

    #[test]
    fn window_length_mismatch() {
        let basis = build_nested_basis(&DesignSpec::new(5, 2).unwrap());
        assert!(select_order_cv(&[1.0; 4], &basis).is_err());
        assert!(score_bic(&[1.0; 6], &basis).is_err());
    }

    #[test]
    fn bic_unit_residual() {
        for p in 0..4 {
            assert!((bic_n(p, 9, 9.0) - ((p + 1) * (p + 1)) as f64 * 9f64.ln()).abs() < 1e-12);
            assert_eq!(bic_snr(p, 9, 9.0), 0.0);
        }
    }

    #[test]
    fn bic_formula() {
        let r = 5.0 * std::f64::consts::E.powi(2);
        assert!((bic_n(1, 5, r) - (4.0 * 5f64.ln() + 10.0)).abs() < 1e-12);
        assert!(bic_n(0, 5, 0.0).is_finite());
        assert!(bic_snr(0, 5, 0.0).is_finite());
    }

    #[test]
    fn smooth_selected() {
        let basis = build_nested_basis(&DesignSpec::new(5, 2).unwrap());
        let (v, p) = smooth_with_selected_order(&[25.0, 4.0, -3.0, 4.0, 25.0], &basis, 2).unwrap();
        assert!((v + 3.0).abs() < 1e-12);
        assert_eq!(p, 2);
        let (v, p) = smooth_with_selected_order(&[-1.25; 5], &basis, 4).unwrap();
        assert!((v + 1.25).abs() < 1e-14);
        assert_eq!(p, 0);
    }
}
