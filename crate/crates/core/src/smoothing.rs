//! Sliding-window smoothing with a per-window order chosen by any registered rule.

use crate::design::{build_nested_basis, DesignSpec, NestedBasis};
use crate::error::{Result, SgError};
use crate::filters::smoother_from_basis;
use crate::linalg::dot;
use crate::selectors::OrderSelector;

/// Output for one input sample. `None` when no full window fits around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedSample {
    pub order: usize,
    pub value: f64,
}

/// Smooths a uniformly sampled series.
///
/// Sample `i` is estimated from the window `i - target_index ..
/// i - target_index + window_len`; samples whose window would leave the
/// series are skipped (no padding).
pub fn smooth_series(
    y: &[f64],
    window_len: usize,
    max_order: usize,
    target_index: usize,
    selector: &dyn OrderSelector,
) -> Result<Vec<Option<SmoothedSample>>> {
    if y.len() < window_len {
        return Err(SgError::InvalidArgument(format!(
            "series of {} samples is shorter than the window ({window_len})",
            y.len()
        )));
    }
    let spec = DesignSpec::new(window_len, max_order)?;
    spec.check_index(target_index)?;
    let basis = build_nested_basis(&spec);

    let mut out = vec![None; y.len()];
    for start in 0..=(y.len() - window_len) {
        let window = &y[start..start + window_len];
        out[start + target_index] = Some(smooth_window(window, &basis, target_index, selector)?);
    }
    Ok(out)
}

pub fn smooth_window(
    window: &[f64],
    basis: &NestedBasis,
    target_index: usize,
    selector: &dyn OrderSelector,
) -> Result<SmoothedSample> {
    let order = selector.select(window, basis)?;
    let h = smoother_from_basis(basis, order, target_index);
    Ok(SmoothedSample {
        order,
        value: dot(&h, window),
    })
}
