//! Savitzky–Golay smoothing with per-window polynomial order selection by
//! leave-one-out cross-validation.
//!
//! The leave-one-out prediction error of every sample follows from the
//! smoothing residual and the leverage of that sample, so all folds of all
//! candidate orders come out of one pass over a nested orthonormal basis.
//! A brute-force refitting implementation and two BIC rules are included
//! for comparison; all rules sit behind [`OrderSelector`] and are looked up
//! by name in a [`SelectorRegistry`].
//!
//! ```
//! use sgcv_core::{build_nested_basis, select_order_cv, DesignSpec};
//!
//! let spec = DesignSpec::new(5, 2).unwrap();
//! let basis = build_nested_basis(&spec);
//! let result = select_order_cv(&[25.0, 4.0, -3.0, 4.0, 25.0], &basis).unwrap();
//! assert_eq!(result.best_order, 2);
//! ```

pub mod bench;
pub mod design;
pub mod error;
pub mod experiments;
pub mod filters;
pub mod linalg;
pub mod select;
pub mod selectors;
pub mod signals;
pub mod smoothing;

pub use design::{build_design_matrix, build_nested_basis, projection_matrix, DesignSpec, NestedBasis};
pub use error::{Result, SgError};
pub use filters::{make_predictor_direct, make_predictor_from_smoother, make_smoother, PredictorFilter, SmootherBank};
pub use linalg::Matrix;
pub use select::{
    conventional_cv, score_bic, select_order_cv, smooth_with_selected_order, BaselineScores, SelectionResult,
};
pub use selectors::{OrderSelector, SelectorRegistry};
pub use signals::{draw_noise, sample_cubic, sample_kinematic, NoiseModel, SignalSpec};
