//! Order-selection rules behind a common trait, looked up by name.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::design::NestedBasis;
use crate::error::{Result, SgError};
use crate::select::{conventional_cv, score_bic, select_order_cv};

/// A rule mapping one window of samples to a polynomial order in `0..=P_max`.
pub trait OrderSelector: Send + Sync {
    /// Registry key, e.g. `"cv"`.
    fn name(&self) -> &'static str;

    /// Human-readable label used in reports.
    fn label(&self) -> &'static str {
        self.name()
    }

    fn select(&self, x: &[f64], basis: &NestedBasis) -> Result<usize>;
}

/// Efficient leave-one-out cross-validation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CrossValidation;

impl OrderSelector for CrossValidation {
    fn name(&self) -> &'static str {
        "cv"
    }

    fn label(&self) -> &'static str {
        "CV"
    }

    fn select(&self, x: &[f64], basis: &NestedBasis) -> Result<usize> {
        Ok(select_order_cv(x, basis)?.best_order)
    }
}

/// Leave-one-out cross-validation refitting every fold; same answer, O(N^5).
#[derive(Debug, Default, Clone, Copy)]
pub struct ConventionalCrossValidation;

impl OrderSelector for ConventionalCrossValidation {
    fn name(&self) -> &'static str {
        "cv-conventional"
    }

    fn label(&self) -> &'static str {
        "CV (conventional)"
    }

    fn select(&self, x: &[f64], basis: &NestedBasis) -> Result<usize> {
        Ok(conventional_cv(x, basis.spec())?.best_order)
    }
}

/// BIC, large-sample variant.
#[derive(Debug, Default, Clone, Copy)]
pub struct BicN;

impl OrderSelector for BicN {
    fn name(&self) -> &'static str {
        "bic-n"
    }

    fn label(&self) -> &'static str {
        "BIC_N"
    }

    fn select(&self, x: &[f64], basis: &NestedBasis) -> Result<usize> {
        Ok(score_bic(x, basis)?.best_order_bic_n)
    }
}

/// BIC, high-SNR variant.
#[derive(Debug, Default, Clone, Copy)]
pub struct BicSnr;

impl OrderSelector for BicSnr {
    fn name(&self) -> &'static str {
        "bic-snr"
    }

    fn label(&self) -> &'static str {
        "BIC_SNR"
    }

    fn select(&self, x: &[f64], basis: &NestedBasis) -> Result<usize> {
        Ok(score_bic(x, basis)?.best_order_bic_snr)
    }
}

/// Name -> selector map.
#[derive(Clone, Default)]
pub struct SelectorRegistry {
    selectors: BTreeMap<String, Arc<dyn OrderSelector>>,
}

impl SelectorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding every built-in rule.
    pub fn with_builtins() -> Self {
        let mut reg = Self::new();
        reg.register(Arc::new(CrossValidation));
        reg.register(Arc::new(ConventionalCrossValidation));
        reg.register(Arc::new(BicN));
        reg.register(Arc::new(BicSnr));
        reg
    }

    /// Adds a selector, replacing any previous one with the same name.
    pub fn register(&mut self, selector: Arc<dyn OrderSelector>) {
        self.selectors.insert(selector.name().to_string(), selector);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn OrderSelector>> {
        self.selectors
            .get(name)
            .cloned()
            .ok_or_else(|| SgError::UnknownSelector(name.to_string()))
    }

    /// Resolves a list of names, preserving order.
    pub fn resolve<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<Arc<dyn OrderSelector>>> {
        names.iter().map(|n| self.get(n.as_ref())).collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.selectors.keys().map(String::as_str)
    }
}

impl fmt::Debug for SelectorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}
