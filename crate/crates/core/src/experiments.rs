//! Monte Carlo order-detection studies and the single-run demonstrations.
//!
//! Every trial owns noise stream `trial` of the base seed, shared across
//! axis points (common random numbers). Trials run in parallel on the
//! ambient rayon pool and are collected in trial order, so reports do not
//! depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{build_nested_basis, DesignSpec};
use crate::error::{Result, SgError};
use crate::select::select_order_cv;
use crate::selectors::{OrderSelector, SelectorRegistry};
use crate::signals::{centered_grid, sample_kinematic, NoiseModel, NoiseStream, SignalSpec};
use crate::smoothing::smooth_series;

pub const DEFAULT_TRIALS: usize = 2000;

pub fn default_methods() -> Vec<String> {
    ["cv", "bic-n", "bic-snr"].map(String::from).to_vec()
}

/// The quantity varied across a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum SweepAxis {
    WindowLens(Vec<usize>),
    /// Nominal noise variance.
    NoiseVariances(Vec<f64>),
    /// Impulse probability of a mixture model.
    ImpulseProbs(Vec<f64>),
    /// `(sigma_i_sq, p_i)` pairs of a mixture model.
    MixturePairs(Vec<(f64, f64)>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::WindowLens(_) => "window_len",
            SweepAxis::NoiseVariances(_) => "noise_variance",
            SweepAxis::ImpulseProbs(_) => "p_i",
            SweepAxis::MixturePairs(_) => "sigma_i_sq:p_i",
        }
    }

    fn len(&self) -> usize {
        match self {
            SweepAxis::WindowLens(v) => v.len(),
            SweepAxis::NoiseVariances(v) => v.len(),
            SweepAxis::ImpulseProbs(v) => v.len(),
            SweepAxis::MixturePairs(v) => v.len(),
        }
    }
}

/// Description of a detection-probability sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub axis: SweepAxis,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_signal")]
    pub signal: SignalSpec,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    /// Order counted as a correct detection; defaults to the signal's degree.
    #[serde(default)]
    pub true_order: Option<usize>,
    /// Window length for axes that do not vary it.
    #[serde(default = "default_window")]
    pub window_len: usize,
    /// Noise model; axes override the relevant parameter.
    #[serde(default = "default_noise")]
    pub noise: NoiseModel,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_signal() -> SignalSpec {
    SignalSpec::Cubic
}

fn default_window() -> usize {
    16
}

fn default_noise() -> NoiseModel {
    NoiseModel::gaussian(1.0)
}

impl ExperimentConfig {
    fn base(axis: SweepAxis) -> Self {
        Self {
            axis,
            trials: DEFAULT_TRIALS,
            base_seed: 0,
            signal: SignalSpec::Cubic,
            methods: default_methods(),
            true_order: None,
            window_len: default_window(),
            noise: default_noise(),
        }
    }

    /// Detection probability against window length at unit noise variance.
    pub fn detection_vs_n() -> Self {
        Self::base(SweepAxis::WindowLens(vec![6, 8, 10, 12, 16, 20, 24, 32, 40]))
    }

    /// Detection probability against noise variance, N = 6, 1e-1 .. 1e-10.
    pub fn detection_vs_variance() -> Self {
        let variances = (1..=10).map(|e| 10f64.powi(-e)).collect();
        Self {
            window_len: 6,
            ..Self::base(SweepAxis::NoiseVariances(variances))
        }
    }

    /// Impulsive-noise cases at N = 16: sigma_i^2 in {10, 100} x p_i in {0.01, 0.1}.
    pub fn robustness() -> Self {
        Self {
            window_len: 16,
            noise: NoiseModel::mixture(1.0, 10.0, 0.0),
            ..Self::base(SweepAxis::MixturePairs(vec![
                (10.0, 0.01),
                (100.0, 0.01),
                (10.0, 0.1),
                (100.0, 0.1),
            ]))
        }
    }

    pub fn true_order(&self) -> usize {
        self.true_order.unwrap_or_else(|| self.signal.degree())
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(SgError::InvalidArgument("trials must be at least 1".into()));
        }
        if self.axis.len() == 0 {
            return Err(SgError::InvalidArgument("sweep axis is empty".into()));
        }
        if self.methods.is_empty() {
            return Err(SgError::InvalidArgument("no selection methods given".into()));
        }
        self.noise.validate()
    }

    /// `(label, window length, noise model)` for every axis point.
    fn points(&self) -> Result<Vec<(String, usize, NoiseModel)>> {
        let pts: Vec<(String, usize, NoiseModel)> = match &self.axis {
            SweepAxis::WindowLens(ns) => ns.iter().map(|&n| (n.to_string(), n, self.noise)).collect(),
            SweepAxis::NoiseVariances(vs) => vs
                .iter()
                .map(|&v| {
                    let noise = match self.noise {
                        NoiseModel::Gaussian { .. } => NoiseModel::gaussian(v),
                        NoiseModel::Mixture { sigma_i_sq, p_i, .. } => NoiseModel::mixture(v, sigma_i_sq, p_i),
                    };
                    (v.to_string(), self.window_len, noise)
                })
                .collect(),
            SweepAxis::ImpulseProbs(ps) => {
                let (w, i) = self.mixture_variances()?;
                ps.iter()
                    .map(|&p| (p.to_string(), self.window_len, NoiseModel::mixture(w, i, p)))
                    .collect()
            }
            SweepAxis::MixturePairs(pairs) => {
                let (w, _) = self.mixture_variances()?;
                pairs
                    .iter()
                    .map(|&(i, p)| (format!("{i}:{p}"), self.window_len, NoiseModel::mixture(w, i, p)))
                    .collect()
            }
        };
        for (_, n, noise) in &pts {
            noise.validate()?;
            DesignSpec::new(*n, n.saturating_sub(2))?;
            if self.true_order() > n - 2 {
                return Err(SgError::InvalidArgument(format!(
                    "true order {} is not a candidate for window length {n}",
                    self.true_order()
                )));
            }
        }
        Ok(pts)
    }

    fn mixture_variances(&self) -> Result<(f64, f64)> {
        match self.noise {
            NoiseModel::Mixture {
                sigma_w_sq, sigma_i_sq, ..
            } => Ok((sigma_w_sq, sigma_i_sq)),
            NoiseModel::Gaussian { .. } => Err(SgError::InvalidArgument(
                "impulse sweeps need a mixture noise model".into(),
            )),
        }
    }
}

/// Result of one selection method at one axis point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: String,
    pub probability: f64,
    /// Monte Carlo standard error `sqrt(p (1 - p) / trials)`.
    pub std_error: f64,
    pub trials: usize,
    /// Count of trials that selected each order `0..=N-2`.
    pub histogram: Vec<u64>,
}

impl MethodOutcome {
    fn from_histogram(method: String, histogram: Vec<u64>, true_order: usize, trials: usize) -> Self {
        let probability = histogram[true_order] as f64 / trials as f64;
        Self {
            method,
            std_error: (probability * (1.0 - probability) / trials as f64).sqrt(),
            probability,
            trials,
            histogram,
        }
    }

    /// Mass strictly above and strictly below `order`.
    pub fn mass_above_below(&self, order: usize) -> (u64, u64) {
        let above = self.histogram.iter().skip(order + 1).sum();
        let below = self.histogram.iter().take(order).sum();
        (above, below)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub axis_value: String,
    pub window_len: usize,
    pub noise: NoiseModel,
    pub outcomes: Vec<MethodOutcome>,
}

impl PointReport {
    pub fn outcome(&self, method: &str) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|o| o.method == method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub axis: String,
    pub true_order: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub points: Vec<PointReport>,
}

impl ExperimentReport {
    /// One row per axis point and method: `axis_value,method,prob,stderr,trials`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis_value,method,prob,stderr,trials\n");
        for p in &self.points {
            for o in &p.outcomes {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    p.axis_value, o.method, o.probability, o.std_error, o.trials
                ));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `sqrt(se_a^2 + se_b^2)`.
pub fn combined_se(a: &MethodOutcome, b: &MethodOutcome) -> f64 {
    (a.std_error * a.std_error + b.std_error * b.std_error).sqrt()
}

/// Runs every axis point of `config` with the named selectors.
pub fn run_sweep(config: &ExperimentConfig, registry: &SelectorRegistry) -> Result<ExperimentReport> {
    config.validate()?;
    let selectors = registry.resolve(&config.methods)?;
    let true_order = config.true_order();
    let points = config
        .points()?
        .into_iter()
        .map(|(label, n, noise)| {
            run_point(config, &selectors, n, &noise).map(|histograms| PointReport {
                axis_value: label,
                window_len: n,
                noise,
                outcomes: selectors
                    .iter()
                    .zip(histograms)
                    .map(|(s, h)| MethodOutcome::from_histogram(s.name().to_string(), h, true_order, config.trials))
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentReport {
        axis: config.axis.name().to_string(),
        true_order,
        trials: config.trials,
        base_seed: config.base_seed,
        points,
    })
}

fn run_point(
    config: &ExperimentConfig,
    selectors: &[std::sync::Arc<dyn OrderSelector>],
    n: usize,
    noise: &NoiseModel,
) -> Result<Vec<Vec<u64>>> {
    let spec = DesignSpec::with_nodes(centered_grid(n), n - 2)?;
    let basis = build_nested_basis(&spec);
    let clean = config.signal.samples(n);

    let picks: Vec<Vec<usize>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut y = NoiseStream::new(config.base_seed, trial as u64).draw(noise, n);
            for (yi, xi) in y.iter_mut().zip(&clean) {
                *yi += xi;
            }
            selectors.iter().map(|s| s.select(&y, &basis)).collect()
        })
        .collect::<Result<_>>()?;

    let mut histograms = vec![vec![0u64; n - 1]; selectors.len()];
    for trial in &picks {
        for (h, &order) in histograms.iter_mut().zip(trial) {
            h[order] += 1;
        }
    }
    Ok(histograms)
}

/// Detection probability against window length (cubic signal by default).
pub fn run_detection_vs_n(config: &ExperimentConfig, registry: &SelectorRegistry) -> Result<ExperimentReport> {
    match &config.axis {
        SweepAxis::WindowLens(ns) => {
            if let Some(n) = ns.iter().find(|&&n| n < 5) {
                return Err(SgError::InvalidArgument(format!(
                    "window length {n} cannot reach order 3; use N >= 5"
                )));
            }
        }
        _ => {
            return Err(SgError::InvalidArgument(
                "detection-vs-N needs a window length axis".into(),
            ))
        }
    }
    run_sweep(config, registry)
}

/// Detection probability against nominal noise variance at fixed N.
pub fn run_detection_vs_variance(config: &ExperimentConfig, registry: &SelectorRegistry) -> Result<ExperimentReport> {
    if !matches!(config.axis, SweepAxis::NoiseVariances(_)) {
        return Err(SgError::InvalidArgument(
            "detection-vs-variance needs a noise variance axis".into(),
        ));
    }
    run_sweep(config, registry)
}

/// Detection probability and order histograms under impulsive noise.
pub fn run_robustness_sweep(config: &ExperimentConfig, registry: &SelectorRegistry) -> Result<ExperimentReport> {
    if !matches!(config.noise, NoiseModel::Mixture { .. }) {
        return Err(SgError::InvalidArgument(
            "robustness sweeps need a mixture noise model".into(),
        ));
    }
    if matches!(config.axis, SweepAxis::NoiseVariances(_)) {
        return Err(SgError::InvalidArgument(
            "robustness sweeps vary window length or impulse parameters".into(),
        ));
    }
    run_sweep(config, registry)
}

/// Per-order quantities of one noisy realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub order: usize,
    pub residual_norm: f64,
    pub mean_gamma: f64,
    pub tpe: f64,
}

/// Smoothing residual, mean leverage weight and prediction error over
/// orders `0..=N-2` for one noisy cubic window (unit noise variance).
pub fn run_bias_variance_trace(n: usize, seed: u64) -> Result<Vec<TraceRow>> {
    bias_variance_trace_with(n, &NoiseModel::gaussian(1.0), seed)
}

pub fn bias_variance_trace_with(n: usize, noise: &NoiseModel, seed: u64) -> Result<Vec<TraceRow>> {
    noise.validate()?;
    let spec = DesignSpec::with_nodes(centered_grid(n), n.saturating_sub(2))?;
    let basis = build_nested_basis(&spec);
    let mut y = NoiseStream::new(seed, 0).draw(noise, n);
    for (yi, xi) in y.iter_mut().zip(SignalSpec::Cubic.samples(n)) {
        *yi += xi;
    }
    let res = select_order_cv(&y, &basis)?;
    let mean_gamma = res.mean_gamma_by_order();
    Ok((0..=spec.max_order())
        .map(|p| TraceRow {
            order: p,
            residual_norm: res.residual_norm_by_order[p],
            mean_gamma: mean_gamma[p],
            tpe: res.tpe_by_order[p],
        })
        .collect())
}

/// Settings of the sliding-window kinematic demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    pub window_len: usize,
    pub max_order: usize,
    pub sample_period: f64,
    /// Variance of the additive Gaussian noise (default 0.01). Zero gives the
    /// clean profile.
    pub noise_variance: f64,
    pub seed: u64,
    pub method: String,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            window_len: 5,
            max_order: 3,
            sample_period: 0.5,
            noise_variance: 0.01,
            seed: 0,
            method: "cv".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoSample {
    pub t: f64,
    pub y: f64,
    pub x_true: f64,
    /// `None` near the ends where no full window exists.
    pub order: Option<usize>,
    pub smoothed: Option<f64>,
}

/// Samples the kinematic profile on `[0, 20]`, adds noise, and smooths every
/// interior sample with a centered window of per-sample selected order.
pub fn run_kinematic_demo(config: &DemoConfig, registry: &SelectorRegistry) -> Result<Vec<DemoSample>> {
    if config.window_len.is_multiple_of(2) {
        return Err(SgError::InvalidArgument("demo window length must be odd".into()));
    }
    if !(config.sample_period > 0.0 && config.sample_period.is_finite()) {
        return Err(SgError::InvalidArgument("sample period must be positive".into()));
    }
    let noise = NoiseModel::gaussian(config.noise_variance);
    noise.validate()?;
    let selector = registry.get(&config.method)?;

    let count = (20.0 / config.sample_period + 1e-9).floor() as usize + 1;
    let t: Vec<f64> = (0..count).map(|i| i as f64 * config.sample_period).collect();
    let x: Vec<f64> = t.iter().map(|&ti| sample_kinematic(ti)).collect::<Result<_>>()?;
    let w = NoiseStream::new(config.seed, 0).draw(&noise, count);
    let y: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a + b).collect();

    let smoothed = smooth_series(
        &y,
        config.window_len,
        config.max_order,
        config.window_len / 2,
        selector.as_ref(),
    )?;
    Ok((0..count)
        .map(|i| DemoSample {
            t: t[i],
            y: y[i],
            x_true: x[i],
            order: smoothed[i].map(|s| s.order),
            smoothed: smoothed[i].map(|s| s.value),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(axis: SweepAxis) -> ExperimentConfig {
        ExperimentConfig {
            trials: 50,
            ..ExperimentConfig::base(axis)
        }
    }

    #[test]
    fn histogram_matches_probability() {
        let reg = SelectorRegistry::with_builtins();
        let report = run_sweep(&small(SweepAxis::WindowLens(vec![8, 12])), &reg).unwrap();
        for p in &report.points {
            for o in &p.outcomes {
                assert_eq!(o.histogram.iter().sum::<u64>(), 50);
                assert_eq!(o.histogram.len(), p.window_len - 1);
                assert_eq!(o.probability, o.histogram[3] as f64 / 50.0);
                assert!((0.0..=1.0).contains(&o.probability));
            }
        }
    }

    #[test]
    fn rejects_small_windows() {
        let reg = SelectorRegistry::with_builtins();
        assert!(run_detection_vs_n(&small(SweepAxis::WindowLens(vec![4, 8])), &reg).is_err());
    }

    #[test]
    fn rejects_unknown_method() {
        let reg = SelectorRegistry::with_builtins();
        let mut cfg = small(SweepAxis::WindowLens(vec![8]));
        cfg.methods = vec!["aic".into()];
        assert!(matches!(run_sweep(&cfg, &reg), Err(SgError::UnknownSelector(_))));
    }

    #[test]
    fn zero_trials() {
        let reg = SelectorRegistry::with_builtins();
        let mut cfg = small(SweepAxis::WindowLens(vec![8]));
        cfg.trials = 0;
        assert!(run_sweep(&cfg, &reg).is_err());
    }

    #[test]
    fn impulse_axis_needs_mixture() {
        let reg = SelectorRegistry::with_builtins();
        assert!(run_sweep(&small(SweepAxis::ImpulseProbs(vec![0.1])), &reg).is_err());
        assert!(run_robustness_sweep(&small(SweepAxis::WindowLens(vec![8])), &reg).is_err());
    }

    #[test]
    fn csv_layout() {
        let reg = SelectorRegistry::with_builtins();
        let report = run_sweep(&small(SweepAxis::WindowLens(vec![8])), &reg).unwrap();
        let csv = report.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "axis_value,method,prob,stderr,trials");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("8,cv,"));
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ExperimentConfig::robustness();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), cfg);
        let minimal: ExperimentConfig =
            serde_json::from_str(r#"{"axis": {"kind": "window_lens", "values": [6, 8]}}"#).unwrap();
        assert_eq!(minimal.trials, DEFAULT_TRIALS);
        assert_eq!(minimal.true_order(), 3);
    }

    #[test]
    fn demo_shape() {
        let reg = SelectorRegistry::with_builtins();
        let samples = run_kinematic_demo(&DemoConfig::default(), &reg).unwrap();
        assert_eq!(samples.len(), 41);
        assert!(samples[0].order.is_none() && samples[1].order.is_none());
        assert!(samples[2].order.is_some());
        assert!(samples[40].order.is_none());
        let even = DemoConfig {
            window_len: 6,
            ..DemoConfig::default()
        };
        assert!(run_kinematic_demo(&even, &reg).is_err());
    }
}
