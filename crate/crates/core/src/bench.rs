//! Runtime comparison of brute-force and order-recursive cross-validation.
//!
//! Three variants are timed on identical seeded windows with `P_max = N - 2`:
//! the conventional per-fold refit, the recursive rule with the basis built
//! inside the timed region, and the recursive rule on a precomputed basis.
//! Before anything is timed, both implementations must agree on every
//! benchmark window.

use std::hint::black_box;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::design::{build_nested_basis, DesignSpec};
use crate::error::{Result, SgError};
use crate::select::{conventional_cv, select_order_cv};
use crate::signals::{NoiseModel, NoiseStream};

pub const MIN_REPS: usize = 1000;
pub const MIN_BENCH_WINDOW: usize = 5;
/// Agreement required between the two implementations before timing.
pub const AGREEMENT_RTOL: f64 = 1e-9;
const INPUTS_PER_SIZE: usize = 16;
// Each timed sample covers at least this long; short kernels are batched.
const MIN_SAMPLE: Duration = Duration::from_micros(20);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![5, 10, 15, 20],
            reps: MIN_REPS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub window_len: usize,
    /// Median microseconds per call.
    pub conventional_us: f64,
    pub efficient_precomputed_us: f64,
    pub efficient_with_basis_us: f64,
    /// Largest relative difference in prediction-error totals seen in the pre-check.
    pub max_rel_diff: f64,
}

impl BenchRow {
    pub fn speedup_precomputed(&self) -> f64 {
        self.conventional_us / self.efficient_precomputed_us
    }

    pub fn speedup_with_basis(&self) -> f64 {
        self.conventional_us / self.efficient_with_basis_us
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub reps: usize,
    pub seed: u64,
    pub environment: String,
}

impl BenchReport {
    /// `N,conventional_us,efficient_nogs_us,efficient_gs_us,speedup_nogs,speedup_gs`
    ///
    /// "nogs" is the precomputed-basis variant, "gs" builds the basis per call.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,conventional_us,efficient_nogs_us,efficient_gs_us,speedup_nogs,speedup_gs\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.4},{:.4},{:.4},{:.2},{:.2}\n",
                r.window_len,
                r.conventional_us,
                r.efficient_precomputed_us,
                r.efficient_with_basis_us,
                r.speedup_precomputed(),
                r.speedup_with_basis()
            ));
        }
        out
    }

    /// Seed-determined part of the run: the pre-check of every size.
    /// `N,inputs,seed,max_rel_diff`
    pub fn verification_csv(&self) -> String {
        let mut out = String::from("N,inputs,seed,max_rel_diff\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:e}\n",
                r.window_len, INPUTS_PER_SIZE, self.seed, r.max_rel_diff
            ));
        }
        out
    }
}

pub fn environment_descriptor() -> String {
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    format!(
        "{}-{}, {} hardware threads, {} build",
        std::env::consts::OS,
        std::env::consts::ARCH,
        threads,
        if cfg!(debug_assertions) { "debug" } else { "release" }
    )
}

/// Seeded benchmark windows for window length `n`.
pub fn bench_inputs(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let noise = NoiseModel::gaussian(1.0);
    (0..INPUTS_PER_SIZE)
        .map(|i| NoiseStream::new(seed, (n * INPUTS_PER_SIZE + i) as u64).draw(&noise, n))
        .collect()
}

/// Largest relative difference between the two implementations over `inputs`.
pub fn verify_agreement(spec: &DesignSpec, inputs: &[Vec<f64>]) -> Result<f64> {
    let basis = build_nested_basis(spec);
    let mut worst = 0.0f64;
    for x in inputs {
        let fast = select_order_cv(x, &basis)?;
        let slow = conventional_cv(x, spec)?;
        for (a, b) in fast.tpe_by_order.iter().zip(&slow.tpe_by_order) {
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
        if fast.best_order != slow.best_order {
            worst = worst.max(f64::INFINITY);
        }
    }
    if worst > AGREEMENT_RTOL {
        return Err(SgError::ImplementationMismatch {
            window_len: spec.window_len(),
            rel_diff: worst,
        });
    }
    Ok(worst)
}

/// Median per-call time in microseconds of `reps` timed samples.
pub fn median_call_us(reps: usize, mut call: impl FnMut(usize)) -> f64 {
    // Warm up and size the batch so one sample spans at least MIN_SAMPLE.
    let mut batch = 1usize;
    loop {
        let start = Instant::now();
        for i in 0..batch {
            call(i);
        }
        if start.elapsed() >= MIN_SAMPLE || batch >= 1 << 24 {
            break;
        }
        batch *= 2;
    }

    let mut samples: Vec<f64> = (0..reps)
        .map(|rep| {
            let start = Instant::now();
            for i in 0..batch {
                call(rep.wrapping_mul(batch).wrapping_add(i));
            }
            start.elapsed().as_secs_f64() * 1e6 / batch as f64
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    if samples.len().is_multiple_of(2) {
        0.5 * (samples[mid - 1] + samples[mid])
    } else {
        samples[mid]
    }
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    if config.sizes.is_empty() {
        return Err(SgError::InvalidArgument("no benchmark sizes given".into()));
    }
    if let Some(n) = config.sizes.iter().find(|&&n| n < MIN_BENCH_WINDOW) {
        return Err(SgError::InvalidArgument(format!(
            "benchmark window length {n} is below {MIN_BENCH_WINDOW}"
        )));
    }
    if config.reps < MIN_REPS {
        return Err(SgError::InvalidArgument(format!(
            "at least {MIN_REPS} repetitions are required, got {}",
            config.reps
        )));
    }

    // Check every size before timing any.
    let prepared = config
        .sizes
        .iter()
        .map(|&n| {
            let spec = DesignSpec::new(n, n - 2)?;
            let inputs = bench_inputs(n, config.seed);
            let diff = verify_agreement(&spec, &inputs)?;
            Ok((spec, inputs, diff))
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = prepared
        .into_iter()
        .map(|(spec, inputs, max_rel_diff)| {
            let m = inputs.len();
            let basis = build_nested_basis(&spec);
            let conventional_us = median_call_us(config.reps, |i| {
                black_box(conventional_cv(black_box(&inputs[i % m]), &spec).ok());
            });
            let efficient_precomputed_us = median_call_us(config.reps, |i| {
                black_box(select_order_cv(black_box(&inputs[i % m]), &basis).ok());
            });
            let efficient_with_basis_us = median_call_us(config.reps, |i| {
                let basis = build_nested_basis(black_box(&spec));
                black_box(select_order_cv(black_box(&inputs[i % m]), &basis).ok());
            });
            BenchRow {
                window_len: spec.window_len(),
                conventional_us,
                efficient_precomputed_us,
                efficient_with_basis_us,
                max_rel_diff,
            }
        })
        .collect();

    Ok(BenchReport {
        rows,
        reps: config.reps,
        seed: config.seed,
        environment: environment_descriptor(),
    })
}
