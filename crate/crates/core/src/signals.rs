//! Test signals and seeded noise.
//!
//! Noise comes from ChaCha8 keyed by a base seed, with one independent
//! stream per trial index, so Monte Carlo results do not depend on the
//! order in which trials run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgError};

/// Zero-mean observation noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum NoiseModel {
    Gaussian {
        sigma_w_sq: f64,
    },
    /// Nominal Gaussian noise, replaced by a high-variance component with
    /// probability `p_i` independently per sample.
    Mixture {
        sigma_w_sq: f64,
        sigma_i_sq: f64,
        p_i: f64,
    },
}

impl NoiseModel {
    pub fn gaussian(sigma_w_sq: f64) -> Self {
        NoiseModel::Gaussian { sigma_w_sq }
    }

    pub fn mixture(sigma_w_sq: f64, sigma_i_sq: f64, p_i: f64) -> Self {
        NoiseModel::Mixture {
            sigma_w_sq,
            sigma_i_sq,
            p_i,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SgError::InvalidArgument(msg));
        match *self {
            NoiseModel::Gaussian { sigma_w_sq } => {
                if !(sigma_w_sq >= 0.0 && sigma_w_sq.is_finite()) {
                    return bad(format!("noise variance must be finite and >= 0, got {sigma_w_sq}"));
                }
            }
            NoiseModel::Mixture {
                sigma_w_sq,
                sigma_i_sq,
                p_i,
            } => {
                NoiseModel::gaussian(sigma_w_sq).validate()?;
                if !sigma_i_sq.is_finite() || sigma_i_sq <= sigma_w_sq {
                    return bad(format!(
                        "impulsive variance {sigma_i_sq} must exceed nominal variance {sigma_w_sq}"
                    ));
                }
                if !(0.0..=1.0).contains(&p_i) {
                    return bad(format!("impulse probability must be in [0, 1], got {p_i}"));
                }
            }
        }
        Ok(())
    }

    /// Variance of a single noise sample.
    pub fn variance(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma_w_sq } => sigma_w_sq,
            NoiseModel::Mixture {
                sigma_w_sq,
                sigma_i_sq,
                p_i,
            } => (1.0 - p_i) * sigma_w_sq + p_i * sigma_i_sq,
        }
    }

    fn components(&self) -> (f64, f64, f64) {
        match *self {
            NoiseModel::Gaussian { sigma_w_sq } => (sigma_w_sq.sqrt(), 0.0, 0.0),
            NoiseModel::Mixture {
                sigma_w_sq,
                sigma_i_sq,
                p_i,
            } => (sigma_w_sq.sqrt(), sigma_i_sq.sqrt(), p_i),
        }
    }
}

/// Random source for one trial.
///
/// Every sample consumes one uniform (the impulse indicator) and one
/// standard normal regardless of the model, so a mixture with `p_i = 0`
/// reproduces the Gaussian model draw for draw.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(base_seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Standard normal sample and impulse indicator uniform.
    fn next_pair(&mut self) -> (f64, f64) {
        let u: f64 = self.rng.random();
        let z: f64 = self.rng.sample(StandardNormal);
        (u, z)
    }

    pub fn fill(&mut self, model: &NoiseModel, out: &mut [f64]) {
        let (sd_w, sd_i, p_i) = model.components();
        for w in out.iter_mut() {
            let (u, z) = self.next_pair();
            *w = if u < p_i { sd_i * z } else { sd_w * z };
        }
    }

    pub fn draw(&mut self, model: &NoiseModel, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.fill(model, &mut out);
        out
    }
}

/// `n` i.i.d. noise samples, deterministic in `seed`.
pub fn draw_noise(model: &NoiseModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    model.validate()?;
    Ok(NoiseStream::new(seed, 0).draw(model, n))
}

/// Integer grid centered on zero: `-N/2..N/2-1` for even N, symmetric for odd N.
pub fn centered_grid(n: usize) -> Vec<f64> {
    let start = -((n / 2) as i64);
    (0..n as i64).map(|i| (start + i) as f64).collect()
}

/// `0.01 t^3 + 1` on the centered unit-spaced grid.
pub fn sample_cubic(n: usize) -> Vec<f64> {
    centered_grid(n).into_iter().map(cubic).collect()
}

pub fn cubic(t: f64) -> f64 {
    0.01 * t * t * t + 1.0
}

/// Position of a vehicle moving at 1 m/s for 6 s, decelerating at
/// 0.125 m/s^2 until it stops at 10 m (t = 14 s), then standing still.
pub fn sample_kinematic(t: f64) -> Result<f64> {
    if !(0.0..=20.0).contains(&t) {
        return Err(SgError::Domain {
            value: t,
            domain: "[0, 20]".into(),
        });
    }
    Ok(if t <= 6.0 {
        t
    } else if t <= 14.0 {
        let s = t - 6.0;
        6.0 + s - 0.0625 * s * s
    } else {
        10.0
    })
}

/// Noise-free signal family used by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum SignalSpec {
    /// `0.01 t^3 + 1` on the centered grid.
    Cubic,
    /// Polynomial with ascending coefficients on the centered grid.
    Polynomial { coefficients: Vec<f64> },
}

impl SignalSpec {
    pub fn samples(&self, n: usize) -> Vec<f64> {
        match self {
            SignalSpec::Cubic => sample_cubic(n),
            SignalSpec::Polynomial { coefficients } => centered_grid(n)
                .into_iter()
                .map(|t| coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c))
                .collect(),
        }
    }

    /// Degree of the underlying polynomial (highest nonzero coefficient).
    pub fn degree(&self) -> usize {
        match self {
            SignalSpec::Cubic => 3,
            SignalSpec::Polynomial { coefficients } => coefficients.iter().rposition(|c| *c != 0.0).unwrap_or(0),
        }
    }
}
