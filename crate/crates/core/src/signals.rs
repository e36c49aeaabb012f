//! Reference trajectories, square-wave dither and seeded sensor noise.

use std::f64::consts::PI;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference trajectory `r(t)`.
///
/// Every variant carries an `offset` added to the shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReferenceSpec {
    Constant {
        #[serde(default)]
        offset: f64,
    },
    /// `offset` before `at`, `offset + amplitude` from `at` on.
    Step {
        amplitude: f64,
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        at: f64,
    },
    /// `offset + rate * t`.
    Slope {
        rate: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Linear interpolation between `(time, value)` breakpoints, held flat
    /// before the first and after the last one.
    PiecewiseLinear {
        breakpoints: Vec<(f64, f64)>,
        #[serde(default)]
        offset: f64,
    },
    /// `offset + amplitude * sin(frequency * t)`, frequency in rad/s.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        offset: f64,
    },
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        ReferenceSpec::Constant { offset: 0.0 }
    }
}

impl ReferenceSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ReferenceSpec::Constant { offset } => finite("offset", *offset),
            ReferenceSpec::Step { amplitude, offset, at } => {
                finite("amplitude", *amplitude)?;
                finite("offset", *offset)?;
                finite("step time", *at)
            }
            ReferenceSpec::Slope { rate, offset } => {
                finite("slope rate", *rate)?;
                finite("offset", *offset)
            }
            ReferenceSpec::PiecewiseLinear { breakpoints, offset } => {
                finite("offset", *offset)?;
                if breakpoints.is_empty() {
                    return Err(Error::config(
                        "piecewise-linear reference needs at least one breakpoint",
                    ));
                }
                for (i, &(t, v)) in breakpoints.iter().enumerate() {
                    if !t.is_finite() || !v.is_finite() {
                        return Err(Error::config(format!("breakpoint {i} is not finite")));
                    }
                }
                if let Some(i) = breakpoints.windows(2).position(|w| w[1].0 <= w[0].0) {
                    return Err(Error::config(format!(
                        "breakpoint times must be strictly increasing (breakpoint {} at t = {} follows t = {})",
                        i + 1,
                        breakpoints[i + 1].0,
                        breakpoints[i].0
                    )));
                }
                Ok(())
            }
            ReferenceSpec::Sinusoid {
                amplitude,
                frequency,
                offset,
            } => {
                finite("amplitude", *amplitude)?;
                finite("offset", *offset)?;
                if !(*frequency > 0.0 && frequency.is_finite()) {
                    return Err(Error::config(format!(
                        "sinusoid frequency must be > 0, got {frequency}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// `(r, r_dot)` at `t`. Assumes the spec is valid.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match *self {
            ReferenceSpec::Constant { offset } => (offset, 0.0),
            ReferenceSpec::Step { amplitude, offset, at } => {
                if t >= at {
                    (offset + amplitude, 0.0)
                } else {
                    (offset, 0.0)
                }
            }
            ReferenceSpec::Slope { rate, offset } => (offset + rate * t, rate),
            ReferenceSpec::PiecewiseLinear {
                ref breakpoints,
                offset,
            } => {
                let (r, r_dot) = piecewise(breakpoints, t);
                (offset + r, r_dot)
            }
            ReferenceSpec::Sinusoid {
                amplitude,
                frequency,
                offset,
            } => (
                offset + amplitude * (frequency * t).sin(),
                amplitude * frequency * (frequency * t).cos(),
            ),
        }
    }
}

fn finite(what: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("{what} must be finite, got {v}")))
    }
}

// On a breakpoint the slope of the segment to the right is reported.
fn piecewise(bp: &[(f64, f64)], t: f64) -> (f64, f64) {
    let first = bp[0];
    let last = bp[bp.len() - 1];
    if t < first.0 {
        return (first.1, 0.0);
    }
    if t >= last.0 {
        return (last.1, 0.0);
    }
    // first.0 <= t < last.0, so a segment exists
    let i = bp.partition_point(|&(ti, _)| ti <= t) - 1;
    let (t0, v0) = bp[i];
    let (t1, v1) = bp[i + 1];
    let slope = (v1 - v0) / (t1 - t0);
    (v0 + slope * (t - t0), slope)
}

/// Validating evaluation of a reference: `(r, r_dot)` at `t >= 0`.
pub fn eval_reference(spec: &ReferenceSpec, t: f64) -> Result<(f64, f64)> {
    spec.validate()?;
    if !(t >= 0.0) {
        return Err(Error::config(format!("reference evaluated at negative time {t}")));
    }
    Ok(spec.eval(t))
}

/// Square dither voltage: `+amplitude` on the first half of every period,
/// `-amplitude` on the second.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterSpec {
    /// Volts.
    pub amplitude: f64,
    /// rad/s.
    pub frequency: f64,
}

impl JitterSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) {
            return Err(Error::config("jitter amplitude must be >= 0"));
        }
        if !(self.frequency > 0.0) {
            return Err(Error::config("jitter frequency must be > 0"));
        }
        Ok(())
    }
}

pub fn eval_jitter(spec: &JitterSpec, t: f64) -> f64 {
    if spec.amplitude == 0.0 {
        return 0.0;
    }
    let half_periods = (t * spec.frequency / PI).floor();
    if half_periods.rem_euclid(2.0) == 0.0 {
        spec.amplitude
    } else {
        -spec.amplitude
    }
}

/// Gaussian position-sensor noise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation in meters.
    #[serde(default)]
    pub sensor_std: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sensor_std >= 0.0 && self.sensor_std.is_finite()) {
            return Err(Error::config(format!(
                "sensor noise std must be finite and >= 0, got {}",
                self.sensor_std
            )));
        }
        Ok(())
    }
}

/// Noise sample number `step_index` of the stream selected by `spec.seed`.
///
/// Each index reads its own ChaCha stream, so the value is a pure function of
/// `(seed, step_index)` regardless of query order.
pub fn sample_noise(spec: &NoiseSpec, step_index: u64) -> f64 {
    if spec.sensor_std == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(step_index);
    let z: f64 = StandardNormal.sample(&mut rng);
    spec.sensor_std * z
}
