//! Continuous-time plant models.
//!
//! All right-hand sides are pure functions of their arguments. The matched
//! disturbance `xi` is always supplied by the caller.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::sgn;

/// Motion state: position `x1` (m) and velocity `x2` (m/s).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct State2 {
    pub x1: f64,
    pub x2: f64,
}

impl State2 {
    pub const ZERO: State2 = State2 { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        State2 { x1, x2 }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn norm(&self) -> f64 {
        self.x1.hypot(self.x2)
    }
}

/// First-order-lag motor `tau * x2' + x2 = K * u` behind a free integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotorParams {
    /// Input gain `K`.
    #[serde(alias = "K")]
    pub gain: f64,
    /// Dominant time constant in seconds.
    pub tau: f64,
}

impl MotorParams {
    /// Values identified on the voice-coil rig.
    pub const IDENTIFIED: MotorParams = MotorParams {
        gain: 0.0463,
        tau: 0.0076,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::config(format!("motor gain K must be > 0, got {}", self.gain)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::config(format!(
                "motor time constant must be > 0, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// Synthetic vertical voice-coil drive.
///
/// The viscous coefficient is derived as `sigma = mass / motor.tau`; the rig
/// data give the mass and the identified time constant but never sigma
/// itself, so this is an assumption of the model. With those numbers the
/// effective input gain `Ku * tau / mass` lands within 0.2 % of the
/// identified `K`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoiceCoilParams {
    pub motor: MotorParams,
    /// Moving mass, kg.
    pub mass: f64,
    /// Force constant `Ku = Psi / R`, N/V.
    pub force_constant: f64,
    /// m/s^2.
    pub gravity: f64,
    /// Peak of the position-periodic force ripple, N.
    #[serde(default)]
    pub ripple_amplitude: f64,
    /// Spatial period of the ripple, m.
    pub ripple_period: f64,
    /// Coulomb friction level, N.
    #[serde(default)]
    pub coulomb: f64,
    /// Sensor saturation, m. The sensor reads within `[0, stroke_limit]`.
    pub stroke_limit: f64,
    /// Constant matched force, N.
    #[serde(default)]
    pub xi_const: f64,
    /// Amplifier output range, V. `None` means unlimited.
    #[serde(default)]
    pub voltage_range: Option<(f64, f64)>,
}

impl VoiceCoilParams {
    /// Laboratory drive: R = 5.23 Ohm, Psi = 17.16 N/A, m = 0.538 kg,
    /// 0..10 V amplifier, 12 mm sensor window. Ripple and friction levels are
    /// illustrative.
    pub fn lab() -> Self {
        VoiceCoilParams {
            motor: MotorParams::IDENTIFIED,
            mass: 0.538,
            force_constant: 17.16 / 5.23,
            gravity: 9.8,
            ripple_amplitude: 0.3,
            ripple_period: 0.004,
            coulomb: 0.15,
            stroke_limit: 0.012,
            xi_const: 0.0,
            voltage_range: Some((0.0, 10.0)),
        }
    }

    /// Viscous coefficient `mass / tau`, N s/m.
    pub fn damping(&self) -> f64 {
        self.mass / self.motor.tau
    }

    /// Gain from volts to steady velocity, `Ku / sigma`.
    pub fn effective_gain(&self) -> f64 {
        self.force_constant / self.damping()
    }

    /// Voltage that holds the mover against gravity.
    pub fn gravity_bias(&self) -> f64 {
        self.mass * self.gravity / self.force_constant
    }

    pub fn clamp_voltage(&self, u: f64) -> f64 {
        match self.voltage_range {
            Some((lo, hi)) => u.clamp(lo, hi),
            None => u,
        }
    }

    pub fn ripple(&self, x1: f64) -> f64 {
        self.ripple_amplitude * (2.0 * PI * x1 / self.ripple_period).sin()
    }

    pub fn validate(&self) -> Result<()> {
        self.motor.validate()?;
        let positive = [
            ("mass", self.mass),
            ("force constant", self.force_constant),
            ("ripple period", self.ripple_period),
            ("stroke limit", self.stroke_limit),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("voice-coil {name} must be > 0, got {v}")));
            }
        }
        if !(self.coulomb >= 0.0) {
            return Err(Error::config("Coulomb friction must be >= 0"));
        }
        if let Some((lo, hi)) = self.voltage_range {
            if !(lo < hi) {
                return Err(Error::config(format!("empty voltage range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Plant selection for a simulation.
///
/// In config files `type = "voice-coil-lab"` selects
/// [`VoiceCoilParams::lab`] without spelling out every parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", from = "PlantRepr")]
pub enum PlantSpec {
    DoubleIntegrator,
    Motor(MotorParams),
    VoiceCoil(VoiceCoilParams),
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum PlantRepr {
    DoubleIntegrator,
    Motor(MotorParams),
    VoiceCoil(VoiceCoilParams),
    VoiceCoilLab,
}

impl From<PlantRepr> for PlantSpec {
    fn from(r: PlantRepr) -> Self {
        match r {
            PlantRepr::DoubleIntegrator => PlantSpec::DoubleIntegrator,
            PlantRepr::Motor(p) => PlantSpec::Motor(p),
            PlantRepr::VoiceCoil(p) => PlantSpec::VoiceCoil(p),
            PlantRepr::VoiceCoilLab => PlantSpec::VoiceCoil(VoiceCoilParams::lab()),
        }
    }
}

impl PlantSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PlantSpec::DoubleIntegrator => Ok(()),
            PlantSpec::Motor(p) => p.validate(),
            PlantSpec::VoiceCoil(p) => p.validate(),
        }
    }

    /// State derivative for plant input `input` (acceleration command, motor
    /// input or volts, by plant) and matched disturbance `xi`.
    pub fn rhs(&self, state: State2, input: f64, xi: f64) -> (f64, f64) {
        match self {
            PlantSpec::DoubleIntegrator => rhs_double_integrator(state, input + xi),
            PlantSpec::Motor(p) => rhs_motor(state, input, p, xi),
            PlantSpec::VoiceCoil(p) => rhs_voice_coil(state, input, p, xi),
        }
    }

    pub fn measure(&self, state: State2, noise: f64) -> f64 {
        match self {
            PlantSpec::VoiceCoil(p) => measure_position(state, Some(p), noise),
            _ => measure_position(state, None, noise),
        }
    }
}

pub fn rhs_double_integrator(state: State2, u: f64) -> (f64, f64) {
    (state.x2, u)
}

/// Lag motor with the disturbance matched to the input channel:
/// `tau * x2' = K * (u + xi) - x2`.
///
/// Under the scaled OND law this closes to
/// `tau x1'' + tau |x1'| x1' / (|x1| + mu) + K k x1 = K xi`, whose rest point
/// is `x1 = xi / k`.
pub fn rhs_motor(state: State2, u: f64, p: &MotorParams, xi: f64) -> (f64, f64) {
    (state.x2, (p.gain * (u + xi) - state.x2) / p.tau)
}

/// Voice-coil force balance for terminal voltage `voltage` and external force
/// `xi` (N). `p.xi_const` is added on top of `xi`.
pub fn rhs_voice_coil(state: State2, voltage: f64, p: &VoiceCoilParams, xi: f64) -> (f64, f64) {
    let force = p.force_constant * voltage - p.mass * p.gravity - p.ripple(state.x1) - p.coulomb * sgn(state.x2)
        + xi
        + p.xi_const;
    (state.x2, (force - p.damping() * state.x2) / p.mass)
}

/// Position sensor. The voice-coil sensor saturates to `[0, stroke_limit]`.
pub fn measure_position(state: State2, voice_coil: Option<&VoiceCoilParams>, noise: f64) -> f64 {
    let reading = state.x1 + noise;
    match voice_coil {
        Some(p) => reading.clamp(0.0, p.stroke_limit),
        None => reading,
    }
}

/// Matched disturbance `xi(t)`. Units follow the plant: acceleration for the
/// double integrator, input units for the motor, newtons for the voice coil.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DisturbanceSpec {
    #[default]
    None,
    Constant {
        magnitude: f64,
    },
    /// `magnitude` on `[start, end)`, zero elsewhere.
    Pulse {
        magnitude: f64,
        start: f64,
        end: f64,
    },
    /// Linear interpolation between `(time, value)` points, endpoints held.
    ManualProfile {
        profile: Vec<(f64, f64)>,
    },
}

impl DisturbanceSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DisturbanceSpec::None => Ok(()),
            DisturbanceSpec::Constant { magnitude } => {
                if magnitude.is_finite() {
                    Ok(())
                } else {
                    Err(Error::config("disturbance magnitude must be finite"))
                }
            }
            DisturbanceSpec::Pulse { magnitude, start, end } => {
                if !magnitude.is_finite() || !(start <= end) {
                    Err(Error::config(format!(
                        "pulse disturbance needs a finite magnitude and start <= end, got [{start}, {end})"
                    )))
                } else {
                    Ok(())
                }
            }
            DisturbanceSpec::ManualProfile { profile } => {
                if profile.is_empty() {
                    return Err(Error::config("manual disturbance profile is empty"));
                }
                if profile.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
                    return Err(Error::config("manual disturbance profile holds non-finite values"));
                }
                if profile.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::config(
                        "manual disturbance profile times must be strictly increasing",
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            DisturbanceSpec::None => 0.0,
            DisturbanceSpec::Constant { magnitude } => magnitude,
            DisturbanceSpec::Pulse { magnitude, start, end } => {
                if t >= start && t < end {
                    magnitude
                } else {
                    0.0
                }
            }
            DisturbanceSpec::ManualProfile { ref profile } => {
                let first = profile[0];
                let last = profile[profile.len() - 1];
                if t <= first.0 {
                    first.1
                } else if t >= last.0 {
                    last.1
                } else {
                    let i = profile.partition_point(|&(ti, _)| ti <= t) - 1;
                    let (t0, v0) = profile[i];
                    let (t1, v1) = profile[i + 1];
                    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
                }
            }
        }
    }
}
