//! Ready-made configurations for the benchmark and rig scenarios.
//!
//! Rig experiments run both laws with the same output gain, the same
//! sliding-mode differentiator and the same dither and gravity bias, on the
//! synthetic voice-coil drive sampled at 10 kHz.

use std::f64::consts::PI;

use crate::controllers::{ControllerSpec, OndGains, PdGains, DEFAULT_MU};
use crate::differentiator::{EstimatorSpec, SmdGains};
use crate::plants::{DisturbanceSpec, PlantSpec, State2, VoiceCoilParams};
use crate::signals::{JitterSpec, NoiseSpec, ReferenceSpec};
use crate::sim::{Integrator, Sampling, SimConfig};

/// Output gain shared by OND (`k`) and PD (`gamma`) on the rig.
pub const RIG_GAIN: f64 = 1000.0;
/// Position sensor noise of the rig runs, m.
pub const RIG_NOISE_STD: f64 = 4e-6;
/// Dither: 0.2 V at 450 rad/s.
pub const RIG_JITTER: JitterSpec = JitterSpec {
    amplitude: 0.2,
    frequency: 450.0,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Law {
    Ond,
    Pd,
}

impl Law {
    pub fn label(self) -> &'static str {
        match self {
            Law::Ond => "ond",
            Law::Pd => "pd",
        }
    }
}

/// Regularized OND on the double integrator, continuous-time loop with
/// true-state feedback.
pub fn double_integrator_ond(k: f64, mu: f64, x0: State2, horizon: f64) -> SimConfig {
    SimConfig::double_integrator(ControllerSpec::Ond(OndGains::regularized(k, mu)), x0, horizon, 1e-5)
}

/// Rig controller for `law` with the lab drive's identified `(K, tau)`.
pub fn rig_controller(law: Law) -> ControllerSpec {
    let p = VoiceCoilParams::lab().motor;
    match law {
        Law::Ond => ControllerSpec::OndScaled(OndGains::scaled(RIG_GAIN, DEFAULT_MU, p.tau, p.gain)),
        Law::Pd => ControllerSpec::Pd(PdGains::new(RIG_GAIN, p.tau)),
    }
}

/// Voice-coil run of `law` tracking `reference`, starting at rest on
/// `r(0)`.
pub fn voice_coil(law: Law, reference: ReferenceSpec, horizon: f64, seed: u64) -> SimConfig {
    let (r0, _) = reference.eval(0.0);
    SimConfig {
        dt_plant: 1e-5,
        dt_control: 1e-4,
        horizon,
        integrator: Integrator::Rk4,
        sampling: Sampling::ZeroOrderHold,
        initial: State2::new(r0, 0.0),
        plant: PlantSpec::VoiceCoil(VoiceCoilParams::lab()),
        controller: rig_controller(law),
        estimator: EstimatorSpec::Smd(SmdGains::default()),
        reference,
        disturbance: DisturbanceSpec::None,
        noise: NoiseSpec {
            sensor_std: RIG_NOISE_STD,
            seed,
        },
        jitter: Some(RIG_JITTER),
        record_stride: 1,
    }
}

/// Sinusoid of `hz` around mid-stroke, 4 mm amplitude.
pub fn sine_reference(hz: f64) -> ReferenceSpec {
    ReferenceSpec::Sinusoid {
        amplitude: 0.004,
        frequency: 2.0 * PI * hz,
        offset: 0.006,
    }
}

/// Hold at 2 mm, ramp at 0.002 m/s for 4 s, hold at 10 mm.
pub fn slope_reference() -> ReferenceSpec {
    ReferenceSpec::PiecewiseLinear {
        breakpoints: vec![(0.0, 0.002), (0.5, 0.002), (4.5, 0.010)],
        offset: 0.0,
    }
}

/// Horizon of the slope run; the last second is the steady-state window.
pub const SLOPE_HORIZON: f64 = 8.0;

/// Step from 2 mm to 10 mm at 0.2 s.
pub fn step_reference() -> ReferenceSpec {
    ReferenceSpec::Step {
        amplitude: 0.008,
        offset: 0.002,
        at: 0.2,
    }
}

/// Push against the mover between 1.5 s and 2.5 s, N.
pub fn press_disturbance() -> DisturbanceSpec {
    DisturbanceSpec::Pulse {
        magnitude: -1.5,
        start: 1.5,
        end: 2.5,
    }
}

/// Piecewise reference for the double-integrator tracking figure.
pub fn piecewise_reference() -> ReferenceSpec {
    ReferenceSpec::PiecewiseLinear {
        breakpoints: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.0), (2.5, -0.5), (4.0, -0.5), (5.0, 0.0)],
        offset: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for law in [Law::Ond, Law::Pd] {
            for r in [
                sine_reference(0.5),
                sine_reference(2.0),
                slope_reference(),
                step_reference(),
            ] {
                voice_coil(law, r, 1.0, 0).validate().unwrap();
            }
        }
        double_integrator_ond(100.0, 1e-4, State2::new(1.0, 0.0), 1.0)
            .validate()
            .unwrap();
        press_disturbance().validate().unwrap();
        piecewise_reference().validate().unwrap();
    }

    #[test]
    fn slope_matches_rig_velocity() {
        let (_, v) = slope_reference().eval(2.0);
        assert!((v - 0.002).abs() < 1e-15);
        assert_eq!(slope_reference().eval(SLOPE_HORIZON).0, 0.010);
    }
}
