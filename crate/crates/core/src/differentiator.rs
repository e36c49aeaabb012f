//! Velocity estimation from sampled position.
//!
//! [`smd_step`] is a second-order robust sliding-mode differentiator
//! discretized with explicit Euler; [`LpfState`] is the classic alternative,
//! a backward difference smoothed by a second-order Butterworth low-pass.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::sgn;

/// Differentiator coefficients with Lipschitz scaling `rho`.
///
/// The effective gains are `kappa_n = k_n * rho^(n + 1)` for `n = 0, 1, 2`,
/// so the switching gain carries `rho^3`, the Lipschitz bound on the third
/// derivative of the input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmdGains {
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub rho: f64,
}

impl Default for SmdGains {
    fn default() -> Self {
        SmdGains {
            k0: 3.1,
            k1: 3.2,
            k2: 1.1,
            rho: 8.0,
        }
    }
}

impl SmdGains {
    pub fn with_rho(rho: f64) -> Self {
        SmdGains {
            rho,
            ..SmdGains::default()
        }
    }

    pub fn kappas(&self) -> [f64; 3] {
        [
            self.k0 * self.rho,
            self.k1 * self.rho.powi(2),
            self.k2 * self.rho.powi(3),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k0", self.k0), ("k1", self.k1), ("k2", self.k2), ("rho", self.rho)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("differentiator {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Estimates of position, velocity and acceleration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SmdState {
    pub y0: f64,
    pub y1: f64,
    pub y2: f64,
}

impl SmdState {
    /// Starts on the first measurement with zero derivatives.
    pub fn init(x1_meas: f64) -> Self {
        SmdState {
            y0: x1_meas,
            y1: 0.0,
            y2: 0.0,
        }
    }
}

/// One explicit-Euler step of
///
/// ```text
/// y0' = -kappa0 |eps|^(2/3) sign(eps) + y1
/// y1' = -kappa1 |eps|^(1/3) sign(eps) + y2
/// y2' = -kappa2 sign(eps)
/// ```
///
/// with `eps = y0 - x1_meas`.
pub fn smd_step(s: SmdState, x1_meas: f64, g: &SmdGains, dt: f64) -> SmdState {
    let [kappa0, kappa1, kappa2] = g.kappas();
    let eps = s.y0 - x1_meas;
    let (mag, sign) = (eps.abs(), sgn(eps));
    let d0 = -kappa0 * mag.powf(2.0 / 3.0) * sign + s.y1;
    let d1 = -kappa1 * mag.cbrt() * sign + s.y2;
    let d2 = -kappa2 * sign;
    SmdState {
        y0: s.y0 + dt * d0,
        y1: s.y1 + dt * d1,
        y2: s.y2 + dt * d2,
    }
}

/// Backward difference followed by a bilinear-transformed (pre-warped)
/// second-order Butterworth low-pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpfState {
    pub cutoff_hz: f64,
    dt: f64,
    b: [f64; 3],
    a: [f64; 2],
    // transposed direct form II
    z: [f64; 2],
    prev: Option<f64>,
}

impl LpfState {
    pub fn new(cutoff_hz: f64, dt: f64) -> Result<Self> {
        let (b, a) = butterworth2(cutoff_hz, dt)?;
        Ok(LpfState {
            cutoff_hz,
            dt,
            b,
            a,
            z: [0.0; 2],
            prev: None,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Feeds one measurement, returns the filtered velocity. The first call
    /// has no previous sample and differentiates to zero.
    pub fn step(&mut self, x1_meas: f64) -> f64 {
        let raw = match self.prev {
            Some(p) => (x1_meas - p) / self.dt,
            None => 0.0,
        };
        self.prev = Some(x1_meas);
        let y = self.b[0] * raw + self.z[0];
        self.z[0] = self.b[1] * raw - self.a[0] * y + self.z[1];
        self.z[1] = self.b[2] * raw - self.a[1] * y;
        y
    }

    /// Complex response `H(e^{j omega dt})` of the differentiate-then-filter
    /// chain, for phase-lag comparisons.
    pub fn frequency_response(&self, omega: f64) -> num_complex::Complex64 {
        use num_complex::Complex64;
        let z1 = Complex64::from_polar(1.0, -omega * self.dt);
        let z2 = z1 * z1;
        let filt = (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (1.0 + self.a[0] * z1 + self.a[1] * z2);
        filt * (1.0 - z1) / self.dt
    }
}

fn butterworth2(cutoff_hz: f64, dt: f64) -> Result<([f64; 3], [f64; 2])> {
    if !(dt > 0.0) {
        return Err(Error::config(format!("sample time must be > 0, got {dt}")));
    }
    let nyquist = 0.5 / dt;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(Error::config(format!(
            "low-pass cutoff {cutoff_hz} Hz must lie in (0, {nyquist}) Hz"
        )));
    }
    let k = (PI * cutoff_hz * dt).tan();
    let norm = 1.0 / (1.0 + SQRT_2 * k + k * k);
    let b0 = k * k * norm;
    Ok((
        [b0, 2.0 * b0, b0],
        [2.0 * (k * k - 1.0) * norm, (1.0 - SQRT_2 * k + k * k) * norm],
    ))
}

/// Steps `s` with a new measurement. A different `dt` than the one `s` was
/// built for re-derives the coefficients and keeps the filter memory.
pub fn lpf_diff_step(mut s: LpfState, x1_meas: f64, dt: f64) -> Result<(LpfState, f64)> {
    if dt != s.dt {
        let (b, a) = butterworth2(s.cutoff_hz, dt)?;
        s.b = b;
        s.a = a;
        s.dt = dt;
    }
    let v = s.step(x1_meas);
    Ok((s, v))
}

/// Velocity source for the feedback loop.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EstimatorSpec {
    /// Simulated true velocity (oracle runs only).
    #[default]
    TrueState,
    Smd(SmdGains),
    Lpf {
        cutoff_hz: f64,
    },
}

impl EstimatorSpec {
    pub fn validate(&self, dt: f64) -> Result<()> {
        match self {
            EstimatorSpec::TrueState => Ok(()),
            EstimatorSpec::Smd(g) => g.validate(),
            EstimatorSpec::Lpf { cutoff_hz } => butterworth2(*cutoff_hz, dt).map(|_| ()),
        }
    }
}

/// Running estimator built from an [`EstimatorSpec`].
#[derive(Clone, Debug)]
pub enum Estimator {
    TrueState,
    Smd { gains: SmdGains, state: Option<SmdState> },
    Lpf(LpfState),
}

impl Estimator {
    pub fn new(spec: &EstimatorSpec, dt: f64) -> Result<Self> {
        spec.validate(dt)?;
        Ok(match spec {
            EstimatorSpec::TrueState => Estimator::TrueState,
            EstimatorSpec::Smd(g) => Estimator::Smd { gains: *g, state: None },
            EstimatorSpec::Lpf { cutoff_hz } => Estimator::Lpf(LpfState::new(*cutoff_hz, dt)?),
        })
    }

    /// Velocity estimate after seeing `x1_meas`. `x2_true` is only read by
    /// the oracle estimator.
    pub fn update(&mut self, x1_meas: f64, x2_true: f64, dt: f64) -> f64 {
        match self {
            Estimator::TrueState => x2_true,
            Estimator::Smd { gains, state } => {
                let next = match *state {
                    None => SmdState::init(x1_meas),
                    Some(s) => smd_step(s, x1_meas, gains, dt),
                };
                *state = Some(next);
                next.y1
            }
            Estimator::Lpf(s) => s.step(x1_meas),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_kappas() {
        let k = SmdGains::default().kappas();
        assert_relative_eq!(k[0], 24.8, max_relative = 1e-12);
        assert_relative_eq!(k[1], 204.8, max_relative = 1e-12);
        assert_relative_eq!(k[2], 563.2, max_relative = 1e-12);
    }

    #[test]
    fn zero_error_manifold() {
        let g = SmdGains::default();
        let s = SmdState {
            y0: 0.003,
            y1: 0.02,
            y2: -0.5,
        };
        let n = smd_step(s, 0.003, &g, 1e-4);
        assert_relative_eq!(n.y0, 0.003 + 1e-4 * 0.02, max_relative = 1e-15);
        assert_relative_eq!(n.y1, 0.02 - 1e-4 * 0.5, max_relative = 1e-15);
        assert_eq!(n.y2, -0.5);
    }

    // A quadratic input with the estimator sitting on its derivatives stays
    // there up to the Euler defect.
    #[test]
    fn exact_tracking_manifold_is_invariant() {
        let g = SmdGains::default();
        let (a, b, c) = (0.001, 0.01, 0.3);
        let x = |t: f64| a + b * t + 0.5 * c * t * t;
        let dt = 1e-4;
        let mut s = SmdState {
            y0: x(0.0),
            y1: b,
            y2: c,
        };
        let mut worst: f64 = 0.0;
        for i in 1..=20_000 {
            let t = i as f64 * dt;
            s = smd_step(s, x(t), &g, dt);
            worst = worst.max((s.y1 - (b + c * t)).abs());
        }
        // the estimator chatters in a band set by kappa2 * dt
        assert!(worst < 0.05 * (b + c * 2.0), "{worst}");
    }

    #[test]
    fn smd_tracks_sinusoid_velocity() {
        let g = SmdGains::default();
        let dt = 1e-4;
        let (amp, w) = (0.005, 10.0);
        let mut s = SmdState::init(0.0);
        let mut sq = 0.0;
        let mut n = 0;
        for i in 1..=50_000 {
            let t = i as f64 * dt;
            s = smd_step(s, amp * (w * t).sin(), &g, dt);
            if t > 1.0 {
                sq += (s.y1 - amp * w * (w * t).cos()).powi(2);
                n += 1;
            }
        }
        let rms = (sq / n as f64).sqrt();
        assert!(rms < 0.05 * amp * w, "{rms}");
    }

    #[test]
    fn lpf_rejects_dc() {
        let mut f = LpfState::new(200.0, 1e-4).unwrap();
        let mut v = 1.0;
        for _ in 0..2000 {
            v = f.step(0.004);
        }
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn lpf_ramp_gain() {
        let dt = 1e-4;
        let mut f = LpfState::new(200.0, dt).unwrap();
        let c = 0.002;
        let mut v = 0.0;
        for i in 0..5000 {
            v = f.step(c * i as f64 * dt);
        }
        assert!((v / c - 1.0).abs() < 0.01, "{v}");
    }

    #[test]
    fn lpf_low_frequency_sinusoid() {
        let dt = 1e-4;
        let f = LpfState::new(200.0, dt).unwrap();
        let w = 2.0 * PI * 0.5;
        let h = f.frequency_response(w);
        // ideal differentiator response is j w
        let rel = h / num_complex::Complex64::new(0.0, w);
        assert!((rel.norm() - 1.0).abs() < 0.01);
        assert!(rel.arg() < 0.0, "phase lag expected, got {}", rel.arg());

        // time-domain check of the same thing
        let mut g = LpfState::new(200.0, dt).unwrap();
        let amp = 0.004;
        let mut peak: f64 = 0.0;
        for i in 0..60_000 {
            let t = i as f64 * dt;
            let v = g.step(amp * (w * t).sin());
            if t > 4.0 {
                peak = peak.max(v.abs());
            }
        }
        assert!((peak / (amp * w) - 1.0).abs() < 0.01, "{peak}");
    }

    #[test]
    fn cutoff_above_nyquist_rejected() {
        assert!(matches!(LpfState::new(5000.0, 1e-4), Err(Error::Config(_))));
        assert!(LpfState::new(4999.0, 1e-4).is_ok());
        let s = LpfState::new(200.0, 1e-4).unwrap();
        assert!(lpf_diff_step(s, 0.0, 1e-2).is_err());
        let (s, v) = lpf_diff_step(s, 0.0, 2e-4).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(s.dt(), 2e-4);
    }

    #[test]
    fn estimator_starts_on_first_measurement() {
        let mut e = Estimator::new(&EstimatorSpec::Smd(SmdGains::default()), 1e-4).unwrap();
        assert_eq!(e.update(0.004, 9.0, 1e-4), 0.0);
        let mut t = Estimator::new(&EstimatorSpec::TrueState, 1e-4).unwrap();
        assert_eq!(t.update(0.004, 9.0, 1e-4), 9.0);
    }
}
