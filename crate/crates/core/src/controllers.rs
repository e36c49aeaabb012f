//! OND feedback family, the one-parameter PD reference and the analytic
//! diagnostics used to verify them.
//!
//! All laws are written in error coordinates `e1 = x1 - r`, `e2 = x2 - r_dot`.
//! `sign(0) = 0` everywhere, so the damping term vanishes at `e2 = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::sgn;
use crate::plants::State2;

/// Regularization used when none is configured.
pub const DEFAULT_MU: f64 = 1e-4;

fn default_mu() -> f64 {
    DEFAULT_MU
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorState {
    pub e1: f64,
    pub e2: f64,
}

impl ErrorState {
    pub const fn new(e1: f64, e2: f64) -> Self {
        ErrorState { e1, e2 }
    }
}

/// Gains of the OND family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OndGains {
    /// Proportional gain.
    pub k: f64,
    /// Regularization offset in meters.
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Plant time constant; scaled variant only.
    #[serde(default)]
    pub tau: Option<f64>,
    /// Plant input gain `K`; scaled variant only.
    #[serde(default, alias = "K")]
    pub gain: Option<f64>,
    /// Bound on the total command.
    #[serde(default, alias = "S")]
    pub saturation: Option<f64>,
}

impl OndGains {
    pub fn regularized(k: f64, mu: f64) -> Self {
        OndGains {
            k,
            mu,
            tau: None,
            gain: None,
            saturation: None,
        }
    }

    pub fn scaled(k: f64, mu: f64, tau: f64, gain: f64) -> Self {
        OndGains {
            tau: Some(tau),
            gain: Some(gain),
            ..OndGains::regularized(k, mu)
        }
    }

    pub fn with_saturation(mut self, bound: f64) -> Self {
        self.saturation = Some(bound);
        self
    }

    /// Checks `k > 0`, `mu > 0`. A `mu` that is not small against `k` only
    /// logs a warning.
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::config(format!("OND gain k must be > 0, got {}", self.k)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::config(format!(
                "OND regularization mu must be > 0, got {}",
                self.mu
            )));
        }
        if self.mu >= 1e-2 * self.k {
            log::warn!(
                "OND regularization mu = {} is not much smaller than k = {}",
                self.mu,
                self.k
            );
        }
        validate_saturation(self.saturation)
    }

    fn scaling(&self) -> Result<(f64, f64)> {
        match (self.tau, self.gain) {
            (Some(tau), Some(gain)) if tau > 0.0 && gain > 0.0 => Ok((tau, gain)),
            _ => Err(Error::config("scaled OND needs tau > 0 and K > 0")),
        }
    }
}

fn validate_saturation(s: Option<f64>) -> Result<()> {
    match s {
        Some(s) if !(s > 0.0) => Err(Error::config(format!("saturation bound must be > 0, got {s}"))),
        _ => Ok(()),
    }
}

/// Gains of `u = gamma (r - x1) - gamma tau x2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdGains {
    pub gamma: f64,
    /// Plant time constant the derivative part cancels.
    pub tau: f64,
    #[serde(default, alias = "S")]
    pub saturation: Option<f64>,
}

impl PdGains {
    pub fn new(gamma: f64, tau: f64) -> Self {
        PdGains {
            gamma,
            tau,
            saturation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::config(format!("PD gain gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::config(format!("PD tau must be > 0, got {}", self.tau)));
        }
        validate_saturation(self.saturation)
    }
}

/// Unregularized OND acceleration `-k x1 - x2^2 sign(x2) / |x1|`.
///
/// Defined only off the `x1 = 0` axis; the origin itself maps to zero.
pub fn ond_raw(state: State2, k: f64) -> Result<f64> {
    let State2 { x1, x2 } = state;
    if x1 == 0.0 {
        if x2 == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Singularity { x1, x2 });
    }
    Ok(-k * x1 - x2 * x2 * sgn(x2) / x1.abs())
}

/// Regularized OND acceleration `-k e1 - |e2| e2 / (|e1| + mu)`.
pub fn ond_regularized(err: ErrorState, g: &OndGains) -> f64 {
    -g.k * err.e1 - err.e2.abs() * err.e2 / (err.e1.abs() + g.mu)
}

/// OND for the lag motor with damping compensation:
/// `u = -k e1 - (tau / K) |e2| e2 / (|e1| + mu) + x2 / K`.
///
/// Panics if `g` carries no `tau`/`gain`; [`OndGains::validate`] and
/// [`ControllerSpec::validate`] catch that earlier.
pub fn ond_scaled(err: ErrorState, x2: f64, g: &OndGains) -> f64 {
    let (tau, gain) = g.scaling().expect("scaled OND gains without tau/K");
    let proportional = -g.k * err.e1;
    let damping = -(tau / gain) * err.e2.abs() * err.e2 / (err.e1.abs() + g.mu);
    proportional + damping + x2 / gain
}

pub fn pd_control(r: f64, x1: f64, x2: f64, g: &PdGains) -> f64 {
    g.gamma * (r - x1) - g.gamma * g.tau * x2
}

pub fn saturate(u: f64, bound: Option<f64>) -> f64 {
    match bound {
        Some(s) => u.clamp(-s, s),
        None => u,
    }
}

/// `V = k e1^2 / 2 + e2^2 / 2`.
pub fn lyapunov_energy(err: ErrorState, k: f64) -> f64 {
    0.5 * k * err.e1 * err.e1 + 0.5 * err.e2 * err.e2
}

/// `dV/dt = -|e2| e2^2 / (|e1| + mu)` along the regularized OND error
/// dynamics.
pub fn lyapunov_rate(err: ErrorState, mu: f64) -> f64 {
    -err.e2.abs() * err.e2 * err.e2 / (err.e1.abs() + mu)
}

/// Closed-form convergence quadratic form
/// `-(3/4) |e2| e2^2 (|e1| + 2 mu) / (e1 + mu sign(e1))^2`.
///
/// At `e1 = 0` the denominator is taken by continuity as `mu^2`.
///
/// Evaluating `x^T J x` directly from `P = diag(k, 1) / 2` and the Jacobian
/// gives the same expression with factor `1/2` instead of `3/4`; see
/// [`jacobian_quadratic_form`]. Both share sign and zero set.
pub fn convergence_form(err: ErrorState, _k: f64, mu: f64) -> f64 {
    let ErrorState { e1, e2 } = err;
    let denom = if e1 == 0.0 { mu } else { e1 + mu * sgn(e1) };
    -0.75 * e2.abs() * e2 * e2 * (e1.abs() + 2.0 * mu) / (denom * denom)
}

/// `x^T J x` with `J = (P A + A^T P) / 2`, `P = diag(k, 1) / 2` and `A` the
/// analytic Jacobian of the regularized error dynamics at `x = (e1, e2)`.
pub fn jacobian_quadratic_form(err: ErrorState, k: f64, mu: f64) -> f64 {
    let ErrorState { e1, e2 } = err;
    let d = e1.abs() + mu;
    // A = [[0, 1], [a21, a22]]
    let a21 = -k + e2.abs() * e2 * sgn(e1) / (d * d);
    let a22 = -2.0 * e2.abs() / d;
    let a = [[0.0, 1.0], [a21, a22]];
    let p = [[0.5 * k, 0.0], [0.0, 0.5]];
    let x = [e1, e2];
    let mut q = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            // (P A)_ij + (A^T P)_ij = sum_m p_im a_mj + a_mi p_mj
            let mut jij = 0.0;
            for m in 0..2 {
                jij += p[i][m] * a[m][j] + a[m][i] * p[m][j];
            }
            q += x[i] * 0.5 * jij * x[j];
        }
    }
    q
}

/// Distance from the attractor line: `x2 + sqrt(k) x1`.
pub fn attractor_residual(state: State2, k: f64) -> f64 {
    state.x2 + k.sqrt() * state.x1
}

/// Controller selection in a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ControllerSpec {
    /// Unregularized OND on a double integrator.
    OndRaw(OndGains),
    /// Regularized OND on a double integrator.
    Ond(OndGains),
    /// Scaled OND with damping compensation for the lag motor.
    OndScaled(OndGains),
    Pd(PdGains),
}

/// What a controller sees at a control instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlInput {
    pub r: f64,
    pub r_dot: f64,
    /// Measured position.
    pub x1: f64,
    /// Velocity estimate.
    pub v: f64,
}

impl ControllerSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ControllerSpec::OndRaw(g) | ControllerSpec::Ond(g) => g.validate(),
            ControllerSpec::OndScaled(g) => {
                g.validate()?;
                g.scaling().map(|_| ())
            }
            ControllerSpec::Pd(g) => g.validate(),
        }
    }

    /// Unsaturated command.
    pub fn command(&self, inp: &ControlInput) -> Result<f64> {
        let err = ErrorState::new(inp.x1 - inp.r, inp.v - inp.r_dot);
        match self {
            ControllerSpec::OndRaw(g) => ond_raw(State2::new(err.e1, err.e2), g.k),
            ControllerSpec::Ond(g) => Ok(ond_regularized(err, g)),
            ControllerSpec::OndScaled(g) => Ok(ond_scaled(err, inp.v, g)),
            ControllerSpec::Pd(g) => Ok(pd_control(inp.r, inp.x1, inp.v, g)),
        }
    }

    pub fn saturation(&self) -> Option<f64> {
        match self {
            ControllerSpec::OndRaw(g) | ControllerSpec::Ond(g) | ControllerSpec::OndScaled(g) => g.saturation,
            ControllerSpec::Pd(g) => g.saturation,
        }
    }

    /// `(k, mu)` used for the energy diagnostics; PD reports `gamma` and the
    /// default regularization.
    pub fn diagnostic_gains(&self) -> (f64, f64) {
        match self {
            ControllerSpec::OndRaw(g) | ControllerSpec::Ond(g) | ControllerSpec::OndScaled(g) => (g.k, g.mu),
            ControllerSpec::Pd(g) => (g.gamma, DEFAULT_MU),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ControllerSpec::OndRaw(_) => "ond-raw",
            ControllerSpec::Ond(_) => "ond",
            ControllerSpec::OndScaled(_) => "ond-scaled",
            ControllerSpec::Pd(_) => "pd",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn raw_law_values() {
        assert_eq!(ond_raw(State2::new(1.0, 0.0), 100.0).unwrap(), -100.0);
        assert_eq!(ond_raw(State2::new(1.0, 1.0), 100.0).unwrap(), -101.0);
        assert!(matches!(
            ond_raw(State2::new(0.0, 1.0), 100.0),
            Err(Error::Singularity { x1, x2 }) if x1 == 0.0 && x2 == 1.0
        ));
        assert_eq!(ond_raw(State2::ZERO, 100.0).unwrap(), 0.0);
    }

    #[test]
    fn regularized_law_values() {
        let g = OndGains::regularized(100.0, 1e-4);
        assert_eq!(ond_regularized(ErrorState::new(0.0, 0.0), &g), 0.0);
        assert_relative_eq!(
            ond_regularized(ErrorState::new(0.0, 1.0), &g),
            -10_000.0,
            max_relative = 1e-12
        );
        let limit = OndGains::regularized(100.0, 1e-15);
        assert_relative_eq!(
            ond_regularized(ErrorState::new(1.0, -2.0), &limit),
            -96.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn scaled_law_values() {
        let g = OndGains::scaled(1000.0, 1e-4, 0.0076, 0.0463);
        assert_eq!(ond_scaled(ErrorState::new(0.0, 0.0), 0.0, &g), 0.0);
        let u = ond_scaled(ErrorState::new(0.001, 0.0), 0.002, &g);
        assert_relative_eq!(u, -1.0 + 0.002 / 0.0463, max_relative = 1e-12);
        assert_relative_eq!(u, -0.9568, epsilon = 1e-4);
    }

    // Substituting the scaled law into tau x2' + x2 = K u with r = const must
    // leave tau e1'' + tau |e1'| e1' / (|e1| + mu) + K k e1 = 0.
    #[test]
    fn scaled_law_closes_to_regularized_dynamics() {
        let (k, mu, tau, gain) = (100.0, 1e-4, 0.0076, 0.0463);
        let g = OndGains::scaled(k, mu, tau, gain);
        for &(e1, e2) in &[(0.01, -0.3), (-0.002, 0.05), (1e-5, 1e-3), (0.0, 0.2)] {
            let u = ond_scaled(ErrorState::new(e1, e2), e2, &g);
            let x2_dot = (gain * u - e2) / tau;
            let residual = tau * x2_dot + tau * e2.abs() * e2 / (e1.abs() + mu) + gain * k * e1;
            assert!(residual.abs() < 1e-12 * (1.0 + (gain * k * e1).abs()), "{residual}");
        }
    }

    #[test]
    fn pd_values() {
        let g = PdGains::new(1000.0, 0.0076);
        assert_eq!(pd_control(0.004, 0.004, 0.0, &g), 0.0);
        assert_relative_eq!(pd_control(0.01, 0.0, 0.0, &g), 10.0, max_relative = 1e-12);
    }

    // e1'' = -k e1 - k tau e1' with k = 100, tau = 0.2 has a double root at -10.
    #[test]
    fn pd_error_form_critical_damping() {
        let (k, tau) = (100.0f64, 0.2f64);
        let (b, c) = (k * tau, k);
        let disc = b * b - 4.0 * c;
        assert!(disc.abs() < 1e-9);
        assert_relative_eq!(-b / 2.0, -10.0, max_relative = 1e-12);
        assert_relative_eq!(k.sqrt(), 10.0);
    }

    #[test]
    fn saturation_clamps() {
        assert_eq!(saturate(5.0, Some(3.0)), 3.0);
        assert_eq!(saturate(-2.0, Some(3.0)), -2.0);
        assert_eq!(saturate(-7.0, Some(3.0)), -3.0);
        assert_eq!(saturate(-7.0, None), -7.0);
    }

    #[test]
    fn energy_values() {
        assert_eq!(lyapunov_energy(ErrorState::new(0.0, 0.0), 100.0), 0.0);
        assert_eq!(lyapunov_energy(ErrorState::new(1.0, 0.0), 100.0), 50.0);
        assert_eq!(lyapunov_energy(ErrorState::new(0.0, 2.0), 7.0), 2.0);
    }

    #[test]
    fn energy_rate_values() {
        assert_eq!(lyapunov_rate(ErrorState::new(3.0, 0.0), 1e-4), 0.0);
        assert_relative_eq!(
            lyapunov_rate(ErrorState::new(0.0, 1.0), 1e-4),
            -10_000.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            lyapunov_rate(ErrorState::new(1.0, 2.0), 1e-15),
            -8.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn convergence_form_values() {
        assert_eq!(convergence_form(ErrorState::new(5.0, 0.0), 100.0, 1e-4), 0.0);
        assert_relative_eq!(
            convergence_form(ErrorState::new(1.0, 1.0), 100.0, 1e-15),
            -0.75,
            max_relative = 1e-12
        );
        assert!(convergence_form(ErrorState::new(0.0, 0.5), 100.0, 1e-4).is_finite());
    }

    // The Jacobian route and the closed form differ by exactly 3/2.
    #[test]
    fn closed_form_is_three_halves_of_jacobian_route() {
        let (k, mu) = (100.0, 1e-4);
        for &(e1, e2) in &[(1.0, 1.0), (-0.3, 0.2), (1e-5, -2.0), (0.7, -1e-3)] {
            let err = ErrorState::new(e1, e2);
            let closed = convergence_form(err, k, mu);
            let jac = jacobian_quadratic_form(err, k, mu);
            // the matrix route cancels k e1 e2 terms, so allow roundoff
            assert_relative_eq!(closed / jac, 1.5, max_relative = 1e-7);
        }
        assert_eq!(jacobian_quadratic_form(ErrorState::new(0.4, 0.0), k, mu), 0.0);
    }

    #[test]
    fn attractor_values() {
        assert_eq!(attractor_residual(State2::ZERO, 100.0), 0.0);
        assert_eq!(attractor_residual(State2::new(1.0, -10.0), 100.0), 0.0);
        assert_eq!(attractor_residual(State2::new(1.0, 0.0), 100.0), 10.0);
    }

    #[test]
    fn gains_validation() {
        assert!(OndGains::regularized(0.0, 1e-4).validate().is_err());
        assert!(OndGains::regularized(100.0, 0.0).validate().is_err());
        // large mu is only a warning
        assert!(OndGains::regularized(1.0, 0.5).validate().is_ok());
        assert!(ControllerSpec::OndScaled(OndGains::regularized(1.0, 1e-4))
            .validate()
            .is_err());
        assert!(PdGains::new(1.0, 0.0).validate().is_err());
    }

    #[test]
    fn controller_spec_from_toml() {
        let spec: ControllerSpec =
            toml::from_str("type = 'ond-scaled'\nk = 1000.0\ntau = 0.0076\nK = 0.0463\n").unwrap();
        assert_eq!(
            spec,
            ControllerSpec::OndScaled(OndGains::scaled(1000.0, 1e-4, 0.0076, 0.0463))
        );
        let pd: ControllerSpec = toml::from_str("type = 'pd'\ngamma = 1000.0\ntau = 0.0076\nS = 10.0\n").unwrap();
        assert_eq!(pd.saturation(), Some(10.0));
    }

    proptest! {
        #[test]
        fn regularized_law_is_odd(e1 in -1.0f64..1.0, e2 in -10.0f64..10.0) {
            let g = OndGains::regularized(100.0, 1e-4);
            let a = ond_regularized(ErrorState::new(e1, e2), &g);
            let b = ond_regularized(ErrorState::new(-e1, -e2), &g);
            prop_assert_eq!(a, -b);
        }

        // Cutting mu tenfold moves the damping term by 0.9 mu / (|e1| + mu) of
        // its value, i.e. below 1 % once |e1| > 100 mu.
        #[test]
        fn regularization_is_local_to_axis(e1 in 0.01f64..1.0, sign in prop::bool::ANY, e2 in -10.0f64..10.0) {
            let e1 = if sign { e1 } else { -e1 };
            let mu = 1e-4;
            let err = ErrorState::new(e1, e2);
            let coarse = ond_regularized(err, &OndGains::regularized(100.0, mu));
            let fine = ond_regularized(err, &OndGains::regularized(100.0, mu / 10.0));
            let damping_fine = e2 * e2 / (e1.abs() + mu / 10.0);
            let bound = 0.9 * mu / (e1.abs() + mu) * damping_fine;
            prop_assert!((coarse - fine).abs() <= bound * (1.0 + 1e-9) + 1e-12);
            prop_assert!(bound <= 1e-2 * damping_fine);
        }

        #[test]
        fn energy_rate_nonpositive(e1 in -1.0f64..1.0, e2 in -10.0f64..10.0) {
            let rate = lyapunov_rate(ErrorState::new(e1, e2), 1e-4);
            prop_assert!(rate <= 0.0);
            prop_assert_eq!(rate == 0.0, e2 == 0.0);
            prop_assert!(lyapunov_energy(ErrorState::new(e1, e2), 100.0) >= 0.0);
        }
    }
}
