//! Closed-loop frequency-response identification and PD gain selection.
//!
//! The plant is held around `r0` by a proportional loop while a sinusoid is
//! added to the command, `u = k_id (r0 - x1) - kd_id x2 + a sin(w t)`. Once
//! the loop settles, the first harmonics of `x1` and of the applied `u` are
//! extracted by quadrature correlation over whole periods and their ratio is
//! one FR point. The points are then fit to `K / (jw (jw tau + 1))`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plants::{PlantSpec, State2};

/// One frequency-response sample of `x1 / u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FRPoint {
    /// rad/s
    pub omega: f64,
    /// Amplitude ratio, absolute.
    pub magnitude: f64,
    /// Unwrapped, radians, negative for lag.
    pub phase: f64,
}

impl FRPoint {
    pub fn magnitude_db(&self) -> f64 {
        20.0 * self.magnitude.log10()
    }
}

/// Minimum samples per excitation period.
pub const MIN_SAMPLES_PER_PERIOD: usize = 256;

fn default_dt_max() -> f64 {
    1e-4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdConfig {
    pub k_id: f64,
    /// Velocity feedback of the identification loop. Zero for plants with
    /// their own damping; needed to hold a double integrator.
    #[serde(default)]
    pub kd_id: f64,
    /// Centering setpoint, m.
    pub r0: f64,
    /// Excitation amplitude, in plant input units.
    pub a: f64,
    /// rad/s, strictly increasing.
    pub frequencies: Vec<f64>,
    pub settle_cycles: u32,
    pub measure_cycles: u32,
    /// Lower bound on the settle time, s. Keeps high frequencies from
    /// being measured before the loop transient has died out.
    #[serde(default)]
    pub settle_min_time: f64,
    /// Upper bound on the step, s.
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
}

impl IdConfig {
    /// Preset for the lag motor and the voice-coil drive. The gains are
    /// tuned for this crate's synthetic plants, not taken from a rig.
    pub fn motor_preset(frequencies: Vec<f64>) -> Self {
        IdConfig {
            k_id: 300.0,
            kd_id: 0.0,
            r0: 0.006,
            a: 1.0,
            frequencies,
            settle_cycles: 2,
            measure_cycles: 3,
            settle_min_time: 1.0,
            dt_max: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k_id", self.k_id),
            ("kd_id", self.kd_id),
            ("r0", self.r0),
            ("a", self.a),
        ] {
            if !v.is_finite() {
                return Err(Error::config(format!("{name} must be finite")));
            }
        }
        if self.k_id <= 0.0 || self.kd_id < 0.0 {
            return Err(Error::config("k_id must be > 0 and kd_id >= 0"));
        }
        if self.a == 0.0 {
            return Err(Error::config("excitation amplitude a must be non-zero"));
        }
        if self.frequencies.is_empty() {
            return Err(Error::config("no identification frequencies"));
        }
        if self.frequencies.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::config("frequencies must be positive and finite"));
        }
        if self.frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("frequencies must be strictly increasing"));
        }
        if self.settle_cycles < 1 {
            return Err(Error::config("settle_cycles must be >= 1"));
        }
        if self.measure_cycles < 1 {
            return Err(Error::config("measure window must span at least one period"));
        }
        if !(self.dt_max > 0.0 && self.settle_min_time >= 0.0) {
            return Err(Error::config("dt_max must be > 0 and settle_min_time >= 0"));
        }
        Ok(())
    }
}

fn rk4(plant: &PlantSpec, s: State2, input: f64, h: f64) -> State2 {
    let f = |s: State2| plant.rhs(s, input, 0.0);
    let at = |d: (f64, f64), a: f64| State2::new(s.x1 + a * d.0, s.x2 + a * d.1);
    let k1 = f(s);
    let k2 = f(at(k1, 0.5 * h));
    let k3 = f(at(k2, 0.5 * h));
    let k4 = f(at(k3, h));
    State2::new(
        s.x1 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        s.x2 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

/// First harmonic of `x1` and of the applied input at one frequency.
fn measure_one(plant: &PlantSpec, cfg: &IdConfig, omega: f64) -> Result<Complex64> {
    let period = 2.0 * PI / omega;
    let per_period = ((period / cfg.dt_max).ceil() as usize).max(MIN_SAMPLES_PER_PERIOD);
    let dt = period / per_period as f64;
    let settle = (cfg.settle_cycles as usize).max((cfg.settle_min_time / period).ceil() as usize);
    let total = (settle + cfg.measure_cycles as usize) * per_period;
    let start = settle * per_period;
    let bound = 1e3 * (1.0 + cfg.r0.abs());
    let bias = match plant {
        PlantSpec::VoiceCoil(p) => p.gravity_bias(),
        _ => 0.0,
    };

    let mut state = State2::new(cfg.r0, 0.0);
    let mut x_acc = Complex64::new(0.0, 0.0);
    let mut u_acc = Complex64::new(0.0, 0.0);
    for i in 0..total {
        // phase taken modulo the period so long settles keep full precision
        let phase_at = |j: usize| 2.0 * PI * (j % per_period) as f64 / per_period as f64;
        let x1 = plant.measure(state, 0.0);
        let u = cfg.k_id * (cfg.r0 - x1) - cfg.kd_id * state.x2 + cfg.a * phase_at(i).sin();
        let applied = match plant {
            PlantSpec::VoiceCoil(p) => p.clamp_voltage(bias + u) - bias,
            _ => u,
        };
        if i >= start {
            let (p0, p1) = (phase_at(i), phase_at(i) + 2.0 * PI / per_period as f64);
            x_acc += x1 * Complex64::from_polar(1.0, -p0);
            // exact integral of the held input over [t_i, t_i + dt)
            let e0 = Complex64::from_polar(1.0, -p0);
            let e1 = Complex64::from_polar(1.0, -p1);
            u_acc += applied * (e0 - e1) / Complex64::new(0.0, omega);
        }
        state = rk4(plant, state, applied + bias, dt);
        if !state.is_finite() || (state.x1 - cfg.r0).abs() > bound {
            return Err(Error::Unstable { omega });
        }
    }
    let n = (cfg.measure_cycles as usize * per_period) as f64;
    let x_h = x_acc * (2.0 / n);
    let u_h = u_acc * (2.0 / (n * dt));
    if u_h.norm() == 0.0 {
        return Err(Error::DegenerateData);
    }
    Ok(x_h / u_h)
}

/// Closed-loop FR measurement of `plant` at every `cfg.frequencies` entry.
///
/// The loop starts at rest on `r0`. The phase of the first point is taken
/// in `(-3pi/2, pi/2]`; later points are unwrapped against their
/// predecessor.
pub fn measure_fr(plant: &PlantSpec, cfg: &IdConfig) -> Result<Vec<FRPoint>> {
    cfg.validate()?;
    plant.validate()?;
    let responses = cfg
        .frequencies
        .iter()
        .map(|&w| measure_one(plant, cfg, w))
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(responses.len());
    let mut prev: Option<f64> = None;
    for (&omega, g) in cfg.frequencies.iter().zip(&responses) {
        let raw = g.arg();
        let phase = match prev {
            None => {
                if raw > FRAC_PI_2 {
                    raw - 2.0 * PI
                } else {
                    raw
                }
            }
            Some(p) => raw + 2.0 * PI * ((p - raw) / (2.0 * PI)).round(),
        };
        prev = Some(phase);
        points.push(FRPoint {
            omega,
            magnitude: g.norm(),
            phase,
        });
    }
    Ok(points)
}

/// Nominal model `K e^{-jw delay} / (jw (jw tau + 1))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFr {
    #[serde(alias = "K")]
    pub gain: f64,
    pub tau: f64,
    #[serde(default)]
    pub delay: f64,
}

impl ModelFr {
    pub fn new(gain: f64, tau: f64) -> Self {
        ModelFr { gain, tau, delay: 0.0 }
    }

    pub fn with_delay(mut self, delay: f64) -> Self {
        self.delay = delay;
        self
    }

    pub fn magnitude(&self, omega: f64) -> f64 {
        self.gain / (omega * (1.0 + (omega * self.tau).powi(2)).sqrt())
    }

    pub fn phase(&self, omega: f64) -> f64 {
        -FRAC_PI_2 - (omega * self.tau).atan() - omega * self.delay
    }

    pub fn point(&self, omega: f64) -> FRPoint {
        FRPoint {
            omega,
            magnitude: self.magnitude(omega),
            phase: self.phase(omega),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0 && self.tau >= 0.0 && self.delay >= 0.0) {
            return Err(Error::config("model needs K > 0, tau >= 0, delay >= 0"));
        }
        if !(self.gain.is_finite() && self.tau.is_finite() && self.delay.is_finite()) {
            return Err(Error::config("model parameters must be finite"));
        }
        Ok(())
    }
}

/// Points of `model` at `omegas`.
pub fn synthetic_fr(model: &ModelFr, omegas: &[f64]) -> Vec<FRPoint> {
    omegas.iter().map(|&w| model.point(w)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(rename = "K")]
    pub gain: f64,
    pub tau: f64,
    /// Frequencies dropped by the low-frequency slope rule, rad/s.
    pub excluded_points: Vec<f64>,
    /// Sum of squared natural-log magnitude errors, plus the weighted squared
    /// phase errors when the phase term is enabled.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Allowed deviation of the local log-log magnitude slope from -1.
    pub slope_tol: f64,
    /// Weight of the squared phase error (rad^2); zero fits magnitude only.
    pub phase_weight: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            slope_tol: 0.15,
            phase_weight: 0.0,
        }
    }
}

/// Low-frequency points whose forward log-log magnitude slope is off -1 by
/// more than `tol`, scanning up from the lowest frequency until the first
/// conforming point.
pub fn excluded_low_frequency(points: &[FRPoint], tol: f64) -> usize {
    let mut n = 0;
    for w in points.windows(2) {
        let slope = (w[1].magnitude.ln() - w[0].magnitude.ln()) / (w[1].omega.ln() - w[0].omega.ln());
        if (slope + 1.0).abs() > tol {
            n += 1;
        } else {
            break;
        }
    }
    n
}

/// Least-squares fit of `K / (jw (jw tau + 1))` with default options.
pub fn fit_model(points: &[FRPoint]) -> Result<FitResult> {
    fit_model_with(points, &FitOptions::default())
}

pub fn fit_model_with(points: &[FRPoint], opts: &FitOptions) -> Result<FitResult> {
    if points.len() < 4 {
        return Err(Error::config(format!(
            "fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|p| !(p.omega > 0.0 && p.magnitude > 0.0 && p.omega.is_finite() && p.magnitude.is_finite()))
    {
        return Err(Error::config("FR points need finite omega > 0 and magnitude > 0"));
    }
    if points.windows(2).any(|w| w[1].omega <= w[0].omega) {
        return Err(Error::config("FR points must be sorted by increasing omega"));
    }
    let (lo, hi) = (points[0].omega, points[points.len() - 1].omega);
    if hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(Error::config("FR points must span at least one decade"));
    }
    if !(opts.slope_tol > 0.0 && opts.phase_weight >= 0.0) {
        return Err(Error::config("slope_tol must be > 0 and phase_weight >= 0"));
    }

    let n_excluded = excluded_low_frequency(points, opts.slope_tol);
    let used = &points[n_excluded..];
    if used.len() < 2 {
        return Err(Error::DegenerateData);
    }
    let excluded_points = points[..n_excluded].iter().map(|p| p.omega).collect();

    // For fixed tau the optimal ln K is the mean log-magnitude offset, and
    // the phase term does not involve K; so only tau needs a search.
    let objective = |ln_tau: f64| -> (f64, f64) {
        let tau = ln_tau.exp();
        let d: Vec<f64> = used
            .iter()
            .map(|p| p.magnitude.ln() + p.omega.ln() + 0.5 * (p.omega * tau).powi(2).ln_1p())
            .collect();
        let ln_k = d.iter().sum::<f64>() / d.len() as f64;
        let mut r: f64 = d.iter().map(|v| (v - ln_k).powi(2)).sum();
        if opts.phase_weight > 0.0 {
            r += opts.phase_weight
                * used
                    .iter()
                    .map(|p| (p.phase + FRAC_PI_2 + (p.omega * tau).atan()).powi(2))
                    .sum::<f64>();
        }
        (r, ln_k)
    };

    let (w_lo, w_hi) = (used[0].omega, used[used.len() - 1].omega);
    let grid_lo = (1e-3 / w_hi).ln();
    let grid_hi = (1e3 / w_lo).ln();
    let n_grid = 400;
    let step = (grid_hi - grid_lo) / n_grid as f64;
    let best = (0..=n_grid)
        .map(|i| grid_lo + i as f64 * step)
        .min_by(|a, b| objective(*a).0.total_cmp(&objective(*b).0))
        .expect("non-empty grid");
    let ln_tau = golden_section(|x| objective(x).0, best - step, best + step, 1e-12);
    let (residual, ln_k) = objective(ln_tau);
    Ok(FitResult {
        gain: ln_k.exp(),
        tau: ln_tau.exp(),
        excluded_points,
        residual,
    })
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Plant description used for margin evaluation.
#[derive(Clone, Copy, Debug)]
pub enum LoopSource<'a> {
    Model(ModelFr),
    /// Measured points, interpolated log-log in magnitude and linearly in
    /// phase over `ln omega`.
    Points(&'a [FRPoint]),
}

impl LoopSource<'_> {
    fn validate(&self) -> Result<()> {
        match self {
            LoopSource::Model(m) => m.validate(),
            LoopSource::Points(p) => {
                if p.len() < 2 {
                    return Err(Error::config("need at least 2 FR points"));
                }
                if p.windows(2).any(|w| w[1].omega <= w[0].omega) || p.iter().any(|q| !(q.magnitude > 0.0)) {
                    return Err(Error::config("FR points must be sorted with magnitude > 0"));
                }
                Ok(())
            }
        }
    }
}

/// Phase lead of the PD shaping `1 + jw tau`.
fn pd_phase(omega: f64, tau: f64) -> f64 {
    (omega * tau).atan()
}

fn open_loop_ln_mag(gamma: f64, tau: f64, omega: f64, plant_mag: f64) -> f64 {
    gamma.ln() + 0.5 * (omega * tau).powi(2).ln_1p() + plant_mag.ln()
}

/// Crossover of the PD-shaped open loop `gamma (1 + jw tau) FR(jw)` and its
/// phase margin `pi + arg FR(w_c) + arg PD(w_c)`. Returns `(w_c, margin)`.
pub fn crossover_margin(source: &LoopSource, gamma: f64, tau: f64) -> Result<(f64, f64)> {
    source.validate()?;
    if !(gamma > 0.0 && gamma.is_finite() && tau >= 0.0 && tau.is_finite()) {
        return Err(Error::config("need gamma > 0 and tau >= 0"));
    }
    match source {
        LoopSource::Model(m) => {
            let g = |w: f64| open_loop_ln_mag(gamma, tau, w, m.magnitude(w));
            let (mut lo, mut hi) = (1e-9f64.ln(), 1e12f64.ln());
            if !(g(lo.exp()) > 0.0 && g(hi.exp()) < 0.0) {
                return Err(Error::OutOfRange("open loop does not cross unity magnitude".into()));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if g(mid.exp()) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let wc = (0.5 * (lo + hi)).exp();
            Ok((wc, PI + m.phase(wc) + pd_phase(wc, tau)))
        }
        LoopSource::Points(points) => {
            let lm: Vec<f64> = points
                .iter()
                .map(|p| open_loop_ln_mag(gamma, tau, p.omega, p.magnitude))
                .collect();
            let i = (0..points.len() - 1)
                .find(|&i| lm[i] >= 0.0 && lm[i + 1] < 0.0)
                .ok_or_else(|| Error::OutOfRange("open loop does not cross unity within the FR data".into()))?;
            let (a, b) = (&points[i], &points[i + 1]);
            let frac = lm[i] / (lm[i] - lm[i + 1]);
            let ln_wc = a.omega.ln() + frac * (b.omega.ln() - a.omega.ln());
            let phase = a.phase + frac * (b.phase - a.phase);
            let wc = ln_wc.exp();
            Ok((wc, PI + phase + pd_phase(wc, tau)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneOptions {
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Margin tolerance, radians.
    pub tolerance: f64,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            gamma_min: 1.0,
            gamma_max: 1e5,
            tolerance: 0.5f64.to_radians(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub gamma: f64,
    pub omega_c: f64,
    pub margin: f64,
    /// The margin does not depend on gamma over the search range; `gamma`
    /// is then the `gamma_max` boundary.
    pub gamma_independent: bool,
}

/// PD gain whose loop has phase margin `target` (radians), by bisection on
/// `ln gamma`. The margin falls as gamma pushes the crossover up.
pub fn tune_gamma(source: &LoopSource, target: f64, tau: f64, opts: &TuneOptions) -> Result<TuneResult> {
    source.validate()?;
    if !(opts.gamma_min > 0.0 && opts.gamma_max > opts.gamma_min && opts.tolerance > 0.0) {
        return Err(Error::config("need 0 < gamma_min < gamma_max and tolerance > 0"));
    }
    let (mut g_lo, mut g_hi) = (opts.gamma_min, opts.gamma_max);
    if let LoopSource::Points(p) = source {
        // gains for which the crossover stays inside the data
        let gain_for_unity = |q: &FRPoint| 1.0 / ((1.0 + (q.omega * tau).powi(2)).sqrt() * q.magnitude);
        g_lo = g_lo.max(gain_for_unity(&p[0]) * (1.0 + 1e-9));
        g_hi = g_hi.min(gain_for_unity(&p[p.len() - 1]) * (1.0 - 1e-9));
        if g_lo >= g_hi {
            return Err(Error::OutOfRange(
                "no gain puts the crossover inside the FR data".into(),
            ));
        }
    }
    let eval = |g: f64| crossover_margin(source, g, tau);
    let (w_lo, m_lo) = eval(g_lo)?;
    let (w_hi, m_hi) = eval(g_hi)?;
    let done = |gamma, omega_c, margin, gamma_independent| TuneResult {
        gamma,
        omega_c,
        margin,
        gamma_independent,
    };

    if (m_lo - m_hi).abs() <= 1e-9 {
        return if (m_hi - target).abs() <= opts.tolerance {
            Ok(done(g_hi, w_hi, m_hi, true))
        } else {
            Err(Error::OutOfRange(format!(
                "margin is fixed at {:.2} deg, target {:.2} deg",
                m_hi.to_degrees(),
                target.to_degrees()
            )))
        };
    }
    let (m_max, m_min) = (m_lo.max(m_hi), m_lo.min(m_hi));
    if target > m_max + opts.tolerance || target < m_min - opts.tolerance {
        return Err(Error::OutOfRange(format!(
            "target {:.2} deg outside reachable [{:.2}, {:.2}] deg",
            target.to_degrees(),
            m_min.to_degrees(),
            m_max.to_degrees()
        )));
    }
    let decreasing = m_lo > m_hi;
    let (mut a, mut b) = (g_lo.ln(), g_hi.ln());
    let mut best = if (m_lo - target).abs() < (m_hi - target).abs() {
        (g_lo, w_lo, m_lo)
    } else {
        (g_hi, w_hi, m_hi)
    };
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        let (w, m) = eval(mid.exp())?;
        if (m - target).abs() < (best.2 - target).abs() {
            best = (mid.exp(), w, m);
        }
        if (m > target) == decreasing {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    if (best.2 - target).abs() > opts.tolerance {
        return Err(Error::OutOfRange(format!(
            "closest margin {:.2} deg misses target {:.2} deg",
            best.2.to_degrees(),
            target.to_degrees()
        )));
    }
    Ok(done(best.0, best.1, best.2, false))
}

#[derive(Serialize, Deserialize)]
struct FrRow {
    omega: f64,
    magnitude: f64,
    phase_deg: f64,
}

/// Writes points as CSV with header `omega,magnitude,phase_deg`.
pub fn write_fr_csv<W: Write>(points: &[FRPoint], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(FrRow {
            omega: p.omega,
            magnitude: p.magnitude,
            phase_deg: p.phase.to_degrees(),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads points written by [`write_fr_csv`] (or any CSV with the same
/// header).
pub fn read_fr_csv<R: Read>(input: R) -> Result<Vec<FRPoint>> {
    let mut r = csv::Reader::from_reader(input);
    let mut points = Vec::new();
    for (i, row) in r.deserialize::<FrRow>().enumerate() {
        let row = row.map_err(|e| Error::config(format!("FR CSV row {}: {e}", i + 1)))?;
        if !(row.omega > 0.0 && row.magnitude > 0.0) {
            return Err(Error::config(format!(
                "FR CSV row {}: omega and magnitude must be > 0",
                i + 1
            )));
        }
        points.push(FRPoint {
            omega: row.omega,
            magnitude: row.magnitude,
            phase: row.phase_deg.to_radians(),
        });
    }
    Ok(points)
}
