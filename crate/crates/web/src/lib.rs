//! wasm-bindgen bindings for the browser demo in `www/`.
//!
//! Three operations: OND against PD on the double integrator, the
//! energy-rate grid, and identification of the synthetic voice coil.
//! Errors come back to JavaScript as strings.

use ond_core::controllers::DEFAULT_MU;
use ond_core::landscape::energy_rate_grid;
use ond_core::math::{linspace, logspace};
use ond_core::plants::{PlantSpec, State2, VoiceCoilParams};
use ond_core::sim::{run_convergence_benchmark, NUMERICAL_FLOOR};
use ond_core::sysid::{self, IdConfig, LoopSource};
use wasm_bindgen::prelude::*;

fn msg(e: ond_core::Error) -> String {
    e.to_string()
}

/// OND and critically damped PD traces from the same start.
#[wasm_bindgen]
pub struct Convergence {
    t: Vec<f64>,
    ond_x1: Vec<f64>,
    ond_x2: Vec<f64>,
    pd_x1: Vec<f64>,
    pd_x2: Vec<f64>,
    crossover: Option<f64>,
}

#[wasm_bindgen]
impl Convergence {
    #[wasm_bindgen(getter)]
    pub fn t(&self) -> Vec<f64> {
        self.t.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn ond_x1(&self) -> Vec<f64> {
        self.ond_x1.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn ond_x2(&self) -> Vec<f64> {
        self.ond_x2.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn pd_x1(&self) -> Vec<f64> {
        self.pd_x1.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn pd_x2(&self) -> Vec<f64> {
        self.pd_x2.clone()
    }

    /// Time after which OND stays ahead of PD, if it does.
    #[wasm_bindgen(getter)]
    pub fn crossover(&self) -> Option<f64> {
        self.crossover
    }

    /// `log10 |x1|` floor used for plotting.
    #[wasm_bindgen(getter)]
    pub fn floor(&self) -> f64 {
        NUMERICAL_FLOOR
    }
}

/// Regularized OND (`k`, `mu`) and PD with the double pole at `-sqrt(k)`,
/// both from `(x1, x2)`.
#[wasm_bindgen]
pub fn convergence(k: f64, mu: f64, x1: f64, x2: f64, horizon: f64) -> Result<Convergence, String> {
    if !(horizon > 0.0 && horizon <= 10.0) {
        return Err(format!("horizon must be in (0, 10] s, got {horizon}"));
    }
    let r = run_convergence_benchmark(k, mu, 2.0 / k.sqrt(), State2::new(x1, x2), horizon).map_err(msg)?;
    Ok(Convergence {
        t: r.ond.t.clone(),
        ond_x1: r.ond.x1_true,
        ond_x2: r.ond.x2_true,
        pd_x1: r.pd.x1_true,
        pd_x2: r.pd.x2_true,
        crossover: r.crossover,
    })
}

/// `|dV/dt|` on an `n1 x n2` grid over `[-e1_max, e1_max] x [-e2_max,
/// e2_max]`, row-major in `e1`.
#[wasm_bindgen]
pub fn energy_rate(k: f64, mu: f64, e1_max: f64, e2_max: f64, n1: usize, n2: usize) -> Result<Vec<f64>, String> {
    if !(e1_max > 0.0 && e2_max > 0.0 && n1 >= 2 && n2 >= 2 && n1 * n2 <= 1_000_000) {
        return Err("need positive ranges and 2 <= n, n1 * n2 <= 1e6".into());
    }
    let g = energy_rate_grid(k, mu, &linspace(-e1_max, e1_max, n1), &linspace(-e2_max, e2_max, n2)).map_err(msg)?;
    Ok(g.values)
}

/// Measured and fitted response of the synthetic voice coil.
#[wasm_bindgen]
pub struct Identification {
    omega: Vec<f64>,
    magnitude: Vec<f64>,
    phase_deg: Vec<f64>,
    pub gain: f64,
    pub tau: f64,
    pub true_gain: f64,
    pub true_tau: f64,
    pub omega_c: f64,
    pub margin_deg: f64,
}

#[wasm_bindgen]
impl Identification {
    #[wasm_bindgen(getter)]
    pub fn omega(&self) -> Vec<f64> {
        self.omega.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn magnitude(&self) -> Vec<f64> {
        self.magnitude.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn phase_deg(&self) -> Vec<f64> {
        self.phase_deg.clone()
    }
}

/// Identifies the lab voice coil with the given friction (N) and ripple
/// (N) levels, fits `(K, tau)` and evaluates the PD loop of gain `gamma`
/// on the measured points.
#[wasm_bindgen]
pub fn identify(coulomb: f64, ripple: f64, gamma: f64, points: usize) -> Result<Identification, String> {
    if !(2..=60).contains(&points) {
        return Err(format!("points must be in 2..=60, got {points}"));
    }
    let mut p = VoiceCoilParams::lab();
    p.coulomb = coulomb;
    p.ripple_amplitude = ripple;
    let id = IdConfig::motor_preset(logspace(1.0, 1000.0, points));
    let fr = sysid::measure_fr(&PlantSpec::VoiceCoil(p), &id).map_err(msg)?;
    let fit = sysid::fit_model(&fr).map_err(msg)?;
    let (omega_c, margin) = sysid::crossover_margin(&LoopSource::Points(&fr), gamma, fit.tau).map_err(msg)?;
    Ok(Identification {
        omega: fr.iter().map(|q| q.omega).collect(),
        magnitude: fr.iter().map(|q| q.magnitude).collect(),
        phase_deg: fr.iter().map(|q| q.phase.to_degrees()).collect(),
        gain: fit.gain,
        tau: fit.tau,
        true_gain: p.effective_gain(),
        true_tau: p.motor.tau,
        omega_c,
        margin_deg: margin.to_degrees(),
    })
}

/// Default regularization, for the page's initial form values.
#[wasm_bindgen]
pub fn default_mu() -> f64 {
    DEFAULT_MU
}
