//! Registered scenarios and the runner.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use ond_core::controllers::{ControllerSpec, PdGains, DEFAULT_MU};
use ond_core::differentiator::{smd_step, LpfState, SmdGains, SmdState};
use ond_core::landscape::energy_rate_grid;
use ond_core::math::logspace;
use ond_core::plants::{PlantSpec, State2, VoiceCoilParams};
use ond_core::presets::{self, Law};
use ond_core::signals::{sample_noise, NoiseSpec, ReferenceSpec};
use ond_core::sim::{self, SimConfig, SimTrace, NUMERICAL_FLOOR};
use ond_core::sysid::{self, IdConfig, LoopSource, ModelFr};
use serde::Serialize;

use crate::config::{LandscapeGrid, ScenarioConfig};
use crate::report::{step_metrics, trace_metrics, Check, ScenarioReport, SummaryReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Per-step tolerance on the growth of `V` along OND trajectories.
const V_STEP_TOL: f64 = 1e-9;

/// Everything a scenario body can read.
pub struct Ctx<'a> {
    pub name: &'a str,
    pub config: &'a ScenarioConfig,
    pub seed: u64,
    pub root: &'a Path,
}

impl Ctx<'_> {
    pub fn dir(&self) -> PathBuf {
        self.root.join(self.name)
    }

    fn create(&self, rep: &mut ScenarioReport, file: &str) -> anyhow::Result<BufWriter<File>> {
        let dir = self.dir();
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(file);
        let f = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        rep.files.push(format!("{}/{file}", self.name));
        Ok(BufWriter::new(f))
    }

    /// `file` plus a `.meta.toml` sidecar echoing `cfg`.
    fn write_trace(
        &self,
        rep: &mut ScenarioReport,
        file: &str,
        trace: &SimTrace,
        cfg: &SimConfig,
    ) -> anyhow::Result<()> {
        trace.write_csv(self.create(rep, file)?)?;
        #[derive(Serialize)]
        struct Meta<'a> {
            scenario: &'a str,
            seed: u64,
            version: &'a str,
            trace: &'a str,
            config: &'a SimConfig,
        }
        let meta = Meta {
            scenario: self.name,
            seed: self.seed,
            version: VERSION,
            trace: file,
            config: cfg,
        };
        let stem = file.strip_suffix(".csv").unwrap_or(file);
        let text = toml::to_string(&meta)?;
        let path = self.dir().join(format!("{stem}.meta.toml"));
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        rep.files.push(format!("{}/{stem}.meta.toml", self.name));
        Ok(())
    }

    fn write_table(
        &self,
        rep: &mut ScenarioReport,
        file: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<f64>>,
    ) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(self.create(rep, file)?);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

type Body = fn(&Ctx, &mut ScenarioReport) -> anyhow::Result<()>;

pub struct Scenario {
    pub name: &'static str,
    pub about: &'static str,
    body: Body,
}

pub const CUSTOM: &str = "custom";

pub static SCENARIOS: &[Scenario] = &[
    Scenario {
        name: "figures/fig1-phase-portrait",
        about: "regularized OND on the double integrator from six starts",
        body: fig1_phase_portrait,
    },
    Scenario {
        name: "figures/fig2-gain-sweep",
        about: "OND from (1, 0) for k = 10, 100, 1000; time to |x1| < 1e-3",
        body: fig2_gain_sweep,
    },
    Scenario {
        name: "figures/fig4-piecewise-tracking",
        about: "OND tracking a piecewise-linear reference on the double integrator",
        body: fig4_piecewise_tracking,
    },
    Scenario {
        name: "figures/fig5-convergence",
        about: "OND against critically damped PD, crossover of |x1|",
        body: fig5_convergence,
    },
    Scenario {
        name: "figures/fig6-energy-landscape",
        about: "|dV/dt| over an (e1, e2) grid",
        body: fig6_energy_landscape,
    },
    Scenario {
        name: "experiments/sine-0.5hz",
        about: "voice coil, OND and PD tracking a 0.5 Hz sinusoid",
        body: sine_half_hz,
    },
    Scenario {
        name: "experiments/sine-2hz",
        about: "voice coil, OND and PD tracking a 2 Hz sinusoid",
        body: sine_two_hz,
    },
    Scenario {
        name: "experiments/slope-tracking",
        about: "voice coil, 0.002 m/s slope; steady-state |e1| of OND and PD",
        body: slope_tracking,
    },
    Scenario {
        name: "experiments/step-disturbance",
        about: "voice coil, 8 mm step then a 1.5 N press",
        body: step_disturbance,
    },
    Scenario {
        name: "sysid/fr-measure",
        about: "closed-loop frequency response, (K, tau) fit and PD crossover",
        body: fr_measure,
    },
    Scenario {
        name: "sysid/fit-selftest",
        about: "fit of a synthetic first-order-lag response",
        body: fit_selftest,
    },
    Scenario {
        name: "estimators/smd-vs-lpf",
        about: "sliding-mode differentiator against a 200 Hz Butterworth difference",
        body: smd_vs_lpf,
    },
    Scenario {
        name: "theory/disturbance-offset",
        about: "scaled OND on the lag motor under constant disturbance, x1 -> xi/k",
        body: disturbance_offset,
    },
    Scenario {
        name: CUSTOM,
        about: "the [sim] loop of the config file as given",
        body: custom,
    },
];

pub fn find(name: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name)
}

/// Scenarios matching a glob. `*` does not cross `/`, and `custom` is only
/// selected by its exact name.
pub fn select(selector: &str) -> anyhow::Result<Vec<&'static Scenario>> {
    let pattern = glob::Pattern::new(selector).with_context(|| format!("bad selector {selector:?}"))?;
    let opts = glob::MatchOptions {
        case_sensitive: true,
        require_literal_separator: true,
        require_literal_leading_dot: false,
    };
    let hits: Vec<_> = SCENARIOS
        .iter()
        .filter(|s| {
            if s.name == CUSTOM {
                selector == CUSTOM
            } else {
                pattern.matches_with(s.name, opts)
            }
        })
        .collect();
    if hits.is_empty() {
        bail!("no registered scenario matches {selector:?} (see --list)");
    }
    Ok(hits)
}

pub fn run_one(s: &Scenario, config: &ScenarioConfig, seed: u64, root: &Path) -> ScenarioReport {
    let ctx = Ctx {
        name: s.name,
        config,
        seed,
        root,
    };
    let mut rep = ScenarioReport::new(s.name, seed);
    let outcome = (s.body)(&ctx, &mut rep);
    rep.finish(outcome);
    rep
}

/// Runs the scenarios concurrently, one thread each; the summary keeps the
/// given order.
pub fn run_all(selected: &[&Scenario], config: &ScenarioConfig, seed: u64, root: &Path) -> SummaryReport {
    let scenario = std::thread::scope(|scope| {
        let handles: Vec<_> = selected
            .iter()
            .map(|s| scope.spawn(move || run_one(s, config, seed, root)))
            .collect();
        handles
            .into_iter()
            .zip(selected)
            .map(|(h, s)| {
                h.join().unwrap_or_else(|_| {
                    let mut rep = ScenarioReport::new(s.name, seed);
                    rep.finish(Err(anyhow::anyhow!("panicked")));
                    rep
                })
            })
            .collect()
    });
    SummaryReport {
        version: VERSION.to_string(),
        scenario,
    }
}

pub fn write_summary(root: &Path, summary: &SummaryReport) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
    let path = root.join("summary.toml");
    fs::write(&path, toml::to_string(summary)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn v_non_increasing(tr: &SimTrace) -> f64 {
    tr.energy.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

fn record_tracking(rep: &mut ScenarioReport, prefix: &str, tr: &SimTrace, from: f64) {
    let m = trace_metrics(tr, from);
    rep.metrics
        .insert(format!("{prefix}terminal_abs_e1"), m.terminal_abs_e1);
    rep.metrics.insert(format!("{prefix}rms_e1"), m.rms_e1);
    rep.metrics.insert(format!("{prefix}max_abs_e1"), m.max_abs_e1);
}

const FIG_K: f64 = 100.0;

fn fig1_phase_portrait(ctx: &Ctx, rep: &mut ScenarioReport) -> anyhow::Result<()> {
    let starts = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.5, 5.0),
        (-0.5, -5.0),
        (1.0, -20.0),
        (-1.0, 20.0),
    ];
    let mut worst_rise: f64 = 0.0;
    for (i, &(x1, x2)) in starts.iter().enumerate() {
        let mut cfg = presets::double_integrator_ond(FIG_K, DEFAULT_MU, State2::new(x1, x2), 2.0);
        cfg.record_stride = 10;
        let tr = sim::run_closed_loop(&cfg)?;
        ctx.write_trace(rep, &format!("start{i}.csv"), &tr, &cfg)?;
        let last = tr.len() - 1;
        let norm = State2::new(tr.x1_true[last], tr.x2_true[last]).norm();
        rep.metrics.insert(format!("start{i}.terminal_norm"), norm);
        worst_rise = worst_rise.max(v_non_increasing(&tr));
    }
    rep.checks
        .push(Check::at_most("max V increase per sample", worst_rise, V_STEP_TOL));
    Ok(())
}

/// First time `|x1| < threshold`.
fn reach_time(tr: &SimTrace, threshold: f64) -> f64 {
    tr.x1_true
        .iter()
        .position(|x| x.abs() < threshold)
        .map_or(f64::INFINITY, |i| tr.t[i])
}

fn fig2_gain_sweep(ctx: &Ctx, rep: &mut ScenarioReport) -> anyhow::Result<()> {
    let gains = [10.0, 100.0, 1000.0];
    let mut times = Vec::new();
    for k in gains {
        let mut cfg = presets::double_integrator_ond(k, DEFAULT_MU, State2::new(1.0, 0.0), 3.0);
        cfg.record_stride = 10;
        let tr = sim::run_closed_loop(&cfg)?;
        ctx.write_trace(rep, &format!("k{k}.csv"), &tr, &cfg)?;
        let t = reach_time(&tr, 1e-3);
        rep.metrics.insert(format!("k{k}.time_to_1e-3"), t);
        times.push(t);
    }
    ctx.write_table(
        rep,
        "sweep.csv",
        &["k", "time_to_1e-3"],
        gains.iter().zip(&times).map(|(k, t)| vec![*k, *t]),
    )?;
    let decreasing = times.iter().all(|t| t.is_finite()) && times.windows(2).all(|w| w[1] < w[0]);
    rep.checks
        .push(Check::holds("time to 1e-3 strictly decreasing in k", decreasing));
    Ok(())
}

fn fig4_piecewise_tracking(ctx: &Ctx, rep: &mut ScenarioReport) -> anyhow::Result<()> {
    let mut cfg = presets::double_integrator_ond(FIG_K, DEFAULT_MU, State2::ZERO, 6.0);
    cfg.reference = presets::piecewise_reference();
    cfg.record_stride = 10;
    let tr = sim::run_closed_loop(&cfg)?;
    ctx.write_trace(rep, "ond.csv", &tr, &cfg)?;
    record_tracking(rep, "", &tr, 0.0);
    rep.checks
        .push(Check::at_most("terminal |e1|", rep.metrics["terminal_abs_e1"], 1e-3));
    Ok(())
}

fn fig5_convergence(ctx: &Ctx, rep: &mut ScenarioReport) -> anyhow::Result<()> {
    let report = sim::run_convergence_benchmark(FIG_K, DEFAULT_MU, 2.0 / FIG_K.sqrt(), State2::new(1.0, 0.0), 3.0)?;
    let mut ond_cfg = presets::double_integrator_ond(FIG_K, DEFAULT_MU, State2::new(1.0, 0.0), 3.0);
    ond_cfg.record_stride = sim::BENCHMARK_STRIDE;
    let mut pd_cfg = ond_cfg.clone();
    pd_cfg.controller = ControllerSpec::Pd(PdGains::new(FIG_K, 2.0 / FIG_K.sqrt()));
    ctx.write_trace(rep, "ond.csv", &report.ond, &ond_cfg)?;
    ctx.write_trace(rep, "pd.csv", &report.pd, &pd_cfg)?;
    rep.metrics
        .insert("crossover_time".into(), report.crossover.unwrap_or(f64::NAN));
    rep.metrics.insert(
        "ond.terminal_abs_x1".into(),
        report.ond.x1_true.last().map_or(f64::NAN, |v| v.abs()),
    );
    rep.metrics.insert(
        "pd.terminal_abs_x1".into(),
        report.pd.x1_true.last().map_or(f64::NAN, |v| v.abs()),
    );
    let floor = report.ond.x1_true.iter().position(|x| x.abs() < NUMERICAL_FLOOR);
    rep.metrics
        .insert("ond.floor_time".into(), floor.map_or(f64::NAN, |i| report.ond.t[i]));
    rep.checks.push(Check::at_most(
        "OND max V increase per sample",
        v_non_increasing(&report.ond),
        V_STEP_TOL,
    ));
    Ok(())
}

fn fig6_energy_landscape(ctx: &Ctx, rep: &mut ScenarioReport) -> anyhow::Result<()> {
    let grid = ctx.config.landscape.clone().unwrap_or_default();
    let checks = export_landscape(&grid, &mut ctx.create(rep, "landscape.csv")?)?;
    rep.metrics.insert("max_rate".into(), checks.max_rate);
    if let Some(row) = checks.zero_row_max {
        rep.checks.push(Check::at_most("max |dV/dt| on e2 = 0", row, 0.0));
    }
    if let Some(slope) = checks.cubic_slope {
        rep.checks
            .push(Check::at_most("|log-log slope in e2 - 3|", (slope - 3.0).abs(), 1e-6));
    }
    rep.checks.push(Check::holds(
        "strictly decreasing in |e1| for e2 != 0",
        checks.decreasing_in_e1,
    ));
    Ok(())
}

/// Summary of an exported energy-rate grid.
pub struct LandscapeChecks {
    pub max_rate: f64,
    /// Largest value on an `e2 = 0` row, if the axis contains zero.
    pub zero_row_max: Option<f64>,
    /// Log-log slope in `e2` between the two largest positive `e2`
    /// values, at the `e1` closest to zero.
    pub cubic_slope: Option<f64>,
    pub decreasing_in_e1: bool,
}

/// Writes `e1,e2,v_dot_abs` rows of the grid to `out`.
pub fn export_landscape<W: std::io::Write>(grid: &LandscapeGrid, out: W) -> anyhow::Result<LandscapeChecks> {
    grid.e1.validate("e1")?;
    grid.e2.validate("e2")?;
    let g = energy_rate_grid(grid.k, grid.mu, &grid.e1.points(), &grid.e2.points())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["e1", "e2", "v_dot_abs"])?;
    for (i, e1) in g.e1.iter().enumerate() {
        for (j, e2) in g.e2.iter().enumerate() {
            w.write_record([e1.to_string(), e2.to_string(), g.at(i, j).to_string()])?;
        }
    }
    w.flush()?;

    let zero_row_max =
        g.e2.iter()
            .position(|&e2| e2 == 0.0)
            .map(|j| (0..g.e1.len()).map(|i| g.at(i, j)).fold(0.0, f64::max));

    let i0 = (0..g.e1.len())
        .min_by(|&a, &b| g.e1[a].abs().total_cmp(&g.e1[b].abs()))
        .expect("axis validated non-empty");
    let mut positive: Vec<usize> = (0..g.e2.len()).filter(|&j| g.e2[j] > 0.0).collect();
    positive.sort_by(|&a, &b| g.e2[a].total_cmp(&g.e2[b]));
    let cubic_slope = match positive.as_slice() {
        [.., a, b] => Some((g.at(i0, *b) / g.at(i0, *a)).ln() / (g.e2[*b] / g.e2[*a]).ln()),
        _ => None,
    };

    // each half-axis on its own: mirrored points need not round to the
    // same |e1|
    let half = |positive: bool| {
        let mut idx: Vec<usize> = (0..g.e1.len())
            .filter(|&i| if positive { g.e1[i] >= 0.0 } else { g.e1[i] <= 0.0 })
            .collect();
        idx.sort_by(|&a, &b| g.e1[a].abs().total_cmp(&g.e1[b].abs()));
        idx
    };
    let (right, left) = (half(true), half(false));
    let decreasing_in_e1 = (0..g.e2.len()).filter(|&j| g.e2[j] != 0.0).all(|j| {
        [&right, &left]
            .iter()
            .all(|idx| idx.windows(2).all(|w| g.at(w[1], j) < g.at(w[0], j)))
    });

    Ok(LandscapeChecks {
        max_rate: g.max(),
        zero_row_max,
        cubic_slope,
        decreasing_in_e1,
    })
}

fn rig_pair(
    ctx: &Ctx,
    rep: &mut ScenarioReport,
    reference: ReferenceSpec,
    horizon: f64,
) -> anyhow::Result<[(SimConfig, SimTrace); 2]> {
    let run = |law: Law| -> anyhow::Result<(SimConfig, SimTrace)> {
        let cfg = presets::voice_coil(law, reference.clone(), horizon, ctx.seed);
        let tr = sim::run_closed_loop(&cfg).with_context(|| format!("{} run", law.label()))?;
        Ok((cfg, tr))
    };
    let pair = [run(Law::Ond)?, run(Law::Pd)?];
    for (law, (cfg, tr)) in [Law::Ond, Law::Pd].iter().zip(&pair) {
        ctx.write_trace(rep, &format!("{}.csv", law.label()), tr, cfg)?;
    }
    Ok(pair)
}

/// Declared OND tracking tolerance of the sine runs, relative to the 4 mm
/// amplitude. PD is only compared against OND.
const SINE_RMS_OF_AMPLITUDE: f64 = 0.05;
const SINE_MAX_OF_AMPLITUDE: f64 = 0.1;

fn sine(ctx: &Ctx, rep: &mut ScenarioReport, hz: f64) -> anyhow::Result<()> {
    let period = 1.0 / hz;
    let amplitude = 0.004;
    let pair = rig_pair(ctx, rep, presets::sine_reference(hz), 3.0 * period)?;
    for (law, (_, tr)) in [Law::Ond, Law::Pd].iter().zip(&pair) {
        record_tracking(rep, &format!("{}.", law.label()), tr, period);
    }
    let m = &rep.metrics;
    let checks = [
        Check::at_most(
            "ond.rms_e1 after first period",
            m["ond.rms_e1"],
            SINE_RMS_OF_AMPLITUDE * amplitude,
        ),
        Check::at_most(
            "ond.max_abs_e1 after first period",
            m["ond.max_abs_e1"],
            SINE_MAX_OF_AMPLITUDE * amplitude,
        ),
        Check::at_most("ond.rms_e1 minus pd.rms_e1", m["ond.rms_e1"] - m["pd.rms_e1"], 0.0),
    ];
    rep.checks.extend(checks);
    Ok(())
}

fn sine_half_hz(ctx: &Ctx, rep: &mut ScenarioReport) -> anyhow::Result<()> {
    sine(ctx, rep, 0.5)
}

fn sine_two_hz(ctx: &Ctx, rep: &mut ScenarioReport) -> anyhow::Result<()> {
    sine(ctx, rep, 2.0)
}

fn slope_tracking(ctx: &Ctx, rep: &mut ScenarioReport) -> anyhow::Result<()> {
    let horizon = presets::SLOPE_HORIZON;
    let pair = rig_pair(ctx, rep, presets::slope_reference(), horizon)?;
    let mut steady = [0.0; 2];
    for (k, (law, (_, tr))) in [Law::Ond, Law::Pd].iter().zip(&pair).enumerate() {
        let from = tr.t.iter().position(|&t| t >= horizon - 1.0).unwrap_or(0);
        steady[k] = tr.e1[from..].iter().map(|e| e.abs()).sum::<f64>() / (tr.len() - from) as f64;
        rep.metrics
            .insert(format!("{}.steady_mean_abs_e1", law.label()), steady[k]);
        record_tracking(rep, &format!("{}.", law.label()), tr, 0.5);
    }
    rep.checks.push(Check::at_most(
        "OND steady |e1| minus PD steady |e1|",
        steady[0] - steady[1],
        0.0,
    ));
    Ok(())
}

fn step_disturbance(ctx: &Ctx, rep: &mut ScenarioReport) -> anyhow::Result<()> {
    let horizon = 4.0;
    let run = |law: Law| -> anyhow::Result<(SimConfig, SimTrace)> {
        let mut cfg = presets::voice_coil(law, presets::step_reference(), horizon, ctx.seed);
        cfg.disturbance = presets::press_disturbance();
        let tr = sim::run_closed_loop(&cfg).with_context(|| format!("{} run", law.label()))?;
        Ok((cfg, tr))
    };
    for law in [Law::Ond, Law::Pd] {
        let (cfg, tr) = run(law)?;
        ctx.write_trace(rep, &format!("{}.csv", law.label()), &tr, &cfg)?;
        let p = law.label();
        let m = step_metrics(&tr, 0.002, 0.010, 0.2, 1.5, 0.02);
        rep.metrics.insert(format!("{p}.overshoot"), m.overshoot);
        rep.metrics.insert(format!("{p}.settling_time"), m.settling_time);
        let press = trace_metrics_between(&tr, 1.5, 3.0);
        rep.metrics.insert(format!("{p}.press_max_abs_e1"), press);
        let tail = trace_metrics(&tr, 3.5);
        rep.metrics.insert(format!("{p}.terminal_abs_e1"), tail.terminal_abs_e1);
        rep.checks
            .push(Check::below(&format!("{p}.settling_time"), m.settling_time, 0.5));
        rep.checks
            .push(Check::at_most(&format!("{p}.overshoot"), m.overshoot, 0.1));
        rep.checks.push(Check::at_most(
            &format!("{p}.max_abs_e1 after the press"),
            tail.max_abs_e1,
            2e-4,
        ));
    }
    Ok(())
}

fn trace_metrics_between(tr: &SimTrace, from: f64, to: f64) -> f64 {
    (0..tr.len())
        .filter(|&i| tr.t[i] >= from && tr.t[i] <= to)
        .map(|i| tr.e1[i].abs())
        .fold(0.0, f64::max)
}

/// Output gain of the PD loop the identified model is tuned for.
const ID_GAMMA: f64 = 1000.0;
const FIT_REL_LINEAR: f64 = 0.01;
const FIT_REL_VOICE_COIL: f64 = 0.15;

fn fr_measure(ctx: &Ctx, rep: &mut ScenarioReport) -> anyhow::Result<()> {
    let plant = ctx
        .config
        .sim
        .as_ref()
        .map_or_else(|| PlantSpec::VoiceCoil(VoiceCoilParams::lab()), |s| s.plant.clone());
    let id = ctx
        .config
        .id
        .clone()
        .unwrap_or_else(|| IdConfig::motor_preset(logspace(1.0, 1000.0, 20)));
    let points = sysid::measure_fr(&plant, &id)?;
    sysid::write_fr_csv(&points, ctx.create(rep, "fr.csv")?)?;
    let fit = sysid::fit_model(&points)?;
    rep.metrics.insert("fit.K".into(), fit.gain);
    rep.metrics.insert("fit.tau".into(), fit.tau);
    rep.metrics.insert("fit.residual".into(), fit.residual);
    rep.metrics
        .insert("fit.excluded_points".into(), fit.excluded_points.len() as f64);
    let (wc, margin) = sysid::crossover_margin(&LoopSource::Points(&points), ID_GAMMA, fit.tau)?;
    rep.metrics.insert("omega_c".into(), wc);
    rep.metrics.insert("phase_margin_deg".into(), margin.to_degrees());
    // friction and force ripple bias the describing-function gain of the
    // voice coil by about 10 %; the linear plants are recovered to roundoff
    let truth = match &plant {
        PlantSpec::Motor(p) => Some((p.gain, p.tau, FIT_REL_LINEAR)),
        PlantSpec::VoiceCoil(p) => Some((p.effective_gain(), p.motor.tau, FIT_REL_VOICE_COIL)),
        PlantSpec::DoubleIntegrator => None,
    };
    if let Some((gain, tau, rel)) = truth {
        rep.checks.push(Check::within("fit.K", fit.gain, gain, rel));
        rep.checks.push(Check::within("fit.tau", fit.tau, tau, rel));
    }
    Ok(())
}

fn fit_selftest(ctx: &Ctx, rep: &mut ScenarioReport) -> anyhow::Result<()> {
    let truth = ModelFr::new(0.0463, 0.0076);
    let points = sysid::synthetic_fr(&truth, &logspace(1.0, 1000.0, 30));
    sysid::write_fr_csv(&points, ctx.create(rep, "fr.csv")?)?;
    let fit = sysid::fit_model(&points)?;
    rep.metrics.insert("fit.K".into(), fit.gain);
    rep.metrics.insert("fit.tau".into(), fit.tau);
    rep.checks.push(Check::within("fit.K", fit.gain, truth.gain, 1e-6));
    rep.checks.push(Check::within("fit.tau", fit.tau, truth.tau, 1e-6));
    let (wc, margin) = sysid::crossover_margin(&LoopSource::Model(truth), ID_GAMMA, fit.tau)?;
    rep.metrics.insert("omega_c".into(), wc);
    rep.metrics.insert("phase_margin_deg".into(), margin.to_degrees());
    rep.checks
        .push(Check::within("omega_c", wc, truth.gain * ID_GAMMA, 1e-6));
    rep.checks
        .push(Check::within("phase_margin_deg", margin.to_degrees(), 90.0, 1e-6));
    Ok(())
}

fn smd_vs_lpf(ctx: &Ctx, rep: &mut ScenarioReport) -> anyhow::Result<()> {
    let (amp, omega, dt, n) = (0.005, 10.0, 1e-4, 30_000usize);
    let peak = amp * omega;
    let noise = NoiseSpec {
        sensor_std: presets::RIG_NOISE_STD,
        seed: ctx.seed,
    };
    let gains = SmdGains::default();
    let mut smd: Option<SmdState> = None;
    let mut lpf = LpfState::new(200.0, dt)?;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 * dt;
        let meas = amp * (omega * t).sin() + sample_noise(&noise, i as u64);
        let s = match smd {
            None => SmdState::init(meas),
            Some(s) => smd_step(s, meas, &gains, dt),
        };
        smd = Some(s);
        rows.push(vec![t, meas, peak * (omega * t).cos(), s.y1, lpf.step(meas)]);
    }
    // estimators have settled well within the first second
    let from = (1.0 / dt) as usize;
    let rms =
        |col: usize| (rows[from..].iter().map(|r| (r[col] - r[2]).powi(2)).sum::<f64>() / (n - from) as f64).sqrt();
    let (smd_rms, lpf_rms) = (rms(3), rms(4));
    rep.metrics.insert("smd.rms_error".into(), smd_rms);
    rep.metrics.insert("lpf.rms_error".into(), lpf_rms);
    ctx.write_table(rep, "velocity.csv", &["t", "x1_meas", "v_true", "v_smd", "v_lpf"], rows)?;
    rep.checks
        .push(Check::below("smd.rms_error / peak velocity", smd_rms / peak, 0.05));
    Ok(())
}

fn disturbance_offset(ctx: &Ctx, rep: &mut ScenarioReport) -> anyhow::Result<()> {
    let k = FIG_K;
    let motor = VoiceCoilParams::lab().motor;
    let loaded = sim::run_disturbance_steady_state(k, 1.0, motor)?;
    let free = sim::run_disturbance_steady_state(k, 0.0, motor)?;
    ctx.write_table(
        rep,
        "offset.csv",
        &["xi", "terminal_x1", "xi_over_k"],
        [vec![1.0, loaded, 1.0 / k], vec![0.0, free, 0.0]],
    )?;
    rep.metrics.insert("xi1.terminal_x1".into(), loaded);
    rep.metrics.insert("xi0.terminal_x1".into(), free);
    rep.checks
        .push(Check::within("xi = 1 terminal x1", loaded, 1.0 / k, 0.01));
    rep.checks.push(Check::below("xi = 0 |terminal x1|", free.abs(), 1e-9));
    Ok(())
}

fn custom(ctx: &Ctx, rep: &mut ScenarioReport) -> anyhow::Result<()> {
    let Some(cfg) = &ctx.config.sim else {
        bail!("custom scenario needs a [sim] section");
    };
    let mut cfg = cfg.clone();
    cfg.noise.seed = ctx.seed;
    let tr = sim::run_closed_loop(&cfg)?;
    ctx.write_trace(rep, "trace.csv", &tr, &cfg)?;
    record_tracking(rep, "", &tr, 0.0);
    rep.metrics.insert("max_V_increase".into(), v_non_increasing(&tr));
    Ok(())
}
