use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use ond_cli::config::{Axis, LandscapeGrid, ScenarioConfig};
use ond_cli::report::Status;
use ond_cli::scenarios::{self, SCENARIOS};
use ond_core::sysid::{self, FitOptions, LoopSource, TuneOptions};

/// Scenario runner for the OND toolkit.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// List registered scenarios and exit.
    #[arg(long)]
    list: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenarios matching SELECTOR (a glob, e.g. `figures/*`).
    Run {
        /// Defaults to the config's `name`.
        selector: Option<String>,
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Overrides the config's `output_dir`.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Overrides the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Export |dV/dt| over an (e1, e2) grid as CSV.
    Landscape {
        #[arg(long, default_value_t = 100.0)]
        k: f64,
        #[arg(long, default_value_t = 1e-4)]
        mu: f64,
        /// `lo:hi:n`
        #[arg(long, default_value = "-1:1:101", allow_hyphen_values = true)]
        e1: Axis,
        #[arg(long, default_value = "-1:1:101", allow_hyphen_values = true)]
        e2: Axis,
        /// Defaults to stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Fit (K, tau) to a frequency-response CSV and report the PD crossover.
    Fit {
        fr_csv: PathBuf,
        #[arg(long, default_value_t = 1000.0)]
        gamma: f64,
        #[arg(long, default_value_t = FitOptions::default().slope_tol)]
        slope_tol: f64,
        #[arg(long, default_value_t = 0.0)]
        phase_weight: f64,
        /// Also tune gamma for this phase margin, degrees.
        #[arg(long)]
        target_margin: Option<f64>,
    },
}

fn list() {
    let width = SCENARIOS.iter().map(|s| s.name.len()).max().unwrap_or(0);
    for s in SCENARIOS {
        println!("{:width$}  {}", s.name, s.about);
    }
}

fn run(
    selector: Option<String>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> anyhow::Result<bool> {
    let config_path_given = config.is_some();
    let config = match (&config, &selector) {
        (Some(path), _) => ScenarioConfig::load(path)?,
        (None, Some(sel)) => ScenarioConfig::named(sel),
        (None, None) => bail!("give a scenario selector or --config"),
    };
    if config_path_given && scenarios::find(&config.name).is_none() {
        bail!(
            "config name {:?} is not a registered scenario (see --list)",
            config.name
        );
    }
    let selector = selector.unwrap_or_else(|| config.name.clone());
    let selected = scenarios::select(&selector)?;
    let root = out.unwrap_or_else(|| config.output_dir.clone());
    let seed = seed.unwrap_or(config.seed);

    let summary = scenarios::run_all(&selected, &config, seed, &root);
    for s in &summary.scenario {
        match s.status {
            Status::Ok => println!("ok      {} ({} checks)", s.name, s.checks.len()),
            Status::Failed => {
                println!("FAILED  {}", s.name);
                for c in s.checks.iter().filter(|c| !c.pass) {
                    println!("        {}: {} (want {})", c.name, c.value, c.tolerance);
                }
            }
            Status::Error => println!("ERROR   {}", s.error.as_deref().unwrap_or(&s.name)),
        }
    }
    let path = scenarios::write_summary(&root, &summary)?;
    println!("summary: {}", path.display());
    Ok(summary.all_ok())
}

fn landscape(grid: LandscapeGrid, out: Option<PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let f = std::fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
            scenarios::export_landscape(&grid, std::io::BufWriter::new(f))?;
        }
        None => {
            scenarios::export_landscape(&grid, std::io::stdout().lock())?;
        }
    }
    Ok(())
}

fn fit(path: PathBuf, gamma: f64, opts: FitOptions, target_margin: Option<f64>) -> anyhow::Result<()> {
    let f = std::fs::File::open(&path).with_context(|| format!("reading {}", path.display()))?;
    let points = sysid::read_fr_csv(f).with_context(|| format!("{}", path.display()))?;
    let fit = sysid::fit_model_with(&points, &opts)?;
    let source = LoopSource::Points(&points);
    let (wc, margin) = sysid::crossover_margin(&source, gamma, fit.tau)?;
    println!("K = {}", fit.gain);
    println!("tau = {}", fit.tau);
    println!("excluded_points = {:?}", fit.excluded_points);
    println!("residual = {}", fit.residual);
    println!("gamma = {gamma}");
    println!("omega_c = {wc}");
    println!("phase_margin_deg = {}", margin.to_degrees());
    if let Some(target) = target_margin {
        let t = sysid::tune_gamma(&source, target.to_radians(), fit.tau, &TuneOptions::default())?;
        println!("[tuned]");
        println!("gamma = {}", t.gamma);
        println!("omega_c = {}", t.omega_c);
        println!("phase_margin_deg = {}", t.margin.to_degrees());
        println!("gamma_independent = {}", t.gamma_independent);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list {
        list();
        return ExitCode::SUCCESS;
    }
    let outcome = match cli.command {
        None => {
            eprintln!("nothing to do; try --list or `run --help`");
            return ExitCode::from(2);
        }
        Some(Command::Run {
            selector,
            config,
            out,
            seed,
        }) => run(selector, config, out, seed),
        Some(Command::Landscape { k, mu, e1, e2, out }) => {
            landscape(LandscapeGrid { k, mu, e1, e2 }, out).map(|()| true)
        }
        Some(Command::Fit {
            fr_csv,
            gamma,
            slope_tol,
            phase_weight,
            target_margin,
        }) => fit(
            fr_csv,
            gamma,
            FitOptions {
                slope_tol,
                phase_weight,
            },
            target_margin,
        )
        .map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
