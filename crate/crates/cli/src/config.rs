//! Scenario config files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use ond_core::sim::SimConfig;
use ond_core::sysid::IdConfig;
use serde::{Deserialize, Serialize};

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// `(lo, hi, n)` axis, sampled with `n` evenly spaced points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        ond_core::math::linspace(self.lo, self.hi, self.n)
    }

    pub fn validate(&self, name: &str) -> anyhow::Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi && self.n >= 2) {
            bail!("{name}: need finite lo < hi and n >= 2");
        }
        Ok(())
    }
}

impl std::str::FromStr for Axis {
    type Err = anyhow::Error;

    /// `lo:hi:n`, e.g. `-1:1:101`.
    fn from_str(s: &str) -> anyhow::Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            bail!("expected lo:hi:n, got {s:?}");
        };
        let axis = Axis {
            lo: lo.trim().parse().with_context(|| format!("bad lower bound in {s:?}"))?,
            hi: hi.trim().parse().with_context(|| format!("bad upper bound in {s:?}"))?,
            n: n.trim().parse().with_context(|| format!("bad point count in {s:?}"))?,
        };
        axis.validate("axis")?;
        Ok(axis)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeGrid {
    pub k: f64,
    pub mu: f64,
    pub e1: Axis,
    pub e2: Axis,
}

impl Default for LandscapeGrid {
    fn default() -> Self {
        let axis = Axis {
            lo: -1.0,
            hi: 1.0,
            n: 101,
        };
        LandscapeGrid {
            k: 100.0,
            mu: 1e-4,
            e1: axis,
            e2: axis,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Registered scenario name or "custom".
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Loop of the `custom` scenario; `sysid/fr-measure` reads only its
    /// plant. The other scenarios run fixed presets. `seed` replaces
    /// `noise.seed`.
    #[serde(default)]
    pub sim: Option<SimConfig>,
    /// Identification setup for `sysid/fr-measure`.
    #[serde(default)]
    pub id: Option<IdConfig>,
    /// Grid for `figures/fig6-energy-landscape`.
    #[serde(default)]
    pub landscape: Option<LandscapeGrid>,
}

impl ScenarioConfig {
    pub fn named(name: &str) -> Self {
        ScenarioConfig {
            name: name.to_string(),
            seed: 0,
            output_dir: default_output_dir(),
            sim: None,
            id: None,
            landscape: None,
        }
    }

    pub fn parse(text: &str, origin: &str) -> anyhow::Result<Self> {
        // toml's message carries the line, column and offending key
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{origin}: {e}"))?;
        if let Some(sim) = &cfg.sim {
            sim.validate().with_context(|| format!("{origin}: [sim]"))?;
        }
        if let Some(id) = &cfg.id {
            id.validate().with_context(|| format!("{origin}: [id]"))?;
        }
        if let Some(grid) = &cfg.landscape {
            grid.e1.validate("[landscape] e1")?;
            grid.e2.validate("[landscape] e2")?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, &path.display().to_string())
    }
}
