//! The JSON run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use thinktank_core::dataset::{default_countries, default_cutoff, GeneratorSpec, SourceFormat, DEFAULT_WINDOW_DAYS};
use thinktank_core::router::Hyperparameters;
use thinktank_core::{CountryCode, StrategyConfig};

use crate::error::CliError;

/// How `gen-panel` builds the mock panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PanelSpec {
    /// One specialist per selected country.
    Specialists { p_home: f64, p_away: f64 },
    /// A single expert with accuracy `p` everywhere.
    Generalist { p: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub corpus: Option<u64>,
    pub panel: Option<u64>,
    pub supervision: Option<u64>,
    pub router: Option<u64>,
    pub eval: Option<u64>,
}

fn default_format() -> SourceFormat {
    SourceFormat::Tsv
}

fn default_window() -> u32 {
    DEFAULT_WINDOW_DAYS
}

fn default_history_limit() -> usize {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Event source read by `ingest`/`prepare` and written by `gen-corpus`.
    pub events: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub format: SourceFormat,
    pub output_dir: PathBuf,
    /// Panel file; defaults to `<output_dir>/panel.json`.
    pub panel: Option<PathBuf>,
    /// Router model file; defaults to `<output_dir>/router.json`.
    pub router_model: Option<PathBuf>,
    #[serde(default = "default_cutoff")]
    pub cutoff: NaiveDate,
    #[serde(default = "default_window")]
    pub window_days: u32,
    #[serde(default = "default_history_limit")]
    pub history_limit: usize,
    /// Selected countries; defaults to the 35-country set.
    pub countries: Option<Vec<CountryCode>>,
    pub corpus: Option<GeneratorSpec>,
    pub panel_spec: Option<PanelSpec>,
    /// Concurrent expert calls per query in written panels.
    pub fanout: Option<usize>,
    #[serde(default)]
    pub router: Hyperparameters,
    pub strategy: Option<StrategyConfig>,
    #[serde(default)]
    pub seeds: Seeds,
    pub parallelism: Option<usize>,
}

impl RunConfig {
    /// Reads a config; relative paths resolve against the config's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.output_dir);
        for p in [&mut config.events, &mut config.panel, &mut config.router_model].into_iter().flatten() {
            resolve(p);
        }
        Ok(config)
    }

    pub fn countries(&self) -> Vec<CountryCode> {
        self.countries.clone().unwrap_or_else(default_countries)
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    pub fn events_path(&self) -> Result<&Path, CliError> {
        self.events.as_deref().ok_or_else(|| CliError::Config("config has no \"events\" path".into()))
    }

    pub fn panel_path(&self) -> PathBuf {
        self.panel.clone().unwrap_or_else(|| self.out("panel.json"))
    }

    pub fn router_path(&self) -> PathBuf {
        self.router_model.clone().unwrap_or_else(|| self.out("router.json"))
    }

    pub fn untrained_router_path(&self) -> PathBuf {
        self.out("router_untrained.json")
    }
}

pub fn require(seed: Option<u64>, name: &str) -> Result<u64, CliError> {
    seed.ok_or_else(|| CliError::Config(format!("config must set seeds.{name}")))
}
