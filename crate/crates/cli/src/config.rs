//! Run configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dphase_core::diagnostics::DiagnosticsOptions;
use dphase_core::galerkin::{Forcing, SolverConfig};
use dphase_core::{Error as CoreError, ExponentData, FieldSpec, ValidationReport};

use crate::error::{CliError, Result};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "DPHASE_WORKERS";

fn no_forcing() -> Forcing {
    Forcing::None
}

fn default_seed() -> u64 {
    0x5eed
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    #[serde(default)]
    pub description: String,
    pub data: ExponentData,
    #[serde(default)]
    pub solver: SolverConfig,
    pub initial: FieldSpec,
    #[serde(default = "no_forcing")]
    pub forcing: Forcing,
    #[serde(default)]
    pub exact: Option<ExactSolution>,
    #[serde(default)]
    pub diagnostics: DiagnosticsOptions,
    #[serde(default)]
    pub snapshots: Option<SnapshotConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub property: Option<PropertyConfig>,
    /// Relative paths resolve against the config file's directory.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

/// Reference solution for error reporting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactSolution {
    pub field: FieldSpec,
    /// Final-time L² error accepted, asserted when present.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotConfig {
    pub times: Vec<f64>,
    #[serde(default = "default_lattice")]
    pub lattice: usize,
}

fn default_lattice() -> usize {
    33
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Decreasing regularization parameters, solved at the base `m_per_dim`.
    #[serde(default)]
    pub eps: Vec<f64>,
    /// Increasing modes per axis, solved at the base `eps`.
    #[serde(default)]
    pub m: Vec<usize>,
    /// Decreasing time steps, solved at the base `eps` and `m_per_dim`.
    #[serde(default)]
    pub tau: Vec<f64>,
    #[serde(default)]
    pub stability: Option<StabilityConfig>,
    /// Ceiling on the last ε-Cauchy distance; unbounded when absent.
    #[serde(default)]
    pub cauchy_ceiling: Option<f64>,
    /// Ceiling on max/min of monitored quantities across sweep members.
    #[serde(default = "default_ratio_ceiling")]
    pub envelope_ratio_ceiling: f64,
    /// Relative h-stability tolerance of the second-order norms; skipped when absent.
    #[serde(default)]
    pub h_stability: Option<f64>,
}

fn default_ratio_ceiling() -> f64 {
    3.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    /// `v₀ = u₀ + δ · direction`
    pub direction: FieldSpec,
    pub deltas: Vec<f64>,
    /// `g = f + δ · forcing_direction`
    #[serde(default)]
    pub forcing_direction: Option<FieldSpec>,
    /// Additional random pairs drawn from the seed.
    #[serde(default)]
    pub random_pairs: usize,
}

/// Random bounded-data scenarios derived from the base configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyConfig {
    pub scenarios: usize,
    #[serde(default = "default_linf_slack")]
    pub linf_slack: f64,
    #[serde(default = "default_property_m")]
    pub m_per_dim: usize,
    #[serde(default = "default_property_tau")]
    pub tau: f64,
    #[serde(default = "default_property_horizon")]
    pub horizon: f64,
}

fn default_linf_slack() -> f64 {
    1e-3
}

fn default_property_m() -> usize {
    5
}

fn default_property_tau() -> f64 {
    1e-3
}

fn default_property_horizon() -> f64 {
    0.04
}

/// A parsed configuration with its source text for line anchoring.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub text: String,
    pub config: RunConfig,
}

impl LoadedConfig {
    /// The output directory, relative to the configuration's directory.
    pub fn output_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        if let Some(d) = override_dir {
            return d.to_path_buf();
        }
        let base = self.path.parent().unwrap_or(Path::new("."));
        match &self.config.output_dir {
            Some(d) if d.is_absolute() => d.clone(),
            Some(d) => base.join(d),
            None => base.join("out").join(&self.config.scenario),
        }
    }

    fn error_at(&self, key: &str, message: impl Into<String>) -> CliError {
        CliError::Config {
            path: self.path.clone(),
            line: line_of_key(&self.text, key),
            message: message.into(),
        }
    }

    /// Checks every block; returns the exponent-data validation report.
    pub fn validate(&self) -> Result<ValidationReport> {
        let c = &self.config;
        let report = c.data.validate().map_err(|e| match e {
            CoreError::Validation { condition, detail } => {
                self.error_at("data", format!("assumption {condition} violated: {detail}"))
            }
            other => self.error_at("data", other.to_string()),
        })?;
        let dim = c.data.dim;
        c.solver
            .check()
            .map_err(|e| self.error_at("solver", e.to_string()))?;
        c.initial
            .check(dim)
            .map_err(|e| self.error_at("initial", e.to_string()))?;
        c.forcing
            .check(dim)
            .map_err(|e| self.error_at("forcing", e.to_string()))?;
        c.diagnostics
            .check()
            .map_err(|e| self.error_at("diagnostics", e.to_string()))?;
        if let Some(ex) = &c.exact {
            ex.field
                .check(dim)
                .map_err(|e| self.error_at("exact", e.to_string()))?;
        }
        if let Some(s) = &c.snapshots {
            if s.lattice < 2 || s.times.iter().any(|t| !(*t >= 0.0 && *t <= c.data.horizon)) {
                return Err(self.error_at(
                    "snapshots",
                    "snapshot times must lie in [0, horizon] and lattice >= 2",
                ));
            }
        }
        if let Some(s) = &c.sweep {
            if s.eps.windows(2).any(|w| !(w[1] < w[0]))
                || s.eps.iter().any(|e| !(*e > 0.0 && *e < 1.0))
            {
                return Err(self.error_at("sweep", "sweep.eps must be decreasing values in (0,1)"));
            }
            if s.m.windows(2).any(|w| w[1] <= w[0]) || s.m.iter().any(|m| *m == 0) {
                return Err(self.error_at("sweep", "sweep.m must be increasing and positive"));
            }
            if s.tau.windows(2).any(|w| !(w[1] < w[0])) || s.tau.iter().any(|t| !(*t > 0.0)) {
                return Err(self.error_at("sweep", "sweep.tau must be decreasing and positive"));
            }
            if let Some(st) = &s.stability {
                st.direction
                    .check(dim)
                    .map_err(|e| self.error_at("stability", e.to_string()))?;
                if st.deltas.windows(2).any(|w| !(w[1] < w[0]))
                    || st.deltas.iter().any(|d| !(*d > 0.0))
                {
                    return Err(self.error_at(
                        "stability",
                        "stability.deltas must be decreasing and positive",
                    ));
                }
            }
        }
        if let Some(p) = &c.property {
            if p.m_per_dim == 0 || !(p.tau > 0.0) || !(p.horizon > 0.0) {
                return Err(self.error_at(
                    "property",
                    "property block needs positive m_per_dim, tau and horizon",
                ));
            }
        }
        if c.workers == Some(0) {
            return Err(self.error_at("workers", "workers must be positive"));
        }
        Ok(report)
    }
}

/// Parses a TOML run configuration, or the `config` echo inside a run manifest.
pub fn load(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config = if path.extension().is_some_and(|e| e == "json") {
        #[derive(Deserialize)]
        struct Echo {
            config: RunConfig,
        }
        serde_json::from_str::<Echo>(&text)
            .map_err(|e| CliError::Config {
                path: path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })?
            .config
    } else {
        parse_toml(path, &text)?
    };
    Ok(LoadedConfig {
        path: path.to_path_buf(),
        text,
        config,
    })
}

pub fn parse_toml(path: &Path, text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| {
            text[..s.start.min(text.len())].matches('\n').count() + 1
        });
        CliError::Config {
            path: path.to_path_buf(),
            line,
            message: e.message().trim().to_string(),
        }
    })
}

/// First line declaring `key` as a table or an assignment; 1 when absent.
pub fn line_of_key(text: &str, key: &str) -> usize {
    let dotted = format!("{key}.");
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        let hit = if let Some(r) = l.strip_prefix('[') {
            let name = r.trim_start_matches('[').split(']').next().unwrap_or("");
            name.split('.').any(|part| part.trim() == key)
        } else if let Some((lhs, _)) = l.split_once('=') {
            let lhs = lhs.trim();
            lhs == key || lhs.starts_with(&dotted)
        } else {
            false
        };
        if hit {
            return i + 1;
        }
    }
    1
}

/// Worker count from the flag or environment, then the file, then the machine.
pub fn resolve_workers(cli: Option<usize>, cfg: &RunConfig) -> usize {
    cli.or(cfg.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}
