//! TOML run configuration.
//!
//! Every section is optional and falls back to the defaults below. Unknown
//! keys are rejected, and `schema_version` must equal [`SCHEMA_VERSION`].
//!
//! ```toml
//! schema_version = 1
//!
//! [benchmark]
//! regimes = ["I", "II", "III"]
//! sample_sizes = [100, 200, 400, 800]
//! methods = ["fpca:0.8", "fpca:0.85", "fpca:0.9", "fpca:0.95", "fpca:0.99", "tikhonov:cv"]
//! replications = 50
//! test_length = 200
//! master_seed = 20240601
//! threads = 1
//! ```

use serde::{Deserialize, Serialize};
use tikfar::evaluation::{BenchmarkConfig, FitOptions, MethodSpec};
use tikfar::preprocess::{GapPolicy, PipelineConfig};
use tikfar::simulator::{OperatorScaling, RegimeId, RegimeSpec};

use crate::error::{CliError, Result};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub benchmark: BenchmarkSection,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub rolling: RollingSection,
    #[serde(default)]
    pub verify: VerifySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            simulate: SimulateSection::default(),
            benchmark: BenchmarkSection::default(),
            pipeline: PipelineConfig::default(),
            rolling: RollingSection::default(),
            verify: VerifySection::default(),
        }
    }
}

/// A preset regime by name (`"I"`, `"II"`, `"III"`) or a full table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegimeEntry {
    Preset(String),
    Custom(RegimeSpec),
}

impl RegimeEntry {
    /// Presets take `scaling` when given; custom tables keep their own.
    pub fn resolve(&self, scaling: Option<OperatorScaling>) -> Result<RegimeSpec> {
        match self {
            RegimeEntry::Preset(name) => {
                let id: RegimeId = name.parse()?;
                let mut spec = RegimeSpec::preset(id);
                if let Some(s) = scaling {
                    spec.scaling = s;
                }
                Ok(spec)
            }
            RegimeEntry::Custom(spec) => Ok(spec.clone()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    /// Applied to preset regimes.
    pub scaling: Option<OperatorScaling>,
    /// Custom regimes, selected by label.
    pub regimes: Vec<RegimeSpec>,
}

impl SimulateSection {
    /// A custom regime whose label matches, else the named preset.
    pub fn regime(&self, name: &str) -> Result<RegimeSpec> {
        if let Some(spec) = self.regimes.iter().find(|r| r.label == name) {
            spec.validate()?;
            return Ok(spec.clone());
        }
        RegimeEntry::Preset(name.to_string()).resolve(self.scaling)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSection {
    pub regimes: Vec<RegimeEntry>,
    /// Applied to preset regimes.
    pub scaling: Option<OperatorScaling>,
    pub sample_sizes: Vec<usize>,
    pub methods: Vec<MethodSpec>,
    pub replications: usize,
    pub test_length: usize,
    pub master_seed: u64,
    pub threads: usize,
    pub fit: FitOptions,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        let base = BenchmarkConfig::default();
        Self {
            regimes: RegimeId::ALL
                .iter()
                .map(|id| RegimeEntry::Preset(id.label().to_string()))
                .collect(),
            scaling: None,
            sample_sizes: base.sample_sizes,
            methods: base.methods,
            replications: base.replications,
            test_length: base.test_length,
            master_seed: base.master_seed,
            threads: 1,
            fit: base.fit,
        }
    }
}

impl BenchmarkSection {
    pub fn resolve(&self) -> Result<BenchmarkConfig> {
        let config = BenchmarkConfig {
            regimes: self
                .regimes
                .iter()
                .map(|r| r.resolve(self.scaling))
                .collect::<Result<_>>()?,
            sample_sizes: self.sample_sizes.clone(),
            methods: self.methods.clone(),
            replications: self.replications,
            test_length: self.test_length,
            master_seed: self.master_seed,
            fit: self.fit,
        };
        config.validate()?;
        if self.threads == 0 {
            return Err(CliError::Config("threads must be positive".into()));
        }
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RollingSection {
    pub window: usize,
    pub refit_every: usize,
    pub gap_policy: GapPolicy,
    pub cv_folds: usize,
    pub methods: Vec<MethodSpec>,
    pub threads: usize,
}

impl Default for RollingSection {
    fn default() -> Self {
        let base = tikfar::preprocess::RollingConfig::default();
        Self {
            window: base.window,
            refit_every: base.refit_every,
            gap_policy: base.gap_policy,
            cv_folds: base.cv_folds,
            methods: MethodSpec::benchmark_set(),
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Source exponents of the diagonal bias probes.
    pub betas: Vec<f64>,
    pub probe_dim: usize,
    /// Multiplies ρ in the bound; values below 1 are negative controls.
    pub rho_scale: f64,
    pub oracle_instances: usize,
    pub seed: u64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            betas: vec![0.25, 0.5, 1.0, 2.0],
            probe_dim: 200,
            rho_scale: 1.0,
            oracle_instances: 5,
            seed: 1,
        }
    }
}

impl VerifySection {
    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() {
            return Err(CliError::Config("verify.betas must not be empty".into()));
        }
        if self.betas.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(CliError::Config("verify.betas must be positive".into()));
        }
        if self.probe_dim == 0 {
            return Err(CliError::Config("verify.probe_dim must be positive".into()));
        }
        if !(self.rho_scale.is_finite() && self.rho_scale > 0.0) {
            return Err(CliError::Config("verify.rho_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Parses and validates a run configuration.
pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    #[derive(Deserialize)]
    struct Version {
        schema_version: Option<u32>,
    }
    let version: Version = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    match version.schema_version {
        Some(SCHEMA_VERSION) => {}
        Some(v) => {
            return Err(CliError::Config(format!(
                "unsupported schema_version {v} (expected {SCHEMA_VERSION})"
            )))
        }
        None => return Err(CliError::Config("missing schema_version".into())),
    }
    let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    config.pipeline.validate()?;
    config.verify.validate()?;
    Ok(config)
}

pub fn load_run_config(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    parse_run_config(&text)
}
