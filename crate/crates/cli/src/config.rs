//! The run configuration: one TOML file, overridden field-by-field by CLI
//! flags (flags win). Every field is validated against the owning module's
//! preconditions before any compute or file output starts.

use std::path::{Path, PathBuf};

use poishp::geometry::DomainPartition;
use poishp::inference::{AnnealingSchedule, Resampler, ScheduleShape, SmcConfig};
use poishp::{Error, Hyperparams, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 defers to `POISHP_WORKERS`, then rayon's default.
    pub workers: usize,
    pub output_dir: PathBuf,
    pub hyperparams: HyperparamsSection,
    pub smc: SmcSection,
    pub mcmc: McmcSection,
    pub decomposition: DecompositionSection,
    pub data: DataSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperparamsSection {
    pub a0: f64,
    pub b0: f64,
    pub mu0: f64,
    pub sigma0_sq: f64,
    pub n_planes: usize,
}

impl Default for HyperparamsSection {
    fn default() -> Self {
        Self {
            a0: 2.0,
            b0: 1.0,
            mu0: 0.0,
            sigma0_sq: 1.0,
            n_planes: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmcSection {
    pub particles: usize,
    pub power_steps: usize,
    /// "linear" or "geometric".
    pub schedule: String,
    pub geometric_rate: f64,
    pub resampler: Resampler,
    pub adaptive_resampling: bool,
    pub ess_threshold: f64,
}

impl Default for SmcSection {
    fn default() -> Self {
        Self {
            particles: 1000,
            power_steps: 100,
            schedule: "linear".into(),
            geometric_rate: 4.0,
            resampler: Resampler::Multinomial,
            adaptive_resampling: false,
            ess_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcSection {
    pub iterations: usize,
}

impl Default for McmcSection {
    fn default() -> Self {
        Self { iterations: 1000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecompositionSection {
    pub k: usize,
    pub axis: usize,
    /// Explicit cut points on the normalized axis; empty means K even slabs.
    pub cuts: Vec<f64>,
}

impl Default for DecompositionSection {
    fn default() -> Self {
        Self {
            k: 4,
            axis: 0,
            cuts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Response column: a header name or a zero-based index.
    pub response: String,
    /// Feature columns; empty selects everything except the response.
    pub features: Vec<String>,
    pub split_fraction: f64,
    pub generator: GeneratorSection,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            train: None,
            test: None,
            response: "y".into(),
            features: Vec::new(),
            split_fraction: 0.75,
            generator: GeneratorSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSection {
    /// One of sim1..sim4, or empty for fully explicit settings.
    pub preset: String,
    pub p: usize,
    pub m: usize,
    pub n: usize,
    pub noise_sd: f64,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        Self {
            preset: String::new(),
            p: 2,
            m: 2,
            n: 5000,
            noise_sd: 0.1,
        }
    }
}

impl GeneratorSection {
    /// The four synthetic-study presets; a named preset pins its own
    /// values, except the sweep parameters of sim2 which stay overridable.
    pub fn resolved(&self) -> Result<(usize, usize, usize, f64)> {
        match self.preset.as_str() {
            "" => Ok((self.p, self.m, self.n, self.noise_sd)),
            "sim1" | "sim4" => Ok((2, 2, 5000, 0.1)),
            "sim2" => Ok((self.p.max(1), self.m, 5000, 0.1)),
            "sim3" => Ok((2, 40, 5000, 0.1)),
            other => Err(Error::Config(format!(
                "unknown generator preset {other:?} (expected sim1..sim4)"
            ))),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Worker count after applying the environment default.
    pub fn effective_workers(&self) -> usize {
        if self.workers > 0 {
            return self.workers;
        }
        std::env::var("POISHP_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0)
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            a0: self.hyperparams.a0,
            b0: self.hyperparams.b0,
            mu0: self.hyperparams.mu0,
            sigma0_sq: self.hyperparams.sigma0_sq,
            n_planes: self.hyperparams.n_planes,
            domain_radius: 1.0,
        }
    }

    pub fn schedule(&self) -> Result<AnnealingSchedule> {
        let shape = match self.smc.schedule.as_str() {
            "linear" => ScheduleShape::Linear,
            "geometric" => ScheduleShape::Geometric(self.smc.geometric_rate),
            other => {
                return Err(Error::Config(format!(
                    "unknown schedule shape {other:?} (expected linear or geometric)"
                )))
            }
        };
        poishp::inference::make_schedule(self.smc.power_steps, shape)
    }

    pub fn smc_config(&self) -> SmcConfig {
        SmcConfig {
            particles: self.smc.particles,
            resampler: self.smc.resampler,
            adaptive_resampling: self.smc.adaptive_resampling,
            ess_threshold: self.smc.ess_threshold,
            workers: self.effective_workers(),
        }
    }

    pub fn partition(&self) -> Result<DomainPartition> {
        if self.decomposition.cuts.is_empty() {
            DomainPartition::even(self.decomposition.axis, self.decomposition.k, 1.0)
        } else {
            DomainPartition::new(
                self.decomposition.axis,
                self.decomposition.cuts.clone(),
                1.0,
            )
        }
    }

    /// Full validation against module preconditions, run before any side
    /// effect.
    pub fn validate(&self) -> Result<()> {
        self.hyperparams().validate()?;
        self.schedule()?;
        self.smc_config().validate()?;
        if !(self.data.split_fraction > 0.0 && self.data.split_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split fraction must lie in (0, 1), got {}",
                self.data.split_fraction
            )));
        }
        if self.mcmc.iterations < 1 {
            return Err(Error::Config("mcmc.iterations must be >= 1".into()));
        }
        let (p, _, n, noise) = self.data.generator.resolved()?;
        if p == 0 {
            return Err(Error::Config("generator dimension p must be >= 1".into()));
        }
        if n == 0 {
            return Err(Error::Config("generator size n must be >= 1".into()));
        }
        if noise < 0.0 {
            return Err(Error::Config("generator noise_sd must be >= 0".into()));
        }
        Ok(())
    }
}
