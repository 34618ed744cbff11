use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nqp_core::fno::FnoConfig;
use nqp_core::integrators::TimeGrid;
use nqp_core::system::{System, SystemConfig};
use nqp_core::training::TrainConfig;

use crate::error::{CliError, CliResult};

pub const OUTPUT_DIR_ENV: &str = "NQP_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "nqp-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Rk4,
    Expm,
    Fno,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub t_max: f64,
    pub n_steps: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        let g = TimeGrid::default_window();
        Self {
            t_max: g.t_max,
            n_steps: g.n_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSpec {
    pub n_train: usize,
    pub n_val: usize,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            n_train: 200,
            n_val: 200,
        }
    }
}

/// Network architecture; the state length and grid size follow from the
/// system and grid sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    pub n_fourier_layers: usize,
    pub modes_kmax: usize,
    pub hidden_channels: usize,
    pub projection_hidden: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        let r = FnoConfig::reference(1);
        Self {
            n_fourier_layers: r.n_fourier_layers,
            modes_kmax: r.modes_kmax,
            hidden_channels: r.hidden_channels,
            projection_hidden: r.projection_hidden,
        }
    }
}

/// Training settings; the seed comes from the top-level `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSpec {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub adam_betas: [f64; 2],
    pub adam_eps: f64,
    pub physics_weight: f64,
    pub onthefly_samples: usize,
    pub checkpoint_every: usize,
    pub validate_every: usize,
}

impl Default for TrainSpec {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr: t.lr,
            adam_betas: t.adam_betas,
            adam_eps: t.adam_eps,
            physics_weight: t.physics_weight,
            onthefly_samples: t.onthefly_samples,
            checkpoint_every: t.checkpoint_every,
            validate_every: t.validate_every,
        }
    }
}

/// One TCF time axis: `windows` backend windows sampled every `stride`
/// grid steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub windows: usize,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TcfSpec {
    pub first_order: AxisSpec,
    pub second_order_t1: AxisSpec,
    pub second_order_t2: AxisSpec,
}

impl Default for TcfSpec {
    fn default() -> Self {
        let desk = AxisSpec {
            windows: 10,
            stride: 5,
        };
        Self {
            first_order: AxisSpec {
                windows: 50,
                stride: 1,
            },
            second_order_t1: desk,
            second_order_t2: desk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub grid: GridSpec,
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    pub train: TrainSpec,
    pub tcf: TcfSpec,
    pub backend: BackendKind,
    pub output_dir: Option<String>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig::named("fmo7"),
            grid: GridSpec::default(),
            dataset: DatasetSpec::default(),
            model: ModelSpec::default(),
            train: TrainSpec::default(),
            tcf: TcfSpec::default(),
            backend: BackendKind::Rk4,
            output_dir: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::parse(&text)
            }
        }
    }

    /// Canonical text form; parsing it back yields an equal config.
    pub fn emit(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn system(&self) -> CliResult<System> {
        Ok(System::from_config(&self.system)?)
    }

    pub fn time_grid(&self) -> CliResult<TimeGrid> {
        Ok(TimeGrid::new(self.grid.t_max, self.grid.n_steps)?)
    }

    pub fn fno_config(&self, system: &System) -> CliResult<FnoConfig> {
        Ok(FnoConfig {
            n_fourier_layers: self.model.n_fourier_layers,
            modes_kmax: self.model.modes_kmax,
            hidden_channels: self.model.hidden_channels,
            projection_hidden: self.model.projection_hidden,
            state_dim: system.dim() * system.dim(),
            grid_points: self.grid.n_steps + 1,
        }
        .validated()?)
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr: t.lr,
            adam_betas: t.adam_betas,
            adam_eps: t.adam_eps,
            physics_weight: t.physics_weight,
            onthefly_samples: t.onthefly_samples,
            seed: self.seed,
            checkpoint_every: t.checkpoint_every,
            validate_every: t.validate_every,
        }
    }

    /// Flag, then config, then environment, then `./nqp-out`.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(p) = &self.output_dir {
            return PathBuf::from(p);
        }
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(p) if !p.is_empty() => PathBuf::from(p),
            _ => PathBuf::from(FALLBACK_OUTPUT_DIR),
        }
    }
}
