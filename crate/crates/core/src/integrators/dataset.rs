//! Training data: GUE initial states propagated by RK4, with a binary
//! container format (magic `NQD1`).

use std::path::Path;

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::container::{Container, ContainerWriter};
use crate::error::{Error, Result};
use crate::integrators::grid::{TimeGrid, Trajectory};
use crate::integrators::gue::gue_density;
use crate::integrators::rk4::propagate;
use crate::lindblad::{DensityState, C64};
use crate::rng::{stream_rng, DOMAIN_DATASET};
use crate::system::{System, SystemConfig};

pub const DATASET_MAGIC: &[u8; 4] = b"NQD1";

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Position in the generation sequence; train samples come first.
    pub index: usize,
    pub trajectory: Trajectory,
}

impl Sample {
    pub fn initial(&self) -> &DensityState {
        self.trajectory.initial()
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub system: System,
    pub grid: TimeGrid,
    pub seed: u64,
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SampleManifest {
    split: String,
    index: usize,
    array: String,
}

/// Samples `n_train + n_val` GUE densities (one RNG stream per sample index)
/// and propagates each with RK4 over `grid`.
pub fn generate_dataset(
    system: &System,
    grid: &TimeGrid,
    n_train: usize,
    n_val: usize,
    seed: u64,
) -> Result<Dataset> {
    if n_train == 0 || n_val == 0 {
        return Err(Error::Domain(format!(
            "dataset sizes must be >= 1 (train {n_train}, validation {n_val})"
        )));
    }
    let l = system.liouvillian()?;
    let n = system.dim();
    let samples: Vec<Sample> = (0..n_train + n_val)
        .into_par_iter()
        .map(|index| {
            let s0 = gue_density(n, &mut stream_rng(seed, DOMAIN_DATASET, index as u64));
            let trajectory = propagate(&l, &s0, grid)?;
            Ok(Sample { index, trajectory })
        })
        .collect::<Result<_>>()?;
    let mut train = samples;
    let validation = train.split_off(n_train);
    Ok(Dataset {
        system: system.clone(),
        grid: *grid,
        seed,
        train,
        validation,
    })
}

fn flatten(traj: &Trajectory) -> Vec<f64> {
    traj.states
        .iter()
        .flat_map(|s| s.vec().iter().flat_map(|z| [z.re, z.im]).collect::<Vec<_>>())
        .collect()
}

impl Dataset {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = ContainerWriter::new();
        let mut manifest = Vec::new();
        let g = self.grid.n_points();
        let d = self.system.dim() * self.system.dim();
        for (split, set) in [("train", &self.train), ("validation", &self.validation)] {
            for s in set {
                let name = format!("{split}/{}", s.index);
                w.push(&name, &[g, d, 2], &flatten(&s.trajectory));
                manifest.push(SampleManifest {
                    split: split.into(),
                    index: s.index,
                    array: name,
                });
            }
        }
        let header = json!({
            "format": "nqp-dataset",
            "version": 1,
            "system": self.system.to_config(),
            "grid": self.grid,
            "seed": self.seed,
            "n_train": self.train.len(),
            "n_val": self.validation.len(),
            "samples": manifest,
        });
        w.to_bytes(DATASET_MAGIC, header)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::container::write_atomic(path, &self.to_bytes()?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let c = Container::from_bytes(bytes, DATASET_MAGIC)?;
        let h = &c.header;
        let system_cfg: SystemConfig = serde_json::from_value(h["system"].clone())?;
        let system = System::from_config(&system_cfg)?;
        let grid: TimeGrid = serde_json::from_value(h["grid"].clone())?;
        let seed = h["seed"]
            .as_u64()
            .ok_or_else(|| Error::Format("dataset header lacks a seed".into()))?;
        let manifest: Vec<SampleManifest> = serde_json::from_value(h["samples"].clone())?;
        let n = system.dim();
        let g = grid.n_points();
        let mut train = Vec::new();
        let mut validation = Vec::new();
        for m in manifest {
            let (shape, values) = c.array(&m.array)?;
            if shape != [g, n * n, 2] {
                return Err(Error::Format(format!(
                    "sample {} has shape {shape:?}, expected [{g}, {}, 2]",
                    m.array,
                    n * n
                )));
            }
            let states = values
                .chunks_exact(2 * n * n)
                .map(|chunk| {
                    let v: Array1<C64> = chunk.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
                    DensityState::from_vec(n, v).map(DensityState::assume_physical)
                })
                .collect::<Result<Vec<_>>>()?;
            let sample = Sample {
                index: m.index,
                trajectory: Trajectory { grid, states },
            };
            match m.split.as_str() {
                "train" => train.push(sample),
                "validation" => validation.push(sample),
                other => return Err(Error::Format(format!("unknown split {other:?}"))),
            }
        }
        Ok(Self {
            system,
            grid,
            seed,
            train,
            validation,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
