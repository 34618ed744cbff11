use std::path::Path;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::fno::checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
use crate::fno::grad::{fno_gradient, GradientItem, Objective, GRADIENT_CHUNK};
use crate::fno::model::predict;
use crate::fno::{init_params, FnoConfig, FnoParams};
use crate::integrators::{Dataset, Trajectory};
use crate::lindblad::{Liouvillian, C64};
use crate::rng::{stream_rng, DOMAIN_SHUFFLE};
use crate::training::adam::{Adam, AdamConfig};
use crate::training::loss::data_loss_value;
use crate::training::onthefly::onthefly_sample;
use crate::training::report::{EpochRecord, LossReport};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub adam_betas: [f64; 2],
    pub adam_eps: f64,
    pub physics_weight: f64,
    pub onthefly_samples: usize,
    pub seed: u64,
    /// Write checkpoints every this many epochs (0: only at the end).
    pub checkpoint_every: usize,
    /// Evaluate the validation set every this many epochs; the last epoch is
    /// always evaluated.
    pub validate_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            batch_size: 20,
            lr: 1e-3,
            adam_betas: [0.9, 0.999],
            adam_eps: 1e-8,
            physics_weight: 1.0,
            onthefly_samples: 400,
            seed: 0,
            checkpoint_every: 100,
            validate_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(self.physics_weight >= 0.0 && self.physics_weight.is_finite()) {
            return bad("physics_weight must be non-negative");
        }
        let [b1, b2] = self.adam_betas;
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return bad("adam_betas must lie in [0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be positive");
        }
        if self.validate_every == 0 {
            return bad("validate_every must be positive");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.adam_betas[0],
            beta2: self.adam_betas[1],
            eps: self.adam_eps,
        }
    }
}

/// Everything needed to continue a run.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: FnoParams,
    pub optimizer: Adam,
    pub epochs_done: usize,
    pub best: Option<BestParams>,
    pub report: LossReport,
}

#[derive(Debug, Clone)]
pub struct BestParams {
    pub params: FnoParams,
    pub epoch: usize,
    pub validation_loss: f64,
}

impl TrainState {
    pub fn new(fno: &FnoConfig, train: &TrainConfig) -> Result<Self> {
        let params = init_params(fno, train.seed)?;
        let optimizer = Adam::new(train.adam(), &params.config);
        Ok(Self {
            params,
            optimizer,
            epochs_done: 0,
            best: None,
            report: LossReport::default(),
        })
    }

    /// Parameters with the lowest validation loss seen so far, or the current
    /// ones if validation never ran.
    pub fn best_params(&self) -> &FnoParams {
        self.best.as_ref().map_or(&self.params, |b| &b.params)
    }

    /// Writes `final.nqp`, `best.nqp`, `optimizer.nqa`, `loss.csv` and
    /// `loss.json` into `dir`.
    pub fn save(&self, dir: &Path, t_max: f64) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let meta = |label: &str, epoch, validation_loss| CheckpointMeta {
            epoch,
            tool_version: TOOL_VERSION.to_string(),
            label: label.to_string(),
            validation_loss,
            t_max,
        };
        save_checkpoint(&dir.join("final.nqp"), &self.params, &meta("final", self.epochs_done, None))?;
        match &self.best {
            Some(b) => save_checkpoint(
                &dir.join("best.nqp"),
                &b.params,
                &meta("best", b.epoch, Some(b.validation_loss)),
            )?,
            None => save_checkpoint(&dir.join("best.nqp"), &self.params, &meta("best", self.epochs_done, None))?,
        }
        self.optimizer.save(
            &dir.join("optimizer.nqa"),
            json!({ "epochs_done": self.epochs_done }),
        )?;
        self.report.save(dir)
    }

    /// Restores a state written by [`Self::save`].
    pub fn load(dir: &Path) -> Result<Self> {
        let (params, _) = load_checkpoint(&dir.join("final.nqp"))?;
        let (best_params, best_meta) = load_checkpoint(&dir.join("best.nqp"))?;
        let (optimizer, extra) = Adam::from_bytes(&std::fs::read(dir.join("optimizer.nqa"))?)?;
        let epochs_done = extra["epochs_done"]
            .as_u64()
            .ok_or_else(|| Error::Format("optimizer state lacks epochs_done".into()))?
            as usize;
        let report = LossReport::from_json(&std::fs::read_to_string(dir.join("loss.json"))?)?;
        if report.epochs.len() != epochs_done {
            return Err(Error::Format(format!(
                "loss report has {} epochs but optimizer state records {epochs_done}",
                report.epochs.len()
            )));
        }
        if params.config != optimizer_config(&optimizer) {
            return Err(Error::Format("checkpoint and optimizer state disagree on architecture".into()));
        }
        let best = best_meta.validation_loss.map(|v| BestParams {
            params: best_params,
            epoch: best_meta.epoch,
            validation_loss: v,
        });
        Ok(Self {
            params,
            optimizer,
            epochs_done,
            best,
            report,
        })
    }
}

fn optimizer_config(a: &Adam) -> FnoConfig {
    a.model_config()
}

pub(crate) fn trajectory_matrix(t: &Trajectory) -> Array2<C64> {
    let g = t.len();
    let d = t.states[0].vec().len();
    let mut m = Array2::zeros((g, d));
    for (k, s) in t.states.iter().enumerate() {
        m.row_mut(k).assign(s.vec());
    }
    m
}

fn check_grid(fno: &FnoConfig, dataset: &Dataset) -> Result<()> {
    let g = dataset.grid.n_points();
    if g != fno.grid_points {
        return Err(Error::Config(format!(
            "dataset grid has {g} points but the model expects {}",
            fno.grid_points
        )));
    }
    let d = dataset.system.dim().pow(2);
    if d != fno.state_dim {
        return Err(Error::Config(format!(
            "dataset states have length {d} but the model expects {}",
            fno.state_dim
        )));
    }
    Ok(())
}

/// Relative data loss of every validation sample, in dataset order.
pub fn validate(params: &FnoParams, dataset: &Dataset) -> Result<Vec<f64>> {
    check_grid(&params.config, dataset)?;
    let chunks: Vec<Vec<f64>> = dataset
        .validation
        .par_chunks(GRADIENT_CHUNK)
        .map(|chunk| {
            let inputs: Vec<_> = chunk.iter().map(|s| s.initial().vec().view()).collect();
            let outputs = predict(params, &inputs)?;
            outputs
                .iter()
                .zip(chunk)
                .map(|(o, s)| data_loss_value(o.view(), trajectory_matrix(&s.trajectory).view()))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Trains from freshly initialized parameters and returns the
/// best-validation parameters with the loss report.
pub fn train(
    fno: &FnoConfig,
    cfg: &TrainConfig,
    dataset: &Dataset,
    liouvillian: &Liouvillian,
) -> Result<(FnoParams, LossReport)> {
    let state = TrainState::new(fno, cfg)?;
    let state = train_from(state, cfg, dataset, liouvillian, None)?;
    Ok((state.best_params().clone(), state.report))
}

/// Runs epochs `state.epochs_done + 1 ..= cfg.epochs`, writing checkpoints to
/// `out_dir` every `cfg.checkpoint_every` epochs and at the end. Shuffling and
/// on-the-fly samples are keyed by `(seed, epoch)`, so a resumed run follows
/// the same path as an uninterrupted one.
pub fn train_from(
    mut state: TrainState,
    cfg: &TrainConfig,
    dataset: &Dataset,
    liouvillian: &Liouvillian,
    out_dir: Option<&Path>,
) -> Result<TrainState> {
    cfg.validate()?;
    check_grid(&state.params.config, dataset)?;
    if liouvillian.dim() != state.params.config.state_dim {
        return Err(Error::dim("liouvillian dimension", state.params.config.state_dim, liouvillian.dim()));
    }
    let n = dataset.system.dim();
    let dt = dataset.grid.dt();
    let targets: Vec<Array2<C64>> = dataset
        .train
        .iter()
        .map(|s| trajectory_matrix(&s.trajectory))
        .collect();
    let inputs: Vec<&Array1<C64>> = dataset.train.iter().map(|s| s.initial().vec()).collect();
    let n_batches = targets.len().div_ceil(cfg.batch_size);

    for epoch in state.epochs_done + 1..=cfg.epochs {
        let start = Instant::now();
        let mut order: Vec<usize> = (0..targets.len()).collect();
        order.shuffle(&mut stream_rng(cfg.seed, DOMAIN_SHUFFLE, epoch as u64));
        let phys = onthefly_sample(cfg.onthefly_samples, n, cfg.seed, epoch as u64);

        let mut data_losses = Vec::with_capacity(targets.len());
        let mut phys_losses = Vec::with_capacity(phys.len());
        for b in 0..n_batches {
            let ids = &order[b * cfg.batch_size..((b + 1) * cfg.batch_size).min(order.len())];
            let ps = &phys[b * phys.len() / n_batches..(b + 1) * phys.len() / n_batches];
            let wd = 1.0 / ids.len() as f64;
            let wp = if ps.is_empty() { 0.0 } else { cfg.physics_weight / ps.len() as f64 };
            let mut items: Vec<GradientItem> = ids
                .iter()
                .map(|&i| GradientItem {
                    input: inputs[i].view(),
                    objective: Objective::Data(targets[i].view()),
                    weight: wd,
                })
                .collect();
            items.extend(ps.iter().map(|p| GradientItem {
                input: p.view(),
                objective: Objective::Physics { liouvillian, dt },
                weight: wp,
            }));
            let res = fno_gradient(&state.params, &items).map_err(|e| diverged(epoch, e))?;
            data_losses.extend_from_slice(&res.item_losses[..ids.len()]);
            phys_losses.extend_from_slice(&res.item_losses[ids.len()..]);
            state.optimizer.update(&mut state.params, &res.grad);
            if !state.params.is_finite() {
                return Err(Error::Numerical(format!("training diverged at epoch {epoch}: non-finite parameters")));
            }
        }

        let validation_loss = if epoch % cfg.validate_every == 0 || epoch == cfg.epochs {
            let v = mean(&validate(&state.params, dataset).map_err(|e| diverged(epoch, e))?);
            if !v.is_finite() {
                return Err(Error::Numerical(format!("training diverged at epoch {epoch}: validation loss {v}")));
            }
            if state.best.as_ref().is_none_or(|b| v < b.validation_loss) {
                state.best = Some(BestParams {
                    params: state.params.clone(),
                    epoch,
                    validation_loss: v,
                });
            }
            Some(v)
        } else {
            None
        };
        let record = EpochRecord {
            epoch,
            l_data: mean(&data_losses),
            l_phys: mean(&phys_losses),
            validation_loss,
            seconds: start.elapsed().as_secs_f64(),
        };
        if !(record.l_data.is_finite() && record.l_phys.is_finite()) {
            return Err(Error::Numerical(format!("training diverged at epoch {epoch}")));
        }
        log::info!(
            "epoch {epoch}: l_data {:.4e} l_phys {:.4e} val {} ({:.2}s)",
            record.l_data,
            record.l_phys,
            validation_loss.map_or("-".to_string(), |v| format!("{v:.4e}")),
            record.seconds
        );
        state.report.epochs.push(record);
        state.epochs_done = epoch;
        if let Some(b) = &state.best {
            state.report.best_epoch = Some(b.epoch);
            state.report.best_validation_loss = Some(b.validation_loss);
        }
        if let Some(dir) = out_dir {
            if cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 && epoch != cfg.epochs {
                state.save(dir, dataset.grid.t_max)?;
            }
        }
    }

    state.report.validation_errors = validate(state.best_params(), dataset)?;
    if let Some(dir) = out_dir {
        state.save(dir, dataset.grid.t_max)?;
    }
    Ok(state)
}

fn diverged(epoch: usize, e: Error) -> Error {
    match e {
        Error::Numerical(m) => Error::Numerical(format!("training diverged at epoch {epoch}: {m}")),
        other => other,
    }
}
