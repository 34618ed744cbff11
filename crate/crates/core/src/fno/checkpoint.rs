//! `NQP1` checkpoints: a JSON header (config, metadata, array manifest)
//! followed by little-endian f64 arrays, with real and imaginary parts of each
//! tensor stored as separate `<name>.re` / `<name>.im` arrays.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::container::{Container, ContainerWriter};
use crate::error::{Error, Result};
use crate::fno::config::FnoConfig;
use crate::fno::params::FnoParams;
use crate::lindblad::C64;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"NQP1";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    /// Epochs completed when the parameters were captured.
    pub epoch: usize,
    pub tool_version: String,
    /// Free-form tag, e.g. `best` or `final`.
    pub label: String,
    /// Validation loss of these parameters, when known.
    pub validation_loss: Option<f64>,
    /// Time-window length in fs the model was trained on.
    pub t_max: f64,
}

pub fn checkpoint_bytes(params: &FnoParams, meta: &CheckpointMeta) -> Result<Vec<u8>> {
    let mut w = ContainerWriter::new();
    for ((name, shape), values) in params.names().iter().zip(params.shapes()).zip(params.slices()) {
        let re: Vec<f64> = values.iter().map(|z| z.re).collect();
        let im: Vec<f64> = values.iter().map(|z| z.im).collect();
        w.push(format!("{name}.re"), &shape, &re);
        w.push(format!("{name}.im"), &shape, &im);
    }
    let header = json!({
        "format": "NQP1",
        "config": params.config,
        "metadata": meta,
    });
    w.to_bytes(CHECKPOINT_MAGIC, header)
}

pub fn save_checkpoint(path: &Path, params: &FnoParams, meta: &CheckpointMeta) -> Result<()> {
    crate::container::write_atomic(path, &checkpoint_bytes(params, meta)?)
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<(FnoParams, CheckpointMeta)> {
    let c = Container::from_bytes(bytes, CHECKPOINT_MAGIC)?;
    let config: FnoConfig = serde_json::from_value(c.header["config"].clone())?;
    let config = config.validated()?;
    let meta: CheckpointMeta = serde_json::from_value(c.header["metadata"].clone())?;
    let template = FnoParams::zeros(&config);
    let mut values = Vec::new();
    for (name, shape) in template.names().iter().zip(template.shapes()) {
        let (rs, re) = c.array(&format!("{name}.re"))?;
        let (is, im) = c.array(&format!("{name}.im"))?;
        if rs != shape.as_slice() || is != shape.as_slice() {
            return Err(Error::Format(format!(
                "tensor {name} has shape {rs:?}, config implies {shape:?}"
            )));
        }
        values.push(re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect::<Vec<_>>());
    }
    let params = FnoParams::from_slices(&config, &values)?;
    if !params.is_finite() {
        return Err(Error::Format("checkpoint contains non-finite parameters".into()));
    }
    Ok((params, meta))
}

pub fn load_checkpoint(path: &Path) -> Result<(FnoParams, CheckpointMeta)> {
    checkpoint_from_bytes(&std::fs::read(path)?)
}
