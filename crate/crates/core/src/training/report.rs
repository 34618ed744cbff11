use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::container::write_atomic;
use crate::error::Result;
use crate::format::f17;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub l_data: f64,
    pub l_phys: f64,
    /// Mean validation data loss, on epochs where validation ran.
    pub validation_loss: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub best_validation_loss: Option<f64>,
    /// Per-sample validation errors of the returned (best) parameters.
    pub validation_errors: Vec<f64>,
}

impl LossReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,l_data,l_phys,seconds\n");
        for r in &self.epochs {
            let _ = writeln!(s, "{},{},{},{}", r.epoch, f17(r.l_data), f17(r.l_phys), f17(r.seconds));
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes `loss.csv` and `loss.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("loss.csv"), self.to_csv().as_bytes())?;
        write_atomic(&dir.join("loss.json"), self.to_json()?.as_bytes())
    }

    pub fn is_finite(&self) -> bool {
        self.epochs.iter().all(|r| {
            r.l_data.is_finite()
                && r.l_phys.is_finite()
                && r.validation_loss.is_none_or(f64::is_finite)
        }) && self.validation_errors.iter().all(|x| x.is_finite())
    }

    /// Best validation loss among epochs in `range` (1-based, inclusive).
    pub fn best_validation_in(&self, first: usize, last: usize) -> Option<f64> {
        self.epochs
            .iter()
            .filter(|r| r.epoch >= first && r.epoch <= last)
            .filter_map(|r| r.validation_loss)
            .min_by(f64::total_cmp)
    }
}
