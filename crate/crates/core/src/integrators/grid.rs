use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::DensityState;

/// Uniform time grid `0, dt, …, t_max` in fs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, n_steps: usize) -> Result<Self> {
        if !t_max.is_finite() || t_max < 0.0 || (n_steps > 0 && t_max == 0.0) {
            return Err(Error::Domain(format!(
                "invalid time grid: t_max = {t_max} fs with {n_steps} steps"
            )));
        }
        Ok(Self { t_max, n_steps })
    }

    /// 30 fs in 50 steps of 0.6 fs.
    pub fn default_window() -> Self {
        Self {
            t_max: 30.0,
            n_steps: 50,
        }
    }

    pub fn dt(&self) -> f64 {
        if self.n_steps == 0 {
            0.0
        } else {
            self.t_max / self.n_steps as f64
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    pub fn point(&self, k: usize) -> f64 {
        if self.n_steps == 0 {
            0.0
        } else {
            self.t_max * k as f64 / self.n_steps as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points()).map(|k| self.point(k)).collect()
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self::default_window()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<DensityState>,
}

impl Trajectory {
    pub fn initial(&self) -> &DensityState {
        &self.states[0]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}
