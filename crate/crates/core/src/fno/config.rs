use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture of the neural propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FnoConfig {
    pub n_fourier_layers: usize,
    pub modes_kmax: usize,
    pub hidden_channels: usize,
    pub projection_hidden: usize,
    /// `N²`, the length of a vectorized density matrix.
    pub state_dim: usize,
    pub grid_points: usize,
}

impl FnoConfig {
    /// Six Fourier layers of 256 channels keeping 32 modes, 512-wide
    /// projections, on a 51-point window.
    pub fn reference(state_dim: usize) -> Self {
        Self {
            n_fourier_layers: 6,
            modes_kmax: 32,
            hidden_channels: 256,
            projection_hidden: 512,
            state_dim,
            grid_points: 51,
        }
    }

    /// Checks sizes and clips `modes_kmax` to `⌊G/2⌋ + 1`.
    pub fn validated(mut self) -> Result<Self> {
        let fields = [
            ("n_fourier_layers", self.n_fourier_layers),
            ("modes_kmax", self.modes_kmax),
            ("hidden_channels", self.hidden_channels),
            ("projection_hidden", self.projection_hidden),
            ("state_dim", self.state_dim),
            ("grid_points", self.grid_points),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("FNO config field {name} must be positive")));
        }
        if self.grid_points < 5 {
            return Err(Error::Config(format!(
                "FNO grid needs at least 5 points for the time-derivative stencil, got {}",
                self.grid_points
            )));
        }
        self.modes_kmax = self.modes_kmax.min(self.grid_points / 2 + 1);
        Ok(self)
    }

    pub fn input_channels(&self) -> usize {
        self.state_dim + 1
    }

    /// Number of real scalars in the parameter set.
    pub fn n_real_parameters(&self) -> usize {
        let dense = |i: usize, o: usize| i * o + o;
        let c = self.hidden_channels;
        let p = self.projection_hidden;
        let complex = dense(self.input_channels(), p)
            + dense(p, c)
            + self.n_fourier_layers * (self.modes_kmax * c * c + dense(c, c))
            + dense(c, p)
            + dense(p, self.state_dim);
        2 * complex
    }
}
