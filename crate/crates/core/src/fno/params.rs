use ndarray::{Array1, Array2, Array3, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::fno::config::FnoConfig;
use crate::lindblad::C64;
use crate::rng::{stream_rng, DOMAIN_INIT};

/// Pointwise complex linear map `x ↦ x W + b` with `W` of shape `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<C64>,
    pub bias: Array1<C64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn forward(&self, x: ArrayView2<C64>) -> Array2<C64> {
        let mut y = x.dot(&self.weight);
        y += &self.bias;
        y
    }
}

/// One Fourier layer: per-mode spectral weights plus a pointwise bypass.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierLayerParams {
    /// `modes × C × C`
    pub spectral: Array3<C64>,
    pub bypass: Dense,
}

/// Every learnable tensor of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct FnoParams {
    pub config: FnoConfig,
    /// `state_dim + 1 → projection_hidden → hidden_channels`
    pub lift: [Dense; 2],
    pub layers: Vec<FourierLayerParams>,
    /// `hidden_channels → projection_hidden → state_dim`
    pub project: [Dense; 2],
}

impl FnoParams {
    /// All-zero parameters; also the shape of a gradient.
    pub fn zeros(config: &FnoConfig) -> Self {
        let c = config.hidden_channels;
        let p = config.projection_hidden;
        Self {
            config: *config,
            lift: [Dense::zeros(config.input_channels(), p), Dense::zeros(p, c)],
            layers: (0..config.n_fourier_layers)
                .map(|_| FourierLayerParams {
                    spectral: Array3::zeros((config.modes_kmax, c, c)),
                    bypass: Dense::zeros(c, c),
                })
                .collect(),
            project: [Dense::zeros(c, p), Dense::zeros(p, config.state_dim)],
        }
    }

    /// Tensor names in the canonical order used by [`Self::slices`].
    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..2 {
            out.push(format!("lift.{i}.weight"));
            out.push(format!("lift.{i}.bias"));
        }
        for l in 0..self.layers.len() {
            out.push(format!("fourier.{l}.spectral"));
            out.push(format!("fourier.{l}.bypass.weight"));
            out.push(format!("fourier.{l}.bypass.bias"));
        }
        for i in 0..2 {
            out.push(format!("project.{i}.weight"));
            out.push(format!("project.{i}.bias"));
        }
        out
    }

    pub fn shapes(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for d in &self.lift {
            out.push(d.weight.shape().to_vec());
            out.push(d.bias.shape().to_vec());
        }
        for l in &self.layers {
            out.push(l.spectral.shape().to_vec());
            out.push(l.bypass.weight.shape().to_vec());
            out.push(l.bypass.bias.shape().to_vec());
        }
        for d in &self.project {
            out.push(d.weight.shape().to_vec());
            out.push(d.bias.shape().to_vec());
        }
        out
    }

    pub fn slices(&self) -> Vec<&[C64]> {
        let mut out: Vec<&[C64]> = Vec::new();
        for d in &self.lift {
            out.push(d.weight.as_slice().expect("standard layout"));
            out.push(d.bias.as_slice().expect("standard layout"));
        }
        for l in &self.layers {
            out.push(l.spectral.as_slice().expect("standard layout"));
            out.push(l.bypass.weight.as_slice().expect("standard layout"));
            out.push(l.bypass.bias.as_slice().expect("standard layout"));
        }
        for d in &self.project {
            out.push(d.weight.as_slice().expect("standard layout"));
            out.push(d.bias.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [C64]> {
        let mut out: Vec<&mut [C64]> = Vec::new();
        for Dense { weight, bias } in self.lift.iter_mut() {
            out.push(weight.as_slice_mut().expect("standard layout"));
            out.push(bias.as_slice_mut().expect("standard layout"));
        }
        for FourierLayerParams { spectral, bypass } in self.layers.iter_mut() {
            out.push(spectral.as_slice_mut().expect("standard layout"));
            out.push(bypass.weight.as_slice_mut().expect("standard layout"));
            out.push(bypass.bias.as_slice_mut().expect("standard layout"));
        }
        for Dense { weight, bias } in self.project.iter_mut() {
            out.push(weight.as_slice_mut().expect("standard layout"));
            out.push(bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    /// Rebuilds parameters from per-tensor flat values in canonical order.
    pub fn from_slices(config: &FnoConfig, values: &[Vec<C64>]) -> Result<Self> {
        let mut p = Self::zeros(config);
        let mut slots = p.slices_mut();
        if slots.len() != values.len() {
            return Err(Error::dim("parameter tensor count", slots.len(), values.len()));
        }
        for (slot, v) in slots.iter_mut().zip(values) {
            if slot.len() != v.len() {
                return Err(Error::dim("parameter tensor size", slot.len(), v.len()));
            }
            slot.copy_from_slice(v);
        }
        Ok(p)
    }

    pub fn add_assign(&mut self, other: &FnoParams) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        for a in self.slices_mut() {
            for x in a.iter_mut() {
                *x *= k;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices()
            .iter()
            .all(|s| s.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    /// Euclidean norm over all real and imaginary parts.
    pub fn norm(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn n_real_parameters(&self) -> usize {
        2 * self.slices().iter().map(|s| s.len()).sum::<usize>()
    }
}

/// Glorot-style complex initialization: real and imaginary parts each
/// uniform in `±sqrt(6/(fan_in+fan_out))/sqrt(2)`; biases start at zero.
/// Each tensor draws from its own seeded stream.
pub fn init_params(config: &FnoConfig, seed: u64) -> Result<FnoParams> {
    let config = config.validated()?;
    let mut p = FnoParams::zeros(&config);
    let c = config.hidden_channels;
    let shapes = p.shapes();
    for (idx, (slot, shape)) in p.slices_mut().into_iter().zip(shapes).enumerate() {
        if shape.len() == 1 {
            continue;
        }
        let (fan_in, fan_out) = if shape.len() == 3 {
            (c, c)
        } else {
            (shape[0], shape[1])
        };
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt() / std::f64::consts::SQRT_2;
        let mut rng = stream_rng(seed, DOMAIN_INIT, idx as u64);
        for z in slot.iter_mut() {
            let re = rng.random_range(-bound..bound);
            let im = rng.random_range(-bound..bound);
            *z = C64::new(re, im);
        }
    }
    Ok(p)
}

/// Sum of row vectors, `(rows × C) → C`.
pub(crate) fn column_sum(x: ArrayView2<C64>) -> Array1<C64> {
    x.sum_axis(Axis(0))
}
