//! Adam with bias-corrected moments, applied independently to the real and
//! imaginary part of every parameter.

use std::path::Path;

use serde_json::json;

use crate::container::{Container, ContainerWriter};
use crate::error::{Error, Result};
use crate::fno::{FnoConfig, FnoParams};
use crate::lindblad::C64;

pub const OPTIMIZER_MAGIC: &[u8; 4] = b"NQA1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates share the parameter layout: the real part of `m` tracks
/// the real part of the gradient and the imaginary part the imaginary one.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub step: u64,
    m: FnoParams,
    v: FnoParams,
}

impl Adam {
    pub fn new(config: AdamConfig, model: &FnoConfig) -> Self {
        Self {
            config,
            step: 0,
            m: FnoParams::zeros(model),
            v: FnoParams::zeros(model),
        }
    }

    pub fn update(&mut self, params: &mut FnoParams, grad: &FnoParams) {
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let upd = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let mh = *m / c1;
            let vh = *v / c2;
            *p -= lr * mh / (vh.sqrt() + eps);
        };
        for (((p, g), m), v) in params
            .slices_mut()
            .into_iter()
            .zip(grad.slices())
            .zip(self.m.slices_mut())
            .zip(self.v.slices_mut())
        {
            for i in 0..p.len() {
                let (pz, gz) = (&mut p[i], g[i]);
                let (mz, vz) = (&mut m[i], &mut v[i]);
                upd(&mut pz.re, gz.re, &mut mz.re, &mut vz.re);
                upd(&mut pz.im, gz.im, &mut mz.im, &mut vz.im);
            }
        }
    }

    pub fn model_config(&self) -> FnoConfig {
        self.m.config
    }

    pub fn to_bytes(&self, extra: serde_json::Value) -> Result<Vec<u8>> {
        let mut w = ContainerWriter::new();
        for (prefix, p) in [("m", &self.m), ("v", &self.v)] {
            for ((name, shape), s) in p.names().iter().zip(p.shapes()).zip(p.slices()) {
                let re: Vec<f64> = s.iter().map(|z| z.re).collect();
                let im: Vec<f64> = s.iter().map(|z| z.im).collect();
                w.push(format!("{prefix}.{name}.re"), &shape, &re);
                w.push(format!("{prefix}.{name}.im"), &shape, &im);
            }
        }
        let header = json!({
            "format": "nqp-adam",
            "config": self.m.config,
            "step": self.step,
            "lr": self.config.lr,
            "beta1": self.config.beta1,
            "beta2": self.config.beta2,
            "eps": self.config.eps,
            "extra": extra,
        });
        w.to_bytes(OPTIMIZER_MAGIC, header)
    }

    pub fn save(&self, path: &Path, extra: serde_json::Value) -> Result<()> {
        crate::container::write_atomic(path, &self.to_bytes(extra)?)
    }

    /// Restores moments and step count; returns the `extra` header value.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, serde_json::Value)> {
        let c = Container::from_bytes(bytes, OPTIMIZER_MAGIC)?;
        let h = &c.header;
        let model: FnoConfig = serde_json::from_value(h["config"].clone())?;
        let num = |k: &str| {
            h[k].as_f64()
                .ok_or_else(|| Error::Format(format!("optimizer state lacks {k}")))
        };
        let config = AdamConfig {
            lr: num("lr")?,
            beta1: num("beta1")?,
            beta2: num("beta2")?,
            eps: num("eps")?,
        };
        let step = h["step"]
            .as_u64()
            .ok_or_else(|| Error::Format("optimizer state lacks step".into()))?;
        let template = FnoParams::zeros(&model);
        let load = |prefix: &str| -> Result<FnoParams> {
            let mut vals = Vec::new();
            for name in template.names() {
                let (_, re) = c.array(&format!("{prefix}.{name}.re"))?;
                let (_, im) = c.array(&format!("{prefix}.{name}.im"))?;
                vals.push(re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect::<Vec<_>>());
            }
            FnoParams::from_slices(&model, &vals)
        };
        Ok((
            Self {
                config,
                step,
                m: load("m")?,
                v: load("v")?,
            },
            h["extra"].clone(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_weight_config() -> FnoConfig {
        FnoConfig {
            n_fourier_layers: 1,
            modes_kmax: 1,
            hidden_channels: 1,
            projection_hidden: 1,
            state_dim: 1,
            grid_points: 5,
        }
    }

    #[test]
    fn matches_hand_computed_update_on_quadratic() {
        // loss = Σ |θ - c|², gradient 2(θ - c) per real component
        let cfg = one_weight_config();
        let mut p = FnoParams::zeros(&cfg);
        for s in p.slices_mut() {
            for z in s.iter_mut() {
                *z = C64::new(0.5, -0.25);
            }
        }
        let target = C64::new(0.1, 0.3);
        let mut adam = Adam::new(AdamConfig::default(), &cfg);
        let (lr, b1, b2, eps) = (1e-3, 0.9, 0.999, 1e-8);
        let mut mre = 0.0;
        let mut vre = 0.0;
        let mut theta = 0.5;
        for t in 1..=3 {
            let mut g = FnoParams::zeros(&cfg);
            let cur = p.slices()[0][0];
            for s in g.slices_mut() {
                for z in s.iter_mut() {
                    *z = 2.0 * (cur - target);
                }
            }
            adam.update(&mut p, &g);
            let gr = 2.0 * (theta - target.re);
            mre = b1 * mre + (1.0 - b1) * gr;
            vre = b2 * vre + (1.0 - b2) * gr * gr;
            let mh = mre / (1.0 - f64::powi(b1, t));
            let vh = vre / (1.0 - f64::powi(b2, t));
            theta -= lr * mh / (vh.sqrt() + eps);
            assert!((p.slices()[0][0].re - theta).abs() <= 1e-12);
        }
        // first step moves each component by lr against the gradient sign
        let mut q = FnoParams::zeros(&cfg);
        let mut a = Adam::new(AdamConfig::default(), &cfg);
        let mut g = FnoParams::zeros(&cfg);
        for s in g.slices_mut() {
            for z in s.iter_mut() {
                *z = C64::new(3.0, -7.0);
            }
        }
        a.update(&mut q, &g);
        let z = q.slices()[0][0];
        assert!((z.re + 1e-3).abs() < 1e-9 && (z.im - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn state_round_trip() {
        let cfg = one_weight_config();
        let mut p = FnoParams::zeros(&cfg);
        let mut adam = Adam::new(AdamConfig::default(), &cfg);
        let mut g = FnoParams::zeros(&cfg);
        for s in g.slices_mut() {
            s[0] = C64::new(0.3, 0.1);
        }
        adam.update(&mut p, &g);
        let bytes = adam.to_bytes(serde_json::json!({"epoch": 4})).unwrap();
        let (back, extra) = Adam::from_bytes(&bytes).unwrap();
        assert_eq!(back, adam);
        assert_eq!(extra["epoch"], 4);
    }
}
