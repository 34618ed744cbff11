//! System definitions: a Hamiltonian plus per-site dephasing rates, loadable
//! from JSON or by built-in name.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{
    build_fmo_hamiltonian, build_liouvillian, HermitianOperator, Liouvillian, C64,
    FMO_DEPHASING_CM1,
};

/// One matrix entry in a JSON system file: a real number or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn to_c64(self) -> C64 {
        match self {
            Entry::Real(r) => C64::new(r, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }
    }

    fn from_c64(z: C64) -> Self {
        if z.im == 0.0 {
            Entry::Real(z.re)
        } else {
            Entry::Complex([z.re, z.im])
        }
    }
}

/// Serialized form of a system: either `{"name": "fmo7"}` or an inline
/// `hamiltonian` (cm⁻¹) with `dephasing_rates` (cm⁻¹).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<Vec<Vec<Entry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephasing_rates: Option<Vec<f64>>,
}

impl SystemConfig {
    pub fn named(name: &str) -> Self {
        Self {
            name: Some(name.to_string()),
            hamiltonian: None,
            dephasing_rates: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct System {
    pub name: Option<String>,
    pub hamiltonian: HermitianOperator,
    pub dephasing_rates: Vec<f64>,
}

impl System {
    pub fn new(
        name: Option<String>,
        hamiltonian: HermitianOperator,
        dephasing_rates: Vec<f64>,
    ) -> Result<Self> {
        if dephasing_rates.len() != hamiltonian.dim() {
            return Err(Error::dim(
                "dephasing rate count",
                hamiltonian.dim(),
                dephasing_rates.len(),
            ));
        }
        Ok(Self {
            name,
            hamiltonian,
            dephasing_rates,
        })
    }

    /// The seven-site FMO complex with 35 cm⁻¹ dephasing on every site.
    pub fn fmo7() -> Self {
        Self {
            name: Some("fmo7".into()),
            hamiltonian: build_fmo_hamiltonian(),
            dephasing_rates: vec![FMO_DEPHASING_CM1; 7],
        }
    }

    /// A degenerate two-level system with equal pure dephasing on both sites.
    pub fn dephasing_dimer(rate_cm1: f64) -> Self {
        Self {
            name: None,
            hamiltonian: HermitianOperator::diagonal(&[0.0, 0.0]),
            dephasing_rates: vec![rate_cm1; 2],
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "fmo7" => Ok(Self::fmo7()),
            other => Err(Error::Config(format!("unknown built-in system {other:?}"))),
        }
    }

    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        match (&cfg.name, &cfg.hamiltonian, &cfg.dephasing_rates) {
            (Some(name), None, None) => Self::by_name(name),
            (name, Some(rows), Some(rates)) => {
                let n = rows.len();
                let mut m = Array2::zeros((n, n));
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::dim("hamiltonian row length", n, row.len()));
                    }
                    for (j, e) in row.iter().enumerate() {
                        m[[i, j]] = e.to_c64();
                    }
                }
                let h = HermitianOperator::new(m)?;
                Self::new(name.clone(), h, rates.clone())
            }
            _ => Err(Error::Config(
                "system needs either `name` alone or both `hamiltonian` and `dephasing_rates`"
                    .into(),
            )),
        }
    }

    /// Full inline description, used when embedding the system in files.
    pub fn to_config(&self) -> SystemConfig {
        let h = self.hamiltonian.entries();
        SystemConfig {
            name: self.name.clone(),
            hamiltonian: Some(
                h.rows()
                    .into_iter()
                    .map(|r| r.iter().map(|&z| Entry::from_c64(z)).collect())
                    .collect(),
            ),
            dephasing_rates: Some(self.dephasing_rates.clone()),
        }
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn liouvillian(&self) -> Result<Liouvillian> {
        build_liouvillian(&self.hamiltonian, &self.dephasing_rates)
    }
}
