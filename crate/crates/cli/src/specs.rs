//! Parsing of `--state` and `--operator` arguments.

use std::path::Path;

use ndarray::Array2;

use nqp_core::lindblad::{hopping_operator, DensityState, HermitianOperator};
use nqp_core::system::Entry;
use nqp_core::C64;

use crate::error::{CliError, CliResult};

fn read_matrix(path: &Path) -> CliResult<Array2<C64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let rows: Vec<Vec<Entry>> = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: expected a JSON matrix: {e}", path.display())))?;
    let n = rows.len();
    let mut m = Array2::zeros((n, n));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(CliError::new(
                "E_DIMENSION",
                format!("{}: row {i} has {} entries, expected {n}", path.display(), row.len()),
            ));
        }
        for (j, e) in row.iter().enumerate() {
            m[[i, j]] = match *e {
                Entry::Real(r) => C64::new(r, 0.0),
                Entry::Complex([re, im]) => C64::new(re, im),
            };
        }
    }
    Ok(m)
}

/// `site:k` (1-based), `mixed`, or a JSON matrix file holding a density
/// matrix.
pub fn parse_state(spec: &str, n: usize) -> CliResult<DensityState> {
    if let Some(k) = spec.strip_prefix("site:") {
        let k: usize = k
            .parse()
            .map_err(|_| CliError::config(format!("bad site index in {spec:?}")))?;
        if k == 0 || k > n {
            return Err(CliError::new("E_DOMAIN", format!("site {k} outside 1..={n}")));
        }
        return Ok(DensityState::site(n, k - 1)?);
    }
    if spec == "mixed" {
        return Ok(DensityState::maximally_mixed(n));
    }
    let s = DensityState::physical(read_matrix(Path::new(spec))?)?;
    if s.dim() != n {
        return Err(CliError::new("E_DIMENSION", format!("state has dimension {}, system has {n}", s.dim())));
    }
    Ok(s)
}

/// `hopping`, `identity`, or a JSON matrix file holding a Hermitian matrix.
pub fn parse_operator(spec: &str, n: usize) -> CliResult<HermitianOperator> {
    let x = match spec {
        "hopping" => hopping_operator(n)?,
        "identity" => HermitianOperator::identity(n),
        path => HermitianOperator::new(read_matrix(Path::new(path))?)?,
    };
    if x.dim() != n {
        return Err(CliError::new("E_DIMENSION", format!("operator has dimension {}, system has {n}", x.dim())));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_specs() {
        let s = parse_state("site:6", 7).unwrap();
        assert_eq!(s.populations()[5], 1.0);
        assert!((parse_state("mixed", 3).unwrap().populations()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(parse_state("site:0", 7).unwrap_err().code, "E_DOMAIN");
        assert_eq!(parse_state("site:x", 7).unwrap_err().code, "E_CONFIG");
        assert_eq!(parse_state("/nonexistent.json", 7).unwrap_err().code, "E_IO");
    }

    #[test]
    fn matrix_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rho.json");
        std::fs::write(&p, "[[0.5, [0.1, 0.2]], [[0.1, -0.2], 0.5]]").unwrap();
        let s = parse_state(p.to_str().unwrap(), 2).unwrap();
        assert_eq!(s.get(0, 1), C64::new(0.1, 0.2));
        assert_eq!(parse_state(p.to_str().unwrap(), 3).unwrap_err().code, "E_DIMENSION");
        std::fs::write(&p, "[[2, 0], [0, 0]]").unwrap();
        assert!(parse_state(p.to_str().unwrap(), 2).is_err());
        assert!(parse_operator(p.to_str().unwrap(), 2).is_ok());
        assert_eq!(parse_operator("identity", 4).unwrap().dim(), 4);
        assert!(parse_operator("hopping", 1).is_err());
    }
}
