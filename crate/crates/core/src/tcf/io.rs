//! CSV text for populations, TCFs and spectra, 17 significant digits.

use std::fmt::Write as _;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::format::f17;
use crate::lindblad::C64;
use crate::tcf::correlation::{Populations, TcfGrid};
use crate::tcf::spectrum::SpectrumGrid;

pub fn populations_csv(p: &Populations) -> String {
    let n = p.values.ncols();
    let mut s = String::from("t_fs");
    for j in 1..=n {
        let _ = write!(s, ",p_{j}");
    }
    s.push('\n');
    for (t, row) in p.times.iter().zip(p.values.rows()) {
        s.push_str(&f17(*t));
        for v in row {
            s.push(',');
            s.push_str(&f17(*v));
        }
        s.push('\n');
    }
    s
}

pub fn tcf_csv(tcf: &TcfGrid) -> String {
    let mut s = String::new();
    if tcf.t2.is_empty() {
        s.push_str("t1_fs,re,im\n");
        for (t, z) in tcf.t1.iter().zip(tcf.values.column(0)) {
            let _ = writeln!(s, "{},{},{}", f17(*t), f17(z.re), f17(z.im));
        }
    } else {
        s.push_str("t1_fs,t2_fs,re,im\n");
        for (i, t1) in tcf.t1.iter().enumerate() {
            for (j, t2) in tcf.t2.iter().enumerate() {
                let z = tcf.values[[i, j]];
                let _ = writeln!(s, "{},{},{},{}", f17(*t1), f17(*t2), f17(z.re), f17(z.im));
            }
        }
    }
    s
}

fn parse_row(line: &str, lineno: usize, width: usize) -> Result<Vec<f64>> {
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != width {
        return Err(Error::Format(format!(
            "line {lineno}: expected {width} columns, found {}",
            cols.len()
        )));
    }
    cols.iter()
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("line {lineno}: bad number {c:?}")))
        })
        .collect()
}

/// Reads the output of [`tcf_csv`]; second-order files must be in row-major
/// `(t1, t2)` order.
pub fn parse_tcf_csv(text: &str) -> Result<TcfGrid> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Format("empty TCF file".into()))?;
    match header.trim() {
        "t1_fs,re,im" => {
            let mut t1 = Vec::new();
            let mut vals = Vec::new();
            for (i, l) in lines {
                let r = parse_row(l, i + 1, 3)?;
                t1.push(r[0]);
                vals.push(C64::new(r[1], r[2]));
            }
            let n = vals.len();
            Ok(TcfGrid {
                t1,
                t2: Vec::new(),
                values: Array2::from_shape_vec((n, 1), vals).expect("shape"),
            })
        }
        "t1_fs,t2_fs,re,im" => {
            let rows: Vec<Vec<f64>> = lines.map(|(i, l)| parse_row(l, i + 1, 4)).collect::<Result<_>>()?;
            if rows.is_empty() {
                return Err(Error::Format("TCF file has no data rows".into()));
            }
            let n2 = rows.iter().take_while(|r| r[0] == rows[0][0]).count();
            if rows.len() % n2 != 0 {
                return Err(Error::Format("second-order TCF rows do not form a grid".into()));
            }
            let n1 = rows.len() / n2;
            let t2: Vec<f64> = rows[..n2].iter().map(|r| r[1]).collect();
            let t1: Vec<f64> = (0..n1).map(|i| rows[i * n2][0]).collect();
            for (k, r) in rows.iter().enumerate() {
                if r[0] != t1[k / n2] || r[1] != t2[k % n2] {
                    return Err(Error::Format(format!("row {} breaks the (t1, t2) grid order", k + 2)));
                }
            }
            let vals = rows.iter().map(|r| C64::new(r[2], r[3])).collect();
            Ok(TcfGrid {
                t1,
                t2,
                values: Array2::from_shape_vec((n1, n2), vals).expect("shape"),
            })
        }
        other => Err(Error::Format(format!("unrecognized TCF header {other:?}"))),
    }
}

pub fn spectrum_csv(s: &SpectrumGrid) -> String {
    let mut out = String::new();
    if s.w2.is_empty() {
        out.push_str("wavenumber_cm1,intensity\n");
        for (w, v) in s.w1.iter().zip(s.intensity.column(0)) {
            let _ = writeln!(out, "{},{}", f17(*w), f17(*v));
        }
    } else {
        out.push_str("w1,w2,intensity\n");
        for (i, w1) in s.w1.iter().enumerate() {
            for (j, w2) in s.w2.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", f17(*w1), f17(*w2), f17(s.intensity[[i, j]]));
            }
        }
    }
    out
}
