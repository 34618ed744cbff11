use ndarray::Array2;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::lindblad::C64;
use crate::tcf::correlation::TcfGrid;
use crate::units::TWO_PI_C;

/// Frequency axes in cm⁻¹ (ascending, zero in the middle) and the imaginary
/// part of the Fourier transform on them.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumGrid {
    pub w1: Vec<f64>,
    /// Empty for one-dimensional spectra.
    pub w2: Vec<f64>,
    /// `|w1| × max(|w2|, 1)`
    pub intensity: Array2<f64>,
    pub normalized: bool,
}

fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Domain("spectrum needs at least two time points".into()));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::Domain("time grid must be increasing".into()));
    }
    for (k, t) in times.iter().enumerate() {
        let expected = times[0] + k as f64 * dt;
        if (t - expected).abs() > 1e-9 * dt.max(expected.abs()) {
            return Err(Error::Domain(format!("non-uniform time grid at point {k}")));
        }
    }
    Ok(dt)
}

/// Bin `i` of the shifted axis holds DFT index `(i + m − m/2) mod m`.
fn shifted_axis(m: usize, dt: f64) -> (Vec<f64>, Vec<usize>) {
    let half = m / 2;
    let total = m as f64 * dt;
    (0..m)
        .map(|i| {
            let k = i as i64 - half as i64;
            let wn = 2.0 * std::f64::consts::PI * k as f64 / (TWO_PI_C * total);
            (wn, (i + m - half) % m)
        })
        .unzip()
}

/// `F(ω) = Σ_n R(t_n) e^{iωt_n} δt` along both time axes (rectangular
/// window, no padding), reporting `Im F`. The period is `|t|·δt`, so bin `k`
/// sits at `k / (c·|t|·δt)` cm⁻¹.
pub fn spectrum(tcf: &TcfGrid, normalize: bool) -> Result<SpectrumGrid> {
    let dt1 = uniform_step(&tcf.t1)?;
    let mut planner = FftPlanner::<f64>::new();
    let mut data = tcf.values.clone();
    let (n1, n2) = data.dim();
    let fft1 = planner.plan_fft(n1, FftDirection::Inverse);
    for mut col in data.columns_mut() {
        let mut buf: Vec<C64> = col.to_vec();
        fft1.process(&mut buf);
        for (d, b) in col.iter_mut().zip(buf) {
            *d = b * dt1;
        }
    }
    let (w1, idx1) = shifted_axis(n1, dt1);
    let (w2, idx2) = if tcf.t2.is_empty() {
        (Vec::new(), vec![0])
    } else {
        let dt2 = uniform_step(&tcf.t2)?;
        let fft2 = planner.plan_fft(n2, FftDirection::Inverse);
        for mut row in data.rows_mut() {
            let mut buf: Vec<C64> = row.to_vec();
            fft2.process(&mut buf);
            for (d, b) in row.iter_mut().zip(buf) {
                *d = b * dt2;
            }
        }
        shifted_axis(n2, dt2)
    };
    let mut intensity = Array2::from_shape_fn((idx1.len(), idx2.len()), |(i, j)| data[[idx1[i], idx2[j]]].im);
    if normalize {
        let max = intensity.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max > 0.0 {
            intensity.mapv_inplace(|v| v / max);
        }
    }
    Ok(SpectrumGrid {
        w1,
        w2,
        intensity,
        normalized: normalize,
    })
}
