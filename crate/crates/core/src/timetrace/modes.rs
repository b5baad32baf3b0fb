use serde::{Deserialize, Serialize};

use super::filter::weighted_variance;
use super::{AcquisitionSpec, TimeTrace};
use crate::error::{Error, Result};

/// One temporal mode: output quadratures and the reference input amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: usize,
    pub x_k: f64,
    pub p_k: f64,
    pub in_x_k: f64,
    pub in_p_k: f64,
    /// Σ of the normalised weights; a constant track `A` integrates to `A·weight_sum`.
    pub weight_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavepacketModes {
    pub window_ps: f64,
    pub trace_id: u64,
    pub modes: Vec<Mode>,
}

/// Abutting Gaussian windows (σ = window/6) laid over a sample grid.
///
/// Each window's weights are scaled so that detector-filtered vacuum noise
/// integrates to unit variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeWindows {
    starts: Vec<usize>,
    weights: Vec<Vec<f64>>,
}

impl ModeWindows {
    pub fn new(acq: &AcquisitionSpec, n_samples: usize) -> Result<Self> {
        acq.validate()?;
        let dt = acq.dt_ps();
        let w = acq.window_ps;
        let n_modes = ((n_samples as f64 * dt) / w + 1e-9).floor() as usize;
        if n_modes == 0 {
            return Err(Error::InvalidArgument(format!(
                "window {w} ps exceeds the {:.3} ps trace",
                n_samples as f64 * dt
            )));
        }
        let acf = acq.detection_filter().autocorrelation();
        let sigma = w / 6.0;
        let first_sample = |t: f64| (t / dt - 1e-9).ceil().max(0.0) as usize;
        let mut starts = Vec::with_capacity(n_modes);
        let mut weights = Vec::with_capacity(n_modes);
        for k in 0..n_modes {
            let (lo, hi) = (k as f64 * w, (k + 1) as f64 * w);
            let (i0, i1) = (first_sample(lo), first_sample(hi).min(n_samples));
            let centre = 0.5 * (lo + hi);
            let mut wk: Vec<f64> = (i0..i1)
                .map(|i| {
                    let u = (i as f64 * dt - centre) / sigma;
                    (-0.5 * u * u).exp()
                })
                .collect();
            let norm = weighted_variance(&wk, &acf).sqrt();
            wk.iter_mut().for_each(|v| *v /= norm);
            starts.push(i0);
            weights.push(wk);
        }
        Ok(Self { starts, weights })
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn start(&self, k: usize) -> usize {
        self.starts[k]
    }

    pub fn weights(&self, k: usize) -> &[f64] {
        &self.weights[k]
    }

    pub fn integrate(&self, k: usize, samples: &[f64]) -> f64 {
        let s = self.starts[k];
        self.weights[k].iter().zip(&samples[s..]).map(|(w, x)| w * x).sum()
    }
}

/// Cuts a trace into abutting temporal modes of `window_ps`.
pub fn extract_modes(trace: &TimeTrace, window_ps: f64) -> Result<WavepacketModes> {
    let acq = trace.acquisition(window_ps);
    let n = trace.x_samples.len();
    let windows = ModeWindows::new(&acq, n)?;
    Ok(extract_with(trace, &windows, window_ps))
}

pub(crate) fn extract_with(trace: &TimeTrace, windows: &ModeWindows, window_ps: f64) -> WavepacketModes {
    let modes = (0..windows.len())
        .map(|k| Mode {
            k,
            x_k: windows.integrate(k, &trace.x_samples),
            p_k: windows.integrate(k, &trace.p_samples),
            in_x_k: windows.integrate(k, &trace.input_mean_x),
            in_p_k: windows.integrate(k, &trace.input_mean_p),
            weight_sum: windows.weights(k).iter().sum(),
        })
        .collect();
    WavepacketModes {
        window_ps,
        trace_id: trace.trace_id,
        modes,
    }
}
