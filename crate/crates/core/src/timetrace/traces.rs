use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::estimate_report;
use super::modes::{extract_with, ModeWindows, WavepacketModes};
use super::source::{synth_random_coherent, AmplitudeTracks, SldSourceSpec};
use super::AcquisitionSpec;
use crate::error::{Error, Result};
use crate::report::EstimatorReport;
use crate::rng::{self, Domain};
use crate::teleporter::{analytic_noise_budget, TeleporterConfig};

/// One oscilloscope acquisition of both output quadratures, with the
/// reference input amplitudes on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTrace {
    pub sample_rate_gsps: f64,
    pub analog_bw_ghz: f64,
    pub detector_bw_ghz: f64,
    pub x_samples: Vec<f64>,
    pub p_samples: Vec<f64>,
    pub input_mean_x: Vec<f64>,
    pub input_mean_p: Vec<f64>,
    pub trace_id: u64,
    pub seed: u64,
}

impl TimeTrace {
    pub fn len(&self) -> usize {
        self.x_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_samples.is_empty()
    }

    pub fn acquisition(&self, window_ps: f64) -> AcquisitionSpec {
        AcquisitionSpec {
            sample_rate_gsps: self.sample_rate_gsps,
            analog_bw_ghz: self.analog_bw_ghz,
            detector_bw_ghz: self.detector_bw_ghz,
            window_ps,
        }
    }

    pub fn dt_ps(&self) -> f64 {
        1e3 / self.sample_rate_gsps
    }
}

/// Teleporter output for each input track: `√η_meas·mean(t)` plus detector
/// noise scaled so that one temporal mode carries the analytic output
/// variance. Trace `i` uses noise streams keyed by `(seed, track.trace_id)`.
pub fn simulate_traces(
    config: &TeleporterConfig,
    tracks: &[AmplitudeTracks],
    acq: &AcquisitionSpec,
    seed: u64,
) -> Result<Vec<TimeTrace>> {
    config.require_unity_gain()?;
    acq.validate()?;
    let budget = analytic_noise_budget(config)?;
    let noise_amp = budget.n_out.sqrt();
    let gain = config.eta_meas.sqrt();
    let fir = acq.detection_filter();
    tracks
        .par_iter()
        .map(|t| {
            if t.mean_x.len() != t.mean_p.len() {
                return Err(Error::InvalidInput("input tracks differ in length".into()));
            }
            let n = t.len();
            let make = |mean: &[f64], domain| -> Vec<f64> {
                let mut r = rng::stream(seed, domain, t.trace_id);
                fir.filtered_noise(n, &mut r)
                    .into_iter()
                    .zip(mean)
                    .map(|(z, m)| gain * m + noise_amp * z)
                    .collect()
            };
            Ok(TimeTrace {
                sample_rate_gsps: acq.sample_rate_gsps,
                analog_bw_ghz: acq.analog_bw_ghz,
                detector_bw_ghz: acq.detector_bw_ghz,
                x_samples: make(&t.mean_x, Domain::NoiseX),
                p_samples: make(&t.mean_p, Domain::NoiseP),
                input_mean_x: t.mean_x.clone(),
                input_mean_p: t.mean_p.clone(),
                trace_id: t.trace_id,
                seed,
            })
        })
        .collect()
}

/// Mid-rise uniform quantiser with `2^enob` levels over ±5 standard
/// deviations, applied per quadrature to the measured samples.
pub fn quantize_trace(trace: &TimeTrace, enob: u32) -> Result<TimeTrace> {
    if enob == 0 || enob > 52 {
        return Err(Error::InvalidArgument(format!("enob must be in 1..=52, got {enob}")));
    }
    let quantize = |samples: &[f64]| -> Vec<f64> {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let std = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        // constant traces carry no fluctuation to digitise
        if !(std > 0.0) {
            return samples.to_vec();
        }
        let range = 5.0 * std;
        let levels = (1u64 << enob) as f64;
        let step = 2.0 * range / levels;
        samples
            .iter()
            .map(|&v| {
                let idx = ((v + range) / step).floor().clamp(0.0, levels - 1.0);
                -range + (idx + 0.5) * step
            })
            .collect()
    };
    Ok(TimeTrace {
        x_samples: quantize(&trace.x_samples),
        p_samples: quantize(&trace.p_samples),
        ..trace.clone()
    })
}

/// Everything produced by one time-domain experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTraceRun {
    pub traces: Vec<TimeTrace>,
    pub modes: Vec<WavepacketModes>,
    pub report: EstimatorReport,
}

/// Source → teleporter → scope → temporal modes → estimator.
pub fn run_timetrace(
    config: &TeleporterConfig,
    source: &SldSourceSpec,
    acq: &AcquisitionSpec,
    n_traces: usize,
    modes_per_trace: usize,
    enob: Option<u32>,
    seed: u64,
) -> Result<TimeTraceRun> {
    if n_traces == 0 {
        return Err(Error::InvalidArgument("need at least one trace".into()));
    }
    if modes_per_trace == 0 {
        return Err(Error::InvalidArgument("need at least one mode per trace".into()));
    }
    let duration_ns = modes_per_trace as f64 * acq.window_ps * 1e-3;
    let tracks = (0..n_traces as u64)
        .into_par_iter()
        .map(|id| synth_random_coherent(source, acq, duration_ns, seed, id))
        .collect::<Result<Vec<_>>>()?;
    let mut traces = simulate_traces(config, &tracks, acq, seed)?;
    if let Some(bits) = enob {
        traces = traces.iter().map(|t| quantize_trace(t, bits)).collect::<Result<_>>()?;
    }
    let windows = ModeWindows::new(acq, traces[0].len())?;
    let modes: Vec<WavepacketModes> = traces
        .par_iter()
        .map(|t| extract_with(t, &windows, acq.window_ps))
        .collect();
    let pooled: Vec<_> = modes.iter().flat_map(|m| m.modes.iter().copied()).collect();
    let report = estimate_report(&pooled, config.eta_meas)?;
    Ok(TimeTraceRun { traces, modes, report })
}
