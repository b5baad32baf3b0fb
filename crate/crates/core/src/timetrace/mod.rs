//! Time-domain harness: random coherent wavepackets through the teleporter,
//! sampled like a real-time oscilloscope and cut into temporal modes.
//!
//! All sample values are in shot-noise units such that a vacuum trace,
//! integrated with a mode weight, has unit variance.

mod estimate;
pub mod filter;
mod modes;
mod source;
mod traces;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use estimate::{
    adjacent_mode_correlation, average_fidelity_closed_form, ensemble_variance, estimate_report, variance_se_db,
    ModeField,
};
pub use modes::{extract_modes, Mode, ModeWindows, WavepacketModes};
pub use source::{synth_random_coherent, AmplitudeTracks, FilterShape, SldSourceSpec};
pub use traces::{quantize_trace, run_timetrace, simulate_traces, TimeTrace, TimeTraceRun};

/// Oscilloscope and detector parameters plus the temporal-mode window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    pub sample_rate_gsps: f64,
    pub analog_bw_ghz: f64,
    pub detector_bw_ghz: f64,
    pub window_ps: f64,
}

impl Default for AcquisitionSpec {
    fn default() -> Self {
        Self {
            sample_rate_gsps: 256.0,
            analog_bw_ghz: 110.0,
            detector_bw_ghz: 70.0,
            window_ps: 42.0,
        }
    }
}

impl AcquisitionSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sample_rate_gsps", self.sample_rate_gsps),
            ("analog_bw_ghz", self.analog_bw_ghz),
            ("detector_bw_ghz", self.detector_bw_ghz),
            ("window_ps", self.window_ps),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.window_ps < self.dt_ps() {
            return Err(Error::InvalidArgument(format!(
                "window {} ps is shorter than one sample ({} ps)",
                self.window_ps,
                self.dt_ps()
            )));
        }
        Ok(())
    }

    pub fn with_window(self, window_ps: f64) -> Self {
        Self { window_ps, ..self }
    }

    pub fn dt_ps(&self) -> f64 {
        1e3 / self.sample_rate_gsps
    }

    /// Samples needed to hold `n_modes` whole windows.
    pub fn samples_for_modes(&self, n_modes: usize) -> usize {
        (n_modes as f64 * self.window_ps / self.dt_ps() - 1e-9).ceil() as usize
    }

    /// Combined amplitude response of the detector and the scope front end,
    /// each a Gaussian with −3 dB (power) at its bandwidth.
    pub fn detection_response(&self, f_ghz: f64) -> f64 {
        let g = |bw: f64| (-(std::f64::consts::LN_2 / 2.0) * (f_ghz / bw).powi(2)).exp();
        g(self.detector_bw_ghz) * g(self.analog_bw_ghz)
    }

    pub fn detection_filter(&self) -> filter::Fir {
        filter::Fir::from_response(|f| self.detection_response(f), self.sample_rate_gsps / 2.0, self.sample_rate_gsps, 8)
    }
}
