use serde::{Deserialize, Serialize};

use super::filter::{weighted_variance, Fir};
use super::modes::ModeWindows;
use super::AcquisitionSpec;
use crate::error::{Error, Result};
use crate::rng::{self, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterShape {
    /// Amplitude response Gaussian with −3 dB power at the bandwidth.
    Gaussian,
    /// Power spectrum `cos²(πf/2B)` for `|f| ≤ B` (full-rolloff raised cosine).
    RaisedCosine,
}

/// Spectrally filtered, attenuated SLD emission used as a random coherent
/// input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SldSourceSpec {
    pub baseband_bandwidth_ghz: f64,
    pub attenuation_db: f64,
    /// Per-quadrature variance of the mode-integrated input amplitude after
    /// attenuation, in shot-noise units.
    pub ensemble_var_shot: f64,
    pub filter_shape: FilterShape,
}

impl Default for SldSourceSpec {
    fn default() -> Self {
        Self {
            baseband_bandwidth_ghz: 55.0,
            attenuation_db: 25.0,
            ensemble_var_shot: 14.4,
            filter_shape: FilterShape::RaisedCosine,
        }
    }
}

impl SldSourceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.baseband_bandwidth_ghz > 0.0) {
            return Err(Error::InvalidArgument("baseband_bandwidth_ghz must be > 0".into()));
        }
        if !(self.attenuation_db >= 0.0) {
            return Err(Error::InvalidArgument("attenuation_db must be >= 0".into()));
        }
        if !(self.ensemble_var_shot >= 0.0) || !self.ensemble_var_shot.is_finite() {
            return Err(Error::InvalidArgument("ensemble_var_shot must be >= 0".into()));
        }
        Ok(())
    }

    /// Amplitude variance seen by the monitor ahead of the attenuator.
    pub fn monitored_var_shot(&self) -> f64 {
        self.ensemble_var_shot * 10f64.powf(self.attenuation_db / 10.0)
    }

    pub fn amplitude_response(&self, f_ghz: f64) -> f64 {
        let b = self.baseband_bandwidth_ghz;
        match self.filter_shape {
            FilterShape::Gaussian => (-(std::f64::consts::LN_2 / 2.0) * (f_ghz / b).powi(2)).exp(),
            FilterShape::RaisedCosine => {
                if f_ghz.abs() <= b {
                    (std::f64::consts::FRAC_PI_2 * f_ghz / b).cos()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn filter(&self, sample_rate_gsps: f64) -> Fir {
        let nyquist = sample_rate_gsps / 2.0;
        match self.filter_shape {
            FilterShape::Gaussian => Fir::from_response(|f| self.amplitude_response(f), nyquist, sample_rate_gsps, 24),
            FilterShape::RaisedCosine => Fir::from_response(
                |f| self.amplitude_response(f),
                self.baseband_bandwidth_ghz.min(nyquist),
                sample_rate_gsps,
                64,
            ),
        }
    }
}

/// Mean quadrature amplitudes of the input field, sampled on the scope grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeTracks {
    pub mean_x: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub trace_id: u64,
}

impl AmplitudeTracks {
    pub fn zeros(n_samples: usize, trace_id: u64) -> Self {
        Self {
            mean_x: vec![0.0; n_samples],
            mean_p: vec![0.0; n_samples],
            trace_id,
        }
    }

    pub fn len(&self) -> usize {
        self.mean_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_x.is_empty()
    }
}

/// Two independent band-limited Gaussian processes scaled so the
/// mode-integrated amplitudes have variance `ensemble_var_shot`.
///
/// `trace_id` selects the random stream within `seed`.
pub fn synth_random_coherent(
    spec: &SldSourceSpec,
    acq: &AcquisitionSpec,
    duration_ns: f64,
    seed: u64,
    trace_id: u64,
) -> Result<AmplitudeTracks> {
    spec.validate()?;
    acq.validate()?;
    let duration_ps = duration_ns * 1e3;
    if !(duration_ps >= acq.window_ps) {
        return Err(Error::InvalidArgument(format!(
            "duration {duration_ns} ns is shorter than one {} ps mode",
            acq.window_ps
        )));
    }
    let n = (duration_ps / acq.dt_ps() - 1e-9).ceil() as usize;
    if spec.ensemble_var_shot == 0.0 {
        return Ok(AmplitudeTracks::zeros(n, trace_id));
    }
    let fir = spec.filter(acq.sample_rate_gsps);
    let acf = fir.autocorrelation();
    let windows = ModeWindows::new(acq, n)?;
    let mode_var = (0..windows.len())
        .map(|k| weighted_variance(windows.weights(k), &acf))
        .sum::<f64>()
        / windows.len() as f64;
    let scale = (spec.ensemble_var_shot / mode_var).sqrt();
    let draw = |domain| -> Vec<f64> {
        let mut r = rng::stream(seed, domain, trace_id);
        fir.filtered_noise(n, &mut r).into_iter().map(|v| v * scale).collect()
    };
    Ok(AmplitudeTracks {
        mean_x: draw(Domain::SourceX),
        mean_p: draw(Domain::SourceP),
        trace_id,
    })
}
