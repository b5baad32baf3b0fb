//! Run configuration file (TOML).
//!
//! Every section and key is optional and falls back to the reference
//! setup (7.5 dB squeezing, 90 % Bell and detection efficiency, 60 dB
//! feedforward). Unknown keys are rejected.

use std::path::Path;

use cvtp_core::spectral::{LowFreqExcess, Rolloff, SqueezingProfile};
use cvtp_core::teleporter::{calibrate_unity_gain, Regime, TeleporterConfig};
use cvtp_core::timetrace::{AcquisitionSpec, FilterShape, SldSourceSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub teleporter: TeleporterSection,
    pub source: SourceSection,
    pub spectrum: SpectrumSection,
    pub timetrace: TimetraceSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TeleporterSection {
    pub n_sq: f64,
    pub eta_bell: f64,
    pub eta_meas: f64,
    pub ff_gain_db: f64,
    pub regime: Regime,
    /// Overrides the unity-gain tap reflectivity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tap_reflectivity: Option<f64>,
    /// Accept a `tap_reflectivity` that misses unity gain.
    pub allow_miscalibrated: bool,
}

impl Default for TeleporterSection {
    fn default() -> Self {
        Self {
            n_sq: 0.178,
            eta_bell: 0.9,
            eta_meas: 0.9,
            ff_gain_db: 60.0,
            regime: Regime::Quantum,
            tap_reflectivity: None,
            allow_miscalibrated: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceSection {
    pub baseband_bandwidth_ghz: f64,
    pub attenuation_db: f64,
    pub ensemble_var_shot: f64,
    pub filter_shape: FilterShape,
}

impl Default for SourceSection {
    fn default() -> Self {
        let s = SldSourceSpec::default();
        Self {
            baseband_bandwidth_ghz: s.baseband_bandwidth_ghz,
            attenuation_db: s.attenuation_db,
            ensemble_var_shot: s.ensemble_var_shot,
            filter_shape: s.filter_shape,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub bins: usize,
    pub span_thz: f64,
    pub jitter_sigma_db: f64,
    pub exclude_below_thz: f64,
    pub band_edge_thz: f64,
    /// Lorentzian squeezing rolloff; absent means flat.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rolloff_bandwidth_thz: Option<f64>,
    pub excess_cutoff_thz: f64,
    pub excess_amplitude_db: f64,
    pub excess_exponent: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        let ex = LowFreqExcess::default();
        Self {
            bins: 401,
            span_thz: 1.0,
            jitter_sigma_db: 0.06,
            exclude_below_thz: 0.2,
            band_edge_thz: 1.0,
            rolloff_bandwidth_thz: None,
            excess_cutoff_thz: ex.cutoff_thz,
            excess_amplitude_db: ex.amplitude_db,
            excess_exponent: ex.exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimetraceSection {
    pub traces: usize,
    pub modes_per_trace: usize,
    pub sample_rate_gsps: f64,
    pub analog_bw_ghz: f64,
    pub detector_bw_ghz: f64,
    pub window_ps: f64,
    /// ADC resolution; absent means no quantisation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enob: Option<u32>,
    /// Number of raw traces written to disk.
    pub dump_traces: usize,
}

impl Default for TimetraceSection {
    fn default() -> Self {
        let a = AcquisitionSpec::default();
        Self {
            traces: 128,
            modes_per_trace: 1024,
            sample_rate_gsps: a.sample_rate_gsps,
            analog_bw_ghz: a.analog_bw_ghz,
            detector_bw_ghz: a.detector_bw_ghz,
            window_ps: a.window_ps,
            enob: None,
            dump_traces: 1,
        }
    }
}

fn check(ok: bool, path: &str, what: &str, v: impl std::fmt::Display) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must be {what}, got {v}")))
    }
}

fn unit_interval(path: &str, v: f64) -> CliResult<()> {
    check(v > 0.0 && v <= 1.0, path, "in (0, 1]", v)
}

fn positive(path: &str, v: f64) -> CliResult<()> {
    check(v > 0.0 && v.is_finite(), path, "> 0", v)
}

fn non_negative(path: &str, v: f64) -> CliResult<()> {
    check(v >= 0.0 && v.is_finite(), path, ">= 0", v)
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| CliError::config("<file>", e.message()))?;
        let cfg: Self = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(path, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> CliResult<()> {
        self.teleporter_config()?;
        self.source_spec()?;
        self.profile()?;
        self.acquisition()?;
        let s = &self.spectrum;
        check(s.bins >= 2, "spectrum.bins", ">= 2", s.bins)?;
        positive("spectrum.span_thz", s.span_thz)?;
        non_negative("spectrum.jitter_sigma_db", s.jitter_sigma_db)?;
        non_negative("spectrum.exclude_below_thz", s.exclude_below_thz)?;
        check(
            s.band_edge_thz > s.exclude_below_thz,
            "spectrum.band_edge_thz",
            "above exclude_below_thz",
            s.band_edge_thz,
        )?;
        let t = &self.timetrace;
        check(t.traces >= 1, "timetrace.traces", ">= 1", t.traces)?;
        check(t.modes_per_trace >= 1, "timetrace.modes_per_trace", ">= 1", t.modes_per_trace)?;
        if let Some(b) = t.enob {
            check((1..=52).contains(&b), "timetrace.enob", "in 1..=52", b)?;
        }
        Ok(())
    }

    pub fn teleporter_config(&self) -> CliResult<TeleporterConfig> {
        self.teleporter_with_regime(self.teleporter.regime)
    }

    pub fn teleporter_with_regime(&self, regime: Regime) -> CliResult<TeleporterConfig> {
        let t = &self.teleporter;
        unit_interval("teleporter.n_sq", t.n_sq)?;
        unit_interval("teleporter.eta_bell", t.eta_bell)?;
        unit_interval("teleporter.eta_meas", t.eta_meas)?;
        check(t.ff_gain_db.is_finite(), "teleporter.ff_gain_db", "finite", t.ff_gain_db)?;
        let unity = calibrate_unity_gain(t.ff_gain_db, t.eta_bell).map_err(|e| CliError::config("teleporter.ff_gain_db", e))?;
        let cfg = TeleporterConfig {
            n_sq: t.n_sq,
            eta_bell: t.eta_bell,
            eta_meas: t.eta_meas,
            ff_gain_db: t.ff_gain_db,
            regime,
            tap_reflectivity: t.tap_reflectivity.unwrap_or(unity),
        };
        cfg.validate().map_err(|e| CliError::config("teleporter.tap_reflectivity", e))?;
        if !t.allow_miscalibrated && !cfg.is_unity_gain() {
            return Err(CliError::config(
                "teleporter.tap_reflectivity",
                format!(
                    "{} misses unity gain (expected {unity:e}); set allow_miscalibrated = true to keep it",
                    cfg.tap_reflectivity
                ),
            ));
        }
        Ok(cfg)
    }

    pub fn source_spec(&self) -> CliResult<SldSourceSpec> {
        let s = &self.source;
        positive("source.baseband_bandwidth_ghz", s.baseband_bandwidth_ghz)?;
        non_negative("source.attenuation_db", s.attenuation_db)?;
        non_negative("source.ensemble_var_shot", s.ensemble_var_shot)?;
        Ok(SldSourceSpec {
            baseband_bandwidth_ghz: s.baseband_bandwidth_ghz,
            attenuation_db: s.attenuation_db,
            ensemble_var_shot: s.ensemble_var_shot,
            filter_shape: s.filter_shape,
        })
    }

    pub fn profile(&self) -> CliResult<SqueezingProfile> {
        let s = &self.spectrum;
        let rolloff = match s.rolloff_bandwidth_thz {
            None => Rolloff::Flat,
            Some(b) => {
                positive("spectrum.rolloff_bandwidth_thz", b)?;
                Rolloff::Lorentzian { bandwidth_thz: b }
            }
        };
        non_negative("spectrum.excess_cutoff_thz", s.excess_cutoff_thz)?;
        non_negative("spectrum.excess_amplitude_db", s.excess_amplitude_db)?;
        non_negative("spectrum.excess_exponent", s.excess_exponent)?;
        let low_freq_excess = (s.excess_amplitude_db > 0.0 && s.excess_cutoff_thz > 0.0).then_some(LowFreqExcess {
            cutoff_thz: s.excess_cutoff_thz,
            amplitude_db: s.excess_amplitude_db,
            exponent: s.excess_exponent,
        });
        Ok(SqueezingProfile {
            n_sq_center: self.teleporter.n_sq,
            rolloff,
            low_freq_excess,
        })
    }

    pub fn acquisition(&self) -> CliResult<AcquisitionSpec> {
        let t = &self.timetrace;
        positive("timetrace.sample_rate_gsps", t.sample_rate_gsps)?;
        positive("timetrace.analog_bw_ghz", t.analog_bw_ghz)?;
        positive("timetrace.detector_bw_ghz", t.detector_bw_ghz)?;
        positive("timetrace.window_ps", t.window_ps)?;
        let acq = AcquisitionSpec {
            sample_rate_gsps: t.sample_rate_gsps,
            analog_bw_ghz: t.analog_bw_ghz,
            detector_bw_ghz: t.detector_bw_ghz,
            window_ps: t.window_ps,
        };
        acq.validate().map_err(|e| CliError::config("timetrace.window_ps", e))?;
        Ok(acq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_of(text: &str) -> String {
        match RunConfig::parse(text).unwrap_err() {
            CliError::Config { path, .. } => path,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_reference_setup() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.teleporter_config().unwrap(), TeleporterConfig::reference());
    }

    #[test]
    fn snapshot_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.timetrace.enob = Some(5);
        cfg.spectrum.rolloff_bandwidth_thz = Some(2.0);
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(path_of("[teleporter]\neta_bell = 0.0\n"), "teleporter.eta_bell");
        assert_eq!(path_of("[teleporter]\nn_sq = \"high\"\n"), "teleporter.n_sq");
        assert!(path_of("[source]\nbogus = 1\n").starts_with("source"));
        assert_eq!(path_of("[timetrace]\ntraces = 0\n"), "timetrace.traces");
        assert_eq!(path_of("[teleporter]\ntap_reflectivity = 0.1\n"), "teleporter.tap_reflectivity");
        assert_eq!(path_of("[teleporter]\nff_gain_db = 1.0\n"), "teleporter.ff_gain_db");
        assert_eq!(path_of("[teleporter\n"), "<file>");
    }
}
