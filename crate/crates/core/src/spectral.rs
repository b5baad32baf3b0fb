//! Frequency-domain harness: sideband spectra of the teleported vacuum.
//!
//! Under high-gain PSA readout the optical power spectrum at sideband `Ω` is
//! proportional to the quadrature variance at `Ω`, so spectra are handled
//! directly in variance-dB space, normalised to shot noise.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::to_db;
use crate::report::EstimatorReport;
use crate::rng::{self, Domain};
use crate::teleporter::{noise_budget, TeleporterConfig};

/// Spectra are only meaningful within the feedforward band.
pub const MAX_SIDEBAND_THZ: f64 = 1.0;

const BAND_TOL: f64 = 1e-9;

/// Technical excess noise at low sideband frequencies, added in dB:
/// `amplitude_db · (1 − |Ω|/cutoff)^exponent` for `|Ω| < cutoff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowFreqExcess {
    pub cutoff_thz: f64,
    pub amplitude_db: f64,
    pub exponent: f64,
}

impl Default for LowFreqExcess {
    fn default() -> Self {
        Self {
            cutoff_thz: 0.2,
            amplitude_db: 6.0,
            exponent: 2.0,
        }
    }
}

impl LowFreqExcess {
    pub fn excess_db(&self, omega_thz: f64) -> f64 {
        let w = omega_thz.abs();
        if w >= self.cutoff_thz || self.cutoff_thz <= 0.0 {
            0.0
        } else {
            self.amplitude_db * (1.0 - w / self.cutoff_thz).powf(self.exponent)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Rolloff {
    Flat,
    /// `N_sq(Ω) = 1 − (1 − N_sq(0)) / (1 + (Ω/B)²)`.
    Lorentzian { bandwidth_thz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingProfile {
    pub n_sq_center: f64,
    pub rolloff: Rolloff,
    pub low_freq_excess: Option<LowFreqExcess>,
}

impl SqueezingProfile {
    pub fn flat(n_sq_center: f64) -> Self {
        Self {
            n_sq_center,
            rolloff: Rolloff::Flat,
            low_freq_excess: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_sq_center > 0.0 && self.n_sq_center <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "n_sq_center must be in (0, 1], got {}",
                self.n_sq_center
            )));
        }
        if let Rolloff::Lorentzian { bandwidth_thz } = self.rolloff {
            if !(bandwidth_thz > 0.0) {
                return Err(Error::InvalidArgument("rolloff bandwidth must be > 0".into()));
            }
        }
        if let Some(ex) = self.low_freq_excess {
            if !(ex.cutoff_thz >= 0.0) {
                return Err(Error::InvalidArgument("excess cutoff must be >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn n_sq_at(&self, omega_thz: f64) -> f64 {
        match self.rolloff {
            Rolloff::Flat => self.n_sq_center,
            Rolloff::Lorentzian { bandwidth_thz } => {
                let r = omega_thz / bandwidth_thz;
                1.0 - (1.0 - self.n_sq_center) / (1.0 + r * r)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBin {
    pub omega_thz: f64,
    pub vx_db: f64,
    pub vp_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub bins: Vec<SpectrumBin>,
    pub rbw_thz: f64,
    pub averages: u32,
    /// Seed of the last stochastic stage applied, if any.
    pub seed: Option<u64>,
}

/// `n` equally spaced sideband frequencies over `[−span, span]`.
pub fn uniform_grid(n: usize, span_thz: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            // integer numerator keeps the grid exactly antisymmetric
            let denom = (n - 1) as f64;
            (0..n)
                .map(|i| span_thz * (2.0 * i as f64 - denom) / denom)
                .collect()
        }
    }
}

/// Default grid: 401 bins over ±1 THz.
pub fn default_grid() -> Vec<f64> {
    uniform_grid(401, MAX_SIDEBAND_THZ)
}

/// Evaluates the analytic noise budget bin by bin.
pub fn synthesize_spectrum(config: &TeleporterConfig, profile: &SqueezingProfile, grid: &[f64]) -> Result<SpectrumRecord> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("frequency grid is empty".into()));
    }
    config.validate()?;
    profile.validate()?;
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("frequency grid must be strictly increasing".into()));
    }
    if grid.iter().any(|w| w.abs() > MAX_SIDEBAND_THZ + BAND_TOL) {
        log::warn!("frequency grid extends beyond ±{MAX_SIDEBAND_THZ} THz");
    }
    let quantum = config.effective_n_sq() < 1.0;
    let bins = grid
        .iter()
        .map(|&omega| {
            let n_sq = if quantum { profile.n_sq_at(omega) } else { 1.0 };
            let budget = noise_budget(n_sq, config.eta_bell, config.eta_meas)?;
            let excess = profile.low_freq_excess.map_or(0.0, |e| e.excess_db(omega));
            let v = budget.n_out_db + excess;
            Ok(SpectrumBin {
                omega_thz: omega,
                vx_db: v,
                vp_db: v,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rbw_thz = if grid.len() > 1 {
        (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64
    } else {
        0.0
    };
    Ok(SpectrumRecord {
        bins,
        rbw_thz,
        averages: 1,
        seed: None,
    })
}

/// Adds i.i.d. Gaussian dB offsets of standard deviation `sigma_db` to every
/// bin. Bin `i` draws from its own stream keyed by `(seed, i)`.
pub fn apply_measurement_jitter(record: &SpectrumRecord, sigma_db: f64, seed: u64) -> Result<SpectrumRecord> {
    if !(sigma_db >= 0.0) || !sigma_db.is_finite() {
        return Err(Error::InvalidArgument(format!("jitter sigma must be >= 0, got {sigma_db}")));
    }
    if sigma_db == 0.0 {
        return Ok(record.clone());
    }
    let normal = Normal::new(0.0, sigma_db).expect("sigma checked");
    let bins = record
        .bins
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let mut r = rng::stream(seed, Domain::SpectrumJitter, i as u64);
            SpectrumBin {
                omega_thz: b.omega_thz,
                vx_db: b.vx_db + normal.sample(&mut r),
                vp_db: b.vp_db + normal.sample(&mut r),
            }
        })
        .collect();
    Ok(SpectrumRecord {
        bins,
        seed: Some(seed),
        ..record.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandAverage {
    pub mean_vx_db: f64,
    pub mean_vp_db: f64,
    /// Standard error of the band means, pooled over both quadratures.
    pub se_db: f64,
    pub count: usize,
}

/// Arithmetic mean of dB values over `exclude_below ≤ |Ω| ≤ band_edge`.
pub fn band_average(record: &SpectrumRecord, exclude_below_thz: f64, band_edge_thz: f64) -> Result<BandAverage> {
    let in_band: Vec<&SpectrumBin> = record
        .bins
        .iter()
        .filter(|b| {
            let w = b.omega_thz.abs();
            w >= exclude_below_thz - BAND_TOL && w <= band_edge_thz + BAND_TOL
        })
        .collect();
    let n = in_band.len();
    if n == 0 {
        return Err(Error::EmptyBand);
    }
    let mean = |f: fn(&SpectrumBin) -> f64| in_band.iter().map(|b| f(b)).sum::<f64>() / n as f64;
    let mean_vx = mean(|b| b.vx_db);
    let mean_vp = mean(|b| b.vp_db);
    let se_db = if n > 1 {
        let ss: f64 = in_band
            .iter()
            .map(|b| (b.vx_db - mean_vx).powi(2) + (b.vp_db - mean_vp).powi(2))
            .sum();
        let pooled_var = ss / (2 * (n - 1)) as f64;
        (pooled_var / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(BandAverage {
        mean_vx_db: mean_vx,
        mean_vp_db: mean_vp,
        se_db,
        count: n,
    })
}

/// Band-averages the default flat bands (0.2–1.0 THz on both sides) and
/// converts to an [`EstimatorReport`].
pub fn spectrum_report(record: &SpectrumRecord, eta_meas: f64) -> Result<EstimatorReport> {
    spectrum_report_with_bands(record, eta_meas, 0.2, MAX_SIDEBAND_THZ)
}

pub fn spectrum_report_with_bands(
    record: &SpectrumRecord,
    eta_meas: f64,
    exclude_below_thz: f64,
    band_edge_thz: f64,
) -> Result<EstimatorReport> {
    let avg = band_average(record, exclude_below_thz, band_edge_thz)?;
    EstimatorReport::from_raw_db(avg.mean_vx_db, avg.mean_vp_db, eta_meas, avg.se_db, avg.count, None)
}

/// Output quadrature variance plateau (dB) expected for a flat profile.
pub fn plateau_db(config: &TeleporterConfig) -> Result<f64> {
    let b = noise_budget(config.effective_n_sq(), config.eta_bell, config.eta_meas)?;
    Ok(to_db(b.n_out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teleporter::Regime;

    fn flat_record(db: f64, n: usize) -> SpectrumRecord {
        SpectrumRecord {
            bins: uniform_grid(n, 1.0)
                .into_iter()
                .map(|w| SpectrumBin { omega_thz: w, vx_db: db, vp_db: db })
                .collect(),
            rbw_thz: 2.0 / (n - 1) as f64,
            averages: 1,
            seed: None,
        }
    }

    #[test]
    fn flat_quantum_and_classical_plateaus() {
        let cfg = TeleporterConfig::reference();
        let rec = synthesize_spectrum(&cfg, &SqueezingProfile::flat(cfg.n_sq), &default_grid()).unwrap();
        assert_eq!(rec.bins.len(), 401);
        assert!(rec.bins.iter().all(|b| (b.vx_db - 1.82).abs() < 5e-3 && (b.vp_db - 1.82).abs() < 5e-3));
        let cl = cfg.with_regime(Regime::Classical);
        let rec = synthesize_spectrum(&cl, &SqueezingProfile::flat(cfg.n_sq), &default_grid()).unwrap();
        assert!(rec.bins.iter().all(|b| (b.vx_db - 4.77).abs() < 5e-3));
    }

    #[test]
    fn low_frequency_excess_raises_inner_bins() {
        let cfg = TeleporterConfig::reference();
        let profile = SqueezingProfile {
            low_freq_excess: Some(LowFreqExcess::default()),
            ..SqueezingProfile::flat(cfg.n_sq)
        };
        let rec = synthesize_spectrum(&cfg, &profile, &default_grid()).unwrap();
        let plateau = plateau_db(&cfg).unwrap();
        for b in &rec.bins {
            if b.omega_thz.abs() < 0.2 - 1e-9 {
                assert!(b.vx_db > plateau);
            } else {
                assert!((b.vx_db - plateau).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_profile_gives_symmetric_spectrum() {
        let cfg = TeleporterConfig::reference();
        let profile = SqueezingProfile {
            n_sq_center: cfg.n_sq,
            rolloff: Rolloff::Lorentzian { bandwidth_thz: 2.0 },
            low_freq_excess: Some(LowFreqExcess::default()),
        };
        let rec = synthesize_spectrum(&cfg, &profile, &default_grid()).unwrap();
        let n = rec.bins.len();
        for i in 0..n {
            assert_eq!(rec.bins[i].vx_db, rec.bins[n - 1 - i].vx_db);
        }
    }

    #[test]
    fn empty_grid_is_rejected() {
        let cfg = TeleporterConfig::reference();
        assert!(synthesize_spectrum(&cfg, &SqueezingProfile::flat(0.178), &[]).is_err());
    }

    #[test]
    fn jitter_behaviour() {
        let rec = flat_record(1.77, 10_001);
        assert_eq!(apply_measurement_jitter(&rec, 0.0, 5).unwrap(), rec);
        let a = apply_measurement_jitter(&rec, 0.06, 5).unwrap();
        let b = apply_measurement_jitter(&rec, 0.06, 5).unwrap();
        assert_eq!(a, b);
        let n = a.bins.len() as f64;
        let mean = a.bins.iter().map(|b| b.vx_db).sum::<f64>() / n;
        let sd = (a.bins.iter().map(|b| (b.vx_db - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((0.055..=0.065).contains(&sd), "{sd}");
    }

    #[test]
    fn band_average_mechanics() {
        let rec = flat_record(1.77, 401);
        let avg = band_average(&rec, 0.2, 1.0).unwrap();
        assert!((avg.mean_vx_db - 1.77).abs() < 1e-12);
        assert_eq!(avg.count, 322);
        let jittered = apply_measurement_jitter(&flat_record(4.74, 40_001), 0.06, 11).unwrap();
        let avg = band_average(&jittered, 0.2, 1.0).unwrap();
        assert!((avg.mean_vx_db - 4.74).abs() < 0.01);
        let inner = SpectrumRecord {
            bins: uniform_grid(41, 0.19).into_iter().map(|w| SpectrumBin { omega_thz: w, vx_db: 1.0, vp_db: 1.0 }).collect(),
            ..rec
        };
        assert_eq!(band_average(&inner, 0.2, 1.0).unwrap_err(), Error::EmptyBand);
    }

    #[test]
    fn report_regressions() {
        let mut rec = flat_record(1.77, 401);
        for b in &mut rec.bins {
            b.vp_db = 1.73;
        }
        let r = spectrum_report(&rec, 0.9).unwrap();
        assert!((r.vx_int_db - 1.93).abs() < 0.01 && (r.vp_int_db - 1.88).abs() < 0.01);
        assert!((r.f_int - 0.784).abs() < 1e-3);
        for b in &mut rec.bins {
            b.vx_db = 4.74;
            b.vp_db = 4.58;
        }
        let r = spectrum_report(&rec, 0.9).unwrap();
        assert!((r.vx_int_db - 5.05).abs() < 0.01 && (r.vp_int_db - 4.88).abs() < 0.01);
        let r = spectrum_report(&rec, 1.0).unwrap();
        assert!((r.vx_int_db - r.vx_raw_db).abs() < 1e-12);
    }
}
