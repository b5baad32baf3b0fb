//! Lumped-equivalent models of PPLN waveguide OPAs.
//!
//! A waveguide with distributed parametric gain and propagation loss is
//! discretised into `segments` cells (half gain, loss, half gain). The resulting affine
//! map on the amplified quadrature, `V ↦ A·V + B`, is matched to a
//! "loss `η_eff`, then ideal PSA of power gain `G_eq`" channel:
//! `G_eq = A + B`, `η_eff = A / (A + B)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveguideSpec {
    /// Parametric power gain on the amplified quadrature with no loss.
    pub total_gain_db: f64,
    /// Total propagation loss with the pump off.
    pub internal_loss_db: f64,
    pub segments: usize,
}

impl WaveguideSpec {
    pub fn new(total_gain_db: f64, internal_loss_db: f64, segments: usize) -> Result<Self> {
        let spec = Self {
            total_gain_db,
            internal_loss_db,
            segments,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_gain_db >= 0.0) || !self.total_gain_db.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "total_gain_db must be >= 0, got {}",
                self.total_gain_db
            )));
        }
        if !(self.internal_loss_db >= 0.0) || !self.internal_loss_db.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "internal_loss_db must be >= 0, got {}",
                self.internal_loss_db
            )));
        }
        if self.segments == 0 {
            return Err(Error::InvalidArgument("segments must be >= 1".into()));
        }
        Ok(())
    }

    fn with_segments(&self, segments: usize) -> Self {
        Self { segments, ..*self }
    }
}

/// Segmented propagation result on the amplified quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentedResponse {
    /// Mean (amplitude) gain seen by a displaced probe.
    pub mean_gain: f64,
    /// Variance map `V_out = slope·V_in + offset`.
    pub slope: f64,
    pub offset: f64,
}

impl SegmentedResponse {
    pub fn output_variance(&self, v_in: f64) -> f64 {
        self.slope * v_in + self.offset
    }
}

/// Equivalent lumped channel: loss `eta_eff` followed by an ideal PSA of
/// amplitude gain `g_total`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsaEquivalent {
    pub g_total: f64,
    pub eta_eff: f64,
}

impl PsaEquivalent {
    pub fn output_variance(&self, v_in: f64) -> f64 {
        self.g_total * self.g_total * (self.eta_eff * v_in + 1.0 - self.eta_eff)
    }

    pub fn mean_gain(&self) -> f64 {
        self.g_total * self.eta_eff.sqrt()
    }
}

/// Propagates a probe through the discretised waveguide.
pub fn segmented_response(spec: &WaveguideSpec) -> Result<SegmentedResponse> {
    spec.validate()?;
    let n = spec.segments as f64;
    // symmetric split per cell keeps the discretisation error O(1/segments²)
    let half_g2 = 10f64.powf(spec.total_gain_db / (20.0 * n));
    let eta = 10f64.powf(-spec.internal_loss_db / (10.0 * n));
    let (mut slope, mut offset, mut mean_gain) = (1.0, 0.0, 1.0);
    for _ in 0..spec.segments {
        slope *= half_g2;
        offset *= half_g2;
        slope *= eta;
        offset = eta * offset + (1.0 - eta);
        slope *= half_g2;
        offset *= half_g2;
        mean_gain *= half_g2 * eta.sqrt();
    }
    Ok(SegmentedResponse {
        mean_gain,
        slope,
        offset,
    })
}

pub fn distributed_psa_equivalent(spec: &WaveguideSpec) -> Result<PsaEquivalent> {
    let r = segmented_response(spec)?;
    let g2 = r.slope + r.offset;
    Ok(PsaEquivalent {
        g_total: g2.sqrt(),
        eta_eff: r.slope / g2,
    })
}

/// True when doubling the segment count moves `eta_eff` by less than 1e-6.
pub fn segment_convergence_check(spec: &WaveguideSpec) -> Result<bool> {
    let coarse = distributed_psa_equivalent(spec)?.eta_eff;
    let fine = distributed_psa_equivalent(&spec.with_segments(spec.segments * 2))?.eta_eff;
    Ok((coarse - fine).abs() < 1e-6)
}

/// Finds the internal loss (dB) for which a waveguide of `total_gain_db`
/// reaches `target_eta_eff`. Bisection on a monotone function.
pub fn calibrate_internal_loss(total_gain_db: f64, target_eta_eff: f64, segments: usize) -> Result<f64> {
    if !(target_eta_eff > 0.0 && target_eta_eff < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target effective efficiency must be in (0,1), got {target_eta_eff}"
        )));
    }
    let eta_at = |loss: f64| -> Result<f64> {
        Ok(distributed_psa_equivalent(&WaveguideSpec::new(total_gain_db, loss, segments)?)?.eta_eff)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while eta_at(hi)? > target_eta_eff {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Convergence("no loss value reaches the target".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eta_at(mid)? > target_eta_eff {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreampDetectorSpec {
    pub preamp_gain_db: f64,
    pub detector_qe: f64,
}

impl PreampDetectorSpec {
    pub fn new(preamp_gain_db: f64, detector_qe: f64) -> Result<Self> {
        if !(detector_qe > 0.0 && detector_qe <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "detector_qe must be in (0,1], got {detector_qe}"
            )));
        }
        if !preamp_gain_db.is_finite() {
            return Err(Error::InvalidArgument("preamp_gain_db must be finite".into()));
        }
        Ok(Self {
            preamp_gain_db,
            detector_qe,
        })
    }
}

/// Effective efficiency of an ideal pre-amplifier of power gain `G` ahead of
/// a detector of quantum efficiency `η`: `Gη / (Gη + 1 − η)`.
pub fn preamp_detection_efficiency(spec: &PreampDetectorSpec) -> f64 {
    let g = 10f64.powf(spec.preamp_gain_db / 10.0);
    let eta = spec.detector_qe;
    g * eta / (g * eta + 1.0 - eta)
}
