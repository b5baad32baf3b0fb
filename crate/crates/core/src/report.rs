use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gaussian::{from_db, to_db};
use crate::teleporter::{fidelity_from_variances, intrinsic_from_raw};

/// Raw and loss-corrected variances with derived fidelities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub vx_raw_db: f64,
    pub vp_raw_db: f64,
    pub vx_int_db: f64,
    pub vp_int_db: f64,
    /// Raw fidelity. For vacuum spectra this is the unity-gain value; for the
    /// time-domain estimator it is the ensemble average at gain `√η_meas`.
    pub f_raw: f64,
    /// Raw fidelity assuming unity gain (mean-corrected estimator).
    pub f_raw_gain_corrected: f64,
    pub f_int: f64,
    /// Standard error of the raw variances in dB.
    pub se_db: f64,
    /// Standard error of the intrinsic variances in dB (largest of the two quadratures).
    pub se_int_db: f64,
    pub f_raw_se: f64,
    pub f_int_se: f64,
    /// Modes (time domain) or bins (frequency domain) behind the estimate.
    pub n_modes: usize,
}

impl EstimatorReport {
    /// Builds a report from raw variances given in dB. `f_raw` overrides the
    /// unity-gain raw fidelity when given.
    pub fn from_raw_db(
        vx_raw_db: f64,
        vp_raw_db: f64,
        eta_meas: f64,
        se_db: f64,
        n_modes: usize,
        f_raw: Option<f64>,
    ) -> Result<Self> {
        let (vx, vp) = (from_db(vx_raw_db), from_db(vp_raw_db));
        let (ix, ip) = (intrinsic_from_raw(vx, eta_meas)?, intrinsic_from_raw(vp, eta_meas)?);
        // dB(V_int) moves by V_raw/(V_raw − (1−η)) per dB of V_raw
        let amplification = |v: f64| v / (v - (1.0 - eta_meas));
        let se_int_db = se_db * amplification(vx).max(amplification(vp));
        let f_gc = fidelity_from_variances(vx, vp);
        let f_int = fidelity_from_variances(ix, ip);
        Ok(Self {
            vx_raw_db,
            vp_raw_db,
            vx_int_db: to_db(ix),
            vp_int_db: to_db(ip),
            f_raw: f_raw.unwrap_or(f_gc),
            f_raw_gain_corrected: f_gc,
            f_int,
            se_db,
            se_int_db,
            f_raw_se: fidelity_se(f_gc, vx, vp, se_db),
            f_int_se: fidelity_se(f_int, ix, ip, se_int_db),
            n_modes,
        })
    }
}

/// First-order error of `2/√((1+vx)(1+vp))` for independent dB errors `se_db`.
fn fidelity_se(f: f64, vx: f64, vp: f64, se_db: f64) -> f64 {
    let k = std::f64::consts::LN_10 / 10.0;
    let (a, b) = (vx / (1.0 + vx), vp / (1.0 + vp));
    f * 0.5 * k * se_db * (a * a + b * b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantum_spectrum_numbers() {
        let r = EstimatorReport::from_raw_db(1.77, 1.73, 0.9, 0.06, 320, None).unwrap();
        assert!((r.vx_int_db - 1.93).abs() < 0.01);
        assert!((r.vp_int_db - 1.88).abs() < 0.01);
        assert!((r.f_int - 0.784).abs() < 1e-3);
        assert!((r.f_raw - 0.801).abs() < 1e-3);
        assert!(r.f_raw_se > 0.003 && r.f_raw_se < 0.006);
    }

    #[test]
    fn lossless_detection_leaves_raw_alone() {
        let r = EstimatorReport::from_raw_db(2.0, 2.5, 1.0, 0.01, 10, None).unwrap();
        assert!((r.vx_int_db - 2.0).abs() < 1e-12);
        assert!((r.vp_int_db - 2.5).abs() < 1e-12);
        assert_eq!(r.se_int_db, r.se_db);
    }
}
