use serde::{Deserialize, Serialize};

use super::modes::{Mode, WavepacketModes};
use crate::error::{Error, Result};
use crate::gaussian::to_db;
use crate::report::EstimatorReport;

/// Minimum pooled mode count for [`estimate_report`].
pub const MIN_MODES: usize = 100;

/// Standard error (dB) of a variance estimated from `n_modes` Gaussian samples.
pub fn variance_se_db(n_modes: usize) -> f64 {
    10.0 / std::f64::consts::LN_10 * (2.0 / n_modes as f64).sqrt()
}

/// Ensemble average over Gaussian-distributed coherent inputs (per-quadrature
/// variance `sigma_ens`) of the fidelity between `|α⟩` and an output with
/// mean `g·α` and variances `vx`, `vp`.
pub fn average_fidelity_closed_form(vx: f64, vp: f64, g: f64, sigma_ens: f64) -> Result<f64> {
    if !(vx > 0.0 && vp > 0.0) {
        return Err(Error::InvalidArgument(format!("variances must be > 0, got ({vx}, {vp})")));
    }
    if !(g > 0.0 && g <= 1.0) {
        return Err(Error::InvalidArgument(format!("gain must be in (0, 1], got {g}")));
    }
    if !(sigma_ens >= 0.0) {
        return Err(Error::InvalidArgument("ensemble variance must be >= 0".into()));
    }
    let mismatch = (1.0 - g).powi(2) * sigma_ens;
    let base = 2.0 / ((1.0 + vx) * (1.0 + vp)).sqrt();
    Ok(base / ((1.0 + mismatch / (1.0 + vx)) * (1.0 + mismatch / (1.0 + vp))).sqrt())
}

fn sample_variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n as f64;
    values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Mean of the per-quadrature variances of the reference input amplitudes.
pub fn ensemble_variance(modes: &[Mode]) -> f64 {
    if modes.len() < 2 {
        return 0.0;
    }
    0.5 * (sample_variance(modes.iter().map(|m| m.in_x_k)) + sample_variance(modes.iter().map(|m| m.in_p_k)))
}

/// Residual-variance estimator on pooled modes.
///
/// The raw variance is `Var(x_k − √η·in_x_k)`; `f_raw` is the ensemble
/// average fidelity at amplitude gain `√η` with the ensemble variance taken
/// from the reference amplitudes, and `f_raw_gain_corrected` the unity-gain
/// value on the same variances.
pub fn estimate_report(modes: &[Mode], eta_meas: f64) -> Result<EstimatorReport> {
    if modes.len() < MIN_MODES {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_MODES} modes, got {}",
            modes.len()
        )));
    }
    if !(eta_meas > 0.0 && eta_meas <= 1.0) {
        return Err(Error::InvalidArgument(format!("eta_meas must be in (0, 1], got {eta_meas}")));
    }
    let g = eta_meas.sqrt();
    let vx = sample_variance(modes.iter().map(|m| m.x_k - g * m.in_x_k));
    let vp = sample_variance(modes.iter().map(|m| m.p_k - g * m.in_p_k));
    if !(vx > 0.0 && vp > 0.0) {
        return Err(Error::InvalidInput("degenerate modes: zero residual variance".into()));
    }
    let sigma = ensemble_variance(modes);
    let f_raw = average_fidelity_closed_form(vx, vp, g, sigma)?;
    let n = modes.len();
    EstimatorReport::from_raw_db(to_db(vx), to_db(vp), eta_meas, variance_se_db(n), n, Some(f_raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeField {
    X,
    P,
    InX,
    InP,
}

impl ModeField {
    fn get(self, m: &Mode) -> f64 {
        match self {
            ModeField::X => m.x_k,
            ModeField::P => m.p_k,
            ModeField::InX => m.in_x_k,
            ModeField::InP => m.in_p_k,
        }
    }
}

/// Pearson correlation between neighbouring modes, pooled over every
/// adjacent pair inside each trace.
pub fn adjacent_mode_correlation(traces: &[WavepacketModes], field: ModeField) -> Result<f64> {
    let pairs: Vec<(f64, f64)> = traces
        .iter()
        .flat_map(|t| t.modes.windows(2).map(move |w| (field.get(&w[0]), field.get(&w[1]))))
        .collect();
    if pairs.len() < 3 {
        return Err(Error::InvalidInput("not enough adjacent mode pairs".into()));
    }
    let n = pairs.len() as f64;
    let (ma, mb) = (
        pairs.iter().map(|p| p.0).sum::<f64>() / n,
        pairs.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for &(a, b) in &pairs {
        sab += (a - ma) * (b - mb);
        saa += (a - ma).powi(2);
        sbb += (b - mb).powi(2);
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(Error::InvalidInput("constant modes have no correlation".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teleporter::fidelity_from_variances;

    #[test]
    fn closed_form_reductions() {
        let f = fidelity_from_variances(1.5, 1.58);
        assert!((average_fidelity_closed_form(1.5, 1.58, 1.0, 29.0).unwrap() - f).abs() < 1e-15);
        assert!((average_fidelity_closed_form(1.5, 1.58, 0.949, 0.0).unwrap() - f).abs() < 1e-15);
        assert!(average_fidelity_closed_form(1.5, 1.58, 1.2, 1.0).is_err());
    }

    #[test]
    fn standard_error_formula() {
        assert!((variance_se_db(10_480) - 0.060).abs() < 0.002);
    }

    #[test]
    fn intrinsic_variances_to_fidelity() {
        let f = fidelity_from_variances(crate::gaussian::from_db(1.92), crate::gaussian::from_db(2.16));
        assert!((f - 0.770).abs() < 1e-3, "{f}");
    }

    #[test]
    fn too_few_or_degenerate_modes() {
        let m = |k| Mode { k, x_k: 1.0, p_k: 1.0, in_x_k: 0.0, in_p_k: 0.0, weight_sum: 1.0 };
        let few: Vec<Mode> = (0..10).map(m).collect();
        assert!(matches!(estimate_report(&few, 0.9), Err(Error::InvalidInput(_))));
        let flat: Vec<Mode> = (0..200).map(m).collect();
        assert!(matches!(estimate_report(&flat, 0.9), Err(Error::InvalidInput(_))));
    }
}
