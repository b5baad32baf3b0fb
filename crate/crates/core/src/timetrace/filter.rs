//! Linear-phase FIR filters for shaping white noise.

use rand::Rng;
use rand_distr::StandardNormal;

/// Symmetric FIR filter with `Σ h² = 1`, so unit white noise in gives unit
/// per-sample variance out.
#[derive(Debug, Clone, PartialEq)]
pub struct Fir {
    taps: Vec<f64>,
}

const RESPONSE_POINTS: usize = 4096;

impl Fir {
    /// Designs `2·half_len + 1` taps from a real, even amplitude response
    /// `response(f_ghz)` supported on `[0, f_max_ghz]`.
    pub fn from_response(response: impl Fn(f64) -> f64, f_max_ghz: f64, sample_rate_gsps: f64, half_len: usize) -> Self {
        let dt_ns = 1.0 / sample_rate_gsps;
        let df = f_max_ghz / RESPONSE_POINTS as f64;
        let amp: Vec<(f64, f64)> = (0..RESPONSE_POINTS)
            .map(|j| {
                let f = (j as f64 + 0.5) * df;
                (f, response(f))
            })
            .collect();
        let mut taps: Vec<f64> = (-(half_len as i64)..=half_len as i64)
            .map(|n| {
                let t = n as f64 * dt_ns;
                amp.iter()
                    .map(|&(f, a)| a * (2.0 * std::f64::consts::PI * f * t).cos())
                    .sum::<f64>()
            })
            .collect();
        let norm = taps.iter().map(|h| h * h).sum::<f64>().sqrt();
        taps.iter_mut().for_each(|h| *h /= norm);
        Self { taps }
    }

    pub fn identity() -> Self {
        Self { taps: vec![1.0] }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn half_len(&self) -> usize {
        self.taps.len() / 2
    }

    /// Output autocorrelation for unit white input, lags `0..=2·half_len`.
    pub fn autocorrelation(&self) -> Vec<f64> {
        let n = self.taps.len();
        (0..n)
            .map(|m| (0..n - m).map(|i| self.taps[i] * self.taps[i + m]).sum())
            .collect()
    }

    /// `n` samples of filtered unit white noise.
    pub fn filtered_noise<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let k = self.taps.len();
        let white: Vec<f64> = (0..n + k - 1).map(|_| rng.sample(StandardNormal)).collect();
        (0..n)
            .map(|i| {
                white[i..i + k]
                    .iter()
                    .zip(&self.taps)
                    .map(|(w, h)| w * h)
                    .sum()
            })
            .collect()
    }
}

/// Quadratic form `wᵀ R w` for weights on consecutive samples, with `acf`
/// the one-sided autocorrelation (zero beyond its length).
pub fn weighted_variance(weights: &[f64], acf: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, wi) in weights.iter().enumerate() {
        for (j, wj) in weights.iter().enumerate() {
            let lag = i.abs_diff(j);
            if let Some(r) = acf.get(lag) {
                total += wi * wj * r;
            }
        }
    }
    total
}

/// Cross-covariance `w₁ᵀ R w₂` where `w₂` starts `offset` samples after `w₁`.
pub fn weighted_cross(w1: &[f64], w2: &[f64], offset: usize, acf: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, a) in w1.iter().enumerate() {
        for (j, b) in w2.iter().enumerate() {
            let lag = (offset + j).abs_diff(i);
            if let Some(r) = acf.get(lag) {
                total += a * b * r;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    #[test]
    fn taps_are_normalised_and_symmetric() {
        let fir = Fir::from_response(|f| (-(f / 50.0).powi(2)).exp(), 128.0, 256.0, 12);
        let e: f64 = fir.taps().iter().map(|h| h * h).sum();
        assert!((e - 1.0).abs() < 1e-12);
        let t = fir.taps();
        for i in 0..t.len() {
            assert!((t[i] - t[t.len() - 1 - i]).abs() < 1e-12);
        }
        assert!((fir.autocorrelation()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn filtered_noise_has_unit_variance() {
        let fir = Fir::from_response(|f| if f < 55.0 { 1.0 } else { 0.0 }, 55.0, 256.0, 40);
        let x = fir.filtered_noise(200_000, &mut stream(3, Domain::MonteCarlo, 0));
        let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((var - 1.0).abs() < 0.02, "{var}");
        let acf = fir.autocorrelation();
        let lag1 = x.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (x.len() - 1) as f64;
        assert!((lag1 - acf[1]).abs() < 0.02);
    }

    #[test]
    fn quadratic_forms() {
        let acf = [1.0, 0.5];
        assert!((weighted_variance(&[1.0, 1.0], &acf) - 3.0).abs() < 1e-15);
        assert!((weighted_cross(&[1.0], &[1.0], 1, &acf) - 0.5).abs() < 1e-15);
        assert_eq!(weighted_cross(&[1.0], &[1.0], 2, &acf), 0.0);
    }
}
