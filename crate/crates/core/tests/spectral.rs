use cvtp_core::spectral::*;
use cvtp_core::teleporter::{Regime, TeleporterConfig};

#[test]
fn jitter_is_mean_zero() {
    let cfg = TeleporterConfig::reference();
    let clean = synthesize_spectrum(&cfg, &SqueezingProfile::flat(cfg.n_sq), &uniform_grid(200_001, 1.0)).unwrap();
    let plateau = plateau_db(&cfg).unwrap();
    let noisy = apply_measurement_jitter(&clean, 0.06, 3).unwrap();
    let avg = band_average(&noisy, 0.2, 1.0).unwrap();
    assert!(avg.count >= 100_000);
    assert!((avg.mean_vx_db - plateau).abs() <= 3.0 * avg.se_db);
    assert!((avg.mean_vp_db - plateau).abs() <= 3.0 * avg.se_db);
}

#[test]
fn quoted_plateaus() {
    let q = TeleporterConfig::reference();
    let c = q.with_regime(Regime::Classical);
    assert!((plateau_db(&q).unwrap() - 1.82).abs() < 5e-3);
    assert!((plateau_db(&c).unwrap() - 4.77).abs() < 5e-3);
    let rec = synthesize_spectrum(&c, &SqueezingProfile::flat(q.n_sq), &default_grid()).unwrap();
    assert!(rec.bins.iter().all(|b| (b.vx_db - 4.77).abs() < 5e-3 && (b.vp_db - 4.77).abs() < 5e-3));
}

#[test]
fn excess_noise_only_inside_cutoff() {
    let cfg = TeleporterConfig::reference();
    let profile = SqueezingProfile {
        low_freq_excess: Some(LowFreqExcess::default()),
        ..SqueezingProfile::flat(cfg.n_sq)
    };
    let rec = synthesize_spectrum(&cfg, &profile, &default_grid()).unwrap();
    let plateau = plateau_db(&cfg).unwrap();
    for b in &rec.bins {
        if b.omega_thz.abs() < 0.2 {
            assert!(b.vx_db > plateau);
        } else {
            assert!((b.vx_db - plateau).abs() < 1e-12);
        }
    }
    let avg = band_average(&rec, 0.2, 1.0).unwrap();
    assert!((avg.mean_vx_db - plateau).abs() < 1e-12);
}

#[test]
fn ten_seed_band_averages_stay_on_plateau() {
    let cfg = TeleporterConfig::reference();
    let clean = synthesize_spectrum(&cfg, &SqueezingProfile::flat(cfg.n_sq), &default_grid()).unwrap();
    let plateau = plateau_db(&cfg).unwrap();
    for seed in 0..10 {
        let r = spectrum_report(&apply_measurement_jitter(&clean, 0.06, seed).unwrap(), cfg.eta_meas).unwrap();
        assert!((r.vx_raw_db - plateau).abs() <= 0.02 && (r.vp_raw_db - plateau).abs() <= 0.02);
    }
}
