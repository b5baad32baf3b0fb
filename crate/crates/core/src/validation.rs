//! Self-check suite behind `cvtp validate`.
//!
//! Every check carries a `module:invariant` id. `Quick` runs the oracle at
//! a reduced truncation and grid; `Full` adds the complete fidelity cross-grid.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fock::{self, FockDensityMatrix, GridSpec};
use crate::gaussian::{self, GaussianState, QuadAxis, SymplecticTransform};
use crate::opa::{self, WaveguideSpec};
use crate::spectral::{self, SqueezingProfile};
use crate::teleporter::{self, Regime, TeleporterConfig};
use crate::timetrace::{average_fidelity_closed_form, variance_se_db};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    pub fn fock_dim(self) -> usize {
        match self {
            Level::Quick => 15,
            Level::Full => 25,
        }
    }

    pub fn grid(self) -> GridSpec {
        match self {
            Level::Quick => GridSpec::quick(),
            Level::Full => GridSpec::default(),
        }
    }

    /// Trace leakage tolerated after the noise channel. At D = 15 a V = 3
    /// thermal tail alone leaves about 3e-5 outside the basis.
    fn trace_tol(self) -> f64 {
        match self {
            Level::Quick => 1e-4,
            Level::Full => 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub level: Level,
    pub checks: Vec<Check>,
}

impl ValidationSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Recorder(Vec<Check>);

impl Recorder {
    fn record(&mut self, id: &str, outcome: Result<(bool, String)>) {
        let (passed, detail) = match outcome {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        log::debug!("{id}: {} ({detail})", if passed { "ok" } else { "FAIL" });
        self.0.push(Check {
            id: id.to_string(),
            passed,
            detail,
        });
    }
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> (bool, String) {
    ((got - want).abs() <= tol, format!("{name} = {got:.6} (expected {want:.6} ± {tol:.1e})"))
}

/// Runs all checks. `config`, when given, adds circuit checks for that
/// teleporter configuration.
pub fn run_validation(level: Level, config: Option<&TeleporterConfig>) -> ValidationSummary {
    let mut r = Recorder(Vec::new());
    gaussian_checks(&mut r);
    opa_checks(&mut r);
    teleporter_checks(&mut r, config);
    spectral_checks(&mut r);
    timetrace_checks(&mut r);
    fock_checks(&mut r, level);
    ValidationSummary { level, checks: r.0 }
}

fn gaussian_checks(r: &mut Recorder) {
    r.record("gaussian:symplectic", (|| {
        let transforms = [
            SymplecticTransform::squeezer(0, 7.5, QuadAxis::X)?,
            SymplecticTransform::psa(1, QuadAxis::P, 30.0)?,
            SymplecticTransform::beamsplitter(0, 1, 0.3)?,
            SymplecticTransform::phase(1, 0.7),
        ];
        let worst = transforms.iter().map(|t| t.symplectic_error()).fold(0.0, f64::max);
        Ok((worst < gaussian::SYMPLECTIC_TOL, format!("max |SΩSᵀ − Ω| = {worst:.2e}")))
    })());
    r.record("gaussian:uncertainty", (|| {
        let mut st = GaussianState::vacuum(2)?;
        st = gaussian::apply_symplectic(&st, &SymplecticTransform::squeezer(0, 10.0, QuadAxis::P)?)?;
        st = gaussian::apply_symplectic(&st, &SymplecticTransform::beamsplitter(0, 1, 0.4)?)?;
        st = gaussian::apply_loss(&st, 1, 0.6)?;
        st = gaussian::psa(&st, 0, QuadAxis::X, 20.0)?;
        let m = st.min_uncertainty_eigenvalue();
        Ok((m >= -gaussian::UNCERTAINTY_TOL, format!("min eig(σ + iΩ) = {m:.3e}")))
    })());
    r.record("gaussian:loss_to_vacuum", (|| {
        let sq = gaussian::apply_symplectic(&GaussianState::vacuum(1)?, &SymplecticTransform::squeezer(0, 6.0, QuadAxis::X)?)?;
        let out = gaussian::apply_loss(&sq, 0, 0.0)?;
        let dev = (out.cov() - nalgebra::DMatrix::<f64>::identity(2, 2)).abs().max();
        Ok((dev < 1e-12, format!("|σ − I| = {dev:.2e}")))
    })());
}

fn opa_checks(r: &mut Recorder) {
    r.record("opa:segment_convergence", (|| {
        let spec = WaveguideSpec::new(30.0, 0.36, 1024)?;
        Ok((opa::segment_convergence_check(&spec)?, "30 dB, 0.36 dB loss, 1024 segments".into()))
    })());
    r.record("opa:lossless_ideal", (|| {
        let eq = opa::distributed_psa_equivalent(&WaveguideSpec::new(30.0, 0.0, 64)?)?;
        Ok((eq.eta_eff == 1.0, format!("eta_eff = {}", eq.eta_eff)))
    })());
    r.record("opa:preamp_efficiency", (|| {
        let e = opa::preamp_detection_efficiency(&opa::PreampDetectorSpec::new(25.0, 0.3)?);
        Ok(close("eta", e, 0.9927, 5e-5))
    })());
}

fn circuit_variances(cfg: &TeleporterConfig) -> Result<(f64, f64)> {
    let out = teleporter::run_teleport(cfg, &GaussianState::vacuum(1)?)?;
    let q = out.quad_statistics(0)?;
    Ok((q.var_x, q.var_p))
}

fn teleporter_checks(r: &mut Recorder, config: Option<&TeleporterConfig>) {
    r.record("teleporter:classical_three", (|| {
        let cfg = TeleporterConfig::calibrated(1.0, 1.0, 1.0, 60.0, Regime::Quantum)?;
        let (vx, vp) = circuit_variances(&cfg)?;
        Ok(close("Var_out", vx.max(vp), 3.0, 3e-3))
    })());
    r.record("teleporter:budget_anchor", (|| {
        let b = teleporter::analytic_noise_budget(&TeleporterConfig::reference())?;
        Ok(close("N_out dB", b.n_out_db, 1.82, 5e-3))
    })());
    r.record("teleporter:circuit_vs_analytic", (|| {
        let mut worst: f64 = 0.0;
        for &(n, b, m) in &[(0.178, 0.9, 0.9), (0.5, 0.3, 0.7), (0.1, 1.0, 0.1), (1.0, 0.1, 1.0)] {
            for regime in [Regime::Quantum, Regime::Classical] {
                let cfg = TeleporterConfig::calibrated(n, b, m, 60.0, regime)?;
                let (vx, vp) = circuit_variances(&cfg)?;
                let want = teleporter::analytic_noise_budget(&cfg)?.n_out;
                worst = worst.max(((vx - want) / want).abs()).max(((vp - want) / want).abs());
            }
        }
        Ok((worst < 1e-3, format!("max relative deviation {worst:.2e}")))
    })());
    r.record("teleporter:fidelity_anchors", (|| {
        let a = teleporter::fidelity_from_variances(3.0, 3.0);
        let b = teleporter::fidelity_from_variances(2.0, 2.0);
        Ok((a == 0.5 && (b - 2.0 / 3.0).abs() < 1e-15, format!("F(3,3) = {a}, F(2,2) = {b}")))
    })());
    r.record("teleporter:intrinsic_roundtrip", (|| {
        let (v, eta) = (2.3, 0.83);
        let back = teleporter::intrinsic_from_raw(eta * v + 1.0 - eta, eta)?;
        Ok(close("V", back, v, 1e-12))
    })());
    if let Some(cfg) = config {
        r.record("teleporter:config_unity_gain", Ok((cfg.is_unity_gain(), format!("tap {}", cfg.tap_reflectivity))));
        r.record("teleporter:config_circuit", (|| {
            let (vx, vp) = circuit_variances(cfg)?;
            let want = teleporter::analytic_noise_budget(cfg)?.n_out;
            let dev = ((vx - want) / want).abs().max(((vp - want) / want).abs());
            let tol = if cfg.ff_gain_db >= 60.0 { 1e-3 } else { 1e-2 };
            Ok((dev < tol, format!("relative deviation {dev:.2e} at {} dB", cfg.ff_gain_db)))
        })());
    }
}

fn spectral_checks(r: &mut Recorder) {
    r.record("spectral:symmetry", (|| {
        let profile = SqueezingProfile::flat(0.178);
        let rec = spectral::synthesize_spectrum(&TeleporterConfig::reference(), &profile, &spectral::default_grid())?;
        let n = rec.bins.len();
        let symmetric = (0..n).all(|i| rec.bins[i].vx_db == rec.bins[n - 1 - i].vx_db && rec.bins[i].vp_db == rec.bins[n - 1 - i].vp_db);
        Ok((symmetric, format!("{n} bins")))
    })());
    r.record("spectral:constant_band_average", (|| {
        let rec = spectral::synthesize_spectrum(&TeleporterConfig::reference(), &SqueezingProfile::flat(0.178), &spectral::default_grid())?;
        let avg = spectral::band_average(&rec, 0.2, 1.0)?;
        let plateau = spectral::plateau_db(&TeleporterConfig::reference())?;
        Ok(close("band mean dB", avg.mean_vx_db, plateau, 1e-12))
    })());
}

fn timetrace_checks(r: &mut Recorder) {
    r.record("timetrace:se_formula", Ok(close("se dB", variance_se_db(10_480), 0.06, 2e-3)));
    r.record("timetrace:closed_form_reduction", (|| {
        let f = average_fidelity_closed_form(1.5, 1.58, 1.0, 29.0)?;
        let want = teleporter::fidelity_from_variances(1.5, 1.58);
        Ok(close("F", f, want, 1e-15))
    })());
}

fn fock_checks(r: &mut Recorder, level: Level) {
    let dim = level.fock_dim();
    let grid = level.grid();
    let iso = |v: f64| Matrix2::new(v, 0.0, 0.0, v);
    let vac_fidelity = |added: f64| -> Result<(f64, f64)> {
        let out = fock::classical_noise_channel(&FockDensityMatrix::vacuum(dim)?, &iso(added), grid)?;
        Ok((fock::oracle_fidelity(&out, Complex64::new(0.0, 0.0))?, out.trace_deficit()))
    };
    r.record("fock:classical_limit", vac_fidelity(2.0).map(|(f, _)| close("F", f, 0.5, 1e-3)));
    r.record("fock:no_cloning_limit", vac_fidelity(1.0).map(|(f, _)| close("F", f, 2.0 / 3.0, 1e-3)));
    r.record("fock:trace_preserved", vac_fidelity(2.0).map(|(_, d)| {
        (d.abs() <= level.trace_tol(), format!("deficit {d:.2e} at D = {dim}"))
    }));
    let (variances, offsets): (&[f64], &[f64]) = match level {
        Level::Quick => (&[1.2, 3.0], &[0.0, 1.0]),
        Level::Full => (&[1.2, 2.0, 3.0], &[0.0, 0.5, 1.0]),
    };
    r.record("fock:fidelity_cross_grid", (|| {
        let mut worst: f64 = 0.0;
        for &v in variances {
            let out = fock::classical_noise_channel(&FockDensityMatrix::vacuum(dim)?, &iso(v - 1.0), grid)?;
            let gauss = GaussianState::new(nalgebra::DVector::zeros(2), nalgebra::DMatrix::identity(2, 2) * v)?;
            for &d in offsets {
                let oracle = fock::oracle_fidelity(&out, fock::alpha_from_quadratures(d, 0.0))?;
                let formula = gaussian::coherent_vs_gaussian_fidelity([d, 0.0], &gauss)?;
                worst = worst.max((oracle - formula).abs());
            }
        }
        Ok((worst < 1e-3, format!("max |oracle − formula| = {worst:.2e} over {}×{}", variances.len(), offsets.len())))
    })());
    r.record("fock:teleport_crosscheck", (|| {
        let (oracle, formula) = teleport_crosscheck(0.5, Complex64::new(0.5, 0.0), dim, grid)?;
        Ok(close("F oracle", oracle, formula, 1e-3))
    })());
}

/// Teleports a coherent state through the Gaussian circuit and through the
/// equivalent displacement channel in Fock space. Returns (oracle, Gaussian)
/// fidelities.
pub fn teleport_crosscheck(n_sq: f64, alpha: Complex64, dim: usize, grid: GridSpec) -> Result<(f64, f64)> {
    let cfg = TeleporterConfig::calibrated(n_sq, 1.0, 1.0, 60.0, Regime::Quantum)?;
    let mean = [2.0 * alpha.re, 2.0 * alpha.im];
    let out = teleporter::run_teleport(&cfg, &GaussianState::coherent(mean[0], mean[1]))?;
    let formula = gaussian::coherent_vs_gaussian_fidelity(mean, &out)?;
    let c = out.mode_cov(0)?;
    let added = Matrix2::new(c[(0, 0)] - 1.0, c[(0, 1)], c[(1, 0)], c[(1, 1)] - 1.0);
    let start = fock::coherent_density(fock::alpha_from_quadratures(out.mean()[0], out.mean()[1]), dim)?;
    let rho = fock::classical_noise_channel(&start, &added, grid)?;
    Ok((fock::oracle_fidelity(&rho, alpha)?, formula))
}
