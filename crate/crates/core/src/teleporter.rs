//! All-optical teleportation circuit.
//!
//! Mode layout during a run: 0 = input, 1 = EPR mode 1 (sender side),
//! 2 = EPR mode 2 (receiver side, becomes the output).
//!
//! The Bell splitter maps the input and EPR mode 1 onto
//! `a = (in − m₁)/√2` (mode 0) and `b = (in + m₁)/√2` (mode 1). Arm `a` is
//! amplified in X, arm `b` in P, and both are tapped weakly into mode 2,
//! which gives `x_out = x_in − x₁ + x₂` and `p_out = p_in + p₁ + p₂` at
//! unity gain.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    apply_loss, apply_symplectic, from_db, make_vacuum, to_db, GaussianState, QuadAxis,
    SymplecticTransform,
};

/// Relative tolerance within which a tap reflectivity counts as calibrated.
pub const CALIBRATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Quantum,
    /// EPR source blocked: both ancilla modes are vacua.
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeleporterConfig {
    /// Effective squeezing noise of each EPR squeezer (1 = no squeezing).
    pub n_sq: f64,
    pub eta_bell: f64,
    pub eta_meas: f64,
    /// Feedforward PSA power gain.
    pub ff_gain_db: f64,
    pub regime: Regime,
    /// Reflectivity of the taps coupling the amplified Bell arms into the
    /// output mode.
    pub tap_reflectivity: f64,
}

impl TeleporterConfig {
    /// Config with the tap reflectivity set for unity feedforward gain.
    pub fn calibrated(n_sq: f64, eta_bell: f64, eta_meas: f64, ff_gain_db: f64, regime: Regime) -> Result<Self> {
        let tap_reflectivity = calibrate_unity_gain(ff_gain_db, eta_bell)?;
        let cfg = Self {
            n_sq,
            eta_bell,
            eta_meas,
            ff_gain_db,
            regime,
            tap_reflectivity,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Squeezing 0.178 (7.5 dB), Bell and final efficiencies 0.9, 60 dB feedforward.
    pub fn reference() -> Self {
        Self::calibrated(0.178, 0.9, 0.9, 60.0, Regime::Quantum).expect("reference parameters are valid")
    }

    pub fn with_regime(self, regime: Regime) -> Self {
        Self { regime, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let open_closed = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be in (0, 1], got {v}")))
            }
        };
        open_closed("n_sq", self.n_sq)?;
        open_closed("eta_bell", self.eta_bell)?;
        open_closed("eta_meas", self.eta_meas)?;
        if !self.ff_gain_db.is_finite() {
            return Err(Error::InvalidArgument("ff_gain_db must be finite".into()));
        }
        if !(self.tap_reflectivity > 0.0 && self.tap_reflectivity < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tap_reflectivity must be in (0, 1), got {}",
                self.tap_reflectivity
            )));
        }
        Ok(())
    }

    /// Squeezing noise actually feeding the circuit (1 when the EPR source is blocked).
    pub fn effective_n_sq(&self) -> f64 {
        match self.regime {
            Regime::Quantum => self.n_sq,
            Regime::Classical => 1.0,
        }
    }

    pub fn is_unity_gain(&self) -> bool {
        match calibrate_unity_gain(self.ff_gain_db, self.eta_bell) {
            Ok(eps) => (self.tap_reflectivity - eps).abs() <= CALIBRATION_TOL * eps,
            Err(_) => false,
        }
    }

    pub fn require_unity_gain(&self) -> Result<()> {
        if self.is_unity_gain() {
            Ok(())
        } else {
            Err(Error::Calibration(format!(
                "tap reflectivity {} does not give unity gain at {} dB feedforward",
                self.tap_reflectivity, self.ff_gain_db
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    pub n_out: f64,
    pub n_out_db: f64,
    pub fidelity_vacuum: f64,
}

/// Tap reflectivity giving unity gain: `ε·G·η_Bell / 2 = 1`.
pub fn calibrate_unity_gain(ff_gain_db: f64, eta_bell: f64) -> Result<f64> {
    if !(eta_bell > 0.0 && eta_bell <= 1.0) {
        return Err(Error::InvalidArgument(format!("eta_bell must be in (0, 1], got {eta_bell}")));
    }
    let eps = 2.0 / (eta_bell * 10f64.powf(ff_gain_db / 10.0));
    if !(eps < 1.0) {
        return Err(Error::GainTooLow { eps });
    }
    Ok(eps)
}

/// Two orthogonally squeezed vacua on a 50:50 splitter.
/// `Var(x₁ − x₂) = Var(p₁ + p₂) = 2·n_sq`.
pub fn build_epr(n_sq: f64) -> Result<GaussianState> {
    if !(n_sq > 0.0 && n_sq <= 1.0) {
        return Err(Error::InvalidArgument(format!("n_sq must be in (0, 1], got {n_sq}")));
    }
    let db = -to_db(n_sq);
    let mut st = make_vacuum(2)?;
    st = apply_symplectic(&st, &SymplecticTransform::squeezer(0, db, QuadAxis::X)?)?;
    st = apply_symplectic(&st, &SymplecticTransform::squeezer(1, db, QuadAxis::P)?)?;
    apply_symplectic(&st, &SymplecticTransform::beamsplitter(0, 1, 0.5)?)
}

/// Runs the circuit, rejecting configs that are not calibrated to unity gain.
pub fn run_teleport(config: &TeleporterConfig, input: &GaussianState) -> Result<GaussianState> {
    config.require_unity_gain()?;
    run_teleport_uncalibrated(config, input)
}

/// Runs the circuit with whatever tap reflectivity the config carries.
pub fn run_teleport_uncalibrated(config: &TeleporterConfig, input: &GaussianState) -> Result<GaussianState> {
    config.validate()?;
    if input.n_modes() != 1 {
        return Err(Error::InvalidArgument(format!(
            "input must be a single mode, got {}",
            input.n_modes()
        )));
    }
    let ancilla = match config.regime {
        Regime::Quantum => build_epr(config.n_sq)?,
        Regime::Classical => make_vacuum(2)?,
    };
    let mut st = tensor(input, &ancilla);

    // Bell splitter: mode 1 → (m₁ + in)/√2, mode 0 → (in − m₁)/√2
    st = apply_symplectic(&st, &SymplecticTransform::beamsplitter(1, 0, 0.5)?)?;
    st = apply_loss(&st, 0, config.eta_bell)?;
    st = apply_loss(&st, 1, config.eta_bell)?;

    st = apply_symplectic(&st, &SymplecticTransform::psa(0, QuadAxis::X, config.ff_gain_db)?)?;
    st = apply_symplectic(&st, &SymplecticTransform::psa(1, QuadAxis::P, config.ff_gain_db)?)?;

    let t = 1.0 - config.tap_reflectivity;
    st = apply_symplectic(&st, &SymplecticTransform::beamsplitter(2, 0, t)?)?;
    st = apply_symplectic(&st, &SymplecticTransform::beamsplitter(2, 1, t)?)?;

    st = apply_loss(&st, 2, config.eta_meas)?;
    st.partial_trace(&[2])
}

fn tensor(a: &GaussianState, b: &GaussianState) -> GaussianState {
    let (da, db) = (a.mean().len(), b.mean().len());
    let mut mean = DVector::zeros(da + db);
    mean.rows_mut(0, da).copy_from(a.mean());
    mean.rows_mut(da, db).copy_from(b.mean());
    let mut cov = nalgebra::DMatrix::zeros(da + db, da + db);
    cov.view_mut((0, 0), (da, da)).copy_from(a.cov());
    cov.view_mut((da, da), (db, db)).copy_from(b.cov());
    GaussianState::new(mean, cov).expect("product of valid states is valid")
}

/// Closed-form output variance for a vacuum input:
/// `η_meas·(1 + 2N_sq + 2(1−η_Bell)/η_Bell) + (1 − η_meas)`.
///
/// Accepts `n_sq = 0` (ideal EPR limit).
pub fn noise_budget(n_sq: f64, eta_bell: f64, eta_meas: f64) -> Result<NoiseBudget> {
    if !(0.0..=1.0).contains(&n_sq) {
        return Err(Error::InvalidArgument(format!("n_sq must be in [0, 1], got {n_sq}")));
    }
    if !(eta_bell > 0.0 && eta_bell <= 1.0) {
        return Err(Error::InvalidArgument(format!("eta_bell must be in (0, 1], got {eta_bell}")));
    }
    if !(0.0..=1.0).contains(&eta_meas) {
        return Err(Error::InvalidArgument(format!("eta_meas must be in [0, 1], got {eta_meas}")));
    }
    let intrinsic = 1.0 + 2.0 * n_sq + 2.0 * (1.0 - eta_bell) / eta_bell;
    let n_out = eta_meas * intrinsic + (1.0 - eta_meas);
    Ok(NoiseBudget {
        n_out,
        n_out_db: to_db(n_out),
        fidelity_vacuum: fidelity_from_variances(n_out, n_out),
    })
}

pub fn analytic_noise_budget(config: &TeleporterConfig) -> Result<NoiseBudget> {
    noise_budget(config.effective_n_sq(), config.eta_bell, config.eta_meas)
}

/// Inverts a detection loss of efficiency `eta` on a measured variance.
pub fn intrinsic_from_raw(v_raw: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidArgument(format!("eta must be in (0, 1], got {eta}")));
    }
    if !(v_raw > 1.0 - eta) {
        return Err(Error::UnphysicalInput(format!(
            "raw variance {v_raw} does not exceed the vacuum admixture {}",
            1.0 - eta
        )));
    }
    Ok((v_raw - (1.0 - eta)) / eta)
}

/// Same as [`intrinsic_from_raw`] with both sides in dB.
pub fn intrinsic_from_raw_db(v_raw_db: f64, eta: f64) -> Result<f64> {
    intrinsic_from_raw(from_db(v_raw_db), eta).map(to_db)
}

/// Coherent-state fidelity at unity gain for output variances `vx`, `vp`.
pub fn fidelity_from_variances(vx: f64, vp: f64) -> f64 {
    2.0 / ((1.0 + vx) * (1.0 + vp)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn var_pair(st: &GaussianState) -> (f64, f64) {
        let q = st.quad_statistics(0).unwrap();
        (q.var_x, q.var_p)
    }

    #[test]
    fn epr_correlations() {
        let epr = build_epr(0.178).unwrap();
        let c = epr.cov();
        let dx = c[(0, 0)] + c[(2, 2)] - 2.0 * c[(0, 2)];
        let sp = c[(1, 1)] + c[(3, 3)] + 2.0 * c[(1, 3)];
        assert_relative_eq!(dx, 0.356, max_relative = 1e-12);
        assert_relative_eq!(sp, 0.356, max_relative = 1e-12);
        let unsqueezed = build_epr(1.0).unwrap();
        assert!((unsqueezed.cov() - nalgebra::DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);
        let ideal = build_epr(1e-9).unwrap();
        let c = ideal.cov();
        assert!(c[(0, 0)] + c[(2, 2)] - 2.0 * c[(0, 2)] < 1e-6);
        assert!(build_epr(0.0).is_err());
    }

    #[test]
    fn classical_baseline_is_three() {
        let cfg = TeleporterConfig::calibrated(1.0, 1.0, 1.0, 60.0, Regime::Quantum).unwrap();
        let out = run_teleport(&cfg, &make_vacuum(1).unwrap()).unwrap();
        let (vx, vp) = var_pair(&out);
        assert!((vx - 3.0).abs() < 3e-3 && (vp - 3.0).abs() < 3e-3, "{vx} {vp}");
    }

    #[test]
    fn ideal_epr_teleports_perfectly() {
        let cfg = TeleporterConfig::calibrated(1e-6, 1.0, 1.0, 60.0, Regime::Quantum).unwrap();
        let out = run_teleport(&cfg, &make_vacuum(1).unwrap()).unwrap();
        let (vx, vp) = var_pair(&out);
        assert!((vx - 1.0).abs() < 1e-4 && (vp - 1.0).abs() < 1e-4, "{vx} {vp}");
    }

    #[test]
    fn reference_config_circuit() {
        let out = run_teleport(&TeleporterConfig::reference(), &make_vacuum(1).unwrap()).unwrap();
        let (vx, vp) = var_pair(&out);
        assert!((vx - 1.520).abs() < 2e-3 && (vp - 1.520).abs() < 2e-3, "{vx} {vp}");
    }

    #[test]
    fn analytic_budget_values() {
        let q = analytic_noise_budget(&TeleporterConfig::reference()).unwrap();
        assert!((q.n_out - 1.52).abs() < 1e-3);
        assert!((q.n_out_db - 1.82).abs() < 5e-3);
        let c = analytic_noise_budget(&TeleporterConfig::reference().with_regime(Regime::Classical)).unwrap();
        assert_relative_eq!(c.n_out, 3.0, max_relative = 1e-12);
        assert!((c.n_out_db - 4.77).abs() < 5e-3);
        assert_relative_eq!(c.fidelity_vacuum, 0.5, max_relative = 1e-12);
        let ideal = noise_budget(0.0, 1.0, 1.0).unwrap();
        assert_eq!(ideal.n_out, 1.0);
        assert_eq!(ideal.fidelity_vacuum, 1.0);
        assert!(matches!(noise_budget(0.5, 0.0, 1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn loss_inversion() {
        assert!((intrinsic_from_raw_db(1.77, 0.9).unwrap() - 1.93).abs() < 0.01);
        assert!((intrinsic_from_raw_db(4.74, 0.9).unwrap() - 5.05).abs() < 0.01);
        assert_relative_eq!(intrinsic_from_raw(1.503, 0.9).unwrap(), 1.559, max_relative = 1e-3);
        assert_relative_eq!(intrinsic_from_raw(2.9785, 0.9).unwrap(), 3.198, max_relative = 1e-3);
        assert_eq!(intrinsic_from_raw(1.7, 1.0).unwrap(), 1.7);
        assert!(matches!(intrinsic_from_raw(0.05, 0.9), Err(Error::UnphysicalInput(_))));
    }

    #[test]
    fn fidelity_values() {
        assert!((fidelity_from_variances(1.503, 1.489) - 0.801).abs() < 1e-3);
        assert!((fidelity_from_variances(1.556, 1.644) - 0.770).abs() < 1e-3);
        assert_eq!(fidelity_from_variances(1.0, 1.0), 1.0);
        assert_eq!(fidelity_from_variances(3.0, 3.0), 0.5);
        assert_eq!(fidelity_from_variances(2.0, 2.0), 2.0 / 3.0);
    }

    #[test]
    fn unity_gain_calibration() {
        assert_relative_eq!(calibrate_unity_gain(30.0, 1.0).unwrap(), 2e-3, max_relative = 1e-12);
        assert_relative_eq!(calibrate_unity_gain(60.0, 0.9).unwrap(), 2.0 / 0.9e6, max_relative = 1e-12);
        assert!(matches!(calibrate_unity_gain(2.0, 1.0), Err(Error::GainTooLow { .. })));

        let cfg = TeleporterConfig::calibrated(0.3, 1.0, 1.0, 60.0, Regime::Quantum).unwrap();
        let out = run_teleport(&cfg, &GaussianState::coherent(2.0, 0.0)).unwrap();
        assert!((out.mean()[0] - 2.0).abs() < 0.01 && out.mean()[1].abs() < 0.01);
    }

    #[test]
    fn uncalibrated_config_is_rejected() {
        let mut cfg = TeleporterConfig::reference();
        cfg.tap_reflectivity *= 1.5;
        let vac = make_vacuum(1).unwrap();
        assert!(matches!(run_teleport(&cfg, &vac), Err(Error::Calibration(_))));
        let out = run_teleport_uncalibrated(&cfg, &vac).unwrap();
        assert!(out.quad_statistics(0).unwrap().var_x > 1.52);
    }

    #[test]
    fn output_signs_follow_bell_outcomes() {
        // Displace a single ancilla quadrature and read where it lands.
        let cfg = TeleporterConfig::calibrated(1.0, 1.0, 1.0, 60.0, Regime::Classical).unwrap();
        let probe = |mode: usize, quad: usize| {
            let input = make_vacuum(1).unwrap();
            let mut anc = make_vacuum(2).unwrap();
            let mut m = anc.mean().clone();
            m[2 * mode + quad] = 1.0;
            anc = anc.with_mean(m).unwrap();
            let mut st = tensor(&input, &anc);
            st = apply_symplectic(&st, &SymplecticTransform::beamsplitter(1, 0, 0.5).unwrap()).unwrap();
            st = apply_symplectic(&st, &SymplecticTransform::psa(0, QuadAxis::X, cfg.ff_gain_db).unwrap()).unwrap();
            st = apply_symplectic(&st, &SymplecticTransform::psa(1, QuadAxis::P, cfg.ff_gain_db).unwrap()).unwrap();
            let t = 1.0 - cfg.tap_reflectivity;
            st = apply_symplectic(&st, &SymplecticTransform::beamsplitter(2, 0, t).unwrap()).unwrap();
            st = apply_symplectic(&st, &SymplecticTransform::beamsplitter(2, 1, t).unwrap()).unwrap();
            let q = st.quad_statistics(2).unwrap();
            (q.mean_x, q.mean_p)
        };
        let close = |a: f64, b: f64| (a - b).abs() < 1e-3;
        let (x, _) = probe(0, 0); // +x₁ displacement
        assert!(close(x, -1.0), "x₁ enters with − sign: {x}");
        let (x, _) = probe(1, 0);
        assert!(close(x, 1.0), "x₂ enters with + sign: {x}");
        let (_, p) = probe(0, 1);
        assert!(close(p, 1.0), "p₁ enters with + sign: {p}");
        let (_, p) = probe(1, 1);
        assert!(close(p, 1.0), "p₂ enters with + sign: {p}");
        // input: x_in and p_in both enter with + sign
        let out = run_teleport(&cfg, &GaussianState::coherent(1.0, -1.0)).unwrap();
        assert!(close(out.mean()[0], 1.0) && close(out.mean()[1], -1.0));
    }
}
