//! Gaussian states of `n` bosonic modes.
//!
//! Mean vectors and covariance matrices are interleaved per mode
//! (`x₁, p₁, …, xₙ, pₙ`) and expressed in shot-noise units, so the vacuum
//! covariance is the identity and a pure state saturates `cov + iΩ ⪰ 0`.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_fraction, Error, Result};

/// Relative symmetry tolerance for covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Floor on the eigenvalues of `cov + iΩ`.
pub const UNCERTAINTY_TOL: f64 = 1e-9;
/// Tolerance for `S Ω Sᵀ = Ω`.
pub const SYMPLECTIC_TOL: f64 = 1e-10;

/// Quadrature selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuadAxis {
    X,
    P,
}

impl QuadAxis {
    pub fn conjugate(self) -> Self {
        match self {
            QuadAxis::X => QuadAxis::P,
            QuadAxis::P => QuadAxis::X,
        }
    }

    fn offset(self) -> usize {
        match self {
            QuadAxis::X => 0,
            QuadAxis::P => 1,
        }
    }
}

/// Converts a variance in shot-noise units to decibels relative to shot noise.
pub fn to_db(variance: f64) -> f64 {
    10.0 * variance.log10()
}

/// Inverse of [`to_db`].
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Standard symplectic form for `n` modes in interleaved ordering.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state after checking symmetry, positivity of the diagonal and
    /// the uncertainty principle.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::InvalidState(format!(
                "mean vector length {dim} is not a positive even number"
            )));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::InvalidState(format!(
                "covariance is {}x{}, expected {dim}x{dim}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let scale = cov.amax().max(1.0);
        for i in 0..dim {
            if cov[(i, i)] <= 0.0 {
                return Err(Error::InvalidState(format!(
                    "diagonal entry {i} is not positive"
                )));
            }
            for j in (i + 1)..dim {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidState(format!(
                        "covariance not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let state = Self { mean, cov };
        let min_eig = state.min_uncertainty_eigenvalue();
        if min_eig < -UNCERTAINTY_TOL * scale {
            return Err(Error::InvalidState(format!(
                "uncertainty principle violated: min eig(cov + iΩ) = {min_eig:e}"
            )));
        }
        Ok(state)
    }

    // Internal constructor for results of physical maps on valid states.
    fn from_parts(mean: DVector<f64>, mut cov: DMatrix<f64>) -> Self {
        let sym = (&cov + cov.transpose()) * 0.5;
        cov.copy_from(&sym);
        Self { mean, cov }
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        make_vacuum(n_modes)
    }

    /// Coherent state with the given quadrature means, one mode.
    pub fn coherent(x: f64, p: f64) -> Self {
        Self {
            mean: DVector::from_vec(vec![x, p]),
            cov: DMatrix::identity(2, 2),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn with_mean(mut self, mean: DVector<f64>) -> Result<Self> {
        if mean.len() != self.mean.len() {
            return Err(Error::InvalidArgument(format!(
                "mean length {} does not match state dimension {}",
                mean.len(),
                self.mean.len()
            )));
        }
        self.mean = mean;
        Ok(self)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(Error::Index {
                index: mode,
                n_modes: self.n_modes(),
            });
        }
        Ok(())
    }

    /// Smallest eigenvalue of the Hermitian matrix `cov + iΩ`.
    pub fn min_uncertainty_eigenvalue(&self) -> f64 {
        let dim = self.cov.nrows();
        let omega = symplectic_form(self.n_modes());
        let h = DMatrix::from_fn(dim, dim, |i, j| Complex64::new(self.cov[(i, j)], omega[(i, j)]));
        SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn quad_statistics(&self, mode: usize) -> Result<QuadStats> {
        self.check_mode(mode)?;
        let (i, j) = (2 * mode, 2 * mode + 1);
        Ok(QuadStats {
            mean_x: self.mean[i],
            mean_p: self.mean[j],
            var_x: self.cov[(i, i)],
            var_p: self.cov[(j, j)],
        })
    }

    /// Reduced state on `keep` (in the given order). Tracing out Gaussian
    /// modes only deletes their rows and columns.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidArgument("keep-set is empty".into()));
        }
        for (pos, &m) in keep.iter().enumerate() {
            self.check_mode(m)?;
            if keep[..pos].contains(&m) {
                return Err(Error::InvalidArgument(format!("mode {m} listed twice")));
            }
        }
        let idx: Vec<usize> = keep.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mean = DVector::from_fn(idx.len(), |r, _| self.mean[idx[r]]);
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.cov[(idx[r], idx[c])]);
        Ok(Self { mean, cov })
    }

    /// Single-mode 2×2 covariance block.
    pub fn mode_cov(&self, mode: usize) -> Result<Matrix2<f64>> {
        self.check_mode(mode)?;
        let i = 2 * mode;
        Ok(Matrix2::new(
            self.cov[(i, i)],
            self.cov[(i, i + 1)],
            self.cov[(i + 1, i)],
            self.cov[(i + 1, i + 1)],
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadStats {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
}

pub fn make_vacuum(n_modes: usize) -> Result<GaussianState> {
    if n_modes == 0 {
        return Err(Error::InvalidArgument("state needs at least one mode".into()));
    }
    Ok(GaussianState {
        mean: DVector::zeros(2 * n_modes),
        cov: DMatrix::identity(2 * n_modes, 2 * n_modes),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransformKind {
    Squeezer,
    Beamsplitter,
    Psa,
    Phase,
    Custom,
}

/// A symplectic map acting on a subset of modes.
///
/// `matrix` is `2k × 2k` for the `k` listed modes and is embedded into the
/// full state dimension by [`apply_symplectic`].
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    matrix: DMatrix<f64>,
    modes: Vec<usize>,
    label: TransformKind,
}

impl SymplecticTransform {
    pub fn new(matrix: DMatrix<f64>, modes: Vec<usize>, label: TransformKind) -> Result<Self> {
        let k = modes.len();
        if k == 0 || matrix.nrows() != 2 * k || matrix.ncols() != 2 * k {
            return Err(Error::InvalidArgument(format!(
                "transform matrix {}x{} does not match {k} modes",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for (pos, m) in modes.iter().enumerate() {
            if modes[..pos].contains(m) {
                return Err(Error::InvalidArgument(format!("mode {m} listed twice")));
            }
        }
        let t = Self { matrix, modes, label };
        let err = t.symplectic_error();
        if !(err < SYMPLECTIC_TOL) {
            return Err(Error::InvalidArgument(format!(
                "matrix is not symplectic: ‖SΩSᵀ−Ω‖∞ = {err:e}"
            )));
        }
        Ok(t)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn label(&self) -> TransformKind {
        self.label
    }

    /// `‖S Ω Sᵀ − Ω‖∞` (max-abs entry).
    pub fn symplectic_error(&self) -> f64 {
        let omega = symplectic_form(self.modes.len());
        (&self.matrix * &omega * self.matrix.transpose() - omega).amax()
    }

    fn single_mode_scale(mode: usize, scale: f64, axis: QuadAxis, label: TransformKind) -> Self {
        // `scale` on `axis`, 1/scale on the conjugate.
        let mut m = DMatrix::zeros(2, 2);
        m[(axis.offset(), axis.offset())] = scale;
        let c = axis.conjugate().offset();
        m[(c, c)] = 1.0 / scale;
        Self {
            matrix: m,
            modes: vec![mode],
            label,
        }
    }

    /// Squeezes quadrature `axis` of `mode` by `squeezing_db`
    /// (variance × 10^(−dB/10) on `axis`, × 10^(+dB/10) on its conjugate).
    pub fn squeezer(mode: usize, squeezing_db: f64, axis: QuadAxis) -> Result<Self> {
        if !(squeezing_db >= 0.0) || !squeezing_db.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "squeezing must be a non-negative number of dB, got {squeezing_db}"
            )));
        }
        let scale = 10f64.powf(-squeezing_db / 20.0);
        Ok(Self::single_mode_scale(mode, scale, axis, TransformKind::Squeezer))
    }

    /// Noiseless phase-sensitive amplifier: amplitude gain `10^(gain_db/20)` on
    /// `axis`, its inverse on the conjugate quadrature.
    pub fn psa(mode: usize, axis: QuadAxis, gain_db: f64) -> Result<Self> {
        if !gain_db.is_finite() {
            return Err(Error::InvalidArgument(format!("gain {gain_db} dB is not finite")));
        }
        let g = 10f64.powf(gain_db / 20.0);
        Ok(Self::single_mode_scale(mode, g, axis, TransformKind::Psa))
    }

    /// Beamsplitter with power transmissivity `t`:
    /// `aᵢ' = √t·aᵢ + √(1−t)·aⱼ`, `aⱼ' = −√(1−t)·aᵢ + √t·aⱼ`.
    pub fn beamsplitter(mode_i: usize, mode_j: usize, t: f64) -> Result<Self> {
        check_fraction("transmissivity", t)?;
        if mode_i == mode_j {
            return Err(Error::InvalidArgument(
                "beamsplitter needs two distinct modes".into(),
            ));
        }
        let (c, s) = (t.sqrt(), (1.0 - t).sqrt());
        let mut m = DMatrix::zeros(4, 4);
        for q in 0..2 {
            m[(q, q)] = c;
            m[(q, 2 + q)] = s;
            m[(2 + q, q)] = -s;
            m[(2 + q, 2 + q)] = c;
        }
        Ok(Self {
            matrix: m,
            modes: vec![mode_i, mode_j],
            label: TransformKind::Beamsplitter,
        })
    }

    /// Phase-space rotation by `theta` radians.
    pub fn phase(mode: usize, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            matrix: DMatrix::from_row_slice(2, 2, &[c, -s, s, c]),
            modes: vec![mode],
            label: TransformKind::Phase,
        }
    }

    fn embed(&self, n_modes: usize) -> Result<DMatrix<f64>> {
        for &m in &self.modes {
            if m >= n_modes {
                return Err(Error::Index { index: m, n_modes });
            }
        }
        let mut full = DMatrix::identity(2 * n_modes, 2 * n_modes);
        for (a, &ma) in self.modes.iter().enumerate() {
            for (b, &mb) in self.modes.iter().enumerate() {
                for qa in 0..2 {
                    for qb in 0..2 {
                        full[(2 * ma + qa, 2 * mb + qb)] = self.matrix[(2 * a + qa, 2 * b + qb)];
                    }
                }
            }
        }
        Ok(full)
    }
}

pub fn apply_symplectic(state: &GaussianState, s: &SymplecticTransform) -> Result<GaussianState> {
    let full = s.embed(state.n_modes())?;
    let mean = &full * &state.mean;
    let cov = &full * &state.cov * full.transpose();
    Ok(GaussianState::from_parts(mean, cov))
}

/// Pure-loss channel of efficiency `eta` on one mode.
pub fn apply_loss(state: &GaussianState, mode: usize, eta: f64) -> Result<GaussianState> {
    check_fraction("eta", eta)?;
    state.check_mode(mode)?;
    let r = eta.sqrt();
    let (i, j) = (2 * mode, 2 * mode + 1);
    let mut mean = state.mean.clone();
    mean[i] *= r;
    mean[j] *= r;
    let mut cov = state.cov.clone();
    let dim = cov.nrows();
    for &q in &[i, j] {
        for k in 0..dim {
            cov[(q, k)] *= r;
            cov[(k, q)] *= r;
        }
    }
    cov[(i, i)] += 1.0 - eta;
    cov[(j, j)] += 1.0 - eta;
    Ok(GaussianState::from_parts(mean, cov))
}

/// Phase-sensitive amplification of `axis` on `mode` by `gain_db`.
pub fn psa(state: &GaussianState, mode: usize, axis: QuadAxis, gain_db: f64) -> Result<GaussianState> {
    apply_symplectic(state, &SymplecticTransform::psa(mode, axis, gain_db)?)
}

/// Fidelity `⟨α|ρ|α⟩` between a coherent target (given by its quadrature
/// means) and a single-mode Gaussian state.
///
/// The covariance is rotated to its principal axes first; a tie at exactly
/// 45° resolves to the X-leaning solution of `atan2`.
pub fn coherent_vs_gaussian_fidelity(target_mean: [f64; 2], out: &GaussianState) -> Result<f64> {
    if out.n_modes() != 1 {
        return Err(Error::InvalidArgument(format!(
            "fidelity needs a single-mode state, got {} modes",
            out.n_modes()
        )));
    }
    let c = out.mode_cov(0)?;
    let (a, b, off) = (c[(0, 0)], c[(1, 1)], 0.5 * (c[(0, 1)] + c[(1, 0)]));
    if !(a > 0.0 && b > 0.0 && a * b - off * off > 0.0) {
        return Err(Error::InvalidState("covariance is not positive definite".into()));
    }
    let theta = 0.5 * (2.0 * off).atan2(a - b);
    let (s, co) = theta.sin_cos();
    let rot = Matrix2::new(co, s, -s, co);
    let diag = rot * Matrix2::new(a, off, off, b) * rot.transpose();
    let delta = rot * Vector2::new(out.mean[0] - target_mean[0], out.mean[1] - target_mean[1]);
    let (vx, vp) = (diag[(0, 0)], diag[(1, 1)]);
    let prefactor = 2.0 / ((1.0 + vx) * (1.0 + vp)).sqrt();
    let exponent = -delta[0] * delta[0] / (2.0 * (1.0 + vx)) - delta[1] * delta[1] / (2.0 * (1.0 + vp));
    Ok(prefactor * exponent.exp())
}
