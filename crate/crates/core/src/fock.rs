//! Truncated Fock-space oracle for single-mode states.
//!
//! Used to cross-check the Gaussian fidelity formula and the unity-gain
//! teleportation channel, which acts as a random displacement
//! `ρ ↦ ∫ P(β) D(β) ρ D†(β) d²β`. Quadrature means relate to amplitudes as
//! `x = 2 Re α`, `p = 2 Im α`.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const PSD_FLOOR: f64 = -1e-9;
/// Largest tolerated probability outside the truncated basis for targets.
pub const MAX_TRUNCATION_DEFICIT: f64 = 1e-8;
/// Largest entry-wise change allowed between the grid and a half-resolution grid.
pub const CONVERGENCE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    dim: usize,
    matrix: DMatrix<Complex64>,
}

impl FockDensityMatrix {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || matrix.ncols() != dim {
            return Err(Error::InvalidState("density matrix must be square and non-empty".into()));
        }
        let rho = Self { dim, matrix };
        let herm = rho.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (error {herm:.3e})")));
        }
        let tr = rho.trace();
        if !(tr <= 1.0 + 1e-9) || tr <= 0.0 {
            return Err(Error::InvalidState(format!("trace {tr} outside (0, 1]")));
        }
        let min_eig = rho.min_eigenvalue();
        if min_eig < PSD_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(rho)
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        coherent_density(Complex64::new(0.0, 0.0), dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn trace_deficit(&self) -> f64 {
        1.0 - self.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = &self.matrix - self.matrix.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.matrix.diagonal().iter().enumerate().map(|(n, z)| n as f64 * z.re).sum()
    }
}

/// Coherent-state amplitudes `e^{−|α|²/2} αⁿ/√n!` for `n < dim`.
pub fn coherent_amplitudes(alpha: Complex64, dim: usize) -> Result<DVector<Complex64>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("truncation dimension must be >= 1".into()));
    }
    let deficit = coherent_tail(alpha.norm_sqr(), dim);
    if deficit >= MAX_TRUNCATION_DEFICIT {
        return Err(Error::Truncation(format!(
            "|alpha|^2 = {} leaves {deficit:.3e} of the state beyond dimension {dim}",
            alpha.norm_sqr()
        )));
    }
    let mut c = DVector::zeros(dim);
    c[0] = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 1..dim {
        c[n] = c[n - 1] * alpha / (n as f64).sqrt();
    }
    Ok(c)
}

/// Poisson tail `P(n ≥ dim)` for mean `mean`, summed directly.
fn coherent_tail(mean: f64, dim: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut term = (-mean).exp();
    for n in 1..=dim {
        term *= mean / n as f64;
    }
    let (mut sum, mut n) = (0.0, dim);
    loop {
        sum += term;
        n += 1;
        term *= mean / n as f64;
        if term < 1e-18 * sum || n > dim + 10_000 {
            break;
        }
    }
    sum
}

pub fn coherent_density(alpha: Complex64, dim: usize) -> Result<FockDensityMatrix> {
    let c = coherent_amplitudes(alpha, dim)?;
    Ok(FockDensityMatrix {
        dim,
        matrix: &c * c.adjoint(),
    })
}

/// Generalised Laguerre polynomials `L_n^{(k)}(x)` for `n < len`.
fn laguerre(len: usize, k: f64, x: f64) -> Vec<f64> {
    let mut l = Vec::with_capacity(len);
    if len == 0 {
        return l;
    }
    l.push(1.0);
    if len > 1 {
        l.push(1.0 + k - x);
    }
    for j in 1..len.saturating_sub(1) {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + k - x) * l[j] - (jf + k) * l[j - 1]) / (jf + 1.0);
        l.push(next);
    }
    l
}

/// Truncated displacement operator `⟨m|D(β)|n⟩`, `m, n < dim`.
pub fn displacement_matrix(beta: Complex64, dim: usize) -> DMatrix<Complex64> {
    let x = beta.norm_sqr();
    let gauss = (-0.5 * x).exp();
    let mut d = DMatrix::zeros(dim, dim);
    // sqrt(n!/m!) built incrementally along each diagonal offset
    for k in 0..dim {
        let lag = laguerre(dim - k, k as f64, x);
        let bk = beta.powu(k as u32);
        let mbk = (-beta.conj()).powu(k as u32);
        let mut ratio = 1.0;
        for i in 1..=k {
            ratio /= (i as f64).sqrt();
        }
        for n in 0..dim - k {
            if n > 0 {
                ratio *= (n as f64 / (n + k) as f64).sqrt();
            }
            let m = n + k;
            let base = gauss * ratio * lag[n];
            d[(m, n)] = bk * base;
            if k > 0 {
                d[(n, m)] = mbk * base;
            }
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub points_per_axis: usize,
    /// Half-width of the grid in standard deviations of the noise.
    pub extent_sigma: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points_per_axis: 61,
            extent_sigma: 5.0,
        }
    }
}

impl GridSpec {
    pub fn quick() -> Self {
        Self {
            points_per_axis: 41,
            extent_sigma: 5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_axis < 41 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 41 points per axis, got {}",
                self.points_per_axis
            )));
        }
        if !(self.extent_sigma >= 5.0) || !self.extent_sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid must cover at least 5 sigma, got {}",
                self.extent_sigma
            )));
        }
        Ok(())
    }

    fn coarse(&self) -> Self {
        Self {
            points_per_axis: self.points_per_axis.div_ceil(2) | 1,
            ..*self
        }
    }
}

/// Midpoint nodes and normalised Gaussian weights on one axis.
fn axis_nodes(variance: f64, points: usize, extent_sigma: f64) -> Vec<(f64, f64)> {
    if variance <= 1e-14 {
        return vec![(0.0, 1.0)];
    }
    let sigma = variance.sqrt();
    let h = 2.0 * extent_sigma * sigma / points as f64;
    let mut nodes: Vec<(f64, f64)> = (0..points)
        .map(|j| {
            let u = -extent_sigma * sigma + (j as f64 + 0.5) * h;
            (u, (-0.5 * u * u / variance).exp())
        })
        .collect();
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    for n in &mut nodes {
        n.1 /= total;
    }
    nodes
}

fn integrate_channel(rho: &FockDensityMatrix, noise_cov: &Matrix2<f64>, grid: GridSpec) -> Result<DMatrix<Complex64>> {
    let sym = Matrix2::new(
        noise_cov[(0, 0)],
        0.5 * (noise_cov[(0, 1)] + noise_cov[(1, 0)]),
        0.5 * (noise_cov[(0, 1)] + noise_cov[(1, 0)]),
        noise_cov[(1, 1)],
    );
    let eig = SymmetricEigen::new(sym);
    let scale = sym.abs().max().max(1.0);
    if eig.eigenvalues.iter().any(|&l| l < -1e-12 * scale) {
        return Err(Error::InvalidArgument("noise covariance is not positive semidefinite".into()));
    }
    let axes: Vec<Vec<(f64, f64)>> = (0..2)
        .map(|i| axis_nodes(eig.eigenvalues[i].max(0.0), grid.points_per_axis, grid.extent_sigma))
        .collect();
    let (e1, e2) = (eig.eigenvectors.column(0), eig.eigenvectors.column(1));
    let dim = rho.dim;
    // each row of the outer axis is summed independently, then rows are
    // added in index order so the result does not depend on thread count
    let rows: Vec<DMatrix<Complex64>> = axes[0]
        .par_iter()
        .map(|&(u, wu)| {
            let mut acc = DMatrix::zeros(dim, dim);
            for &(v, wv) in &axes[1] {
                let dx = u * e1[0] + v * e2[0];
                let dp = u * e1[1] + v * e2[1];
                let d = displacement_matrix(Complex64::new(0.5 * dx, 0.5 * dp), dim);
                acc += (&d * &rho.matrix * d.adjoint()) * Complex64::new(wu * wv, 0.0);
            }
            acc
        })
        .collect();
    let mut out = DMatrix::zeros(dim, dim);
    for r in rows {
        out += r;
    }
    Ok((&out + out.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Random-displacement channel with Gaussian displacement distribution of
/// quadrature covariance `noise_cov` (shot units). Population pushed beyond
/// the truncation is discarded and shows up in [`FockDensityMatrix::trace_deficit`].
pub fn classical_noise_channel(
    rho: &FockDensityMatrix,
    noise_cov: &Matrix2<f64>,
    grid: GridSpec,
) -> Result<FockDensityMatrix> {
    grid.validate()?;
    if noise_cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("noise covariance must be finite".into()));
    }
    if noise_cov.iter().all(|&v| v == 0.0) {
        return Ok(rho.clone());
    }
    let fine = integrate_channel(rho, noise_cov, grid)?;
    let coarse = integrate_channel(rho, noise_cov, grid.coarse())?;
    let change = (&fine - &coarse).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if change > CONVERGENCE_TOL {
        return Err(Error::Convergence(format!(
            "halving the grid changes the output by {change:.3e}"
        )));
    }
    FockDensityMatrix::new(fine)
}

/// `⟨α|ρ|α⟩`.
pub fn oracle_fidelity(rho: &FockDensityMatrix, target_alpha: Complex64) -> Result<f64> {
    let c = coherent_amplitudes(target_alpha, rho.dim)?;
    Ok((c.adjoint() * &rho.matrix * &c)[(0, 0)].re)
}

/// Amplitude of the coherent state with the given quadrature means.
pub fn alpha_from_quadratures(x: f64, p: f64) -> Complex64 {
    Complex64::new(0.5 * x, 0.5 * p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn iso(v: f64) -> Matrix2<f64> {
        Matrix2::new(v, 0.0, 0.0, v)
    }

    #[test]
    fn coherent_state_properties() {
        let vac = coherent_density(Complex64::new(0.0, 0.0), 10).unwrap();
        assert_eq!(vac.matrix()[(0, 0)].re, 1.0);
        assert_eq!(vac.trace(), 1.0);
        let alpha = Complex64::new(0.5, 0.0);
        let rho = coherent_density(alpha, 20).unwrap();
        assert!(rho.trace_deficit() < 1e-12);
        let a = Complex64::new(0.7, -0.4);
        let rho = coherent_density(a, 25).unwrap();
        assert_abs_diff_eq!(rho.mean_photon_number(), a.norm_sqr(), epsilon = 1e-10);
        assert!(matches!(
            coherent_density(Complex64::new(3.0, 0.0), 10),
            Err(Error::Truncation(_))
        ));
    }

    #[test]
    fn displacement_of_vacuum_is_coherent() {
        let beta = Complex64::new(0.3, -0.8);
        let d = displacement_matrix(beta, 25);
        let col = d.column(0).into_owned();
        let c = coherent_amplitudes(beta, 25).unwrap();
        assert!((col - c).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn displacement_is_unitary_on_low_block() {
        let d = displacement_matrix(Complex64::new(0.2, 0.1), 30);
        let u = d.adjoint() * &d;
        for i in 0..10 {
            for j in 0..10 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((u[(i, j)] - Complex64::new(expect, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn overlap_formula() {
        let vac = FockDensityMatrix::vacuum(20).unwrap();
        let f = oracle_fidelity(&vac, Complex64::new(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(f, (-1.0f64).exp(), epsilon = 1e-12);
        let a = Complex64::new(0.4, 0.3);
        let rho = coherent_density(a, 20).unwrap();
        assert_abs_diff_eq!(oracle_fidelity(&rho, a).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_noise_is_identity() {
        let rho = coherent_density(Complex64::new(0.3, 0.2), 15).unwrap();
        let out = classical_noise_channel(&rho, &Matrix2::zeros(), GridSpec::default()).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn classical_and_no_cloning_limits() {
        let vac = FockDensityMatrix::vacuum(25).unwrap();
        let zero = Complex64::new(0.0, 0.0);
        let out = classical_noise_channel(&vac, &iso(2.0), GridSpec::default()).unwrap();
        assert_abs_diff_eq!(oracle_fidelity(&out, zero).unwrap(), 0.5, epsilon = 1e-3);
        assert!(out.trace_deficit().abs() < 1e-6);
        let out = classical_noise_channel(&vac, &iso(1.0), GridSpec::default()).unwrap();
        assert_abs_diff_eq!(oracle_fidelity(&out, zero).unwrap(), 2.0 / 3.0, epsilon = 1e-3);
    }

    #[test]
    fn degenerate_noise_axis() {
        // noise on x only: fidelity to vacuum is 2/sqrt((1+V)(1+1)) with V = 1 + 1
        let vac = FockDensityMatrix::vacuum(25).unwrap();
        let out = classical_noise_channel(&vac, &Matrix2::new(1.0, 0.0, 0.0, 0.0), GridSpec::default()).unwrap();
        let f = oracle_fidelity(&out, Complex64::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(f, 2.0 / (3.0f64 * 2.0).sqrt(), epsilon = 1e-3);
    }

    #[test]
    fn rejects_bad_inputs() {
        let vac = FockDensityMatrix::vacuum(10).unwrap();
        let coarse = GridSpec {
            points_per_axis: 21,
            extent_sigma: 5.0,
        };
        assert!(classical_noise_channel(&vac, &iso(1.0), coarse).is_err());
        let narrow = GridSpec {
            points_per_axis: 61,
            extent_sigma: 3.0,
        };
        assert!(classical_noise_channel(&vac, &iso(1.0), narrow).is_err());
        let neg = Matrix2::new(1.0, 0.0, 0.0, -0.5);
        assert!(classical_noise_channel(&vac, &neg, GridSpec::default()).is_err());
        let bad = DMatrix::from_element(2, 2, Complex64::new(0.5, 0.3));
        assert!(FockDensityMatrix::new(bad).is_err());
    }
}
