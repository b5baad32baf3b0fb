//! Gaussian-state simulation and analysis toolkit for all-optical
//! continuous-variable quantum teleportation.
//!
//! Quadratures use shot-noise units throughout: `x = a + a†`, so the vacuum
//! has unit variance per quadrature and 0 dB means shot noise.
//!
//! Module map:
//! - [`gaussian`]: states, symplectic transforms, loss, fidelity.
//! - [`opa`]: lumped models of waveguide OPAs and pre-amplified homodyne readout.
//! - [`teleporter`]: the teleportation circuit and its analytic noise budget.
//! - [`spectral`]: frequency-domain (sideband spectrum) harness.
//! - [`timetrace`]: time-domain (oscilloscope trace) harness.
//! - [`fock`]: truncated Fock-space oracle.
//! - [`validation`]: self-check suites used by the CLI.

pub mod error;
pub mod fock;
pub mod gaussian;
pub mod opa;
pub mod report;
pub mod rng;
pub mod spectral;
pub mod teleporter;
pub mod timetrace;
pub mod validation;

pub use error::{Error, Result};
pub use gaussian::{GaussianState, QuadAxis, SymplecticTransform};
pub use report::EstimatorReport;
pub use teleporter::{NoiseBudget, Regime, TeleporterConfig};
