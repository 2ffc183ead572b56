//! Simulation of the sequential weak-measurement CHSH scenario.
//!
//! One singlet pair is shared between Alice, who measures projectively, and a
//! chain of two observers on the other photon: Bob1 performs a tunable-strength
//! optimal weak measurement and hands the photon on to Bob2, who measures
//! projectively. The crate covers
//!
//! - [`qcore`]: small dense density-matrix calculus (dimension ≤ 8),
//! - [`weakmeas`]: pointer model, quality factor `F`, precision `G`, Kraus pair,
//! - [`bell`]: joint distribution, correlations, CHSH values and sweeps,
//! - [`optics`]: Jones-calculus model of the wave-plate/beam-displacer setup,
//! - [`montecarlo`]: coincidence-count emulation with Poissonian error bars.

pub mod bell;
mod error;
pub mod montecarlo;
pub mod optics;
pub mod qcore;
pub mod weakmeas;

pub use error::{Error, Result};

/// Tolerance for structural checks (Hermiticity, trace, idempotence, unit norm).
pub const STRUCTURAL_TOL: f64 = 1e-10;

/// Tolerance for agreement between two independent computational routes.
pub const EQUIVALENCE_TOL: f64 = 1e-12;
