//! Numerical tolerances, collected in one place.
//!
//! Structure constants in the fixture catalog are small integers or exactly
//! representable rationals, so the defaults leave wide margins. Every field
//! can be overridden; the CLI exposes a `strict` profile that tightens the
//! identity-style tolerances by a factor of ten.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max-norm bound on the Jacobi identity residual.
    pub jacobi: f64,
    /// Relative singular-value cutoff for rank decisions.
    pub rank: f64,
    /// Eigenvalue cutoff for nilpotency / semisimplicity decisions.
    pub eig: f64,
    /// Leibniz-rule residual bound for derivations.
    pub deriv: f64,
    /// Residual below which a soliton fit counts as exact.
    pub soliton: f64,
    /// Commutator residual bound for abelian families.
    pub comm: f64,
    /// Symmetry residual bound for Q-self-adjointness checks.
    pub sym: f64,
    /// Smallest admissible metric eigenvalue.
    pub pd: f64,
    /// Relative tolerance for finite-difference gradient agreement.
    pub fd: f64,
    /// Tolerance for flow self-similarity checks.
    pub selfsim: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            jacobi: 1e-9,
            rank: 1e-10,
            eig: 1e-8,
            deriv: 1e-9,
            soliton: 1e-7,
            comm: 1e-9,
            sym: 1e-9,
            pd: 1e-12,
            fd: 1e-5,
            selfsim: 1e-6,
        }
    }
}

impl Tolerances {
    /// Profile with the identity-style tolerances divided by ten.
    pub fn strict() -> Self {
        let d = Tolerances::default();
        Tolerances {
            jacobi: d.jacobi / 10.0,
            deriv: d.deriv / 10.0,
            soliton: d.soliton / 10.0,
            comm: d.comm / 10.0,
            sym: d.sym / 10.0,
            ..d
        }
    }
}

/// Finite-difference step for scalar-curvature gradient checks.
pub const FD_STEP: f64 = 1e-5;
