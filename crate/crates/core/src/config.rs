//! Numerical tolerances shared by every module.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Group axioms and automorphism identities.
    pub group: f64,
    /// exp/log round trips.
    pub exp_log: f64,
    /// Left invariance of distances, semi-conjugacy, bracket residuals.
    pub invariance: f64,
    /// Trajectory agreement between the direct and translated solution formulas.
    pub trajectory: f64,
    /// Eigenpair residual.
    pub eigen_residual: f64,
    /// Half-width of the band around |alpha| = 1 that raises `AmbiguousClassification`.
    pub unit_modulus: f64,
    /// Eigenvalues closer than this (relative) are merged into one cluster.
    pub eigen_cluster: f64,
    /// Central finite-difference step.
    pub fd_step: f64,
    /// Agreement between analytic and finite-difference differentials.
    pub fd_agreement: f64,
    /// Smallest admissible |det| of the differential.
    pub singular_det: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            group: 1e-12,
            exp_log: 1e-10,
            invariance: 1e-9,
            trajectory: 1e-10,
            eigen_residual: 1e-9,
            unit_modulus: 1e-9,
            eigen_cluster: 1e-4,
            fd_step: 1e-6,
            fd_agreement: 1e-6,
            singular_det: 1e-12,
        }
    }
}

/// Hard cap on (word, point) trajectory evaluations per spanning computation.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Branch-and-bound node cap for exact set cover.
pub const DEFAULT_NODE_BUDGET: u64 = 2_000_000;
