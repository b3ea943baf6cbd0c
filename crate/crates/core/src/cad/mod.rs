//! Capacity-achieving input distributions under peak-power constraints.
//!
//! * Box constraint: the complex channel splits into two independent real
//!   channels with amplitude limit `A = √(E_max/2)` and noise variance `σ²/2`.
//!   The scalar optimum is a finite symmetric distribution containing `±A`;
//!   the complex optimum is its I/Q product.
//! * Circular constraint: the optimum has uniform phase and finitely many
//!   rings, one of them at `√E_max`.
//!
//! Both are solved by the support-adaptive ascent in [`solver`] and
//! certified by scanning the marginal information density on a dense grid.

mod distribution;
mod radial;
mod scalar;
mod solver;

use serde::Serialize;
use serde_json::json;

pub use distribution::{RadialDistribution, ScalarDistribution};
pub use radial::{radial_marginal_info_density, solve_radial_cad, solve_radial_cad_with};
pub use scalar::{box_capacity, box_capacity_with, marginal_info_density, solve_scalar_cad, solve_scalar_cad_with, BoxCapacity};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::numerics::{DEFAULT_HERMITE_ORDER, DEFAULT_LAGUERRE_ORDER};

/// Default KKT tolerance in bits.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Points of the uniform verification grid.
pub const VERIFY_POINTS: usize = 2001;
/// Below this peak SNR the trivial one-shell solution is returned directly.
pub const DEGENERATE_PSNR: f64 = 1e-6;

/// Knobs of the CAD solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_outer_iterations: usize,
    pub hermite_order: usize,
    pub laguerre_order: usize,
    pub verify_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_outer_iterations: 10_000,
            hermite_order: DEFAULT_HERMITE_ORDER,
            laguerre_order: DEFAULT_LAGUERRE_ORDER,
            verify_points: VERIFY_POINTS,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    fn settings(&self) -> solver::SolveSettings {
        solver::SolveSettings {
            tol: self.tol,
            max_outer: self.max_outer_iterations,
            verify_points: self.verify_points,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return crate::error::invalid(format!("tolerance must be positive, got {}", self.tol));
        }
        if self.verify_points < 2 {
            return crate::error::invalid("verification grid needs at least 2 points");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CadDistribution {
    Scalar(ScalarDistribution),
    Radial(RadialDistribution),
}

/// A solved capacity-achieving distribution with its optimality diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacitySolution {
    pub distribution: CadDistribution,
    pub capacity_bits: f64,
    /// `max_x i(x) - C` over the verification grid and the support.
    pub kkt_max_violation: f64,
    /// `max_k |i(x_k) - C|` over the support.
    pub kkt_support_deviation: f64,
    pub iterations: usize,
    /// Probability placed exactly at the origin (0 when none).
    pub origin_mass: f64,
}

impl CapacitySolution {
    pub fn scalar(&self) -> Option<&ScalarDistribution> {
        match &self.distribution {
            CadDistribution::Scalar(d) => Some(d),
            CadDistribution::Radial(_) => None,
        }
    }

    pub fn radial(&self) -> Option<&RadialDistribution> {
        match &self.distribution {
            CadDistribution::Radial(d) => Some(d),
            CadDistribution::Scalar(_) => None,
        }
    }

    /// Number of mass points (scalar) or rings (radial).
    pub fn support_size(&self) -> usize {
        match &self.distribution {
            CadDistribution::Scalar(d) => d.len(),
            CadDistribution::Radial(d) => d.len(),
        }
    }

    /// JSON dump used by the CLI.
    pub fn dump(&self) -> serde_json::Value {
        match &self.distribution {
            CadDistribution::Scalar(d) => json!({
                "type": "scalar",
                "amplitude_limit": d.amplitude_limit(),
                "points": d.points(),
                "probs": d.probs(),
                "capacity_bits": self.capacity_bits,
                "kkt_max_violation": self.kkt_max_violation,
                "kkt_support_deviation": self.kkt_support_deviation,
                "iterations": self.iterations,
            }),
            CadDistribution::Radial(d) => json!({
                "type": "radial",
                "e_max": d.e_max(),
                "radii": d.radii(),
                "probs": d.probs(),
                "capacity_bits": self.capacity_bits,
                "kkt_max_violation": self.kkt_max_violation,
                "kkt_support_deviation": self.kkt_support_deviation,
                "iterations": self.iterations,
                "origin_mass": self.origin_mass,
            }),
        }
    }
}

/// I/Q product of a scalar distribution: `m²` points with masses `p_i p_j`.
pub fn product_cad(d: &ScalarDistribution) -> Constellation {
    d.product()
}

fn outcome_to_result(solution: CapacitySolution, converged: bool) -> Result<CapacitySolution> {
    if converged {
        Ok(solution)
    } else {
        Err(Error::ConvergenceFailure {
            iterations: solution.iterations,
            kkt_max_violation: solution.kkt_max_violation,
            best: Box::new(solution),
        })
    }
}
