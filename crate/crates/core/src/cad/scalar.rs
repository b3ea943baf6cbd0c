use serde::Serialize;

use super::solver::{self, Atom, HalfLineChannel};
use super::{outcome_to_result, CadDistribution, CapacitySolution, ScalarDistribution, SolverConfig, DEGENERATE_PSNR};
use crate::constellation::Constellation;
use crate::error::{invalid, Result};
use crate::numerics::{gauss_hermite, QuadratureRule};
use crate::rates::ScalarKernel;

/// Real channel with amplitude limit `A`, folded onto `[0, A]`: an atom at
/// `a > 0` is the symmetric pair `±a` with half its mass on each side.
struct FoldedScalar {
    kernel: ScalarKernel,
    limit: f64,
    std: f64,
}

impl HalfLineChannel for FoldedScalar {
    type Mixture = Unfolded;

    fn limit(&self) -> f64 {
        self.limit
    }

    fn noise_scale(&self) -> f64 {
        self.std
    }

    fn mixture(&self, atoms: &[Atom]) -> Unfolded {
        let ln = |m: f64| if m > 0.0 { m.ln() } else { f64::NEG_INFINITY };
        let mut mix = Unfolded {
            points: Vec::with_capacity(2 * atoms.len()),
            ln_p: Vec::with_capacity(2 * atoms.len()),
            paired: Vec::with_capacity(atoms.len()),
        };
        for a in atoms {
            if a.loc == 0.0 {
                mix.points.push(0.0);
                mix.ln_p.push(ln(a.mass));
            } else {
                mix.points.push(-a.loc);
                mix.ln_p.push(ln(0.5 * a.mass));
                mix.points.push(a.loc);
                mix.ln_p.push(ln(0.5 * a.mass));
            }
            mix.paired.push(a.loc != 0.0);
        }
        mix
    }

    fn density(&self, mix: &Unfolded, x: f64) -> f64 {
        self.kernel.info_density(&mix.points, &mix.ln_p, x)
    }

    fn density_with_ratios(&self, mix: &Unfolded, x: f64) -> (f64, Vec<f64>) {
        let (i, ratios) = self.kernel.info_density_with_ratios(&mix.points, &mix.ln_p, x);
        let mut folded = Vec::with_capacity(mix.paired.len());
        let mut c = 0;
        for &paired in &mix.paired {
            if paired {
                folded.push(0.5 * (ratios[c] + ratios[c + 1]));
                c += 2;
            } else {
                folded.push(ratios[c]);
                c += 1;
            }
        }
        (i, folded)
    }
}

/// Symmetric mixture on the real line; `paired[k]` tells whether atom `k`
/// contributed the two points `±a` or the single point 0.
struct Unfolded {
    points: Vec<f64>,
    ln_p: Vec<f64>,
    paired: Vec<bool>,
}

fn unfold(atoms: &[Atom], limit: f64) -> Result<ScalarDistribution> {
    let mut points = Vec::new();
    let mut probs = Vec::new();
    for a in atoms.iter().rev().filter(|a| a.loc > 0.0) {
        points.push(-a.loc);
        probs.push(0.5 * a.mass);
    }
    if let Some(a) = atoms.iter().find(|a| a.loc == 0.0) {
        points.push(0.0);
        probs.push(a.mass);
    }
    for a in atoms.iter().filter(|a| a.loc > 0.0) {
        points.push(a.loc);
        probs.push(0.5 * a.mass);
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    ScalarDistribution::new(points, probs, limit)
}

/// Marginal information density `i(x; d)` in bits: the divergence between
/// the output law given input `x` and the output mixture induced by `d`.
pub fn marginal_info_density(x: f64, d: &ScalarDistribution, variance: f64, quad: &QuadratureRule) -> Result<f64> {
    let a = d.amplitude_limit();
    if !(x.abs() <= a * (1.0 + 1e-12)) {
        return invalid(format!("input {x} outside [-{a}, {a}]"));
    }
    let kernel = ScalarKernel::new(quad, variance)?;
    let ln_p: Vec<f64> = d.probs().iter().map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY }).collect();
    Ok(kernel.info_density(d.points(), &ln_p, x))
}

/// Capacity-achieving distribution of `Y = X + N(0, variance)`, `|X| ≤ A`.
pub fn solve_scalar_cad(amplitude_limit: f64, variance: f64, tol: f64) -> Result<CapacitySolution> {
    solve_scalar_cad_with(amplitude_limit, variance, &SolverConfig::with_tol(tol))
}

pub fn solve_scalar_cad_with(amplitude_limit: f64, variance: f64, config: &SolverConfig) -> Result<CapacitySolution> {
    if !(amplitude_limit > 0.0 && amplitude_limit.is_finite()) {
        return invalid(format!("amplitude limit must be positive, got {amplitude_limit}"));
    }
    if !(variance > 0.0 && variance.is_finite()) {
        return invalid(format!("variance must be positive, got {variance}"));
    }
    config.validate()?;
    let quad = gauss_hermite(config.hermite_order)?;
    let channel = FoldedScalar {
        kernel: ScalarKernel::new(&quad, variance)?,
        limit: amplitude_limit,
        std: variance.sqrt(),
    };
    let start = vec![Atom { loc: amplitude_limit, mass: 1.0 }];
    let (atoms, capacity, max_violation, support_deviation, iterations, converged) =
        if amplitude_limit * amplitude_limit / variance < DEGENERATE_PSNR {
            let (c, v, s) = solver::certify(&channel, &start, config.verify_points);
            (start, c, v, s, 0, true)
        } else {
            let out = solver::solve(&channel, start, &config.settings());
            (out.atoms, out.capacity, out.max_violation, out.support_deviation, out.iterations, out.converged)
        };
    let origin_mass = atoms.iter().find(|a| a.loc == 0.0).map_or(0.0, |a| a.mass);
    let solution = CapacitySolution {
        distribution: CadDistribution::Scalar(unfold(&atoms, amplitude_limit)?),
        capacity_bits: capacity,
        kkt_max_violation: max_violation,
        kkt_support_deviation: support_deviation,
        iterations,
        origin_mass,
    };
    outcome_to_result(solution, converged)
}

/// Box-constrained capacity of the complex channel.
#[derive(Debug, Clone, Serialize)]
pub struct BoxCapacity {
    /// Solution of one real component.
    pub scalar: CapacitySolution,
    /// Twice the scalar capacity.
    pub capacity_bits: f64,
    /// Diagnostics in complex-channel units (twice the scalar ones).
    pub kkt_max_violation: f64,
    pub kkt_support_deviation: f64,
    #[serde(skip)]
    pub constellation: Constellation,
}

pub fn box_capacity(e_max: f64, noise_power: f64, tol: f64) -> Result<BoxCapacity> {
    box_capacity_with(e_max, noise_power, &SolverConfig::with_tol(tol))
}

/// Solves each real component to `tol / 2` so the complex-channel
/// diagnostics meet `tol`.
pub fn box_capacity_with(e_max: f64, noise_power: f64, config: &SolverConfig) -> Result<BoxCapacity> {
    if !(e_max > 0.0 && noise_power > 0.0 && e_max.is_finite() && noise_power.is_finite()) {
        return invalid(format!("peak power and noise power must be positive, got {e_max}, {noise_power}"));
    }
    let scalar_config = SolverConfig { tol: 0.5 * config.tol, ..*config };
    let scalar = solve_scalar_cad_with((0.5 * e_max).sqrt(), 0.5 * noise_power, &scalar_config)?;
    let constellation = scalar.scalar().expect("scalar solver returns a scalar distribution").product();
    Ok(BoxCapacity {
        capacity_bits: 2.0 * scalar.capacity_bits,
        kkt_max_violation: 2.0 * scalar.kkt_max_violation,
        kkt_support_deviation: 2.0 * scalar.kkt_support_deviation,
        constellation,
        scalar,
    })
}
