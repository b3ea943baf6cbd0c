use super::solver::{self, Atom, HalfLineChannel};
use super::{outcome_to_result, CadDistribution, CapacitySolution, RadialDistribution, SolverConfig, DEGENERATE_PSNR};
use crate::error::{invalid, Result};
use crate::numerics::{gauss_laguerre, QuadratureRule};
use crate::rates::RadialKernel;

/// Uniform-phase inputs under the circular constraint: atoms are rings.
struct Rings {
    kernel: RadialKernel,
    limit: f64,
    std: f64,
}

impl HalfLineChannel for Rings {
    type Mixture = (Vec<f64>, Vec<f64>);

    fn limit(&self) -> f64 {
        self.limit
    }

    fn noise_scale(&self) -> f64 {
        self.std
    }

    fn mixture(&self, atoms: &[Atom]) -> Self::Mixture {
        atoms
            .iter()
            .map(|a| (a.loc, if a.mass > 0.0 { a.mass.ln() } else { f64::NEG_INFINITY }))
            .unzip()
    }

    fn density(&self, mix: &Self::Mixture, x: f64) -> f64 {
        // i(r) is even in r; FD stencils may probe slightly below 0.
        self.kernel.info_density(&mix.0, &mix.1, x.abs())
    }

    fn density_with_ratios(&self, mix: &Self::Mixture, x: f64) -> (f64, Vec<f64>) {
        self.kernel.info_density_with_ratios(&mix.0, &mix.1, x.abs())
    }
}

/// Marginal information density `i(r; d)` in bits of an input at radius `r`:
/// the divergence between the output law given that input and the output
/// mixture of `d`. It depends on the input only through `r`.
pub fn radial_marginal_info_density(
    r: f64,
    d: &RadialDistribution,
    noise_power: f64,
    quad: &QuadratureRule,
) -> Result<f64> {
    let limit = d.e_max().sqrt();
    if !(r >= 0.0 && r <= limit + 1e-9) {
        return invalid(format!("radius {r} outside [0, {limit}]"));
    }
    let kernel = RadialKernel::new(quad, noise_power)?;
    let ln_p: Vec<f64> = d.probs().iter().map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY }).collect();
    Ok(kernel.info_density(d.radii(), &ln_p, r))
}

/// Capacity-achieving ring distribution under `|X|² ≤ e_max`.
pub fn solve_radial_cad(e_max: f64, noise_power: f64, tol: f64) -> Result<CapacitySolution> {
    solve_radial_cad_with(e_max, noise_power, &SolverConfig::with_tol(tol))
}

pub fn solve_radial_cad_with(e_max: f64, noise_power: f64, config: &SolverConfig) -> Result<CapacitySolution> {
    if !(e_max > 0.0 && e_max.is_finite()) {
        return invalid(format!("peak power must be positive, got {e_max}"));
    }
    if !(noise_power > 0.0 && noise_power.is_finite()) {
        return invalid(format!("noise power must be positive, got {noise_power}"));
    }
    config.validate()?;
    let quad = gauss_laguerre(config.laguerre_order)?;
    let limit = e_max.sqrt();
    let channel = Rings {
        kernel: RadialKernel::new(&quad, noise_power)?,
        limit,
        std: (0.5 * noise_power).sqrt(),
    };
    let start = vec![Atom { loc: limit, mass: 1.0 }];
    let (atoms, capacity, max_violation, support_deviation, iterations, converged) =
        if e_max / noise_power < DEGENERATE_PSNR {
            let (c, v, s) = solver::certify(&channel, &start, config.verify_points);
            (start, c, v, s, 0, true)
        } else {
            let out = solver::solve(&channel, start, &config.settings());
            (out.atoms, out.capacity, out.max_violation, out.support_deviation, out.iterations, out.converged)
        };
    let origin_mass = atoms.iter().find(|a| a.loc == 0.0).map_or(0.0, |a| a.mass);
    let total: f64 = atoms.iter().map(|a| a.mass).sum();
    let distribution = RadialDistribution::new(
        atoms.iter().map(|a| a.loc).collect(),
        atoms.iter().map(|a| a.mass / total).collect(),
        e_max,
    )?;
    let solution = CapacitySolution {
        distribution: CadDistribution::Radial(distribution),
        capacity_bits: capacity,
        kkt_max_violation: max_violation,
        kkt_support_deviation: support_deviation,
        iterations,
        origin_mass,
    };
    outcome_to_result(solution, converged)
}
