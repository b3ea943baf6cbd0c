//! Support-adaptive capacity solver on a half-line `[0, L]`.
//!
//! Both peak-constrained problems reduce to this shape: the symmetric scalar
//! channel (an atom at `a > 0` stands for the pair `±a`) and the circular
//! channel (an atom is a ring of radius `a`). The solver alternates
//!
//! 1. a damped Newton ascent of the mutual information over the atom masses
//!    and the locations of the free (interior) atoms, and
//! 2. a scan of the marginal information density `i(x)` over `[0, L]`;
//!    where `i(x) > C + tol` a new atom is inserted at the argmax.
//!
//! An atom at `L` is always present and never moves; an atom at `0` is pinned
//! there by symmetry.

use std::f64::consts::LOG2_E;

use nalgebra::{DMatrix, DVector};

/// One mass point of the half-line representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Atom {
    pub loc: f64,
    pub mass: f64,
}

/// A channel whose optimality functional lives on `[0, limit]`.
pub(crate) trait HalfLineChannel: Sync {
    type Mixture: Sync;

    fn limit(&self) -> f64;
    /// Length scale over which `i(x)` varies (noise standard deviation).
    fn noise_scale(&self) -> f64;
    fn mixture(&self, atoms: &[Atom]) -> Self::Mixture;
    /// Marginal information density in bits.
    fn density(&self, mix: &Self::Mixture, x: f64) -> f64;
    /// `i(x)` together with `E[q_b(Y) / p(Y) | x]` for every atom `b`, where
    /// `q_b = ∂p/∂m_b` is the output density contributed by atom `b`.
    fn density_with_ratios(&self, mix: &Self::Mixture, x: f64) -> (f64, Vec<f64>);
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SolveSettings {
    pub tol: f64,
    pub max_outer: usize,
    pub verify_points: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct SolveOutcome {
    pub atoms: Vec<Atom>,
    pub capacity: f64,
    pub max_violation: f64,
    pub support_deviation: f64,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_INNER: usize = 200;
/// Largest location update per Newton step, in units of the noise scale.
const MAX_MOVE: f64 = 0.5;
/// Coarse scan used while the support is still growing; the full grid is only
/// needed to certify the final answer.
const COARSE_POINTS: usize = 257;

fn merge_distance<C: HalfLineChannel>(ch: &C) -> f64 {
    1e-3 * ch.limit()
}

fn is_pinned<C: HalfLineChannel>(ch: &C, a: &Atom) -> bool {
    a.loc == 0.0 || a.loc == ch.limit()
}

fn mutual_information<C: HalfLineChannel>(ch: &C, atoms: &[Atom]) -> f64 {
    let mix = ch.mixture(atoms);
    atoms.iter().map(|a| a.mass * ch.density(&mix, a.loc)).sum()
}

/// Fourth-order central difference of `i(·)` at `x` for a fixed mixture.
fn density_slope<C: HalfLineChannel>(ch: &C, mix: &C::Mixture, x: f64) -> f64 {
    let h = 1e-3 * ch.noise_scale();
    let f = |s: f64| ch.density(mix, x + s * h);
    (8.0 * (f(1.0) - f(-1.0)) - (f(2.0) - f(-2.0))) / (12.0 * h)
}

/// Parameter layout: free-atom locations first, then every mass.
struct Layout {
    free: Vec<usize>,
    k: usize,
}

impl Layout {
    fn new<C: HalfLineChannel>(ch: &C, atoms: &[Atom], move_locations: bool) -> Self {
        let free = (0..atoms.len())
            .filter(|&i| move_locations && !is_pinned(ch, &atoms[i]))
            .collect();
        Self { free, k: atoms.len() }
    }

    fn dim(&self) -> usize {
        self.free.len() + self.k
    }

    fn pack(&self, atoms: &[Atom]) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        for (j, &i) in self.free.iter().enumerate() {
            v[j] = atoms[i].loc;
        }
        for (i, a) in atoms.iter().enumerate() {
            v[self.free.len() + i] = a.mass;
        }
        v
    }

    fn unpack(&self, template: &[Atom], v: &DVector<f64>) -> Vec<Atom> {
        let mut atoms = template.to_vec();
        for (j, &i) in self.free.iter().enumerate() {
            atoms[i].loc = v[j];
        }
        for (i, a) in atoms.iter_mut().enumerate() {
            a.mass = v[self.free.len() + i];
        }
        atoms
    }
}

/// Gradient of the (unnormalized) mutual information: `m_f i'(a_f)` for the
/// free locations and `i(a_k)` for the masses (up to a common constant that
/// the simplex projection removes). Also returns the per-atom densities.
fn gradient<C: HalfLineChannel>(ch: &C, layout: &Layout, atoms: &[Atom]) -> (DVector<f64>, Vec<f64>) {
    let mix = ch.mixture(atoms);
    let dens: Vec<f64> = atoms.iter().map(|a| ch.density(&mix, a.loc)).collect();
    let mut g = DVector::zeros(layout.dim());
    for (j, &i) in layout.free.iter().enumerate() {
        g[j] = atoms[i].mass * density_slope(ch, &mix, atoms[i].loc);
    }
    for (i, &d) in dens.iter().enumerate() {
        g[layout.free.len() + i] = d;
    }
    (g, dens)
}

/// Hessian of the mutual information. The mass block is exact:
/// `∂² I / ∂m_a ∂m_b = -log₂e ∫ q_a q_b / p`. Location columns are central
/// differences of the gradient, and the location-mass block is filled from
/// them by symmetry.
fn hessian<C: HalfLineChannel>(ch: &C, layout: &Layout, atoms: &[Atom]) -> DMatrix<f64> {
    let n = layout.dim();
    let nf = layout.free.len();
    let base = layout.pack(atoms);
    let mut h = DMatrix::zeros(n, n);
    let mix = ch.mixture(atoms);
    for (a, atom) in atoms.iter().enumerate() {
        let (_, ratios) = ch.density_with_ratios(&mix, atom.loc);
        for (b, r) in ratios.iter().enumerate() {
            h[(nf + a, nf + b)] = -LOG2_E * r;
        }
    }
    let step = 1e-4 * ch.noise_scale();
    for j in 0..nf {
        let mut plus = base.clone();
        plus[j] += step;
        let mut minus = base.clone();
        minus[j] -= step;
        let (gp, _) = gradient(ch, layout, &layout.unpack(atoms, &plus));
        let (gm, _) = gradient(ch, layout, &layout.unpack(atoms, &minus));
        let col = (gp - gm) / (2.0 * step);
        for i in 0..n {
            if i < nf {
                h[(i, j)] = col[i];
            } else {
                h[(i, j)] = col[i];
                h[(j, i)] = col[i];
            }
        }
    }
    (&h + h.transpose()) * 0.5
}

/// Basis of the tangent space of `Σ m = 1`: free locations move freely,
/// masses move in pairs against the heaviest atom.
fn tangent_basis(layout: &Layout, atoms: &[Atom]) -> DMatrix<f64> {
    let nf = layout.free.len();
    let heavy = (0..atoms.len())
        .max_by(|&a, &b| atoms[a].mass.total_cmp(&atoms[b].mass).then(b.cmp(&a)))
        .unwrap_or(0);
    let mut z = DMatrix::zeros(layout.dim(), layout.dim() - 1);
    for j in 0..nf {
        z[(j, j)] = 1.0;
    }
    let mut col = nf;
    for i in 0..atoms.len() {
        if i == heavy {
            continue;
        }
        z[(nf + i, col)] = 1.0;
        z[(nf + heavy, col)] = -1.0;
        col += 1;
    }
    z
}

/// Solves `(-H + μ D) z = g` with the smallest `μ` on a geometric ladder for
/// which the matrix is positive definite.
fn ascent_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let neg = -h;
    let n = neg.nrows();
    let scale: Vec<f64> = (0..n).map(|i| neg[(i, i)].abs().max(1e-12)).collect();
    let mut mu = 0.0;
    for _ in 0..60 {
        let mut m = neg.clone();
        for i in 0..n {
            m[(i, i)] += mu * scale[i];
        }
        if let Some(chol) = m.cholesky() {
            return Some(chol.solve(g));
        }
        mu = if mu == 0.0 { 1e-8 } else { mu * 10.0 };
    }
    None
}

/// Largest step in `[0, 1]` that keeps masses nonnegative, free atoms inside
/// `(0, L)`, and the atom order intact. Returns the step and, if a mass is
/// the binding constraint, that atom's index.
fn feasible_step(layout: &Layout, atoms: &[Atom], limit: f64, dir: &DVector<f64>) -> (f64, Option<usize>) {
    let nf = layout.free.len();
    let mut mass_alpha = f64::INFINITY;
    let mut binding = None;
    for (i, a) in atoms.iter().enumerate() {
        let dm = dir[nf + i];
        if dm < 0.0 && a.mass / -dm < mass_alpha {
            mass_alpha = a.mass / -dm;
            binding = Some(i);
        }
    }
    let mut alpha = 1.0f64;
    let mut vel = vec![0.0; atoms.len()];
    for (j, &i) in layout.free.iter().enumerate() {
        vel[i] = dir[j];
        if dir[j] < 0.0 {
            alpha = alpha.min(atoms[i].loc / -dir[j]);
        } else if dir[j] > 0.0 {
            alpha = alpha.min((limit - atoms[i].loc) / dir[j]);
        }
    }
    for i in 1..atoms.len() {
        let closing = vel[i - 1] - vel[i];
        if closing > 0.0 {
            alpha = alpha.min((atoms[i].loc - atoms[i - 1].loc) / closing);
        }
    }
    if mass_alpha <= alpha {
        (mass_alpha, binding)
    } else {
        (alpha, None)
    }
}

fn normalize(atoms: &mut Vec<Atom>) {
    atoms.retain(|a| a.mass > 0.0);
    let total: f64 = atoms.iter().map(|a| a.mass).sum();
    atoms.iter_mut().for_each(|a| a.mass /= total);
}

/// Merges atoms closer than the merge distance and snaps free atoms that
/// drifted onto `0` or `L`.
fn consolidate<C: HalfLineChannel>(ch: &C, atoms: &mut Vec<Atom>) {
    let tol = merge_distance(ch);
    let limit = ch.limit();
    for a in atoms.iter_mut() {
        if a.loc < tol {
            a.loc = 0.0;
        } else if a.loc > limit - tol {
            a.loc = limit;
        }
    }
    atoms.sort_by(|a, b| a.loc.total_cmp(&b.loc));
    let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms.drain(..) {
        match merged.last_mut() {
            Some(prev) if a.loc - prev.loc < tol => {
                let mass = prev.mass + a.mass;
                prev.loc = if a.loc == limit {
                    limit
                } else if prev.loc == 0.0 {
                    0.0
                } else {
                    (prev.loc * prev.mass + a.loc * a.mass) / mass
                };
                prev.mass = mass;
            }
            _ => merged.push(a),
        }
    }
    *atoms = merged;
    normalize(atoms);
}

/// Damped Newton ascent for a fixed support size. Returns `true` when the
/// stationarity residual dropped below `inner_tol`.
fn optimize_support<C: HalfLineChannel>(ch: &C, atoms: &mut Vec<Atom>, inner_tol: f64, move_locations: bool) -> bool {
    for _ in 0..MAX_INNER {
        consolidate(ch, atoms);
        let layout = Layout::new(ch, atoms, move_locations);
        let (g, dens) = gradient(ch, &layout, atoms);
        let cap: f64 = atoms.iter().zip(&dens).map(|(a, d)| a.mass * d).sum();
        let nf = layout.free.len();
        let support_residual = dens.iter().map(|d| (d - cap).abs()).fold(0.0, f64::max);
        let slope_residual = layout
            .free
            .iter()
            .enumerate()
            .map(|(j, &i)| (g[j] / atoms[i].mass).abs() * ch.noise_scale())
            .fold(0.0, f64::max);
        if support_residual.max(slope_residual) < inner_tol || atoms.len() == 1 && nf == 0 {
            return true;
        }

        let z = tangent_basis(&layout, atoms);
        let h = hessian(ch, &layout, atoms);
        let g_red = z.transpose() * &g;
        let h_red = z.transpose() * &h * &z;
        let Some(step_red) = ascent_direction(&h_red, &g_red) else {
            return false;
        };
        let mut dir = &z * &step_red;
        // Trust region on locations: the model is only local.
        let max_move = (0..nf).map(|j| dir[j].abs()).fold(0.0, f64::max);
        let cap = MAX_MOVE * ch.noise_scale();
        if max_move > cap {
            dir *= cap / max_move;
        }
        let slope = g.dot(&dir);

        let (alpha_max, binding) = feasible_step(&layout, atoms, ch.limit(), &dir);
        if let Some(i) = binding {
            // The Newton step wants this atom gone; drop it once it is tiny.
            if atoms[i].mass < 1e-6 || (alpha_max < 1e-3 && atoms[i].mass < 1e-3) {
                atoms[i].mass = 0.0;
                normalize(atoms);
                continue;
            }
        }
        let base = layout.pack(atoms);
        let f0: f64 = cap;
        let mut alpha = if alpha_max >= 1.0 { 1.0 } else { 0.95 * alpha_max };
        let mut accepted = None;
        if slope < 1e-13 {
            // The predicted gain is below rounding of f; trust the Newton step.
            accepted = Some(layout.unpack(atoms, &(&base + &dir * alpha)));
        }
        while accepted.is_none() && alpha > 1e-12 {
            let trial = layout.unpack(atoms, &(&base + &dir * alpha));
            let f = mutual_information(ch, &trial);
            if f >= f0 + 1e-4 * alpha * slope {
                accepted = Some(trial);
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some(next) => {
                *atoms = next;
                normalize(atoms);
            }
            // No measurable ascent left; the residual is at rounding level.
            None => return support_residual.max(slope_residual) < 1e3 * inner_tol,
        }
    }
    false
}

struct Scan {
    capacity: f64,
    max_violation: f64,
    argmax: f64,
    support_deviation: f64,
}

fn scan<C: HalfLineChannel>(ch: &C, atoms: &[Atom], points: usize) -> Scan {
    let mix = ch.mixture(atoms);
    let dens: Vec<f64> = atoms.iter().map(|a| ch.density(&mix, a.loc)).collect();
    let capacity: f64 = atoms.iter().zip(&dens).map(|(a, d)| a.mass * d).sum();
    let support_deviation = dens.iter().map(|d| (d - capacity).abs()).fold(0.0, f64::max);
    let limit = ch.limit();
    let mut grid: Vec<f64> = (0..points).map(|i| limit * i as f64 / (points - 1) as f64).collect();
    grid.extend(atoms.iter().map(|a| a.loc));
    grid.sort_by(|a, b| a.total_cmp(b));
    let values: Vec<f64> = {
        use rayon::prelude::*;
        grid.par_iter().map(|&x| ch.density(&mix, x) - capacity).collect()
    };
    // Strict comparison keeps the smallest coordinate on ties.
    let (mut argmax, mut max_violation) = (grid[0], values[0]);
    for (&x, &v) in grid.iter().zip(&values) {
        if v > max_violation {
            max_violation = v;
            argmax = x;
        }
    }
    Scan { capacity, max_violation, argmax, support_deviation }
}

fn insert_atom<C: HalfLineChannel>(ch: &C, atoms: &mut Vec<Atom>, x: f64) -> bool {
    let tol = merge_distance(ch);
    let loc = if x < tol {
        0.0
    } else if x > ch.limit() - tol {
        ch.limit()
    } else {
        x
    };
    if atoms.iter().any(|a| (a.loc - loc).abs() < tol) {
        return false;
    }
    let seed_mass = 0.02;
    atoms.iter_mut().for_each(|a| a.mass *= 1.0 - seed_mass);
    atoms.push(Atom { loc, mass: seed_mass });
    atoms.sort_by(|a, b| a.loc.total_cmp(&b.loc));
    true
}

pub(crate) fn solve<C: HalfLineChannel>(ch: &C, initial: Vec<Atom>, settings: &SolveSettings) -> SolveOutcome {
    let inner_tol = (settings.tol * 1e-3).min(1e-9);
    let mut atoms = initial;
    let mut iterations = 0;
    let mut last = None;
    while iterations < settings.max_outer {
        iterations += 1;
        // Masses first: with locations fixed the problem is concave, which
        // gives the joint Newton iteration a good starting point.
        optimize_support(ch, &mut atoms, inner_tol, false);
        optimize_support(ch, &mut atoms, inner_tol, true);
        let coarse = scan(ch, &atoms, COARSE_POINTS);
        let report = if coarse.max_violation <= settings.tol {
            scan(ch, &atoms, settings.verify_points)
        } else {
            coarse
        };
        let done = report.max_violation <= settings.tol && report.support_deviation <= settings.tol;
        let argmax = report.argmax;
        last = Some(report);
        if done {
            break;
        }
        insert_atom(ch, &mut atoms, argmax);
    }
    let report = last.unwrap_or_else(|| scan(ch, &atoms, settings.verify_points));
    let converged = report.max_violation <= settings.tol && report.support_deviation <= settings.tol;
    SolveOutcome {
        atoms,
        capacity: report.capacity,
        max_violation: report.max_violation,
        support_deviation: report.support_deviation,
        iterations,
        converged,
    }
}

/// Diagnostics of a fixed distribution on the full verification grid.
pub(crate) fn certify<C: HalfLineChannel>(ch: &C, atoms: &[Atom], points: usize) -> (f64, f64, f64) {
    let s = scan(ch, atoms, points);
    (s.capacity, s.max_violation, s.support_deviation)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Toy channel with `i(x) = -(x - 0.3)^2` regardless of the mixture.
    struct Bowl;

    impl HalfLineChannel for Bowl {
        type Mixture = ();
        fn limit(&self) -> f64 {
            1.0
        }
        fn noise_scale(&self) -> f64 {
            0.1
        }
        fn mixture(&self, _atoms: &[Atom]) {}
        fn density(&self, _mix: &(), x: f64) -> f64 {
            -(x - 0.3) * (x - 0.3)
        }
        fn density_with_ratios(&self, mix: &(), x: f64) -> (f64, Vec<f64>) {
            (self.density(mix, x), Vec::new())
        }
    }

    #[test]
    fn consolidate_merges_and_snaps() {
        let mut atoms = vec![
            Atom { loc: 0.0004, mass: 0.2 },
            Atom { loc: 0.5, mass: 0.2 },
            Atom { loc: 0.5005, mass: 0.2 },
            Atom { loc: 0.9995, mass: 0.1 },
            Atom { loc: 1.0, mass: 0.3 },
        ];
        consolidate(&Bowl, &mut atoms);
        assert_eq!(atoms.len(), 3);
        assert_eq!(atoms[0].loc, 0.0);
        assert!((atoms[1].loc - 0.50025).abs() < 1e-12);
        assert!((atoms[1].mass - 0.4).abs() < 1e-12);
        assert_eq!(atoms[2].loc, 1.0);
        assert!((atoms[2].mass - 0.4).abs() < 1e-12);
    }

    #[test]
    fn scan_ties_break_toward_smaller_coordinate() {
        struct Flat;
        impl HalfLineChannel for Flat {
            type Mixture = ();
            fn limit(&self) -> f64 {
                1.0
            }
            fn noise_scale(&self) -> f64 {
                0.1
            }
            fn mixture(&self, _atoms: &[Atom]) {}
            fn density(&self, _mix: &(), _x: f64) -> f64 {
                1.0
            }
            fn density_with_ratios(&self, _mix: &(), _x: f64) -> (f64, Vec<f64>) {
                (1.0, Vec::new())
            }
        }
        let s = scan(&Flat, &[Atom { loc: 1.0, mass: 1.0 }], 11);
        assert_eq!(s.argmax, 0.0);
    }

    #[test]
    fn insertion_respects_merge_distance() {
        let mut atoms = vec![Atom { loc: 1.0, mass: 1.0 }];
        assert!(!insert_atom(&Bowl, &mut atoms, 0.9999));
        assert!(insert_atom(&Bowl, &mut atoms, 0.0002));
        assert_eq!(atoms[0].loc, 0.0);
        assert!((atoms.iter().map(|a| a.mass).sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scan_finds_interior_peak() {
        let s = scan(&Bowl, &[Atom { loc: 1.0, mass: 1.0 }], 1001);
        assert!((s.argmax - 0.3).abs() < 1e-12);
        assert!((s.max_violation - 0.49).abs() < 1e-12);
    }
}
