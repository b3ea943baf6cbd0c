//! Gauss-Hermite and Gauss-Laguerre rules.
//!
//! Nodes come from the eigenvalues of the symmetric Jacobi matrix of the
//! orthonormal polynomial family and are then polished by Newton iteration on
//! the three-term recurrence. Weights use the Christoffel form
//! `w_i = 1 / sum_k p_k(x_i)^2` over the orthonormal polynomials, which keeps
//! full relative accuracy even for the tiny weights of the outer nodes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const MAX_HERMITE_ORDER: usize = 300;
const MAX_LAGUERRE_ORDER: usize = 180;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureKind {
    /// Weight `exp(-t^2)` on the real line.
    Hermite,
    /// Weight `exp(-t)` on the positive half-line.
    Laguerre,
}

/// A Gaussian quadrature rule: `∫ w(t) f(t) dt ≈ Σ weights[i] f(nodes[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    kind: QuadratureKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of nodes.
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Applies the rule to `f`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(t, w)| w * f(t)).sum()
    }

    /// Drops nodes whose weight is below `cutoff`. Used to skip far-tail
    /// Laguerre nodes whose contribution is far below rounding.
    pub(crate) fn truncated(&self, cutoff: f64) -> Vec<(f64, f64)> {
        self.iter().filter(|&(_, w)| w >= cutoff).collect()
    }

    /// Rule of the same family with twice the order.
    pub fn doubled(&self) -> Result<QuadratureRule> {
        match self.kind {
            QuadratureKind::Hermite => gauss_hermite(2 * self.order()),
            QuadratureKind::Laguerre => gauss_laguerre(2 * self.order()),
        }
    }
}

/// Gauss-Hermite rule of order `n` for the weight `exp(-t^2)`.
pub fn gauss_hermite(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return invalid("quadrature order must be at least 1");
    }
    if n > MAX_HERMITE_ORDER {
        return invalid(format!("Hermite order {n} exceeds {MAX_HERMITE_ORDER}"));
    }
    let family = Hermite;
    let mut nodes = jacobi_eigenvalues(&family, n);
    for x in nodes.iter_mut() {
        *x = newton_polish(&family, n, *x);
    }
    // Enforce exact symmetry; the eigen solver only gets it to rounding.
    for i in 0..n / 2 {
        let a = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -a;
        nodes[n - 1 - i] = a;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let mut weights: Vec<f64> = nodes.iter().map(|&x| christoffel_weight(&family, n, x)).collect();
    for i in 0..n / 2 {
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    finish(QuadratureKind::Hermite, nodes, weights)
}

/// Gauss-Laguerre rule of order `n` for the weight `exp(-t)`.
pub fn gauss_laguerre(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return invalid("quadrature order must be at least 1");
    }
    if n > MAX_LAGUERRE_ORDER {
        return invalid(format!("Laguerre order {n} exceeds {MAX_LAGUERRE_ORDER}"));
    }
    let family = Laguerre;
    let mut nodes = jacobi_eigenvalues(&family, n);
    for x in nodes.iter_mut() {
        *x = newton_polish(&family, n, *x);
    }
    let weights = nodes.iter().map(|&x| christoffel_weight(&family, n, x)).collect();
    finish(QuadratureKind::Laguerre, nodes, weights)
}

fn finish(kind: QuadratureKind, nodes: Vec<f64>, weights: Vec<f64>) -> Result<QuadratureRule> {
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return invalid("quadrature weights underflowed; order too large");
    }
    Ok(QuadratureRule { kind, nodes, weights })
}

/// Orthonormal polynomial family described by its three-term recurrence
/// `b_{k+1} p_{k+1}(t) = (t - a_k) p_k(t) - b_k p_{k-1}(t)`.
trait Family {
    fn diag(&self, k: usize) -> f64;
    fn offdiag(&self, k: usize) -> f64;
    fn p0(&self) -> f64;
}

struct Hermite;

impl Family for Hermite {
    fn diag(&self, _k: usize) -> f64 {
        0.0
    }
    fn offdiag(&self, k: usize) -> f64 {
        (k as f64 / 2.0).sqrt()
    }
    fn p0(&self) -> f64 {
        std::f64::consts::PI.powf(-0.25)
    }
}

struct Laguerre;

impl Family for Laguerre {
    fn diag(&self, k: usize) -> f64 {
        (2 * k + 1) as f64
    }
    fn offdiag(&self, k: usize) -> f64 {
        k as f64
    }
    fn p0(&self) -> f64 {
        1.0
    }
}

fn jacobi_eigenvalues<F: Family>(family: &F, n: usize) -> Vec<f64> {
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jac[(k, k)] = family.diag(k);
        if k + 1 < n {
            let b = family.offdiag(k + 1);
            jac[(k, k + 1)] = b;
            jac[(k + 1, k)] = b;
        }
    }
    let mut eig: Vec<f64> = jac.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig
}

/// Returns `(p_n(x), p_n'(x))` rescaled by a common positive factor.
fn eval_with_derivative<F: Family>(family: &F, n: usize, x: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (0.0, family.p0());
    let (mut d_prev, mut d) = (0.0, 0.0);
    for k in 0..n {
        let b_next = family.offdiag(k + 1);
        let b_k = family.offdiag(k);
        let a_k = family.diag(k);
        let p_next = ((x - a_k) * p - b_k * p_prev) / b_next;
        let d_next = (p + (x - a_k) * d - b_k * d_prev) / b_next;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
        let m = p.abs().max(d.abs());
        if m > 1e100 {
            p /= m;
            p_prev /= m;
            d /= m;
            d_prev /= m;
        }
    }
    (p, d)
}

fn newton_polish<F: Family>(family: &F, n: usize, mut x: f64) -> f64 {
    for _ in 0..20 {
        let (p, d) = eval_with_derivative(family, n, x);
        if d == 0.0 {
            break;
        }
        let step = p / d;
        x -= step;
        if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            break;
        }
    }
    x
}

/// `1 / Σ_{k<n} p_k(x)^2`, accumulated with rescaling so large outer nodes
/// do not overflow.
fn christoffel_weight<F: Family>(family: &F, n: usize, x: f64) -> f64 {
    let (mut p_prev, mut p) = (0.0, family.p0());
    let mut sum = 0.0;
    // Everything below is stored divided by exp(log_scale).
    let mut log_scale = 0.0;
    for k in 0..n {
        sum += p * p;
        if k + 1 == n {
            break;
        }
        let p_next = ((x - family.diag(k)) * p - family.offdiag(k) * p_prev) / family.offdiag(k + 1);
        p_prev = p;
        p = p_next;
        if p.abs() > 1e100 {
            let m = p.abs();
            p /= m;
            p_prev /= m;
            sum /= m * m;
            log_scale += 2.0 * m.ln();
        }
    }
    (-(sum.ln() + log_scale)).exp()
}
