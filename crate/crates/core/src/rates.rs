//! Mutual information of discrete and circularly symmetric inputs over the
//! AWGN channel, the unconstrained Shannon baseline, and a Monte Carlo
//! estimator used as an independent check on the quadrature.
//!
//! All quadrature kernels use the same trick: the noise integral is centred
//! on the conditioning symbol, so the Gaussian (or exponential) part of the
//! integrand is carried exactly by the rule's weight and the remaining factor
//! is the smooth log-sum-exp `ln Σ_j p_j f(y|x_j) / f(y|x)`.

use std::f64::consts::{LOG2_E, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::cad::{RadialDistribution, ScalarDistribution};
use crate::constellation::Constellation;
use crate::error::{invalid, Result};
use crate::numerics::special::i0e_unchecked;
use crate::numerics::{QuadratureKind, QuadratureRule};

/// Nodes whose weight falls below this fraction of the total carry no
/// representable contribution and are skipped.
const WEIGHT_CUTOFF: f64 = 1e-25;

/// Minimum sample count accepted by [`mc_mi_estimate`].
pub const MC_MIN_SAMPLES: usize = 1000;
const MC_CHUNK: usize = 1 << 15;
/// Variance ratio of the wide component of the Monte Carlo noise mixture.
const MC_WIDE_VARIANCE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Quadrature,
    MonteCarlo,
}

/// An achievable rate in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateResult {
    /// Raw value; may be a hair below zero from rounding.
    pub bits: f64,
    pub estimator: Estimator,
    /// Standard error of the estimate (0 for quadrature).
    pub std_error: f64,
}

impl RateResult {
    fn quadrature(bits: f64) -> Self {
        Self { bits, estimator: Estimator::Quadrature, std_error: 0.0 }
    }

    /// Value clamped at zero, for reporting.
    pub fn reported(&self) -> f64 {
        self.bits.max(0.0)
    }
}

/// Streaming log-sum-exp accumulator.
#[derive(Clone, Copy)]
struct Lse {
    max: f64,
    sum: f64,
}

impl Lse {
    #[inline]
    fn new() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    #[inline]
    fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v <= self.max {
            self.sum += (v - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    #[inline]
    fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

fn ln_probs(probs: &[f64]) -> Vec<f64> {
    probs.iter().map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY }).collect()
}

fn require_kind(quad: &QuadratureRule, kind: QuadratureKind) -> Result<()> {
    if quad.kind() != kind {
        return invalid(format!("expected a {kind:?} rule, got {:?}", quad.kind()));
    }
    Ok(())
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

/// Real channel `Y = x + N(0, v)`: 1-D Hermite nodes `n_k = √(2v) t_k`.
#[derive(Debug, Clone)]
pub(crate) struct ScalarKernel {
    offsets: Vec<f64>,
    weights: Vec<f64>,
    inv_two_var: f64,
}

impl ScalarKernel {
    pub(crate) fn new(quad: &QuadratureRule, variance: f64) -> Result<Self> {
        require_kind(quad, QuadratureKind::Hermite)?;
        require_positive("variance", variance)?;
        let s = (2.0 * variance).sqrt();
        let norm = PI.sqrt();
        let (offsets, weights) =
            quad.truncated(WEIGHT_CUTOFF * norm).into_iter().map(|(t, w)| (s * t, w / norm)).unzip();
        Ok(Self { offsets, weights, inv_two_var: 0.5 / variance })
    }

    /// Marginal information density `D(f(·|x) ‖ p_Y)` in bits for the
    /// mixture with support `points` and log-masses `ln_p`.
    pub(crate) fn info_density(&self, points: &[f64], ln_p: &[f64], x: f64) -> f64 {
        let mut acc = 0.0;
        for (&n, &w) in self.offsets.iter().zip(&self.weights) {
            let mut lse = Lse::new();
            for (&xj, &lp) in points.iter().zip(ln_p) {
                let d = x - xj + n;
                lse.push(lp - (d * d - n * n) * self.inv_two_var);
            }
            acc -= w * lse.value();
        }
        acc * LOG2_E
    }

    /// [`Self::info_density`] together with `E[f(Y|x_c) / p_Y(Y) | x]` for
    /// every support point `x_c`.
    pub(crate) fn info_density_with_ratios(&self, points: &[f64], ln_p: &[f64], x: f64) -> (f64, Vec<f64>) {
        let mut acc = 0.0;
        let mut ratios = vec![0.0; points.len()];
        let mut log_f = vec![0.0; points.len()];
        for (&n, &w) in self.offsets.iter().zip(&self.weights) {
            let mut lse = Lse::new();
            for ((&xj, &lp), lf) in points.iter().zip(ln_p).zip(log_f.iter_mut()) {
                let d = x - xj + n;
                *lf = -(d * d - n * n) * self.inv_two_var;
                lse.push(lp + *lf);
            }
            let l = lse.value();
            acc -= w * l;
            for (r, &lf) in ratios.iter_mut().zip(&log_f) {
                *r += w * (lf - l).exp();
            }
        }
        (acc * LOG2_E, ratios)
    }

    pub(crate) fn mutual_information(&self, points: &[f64], probs: &[f64]) -> f64 {
        let ln_p = ln_probs(probs);
        points
            .iter()
            .zip(probs)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&x, &p)| p * self.info_density(points, &ln_p, x))
            .sum()
    }
}

/// Complex channel: tensor-product Hermite nodes `n = σ(t₁ + i t₂)`.
#[derive(Debug, Clone)]
pub(crate) struct ComplexKernel {
    offsets: Vec<Complex64>,
    weights: Vec<f64>,
    inv_noise: f64,
}

impl ComplexKernel {
    pub(crate) fn new(quad: &QuadratureRule, noise_power: f64) -> Result<Self> {
        require_kind(quad, QuadratureKind::Hermite)?;
        require_positive("noise power", noise_power)?;
        let s = noise_power.sqrt();
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        for (t1, w1) in quad.iter() {
            for (t2, w2) in quad.iter() {
                let w = w1 * w2 / PI;
                if w >= WEIGHT_CUTOFF {
                    offsets.push(Complex64::new(s * t1, s * t2));
                    weights.push(w);
                }
            }
        }
        Ok(Self { offsets, weights, inv_noise: 1.0 / noise_power })
    }

    pub(crate) fn info_density(&self, points: &[Complex64], ln_p: &[f64], x: Complex64) -> f64 {
        let mut acc = 0.0;
        for (&n, &w) in self.offsets.iter().zip(&self.weights) {
            let n2 = n.norm_sqr();
            let mut lse = Lse::new();
            for (&xj, &lp) in points.iter().zip(ln_p) {
                lse.push(lp - ((x - xj + n).norm_sqr() - n2) * self.inv_noise);
            }
            acc -= w * lse.value();
        }
        acc * LOG2_E
    }

    pub(crate) fn mutual_information(&self, c: &Constellation) -> f64 {
        let ln_p = ln_probs(c.probs());
        c.iter()
            .filter(|&(_, p)| p > 0.0)
            .map(|(x, p)| p * self.info_density(c.points(), &ln_p, x))
            .sum()
    }
}

/// Circularly symmetric input: the noise around the conditioning point is
/// written in polar form `n = σ√t e^{iθ}`, so `t ~ Exp(1)` is integrated by
/// Gauss-Laguerre and `θ` by the trapezoidal rule (spectrally accurate for
/// periodic integrands). Only `θ ∈ [0, π]` is visited since the integrand is
/// even in `θ`.
#[derive(Debug, Clone)]
pub(crate) struct RadialKernel {
    nodes: Vec<RadialNode>,
    inv_noise: f64,
}

#[derive(Debug, Clone, Copy)]
struct RadialNode {
    dx: f64,
    dy: f64,
    t: f64,
    w: f64,
}

impl RadialKernel {
    pub(crate) fn new(quad: &QuadratureRule, noise_power: f64) -> Result<Self> {
        require_kind(quad, QuadratureKind::Laguerre)?;
        require_positive("noise power", noise_power)?;
        let angular = angular_points(quad.order());
        let half = angular / 2;
        let s = noise_power.sqrt();
        let mut nodes = Vec::new();
        for (t, wt) in quad.truncated(WEIGHT_CUTOFF) {
            let radius = s * t.sqrt();
            for j in 0..=half {
                let theta = 2.0 * PI * j as f64 / angular as f64;
                let mult = if j == 0 || j == half { 1.0 } else { 2.0 };
                nodes.push(RadialNode {
                    dx: radius * theta.cos(),
                    dy: radius * theta.sin(),
                    t,
                    w: wt * mult / angular as f64,
                });
            }
        }
        Ok(Self { nodes, inv_noise: 1.0 / noise_power })
    }

    /// Marginal information density in bits of an input at radius `r` for
    /// the ring mixture `(radii, ln_p)`.
    pub(crate) fn info_density(&self, radii: &[f64], ln_p: &[f64], r: f64) -> f64 {
        // exp(-(ρ² + r_k²)/σ²) I0(2ρr_k/σ²) = exp(-(ρ - r_k)²/σ²) i0e(2ρr_k/σ²); the
        // Gaussian factor is shifted by its largest value so nothing underflows.
        let probs: Vec<f64> = ln_p.iter().map(|lp| lp.exp()).collect();
        let mut acc = 0.0;
        for node in &self.nodes {
            let yx = r + node.dx;
            let rho = (yx * yx + node.dy * node.dy).sqrt();
            let nearest = radii
                .iter()
                .zip(&probs)
                .filter(|(_, &p)| p > 0.0)
                .map(|(&rk, _)| (rho - rk) * (rho - rk))
                .fold(f64::INFINITY, f64::min)
                * self.inv_noise;
            let mut sum = 0.0;
            for (&rk, &p) in radii.iter().zip(&probs) {
                if p > 0.0 {
                    let d = (rho - rk) * (rho - rk) * self.inv_noise - nearest;
                    sum += p * (-d).exp() * i0e_unchecked(2.0 * rho * rk * self.inv_noise);
                }
            }
            acc -= node.w * (node.t - nearest + sum.ln());
        }
        acc * LOG2_E
    }

    /// [`Self::info_density`] together with `E[f_k(Y) / p_Y(Y) | r]` for every
    /// ring `k`, where `f_k` is the output density of ring `k` alone.
    pub(crate) fn info_density_with_ratios(&self, radii: &[f64], ln_p: &[f64], r: f64) -> (f64, Vec<f64>) {
        let probs: Vec<f64> = ln_p.iter().map(|lp| lp.exp()).collect();
        let mut acc = 0.0;
        let mut ratios = vec![0.0; radii.len()];
        let mut comp = vec![0.0; radii.len()];
        for node in &self.nodes {
            let yx = r + node.dx;
            let rho = (yx * yx + node.dy * node.dy).sqrt();
            let nearest = radii
                .iter()
                .zip(&probs)
                .filter(|(_, &p)| p > 0.0)
                .map(|(&rk, _)| (rho - rk) * (rho - rk))
                .fold(f64::INFINITY, f64::min)
                * self.inv_noise;
            let mut sum = 0.0;
            for ((&rk, &p), c) in radii.iter().zip(&probs).zip(comp.iter_mut()) {
                let d = (rho - rk) * (rho - rk) * self.inv_noise - nearest;
                *c = (-d).exp() * i0e_unchecked(2.0 * rho * rk * self.inv_noise);
                if p > 0.0 {
                    sum += p * *c;
                }
            }
            acc -= node.w * (node.t - nearest + sum.ln());
            for (q, &c) in ratios.iter_mut().zip(&comp) {
                *q += node.w * c / sum;
            }
        }
        (acc * LOG2_E, ratios)
    }

    pub(crate) fn mutual_information(&self, radii: &[f64], probs: &[f64]) -> f64 {
        let ln_p = ln_probs(probs);
        radii
            .iter()
            .zip(probs)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&r, &p)| p * self.info_density(radii, &ln_p, r))
            .sum()
    }
}

/// Trapezoid points on the full circle paired with a Laguerre rule of the
/// given order.
fn angular_points(order: usize) -> usize {
    let m = order.max(16);
    m + m % 2
}

/// `I(X;Y)` in bits for a discrete constellation over the complex channel
/// with total noise power `noise_power`.
pub fn mi_discrete_complex(c: &Constellation, noise_power: f64, quad: &QuadratureRule) -> Result<RateResult> {
    let kernel = ComplexKernel::new(quad, noise_power)?;
    Ok(RateResult::quadrature(kernel.mutual_information(c)))
}

/// `I(X;Y)` in bits for `Y = X + N(0, variance)` with `X ~ d`.
pub fn mi_discrete_real(d: &ScalarDistribution, variance: f64, quad: &QuadratureRule) -> Result<RateResult> {
    let kernel = ScalarKernel::new(quad, variance)?;
    Ok(RateResult::quadrature(kernel.mutual_information(d.points(), d.probs())))
}

/// `I(X;Y)` in bits for a uniform-phase input with discrete radii,
/// i.e. `h(Y) - log₂(πeσ²)`.
pub fn mi_radial(d: &RadialDistribution, noise_power: f64, quad: &QuadratureRule) -> Result<RateResult> {
    let kernel = RadialKernel::new(quad, noise_power)?;
    Ok(RateResult::quadrature(kernel.mutual_information(d.radii(), d.probs())))
}

/// `log₂(1 + snr)`.
pub fn shannon_capacity(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return invalid(format!("SNR must be nonnegative, got {snr}"));
    }
    Ok(snr.ln_1p() * LOG2_E)
}

/// Monte Carlo estimate of `I(X;Y)` with its standard error.
///
/// Estimates `I = H(X) - H(X|Y)` with `H(X)` exact, so each sample carries
/// only the equivocation `ln(1 + Σ_{j≠i} p_j f(y|x_j) / (p_i f(y|x_i)))`,
/// which is tiny in the bulk and large only after rare noise excursions.
/// Noise is drawn from the defensive mixture `½ CN(0, σ²) + ½ CN(0, 4σ²)`
/// and reweighted by `f/q ≤ 2`, so those excursions are actually sampled at
/// high SNR and the standard error stays honest.
///
/// Samples are drawn in fixed-size chunks; chunk `k` uses the ChaCha stream
/// `k` of `seed`, so the result is bit-identical for a given seed however the
/// chunks are scheduled.
pub fn mc_mi_estimate(c: &Constellation, noise_power: f64, samples: usize, seed: u64) -> Result<RateResult> {
    require_positive("noise power", noise_power)?;
    if samples < MC_MIN_SAMPLES {
        return invalid(format!("Monte Carlo needs at least {MC_MIN_SAMPLES} samples, got {samples}"));
    }
    let ln_p = ln_probs(c.probs());
    let mut cdf: Vec<f64> = c
        .probs()
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    *cdf.last_mut().expect("nonempty constellation") = f64::INFINITY;
    let entropy: f64 = c.probs().iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
    let comp_std = (0.5 * noise_power).sqrt();
    let wide_std = comp_std * MC_WIDE_VARIANCE.sqrt();
    let inv_noise = 1.0 / noise_power;
    let tilt = (1.0 - 1.0 / MC_WIDE_VARIANCE) * inv_noise;

    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let n = MC_CHUNK.min(samples - k * MC_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut m = Moments::default();
            let mut exps = Vec::with_capacity(c.len());
            for _ in 0..n {
                let u: f64 = rng.random();
                let i = cdf.partition_point(|&f| f <= u);
                let std = if rng.random::<bool>() { wide_std } else { comp_std };
                let nr: f64 = rng.sample(StandardNormal);
                let ni: f64 = rng.sample(StandardNormal);
                let noise = Complex64::new(std * nr, std * ni);
                let n2 = noise.norm_sqr();
                let weight = 1.0 / (0.5 + 0.5 * (n2 * tilt).exp() / MC_WIDE_VARIANCE);
                let xi = c.points()[i];
                exps.clear();
                for (j, (&xj, &lp)) in c.points().iter().zip(&ln_p).enumerate() {
                    if j != i {
                        exps.push(lp - ln_p[i] - ((noise + xi - xj).norm_sqr() - n2) * inv_noise);
                    }
                }
                m.push(weight * ln_1p_sum_exp(&exps));
            }
            m
        })
        .collect();
    let m = partial.into_iter().fold(Moments::default(), Moments::merge);
    let n = m.count as f64;
    let var = if m.count > 1 { m.m2 / (n - 1.0) } else { 0.0 };
    Ok(RateResult {
        bits: entropy - m.mean * LOG2_E,
        estimator: Estimator::MonteCarlo,
        std_error: (var / n).sqrt() * LOG2_E,
    })
}

/// `ln(1 + Σ exp(a_j))`, accurate when the sum is tiny.
fn ln_1p_sum_exp(a: &[f64]) -> f64 {
    let max = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        a.iter().map(|&x| x.exp()).sum::<f64>().ln_1p()
    } else {
        max + ((-max).exp() + a.iter().map(|&x| (x - max).exp()).sum::<f64>()).ln()
    }
}

/// Running mean and sum of squared deviations (Welford), mergeable across
/// chunks.
#[derive(Default, Clone, Copy)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Self {
            count,
            mean: self.mean + d * w,
            m2: self.m2 + other.m2 + d * d * self.count as f64 * w,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ConstraintKind;
    use crate::constellation::{make_psk, make_qam};
    use crate::numerics::{gauss_hermite, gauss_laguerre};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_4;

    fn hermite() -> QuadratureRule {
        gauss_hermite(crate::numerics::DEFAULT_HERMITE_ORDER).unwrap()
    }

    #[test]
    fn single_point_carries_no_information() {
        let c = Constellation::uniform(vec![Complex64::new(0.3, 0.1)]).unwrap();
        assert!(mi_discrete_complex(&c, 0.5, &hermite()).unwrap().bits.abs() < 1e-12);
        let d = ScalarDistribution::new(vec![0.0], vec![1.0], 1.0).unwrap();
        assert!(mi_discrete_real(&d, 0.5, &hermite()).unwrap().bits.abs() < 1e-12);
        let mc = mc_mi_estimate(&c, 0.5, 5000, 3).unwrap();
        assert!(mc.bits.abs() < 1e-15);
        assert_eq!(mc.std_error, 0.0);
    }

    #[test]
    fn noiseless_binary_is_one_bit() {
        let d = ScalarDistribution::binary(1.0).unwrap();
        let bits = mi_discrete_real(&d, 1e-4, &hermite()).unwrap().bits;
        assert!((bits - 1.0).abs() < 1e-9, "{bits}");
    }

    #[test]
    fn qpsk_splits_into_two_binary_channels() {
        let q = hermite();
        for &psnr in &[0.5, 1.0, 4.0, 16.0] {
            let e_max = 2.0;
            let sigma2 = e_max / psnr;
            let qpsk = make_psk(4, FRAC_PI_4).unwrap().normalize_peak(ConstraintKind::Box, e_max).unwrap();
            let complex = mi_discrete_complex(&qpsk, sigma2, &q).unwrap().bits;
            let binary = ScalarDistribution::binary((e_max / 2.0).sqrt()).unwrap();
            let real = mi_discrete_real(&binary, sigma2 / 2.0, &q).unwrap().bits;
            assert!((complex - 2.0 * real).abs() < 1e-8, "psnr={psnr}");
        }
    }

    #[test]
    fn sixteen_qam_saturates_at_high_snr() {
        let c = make_qam(16).unwrap();
        let bits = mi_discrete_complex(&c, 1e-3, &hermite()).unwrap().bits;
        assert!((bits - 4.0).abs() < 1e-3, "{bits}");
    }

    #[test]
    fn wrong_rule_kind_is_rejected() {
        let lag = gauss_laguerre(8).unwrap();
        assert!(mi_discrete_complex(&make_qam(4).unwrap(), 1.0, &lag).is_err());
        let d = RadialDistribution::single_ring(1.0).unwrap();
        assert!(mi_radial(&d, 1.0, &hermite()).is_err());
    }

    #[test]
    fn ring_at_origin_carries_no_information() {
        let d = RadialDistribution::new(vec![0.0], vec![1.0], 1.0).unwrap();
        let bits = mi_radial(&d, 0.3, &gauss_laguerre(64).unwrap()).unwrap().bits;
        assert!(bits.abs() < 1e-9, "{bits}");
    }

    #[test]
    fn shannon_examples() {
        assert_eq!(shannon_capacity(0.0).unwrap(), 0.0);
        assert_relative_eq!(shannon_capacity(1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(shannon_capacity(15.0).unwrap(), 4.0, max_relative = 1e-15);
        assert!(shannon_capacity(-0.1).is_err());
    }

    #[test]
    fn monte_carlo_is_deterministic_and_validated() {
        let c = make_psk(8, 0.0).unwrap();
        let a = mc_mi_estimate(&c, 0.5, 70_000, 11).unwrap();
        let b = mc_mi_estimate(&c, 0.5, 70_000, 11).unwrap();
        assert_eq!(a.bits.to_bits(), b.bits.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        assert!(mc_mi_estimate(&c, 0.5, 999, 11).is_err());
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        let c = make_psk(4, FRAC_PI_4).unwrap();
        // pSNR 4 and pSNR 32; at 32 the deficit from 2 bits is about 7e-8
        // and comes entirely from noise beyond 5 standard deviations.
        for &n in &[0.25, 1.0 / 32.0] {
            let quad = mi_discrete_complex(&c, n, &hermite()).unwrap().bits;
            let mc = mc_mi_estimate(&c, n, 1_000_000, 5).unwrap();
            assert!(mc.std_error > 0.0);
            assert!((quad - mc.bits).abs() <= 3.0 * mc.std_error, "{quad} vs {} ± {}", mc.bits, mc.std_error);
        }
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|k| ((k * 37 % 101) as f64).sqrt()).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        let merged = a.merge(b);
        assert_eq!(merged.count, 1000);
        assert_relative_eq!(merged.mean, whole.mean, max_relative = 1e-14);
        assert_relative_eq!(merged.m2, whole.m2, max_relative = 1e-12);
        assert_eq!(Moments::default().merge(a).count, 313);
    }

    #[test]
    fn lse_accumulator_matches_batch() {
        let v = [-3.0, 2.5, 0.1, 2.5, -800.0, f64::NEG_INFINITY];
        let mut lse = Lse::new();
        v.iter().for_each(|&x| lse.push(x));
        assert_relative_eq!(lse.value(), crate::numerics::log_sum_exp(&v).unwrap(), max_relative = 1e-15);
    }
}
