use num_complex::Complex64;
use serde::Serialize;

use crate::constellation::Constellation;
use crate::error::{invalid, Result};

/// Symmetric discrete distribution on `[-A, A]` for the real scalar channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarDistribution {
    points: Vec<f64>,
    probs: Vec<f64>,
    amplitude_limit: f64,
}

impl ScalarDistribution {
    pub fn new(points: Vec<f64>, probs: Vec<f64>, amplitude_limit: f64) -> Result<Self> {
        if !(amplitude_limit > 0.0 && amplitude_limit.is_finite()) {
            return invalid(format!("amplitude limit must be positive, got {amplitude_limit}"));
        }
        check_masses(points.len(), &probs)?;
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return invalid("scalar support points must be strictly increasing");
        }
        if points.iter().any(|x| !(x.abs() <= amplitude_limit * (1.0 + 1e-12))) {
            return invalid(format!("support point outside [-{amplitude_limit}, {amplitude_limit}]"));
        }
        let n = points.len();
        for i in 0..n {
            let j = n - 1 - i;
            if (points[i] + points[j]).abs() > 1e-9 * amplitude_limit || (probs[i] - probs[j]).abs() > 1e-9 {
                return invalid("scalar distribution must be symmetric about 0");
            }
        }
        Ok(Self { points, probs, amplitude_limit })
    }

    /// Equiprobable `{-A, +A}`.
    pub fn binary(amplitude_limit: f64) -> Result<Self> {
        Self::new(vec![-amplitude_limit, amplitude_limit], vec![0.5, 0.5], amplitude_limit)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn amplitude_limit(&self) -> f64 {
        self.amplitude_limit
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// I/Q product of the distribution with itself: `m²` points `(x_i, x_j)`
    /// carrying mass `p_i p_j`.
    pub fn product(&self) -> Constellation {
        let mut points = Vec::with_capacity(self.len() * self.len());
        let mut probs = Vec::with_capacity(self.len() * self.len());
        for (&xi, &pi) in self.points.iter().zip(&self.probs) {
            for (&xq, &pq) in self.points.iter().zip(&self.probs) {
                points.push(Complex64::new(xi, xq));
                probs.push(pi * pq);
            }
        }
        // Products of masses summing to 1 sum to 1 up to rounding.
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Constellation::new(points, probs).expect("product of a valid distribution is valid")
    }
}

/// Circularly symmetric input: discrete radii on `[0, √E_max]`, uniform phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialDistribution {
    radii: Vec<f64>,
    probs: Vec<f64>,
    e_max: f64,
}

impl RadialDistribution {
    pub fn new(radii: Vec<f64>, probs: Vec<f64>, e_max: f64) -> Result<Self> {
        if !(e_max > 0.0 && e_max.is_finite()) {
            return invalid(format!("peak power must be positive, got {e_max}"));
        }
        check_masses(radii.len(), &probs)?;
        if radii.windows(2).any(|w| !(w[0] < w[1])) {
            return invalid("radii must be strictly increasing");
        }
        if radii.iter().any(|&r| !(r >= 0.0)) {
            return invalid("radii must be nonnegative");
        }
        let limit = e_max.sqrt();
        if let Some(&r) = radii.iter().find(|&&r| r > limit + 1e-9) {
            return invalid(format!("radius {r} exceeds peak radius {limit}"));
        }
        Ok(Self { radii, probs, e_max })
    }

    /// One ring of full mass at the peak radius.
    pub fn single_ring(e_max: f64) -> Result<Self> {
        Self::new(vec![e_max.sqrt()], vec![1.0], e_max)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

fn check_masses(n: usize, probs: &[f64]) -> Result<()> {
    if n == 0 {
        return invalid("distribution needs at least one mass point");
    }
    if probs.len() != n {
        return invalid(format!("{n} locations but {} probabilities", probs.len()));
    }
    if probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
        return invalid("probabilities must be nonnegative");
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return invalid(format!("probabilities sum to {total}, not 1"));
    }
    Ok(())
}
