//! Signal constellations (PSK, QAM, APSK, custom) and their alignment to a
//! peak-power budget.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ConstraintKind;
use crate::error::{invalid, Result};

/// Finite set of complex signal points with a probability per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    probs: Vec<f64>,
}

/// Power figures of a constellation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub avg_power: f64,
    pub peak_circular: f64,
    pub peak_box_component: f64,
    pub par: f64,
}

/// One ring of an APSK constellation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ring {
    pub count: usize,
    pub radius: f64,
    pub phase_offset: f64,
    /// Total probability of the ring, shared equally by its points.
    pub prob: f64,
}

impl Ring {
    pub fn new(count: usize, radius: f64, phase_offset: f64, prob: f64) -> Self {
        Self { count, radius, phase_offset, prob }
    }
}

/// JSON form: `{"points": [[re, im], ...], "probs": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstellationJson {
    pub points: Vec<[f64; 2]>,
    pub probs: Vec<f64>,
}

impl Constellation {
    pub fn new(points: Vec<Complex64>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return invalid("constellation needs at least one point");
        }
        if points.len() != probs.len() {
            return invalid(format!("{} points but {} probabilities", points.len(), probs.len()));
        }
        if points.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
            return invalid("constellation points must be finite");
        }
        if probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return invalid("probabilities must be nonnegative");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self { points, probs })
    }

    /// Equiprobable constellation on the given points.
    pub fn uniform(points: Vec<Complex64>) -> Result<Self> {
        let n = points.len().max(1);
        Self::new(points, vec![1.0 / n as f64; n])
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn metrics(&self) -> Metrics {
        let avg_power: f64 = self.iter().map(|(x, p)| p * x.norm_sqr()).sum();
        let peak_circular = self.points.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
        let peak_box_component = self.peak_box_amplitude().powi(2);
        Metrics { avg_power, peak_circular, peak_box_component, par: peak_circular / avg_power }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        self.points.iter().copied().zip(self.probs.iter().copied())
    }

    fn peak_box_amplitude(&self) -> f64 {
        self.points.iter().map(|x| x.re.abs().max(x.im.abs())).fold(0.0, f64::max)
    }

    /// Scales the constellation so it touches the peak-power boundary of
    /// `kind` for budget `e_max`. Probabilities are unchanged.
    pub fn normalize_peak(&self, kind: ConstraintKind, e_max: f64) -> Result<Self> {
        if !(e_max > 0.0 && e_max.is_finite()) {
            return invalid(format!("peak power must be positive, got {e_max}"));
        }
        let (current, target) = match kind {
            ConstraintKind::Box => (self.peak_box_amplitude(), (0.5 * e_max).sqrt()),
            ConstraintKind::Circular => (self.metrics().peak_circular.sqrt(), e_max.sqrt()),
        };
        if current == 0.0 {
            return invalid("cannot peak-normalize an all-zero constellation");
        }
        Ok(self.scaled(target / current))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { points: self.points.iter().map(|x| x * s).collect(), probs: self.probs.clone() }
    }

    /// Multiplies every point by `exp(i·angle)`.
    pub fn rotated(&self, angle: f64) -> Self {
        let rot = Complex64::from_polar(1.0, angle);
        Self { points: self.points.iter().map(|x| x * rot).collect(), probs: self.probs.clone() }
    }

    pub fn conjugated(&self) -> Self {
        Self { points: self.points.iter().map(|x| x.conj()).collect(), probs: self.probs.clone() }
    }

    pub fn to_json(&self) -> ConstellationJson {
        ConstellationJson {
            points: self.points.iter().map(|x| [x.re, x.im]).collect(),
            probs: self.probs.clone(),
        }
    }

    pub fn from_json(json: &ConstellationJson) -> Result<Self> {
        Self::new(json.points.iter().map(|&[re, im]| Complex64::new(re, im)).collect(), json.probs.clone())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let json: ConstellationJson = serde_json::from_str(&text)?;
        Self::from_json(&json)
    }
}

/// `n` equiprobable unit-radius points at phases `phase_offset + 2πk/n`.
pub fn make_psk(n: usize, phase_offset: f64) -> Result<Constellation> {
    if n < 2 {
        return invalid(format!("PSK needs at least 2 points, got {n}"));
    }
    let points = (0..n)
        .map(|k| Complex64::from_polar(1.0, phase_offset + 2.0 * PI * k as f64 / n as f64))
        .collect();
    Constellation::uniform(points)
}

/// Square `m × m` QAM grid with per-axis levels `±1, ±3, …, ±(m-1)`, scaled
/// so the corner points have unit power.
pub fn make_qam(m_squared: usize) -> Result<Constellation> {
    let m = (m_squared as f64).sqrt().round() as usize;
    if m_squared < 4 || m * m != m_squared {
        return invalid(format!("QAM order must be a perfect square >= 4, got {m_squared}"));
    }
    let levels: Vec<f64> = (0..m).map(|k| (2 * k) as f64 - (m - 1) as f64).collect();
    let scale = 1.0 / ((m - 1) as f64 * 2f64.sqrt());
    let mut points = Vec::with_capacity(m_squared);
    for &i in &levels {
        for &q in &levels {
            points.push(Complex64::new(i * scale, q * scale));
        }
    }
    Constellation::uniform(points)
}

/// Union of concentric PSK rings, rescaled so the outermost ring has unit
/// radius. Ring probabilities must sum to one.
pub fn make_apsk(rings: &[Ring]) -> Result<Constellation> {
    if rings.is_empty() {
        return invalid("APSK needs at least one ring");
    }
    for r in rings {
        if r.count == 0 {
            return invalid("APSK ring with zero points");
        }
        if !(r.radius > 0.0 && r.radius.is_finite()) {
            return invalid(format!("APSK ring radius must be positive, got {}", r.radius));
        }
        if !(r.prob >= 0.0) {
            return invalid("APSK ring probability must be nonnegative");
        }
    }
    let total: f64 = rings.iter().map(|r| r.prob).sum();
    if (total - 1.0).abs() > 1e-9 {
        return invalid(format!("APSK ring probabilities sum to {total}, not 1"));
    }
    let r_max = rings.iter().map(|r| r.radius).fold(0.0, f64::max);
    let mut points = Vec::new();
    let mut probs = Vec::new();
    for ring in rings {
        for k in 0..ring.count {
            let phase = ring.phase_offset + 2.0 * PI * k as f64 / ring.count as f64;
            points.push(Complex64::from_polar(ring.radius / r_max, phase));
            probs.push(ring.prob / total / ring.count as f64);
        }
    }
    Constellation::new(points, probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_4;

    fn same_point_set(a: &Constellation, b: &Constellation) -> bool {
        a.len() == b.len()
            && a.points().iter().all(|x| b.points().iter().any(|y| (x - y).norm() < 1e-12))
    }

    #[test]
    fn psk_examples() {
        let bpsk = make_psk(2, 0.0).unwrap();
        assert!((bpsk.points()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((bpsk.points()[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(bpsk.probs(), &[0.5, 0.5]);

        let qpsk = make_psk(4, FRAC_PI_4).unwrap();
        let h = 0.5f64.sqrt();
        for x in qpsk.points() {
            assert_relative_eq!(x.re.abs(), h, max_relative = 1e-14);
            assert_relative_eq!(x.im.abs(), h, max_relative = 1e-14);
        }

        let m = make_psk(16, 0.0).unwrap().metrics();
        assert_relative_eq!(m.avg_power, 1.0, max_relative = 1e-14);
        assert_relative_eq!(m.peak_circular, 1.0, max_relative = 1e-14);
        assert_relative_eq!(m.par, 1.0, max_relative = 1e-14);
        assert!(make_psk(1, 0.0).is_err());
    }

    #[test]
    fn qam_examples() {
        let m16 = make_qam(16).unwrap().metrics();
        assert_relative_eq!(m16.peak_circular, 1.0, max_relative = 1e-14);
        assert_relative_eq!(m16.par, 9.0 / 5.0, max_relative = 1e-13);
        // Levels ±1..±7: mean per-axis power 21, corner power 98.
        assert_relative_eq!(make_qam(64).unwrap().metrics().par, 98.0 / 42.0, max_relative = 1e-13);
        assert!(same_point_set(&make_qam(4).unwrap(), &make_psk(4, FRAC_PI_4).unwrap()));
        for bad in [0, 1, 2, 8, 15] {
            assert!(make_qam(bad).is_err());
        }
    }

    #[test]
    fn apsk_examples() {
        let single = make_apsk(&[Ring::new(8, 1.0, 0.0, 1.0)]).unwrap();
        assert!(same_point_set(&single, &make_psk(8, 0.0).unwrap()));

        let two = make_apsk(&[Ring::new(4, 0.5, 0.0, 0.5), Ring::new(4, 1.0, 0.0, 0.5)]).unwrap();
        assert_eq!(two.len(), 8);
        assert!(two.probs().iter().all(|&p| (p - 0.125).abs() < 1e-15));

        assert!(make_apsk(&[]).is_err());
        assert!(make_apsk(&[Ring::new(4, 0.0, 0.0, 1.0)]).is_err());
        assert!(make_apsk(&[Ring::new(4, 1.0, 0.0, 0.7)]).is_err());
    }

    #[test]
    fn normalize_examples() {
        let qpsk = make_psk(4, FRAC_PI_4).unwrap();
        let boxed = qpsk.normalize_peak(ConstraintKind::Box, 2.0).unwrap();
        for x in boxed.points() {
            assert_relative_eq!(x.re.abs(), 1.0, max_relative = 1e-14);
            assert_relative_eq!(x.im.abs(), 1.0, max_relative = 1e-14);
        }

        let qam = make_qam(16).unwrap().normalize_peak(ConstraintKind::Circular, 1.0).unwrap();
        assert_relative_eq!(qam.metrics().peak_circular, 1.0, max_relative = 1e-14);

        let a = qpsk.normalize_peak(ConstraintKind::Box, 1.0).unwrap();
        let b = qpsk.normalize_peak(ConstraintKind::Circular, 1.0).unwrap();
        assert!(same_point_set(&a, &b));

        let zero = Constellation::uniform(vec![Complex64::new(0.0, 0.0); 2]).unwrap();
        assert!(zero.normalize_peak(ConstraintKind::Box, 1.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(Constellation::new(vec![], vec![]).is_err());
        assert!(Constellation::new(vec![Complex64::new(1.0, 0.0)], vec![0.5]).is_err());
        assert!(Constellation::new(vec![Complex64::new(f64::NAN, 0.0)], vec![1.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = make_qam(16).unwrap();
        let text = serde_json::to_string(&c.to_json()).unwrap();
        let back = Constellation::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
