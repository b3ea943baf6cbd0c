//! The discrete-time complex AWGN channel `Y = X + N` with isotropic noise of
//! total variance `σ²` (`σ²/2` per real component), its peak-power budgets,
//! and the log-density kernels used throughout.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::special::log_i0_unchecked;

/// Which peak-power constraint applies to the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    /// Per-component limit `X_I², X_Q² ≤ E_max / 2` (separate I/Q amplifiers).
    Box,
    /// Joint limit `X_I² + X_Q² ≤ E_max` (one amplifier on the envelope).
    Circular,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::Box => "box",
            ConstraintKind::Circular => "circular",
        })
    }
}

impl FromStr for ConstraintKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "box" => Ok(ConstraintKind::Box),
            "circular" | "circle" => Ok(ConstraintKind::Circular),
            other => invalid(format!("unknown constraint '{other}' (expected box|circular)")),
        }
    }
}

/// Noise power and peak-power budget of one channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    noise_power: f64,
    e_max: f64,
}

impl ChannelParams {
    pub fn new(noise_power: f64, e_max: f64) -> Result<Self> {
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return invalid(format!("noise power must be positive, got {noise_power}"));
        }
        if !(e_max > 0.0 && e_max.is_finite()) {
            return invalid(format!("peak power must be positive, got {e_max}"));
        }
        Ok(Self { noise_power, e_max })
    }

    /// Channel with peak power `e_max` and noise scaled to hit `psnr`.
    pub fn from_psnr(e_max: f64, psnr: f64) -> Result<Self> {
        if !(psnr > 0.0 && psnr.is_finite()) {
            return invalid(format!("pSNR must be positive, got {psnr}"));
        }
        Self::new(e_max / psnr, e_max)
    }

    /// Total complex noise variance `σ²`.
    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    /// Peak SNR, `E_max / σ²`.
    pub fn psnr(&self) -> f64 {
        self.e_max / self.noise_power
    }

    /// Noise variance of each real component.
    pub fn component_variance(&self) -> f64 {
        0.5 * self.noise_power
    }

    /// Largest admissible per-component amplitude under the box constraint.
    pub fn box_amplitude(&self) -> f64 {
        (0.5 * self.e_max).sqrt()
    }

    /// Largest admissible radius under the circular constraint.
    pub fn peak_radius(&self) -> f64 {
        self.e_max.sqrt()
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

/// `ln f(y | x)` for the complex channel: `-|y-x|²/σ² - ln(πσ²)`.
pub fn log_density_complex(y: Complex64, x: Complex64, noise_power: f64) -> Result<f64> {
    check_positive("noise power", noise_power)?;
    Ok(-(y - x).norm_sqr() / noise_power - (PI * noise_power).ln())
}

/// `ln` of the `N(x, variance)` density at `y`.
pub fn log_density_real(y: f64, x: f64, variance: f64) -> Result<f64> {
    check_positive("variance", variance)?;
    let d = y - x;
    Ok(-d * d / (2.0 * variance) - 0.5 * (2.0 * PI * variance).ln())
}

/// Log-density of the output amplitude `ρ = |Y|` given input radius `r`
/// (Rician): `ln[(2ρ/σ²) exp(-(ρ²+r²)/σ²) I0(2ρr/σ²)]`.
pub fn log_density_amplitude(rho: f64, r: f64, noise_power: f64) -> Result<f64> {
    check_positive("noise power", noise_power)?;
    if !(rho >= 0.0 && rho.is_finite()) || !(r >= 0.0 && r.is_finite()) {
        return invalid(format!("amplitudes must be nonnegative, got rho={rho}, r={r}"));
    }
    Ok((2.0 * rho / noise_power).ln() - (rho * rho + r * r) / noise_power
        + log_i0_unchecked(2.0 * rho * r / noise_power))
}
