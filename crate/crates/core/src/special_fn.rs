//! Gamma and Beta functions and the sphere/ball constants.
//!
//! Sphere measure convention: `sphere_measure(m)` is the surface measure of
//! the unit sphere in `R^m`, so that for radial `f`
//! `int_{R^m} f(|y|) dy = sphere_measure(m) * int_0^inf f(t) t^{m-1} dt`.

use std::f64::consts::PI;

use crate::error::{HsError, Result};

const MODULE: &str = "special_fn";

/// `ln Gamma(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(HsError::domain(MODULE, format!("log_gamma({x}): need x > 0")));
    }
    Ok(libm::lgamma(x))
}

/// `ln B(a, b)`.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(HsError::domain(
            MODULE,
            format!("beta({a}, {b}): arguments must be positive"),
        ));
    }
    Ok(log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?)
}

pub fn beta(a: f64, b: f64) -> Result<f64> {
    Ok(log_beta(a, b)?.exp())
}

/// Surface measure of the unit sphere in `R^m`: `2 pi^{m/2} / Gamma(m/2)`.
pub fn sphere_measure(m: u32) -> Result<f64> {
    if m < 1 {
        return Err(HsError::domain(MODULE, "sphere_measure: m must be >= 1"));
    }
    let h = m as f64 / 2.0;
    Ok(2.0 * (h * PI.ln() - log_gamma(h)?).exp())
}

/// Volume of the unit ball in `R^m`: `pi^{m/2} / Gamma(m/2 + 1)`.
pub fn ball_volume(m: u32) -> Result<f64> {
    if m < 1 {
        return Err(HsError::domain(MODULE, "ball_volume: m must be >= 1"));
    }
    let h = m as f64 / 2.0;
    Ok((h * PI.ln() - log_gamma(h + 1.0)?).exp())
}

/// Sphere and ball constants for one dimension pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricConstants {
    pub sigma_m: f64,
    pub omega_n: f64,
}

impl GeometricConstants {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        Ok(Self {
            sigma_m: sphere_measure(m)?,
            omega_n: ball_volume(n)?,
        })
    }
}
