//! Exponent calculus for the Hardy-Sobolev inequality
//!
//! ```text
//! ( int |u|^{p*(s)} / |x|^s dz )^{1/p*(s)} <= S ( int |grad u|^p dz )^{1/p}
//! ```
//!
//! on `R^n = R^k x R^{n-k}`, together with the auxiliary exponents used by
//! the regularity and decay estimates.

use std::fmt;

use crate::error::{HsError, Result};

const MODULE: &str = "exponents";

/// Relative tolerance for exponent identities.
pub const REL_TOL: f64 = 1e-12;

/// An exponent that may be `+inf` (the `s = p` endpoint of `r'`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conjugate {
    Finite(f64),
    Infinite,
}

impl Conjugate {
    pub fn is_finite(&self) -> bool {
        matches!(self, Conjugate::Finite(_))
    }

    /// `1/value`, with `1/inf = 0`.
    pub fn reciprocal(&self) -> f64 {
        match self {
            Conjugate::Finite(v) => 1.0 / v,
            Conjugate::Infinite => 0.0,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Conjugate::Finite(v) => *v,
            Conjugate::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Conjugate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conjugate::Finite(v) => write!(f, "{v}"),
            Conjugate::Infinite => write!(f, "inf"),
        }
    }
}

/// The parameter quadruple `(n, k, p, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentContext {
    pub n: u32,
    pub k: u32,
    pub p: f64,
    pub s: f64,
}

impl ExponentContext {
    pub fn new(n: u32, k: u32, p: f64, s: f64) -> Self {
        Self { n, k, p, s }
    }

    /// Checks `n >= 3`, `2 <= k <= n`, `1 < p < n`, `0 <= s <= p`, `s < k`.
    /// The stronger admissibility condition is not required here.
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(HsError::domain(MODULE, format!("n = {} < 3", self.n)));
        }
        if self.k < 2 || self.k > self.n {
            return Err(HsError::domain(
                MODULE,
                format!("k = {} outside 2..={}", self.k, self.n),
            ));
        }
        check_ps(self.p, self.s, self.n)?;
        if self.s >= self.k as f64 {
            return Err(HsError::domain(
                MODULE,
                format!("s = {} must be < k = {}", self.s, self.k),
            ));
        }
        Ok(())
    }
}

fn check_ps(p: f64, s: f64, n: u32) -> Result<()> {
    let nf = n as f64;
    if !(p.is_finite() && s.is_finite()) {
        return Err(HsError::domain(MODULE, "non-finite exponent"));
    }
    if !(p > 1.0 && p < nf) {
        return Err(HsError::domain(MODULE, format!("p = {p} outside (1, {n})")));
    }
    if !(0.0..=p).contains(&s) {
        return Err(HsError::domain(MODULE, format!("s = {s} outside [0, p = {p}]")));
    }
    Ok(())
}

/// Hardy-Sobolev conjugate `p*(s) = p (n - s) / (n - p)`.
pub fn hs_conjugate(p: f64, s: f64, n: u32) -> Result<f64> {
    check_ps(p, s, n)?;
    let nf = n as f64;
    Ok(p * (nf - s) / (nf - p))
}

/// `p*(s)` without range checks; `s` may be any real (used for `p*(r s)`).
fn hs_conjugate_unchecked(p: f64, s: f64, n: u32) -> f64 {
    let nf = n as f64;
    p * (nf - s) / (nf - p)
}

/// `(r, r')` with `r = n/(n-p+s)` and `r' = p*/(p*(s) - p)`, mutually Hoelder
/// conjugate. At `s = p` we get `r = 1` and `r' = inf`.
pub fn critical_pair(p: f64, s: f64, n: u32) -> Result<(f64, Conjugate)> {
    check_ps(p, s, n)?;
    let nf = n as f64;
    let r = nf / (nf - p + s);
    let p_star = hs_conjugate_unchecked(p, 0.0, n);
    let gap = hs_conjugate_unchecked(p, s, n) - p;
    let r_prime = if s == p || gap <= REL_TOL * p {
        Conjugate::Infinite
    } else {
        Conjugate::Finite(p_star / gap)
    };
    Ok((r, r_prime))
}

/// True iff `1<p<n`, `0<=s<=p`, `s<k` and `s(n-k) < k(n-p)`.
pub fn admissible(ctx: &ExponentContext) -> bool {
    if ctx.validate().is_err() {
        return false;
    }
    let (n, k) = (ctx.n as f64, ctx.k as f64);
    ctx.s * (n - k) < k * (n - ctx.p)
}

/// Everything derived from an admissible context.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentReport {
    pub ctx: ExponentContext,
    pub p_star_s: f64,
    pub p_prime: f64,
    pub r: f64,
    pub r_prime: Conjugate,
    pub sigma: f64,
    pub p_sigma: f64,
    /// `(n-p)/(p-1)`, the decay rate of the p-Laplacian fundamental solution.
    pub decay_bound: f64,
}

impl ExponentReport {
    /// `kappa_t = p*(t)/p`, valid for `0 <= t < p` with `t <= s`.
    pub fn kappa(&self, t: f64) -> Result<f64> {
        let ExponentContext { n, p, s, .. } = self.ctx;
        if !(t >= 0.0 && t < p && t <= s) {
            return Err(HsError::domain(
                MODULE,
                format!("kappa: t = {t} outside [0, min(p, s)] with t < p"),
            ));
        }
        Ok(hs_conjugate_unchecked(p, t, n) / p)
    }

    /// `p*(r s)`; equals `r p` for admissible contexts.
    pub fn p_star_rs(&self) -> f64 {
        hs_conjugate_unchecked(self.ctx.p, self.r * self.ctx.s, self.ctx.n)
    }
}

pub fn aux_exponents(ctx: &ExponentContext) -> Result<ExponentReport> {
    if !admissible(ctx) {
        ctx.validate()?;
        return Err(HsError::domain(
            MODULE,
            format!(
                "inadmissible context: s(n-k) = {} >= k(n-p) = {}",
                ctx.s * (ctx.n - ctx.k) as f64,
                ctx.k as f64 * (ctx.n as f64 - ctx.p)
            ),
        ));
    }
    let ExponentContext { n, p, s, .. } = *ctx;
    let nf = n as f64;
    let p_star_s = hs_conjugate(p, s, n)?;
    let (r, r_prime) = critical_pair(p, s, n)?;
    Ok(ExponentReport {
        ctx: *ctx,
        p_star_s,
        p_prime: p / (p - 1.0),
        r,
        r_prime,
        sigma: s * (nf - p) / (2.0 * p * (nf - s)),
        p_sigma: p_star_s,
        decay_bound: (nf - p) / (p - 1.0),
    })
}

/// Exponent window `(2*(gamma), 6)` in `R^3` in which solutions of the
/// galaxy model `-Lap u = phi(|x|) u^{q-1}` have finite mass.
pub fn galaxy_mass_window(gamma: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(HsError::domain(
            MODULE,
            format!("gamma = {gamma} outside (0, 2)"),
        ));
    }
    Ok((2.0 * (3.0 - gamma), 6.0))
}

/// Whether `q` lies strictly inside [`galaxy_mass_window`].
pub fn in_galaxy_mass_window(q: f64, gamma: f64) -> Result<bool> {
    let (lo, hi) = galaxy_mass_window(gamma)?;
    Ok(q > lo && q < hi)
}
