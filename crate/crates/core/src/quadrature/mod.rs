//! Adaptive integration of singular weighted integrals in radial and
//! cylindrical reduction.
//!
//! Half-lines are mapped by `rho = c (e^u - 1)`, `u = t / (1 - t)`, with the
//! Jacobian folded into the integrand. Near the origin `rho ~ c t`; in the
//! tail an algebraic decay `rho^{-1-e}` becomes `exp(-e u)`, which is flat at
//! `t = 1` instead of an endpoint singularity; a tail that does not decay
//! is reported as divergent. `c = 1` except for the inner
//! `r` integral, where `c = max(1, rho)` follows the scale of integrands like
//! `(1 + rho^2 + r^2)^{-m}`. The power weight
//! `rho^{k-1-s}` stays in the integrand; with `k-1-s > -1` it is integrable
//! at `t = 0` and the Gauss-Kronrod panels never sample the endpoint.

mod gauss_kronrod;

use std::cell::Cell;
use std::f64::consts::PI;

pub use gauss_kronrod::{adaptive, gk21, AdaptOpts, AdaptOutcome, Panel};

use crate::error::{HsError, Result};
use crate::special_fn::sphere_measure;

const MODULE: &str = "quadrature";

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_EVALS: usize = 10_000_000;

/// Evaluation cap for one inner integral. An inner result that misses its
/// tighter tolerance is still kept when it meets the outer one.
const INNER_MAX_EVALS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Upper end of an integration range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extent {
    Finite(f64),
    Infinite,
}

impl Extent {
    /// Upper end in the compressed variable of [`half_line`].
    fn mapped_upper(&self, scale: f64) -> Result<f64> {
        match *self {
            Extent::Infinite => Ok(END_U / (1.0 + END_U)),
            Extent::Finite(x) if x > 0.0 && x.is_finite() => {
                let u = (x / scale).ln_1p();
                Ok(u / (1.0 + u))
            }
            Extent::Finite(x) => Err(HsError::domain(MODULE, format!("range end {x} must be > 0"))),
        }
    }
}

/// Integration domain in the `(rho, r)` quadrant. `r_max` must be `None`
/// exactly when `k = n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylindricalDomain {
    pub rho_max: Extent,
    pub r_max: Option<Extent>,
}

impl CylindricalDomain {
    pub fn whole_space(n: u32, k: u32) -> Self {
        Self {
            rho_max: Extent::Infinite,
            r_max: (k < n).then_some(Extent::Infinite),
        }
    }
}

/// Tolerance and budget shared by the routines of this module.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub tol: f64,
    pub max_evals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_evals: DEFAULT_MAX_EVALS,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

fn finish(out: AdaptOutcome, what: &str) -> Result<QuadratureResult> {
    if out.converged {
        Ok(QuadratureResult {
            value: out.value,
            error_estimate: out.error,
            evaluations: out.evaluations,
        })
    } else {
        Err(HsError::QuadratureNotConverged {
            msg: what.to_string(),
            partial: out.value,
            error_estimate: out.error,
            evaluations: out.evaluations,
        })
    }
}

/// `int_a^b f` to relative tolerance `tol`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> f64,
{
    let mut g = |x: f64| Ok(f(x));
    let out = adaptive(
        &mut g,
        a,
        b,
        &[],
        AdaptOpts {
            rel_tol: opts.tol,
            abs_tol: 0.0,
            max_evals: opts.max_evals,
        },
    )?;
    finish(out, "integrate")
}

/// `u` where the tail check of an infinite range starts (`rho ~ 1e150`).
const TAIL_U: f64 = 345.0;
/// `u` where an infinite range is cut (`rho ~ 1e300`).
const END_U: f64 = 690.0;

/// `int_0^{upper} g(rho) rho^{beta} d rho` through `rho = c (e^u - 1)`,
/// `u = t / (1 - t)`.
///
/// Infinite ranges are integrated up to `rho ~ 1e300`. The stretch beyond
/// `rho ~ 1e150` is integrated separately and must be negligible at the
/// requested tolerance; otherwise the integral is reported divergent (or
/// too slowly convergent to evaluate in double precision).
fn half_line<F>(g: &mut F, beta: f64, upper: Extent, scale: f64, opts: AdaptOpts) -> Result<AdaptOutcome>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut h = |t: f64| -> Result<f64> {
        let one_minus = 1.0 - t;
        let u = t / one_minus;
        let rho = scale * u.exp_m1();
        let v = g(rho)?;
        // subnormal values carry no relative precision
        if v.abs() < f64::MIN_POSITIVE {
            return Ok(0.0);
        }
        let jac = (scale + rho) / (one_minus * one_minus);
        Ok(v * rho.powf(beta) * jac)
    };
    if let Extent::Finite(_) = upper {
        let t_max = upper.mapped_upper(scale)?;
        return adaptive(&mut h, 0.0, t_max, &[], opts);
    }
    let t_tail = TAIL_U / (1.0 + TAIL_U);
    let t_end = END_U / (1.0 + END_U);
    let body = adaptive(&mut h, 0.0, t_tail, &[], opts)?;
    let allowed = opts.rel_tol * body.value.abs();
    let tail = adaptive(
        &mut h,
        t_tail,
        t_end,
        &[],
        AdaptOpts {
            abs_tol: opts.abs_tol.max(allowed),
            max_evals: opts.max_evals.saturating_sub(body.evaluations),
            ..opts
        },
    )?;
    if !tail.value.is_finite() || tail.value.abs() > allowed.max(opts.abs_tol) {
        return Err(HsError::divergent(
            MODULE,
            format!(
                "range beyond rho = {:.1e} contributes {:e} against {:e}",
                scale * TAIL_U.exp(),
                tail.value,
                body.value
            ),
        ));
    }
    Ok(AdaptOutcome {
        value: body.value + tail.value,
        error: body.error + tail.error,
        evaluations: body.evaluations + tail.evaluations,
        converged: body.converged && tail.converged,
    })
}

/// `sigma_k int_0^inf g(rho) rho^{k-1-s} d rho`, i.e. `int_{R^k} g(|x|) |x|^{-s} dx`.
pub fn integrate_radial<G>(g: G, k: u32, s: f64, tol: f64) -> Result<QuadratureResult>
where
    G: Fn(f64) -> f64,
{
    integrate_radial_with(g, k, s, Extent::Infinite, QuadOptions::with_tol(tol))
}

pub fn integrate_radial_with<G>(
    g: G,
    k: u32,
    s: f64,
    upper: Extent,
    opts: QuadOptions,
) -> Result<QuadratureResult>
where
    G: Fn(f64) -> f64,
{
    if k < 1 || !(s >= 0.0 && s < k as f64) {
        return Err(HsError::domain(MODULE, format!("need k > s >= 0, got k = {k}, s = {s}")));
    }
    let sigma = sphere_measure(k)?;
    let mut gg = |rho: f64| Ok(g(rho));
    let out = half_line(
        &mut gg,
        k as f64 - 1.0 - s,
        upper,
        1.0,
        AdaptOpts {
            rel_tol: opts.tol,
            abs_tol: 0.0,
            max_evals: opts.max_evals,
        },
    )?;
    let res = finish(out, "integrate_radial")?;
    Ok(QuadratureResult {
        value: sigma * res.value,
        error_estimate: sigma * res.error_estimate,
        evaluations: res.evaluations,
    })
}

/// `sigma_k sigma_{n-k} int int f(rho, r) rho^{k-1-s} r^{n-k-1} d rho d r`.
///
/// For `k = n` the `r` dimension is absent and `f` is called with `r = 0`.
pub fn integrate_cylindrical<F>(
    f: F,
    n: u32,
    k: u32,
    s: f64,
    domain: CylindricalDomain,
    tol: f64,
) -> Result<QuadratureResult>
where
    F: Fn(f64, f64) -> f64,
{
    integrate_cylindrical_with(f, n, k, s, domain, QuadOptions::with_tol(tol))
}

pub fn integrate_cylindrical_with<F>(
    f: F,
    n: u32,
    k: u32,
    s: f64,
    domain: CylindricalDomain,
    opts: QuadOptions,
) -> Result<QuadratureResult>
where
    F: Fn(f64, f64) -> f64,
{
    if k < 1 || k > n || !(s >= 0.0 && s < k as f64) {
        return Err(HsError::domain(
            MODULE,
            format!("need 1 <= k <= n and 0 <= s < k, got n = {n}, k = {k}, s = {s}"),
        ));
    }
    if k == n {
        if domain.r_max.is_some() {
            return Err(HsError::domain(
                MODULE,
                "degenerate domain: k = n has no r dimension but an r-range was supplied",
            ));
        }
        return integrate_radial_with(|rho| f(rho, 0.0), k, s, domain.rho_max, opts);
    }
    let Some(r_max) = domain.r_max else {
        return Err(HsError::domain(MODULE, "k < n requires an r-range"));
    };

    let sigma = sphere_measure(k)? * sphere_measure(n - k)?;
    let inner_tol = 0.1 * opts.tol;
    let spent = Cell::new(0usize);
    let worst_inner_rel = Cell::new(0.0f64);
    let budget = opts.max_evals;
    let b_r = (n - k) as f64 - 1.0;

    let mut outer = |rho: f64| -> Result<f64> {
        let remaining = budget.saturating_sub(spent.get());
        let mut inner_f = |r: f64| Ok(f(rho, r));
        let out = half_line(
            &mut inner_f,
            b_r,
            r_max,
            rho.max(1.0),
            AdaptOpts {
                rel_tol: inner_tol,
                abs_tol: 0.0,
                max_evals: remaining.min(INNER_MAX_EVALS),
            },
        )?;
        spent.set(spent.get() + out.evaluations);
        if !out.converged && !(out.error <= opts.tol * out.value.abs()) {
            return Err(HsError::QuadratureNotConverged {
                msg: format!("inner r-integral at rho = {rho}"),
                partial: out.value,
                error_estimate: out.error,
                evaluations: spent.get(),
            });
        }
        if out.value != 0.0 {
            worst_inner_rel.set(worst_inner_rel.get().max(out.error / out.value.abs()));
        }
        Ok(out.value)
    };
    let out = half_line(
        &mut outer,
        k as f64 - 1.0 - s,
        domain.rho_max,
        1.0,
        AdaptOpts {
            rel_tol: opts.tol,
            abs_tol: 0.0,
            max_evals: usize::MAX,
        },
    )?;
    let total_evals = spent.get() + out.evaluations;
    let out = AdaptOutcome {
        evaluations: total_evals,
        ..out
    };
    let res = finish(out, "integrate_cylindrical")?;
    let err = res.error_estimate + worst_inner_rel.get() * res.value.abs();
    Ok(QuadratureResult {
        value: sigma * res.value,
        error_estimate: sigma * err,
        evaluations: total_evals,
    })
}

/// `I(z) = int_{|z - zeta| <= |z|/2} |z - zeta|^{2-n} |xi|^{-s} d zeta` where
/// `zeta = (xi, eta)` and `xi` holds the first `k` coordinates.
///
/// Uses spherical coordinates centred at `z`: `zeta - z = (t sin(phi) w_k,
/// t cos(phi) w_{n-k})`, so the Newtonian kernel cancels against the volume
/// element and only the `|xi|^{-s}` weight remains singular.
pub fn singular_newtonian_integral(
    z: &[f64],
    n: u32,
    k: u32,
    s: f64,
    tol: f64,
) -> Result<QuadratureResult> {
    if z.len() != n as usize {
        return Err(HsError::domain(MODULE, format!("point has {} coordinates, n = {n}", z.len())));
    }
    if n < 3 || k < 2 || k > n || !(s >= 0.0 && s < k as f64 && s < 2.0) {
        return Err(HsError::domain(
            MODULE,
            format!("need n >= 3, 2 <= k <= n, 0 <= s < min(k, 2); got n = {n}, k = {k}, s = {s}"),
        ));
    }
    let z_norm = z.iter().map(|c| c * c).sum::<f64>().sqrt();
    if z_norm == 0.0 {
        return Err(HsError::singular(MODULE, "singular_newtonian_integral at z = 0"));
    }
    let x_norm = z[..k as usize].iter().map(|c| c * c).sum::<f64>().sqrt();
    let radius = 0.5 * z_norm;
    let kf = k as f64;
    let mk = n - k;

    let opts_inner = AdaptOpts {
        rel_tol: 0.1 * tol,
        abs_tol: 0.0,
        max_evals: DEFAULT_MAX_EVALS,
    };
    let spent = Cell::new(0usize);

    // angular average of |x + rho' w|^{-s} over w in S^{k-1}, times |S^{k-1}|
    let theta_part = |rho_p: f64| -> Result<f64> {
        if x_norm <= 1e-14 * z_norm {
            // sigma_{k-1} int_0^pi sin^{k-2} = sigma_k
            return Ok(sphere_measure(k)? * rho_p.powf(-s));
        }
        if s == 0.0 {
            return sphere_measure(k);
        }
        let sig = sphere_measure(k - 1)?;
        let mut g = |theta: f64| -> Result<f64> {
            let d2 = x_norm * x_norm + 2.0 * x_norm * rho_p * theta.cos() + rho_p * rho_p;
            Ok(d2.max(0.0).powf(-0.5 * s) * theta.sin().powf(kf - 2.0))
        };
        let out = adaptive(&mut g, 0.0, PI, &[], opts_inner)?;
        spent.set(spent.get() + out.evaluations);
        if !out.converged {
            return Err(HsError::QuadratureNotConverged {
                msg: "angular integral".into(),
                partial: out.value,
                error_estimate: out.error,
                evaluations: spent.get(),
            });
        }
        Ok(sig * out.value)
    };

    let mut outer = |t: f64| -> Result<f64> {
        if mk == 0 {
            return Ok(t * theta_part(t)?);
        }
        let mut g = |phi: f64| -> Result<f64> {
            let (sp, cp) = phi.sin_cos();
            Ok(sp.powf(kf - 1.0) * cp.powf(mk as f64 - 1.0) * theta_part(t * sp)?)
        };
        let breaks: Vec<f64> = if x_norm > 0.0 && x_norm < t {
            vec![(x_norm / t).asin()]
        } else {
            Vec::new()
        };
        let out = adaptive(&mut g, 0.0, 0.5 * PI, &breaks, opts_inner)?;
        spent.set(spent.get() + out.evaluations);
        if !out.converged {
            return Err(HsError::QuadratureNotConverged {
                msg: "polar-angle integral".into(),
                partial: out.value,
                error_estimate: out.error,
                evaluations: spent.get(),
            });
        }
        Ok(t * out.value)
    };
    let breaks: Vec<f64> = if x_norm > 0.0 && x_norm < radius { vec![x_norm] } else { Vec::new() };
    let out = adaptive(
        &mut outer,
        0.0,
        radius,
        &breaks,
        AdaptOpts {
            rel_tol: tol,
            abs_tol: 0.0,
            max_evals: DEFAULT_MAX_EVALS,
        },
    )?;
    let total = spent.get() + out.evaluations;
    let sig_y = if mk == 0 { 1.0 } else { sphere_measure(mk)? };
    let res = finish(
        AdaptOutcome {
            evaluations: total,
            ..out
        },
        "singular_newtonian_integral",
    )?;
    Ok(QuadratureResult {
        value: sig_y * res.value,
        error_estimate: sig_y * (res.error_estimate + 0.1 * tol * res.value.abs()),
        evaluations: total,
    })
}

/// `sigma_k/2 * B((k-s)/2, a-(k-s)/2)` evaluated by quadrature instead of
/// Beta functions; used to cross-check closed forms in tests and the CLI.
pub fn radial_power_integral(k: u32, a: f64, s: f64, tol: f64) -> Result<QuadratureResult> {
    integrate_radial(|rho| (1.0 + rho * rho).powf(-a), k, s, tol)
}

/// Relative error helper for oracle comparisons.
pub fn relative_error(approx: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        approx.abs()
    } else {
        (approx - exact).abs() / exact.abs()
    }
}

/// Closed form of [`singular_newtonian_integral`] for `s = 0`: the
/// Newtonian potential of a ball of radius `R = |z|/2` at its centre,
/// `sigma_n R^2 / 2`.
pub fn newtonian_ball_center(n: u32, z_norm: f64) -> Result<f64> {
    let r = 0.5 * z_norm;
    Ok(sphere_measure(n)? * r * r / 2.0)
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, exact for polynomials of
/// degree `2 m - 1`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Newton on P_m from the Chebyshev-like starting guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=m {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * pm - pm1) / (x * x - 1.0);
            let dx = pm / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[m - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[m - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}
