//! Closed-form objects: Beta integral identities, the extremal family and
//! its sharp constant, the explicit cylindrical solution families, the
//! fundamental solution and the Kelvin transform.
//!
//! Functions are plain evaluation callbacks; every identity here is checked
//! numerically against [`crate::quadrature`] or [`crate::cylinder_grid`].

use crate::error::{HsError, Result};
use crate::quadrature::{integrate, integrate_cylindrical, relative_error, CylindricalDomain, QuadOptions, QuadratureResult};
use crate::special_fn::{ball_volume, log_beta, sphere_measure};

const MODULE: &str = "closed_forms";

/// Tolerance used by [`sharp_constant`] for its quadrature route.
pub const CONSTANT_QUAD_TOL: f64 = 1e-11;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `int_{R^k} int_{R^{n-k}} (1+|x|^2+|y|^2)^{-m} |x|^{-s} dy dx`
/// `= (sigma_{n-k}/2)(sigma_k/2) B((n-k)/2, m-(n-k)/2) B((k-s)/2, m-(n-s)/2)`.
pub fn beta_integral_full(n: u32, k: u32, m: f64, s: f64) -> Result<f64> {
    if !(s >= 0.0 && (s < k as f64) && k < n) || k < 1 {
        return Err(HsError::domain(
            MODULE,
            format!("need 0 <= s < k < n, got n = {n}, k = {k}, s = {s}"),
        ));
    }
    let (nf, kf) = (n as f64, k as f64);
    let b1 = m - (nf - kf) / 2.0;
    if !(b1 > 0.0) {
        return Err(HsError::divergent(
            MODULE,
            format!("B((n-k)/2, m-(n-k)/2): second argument {b1} <= 0 (m = {m})"),
        ));
    }
    let b2 = m - (nf - s) / 2.0;
    if !(b2 > 0.0) {
        return Err(HsError::divergent(
            MODULE,
            format!("B((k-s)/2, m-(n-s)/2): second argument {b2} <= 0 (m = {m})"),
        ));
    }
    let pref = 0.25 * sphere_measure(n - k)? * sphere_measure(k)?;
    Ok(pref * (log_beta((nf - kf) / 2.0, b1)? + log_beta((kf - s) / 2.0, b2)?).exp())
}

/// `int_{R^k} (1+|x|^2)^{-a} |x|^{-s} dx = (sigma_k/2) B((k-s)/2, a-(k-s)/2)`.
pub fn beta_integral_radial(k: u32, a: f64, s: f64) -> Result<f64> {
    if k < 1 || !(s >= 0.0 && s < k as f64) {
        return Err(HsError::domain(
            MODULE,
            format!("need k > s >= 0, got k = {k}, s = {s}"),
        ));
    }
    let h = (k as f64 - s) / 2.0;
    if !(a > h) {
        return Err(HsError::divergent(
            MODULE,
            format!("B((k-s)/2, a-(k-s)/2): a = {a} <= (k-s)/2 = {h}"),
        ));
    }
    Ok(0.5 * sphere_measure(k)? * log_beta(h, a - h)?.exp())
}

/// The constant of the s = 1, p = 2 inequality
/// `(int |u|^{2(n-1)/(n-2)} / |x|)^{(n-2)/(2(n-1))} <= K ||grad u||_2`
/// together with the diagnostics of how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct SharpConstant {
    pub n: u32,
    pub k: u32,
    /// Best constant `K`: `K^{-2}` is the infimum of the Rayleigh quotient.
    pub constant: f64,
    /// `K^{2(n-1)/(n-2)}`: the coefficient in `Lap v = -(Lambda/|x|) v^{n/(n-2)}`
    /// satisfied by [`extremal_v`].
    pub lambda: f64,
    /// `4 Lambda / (n-2)^2`.
    pub mu: f64,
    pub routes: Option<ConstantRoutes>,
}

/// Independent evaluations behind [`sharp_constant`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantRoutes {
    /// `p = (n-2)/(4a)`, `a = k-1`.
    pub shift: f64,
    /// `J = int int |x|^{-1} ((|x|+p)^2+|y|^2)^{-(n-1)} dx dy` by quadrature.
    pub normalization_integral: QuadratureResult,
    /// The same integral composed from the two Beta factors.
    pub normalization_integral_beta: f64,
    /// `K` from the quadrature value of `J` (authoritative).
    pub constant_quadrature: f64,
    /// `K` from the Beta composition of `J`.
    pub constant_beta: f64,
    /// `K` from `K^{2(n-1)^2/(n-2)} = ((n-2)/2)^{2(n-1)} J`: the value that
    /// makes [`extremal_v`] satisfy `int v^{2(n-1)/(n-2)}/|x| = 1`.
    pub constant_unit_normalization: f64,
    /// The printed closed form, first line (None when `k = n`).
    pub printed_first_line: Option<f64>,
    /// The printed closed form, simplified line (None when `k = n`).
    pub printed_simplified: Option<f64>,
}

impl ConstantRoutes {
    pub fn discrepancy_first_line(&self) -> Option<f64> {
        self.printed_first_line
            .map(|v| relative_error(v, self.constant_quadrature))
    }

    pub fn discrepancy_simplified(&self) -> Option<f64> {
        self.printed_simplified
            .map(|v| relative_error(v, self.constant_quadrature))
    }

    pub fn discrepancy_unit_normalization(&self) -> f64 {
        relative_error(self.constant_unit_normalization, self.constant_quadrature)
    }

    pub fn discrepancy_beta(&self) -> f64 {
        relative_error(self.constant_beta, self.constant_quadrature)
    }
}

fn check_nk(n: u32, k: u32) -> Result<()> {
    if n < 3 || k < 2 || k > n {
        return Err(HsError::domain(
            MODULE,
            format!("need n >= 3 and 2 <= k <= n, got n = {n}, k = {k}"),
        ));
    }
    Ok(())
}

impl SharpConstant {
    /// Builds `Lambda` and `mu` from a given `K`.
    pub fn from_constant(n: u32, k: u32, constant: f64) -> Result<Self> {
        check_nk(n, k)?;
        if !(constant > 0.0 && constant.is_finite()) {
            return Err(HsError::domain(MODULE, format!("K = {constant} must be positive")));
        }
        let nf = n as f64;
        let lambda = constant.powf(2.0 * (nf - 1.0) / (nf - 2.0));
        let mu = 4.0 * lambda / ((nf - 2.0) * (nf - 2.0));
        Ok(Self {
            n,
            k,
            constant,
            lambda,
            mu,
            routes: None,
        })
    }

    /// Value of the Rayleigh quotient infimum, `K^{-2}`.
    pub fn min_energy(&self) -> f64 {
        self.constant.powi(-2)
    }
}

/// `p = (n-2)/(4a)` with `a = k-1`.
pub fn extremal_shift(n: u32, k: u32) -> f64 {
    (n as f64 - 2.0) / (4.0 * (k as f64 - 1.0))
}

/// Closed form of `J(n, k)` from the two Beta factors.
pub fn normalization_integral_beta(n: u32, k: u32) -> Result<f64> {
    check_nk(n, k)?;
    let (nf, kf) = (n as f64, k as f64);
    let p = extremal_shift(n, k);
    // int_{R^k} |x|^{-1} (|x|+p)^{-(n+k-2)} dx = sigma_k p^{-(n-1)} B(k-1, n-1)
    // (for k = n the y-integral is absent and the exponent is 2(n-1))
    if k == n {
        let ln = sphere_measure(n)?.ln() - (nf - 1.0) * p.ln() + log_beta(nf - 1.0, nf - 1.0)?;
        return Ok(ln.exp());
    }
    let ln_y = (0.5 * sphere_measure(n - k)?).ln() + log_beta((nf - kf) / 2.0, (nf + kf) / 2.0 - 1.0)?;
    let ln_x = sphere_measure(k)?.ln() - (nf - 1.0) * p.ln() + log_beta(kf - 1.0, nf - 1.0)?;
    Ok((ln_y + ln_x).exp())
}

/// `K` from `J`: the Rayleigh quotient of the profile
/// `w = ((|x|+p)^2+|y|^2)^{-(n-2)/2}` is `((n-2)^2/4) J^{1/(n-1)}`.
pub fn constant_from_normalization(n: u32, j: f64) -> f64 {
    let nf = n as f64;
    2.0 / (nf - 2.0) * j.powf(-1.0 / (2.0 * (nf - 1.0)))
}

/// `K` solving `K^{2(n-1)^2/(n-2)} = ((n-2)/2)^{2(n-1)} J`.
pub fn constant_unit_normalization(n: u32, j: f64) -> f64 {
    let nf = n as f64;
    let rhs = 2.0 * (nf - 1.0) * ((nf - 2.0) / 2.0).ln() + j.ln();
    (rhs * (nf - 2.0) / (2.0 * (nf - 1.0) * (nf - 1.0))).exp()
}

fn printed_routes(n: u32, k: u32) -> Result<(Option<f64>, Option<f64>)> {
    if k == n {
        return Ok((None, None));
    }
    let (nf, kf) = (n as f64, k as f64);
    let p = extremal_shift(n, k);
    let power = 2.0 * (nf - 1.0) * (nf - 1.0) / (nf - 2.0);
    let sig_y = sphere_measure(n - k)?;
    let sig_x = sphere_measure(k)?;
    let b_y = log_beta((nf - kf) / 2.0, (nf + kf) / 2.0 - 1.0)?;
    let first = 2.0 * (nf - 1.0) * ((nf - 2.0) / 2.0).ln() + (0.5 * sig_y).ln() + b_y + sig_x.ln()
        - (nf + kf + 1.0) * p.ln()
        + log_beta(kf - 1.0, nf + kf - 1.0)?;
    let simplified = (2.0 * kf + 3.0) * 2f64.ln()
        + (nf - kf - 3.0) * (nf - 2.0).ln()
        + (nf + kf + 1.0) * (kf - 1.0).ln()
        + sig_y.ln()
        + sig_x.ln()
        + b_y
        + log_beta(kf - 1.0, nf - 1.0)?;
    Ok((Some((first / power).exp()), Some((simplified / power).exp())))
}

/// Sharp constant `K` for the s = 1 inequality, computed by quadrature of
/// the normalization integral with the printed closed forms kept alongside
/// as diagnostics.
pub fn sharp_constant(n: u32, k: u32) -> Result<SharpConstant> {
    check_nk(n, k)?;
    let p = extremal_shift(n, k);
    let nf = n as f64;
    let integrand = move |rho: f64, r: f64| ((rho + p) * (rho + p) + r * r).powf(-(nf - 1.0));
    let j = integrate_cylindrical(
        integrand,
        n,
        k,
        1.0,
        CylindricalDomain::whole_space(n, k),
        CONSTANT_QUAD_TOL,
    )?;
    let j_beta = normalization_integral_beta(n, k)?;
    let (first, simplified) = printed_routes(n, k)?;
    let constant = constant_from_normalization(n, j.value);
    let mut sc = SharpConstant::from_constant(n, k, constant)?;
    sc.routes = Some(ConstantRoutes {
        shift: p,
        normalization_integral: j,
        normalization_integral_beta: j_beta,
        constant_quadrature: constant,
        constant_beta: constant_from_normalization(n, j_beta),
        constant_unit_normalization: constant_unit_normalization(n, j.value),
        printed_first_line: first,
        printed_simplified: simplified,
    });
    Ok(sc)
}

/// Dilation, translation and `a = k-1` of the extremal family.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalParams {
    pub n: u32,
    pub k: u32,
    pub lambda: f64,
    pub y0: Vec<f64>,
    pub a: u32,
}

impl ExtremalParams {
    pub fn new(n: u32, k: u32, lambda: f64, y0: Vec<f64>) -> Result<Self> {
        check_nk(n, k)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(HsError::domain(MODULE, format!("lambda = {lambda} must be > 0")));
        }
        if y0.len() != (n - k) as usize {
            return Err(HsError::domain(
                MODULE,
                format!("y0 has {} coordinates, expected n-k = {}", y0.len(), n - k),
            ));
        }
        Ok(Self {
            n,
            k,
            lambda,
            y0,
            a: k - 1,
        })
    }

    /// Centred member (`y0 = 0`).
    pub fn centered(n: u32, k: u32, lambda: f64) -> Result<Self> {
        Self::new(n, k, lambda, vec![0.0; n.saturating_sub(k) as usize])
    }

    /// `(n-2)/(4 a lambda^2)`.
    pub fn shift(&self) -> f64 {
        (self.n as f64 - 2.0) / (4.0 * self.a as f64 * self.lambda * self.lambda)
    }
}

/// An extremal ready for evaluation. Construction checks that the two
/// prefactor forms (one through `Lambda`, one through `K`) agree.
#[derive(Debug, Clone)]
pub struct Extremal {
    pub params: ExtremalParams,
    pub prefactor: f64,
    shift: f64,
    half_power: f64,
}

impl Extremal {
    pub fn new(params: ExtremalParams, constant: &SharpConstant) -> Result<Self> {
        if constant.n != params.n || constant.k != params.k {
            return Err(HsError::domain(
                MODULE,
                format!(
                    "constant is for (n, k) = ({}, {}), extremal for ({}, {})",
                    constant.n, constant.k, params.n, params.k
                ),
            ));
        }
        let nf = params.n as f64;
        let lam_pow = params.lambda.powf(-(nf - 2.0));
        let via_k = lam_pow * ((nf - 2.0) / 2.0).powf(nf - 2.0) * constant.constant.powf(-(nf - 1.0));
        let via_lambda = lam_pow
            * (4.0 / ((nf - 2.0) * (nf - 2.0))).powf(-(nf - 2.0) / 2.0)
            * constant.lambda.powf(-(nf - 2.0) / 2.0);
        if relative_error(via_lambda, via_k) > 1e-12 {
            return Err(HsError::Consistency {
                module: MODULE,
                msg: format!("extremal prefactors disagree: {via_k} vs {via_lambda}"),
            });
        }
        let shift = params.shift();
        Ok(Self {
            params,
            prefactor: via_k,
            shift,
            half_power: -(nf - 2.0) / 2.0,
        })
    }

    /// Value at `(|x|, y)`.
    pub fn eval(&self, x_norm: f64, y: &[f64]) -> Result<f64> {
        if !(x_norm >= 0.0) {
            return Err(HsError::domain(MODULE, format!("|x| = {x_norm} must be >= 0")));
        }
        if y.len() != self.params.y0.len() {
            return Err(HsError::domain(MODULE, "y has the wrong dimension"));
        }
        let dy2: f64 = y.iter().zip(&self.params.y0).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(self.profile(x_norm, dy2.sqrt()))
    }

    /// Value at `(rho, r) = (|x|, |y - y0|)`.
    pub fn profile(&self, rho: f64, r: f64) -> f64 {
        let d = rho + self.shift;
        self.prefactor * (d * d + r * r).powf(self.half_power)
    }

    /// `(d/d rho, d/d r)` of [`Self::profile`].
    pub fn profile_gradient(&self, rho: f64, r: f64) -> (f64, f64) {
        let d = rho + self.shift;
        let q = d * d + r * r;
        let c = self.prefactor * 2.0 * self.half_power * q.powf(self.half_power - 1.0);
        (c * d, c * r)
    }

    /// `lambda^{-(n-2)} ((n-2)/2)^{n-2} K^{-(n-1)}`: the limit of
    /// `v |z|^{n-2}` as `|z| -> inf`.
    pub fn far_field_amplitude(&self) -> f64 {
        self.prefactor
    }
}

/// `v(x, y) = lambda^{-(n-2)} ((n-2)/2)^{n-2} K^{-(n-1)}
/// [(|x| + (n-2)/(4 a lambda^2))^2 + |y - y0|^2]^{-(n-2)/2}`.
pub fn extremal_v(params: &ExtremalParams, constant: &SharpConstant, x_norm: f64, y: &[f64]) -> Result<f64> {
    Extremal::new(params.clone(), constant)?.eval(x_norm, y)
}

/// Parameters of the family
/// `v = lambda^{2-n} ((|x|+alpha)^2 + (|y|+beta)^2)^{(2-n)/2}` on
/// `R^{a+1} x R^{b+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prop4Params {
    pub a: u32,
    pub b: u32,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Prop4Params {
    pub fn new(a: u32, b: u32, lambda: f64, alpha: f64, beta: f64) -> Result<Self> {
        if a < 1 || b < 1 {
            return Err(HsError::domain(MODULE, format!("a = {a}, b = {b} must be >= 1")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) || !alpha.is_finite() || !beta.is_finite() {
            return Err(HsError::domain(MODULE, "lambda must be > 0, alpha and beta finite"));
        }
        Ok(Self {
            a,
            b,
            lambda,
            alpha,
            beta,
        })
    }

    pub fn n(&self) -> u32 {
        self.a + self.b + 2
    }

    /// `p = alpha (n-2) lambda^2 a`.
    pub fn p_coef(&self) -> f64 {
        self.alpha * (self.n() as f64 - 2.0) * self.lambda * self.lambda * self.a as f64
    }

    /// `q = beta (n-2) lambda^2 b`.
    pub fn q_coef(&self) -> f64 {
        self.beta * (self.n() as f64 - 2.0) * self.lambda * self.lambda * self.b as f64
    }

    /// `phi = lambda^2 ((rho+alpha)^2 + (r+beta)^2)`.
    pub fn phi(&self, rho: f64, r: f64) -> f64 {
        let (u, w) = (rho + self.alpha, r + self.beta);
        self.lambda * self.lambda * (u * u + w * w)
    }

    /// `v = phi^{(2-n)/2}` as a function of `(|x|, |y|)`.
    pub fn profile(&self, rho: f64, r: f64) -> Result<f64> {
        let (u, w) = (rho + self.alpha, r + self.beta);
        if u == 0.0 && w == 0.0 {
            return Err(HsError::singular(
                MODULE,
                format!("pole of the explicit solution at (|x|, |y|) = ({rho}, {r})"),
            ));
        }
        let nf = self.n() as f64;
        Ok(self.phi(rho, r).powf((2.0 - nf) / 2.0))
    }
}

/// Value of the explicit solution at `(x, y)` with `x` in `R^{a+1}` and `y`
/// in `R^{b+1}`, together with `(p, q)` in
/// `Lap v = -v^{n/(n-2)} (p/|x| + q/|y|)`.
pub fn prop4_solution(params: &Prop4Params, x: &[f64], y: &[f64]) -> Result<(f64, (f64, f64))> {
    if x.len() != (params.a + 1) as usize || y.len() != (params.b + 1) as usize {
        return Err(HsError::domain(
            MODULE,
            format!(
                "x must have a+1 = {} and y b+1 = {} coordinates",
                params.a + 1,
                params.b + 1
            ),
        ));
    }
    let v = params.profile(norm(x), norm(y))?;
    Ok((v, (params.p_coef(), params.q_coef())))
}

/// The three-subspace analogue
/// `v = lambda^{2-n} ((|x|+alpha)^2 + (|y|+beta)^2 + (|w|+gamma)^2)^{(2-n)/2}`
/// with `n = d1 + d2 + d3`. Returns the value and the coefficients
/// `(p, q, r)` in `Lap v = -v^{n/(n-2)} (p/|x| + q/|y| + r/|w|)`.
pub fn three_subspace_solution(
    dims: [u32; 3],
    lambda: f64,
    shifts: [f64; 3],
    radii: [f64; 3],
) -> Result<(f64, [f64; 3])> {
    let n: u32 = dims.iter().sum();
    if dims.iter().any(|&d| d < 2) || n < 3 || !(lambda > 0.0) {
        return Err(HsError::domain(MODULE, "each subspace needs dimension >= 2 and lambda > 0"));
    }
    let nf = n as f64;
    let q: f64 = radii.iter().zip(&shifts).map(|(r, c)| (r + c) * (r + c)).sum();
    if q == 0.0 {
        return Err(HsError::singular(MODULE, "pole of the three-subspace solution"));
    }
    let v = (lambda * lambda * q).powf((2.0 - nf) / 2.0);
    let coef = |i: usize| shifts[i] * (nf - 2.0) * lambda * lambda * (dims[i] - 1) as f64;
    Ok((v, [coef(0), coef(1), coef(2)]))
}

/// `Gamma(z) = |z|^{2-n} / (n (n-2) omega_n)`, with `-Lap Gamma = delta`.
pub fn fundamental_solution(n: u32, z_norm: f64) -> Result<f64> {
    if n < 3 {
        return Err(HsError::domain(MODULE, format!("fundamental_solution needs n > 2, got {n}")));
    }
    if !(z_norm > 0.0) {
        return Err(HsError::singular(MODULE, "fundamental_solution at z = 0"));
    }
    let nf = n as f64;
    Ok(z_norm.powf(2.0 - nf) / (nf * (nf - 2.0) * ball_volume(n)?))
}

/// `(K u)(z) = |z|^{2-n} u(z/|z|^2)`.
pub fn kelvin_transform<U>(u: U, n: u32) -> Result<impl Fn(&[f64]) -> Result<f64>>
where
    U: Fn(&[f64]) -> f64,
{
    if n < 3 {
        return Err(HsError::domain(MODULE, format!("kelvin_transform needs n > 2, got {n}")));
    }
    let nf = n as f64;
    Ok(move |z: &[f64]| -> Result<f64> {
        if z.len() != n as usize {
            return Err(HsError::domain(MODULE, "point dimension does not match n"));
        }
        let r2: f64 = z.iter().map(|c| c * c).sum();
        if r2 == 0.0 {
            return Err(HsError::singular(MODULE, "kelvin transform at z = 0"));
        }
        let inv: Vec<f64> = z.iter().map(|c| c / r2).collect();
        Ok(r2.powf((2.0 - nf) / 2.0) * u(&inv))
    })
}

/// Kelvin transform of a function of `(|x|, |y|)`; inversion preserves
/// cylindrical symmetry.
pub fn kelvin_cylindrical<U>(u: U, n: u32) -> Result<impl Fn(f64, f64) -> Result<f64>>
where
    U: Fn(f64, f64) -> f64,
{
    if n < 3 {
        return Err(HsError::domain(MODULE, format!("kelvin_transform needs n > 2, got {n}")));
    }
    let nf = n as f64;
    Ok(move |rho: f64, r: f64| -> Result<f64> {
        let r2 = rho * rho + r * r;
        if r2 == 0.0 {
            return Err(HsError::singular(MODULE, "kelvin transform at z = 0"));
        }
        Ok(r2.powf((2.0 - nf) / 2.0) * u(rho / r2, r / r2))
    })
}

/// Gradient `(d/d rho, d/d r)` of the Kelvin transform of a cylindrical `u`
/// with gradient `grad_u`:
/// `grad Ku = |z|^{-n} ((2-n) u(z*) z + (I - 2 zz^T/|z|^2) grad u(z*))`.
pub fn kelvin_cylindrical_gradient<U, G>(u: U, grad_u: G, n: u32) -> Result<impl Fn(f64, f64) -> Result<(f64, f64)>>
where
    U: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> (f64, f64),
{
    if n < 3 {
        return Err(HsError::domain(MODULE, format!("kelvin_transform needs n > 2, got {n}")));
    }
    let nf = n as f64;
    Ok(move |rho: f64, r: f64| -> Result<(f64, f64)> {
        let r2 = rho * rho + r * r;
        if r2 == 0.0 {
            return Err(HsError::singular(MODULE, "kelvin transform at z = 0"));
        }
        let (xs, ys) = (rho / r2, r / r2);
        let v = u(xs, ys);
        let (gx, gy) = grad_u(xs, ys);
        let dot = (rho * gx + r * gy) / r2;
        let scale = r2.powf(-nf / 2.0);
        Ok((
            scale * ((2.0 - nf) * v * rho + gx - 2.0 * dot * rho),
            scale * ((2.0 - nf) * v * r + gy - 2.0 * dot * r),
        ))
    })
}

/// `int_{S^{n-1}} f(omega) d omega` for `f` given on the `(rho, r)` quarter
/// circle (`f` is called with `r = 0` when `k = n`).
fn sphere_average<F: Fn(f64, f64) -> f64>(f: F, n: u32, k: u32, tol: f64) -> Result<f64> {
    if k == n {
        return Ok(sphere_measure(n)? * f(1.0, 0.0));
    }
    let (a, b) = ((k - 1) as i32, (n - k - 1) as i32);
    let sigma = sphere_measure(k)? * sphere_measure(n - k)?;
    let res = integrate(
        |th| {
            let (sn, cs) = th.sin_cos();
            f(cs, sn) * cs.powi(a) * sn.powi(b)
        },
        0.0,
        std::f64::consts::FRAC_PI_2,
        QuadOptions::with_tol(tol),
    )?;
    Ok(sigma * res.value)
}

/// Dirichlet energy of a cylindrical function over the annulus
/// `t0 <= |z| <= t1`, from its gradient `(d/d rho, d/d r)`.
pub fn annulus_energy<G>(grad: G, n: u32, k: u32, t0: f64, t1: f64, tol: f64) -> Result<f64>
where
    G: Fn(f64, f64) -> Result<(f64, f64)>,
{
    if k < 1 || k > n || !(t0 > 0.0 && t1 > t0 && t1.is_finite()) {
        return Err(HsError::domain(MODULE, format!("need 1 <= k <= n and 0 < t0 < t1, got ({n}, {k}, {t0}, {t1})")));
    }
    let failure = std::cell::RefCell::new(None);
    let res = integrate(
        |t| {
            let shell = sphere_average(
                |c, sn| match grad(t * c, t * sn) {
                    Ok((gx, gy)) => gx * gx + gy * gy,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    }
                },
                n,
                k,
                0.1 * tol,
            );
            match shell {
                Ok(v) => v * t.powi(n as i32 - 1),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        },
        t0,
        t1,
        QuadOptions::with_tol(tol),
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(res.value),
    }
}

/// Boundary term of the inversion identity
/// `E(Ku; t0 <= |z| <= t1) = E(u; 1/t1 <= |z| <= 1/t0) + B`, where
/// `B = (n-2) [int_{S^{n-1}} tau^{n-2} u(tau omega)^2 d omega]` taken from
/// `tau = 1/t1` to `tau = 1/t0`. Energy is preserved exactly only when `B`
/// vanishes.
pub fn kelvin_boundary_term<U>(u: U, n: u32, k: u32, t0: f64, t1: f64, tol: f64) -> Result<f64>
where
    U: Fn(f64, f64) -> f64,
{
    if n < 3 || !(t0 > 0.0 && t1 > t0 && t1.is_finite()) {
        return Err(HsError::domain(MODULE, format!("need n > 2 and 0 < t0 < t1, got ({n}, {t0}, {t1})")));
    }
    let nf = n as f64;
    let shell = |tau: f64| -> Result<f64> {
        let m = sphere_average(|c, sn| u(tau * c, tau * sn).powi(2), n, k, tol)?;
        Ok(tau.powf(nf - 2.0) * m)
    };
    Ok((nf - 2.0) * (shell(1.0 / t0)? - shell(1.0 / t1)?))
}

/// Residual of `Lap v + v^{n/(n-2)} sum_i c_i/|x_i|` for the three-subspace
/// family at one point, with the Laplacian in the three radial variables
/// taken by centred differences of step `h`.
pub fn three_subspace_residual(
    dims: [u32; 3],
    lambda: f64,
    shifts: [f64; 3],
    radii: [f64; 3],
    h: f64,
) -> Result<f64> {
    let n: u32 = dims.iter().sum();
    let nf = n as f64;
    let (v0, coef) = three_subspace_solution(dims, lambda, shifts, radii)?;
    let mut lap = 0.0;
    for i in 0..3 {
        let mut plus = radii;
        let mut minus = radii;
        plus[i] += h;
        minus[i] -= h;
        let vp = three_subspace_solution(dims, lambda, shifts, plus)?.0;
        let vm = three_subspace_solution(dims, lambda, shifts, minus)?.0;
        let second = (vp - 2.0 * v0 + vm) / (h * h);
        let first = (vp - vm) / (2.0 * h);
        lap += second + (dims[i] - 1) as f64 / radii[i] * first;
    }
    let forcing: f64 = (0..3).map(|i| coef[i] / radii[i]).sum();
    Ok(lap + v0.powf(nf / (nf - 2.0)) * forcing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        relative_error(a, b)
    }

    #[test]
    fn beta_full_examples() {
        assert!(rel(beta_integral_full(3, 2, 2.0, 1.0).unwrap(), PI * PI) < 1e-13);
        assert!(rel(beta_integral_full(3, 2, 2.0, 0.0).unwrap(), PI * PI) < 1e-13);
        let err = beta_integral_full(4, 2, 1.0, 0.0).unwrap_err();
        assert!(matches!(err, HsError::Divergent { .. }), "{err}");
        assert!(err.to_string().contains("m-(n-k)/2"));
        assert!(beta_integral_full(3, 3, 2.0, 0.0).is_err());
    }

    #[test]
    fn beta_full_s0_is_radial_in_rn() {
        use crate::special_fn::log_gamma;
        for n in 3..=6u32 {
            for k in 2..n {
                for m in [n as f64 / 2.0 + 0.3, 3.0, 4.5].into_iter().filter(|&m| m > n as f64 / 2.0) {
                    let pure = (n as f64 / 2.0 * PI.ln() + log_gamma(m - n as f64 / 2.0).unwrap()
                        - log_gamma(m).unwrap())
                    .exp();
                    let b = beta_integral_full(n, k, m, 0.0).unwrap();
                    assert!(rel(b, pure) < 1e-10, "n={n} k={k} m={m}");
                }
            }
        }
    }

    #[test]
    fn beta_radial_examples() {
        assert!(rel(beta_integral_radial(2, 2.0, 1.0).unwrap(), PI * PI / 2.0) < 1e-13);
        assert!(rel(beta_integral_radial(2, 2.0, 0.0).unwrap(), PI) < 1e-13);
        assert!(matches!(
            beta_integral_radial(2, 0.5, 0.0),
            Err(HsError::Divergent { .. })
        ));
    }

    #[test]
    fn constant_relations_hold() {
        let sc = SharpConstant::from_constant(3, 2, 0.7).unwrap();
        assert!(rel(sc.lambda, 0.7f64.powi(4)) < 1e-14);
        assert!(rel(sc.mu, 4.0 * sc.lambda) < 1e-14);
        let sc = SharpConstant::from_constant(5, 3, 1.3).unwrap();
        assert!(rel(sc.lambda, 1.3f64.powf(8.0 / 3.0)) < 1e-14);
        assert!(rel(sc.mu, 4.0 * sc.lambda / 9.0) < 1e-14);
        assert!(SharpConstant::from_constant(3, 1, 1.0).is_err());
        assert!(SharpConstant::from_constant(3, 2, 0.0).is_err());
    }

    #[test]
    fn extremal_at_origin() {
        let sc = SharpConstant::from_constant(3, 2, 0.9).unwrap();
        let p = ExtremalParams::centered(3, 2, 1.0).unwrap();
        let v = extremal_v(&p, &sc, 0.0, &[0.0]).unwrap();
        assert!(rel(v, 2.0 / (0.9 * 0.9)) < 1e-14);
    }

    #[test]
    fn extremal_far_field() {
        let sc = SharpConstant::from_constant(4, 2, 1.1).unwrap();
        let p = ExtremalParams::new(4, 2, 0.7, vec![0.3, -0.2]).unwrap();
        let ex = Extremal::new(p, &sc).unwrap();
        let amp = ex.far_field_amplitude();
        let big = 1e6;
        let v = ex.eval(big, &[0.3, big - 0.2]).unwrap();
        let zn = (2.0f64).sqrt() * big;
        assert!(rel(v * zn * zn, amp) < 1e-5);
    }

    #[test]
    fn extremal_rejects_mismatch() {
        let sc = SharpConstant::from_constant(4, 2, 1.0).unwrap();
        let p = ExtremalParams::centered(3, 2, 1.0).unwrap();
        assert!(Extremal::new(p, &sc).is_err());
        assert!(ExtremalParams::new(3, 2, 0.0, vec![0.0]).is_err());
        assert!(ExtremalParams::new(3, 2, 1.0, vec![]).is_err());
    }

    #[test]
    fn prop4_examples() {
        let p = Prop4Params::new(1, 1, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(p.n(), 4);
        assert_eq!((p.p_coef(), p.q_coef()), (2.0, 2.0));
        let p = Prop4Params::new(2, 1, 2.0, 1.0, 0.0).unwrap();
        assert_eq!((p.p_coef(), p.q_coef()), (24.0, 0.0));
        let p = Prop4Params::new(1, 1, 1.5, 0.0, 0.0).unwrap();
        let (v, (pc, qc)) = prop4_solution(&p, &[3.0, 4.0], &[0.0, 12.0]).unwrap();
        assert_eq!((pc, qc), (0.0, 0.0));
        // lambda^{2-n} |z|^{2-n} with |z| = 13
        assert!(rel(v, 1.5f64.powi(-2) * 13f64.powi(-2)) < 1e-14);
        assert!(matches!(
            prop4_solution(&p, &[0.0, 0.0], &[0.0, 0.0]),
            Err(HsError::Singularity { .. })
        ));
        let q = Prop4Params::new(1, 1, 1.0, -1.0, -2.0).unwrap();
        assert!(prop4_solution(&q, &[1.0, 0.0], &[0.0, 2.0]).is_err());
    }

    #[test]
    fn fundamental_solution_examples() {
        assert!(rel(fundamental_solution(3, 1.0).unwrap(), 1.0 / (4.0 * PI)) < 1e-14);
        // n = 4: 1/(8 omega_4) * 2^{-2}, omega_4 = pi^2/2
        assert!(rel(fundamental_solution(4, 2.0).unwrap(), 1.0 / (16.0 * PI * PI)) < 1e-14);
        for n in 3..7 {
            let a = fundamental_solution(n, 0.7).unwrap();
            let b = fundamental_solution(n, 1.4).unwrap();
            assert!(rel(b, 2f64.powf(2.0 - n as f64) * a) < 1e-14);
        }
        assert!(matches!(fundamental_solution(3, 0.0), Err(HsError::Singularity { .. })));
    }

    #[test]
    fn kelvin_energy_identity_on_annulus() {
        // u = exp(-rho^2 - 2 r^2) on R^2 x R^1
        let u = |x: f64, y: f64| (-x * x - 2.0 * y * y).exp();
        let gu = |x: f64, y: f64| (-2.0 * x * u(x, y), -4.0 * y * u(x, y));
        let (n, k) = (3, 2);
        let gk = kelvin_cylindrical_gradient(u, gu, n).unwrap();
        let lhs = annulus_energy(&gk, n, k, 1.0, 2.0, 1e-11).unwrap();
        let rhs = annulus_energy(|x, y| Ok(gu(x, y)), n, k, 0.5, 1.0, 1e-11).unwrap();
        let b = kelvin_boundary_term(u, n, k, 1.0, 2.0, 1e-12).unwrap();
        assert!(relative_error(lhs, rhs + b) < 1e-8, "{lhs} {rhs} {b}");
        // the gradient formula against differences of the transform itself
        let ku = kelvin_cylindrical(u, n).unwrap();
        let h = 1e-5;
        let (x, y) = (0.8, 1.1);
        let fd = (ku(x + h, y).unwrap() - ku(x - h, y).unwrap()) / (2.0 * h);
        assert!((fd - gk(x, y).unwrap().0).abs() < 1e-8);
    }

    #[test]
    fn kelvin_of_fundamental_profile_is_one() {
        let n = 5;
        let ku = kelvin_transform(|z: &[f64]| z.iter().map(|c| c * c).sum::<f64>().powf(-1.5), n).unwrap();
        let v = ku(&[0.3, 1.0, -2.0, 0.1, 0.5]).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        assert!(ku(&[0.0; 5]).is_err());
    }

    #[test]
    fn three_subspace_family_solves_its_equation() {
        let res = three_subspace_residual([2, 3, 2], 1.3, [0.4, 0.7, 0.2], [0.8, 1.1, 0.6], 1e-4).unwrap();
        let (v, _) = three_subspace_solution([2, 3, 2], 1.3, [0.4, 0.7, 0.2], [0.8, 1.1, 0.6]).unwrap();
        assert!(res.abs() < 1e-5 * v.abs().max(1.0), "{res}");
    }
}
