//! Power-law decay fits along rays and the local sup/mean ratio.

use std::fmt;

use crate::cylinder_grid::CylGrid;
use crate::error::{HsError, Result};

const MODULE: &str = "asymptotics";

/// Default tolerance of [`check_decay_bounds`].
pub const DEFAULT_DECAY_TOL: f64 = 0.1;

/// Smallest accepted ratio of the largest to the smallest radius (three
/// octaves, about 0.9 decades).
pub const MIN_SPAN: f64 = 8.0;

/// A fit is conclusive when its coefficient of determination reaches this.
pub const MIN_R_SQUARED: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayDirection {
    RhoAxis,
    RAxis,
    Diagonal,
}

impl RayDirection {
    /// Unit vector `(d_rho, d_r)`.
    pub fn unit(&self) -> (f64, f64) {
        match self {
            RayDirection::RhoAxis => (1.0, 0.0),
            RayDirection::RAxis => (0.0, 1.0),
            RayDirection::Diagonal => (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rho-axis" | "rho" => Ok(RayDirection::RhoAxis),
            "r-axis" | "r" => Ok(RayDirection::RAxis),
            "diagonal" => Ok(RayDirection::Diagonal),
            other => Err(HsError::Parse(format!("unknown ray direction '{other}'"))),
        }
    }
}

impl fmt::Display for RayDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RayDirection::RhoAxis => "rho-axis",
            RayDirection::RAxis => "r-axis",
            RayDirection::Diagonal => "diagonal",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaySamples {
    pub direction: RayDirection,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl RaySamples {
    pub fn new(direction: RayDirection, radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(HsError::Fit(format!("{} radii but {} values", radii.len(), values.len())));
        }
        if radii.first().is_some_and(|&r| !(r > 0.0)) || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(HsError::Fit("radii must be positive and strictly increasing".into()));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(HsError::Fit(format!("sample value {v} is not positive")));
        }
        Ok(Self {
            direction,
            radii,
            values,
        })
    }

    /// Samples of `f(rho, r)` at the given radii along `direction`.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(direction: RayDirection, radii: &[f64], f: F) -> Result<Self> {
        let (dx, dy) = direction.unit();
        let values = radii.iter().map(|&t| f(t * dx, t * dy)).collect();
        Self::new(direction, radii.to_vec(), values)
    }

    /// Samples of a grid by bilinear interpolation.
    pub fn from_grid(grid: &CylGrid, direction: RayDirection, radii: &[f64]) -> Result<Self> {
        let (dx, dy) = direction.unit();
        let mut values = Vec::with_capacity(radii.len());
        for &t in radii {
            let v = interpolate(grid, t * dx, t * dy)
                .ok_or_else(|| HsError::Grid(format!("radius {t} along {direction} leaves the grid")))?;
            values.push(v);
        }
        Self::new(direction, radii.to_vec(), values)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = format!("# direction={}\nradius,value\n", self.direction);
        for (t, v) in self.radii.iter().zip(&self.values) {
            out.push_str(&format!("{t:.16e},{v:.16e}\n"));
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut direction = RayDirection::RAxis;
        let (mut radii, mut values) = (Vec::new(), Vec::new());
        let mut header = false;
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some(d) = meta.trim().strip_prefix("direction=") {
                    direction = RayDirection::parse(d.trim())?;
                }
                continue;
            }
            if !header {
                if line != "radius,value" {
                    return Err(HsError::Parse("expected header 'radius,value'".into()));
                }
                header = true;
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| HsError::Parse(format!("line {}: expected 2 fields", no + 1)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| HsError::Parse(format!("line {}: '{s}': {e}", no + 1)))
            };
            radii.push(parse(a)?);
            values.push(parse(b)?);
        }
        Self::new(direction, radii, values)
    }
}

/// `count` log-spaced radii from `lo` to `hi` inclusive.
pub fn log_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1).max(1) as f64).exp())
        .collect()
}

fn bracket(nodes: &[f64], x: f64) -> Option<(usize, usize, f64)> {
    let last = *nodes.last()?;
    if x > last || x < 0.0 {
        return None;
    }
    if x <= nodes[0] {
        // even reflection: flat between the axis and the first node
        return Some((0, 0, 0.0));
    }
    let hi = nodes.partition_point(|&v| v < x);
    let lo = hi - 1;
    Some((lo, hi, (x - nodes[lo]) / (nodes[hi] - nodes[lo])))
}

/// Bilinear interpolation of grid values; `None` outside the grid.
pub fn interpolate(grid: &CylGrid, rho: f64, r: f64) -> Option<f64> {
    let (i0, i1, tx) = bracket(&grid.rho_nodes, rho)?;
    if grid.is_radial() {
        return Some((1.0 - tx) * grid.value(i0, 0) + tx * grid.value(i1, 0));
    }
    let (j0, j1, ty) = bracket(&grid.r_nodes, r)?;
    let v0 = (1.0 - tx) * grid.value(i0, j0) + tx * grid.value(i1, j0);
    let v1 = (1.0 - tx) * grid.value(i0, j1) + tx * grid.value(i1, j1);
    Some((1.0 - ty) * v0 + ty * v1)
}

/// Radius along `direction` where `f` first drops to half its value at the
/// origin, located by bisection on `[0, t_max]`.
pub fn half_value_radius<F: Fn(f64) -> f64>(f: F, t_max: f64) -> Result<f64> {
    let half = 0.5 * f(0.0);
    if !(half > 0.0) {
        return Err(HsError::Fit("profile is not positive at the origin".into()));
    }
    if f(t_max) > half {
        return Err(HsError::Fit(format!("profile stays above half its centre value up to {t_max}")));
    }
    let (mut lo, mut hi) = (0.0, t_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Core scale of a grid profile along a ray (half-value radius).
pub fn grid_core_scale(grid: &CylGrid, direction: RayDirection) -> Result<f64> {
    let (dx, dy) = direction.unit();
    let t_max = match direction {
        RayDirection::RhoAxis => grid.rho_max(),
        RayDirection::RAxis => grid.r_max().unwrap_or(grid.rho_max()),
        RayDirection::Diagonal => grid.rho_max().min(grid.r_max().unwrap_or(grid.rho_max())) * std::f64::consts::SQRT_2,
    };
    half_value_radius(|t| interpolate(grid, t * dx, t * dy).unwrap_or(0.0), t_max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Decay rate `e` in `value ~ amplitude * radius^{-e}`.
    pub exponent: f64,
    pub amplitude: f64,
    pub r_squared: f64,
}

impl DecayFit {
    pub fn is_conclusive(&self) -> bool {
        self.r_squared >= MIN_R_SQUARED
    }
}

/// Least squares of `ln value` against `ln radius`.
pub fn fit_decay(samples: &RaySamples) -> Result<DecayFit> {
    let m = samples.radii.len();
    if m < 4 {
        return Err(HsError::Fit(format!("need at least 4 samples, got {m}")));
    }
    let span = samples.radii[m - 1] / samples.radii[0];
    if span < MIN_SPAN * (1.0 - 1e-12) {
        return Err(HsError::Fit(format!("radii span a factor {span} < {MIN_SPAN}")));
    }
    if samples.values.iter().any(|v| !(*v > 0.0)) {
        return Err(HsError::Fit("non-positive sample value".into()));
    }
    let xs: Vec<f64> = samples.radii.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = samples.values.iter().map(|v| v.ln()).collect();
    let mf = m as f64;
    let xm = xs.iter().sum::<f64>() / mf;
    let ym = ys.iter().sum::<f64>() / mf;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ym) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = if syy <= 1e-28 * (1.0 + ym * ym) * mf {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        exponent: -slope,
        amplitude: intercept.exp(),
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayMode {
    /// `exponent >= n - 2 - tol` (p = 2).
    SubsolutionUpper,
    /// `|exponent - (n - 2)| <= tol` (p = 2).
    SolutionTwoSided,
    /// `exponent >= (n - p)/(p - 1) - tol`.
    GeneralP,
}

impl DecayMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "subsolution-upper" => Ok(DecayMode::SubsolutionUpper),
            "solution-two-sided" => Ok(DecayMode::SolutionTwoSided),
            "general-p" => Ok(DecayMode::GeneralP),
            other => Err(HsError::Parse(format!("unknown decay mode '{other}'"))),
        }
    }
}

impl fmt::Display for DecayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecayMode::SubsolutionUpper => "subsolution-upper",
            DecayMode::SolutionTwoSided => "solution-two-sided",
            DecayMode::GeneralP => "general-p",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    pub mode: DecayMode,
    pub exponent: f64,
    /// `n - 2` or `(n - p)/(p - 1)`.
    pub target: f64,
    pub tol: f64,
    pub pass: bool,
}

pub fn check_decay_bounds(fit: &DecayFit, n: u32, p: f64, mode: DecayMode, tol: f64) -> Result<DecayReport> {
    if !fit.is_conclusive() {
        return Err(HsError::Fit(format!(
            "inconclusive fit: r^2 = {} < {MIN_R_SQUARED}",
            fit.r_squared
        )));
    }
    let nf = n as f64;
    if !(p > 1.0 && p < nf) {
        return Err(HsError::domain(MODULE, format!("p = {p} outside (1, {n})")));
    }
    if mode != DecayMode::GeneralP && p != 2.0 {
        return Err(HsError::domain(MODULE, format!("{mode} is stated for p = 2, got {p}")));
    }
    let target = match mode {
        DecayMode::GeneralP => (nf - p) / (p - 1.0),
        _ => nf - 2.0,
    };
    let pass = match mode {
        DecayMode::SolutionTwoSided => (fit.exponent - target).abs() <= tol,
        _ => fit.exponent >= target - tol,
    };
    Ok(DecayReport {
        mode,
        exponent: fit.exponent,
        target,
        tol,
        pass,
    })
}

/// `sup_{B(z, R/2)} u / (mean_{B(z, R)} u^{q0})^{1/q0}` with `R = |z|/2`.
///
/// The centre sits on the diagonal `rho = r` (on the `rho` axis for the
/// radial reduction). Balls are disks in the `(rho, r)` quadrant; the mean
/// uses the cylindrical node measures of the nodes inside.
pub fn local_sup_ratio(grid: &CylGrid, center_radius: f64, q0: f64, p: f64) -> Result<f64> {
    if !(q0 >= p) {
        return Err(HsError::domain(MODULE, format!("q0 = {q0} must be >= p = {p}")));
    }
    if !(center_radius > 0.0) {
        return Err(HsError::domain(MODULE, "centre radius must be positive"));
    }
    let big_r = 0.5 * center_radius;
    let (cx, cy) = if grid.is_radial() {
        (center_radius, 0.0)
    } else {
        let (dx, dy) = RayDirection::Diagonal.unit();
        (center_radius * dx, center_radius * dy)
    };
    let fits_rho = cx + big_r <= grid.rho_max();
    let fits_r = grid.is_radial() || cy + big_r <= grid.r_max().unwrap_or(0.0);
    if !(fits_rho && fits_r) {
        return Err(HsError::Grid(format!("ball of radius {big_r} around |z| = {center_radius} leaves the grid")));
    }
    let w = grid.node_measures(0.0)?;
    let (mut sup, mut mass, mut integral) = (f64::NEG_INFINITY, 0.0, 0.0);
    let mut inner = 0usize;
    for i in 0..grid.n_rho() {
        for j in 0..grid.n_r() {
            let dx = grid.rho_nodes[i] - cx;
            let dy = grid.r_at(j) - cy;
            let d2 = dx * dx + dy * dy;
            if d2 > big_r * big_r {
                continue;
            }
            let id = grid.idx(i, j);
            let u = grid.values[id].abs();
            mass += w[id];
            integral += w[id] * u.powf(q0);
            if d2 <= 0.25 * big_r * big_r {
                sup = sup.max(u);
                inner += 1;
            }
        }
    }
    if inner == 0 || !(mass > 0.0) {
        return Err(HsError::Grid(format!("no grid nodes inside the ball around |z| = {center_radius}")));
    }
    let mean = (integral / mass).powf(1.0 / q0);
    if !(mean > 0.0) {
        return Err(HsError::domain(MODULE, "field vanishes on the ball"));
    }
    Ok(sup / mean)
}
