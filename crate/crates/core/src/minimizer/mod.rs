//! Rayleigh-quotient minimization on the cylindrical grid.
//!
//! The unknowns are nodal values of a bilinear interpolant on the graded
//! quadrant, extended as a constant across the axis strips `[0, rho_0]` and
//! `[0, r_0]`. The discrete functional is
//!
//! ```text
//! E(U) = U^T A U = int |grad u_h|^2,    N(U) = int u_h^q / |x|^s,
//! ```
//!
//! with `A` integrated exactly and `N` by Gauss points in each cell, so the
//! discrete quotient is the continuous one restricted to a subspace. The
//! outer row and column are homogeneous Dirichlet nodes. Normalized
//! gradient flow in the lumped-mass metric `D`,
//!
//! ```text
//! D dU/dt = -A U + (E/N) G(U),   then U <- max(U, 0) / N(U)^{1/q},
//! ```
//!
//! where `G_i = int u_h^{q-1} phi_i / |x|^s`, is advanced either explicitly
//! or with the stiff linear part implicit.

mod banded;
mod fem;

pub use banded::{BandCholesky, BandMatrix};

use crate::closed_forms::extremal_shift;
use crate::cylinder_grid::{build_grid, critical_power, CylGrid, DEFAULT_GRADING};
use crate::error::{HsError, Result};
use crate::exponents::{admissible, ExponentContext};
use crate::special_fn::sphere_measure;
use fem::{axis_intervals, trivial_axis, Interval};

const MODULE: &str = "minimizer";

/// Slack allowed on the energy history before a step counts as an increase.
pub const ENERGY_SLACK: f64 = 1e-12;

/// Node layout of the minimization domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub rho_max: f64,
    pub r_max: f64,
    pub n_rho: usize,
    pub n_r: usize,
    pub grading: f64,
}

impl GridSpec {
    pub fn square(extent: f64, nodes: usize) -> Self {
        Self {
            rho_max: extent,
            r_max: extent,
            n_rho: nodes,
            n_r: nodes,
            grading: DEFAULT_GRADING,
        }
    }

    pub fn build(&self, n: u32, k: u32) -> Result<CylGrid> {
        build_grid(n, k, self.rho_max, self.r_max, self.n_rho, self.n_r, self.grading)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitMode {
    /// `(1 - rho/L)(1 - r/L) exp(-(rho^2 + r^2) / w^2)` with `w = L/8`.
    PositiveBump,
    /// The profile `((rho + c)^2 + r^2)^{-(n-2)/2}`, `c = (n-2)/(4 a lambda^2)`.
    AnalyticExtremal { lambda: f64 },
    /// Values taken from a grid with the same nodes.
    UserGrid(CylGrid),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowScheme {
    /// Forward Euler in pseudo-time; the step is halved until it satisfies
    /// the Gershgorin stability bound.
    Explicit,
    /// Backward Euler for `-A U`, forward for the nonlinear term; one banded
    /// Cholesky factorization per step size.
    SemiImplicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    pub step: f64,
    pub max_iters: usize,
    /// Convergence when the relative energy change of one step drops below.
    pub tol: f64,
    pub init: InitMode,
    pub scheme: FlowScheme,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            step: 1.0,
            max_iters: 2000,
            tol: 1e-10,
            init: InitMode::AnalyticExtremal { lambda: 1.0 },
            scheme: FlowScheme::SemiImplicit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub energy: f64,
    /// `|N(U) - 1|` after projection.
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    /// Minimal discrete Dirichlet energy under `N(U) = 1`.
    pub energy: f64,
    pub k_est: f64,
    pub grid: CylGrid,
    pub history: Vec<HistoryEntry>,
    pub iterations: usize,
    pub converged: bool,
    /// Step size in use at the end (after any halving).
    pub final_step: f64,
}

/// `x^e` for `x >= 0`, with the common integer exponents done by `powi`.
fn pow_q(x: f64, e: f64) -> f64 {
    if e == e.round() && e.abs() < 16.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

/// Assembled discrete functional on a fixed set of nodes.
#[derive(Debug, Clone)]
pub struct RayleighProblem {
    pub template: CylGrid,
    pub s: f64,
    pub q: f64,
    /// Upper triangle (`p <= q`) of the stiffness matrix.
    stiffness: Vec<(usize, usize, f64)>,
    rho_iv: Vec<Interval>,
    r_iv: Vec<Interval>,
    sigma: f64,
    mass: Vec<f64>,
    /// Node index -> free index (None for Dirichlet nodes).
    free_of: Vec<Option<usize>>,
    free_nodes: Vec<usize>,
    free_cols: usize,
}

impl RayleighProblem {
    pub fn new(template: &CylGrid, s: f64) -> Result<Self> {
        let (n, k) = (template.n, template.k);
        let ctx = ExponentContext::new(n, k, 2.0, s);
        if !admissible(&ctx) {
            ctx.validate()?;
            return Err(HsError::domain(MODULE, format!("inadmissible (n, k, p, s) = ({n}, {k}, 2, {s})")));
        }
        let q = critical_power(n, s);
        let g = template;
        let (ni, nj) = (g.n_rho(), g.n_r());
        let radial = g.is_radial();
        let sigma = if radial {
            sphere_measure(k)?
        } else {
            sphere_measure(k)? * sphere_measure(n - k)?
        };
        let a = g.a();
        let rho_iv = axis_intervals(&g.rho_nodes, a, a - s);
        let r_iv = if radial {
            trivial_axis()
        } else {
            let b = g.b();
            axis_intervals(&g.r_nodes, b, b)
        };
        let mass = g.node_measures(0.0)?;

        let mut trip = Vec::with_capacity(10 * ni * nj);
        for ci in &rho_iv {
            for cj in &r_iv {
                for (a1, &i1) in ci.nodes.iter().enumerate() {
                    for (b1, &j1) in cj.nodes.iter().enumerate() {
                        let p = g.idx(i1, j1);
                        for (a2, &i2) in ci.nodes.iter().enumerate() {
                            for (b2, &j2) in cj.nodes.iter().enumerate() {
                                let qn = g.idx(i2, j2);
                                if qn < p {
                                    continue;
                                }
                                let v = sigma * (ci.stiff[a1][a2] * cj.mass[b1][b2] + ci.mass[a1][a2] * cj.stiff[b1][b2]);
                                if v != 0.0 {
                                    trip.push((p, qn, v));
                                }
                            }
                        }
                    }
                }
            }
        }
        trip.sort_unstable_by_key(|&(p, q, _)| (p, q));
        let mut stiffness: Vec<(usize, usize, f64)> = Vec::with_capacity(trip.len() / 2);
        for (p, qn, v) in trip {
            match stiffness.last_mut() {
                Some(last) if last.0 == p && last.1 == qn => last.2 += v,
                _ => stiffness.push((p, qn, v)),
            }
        }

        let free_cols = if radial { 1 } else { nj - 1 };
        let mut free_of = vec![None; ni * nj];
        let mut free_nodes = Vec::new();
        for i in 0..ni - 1 {
            for j in 0..free_cols {
                free_of[g.idx(i, j)] = Some(free_nodes.len());
                free_nodes.push(g.idx(i, j));
            }
        }
        Ok(Self {
            template: g.clone(),
            s,
            q,
            stiffness,
            rho_iv,
            r_iv,
            sigma,
            mass,
            free_of,
            free_nodes,
            free_cols,
        })
    }

    pub fn n_free(&self) -> usize {
        self.free_nodes.len()
    }

    /// `U^T A U`: the Dirichlet energy of the interpolant.
    pub fn energy(&self, u: &[f64]) -> f64 {
        self.stiffness
            .iter()
            .map(|&(p, q, w)| if p == q { w * u[p] * u[p] } else { 2.0 * w * u[p] * u[q] })
            .sum()
    }

    /// Visits every constraint quadrature point with its weight, the local
    /// node indices and basis values.
    fn for_each_qpoint(&self, mut f: impl FnMut(f64, &[(usize, f64)])) {
        let g = &self.template;
        let mut local = Vec::with_capacity(4);
        for ci in &self.rho_iv {
            for cj in &self.r_iv {
                for (wr, pr) in &ci.qpts {
                    for (wy, py) in &cj.qpts {
                        local.clear();
                        for (a, &i) in ci.nodes.iter().enumerate() {
                            for (b, &j) in cj.nodes.iter().enumerate() {
                                local.push((g.idx(i, j), pr[a] * py[b]));
                            }
                        }
                        f(self.sigma * wr * wy, &local);
                    }
                }
            }
        }
    }

    pub fn constraint(&self, u: &[f64]) -> f64 {
        let mut total = 0.0;
        self.for_each_qpoint(|w, local| {
            let v: f64 = local.iter().map(|&(p, phi)| phi * u[p]).sum();
            total += w * pow_q(v.abs(), self.q);
        });
        total
    }

    /// `N(U)` and `G_i = int u^{q-1} phi_i |x|^{-s}` for every node.
    fn constraint_with_gradient(&self, u: &[f64]) -> (f64, Vec<f64>) {
        let mut total = 0.0;
        let mut out = vec![0.0; u.len()];
        self.for_each_qpoint(|w, local| {
            let v: f64 = local.iter().map(|&(p, phi)| phi * u[p]).sum::<f64>().max(0.0);
            let c = w * pow_q(v, self.q - 1.0);
            total += c * v;
            for &(p, phi) in local {
                out[p] += c * phi;
            }
        });
        (total, out)
    }

    pub fn rayleigh(&self, u: &[f64]) -> f64 {
        self.energy(u) / self.constraint(u).powf(2.0 / self.q)
    }

    /// `A U` on all nodes.
    pub fn apply_stiffness(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for &(p, q, w) in &self.stiffness {
            out[p] += w * u[q];
            if p != q {
                out[q] += w * u[p];
            }
        }
        out
    }

    /// `-A U + (E/N) G(U)` on the free nodes: minus half the gradient of the
    /// Rayleigh quotient, up to the factor `N^{-2/q}`.
    pub fn force(&self, u: &[f64]) -> Vec<f64> {
        let au = self.apply_stiffness(u);
        let (nrm, gu) = self.constraint_with_gradient(u);
        let ratio = self.energy(u) / nrm;
        self.free_nodes.iter().map(|&p| -au[p] + ratio * gu[p]).collect()
    }

    /// Lumped masses of the free nodes.
    pub fn free_mass(&self) -> Vec<f64> {
        self.free_nodes.iter().map(|&p| self.mass[p]).collect()
    }

    /// `D + tau A` restricted to the free nodes.
    pub fn shifted_operator(&self, tau: f64) -> BandMatrix {
        let mut m = BandMatrix::zeros(self.n_free(), self.free_cols + 1);
        for (f, &p) in self.free_nodes.iter().enumerate() {
            m.add(f, f, self.mass[p]);
        }
        for &(p, q, w) in &self.stiffness {
            if let (Some(a), Some(b)) = (self.free_of[p], self.free_of[q]) {
                m.add(a, b, tau * w);
            }
        }
        m
    }

    /// Clamps at zero, zeroes the Dirichlet nodes and rescales to `N = 1`.
    pub fn project(&self, u: &mut [f64]) -> Result<()> {
        for (i, v) in u.iter_mut().enumerate() {
            if self.free_of[i].is_none() || !(*v > 0.0) {
                *v = 0.0;
            }
        }
        let nrm = self.constraint(u);
        if !(nrm > 0.0 && nrm.is_finite()) {
            return Err(HsError::Consistency {
                module: MODULE,
                msg: format!("constraint functional degenerated to {nrm}"),
            });
        }
        let scale = nrm.powf(-1.0 / self.q);
        u.iter_mut().for_each(|v| *v *= scale);
        Ok(())
    }

    fn initial_state(&self, init: &InitMode) -> Result<Vec<f64>> {
        let g = &self.template;
        let nf = g.n as f64;
        let vals = match init {
            InitMode::PositiveBump => {
                let (lr, ly) = (g.rho_max(), g.r_max().unwrap_or(1.0));
                let w = 0.125 * lr.max(ly);
                g.map_nodes(|x, y| {
                    let fy = if g.is_radial() { 1.0 } else { 1.0 - y / ly };
                    (1.0 - x / lr) * fy * (-(x * x + y * y) / (w * w)).exp()
                })
                .values
            }
            InitMode::AnalyticExtremal { lambda } => {
                if !(*lambda > 0.0) {
                    return Err(HsError::domain(MODULE, format!("lambda = {lambda} must be > 0")));
                }
                let c = extremal_shift(g.n, g.k) / (lambda * lambda);
                g.map_nodes(|x, y| ((x + c) * (x + c) + y * y).powf(-(nf - 2.0) / 2.0)).values
            }
            InitMode::UserGrid(user) => {
                if user.rho_nodes != g.rho_nodes || user.r_nodes != g.r_nodes {
                    return Err(HsError::Grid("initial grid nodes differ from the grid spec".into()));
                }
                user.values.clone()
            }
        };
        let mut u = vals;
        self.project(&mut u)?;
        Ok(u)
    }
}

/// `K_est = E_min^{-1/2}`.
pub fn recover_constant(energy: f64) -> Result<f64> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(HsError::Consistency {
            module: MODULE,
            msg: format!("minimal energy {energy} is not positive"),
        });
    }
    Ok(energy.powf(-0.5))
}

/// Step-size floor below which the flow gives up.
const MIN_STEP: f64 = 1e-14;

enum Stepper {
    Explicit { mass: Vec<f64> },
    Implicit { mass: Vec<f64>, chol: BandCholesky },
}

fn make_stepper(prob: &RayleighProblem, scheme: FlowScheme, tau: &mut f64) -> Result<Stepper> {
    let mass = prob.free_mass();
    match scheme {
        FlowScheme::Explicit => {
            let lmax = prob.shifted_operator(1.0).gershgorin_scaled(&mass) - 1.0;
            while *tau * lmax >= 2.0 && *tau > MIN_STEP {
                *tau *= 0.5;
            }
            Ok(Stepper::Explicit { mass })
        }
        FlowScheme::SemiImplicit => {
            let chol = prob.shifted_operator(*tau).cholesky()?;
            Ok(Stepper::Implicit { mass, chol })
        }
    }
}

fn advance(prob: &RayleighProblem, st: &Stepper, tau: f64, u: &[f64]) -> Result<Vec<f64>> {
    let mut next = u.to_vec();
    match st {
        Stepper::Explicit { mass } => {
            let f = prob.force(u);
            for (k, &p) in prob.free_nodes.iter().enumerate() {
                next[p] = u[p] + tau * f[k] / mass[k];
            }
        }
        Stepper::Implicit { mass, chol } => {
            let (nrm, gu) = prob.constraint_with_gradient(u);
            let ratio = prob.energy(u) / nrm;
            let rhs: Vec<f64> = prob
                .free_nodes
                .iter()
                .enumerate()
                .map(|(k, &p)| mass[k] * u[p] + tau * ratio * gu[p])
                .collect();
            let sol = chol.solve(&rhs);
            for (k, &p) in prob.free_nodes.iter().enumerate() {
                next[p] = sol[k];
            }
        }
    }
    prob.project(&mut next)?;
    Ok(next)
}

/// Normalized gradient flow for `inf { int |grad u|^2 : int u^q/|x|^s = 1 }`.
pub fn minimize_rayleigh(n: u32, k: u32, s: f64, spec: &GridSpec, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    if !(opts.step > 0.0 && opts.step.is_finite()) || !(opts.tol > 0.0) {
        return Err(HsError::domain(MODULE, "step and tol must be positive"));
    }
    let ctx = ExponentContext::new(n, k, 2.0, s);
    if !admissible(&ctx) {
        ctx.validate()?;
        return Err(HsError::domain(MODULE, format!("inadmissible (n, k, p, s) = ({n}, {k}, 2, {s})")));
    }
    let template = spec.build(n, k)?;
    let prob = RayleighProblem::new(&template, s)?;
    let mut u = prob.initial_state(&opts.init)?;
    let mut energy = prob.energy(&u);
    let mut history = vec![HistoryEntry {
        iteration: 0,
        energy,
        defect: (prob.constraint(&u) - 1.0).abs(),
    }];
    let mut tau = opts.step;
    let mut stepper = make_stepper(&prob, opts.scheme, &mut tau)?;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        iterations += 1;
        let next = advance(&prob, &stepper, tau, &u)?;
        let e_next = prob.energy(&next);
        if e_next > energy * (1.0 + ENERGY_SLACK) {
            tau *= 0.5;
            if tau < MIN_STEP {
                break;
            }
            stepper = make_stepper(&prob, opts.scheme, &mut tau)?;
            continue;
        }
        let change = (energy - e_next) / energy;
        u = next;
        energy = e_next;
        history.push(HistoryEntry {
            iteration: iterations,
            energy,
            defect: (prob.constraint(&u) - 1.0).abs(),
        });
        if change < opts.tol {
            converged = true;
            break;
        }
    }

    let grid = template.with_values(u)?;
    let result = MinimizeResult {
        energy,
        k_est: recover_constant(energy)?,
        grid,
        history,
        iterations,
        converged,
        final_step: tau,
    };
    if !converged {
        return Err(HsError::MinimizerNotConverged(Box::new(result)));
    }
    if let Some(&p) = prob.free_nodes.iter().find(|&&p| !(result.grid.values[p] > 0.0)) {
        let (i, j) = (p / result.grid.n_r(), p % result.grid.n_r());
        return Err(HsError::Consistency {
            module: MODULE,
            msg: format!(
                "minimizer vanishes in the interior at (rho, r) = ({}, {})",
                result.grid.rho_nodes[i],
                result.grid.r_at(j)
            ),
        });
    }
    Ok(result)
}

/// Cosine between the flow force `-A U + (E/N) G(U)` and `-grad R` from
/// centred differences of step `h` relative to each value; the two are
/// parallel up to rounding and truncation.
pub fn gradient_direction_cosine(state: &CylGrid, s: f64, h: f64) -> Result<f64> {
    let prob = RayleighProblem::new(state, s)?;
    let mut u = state.values.clone();
    for (i, v) in u.iter_mut().enumerate() {
        if prob.free_of[i].is_none() {
            *v = 0.0;
        }
    }
    let force = prob.force(&u);
    let mut fd = Vec::with_capacity(force.len());
    for &p in &prob.free_nodes {
        let base = u[p];
        let dh = h * base.abs().max(1e-3);
        u[p] = base + dh;
        let rp = prob.rayleigh(&u);
        u[p] = base - dh;
        let rm = prob.rayleigh(&u);
        u[p] = base;
        fd.push(-(rp - rm) / (2.0 * dh));
    }
    let dot: f64 = force.iter().zip(&fd).map(|(a, b)| a * b).sum();
    let na: f64 = force.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nb: f64 = fd.iter().map(|b| b * b).sum::<f64>().sqrt();
    Ok(dot / (na * nb))
}

/// Largest increase of the profile along `rho` (fixed `r`) or along `r`
/// (fixed `rho`); zero for a non-increasing profile.
pub fn max_monotonicity_violation(grid: &CylGrid) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..grid.n_rho() {
        for j in 0..grid.n_r() {
            let v = grid.value(i, j);
            if i + 1 < grid.n_rho() {
                worst = worst.max(grid.value(i + 1, j) - v);
            }
            if j + 1 < grid.n_r() && !grid.is_radial() {
                worst = worst.max(grid.value(i, j + 1) - v);
            }
        }
    }
    worst
}

/// Best match of a grid by `A ((rho + c)^2 + r^2)^{-(n-2)/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalFit {
    pub shift: f64,
    pub amplitude: f64,
    /// Dilation matching the shift: `c = (n-2)/(4 a lambda^2)`.
    pub lambda: f64,
    /// Relative misfit in the L^2 norm weighted by `|x|^{-1} u^{q-2}`.
    pub rel_l2: f64,
}

/// Fits the extremal family (dilation and amplitude; the grid is centred
/// in `y`) to `grid` by golden-section search on `ln c`.
pub fn fit_extremal(grid: &CylGrid) -> Result<ExtremalFit> {
    if grid.k < 2 {
        return Err(HsError::domain(MODULE, "extremal fit needs k >= 2"));
    }
    // The family extremizes the s = 1 problem; misfits are measured in the
    // metric of its constraint, which unlike plain L^2 stays finite as the
    // domain grows.
    let q = critical_power(grid.n, 1.0);
    let w: Vec<f64> = grid
        .node_measures(1.0)?
        .iter()
        .zip(&grid.values)
        .map(|(m, u)| m * u.max(0.0).powf(q - 2.0))
        .collect();
    let nf = grid.n as f64;
    let uu: f64 = grid.values.iter().zip(&w).map(|(u, m)| m * u * u).sum();
    if !(uu > 0.0) {
        return Err(HsError::domain(MODULE, "cannot fit a zero grid"));
    }
    let misfit = |lnc: f64| -> (f64, f64) {
        let c = lnc.exp();
        let (mut uw, mut ww) = (0.0, 0.0);
        for i in 0..grid.n_rho() {
            let x = grid.rho_nodes[i] + c;
            for j in 0..grid.n_r() {
                let y = grid.r_at(j);
                let id = grid.idx(i, j);
                let prof = (x * x + y * y).powf(-(nf - 2.0) / 2.0);
                uw += w[id] * grid.values[id] * prof;
                ww += w[id] * prof * prof;
            }
        }
        let amp = uw / ww;
        (((uu - uw * amp) / uu).max(0.0).sqrt(), amp)
    };
    let (lo, hi) = (grid.rho_nodes[0].ln(), grid.rho_max().ln());
    let scan = 64;
    let mut best = (f64::INFINITY, lo);
    for t in 0..=scan {
        let x = lo + (hi - lo) * t as f64 / scan as f64;
        let e = misfit(x).0;
        if e < best.0 {
            best = (e, x);
        }
    }
    let dx = (hi - lo) / scan as f64;
    let (mut a, mut b) = (best.1 - dx, best.1 + dx);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (misfit(c).0, misfit(d).0);
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = misfit(c).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = misfit(d).0;
        }
    }
    let lnc = 0.5 * (a + b);
    let (rel_l2, amplitude) = misfit(lnc);
    let shift = lnc.exp();
    Ok(ExtremalFit {
        shift,
        amplitude,
        lambda: (extremal_shift(grid.n, grid.k) / shift).sqrt(),
        rel_l2,
    })
}
