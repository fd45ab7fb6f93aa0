//! Finite differences on the quadrant `(rho, r) = (|x|, |y|)`.
//!
//! Nodes follow `rho_i = rho_max (i/N)^g`, `i = 1..=N`, so neither axis is a
//! node. Axis ghosts come from even reflection; the outer row and column use
//! one-sided stencils. All operations return new grids.

mod io;

pub use io::{read_csv, read_csv_str, to_csv_string, write_csv};

use crate::closed_forms::Prop4Params;
use crate::error::{HsError, Result};
use crate::special_fn::sphere_measure;

const MODULE: &str = "cylinder_grid";

/// Default stretching exponent toward the axes.
pub const DEFAULT_GRADING: f64 = 2.0;

/// Power-law stretching `x_i = x_max (i/N)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grading {
    pub exponent: f64,
}

impl Grading {
    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent >= 1.0 && exponent.is_finite()) {
            return Err(HsError::domain(MODULE, format!("grading = {exponent} must be >= 1")));
        }
        Ok(Self { exponent })
    }

    pub fn uniform() -> Self {
        Self { exponent: 1.0 }
    }

    pub fn nodes(&self, x_max: f64, count: usize) -> Vec<f64> {
        (1..=count)
            .map(|i| x_max * (i as f64 / count as f64).powf(self.exponent))
            .collect()
    }
}

impl Default for Grading {
    fn default() -> Self {
        Self {
            exponent: DEFAULT_GRADING,
        }
    }
}

/// Values on the cylindrical grid, stored row-major: `values[i * n_r + j]`
/// is `U(rho_i, r_j)`. When `k = n` there is no `r` direction and `values`
/// has one entry per `rho` node.
#[derive(Debug, Clone, PartialEq)]
pub struct CylGrid {
    pub n: u32,
    pub k: u32,
    pub rho_nodes: Vec<f64>,
    pub r_nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub grading: Grading,
}

fn check_axis(nodes: &[f64], name: &str) -> Result<()> {
    if nodes.first().is_some_and(|&x| !(x > 0.0)) {
        return Err(HsError::Grid(format!("{name} nodes must be positive")));
    }
    if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes.iter().any(|x| !x.is_finite()) {
        return Err(HsError::Grid(format!("{name} nodes must be finite and strictly increasing")));
    }
    Ok(())
}

impl CylGrid {
    /// Assembles a grid from explicit nodes, checking every invariant.
    pub fn from_parts(
        n: u32,
        k: u32,
        rho_nodes: Vec<f64>,
        r_nodes: Vec<f64>,
        values: Vec<f64>,
        grading: Grading,
    ) -> Result<Self> {
        if n < 3 || k < 1 || k > n {
            return Err(HsError::domain(MODULE, format!("need n >= 3, 1 <= k <= n, got ({n}, {k})")));
        }
        check_axis(&rho_nodes, "rho")?;
        check_axis(&r_nodes, "r")?;
        if (k == n) != r_nodes.is_empty() {
            return Err(HsError::Grid("r nodes must be empty exactly when k = n".into()));
        }
        if rho_nodes.is_empty() {
            return Err(HsError::Grid("no rho nodes".into()));
        }
        let expected = rho_nodes.len() * r_nodes.len().max(1);
        if values.len() != expected {
            return Err(HsError::Grid(format!("{} values for {expected} nodes", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(HsError::Grid("grid values must be finite".into()));
        }
        Ok(Self {
            n,
            k,
            rho_nodes,
            r_nodes,
            values,
            grading,
        })
    }

    /// `a = k - 1`.
    pub fn a(&self) -> f64 {
        self.k as f64 - 1.0
    }

    /// `b = n - k - 1` (meaningless when `k = n`).
    pub fn b(&self) -> f64 {
        self.n as f64 - self.k as f64 - 1.0
    }

    pub fn is_radial(&self) -> bool {
        self.r_nodes.is_empty()
    }

    pub fn n_rho(&self) -> usize {
        self.rho_nodes.len()
    }

    /// Number of `r` columns; 1 for the radial reduction.
    pub fn n_r(&self) -> usize {
        self.r_nodes.len().max(1)
    }

    pub fn rho_max(&self) -> f64 {
        *self.rho_nodes.last().expect("non-empty")
    }

    pub fn r_max(&self) -> Option<f64> {
        self.r_nodes.last().copied()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_r() + j
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.idx(i, j)]
    }

    /// `r_j`, or 0 for the radial reduction.
    #[inline]
    pub fn r_at(&self, j: usize) -> f64 {
        self.r_nodes.get(j).copied().unwrap_or(0.0)
    }

    /// Same nodes, values `f(rho, r)`.
    pub fn map_nodes<F: FnMut(f64, f64) -> f64>(&self, mut f: F) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.n_rho() {
            for j in 0..self.n_r() {
                values.push(f(self.rho_nodes[i], self.r_at(j)));
            }
        }
        Self {
            values,
            ..self.clone()
        }
    }

    /// Same nodes, fallible `f(rho, r)`; non-finite results are rejected.
    pub fn try_map_nodes<F: FnMut(f64, f64) -> Result<f64>>(&self, mut f: F) -> Result<Self> {
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.n_rho() {
            for j in 0..self.n_r() {
                let v = f(self.rho_nodes[i], self.r_at(j))?;
                if !v.is_finite() {
                    return Err(HsError::Grid(format!(
                        "non-finite value at (rho, r) = ({}, {})",
                        self.rho_nodes[i],
                        self.r_at(j)
                    )));
                }
                values.push(v);
            }
        }
        Ok(Self {
            values,
            ..self.clone()
        })
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::from_parts(
            self.n,
            self.k,
            self.rho_nodes.clone(),
            self.r_nodes.clone(),
            values,
            self.grading,
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Cylindrical cell measure of node `(i, j)` with density
    /// `rho^{a - shift}`: `sigma_k sigma_{n-k} int rho^{a-shift} r^b` over
    /// the node's dual cell.
    pub fn node_measures(&self, rho_shift: f64) -> Result<Vec<f64>> {
        let mr = dual_moments(&self.rho_nodes, self.a() - rho_shift)?;
        let (mrr, sig) = if self.is_radial() {
            (vec![1.0], sphere_measure(self.k)?)
        } else {
            (
                dual_moments(&self.r_nodes, self.b())?,
                sphere_measure(self.k)? * sphere_measure(self.n - self.k)?,
            )
        };
        let mut out = Vec::with_capacity(self.values.len());
        for wr in &mr {
            for wy in &mrr {
                out.push(sig * wr * wy);
            }
        }
        Ok(out)
    }
}

/// `int_{lo}^{hi} x^e dx` for `e > -1`.
pub(crate) fn power_moment(lo: f64, hi: f64, e: f64) -> f64 {
    if e == 0.0 {
        hi - lo
    } else {
        (hi.powf(e + 1.0) - lo.powf(e + 1.0)) / (e + 1.0)
    }
}

/// `int x^e` over the dual cells `[0, m_0], [m_0, m_1], ..., [m_{N-2}, x_{N-1}]`
/// where `m_i` is the midpoint of `x_i, x_{i+1}`.
pub(crate) fn dual_moments(nodes: &[f64], e: f64) -> Result<Vec<f64>> {
    if !(e > -1.0) {
        return Err(HsError::divergent(MODULE, format!("weight x^{e} is not integrable at 0")));
    }
    let n = nodes.len();
    let mut out = Vec::with_capacity(n);
    let mut lo = 0.0;
    for i in 0..n {
        let hi = if i + 1 < n { 0.5 * (nodes[i] + nodes[i + 1]) } else { nodes[i] };
        out.push(power_moment(lo, hi, e));
        lo = hi;
    }
    Ok(out)
}

/// `build_grid(n, k, rho_max, r_max, n_rho, n_r, grading)` with zero values.
/// `r_max` and `n_r` are ignored when `k = n`.
pub fn build_grid(
    n: u32,
    k: u32,
    rho_max: f64,
    r_max: f64,
    n_rho: usize,
    n_r: usize,
    grading: f64,
) -> Result<CylGrid> {
    let g = Grading::power(grading)?;
    if n < 3 || k < 1 || k > n {
        return Err(HsError::domain(MODULE, format!("need n >= 3, 1 <= k <= n, got ({n}, {k})")));
    }
    if n_rho < 8 || (k < n && n_r < 8) {
        return Err(HsError::domain(MODULE, format!("need at least 8 nodes per axis, got {n_rho} x {n_r}")));
    }
    if !(rho_max > 0.0 && rho_max.is_finite()) || (k < n && !(r_max > 0.0 && r_max.is_finite())) {
        return Err(HsError::domain(MODULE, "extents must be positive and finite"));
    }
    let rho_nodes = g.nodes(rho_max, n_rho);
    let r_nodes = if k == n { Vec::new() } else { g.nodes(r_max, n_r) };
    let len = n_rho * if k == n { 1 } else { n_r };
    CylGrid::from_parts(n, k, rho_nodes, r_nodes, vec![0.0; len], g)
}

/// Finite-difference weights for derivatives 0..=m at `x0` from nodes `xs`
/// (Fornberg's recursion). Returns `w[d][j]`.
pub(crate) fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let np = xs.len();
    let mut c = vec![vec![0.0; np]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..np {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for d in (1..=mn).rev() {
                    c[d][i] = c1 * (d as f64 * c[d - 1][i - 1] - c5 * c[d][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for d in (1..=mn).rev() {
                c[d][j] = (c4 * c[d][j] - d as f64 * c[d - 1][j]) / c3;
            }
            c[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    c
}

/// First and second derivative stencils along one axis.
#[derive(Debug, Clone)]
pub(crate) struct AxisStencil {
    pub d1: Vec<Vec<(usize, f64)>>,
    pub d2: Vec<Vec<(usize, f64)>>,
}

fn merge(entries: impl IntoIterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for (i, w) in entries {
        match out.iter_mut().find(|e| e.0 == i) {
            Some(e) => e.1 += w,
            None => out.push((i, w)),
        }
    }
    out
}

impl AxisStencil {
    pub fn new(nodes: &[f64]) -> Result<Self> {
        let n = nodes.len();
        if n < 3 {
            return Err(HsError::Grid(format!("stencils need >= 3 nodes per axis, got {n}")));
        }
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n);
        for i in 0..n {
            if i == 0 {
                // ghost at -x_0 carries U_0
                let xs = [-nodes[0], nodes[0], nodes[1]];
                let w = fd_weights(nodes[0], &xs, 2);
                let ids = [0, 0, 1];
                d1.push(merge(ids.iter().copied().zip(w[1].iter().copied())));
                d2.push(merge(ids.iter().copied().zip(w[2].iter().copied())));
            } else if i + 1 < n {
                let xs = [nodes[i - 1], nodes[i], nodes[i + 1]];
                let w = fd_weights(nodes[i], &xs, 2);
                let ids = [i - 1, i, i + 1];
                d1.push(ids.iter().copied().zip(w[1].iter().copied()).collect());
                d2.push(ids.iter().copied().zip(w[2].iter().copied()).collect());
            } else {
                let lo2 = n.saturating_sub(4);
                let xs2 = &nodes[lo2..];
                let w2 = fd_weights(nodes[i], xs2, 2);
                d2.push((lo2..n).zip(w2[2].iter().copied()).collect());
                let lo1 = n - 3;
                let w1 = fd_weights(nodes[i], &nodes[lo1..], 1);
                d1.push((lo1..n).zip(w1[1].iter().copied()).collect());
            }
        }
        Ok(Self { d1, d2 })
    }
}

fn apply_rho(grid: &CylGrid, st: &[Vec<(usize, f64)>], i: usize, j: usize) -> f64 {
    st[i].iter().map(|&(ii, w)| w * grid.value(ii, j)).sum()
}

fn apply_r(grid: &CylGrid, st: &[Vec<(usize, f64)>], i: usize, j: usize) -> f64 {
    st[j].iter().map(|&(jj, w)| w * grid.value(i, jj)).sum()
}

/// Discrete partial derivatives `(U_rho, U_r)`; `U_r` is zero for the
/// radial reduction.
pub fn gradient(grid: &CylGrid) -> Result<(CylGrid, CylGrid)> {
    let sr = AxisStencil::new(&grid.rho_nodes)?;
    let sy = if grid.is_radial() { None } else { Some(AxisStencil::new(&grid.r_nodes)?) };
    let mut gr = vec![0.0; grid.values.len()];
    let mut gy = vec![0.0; grid.values.len()];
    for i in 0..grid.n_rho() {
        for j in 0..grid.n_r() {
            let id = grid.idx(i, j);
            gr[id] = apply_rho(grid, &sr.d1, i, j);
            if let Some(sy) = &sy {
                gy[id] = apply_r(grid, &sy.d1, i, j);
            }
        }
    }
    Ok((grid.with_values(gr)?, grid.with_values(gy)?))
}

/// `U_rho_rho + (a/rho) U_rho + U_rr + (b/r) U_r`.
pub fn cyl_laplacian(grid: &CylGrid) -> Result<CylGrid> {
    let sr = AxisStencil::new(&grid.rho_nodes)?;
    let sy = if grid.is_radial() { None } else { Some(AxisStencil::new(&grid.r_nodes)?) };
    let (a, b) = (grid.a(), grid.b());
    let mut out = vec![0.0; grid.values.len()];
    for i in 0..grid.n_rho() {
        let rho = grid.rho_nodes[i];
        for j in 0..grid.n_r() {
            let mut l = apply_rho(grid, &sr.d2, i, j);
            if a != 0.0 {
                l += a / rho * apply_rho(grid, &sr.d1, i, j);
            }
            if let Some(sy) = &sy {
                l += apply_r(grid, &sy.d2, i, j);
                if b != 0.0 {
                    l += b / grid.r_nodes[j] * apply_r(grid, &sy.d1, i, j);
                }
            }
            out[grid.idx(i, j)] = l;
        }
    }
    grid.with_values(out)
}

/// `sigma_k sigma_{n-k} sum |grad U|^p rho^{k-1} r^{n-k-1}` with exact
/// dual-cell moments of the weight as quadrature weights.
pub fn gradient_energy(grid: &CylGrid, p_exp: f64) -> Result<f64> {
    if !(p_exp >= 1.0) {
        return Err(HsError::domain(MODULE, format!("p_exp = {p_exp} must be >= 1")));
    }
    let (gr, gy) = gradient(grid)?;
    let w = grid.node_measures(0.0)?;
    Ok(gr
        .values
        .iter()
        .zip(&gy.values)
        .zip(&w)
        .map(|((x, y), w)| w * (x * x + y * y).powf(p_exp / 2.0))
        .sum())
}

/// `int U^q rho^{-s}` with the same dual-cell weights.
pub fn weighted_lq(grid: &CylGrid, q: f64, s: f64) -> Result<f64> {
    let w = grid.node_measures(s)?;
    Ok(grid
        .values
        .iter()
        .zip(&w)
        .map(|(u, w)| w * u.abs().powf(q))
        .sum())
}

fn require_positive(grid: &CylGrid, what: &str) -> Result<()> {
    if let Some(pos) = grid.values.iter().position(|&v| !(v > 0.0)) {
        let (i, j) = (pos / grid.n_r(), pos % grid.n_r());
        return Err(HsError::domain(
            MODULE,
            format!(
                "{what} must be positive, found {} at (rho, r) = ({}, {})",
                grid.values[pos],
                grid.rho_nodes[i],
                grid.r_at(j)
            ),
        ));
    }
    Ok(())
}

/// `2*(s) = 2(n-s)/(n-2)`.
pub fn critical_power(n: u32, s: f64) -> f64 {
    2.0 * (n as f64 - s) / (n as f64 - 2.0)
}

/// `cyl_laplacian(U) + Lambda rho^{-s} U^{2*(s)-1}`.
pub fn el_residual(grid: &CylGrid, lambda: f64, s: f64) -> Result<CylGrid> {
    require_positive(grid, "el_residual values")?;
    let lap = cyl_laplacian(grid)?;
    let e = critical_power(grid.n, s) - 1.0;
    let mut out = lap.values;
    for i in 0..grid.n_rho() {
        let w = lambda * grid.rho_nodes[i].powf(-s);
        for j in 0..grid.n_r() {
            let id = grid.idx(i, j);
            out[id] += w * grid.values[id].powf(e);
        }
    }
    grid.with_values(out)
}

fn check_prop4_grid(grid: &CylGrid, params: &Prop4Params) -> Result<()> {
    if grid.n != params.n() || grid.k != params.a + 1 {
        return Err(HsError::domain(
            MODULE,
            format!(
                "grid (n, k) = ({}, {}) does not match a = {}, b = {}",
                grid.n, grid.k, params.a, params.b
            ),
        ));
    }
    Ok(())
}

/// Residual of the first-order form
/// `phi_rr_rr - ((a+b+2)/2)|grad phi|^2/phi + (a/rho) phi_rho + (b/r) phi_r
///  - 2 a lambda^2 alpha / rho - 2 b lambda^2 beta / r`,
/// where the leading term is the planar Laplacian `phi_rhorho + phi_rr`.
pub fn prop41_residual(phi: &CylGrid, params: &Prop4Params) -> Result<CylGrid> {
    check_prop4_grid(phi, params)?;
    require_positive(phi, "phi")?;
    let sr = AxisStencil::new(&phi.rho_nodes)?;
    let sy = AxisStencil::new(&phi.r_nodes)?;
    let (a, b) = (params.a as f64, params.b as f64);
    let l2 = params.lambda * params.lambda;
    let half_n = (a + b + 2.0) / 2.0;
    let mut out = vec![0.0; phi.values.len()];
    for i in 0..phi.n_rho() {
        let rho = phi.rho_nodes[i];
        for j in 0..phi.n_r() {
            let r = phi.r_nodes[j];
            let f = phi.value(i, j);
            let fx = apply_rho(phi, &sr.d1, i, j);
            let fy = apply_r(phi, &sy.d1, i, j);
            let lap = apply_rho(phi, &sr.d2, i, j) + apply_r(phi, &sy.d2, i, j);
            out[phi.idx(i, j)] = lap - half_n * (fx * fx + fy * fy) / f + a / rho * fx + b / r * fy
                - 2.0 * a * l2 * params.alpha / rho
                - 2.0 * b * l2 * params.beta / r;
        }
    }
    phi.with_values(out)
}

/// Residual `cyl_laplacian(v) + v^{n/(n-2)} (p/rho + q/r)` of the explicit
/// solution `v = phi^{(2-n)/2}`.
pub fn prop42_residual(v: &CylGrid, params: &Prop4Params) -> Result<CylGrid> {
    check_prop4_grid(v, params)?;
    require_positive(v, "v")?;
    let lap = cyl_laplacian(v)?;
    let nf = v.n as f64;
    let (p, q) = (params.p_coef(), params.q_coef());
    let mut out = lap.values;
    for i in 0..v.n_rho() {
        for j in 0..v.n_r() {
            let id = v.idx(i, j);
            out[id] += v.values[id].powf(nf / (nf - 2.0)) * (p / v.rho_nodes[i] + q / v.r_nodes[j]);
        }
    }
    v.with_values(out)
}

fn match_nodes(fine: &[f64], coarse: &[f64]) -> Result<Vec<usize>> {
    coarse
        .iter()
        .map(|&x| {
            let i = fine.partition_point(|&v| v < x - 1e-12 * x.abs().max(1.0));
            match fine.get(i) {
                Some(&v) if (v - x).abs() <= 1e-12 * x.abs().max(1.0) => Ok(i),
                _ => Err(HsError::Grid(format!("node {x} of the coarse grid is not a fine node"))),
            }
        })
        .collect()
}

/// Values of `fine` at the nodes of `coarse`, which must be a subset of the
/// fine nodes (as for nested uniform grids).
pub fn restrict_to(fine: &CylGrid, coarse: &CylGrid) -> Result<CylGrid> {
    if fine.n != coarse.n || fine.k != coarse.k {
        return Err(HsError::Grid("grids differ in (n, k)".into()));
    }
    let ri = match_nodes(&fine.rho_nodes, &coarse.rho_nodes)?;
    let rj = if coarse.is_radial() { vec![0] } else { match_nodes(&fine.r_nodes, &coarse.r_nodes)? };
    let mut values = Vec::with_capacity(ri.len() * rj.len());
    for &i in &ri {
        for &j in &rj {
            values.push(fine.value(i, j));
        }
    }
    coarse.with_values(values)
}

/// Max of `|field|` over nodes with `rho` and `r` in the given closed ranges,
/// always excluding the outer row and column (Dirichlet data). `None` when
/// no node qualifies.
pub fn max_norm_in(field: &CylGrid, rho_range: (f64, f64), r_range: (f64, f64)) -> Option<f64> {
    let mut best: Option<f64> = None;
    let nr_last = if field.is_radial() { usize::MAX } else { field.n_r() - 1 };
    for i in 0..field.n_rho().saturating_sub(1) {
        let rho = field.rho_nodes[i];
        if rho < rho_range.0 || rho > rho_range.1 {
            continue;
        }
        for j in 0..field.n_r() {
            if j == nr_last {
                continue;
            }
            let r = field.r_at(j);
            if !field.is_radial() && (r < r_range.0 || r > r_range.1) {
                continue;
            }
            let v = field.value(i, j).abs();
            best = Some(best.map_or(v, |b| b.max(v)));
        }
    }
    best
}

/// Max of `|field|` over nodes that are neither first nor last along any
/// axis.
pub fn interior_max_norm(field: &CylGrid) -> f64 {
    let mut m: f64 = 0.0;
    let (ni, nj) = (field.n_rho(), field.n_r());
    for i in 1..ni.saturating_sub(1) {
        if field.is_radial() {
            m = m.max(field.value(i, 0).abs());
            continue;
        }
        for j in 1..nj.saturating_sub(1) {
            m = m.max(field.value(i, j).abs());
        }
    }
    m
}
