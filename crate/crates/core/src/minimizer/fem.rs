//! Tensor-product bilinear elements on the graded quadrant.
//!
//! Along each axis the intervals are `[0, x_0]`, on which the function is
//! the constant `U_0` (the even extension across the axis), followed by
//! `[x_{i-1}, x_i]` with linear hat functions. The Dirichlet energy of the
//! interpolant is integrated exactly; the constraint integral by Gauss
//! points.

use crate::cylinder_grid::power_moment;
use crate::quadrature::gauss_legendre;

/// Gauss points per interval for the energy moments (exact for weights
/// `x^e` with integer `e <= 13`).
const ENERGY_POINTS: usize = 8;
/// Gauss points per interval for the constraint integral.
pub(crate) const CONSTRAINT_POINTS: usize = 4;

#[derive(Debug, Clone)]
pub(crate) struct Interval {
    /// Node indices along the axis; one entry for the axis interval.
    pub nodes: Vec<usize>,
    /// `int phi_i phi_j x^e` (energy weight).
    pub mass: Vec<Vec<f64>>,
    /// `int phi_i' phi_j' x^e`.
    pub stiff: Vec<Vec<f64>>,
    /// `(weight * x^{e_c}, basis values)` for the constraint weight `e_c`.
    pub qpts: Vec<(f64, Vec<f64>)>,
}

/// Intervals of one axis with energy weight `x^e` and constraint weight
/// `x^{e_c}`.
pub(crate) fn axis_intervals(x: &[f64], e: f64, e_c: f64) -> Vec<Interval> {
    let (ge, gw) = gauss_legendre(ENERGY_POINTS);
    let (ce, cw) = gauss_legendre(CONSTRAINT_POINTS);
    let mut out = Vec::with_capacity(x.len());
    out.push(Interval {
        nodes: vec![0],
        mass: vec![vec![power_moment(0.0, x[0], e)]],
        stiff: vec![vec![0.0]],
        qpts: vec![(power_moment(0.0, x[0], e_c), vec![1.0])],
    });
    for i in 1..x.len() {
        let (x0, x1) = (x[i - 1], x[i]);
        let h = x1 - x0;
        let (mut m00, mut m01, mut m11, mut total) = (0.0, 0.0, 0.0, 0.0);
        for (t, w) in ge.iter().zip(&gw) {
            let wt = w * h * (x0 + h * t).powf(e);
            m00 += wt * (1.0 - t) * (1.0 - t);
            m01 += wt * t * (1.0 - t);
            m11 += wt * t * t;
            total += wt;
        }
        let k = total / (h * h);
        let qpts = ce
            .iter()
            .zip(&cw)
            .map(|(t, w)| (w * h * (x0 + h * t).powf(e_c), vec![1.0 - t, *t]))
            .collect();
        out.push(Interval {
            nodes: vec![i - 1, i],
            mass: vec![vec![m00, m01], vec![m01, m11]],
            stiff: vec![vec![k, -k], vec![-k, k]],
            qpts,
        });
    }
    out
}

/// The single "interval" of a missing `r` direction.
pub(crate) fn trivial_axis() -> Vec<Interval> {
    vec![Interval {
        nodes: vec![0],
        mass: vec![vec![1.0]],
        stiff: vec![vec![0.0]],
        qpts: vec![(1.0, vec![1.0])],
    }]
}
