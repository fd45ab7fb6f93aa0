//! Gradient-flow minimizer on the (3,2) problem with s = 1.

use std::sync::OnceLock;

use hsnum::closed_forms::{annulus_energy, sharp_constant, Extremal, ExtremalParams};
use hsnum::minimizer::{
    fit_extremal, max_monotonicity_violation, minimize_rayleigh, GridSpec, InitMode, MinimizeOptions,
    MinimizeResult,
};
use hsnum::quadrature::relative_error;

fn spec(extent: f64, nodes: usize) -> GridSpec {
    GridSpec {
        grading: 2.0,
        ..GridSpec::square(extent, nodes)
    }
}

fn run(extent: f64, nodes: usize, init: InitMode) -> MinimizeResult {
    let opts = MinimizeOptions {
        init,
        ..MinimizeOptions::default()
    };
    minimize_rayleigh(3, 2, 1.0, &spec(extent, nodes), &opts).unwrap()
}

fn reference() -> &'static MinimizeResult {
    static RUN: OnceLock<MinimizeResult> = OnceLock::new();
    RUN.get_or_init(|| run(20.0, 128, InitMode::AnalyticExtremal { lambda: 1.0 }))
}

/// Share of the extremal's Dirichlet energy outside the radius `extent`.
fn tail_fraction(extent: f64) -> f64 {
    let sc = sharp_constant(3, 2).unwrap();
    let ext = Extremal::new(ExtremalParams::centered(3, 2, 1.0).unwrap(), &sc).unwrap();
    let grad = |x: f64, y: f64| Ok(ext.profile_gradient(x, y));
    let tail = annulus_energy(grad, 3, 2, extent, 1e9, 1e-10).unwrap();
    let total = annulus_energy(grad, 3, 2, 1e-9, 1e9, 1e-10).unwrap();
    tail / total
}

#[test]
fn flow_keeps_the_constraint_and_decreases_energy() {
    let r = reference();
    assert!(r.converged);
    assert!(r.history.iter().all(|h| h.defect <= 1e-10));
    assert!(r.history.windows(2).all(|w| w[1].energy <= w[0].energy * (1.0 + 1e-12)));
    assert_eq!(r.history.last().unwrap().energy, r.energy);
}

#[test]
fn minimizer_is_monotone_and_near_the_sharp_constant() {
    let r = reference();
    assert!(max_monotonicity_violation(&r.grid) <= 1e-8);
    let sc = sharp_constant(3, 2).unwrap();
    let err = relative_error(r.k_est, sc.constant);
    assert!(err <= 0.01, "K_est {} rel err {err:.3e}", r.k_est);
    // a conforming discretization only bounds the energy from above
    assert!(r.energy >= sc.min_energy());
}

#[test]
fn bump_start_reaches_the_same_minimum() {
    let r = reference();
    let bump = run(20.0, 128, InitMode::PositiveBump);
    let err = relative_error(bump.energy, r.energy);
    assert!(err <= 0.02, "bump E {} vs {} ({err:.3e})", bump.energy, r.energy);
    let fit = fit_extremal(&bump.grid).unwrap();
    assert!(fit.rel_l2 <= 0.05, "fit misfit {}", fit.rel_l2);
}

#[test]
fn dilated_start_reaches_the_same_minimum() {
    let r = reference();
    let dilated = run(20.0, 128, InitMode::AnalyticExtremal { lambda: 0.5 });
    let err = relative_error(dilated.energy, r.energy);
    assert!(err <= 0.01, "dilated E {} vs {} ({err:.3e})", dilated.energy, r.energy);
}

#[test]
fn halving_the_domain_costs_at_most_its_tail_energy() {
    let r = reference();
    let small = run(10.0, 64, InitMode::AnalyticExtremal { lambda: 1.0 });
    let tail = tail_fraction(10.0);
    let change = (small.energy - r.energy).abs() / r.energy;
    assert!(change <= tail, "|dE|/E = {change:.3e} exceeds tail fraction {tail:.3e}");
    assert!(tail_fraction(20.0) < tail);
}
