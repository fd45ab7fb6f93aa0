//! Closed forms against independent numerical routes.

use hsnum::asymptotics::{check_decay_bounds, fit_decay, log_radii, DecayMode, RayDirection, RaySamples};
use hsnum::closed_forms::{
    annulus_energy, beta_integral_radial, extremal_v, kelvin_boundary_term, kelvin_cylindrical,
    kelvin_cylindrical_gradient, sharp_constant, Extremal, ExtremalParams, Prop4Params,
};
use hsnum::cylinder_grid::{build_grid, interior_max_norm, prop42_residual};
use hsnum::minimizer::{gradient_direction_cosine, minimize_rayleigh, GridSpec, MinimizeOptions};
use hsnum::quadrature::{
    integrate_cylindrical, integrate_radial, newtonian_ball_center, radial_power_integral, relative_error,
    singular_newtonian_integral, CylindricalDomain, Extent,
};
use hsnum::special_fn::{log_gamma, sphere_measure};
use hsnum::{CylGrid, Grading, HsError};

#[test]
fn sharp_constant_routes_agree_beyond_three_dimensions() {
    for (n, k) in [(3, 2), (4, 2), (4, 3), (5, 2), (5, 4), (4, 4)] {
        let sc = sharp_constant(n, k).unwrap();
        let routes = sc.routes.as_ref().unwrap();
        assert!(routes.discrepancy_beta() <= 1e-9, "({n},{k}) beta route {}", routes.discrepancy_beta());
        assert!(relative_error(sc.min_energy(), sc.constant.powi(-2)) <= 1e-15);
        let nf = n as f64;
        assert!(relative_error(sc.lambda, sc.constant.powf(2.0 * (nf - 1.0) / (nf - 2.0))) <= 1e-14);
    }
    let sc = sharp_constant(3, 2).unwrap();
    assert!((sc.constant - 0.670938266965).abs() <= 1e-11);
}

#[test]
fn gaussian_moments_match_gamma() {
    // int_{R^k} exp(-|x|^2) |x|^{-s} dx = sigma_k / 2 Gamma((k-s)/2)
    for k in 1..=6u32 {
        for s in [0.0, 0.3, 0.9] {
            if s >= k as f64 {
                continue;
            }
            let q = integrate_radial(|r| (-r * r).exp(), k, s, 1e-12).unwrap();
            let exact = 0.5 * sphere_measure(k).unwrap() * log_gamma((k as f64 - s) / 2.0).unwrap().exp();
            assert!(relative_error(q.value, exact) <= 1e-10, "k={k} s={s}");
        }
    }
}

#[test]
fn radial_beta_identity() {
    for (k, a, s) in [(2, 2.0, 1.0), (3, 2.5, 0.5), (5, 4.0, 1.5), (4, 3.0, 0.0)] {
        let exact = beta_integral_radial(k, a, s).unwrap();
        let q = radial_power_integral(k, a, s, 1e-11).unwrap();
        assert!(relative_error(q.value, exact) <= 1e-9, "k={k} a={a} s={s}");
    }
}

#[test]
fn finite_box_is_part_of_whole_space() {
    let f = |x: f64, y: f64| (-(x * x + y * y)).exp();
    let whole = integrate_cylindrical(f, 4, 2, 0.5, CylindricalDomain::whole_space(4, 2), 1e-11).unwrap();
    let boxed = CylindricalDomain {
        rho_max: Extent::Finite(6.0),
        r_max: Some(Extent::Finite(6.0)),
    };
    let part = integrate_cylindrical(f, 4, 2, 0.5, boxed, 1e-11).unwrap();
    // exp(-36) leaves nothing outside the box at this tolerance
    assert!(relative_error(part.value, whole.value) <= 1e-10);
    let small = CylindricalDomain {
        rho_max: Extent::Finite(0.5),
        r_max: Some(Extent::Finite(0.5)),
    };
    assert!(integrate_cylindrical(f, 4, 2, 0.5, small, 1e-11).unwrap().value < part.value);
}

#[test]
fn newtonian_integral_matches_ball_potential_off_the_subspace() {
    for (n, k, z) in [
        (3u32, 2u32, vec![0.6, 0.0, 0.8]),
        (4, 2, vec![0.0, 0.0, 1.0, 1.0]),
        (5, 3, vec![1.0, 2.0, 0.0, 0.5, 0.1]),
    ] {
        let q = singular_newtonian_integral(&z, n, k, 0.0, 1e-10).unwrap();
        let zn = z.iter().map(|c| c * c).sum::<f64>().sqrt();
        let exact = newtonian_ball_center(n, zn).unwrap();
        assert!(relative_error(q.value, exact) <= 1e-8, "n={n} k={k}");
    }
    // away from the subspace the weight |xi|^{-1} stays within [1/(|xi|+R), 1/(|xi|-R)]
    let z = [1.0, 0.0, 0.5];
    let radius = 0.5 * z.iter().map(|c| c * c).sum::<f64>().sqrt();
    let plain = singular_newtonian_integral(&z, 3, 2, 0.0, 1e-9).unwrap().value;
    let weighted = singular_newtonian_integral(&z, 3, 2, 1.0, 1e-9).unwrap().value;
    assert!(weighted > plain / (1.0 + radius) && weighted < plain / (1.0 - radius));
}

#[test]
fn extremal_family_is_consistent() {
    let sc = sharp_constant(4, 2).unwrap();
    let params = ExtremalParams::new(4, 2, 1.3, vec![0.2, -0.1]).unwrap();
    let ext = Extremal::new(params.clone(), &sc).unwrap();
    let y = [0.7, -0.4];
    let v = extremal_v(&params, &sc, 0.9, &y).unwrap();
    assert!(relative_error(ext.eval(0.9, &y).unwrap(), v) <= 1e-15);

    let centred = Extremal::new(ExtremalParams::centered(4, 2, 1.3).unwrap(), &sc).unwrap();
    let t = 1e6;
    let far = centred.profile(t / 2f64.sqrt(), t / 2f64.sqrt()) * t * t;
    assert!(relative_error(far, centred.far_field_amplitude()) <= 1e-5);

    let radii = log_radii(1e2, 1e4, 21);
    let samples = RaySamples::from_fn(RayDirection::RAxis, &radii, |a, b| centred.profile(a, b)).unwrap();
    let fit = fit_decay(&samples).unwrap();
    let rep = check_decay_bounds(&fit, 4, 2.0, DecayMode::SolutionTwoSided, 0.05).unwrap();
    assert!(rep.pass, "exponent {}", rep.exponent);
    assert_eq!(rep.target, 2.0);
}

#[test]
fn harmonic_member_residual_is_second_order() {
    // alpha = beta = 0: the family reduces to the fundamental solution
    let p = Prop4Params::new(1, 2, 1.0, 0.0, 0.0).unwrap();
    let mut errs = Vec::new();
    for nodes in [101, 201, 401] {
        let x: Vec<f64> = (0..nodes).map(|i| 1.0 + i as f64 / (nodes - 1) as f64).collect();
        let mut v = Vec::new();
        for &a in &x {
            for &b in &x {
                v.push(p.profile(a, b).unwrap());
            }
        }
        let g = CylGrid::from_parts(p.n(), p.a + 1, x.clone(), x, v, Grading::uniform()).unwrap();
        errs.push(interior_max_norm(&prop42_residual(&g, &p).unwrap()));
    }
    for w in errs.windows(2) {
        assert!((w[0] / w[1] - 4.0).abs() < 0.3, "{errs:?}");
    }
}

#[test]
fn kelvin_annulus_identity_with_boundary_term() {
    let u = |x: f64, y: f64| 1.0 / (1.0 + x * x + y * y);
    let gu = |x: f64, y: f64| {
        let q = (1.0 + x * x + y * y).powi(2);
        (-2.0 * x / q, -2.0 * y / q)
    };
    for (n, k, t0, t1) in [(3u32, 2u32, 0.5, 3.0), (4, 3, 1.0, 2.0), (6, 2, 0.2, 0.9)] {
        let gk = kelvin_cylindrical_gradient(u, gu, n).unwrap();
        let lhs = annulus_energy(&gk, n, k, t0, t1, 1e-11).unwrap();
        let rhs = annulus_energy(|x, y| Ok(gu(x, y)), n, k, 1.0 / t1, 1.0 / t0, 1e-11).unwrap();
        let b = kelvin_boundary_term(u, n, k, t0, t1, 1e-12).unwrap();
        assert!(relative_error(lhs, rhs + b) <= 1e-8, "({n},{k}) {lhs} vs {rhs} + {b}");
    }
    // pure isometry when u is itself a Kelvin fixed point on the sphere pair
    let ku = kelvin_cylindrical(u, 3).unwrap();
    assert!(relative_error(ku(1.0, 0.0).unwrap(), u(1.0, 0.0)) <= 1e-15);
}

#[test]
fn gradient_direction_on_several_reductions() {
    for (n, k, s) in [(3u32, 2u32, 1.0), (4, 2, 0.5), (5, 3, 1.5), (3, 3, 1.0)] {
        let g = build_grid(n, k, 5.0, 5.0, 12, 12, 1.5).unwrap();
        let state = g.map_nodes(|x, y| (1.0 - x / 5.0) * (1.0 - y / 5.0) * (1.2 + (3.0 * x + 5.0 * y).sin()));
        let c = gradient_direction_cosine(&state, s, 1e-6).unwrap();
        assert!(c >= 0.999, "({n},{k},{s}) cosine {c}");
    }
}

#[test]
fn error_classes() {
    let spec = GridSpec::square(5.0, 16);
    let opts = MinimizeOptions::default();
    assert!(matches!(minimize_rayleigh(3, 2, 2.0, &spec, &opts), Err(HsError::Domain { .. })));
    assert!(matches!(beta_integral_radial(3, 1.0, 0.5), Err(HsError::Divergent { .. })));
    assert!(matches!(
        singular_newtonian_integral(&[0.0, 0.0, 0.0], 3, 2, 0.0, 1e-8),
        Err(HsError::Singularity { .. })
    ));
    assert!(matches!(
        integrate_radial(|r| 1.0 / (1.0 + r), 3, 0.0, 1e-10),
        Err(HsError::Divergent { .. })
    ));
}
