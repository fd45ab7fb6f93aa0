//! Randomized invariants of the public API.

use hsnum::asymptotics::{fit_decay, log_radii, RayDirection, RaySamples};
use hsnum::closed_forms::{beta_integral_full, kelvin_cylindrical, kelvin_transform};
use hsnum::cylinder_grid::{build_grid, read_csv_str, to_csv_string};
use hsnum::exponents::{admissible, aux_exponents, critical_pair, hs_conjugate, ExponentContext};
use hsnum::quadrature::relative_error;
use hsnum::special_fn::{ball_volume, beta, log_gamma, sphere_measure};
use hsnum::Grading;
use proptest::prelude::*;

/// Admissible `(n, k, p, s)` contexts.
fn context() -> impl Strategy<Value = ExponentContext> {
    (3u32..=9)
        .prop_flat_map(|n| (Just(n), 2..=n, 0.01f64..0.99, 0.0f64..1.0))
        .prop_map(|(n, k, pf, sf)| {
            let p = 1.0 + pf * (n as f64 - 1.0);
            let s = sf * p.min(k as f64 - 1e-6);
            ExponentContext::new(n, k, p, s)
        })
        .prop_filter("admissible", admissible)
}

proptest! {
    #[test]
    fn conjugate_identities(ctx in context()) {
        let rep = aux_exponents(&ctx).unwrap();
        prop_assert!(relative_error(rep.r * ctx.p, rep.p_star_rs()) <= 1e-12);
        prop_assert!((1.0 / rep.r + rep.r_prime.reciprocal() - 1.0).abs() <= 1e-12);
        prop_assert!((1.0 / ctx.p + 1.0 / rep.p_prime - 1.0).abs() <= 1e-12);
        prop_assert!(rep.r >= 1.0);
        let (r, _) = critical_pair(ctx.p, ctx.s, ctx.n).unwrap();
        prop_assert_eq!(r, rep.r);
    }

    #[test]
    fn conjugate_decreases_in_s(ctx in context(), t in 0.0f64..1.0) {
        let (p, n) = (ctx.p, ctx.n);
        let s1 = t * ctx.s;
        let a = hs_conjugate(p, s1, n).unwrap();
        let b = hs_conjugate(p, ctx.s, n).unwrap();
        prop_assert!(a >= b);
        prop_assert!(b >= p * (1.0 - 1e-12));
        // the endpoint s = 0 is the Sobolev exponent
        let sob = hs_conjugate(p, 0.0, n).unwrap();
        prop_assert!(relative_error(sob, n as f64 * p / (n as f64 - p)) <= 1e-14);
    }

    #[test]
    fn log_gamma_recurrence(x in 0.05f64..60.0) {
        let lhs = log_gamma(x + 1.0).unwrap();
        let rhs = log_gamma(x).unwrap() + x.ln();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn beta_is_symmetric_and_satisfies_pascal(a in 0.1f64..20.0, b in 0.1f64..20.0) {
        let (x, y) = (beta(a, b).unwrap(), beta(b, a).unwrap());
        prop_assert!(relative_error(x, y) <= 1e-13);
        // B(a, b) = B(a+1, b) + B(a, b+1)
        let sum = beta(a + 1.0, b).unwrap() + beta(a, b + 1.0).unwrap();
        prop_assert!(relative_error(sum, x) <= 1e-12);
    }

    #[test]
    fn sphere_and_ball_measures(m in 1u32..40) {
        let s = sphere_measure(m).unwrap();
        let v = ball_volume(m).unwrap();
        prop_assert!(relative_error(s, m as f64 * v) <= 1e-13);
        // |S^{m+1}| = 2 pi |B^m|
        let s2 = sphere_measure(m + 2).unwrap();
        prop_assert!(relative_error(s2, 2.0 * std::f64::consts::PI * v) <= 1e-13);
    }

    #[test]
    fn beta_full_scales_with_m(n in 3u32..7, kf in 0.0f64..1.0, sf in 0.0f64..1.0, m in 0.0f64..3.0) {
        // the identity is only defined where both Beta factors converge
        let k = 2 + ((n - 3) as f64 * kf).round() as u32;
        let s = sf * (k as f64 - 0.01);
        let m = (n as f64 - s) / 2.0 + 0.05 + m;
        let v = beta_integral_full(n, k, m, s).unwrap();
        let w = beta_integral_full(n, k, m + 1.0, s).unwrap();
        prop_assert!(v > 0.0 && v.is_finite());
        prop_assert!(w < v);
    }

    #[test]
    fn fit_decay_is_exact_on_power_laws(e in 0.1f64..6.0, amp in 1e-3f64..1e3, lo in 1.0f64..100.0) {
        let radii = log_radii(lo, 50.0 * lo, 12);
        let s = RaySamples::from_fn(RayDirection::Diagonal, &radii, |x, y| {
            amp * (x * x + y * y).sqrt().powf(-e)
        })
        .unwrap();
        let fit = fit_decay(&s).unwrap();
        prop_assert!((fit.exponent - e).abs() <= 1e-10);
        prop_assert!(relative_error(fit.amplitude, amp) <= 1e-9);
        prop_assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn fit_decay_is_invariant_under_scaling(e in 0.1f64..4.0, c in 1e-6f64..1e6, seed in 0u64..1000) {
        let radii = log_radii(2.0, 200.0, 15);
        let wiggle = |t: f64| 1.0 + 0.05 * ((t * (seed as f64 + 1.0)).sin());
        let base: Vec<f64> = radii.iter().map(|t| t.powf(-e) * wiggle(*t)).collect();
        let a = fit_decay(&RaySamples::new(RayDirection::RhoAxis, radii.clone(), base.clone()).unwrap()).unwrap();
        let scaled = base.iter().map(|v| c * v).collect();
        let b = fit_decay(&RaySamples::new(RayDirection::RhoAxis, radii, scaled).unwrap()).unwrap();
        prop_assert!((a.exponent - b.exponent).abs() <= 1e-9);
        prop_assert!(relative_error(b.amplitude, c * a.amplitude) <= 1e-9);
    }

    #[test]
    fn kelvin_is_an_involution(n in 3u32..7, x in 0.01f64..5.0, y in 0.0f64..5.0, q in 0.1f64..3.0) {
        let u = move |a: f64, b: f64| (1.0 + a * a + q * b * b).powf(-0.5 * q) * (1.0 + 0.2 * a);
        let ku = kelvin_cylindrical(u, n).unwrap();
        let kku = kelvin_cylindrical(|a, b| ku(a, b).unwrap(), n).unwrap();
        prop_assert!(relative_error(kku(x, y).unwrap(), u(x, y)) <= 1e-12);
    }

    #[test]
    fn kelvin_of_the_fundamental_profile_is_constant(n in 3u32..8, z in prop::collection::vec(-4.0f64..4.0, 8)) {
        let z = &z[..n as usize];
        prop_assume!(z.iter().map(|c| c * c).sum::<f64>() > 1e-4);
        let nf = n as f64;
        let ku = kelvin_transform(move |p: &[f64]| p.iter().map(|c| c * c).sum::<f64>().powf(1.0 - nf / 2.0), n).unwrap();
        prop_assert!((ku(z).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn grid_dump_round_trip_is_bit_exact(
        rho in 0.5f64..100.0,
        r in 0.5f64..100.0,
        g in 1.0f64..3.0,
        nodes in 8usize..20,
        seed in any::<u64>(),
    ) {
        let grid = build_grid(4, 2, rho, r, nodes, nodes + 3, g).unwrap();
        let mut state = seed | 1;
        let grid = grid.map_nodes(|x, y| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) * (1.0 + x) / (1.0 + y * y)
        });
        let back = read_csv_str(&to_csv_string(&grid)).unwrap();
        prop_assert_eq!(back, grid);
    }

    #[test]
    fn graded_nodes_increase_to_the_edge(x_max in 0.1f64..1e3, count in 2usize..500, g in 1.0f64..4.0) {
        let nodes = Grading::power(g).unwrap().nodes(x_max, count);
        prop_assert_eq!(nodes.len(), count);
        prop_assert!(nodes[0] > 0.0);
        prop_assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(relative_error(*nodes.last().unwrap(), x_max) <= 1e-15);
    }
}
