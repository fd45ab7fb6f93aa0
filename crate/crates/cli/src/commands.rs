//! One function per subcommand; each returns the report to emit.

use std::fs;

use hsnum::asymptotics::{check_decay_bounds, fit_decay, grid_core_scale, log_radii, DecayMode, RayDirection, RaySamples};
use hsnum::closed_forms::{beta_integral_full, beta_integral_radial, sharp_constant, Extremal, ExtremalParams, Prop4Params};
use hsnum::cylinder_grid::{
    build_grid, el_residual, interior_max_norm, max_norm_in, prop41_residual, prop42_residual, read_csv, read_csv_str,
    restrict_to, write_csv,
};
use hsnum::exponents::{aux_exponents, Conjugate, ExponentContext};
use hsnum::minimizer::{fit_extremal, max_monotonicity_violation, minimize_rayleigh, GridSpec};
use hsnum::quadrature::{
    integrate_cylindrical, newtonian_ball_center, radial_power_integral, relative_error, singular_newtonian_integral,
    CylindricalDomain,
};
use hsnum::{CylGrid, FlowScheme, Grading, HsError, InitMode, MinimizeOptions, MinimizeResult};

use crate::config::{RunConfig, Subcommand};
use crate::error::CliError;
use crate::output::{emit, fmt17, Entry, Report, Table};
use crate::plot;

pub fn dispatch(cfg: &RunConfig) -> Result<Report, CliError> {
    match cfg.subcommand {
        Subcommand::Exponents => exponents(cfg),
        Subcommand::Quadrature => quadrature(cfg),
        Subcommand::Constant => constant(cfg),
        Subcommand::VerifyExtremal => verify_extremal(cfg),
        Subcommand::VerifyProp4 => verify_prop4(cfg),
        Subcommand::Minimize => minimize(cfg),
        Subcommand::DecayFit => decay_fit(cfg),
        Subcommand::Plot => plot::run(cfg),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn exponents(cfg: &RunConfig) -> Result<Report, CliError> {
    let ctx = ExponentContext::new(cfg.uint("n")?, cfg.uint("k")?, cfg.float("p")?, cfg.float("s")?);
    let rep = aux_exponents(&ctx)?;
    let mut out = Report::default();
    out.push(Entry::num("p_star_s", rep.p_star_s, "", "p(n-s)/(n-p)"));
    out.push(Entry::num("p_prime", rep.p_prime, "", "p/(p-1)"));
    out.push(Entry::num("r", rep.r, "", "r p = p*(r s)"));
    match rep.r_prime {
        Conjugate::Finite(v) => out.push(Entry::num("r_prime", v, "", "1/r + 1/r' = 1")),
        Conjugate::Infinite => out.push(Entry::text("r_prime", "inf", "1/r + 1/r' = 1 with s = p")),
    }
    out.push(Entry::num("sigma", rep.sigma, "", "s(n-p)/(2p(n-s))"));
    out.push(Entry::num("p_sigma", rep.p_sigma, "", "p*(s)"));
    out.push(Entry::num("decay_bound", rep.decay_bound, "", "(n-p)/(p-1)"));
    let rs = rep.p_star_rs();
    out.push(Entry::num("p_star_rs", rs, "", "p*(r s)"));
    out.push(Entry::num("identity_residual", (rs - rep.r * ctx.p).abs(), "", "|p*(r s) - r p|"));
    if let Some(t) = cfg.float_opt("t")? {
        out.push(Entry::num("kappa_t", rep.kappa(t)?, "", "p*(t)/p"));
    }
    Ok(out)
}

fn quadrature(cfg: &RunConfig) -> Result<Report, CliError> {
    let identity = cfg.text("identity")?;
    let (k, s, tol) = (cfg.uint("k")?, cfg.float("s")?, cfg.float("tol")?);
    let need_n = || cfg.uint("n").map_err(|_| usage(format!("identity {identity} needs key 'n'")));
    let (params, exact, quad, oracle) = match identity {
        "beta-full" => {
            let (n, m) = (need_n()?, cfg.float("m")?);
            let exact = beta_integral_full(n, k, m, s)?;
            let quad = integrate_cylindrical(
                |x, y| (1.0 + x * x + y * y).powf(-m),
                n,
                k,
                s,
                CylindricalDomain::whole_space(n, k),
                tol,
            )?;
            (format!("n={n} k={k} m={m} s={s}"), exact, quad, "product of two Beta functions")
        }
        "beta-radial" => {
            let a = cfg.float("a").map_err(|_| usage("identity beta-radial needs key 'a'"))?;
            let exact = beta_integral_radial(k, a, s)?;
            let quad = radial_power_integral(k, a, s, tol)?;
            (format!("k={k} a={a} s={s}"), exact, quad, "sigma_k/2 B((k-s)/2, a-(k-s)/2)")
        }
        _ => {
            let n = need_n()?;
            let z = if cfg.has("z") {
                cfg.float_list("z")?
            } else {
                let mut z = vec![0.0; n as usize];
                z[0] = 1.0;
                z
            };
            if s != 0.0 {
                return Err(HsError::Domain {
                    module: "quadrature",
                    msg: format!("the ball-potential closed form needs s = 0, got {s}"),
                }
                .into());
            }
            let quad = singular_newtonian_integral(&z, n, k, s, tol)?;
            let z_norm = z.iter().map(|c| c * c).sum::<f64>().sqrt();
            let z_text: Vec<String> = z.iter().map(|c| c.to_string()).collect();
            let exact = newtonian_ball_center(n, z_norm)?;
            (format!("n={n} k={k} s={s} z=({})", z_text.join(" ")), exact, quad, "ball potential sigma_n R^2/2, R = |z|/2")
        }
    };
    let err = relative_error(quad.value, exact);
    let mut table = Table::new(
        "comparison.csv",
        &["identity", "parameters", "closed_form", "quadrature", "error_estimate", "evaluations", "relative_error"],
    );
    table.push(vec![
        identity.to_string(),
        params.clone(),
        fmt17(exact),
        fmt17(quad.value),
        fmt17(quad.error_estimate),
        quad.evaluations.to_string(),
        fmt17(err),
    ]);
    let mut out = Report::default();
    out.lines.push(format!("{identity} ({params})"));
    out.push(Entry::num("closed_form", exact, "", oracle));
    out.push(Entry::num("quadrature", quad.value, "", "adaptive Gauss-Kronrod"));
    out.push(Entry::num("error_estimate", quad.error_estimate, "", "Gauss-Kronrod difference"));
    out.push(Entry::int("evaluations", quad.evaluations as u64, "", ""));
    out.push(Entry::num("relative_error", err, "", "|quadrature - closed_form| / |closed_form|"));
    out.tables.push(table);
    Ok(out)
}

fn constant(cfg: &RunConfig) -> Result<Report, CliError> {
    let (n, k) = (cfg.uint("n")?, cfg.uint("k")?);
    let sc = sharp_constant(n, k)?;
    let routes = sc.routes.as_ref().ok_or_else(|| CliError::Output("sharp constant without routes".into()))?;
    const QUAD: &str = "quadrature of the normalization integral J";
    let mut out = Report::default();
    out.push(Entry::num("K", sc.constant, "", QUAD));
    out.push(Entry::num("J_quadrature", routes.normalization_integral.value, "", QUAD));
    out.push(Entry::num("J_beta", routes.normalization_integral_beta, "", "Beta composition of J"));
    out.push(Entry::num("K_beta", routes.constant_beta, "", "K from the Beta composition of J"));
    out.push(Entry::num("rel_discrepancy_beta", routes.discrepancy_beta(), "", "relative to K"));
    match (routes.printed_first_line, routes.printed_simplified) {
        (Some(first), Some(simplified)) => {
            out.push(Entry::num("K_printed_first_line", first, "", "printed closed form, first line"));
            out.push(Entry::num(
                "rel_discrepancy_printed_first_line",
                routes.discrepancy_first_line().unwrap_or(f64::NAN),
                "",
                "relative to K",
            ));
            out.push(Entry::num("K_printed_simplified", simplified, "", "printed closed form, simplified line"));
            out.push(Entry::num(
                "rel_discrepancy_printed_simplified",
                routes.discrepancy_simplified().unwrap_or(f64::NAN),
                "",
                "relative to K",
            ));
        }
        _ => {
            out.push(Entry::text("K_printed_first_line", "n/a", "printed form needs k < n"));
            out.push(Entry::text("K_printed_simplified", "n/a", "printed form needs k < n"));
        }
    }
    out.push(Entry::num(
        "K_unit_normalization",
        routes.constant_unit_normalization,
        "",
        "K^{2(n-1)^2/(n-2)} = ((n-2)/2)^{2(n-1)} J",
    ));
    out.push(Entry::num(
        "rel_discrepancy_unit_normalization",
        routes.discrepancy_unit_normalization(),
        "",
        "relative to K",
    ));
    out.push(Entry::num("Lambda", sc.lambda, "", "K^{2(n-1)/(n-2)}"));
    out.push(Entry::num("mu", sc.mu, "", "4 Lambda/(n-2)^2"));
    out.push(Entry::num("E_min", sc.min_energy(), "", "K^{-2}, infimum of the Rayleigh quotient"));
    out.push(Entry::num("shift", routes.shift, "", "(n-2)/(4(k-1))"));
    Ok(out)
}

fn verify_extremal(cfg: &RunConfig) -> Result<Report, CliError> {
    let (n, k, lambda, extent) = (cfg.uint("n")?, cfg.uint("k")?, cfg.float("lambda")?, cfg.float("extent")?);
    let mut levels = cfg.uint_list("levels")?;
    levels.sort_unstable();
    levels.dedup();
    if levels.len() < 2 {
        return Err(usage("levels needs at least two distinct node counts"));
    }
    let sc = sharp_constant(n, k)?;
    let params = ExtremalParams::centered(n, k, lambda)?;
    let rho_min = match cfg.float_opt("rho-min")? {
        Some(v) => v,
        None => params.shift(),
    };
    let ext = Extremal::new(params, &sc)?;
    let coarse = build_grid(n, k, extent, extent, levels[0], levels[0], 1.0)?;
    let mut table = Table::new("refinement.csv", &["nodes", "spacing", "residual", "ratio", "order"]);
    let mut out = Report::default();
    let mut prev: Option<f64> = None;
    let mut ratios = Vec::new();
    for &m in &levels {
        let g = build_grid(n, k, extent, extent, m, m, 1.0)?.map_nodes(|x, y| ext.profile(x, y));
        let res = el_residual(&g, sc.lambda, 1.0)?;
        let on_coarse = restrict_to(&res, &coarse)?;
        let err = max_norm_in(&on_coarse, (rho_min, f64::INFINITY), (0.0, f64::INFINITY))
            .ok_or_else(|| usage(format!("no coarse nodes with rho >= {rho_min}")))?;
        let spacing = g.rho_nodes[1] - g.rho_nodes[0];
        let ratio = prev.map(|p| p / err);
        table.push(vec![
            m.to_string(),
            fmt17(spacing),
            fmt17(err),
            ratio.map(fmt17).unwrap_or_default(),
            ratio.map(|r| fmt17(r.log2())).unwrap_or_default(),
        ]);
        out.push(Entry::num(&format!("residual_{m}"), err, "", "max |Lap u + Lambda u^q-1 / |x|| on coarse nodes"));
        if let Some(r) = ratio {
            ratios.push(r);
            out.push(Entry::num(&format!("ratio_{m}"), r, "", "4 per halving for second order"));
        }
        prev = Some(err);
    }
    out.lines.push(format!(
        "extremal n={n} k={k} lambda={lambda}, Lambda = {}, window rho >= {rho_min}",
        fmt17(sc.lambda)
    ));
    out.push(Entry::num("Lambda", sc.lambda, "", "K^{2(n-1)/(n-2)}"));
    out.push(Entry::num("rho_min", rho_min, "", "residual window"));
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
    out.push(Entry::num("ratio_min", lo, "", "4 per halving for second order"));
    out.push(Entry::num("ratio_max", hi, "", "4 per halving for second order"));
    out.tables.push(table);
    Ok(out)
}

/// Uniform `nodes x nodes` grids of `v` and `phi` on `[lo, hi]^2`.
fn prop4_grids(p: &Prop4Params, lo: f64, hi: f64, nodes: usize) -> Result<(CylGrid, CylGrid), CliError> {
    let x: Vec<f64> = (0..nodes).map(|i| lo + (hi - lo) * i as f64 / (nodes - 1) as f64).collect();
    let (mut v, mut phi) = (Vec::with_capacity(nodes * nodes), Vec::with_capacity(nodes * nodes));
    for &a in &x {
        for &b in &x {
            v.push(p.profile(a, b)?);
            phi.push(p.phi(a, b));
        }
    }
    let gv = CylGrid::from_parts(p.n(), p.a + 1, x.clone(), x, v, Grading::uniform())?;
    let gp = gv.with_values(phi)?;
    Ok((gv, gp))
}

fn verify_prop4(cfg: &RunConfig) -> Result<Report, CliError> {
    let p = Prop4Params::new(
        cfg.uint("a")?,
        cfg.uint("b")?,
        cfg.float("lambda")?,
        cfg.float("alpha")?,
        cfg.float("beta")?,
    )?;
    let (lo, hi, nodes) = (cfg.float("lo")?, cfg.float("hi")?, cfg.uint("nodes")? as usize);
    if !(lo > 0.0 && hi > lo) || nodes < 5 {
        return Err(usage("need 0 < lo < hi and nodes >= 5"));
    }
    let (gv, gp) = prop4_grids(&p, lo, hi, nodes)?;
    let r_phi = interior_max_norm(&prop41_residual(&gp, &p)?);
    let r_v = interior_max_norm(&prop42_residual(&gv, &p)?);
    let mut out = Report::default();
    out.lines.push(format!(
        "residual max-norm on {nodes}x{nodes} uniform nodes of [{lo}, {hi}]^2: phi {}, v {}",
        fmt17(r_phi),
        fmt17(r_v)
    ));
    out.push(Entry::num("phi_residual", r_phi, "", "first-order equation for phi, exact 0"));
    out.push(Entry::num("v_residual", r_v, "", "semilinear equation for v, exact 0"));
    out.push(Entry::num("spacing", (hi - lo) / (nodes - 1) as f64, "", ""));
    out.push(Entry::num("p_coef", p.p_coef(), "", "alpha (n-2) lambda^2 a"));
    out.push(Entry::num("q_coef", p.q_coef(), "", "beta (n-2) lambda^2 b"));
    Ok(out)
}

fn minimize(cfg: &RunConfig) -> Result<Report, CliError> {
    let (n, k, s) = (cfg.uint("n")?, cfg.uint("k")?, cfg.float("s")?);
    let extent = cfg.float("extent")?;
    let nodes = cfg.uint("nodes")? as usize;
    let spec = GridSpec {
        rho_max: extent,
        r_max: extent,
        n_rho: nodes,
        n_r: nodes,
        grading: cfg.float("grading")?,
    };
    let init = match cfg.text("init")? {
        "analytic" => InitMode::AnalyticExtremal {
            lambda: cfg.float("lambda")?,
        },
        "bump" => InitMode::PositiveBump,
        _ => {
            let path = cfg.path("init-grid").map_err(|_| usage("init = grid needs key 'init-grid'"))?;
            InitMode::UserGrid(read_csv(&path)?)
        }
    };
    let opts = MinimizeOptions {
        step: cfg.float("step")?,
        max_iters: cfg.uint("max-iters")? as usize,
        tol: cfg.float("tol")?,
        init,
        scheme: if cfg.text("scheme")? == "explicit" {
            FlowScheme::Explicit
        } else {
            FlowScheme::SemiImplicit
        },
    };
    match minimize_rayleigh(n, k, s, &spec, &opts) {
        Ok(res) => minimize_report(cfg, &res),
        Err(HsError::MinimizerNotConverged(partial)) => {
            let report = minimize_report(cfg, &partial)?;
            emit(cfg, &report, "not-converged")?;
            Err(HsError::MinimizerNotConverged(partial).into())
        }
        Err(e) => Err(e.into()),
    }
}

fn minimize_report(cfg: &RunConfig, res: &MinimizeResult) -> Result<Report, CliError> {
    let (n, k, s) = (cfg.uint("n")?, cfg.uint("k")?, cfg.float("s")?);
    let mut out = Report::default();
    let mut history = Table::new(cfg.text("history")?, &["iteration", "energy", "defect"]);
    for h in &res.history {
        history.push(vec![h.iteration.to_string(), fmt17(h.energy), fmt17(h.defect)]);
    }
    let grid_path = cfg.out_path("grid-out")?;
    if let Some(parent) = grid_path.parent() {
        fs::create_dir_all(parent)?;
    }
    write_csv(&res.grid, &grid_path)?;
    out.files.push(grid_path);
    out.tables.push(history);

    if s == 1.0 {
        let sc = sharp_constant(n, k)?;
        out.push(Entry::num("E_min", res.energy, "", &format!("K^-2 = {}", fmt17(sc.min_energy()))));
        out.push(Entry::num("K_est", res.k_est, "", &format!("K = {} by quadrature", fmt17(sc.constant))));
        out.push(Entry::num("K", sc.constant, "", "quadrature of the normalization integral"));
        out.push(Entry::num("rel_err_K", relative_error(res.k_est, sc.constant), "", "|K_est - K| / K"));
        let fit = fit_extremal(&res.grid)?;
        out.push(Entry::num("fit_lambda", fit.lambda, "", "dilation of the best-fitting extremal"));
        out.push(Entry::num("fit_rel_l2", fit.rel_l2, "", "relative misfit to the extremal family"));
    } else {
        out.push(Entry::num("E_min", res.energy, "", "no closed form for s != 1"));
        out.push(Entry::num("K_est", res.k_est, "", "E_min^{-1/2}"));
    }
    let defect = res.history.iter().map(|h| h.defect).fold(0.0, f64::max);
    out.push(Entry::int("iterations", res.iterations as u64, "", ""));
    out.push(Entry::flag("converged", res.converged, "relative energy change below tol"));
    out.push(Entry::num("final_step", res.final_step, "", "after step halving"));
    out.push(Entry::num("max_constraint_defect", defect, "", "|N(u) - 1| over the history"));
    out.push(Entry::num(
        "monotonicity_violation",
        max_monotonicity_violation(&res.grid),
        "",
        "non-increasing in rho and r",
    ));
    Ok(out)
}

enum Samples {
    Grid(CylGrid),
    Rays(RaySamples),
}

/// Reads a grid dump or ray-sample file, told apart by the metadata line.
fn read_samples(text: &str) -> Result<Samples, CliError> {
    let first = text.lines().next().unwrap_or("").trim();
    if first.starts_with("# direction=") {
        Ok(Samples::Rays(RaySamples::from_csv_str(text)?))
    } else if first.starts_with("# n=") {
        Ok(Samples::Grid(read_csv_str(text)?))
    } else {
        Err(HsError::Parse("input is neither a grid dump ('# n=') nor ray samples ('# direction=')".into()).into())
    }
}

fn decay_fit(cfg: &RunConfig) -> Result<Report, CliError> {
    let path = cfg.path("input")?;
    let text = fs::read_to_string(&path).map_err(HsError::from)?;
    let (lo, hi) = (cfg.float_opt("lo")?, cfg.float_opt("hi")?);
    let (samples, n) = match read_samples(&text)? {
        Samples::Grid(g) => {
            if let Some(n) = cfg.uint_opt("n")? {
                if n != g.n {
                    return Err(usage(format!("n = {n} but the grid dump has n = {}", g.n)));
                }
            }
            let direction = RayDirection::parse(cfg.text("direction")?)?;
            let edge = match direction {
                RayDirection::RhoAxis => g.rho_max(),
                RayDirection::RAxis => g.r_max().unwrap_or(0.0),
                RayDirection::Diagonal => g.rho_max().min(g.r_max().unwrap_or(g.rho_max())) * std::f64::consts::SQRT_2,
            };
            let lo = match lo {
                Some(v) => v,
                None => 10.0 * grid_core_scale(&g, direction)?,
            };
            let hi = hi.unwrap_or(0.1 * edge);
            let radii = log_radii(lo, hi, cfg.uint("count")? as usize);
            (RaySamples::from_grid(&g, direction, &radii)?, g.n)
        }
        Samples::Rays(r) => {
            let n = cfg.uint_opt("n")?.ok_or_else(|| usage("ray-sample input needs key 'n'"))?;
            let keep = |t: f64| lo.map_or(true, |l| t >= l) && hi.map_or(true, |h| t <= h);
            let (radii, values): (Vec<f64>, Vec<f64>) =
                r.radii.iter().zip(&r.values).filter(|(t, _)| keep(**t)).map(|(t, v)| (*t, *v)).unzip();
            (RaySamples::new(r.direction, radii, values)?, n)
        }
    };
    let fit = fit_decay(&samples)?;
    let mode = DecayMode::parse(cfg.text("mode")?)?;
    let verdict = check_decay_bounds(&fit, n, cfg.float("p")?, mode, cfg.float("tol")?)?;

    let rays_path = cfg.output_dir.join("rays.csv");
    fs::write(&rays_path, samples.to_csv_string())?;
    let mut table = Table::new("fit.csv", &["radius", "value", "fitted"]);
    for (t, v) in samples.radii.iter().zip(&samples.values) {
        table.push(vec![fmt17(*t), fmt17(*v), fmt17(fit.amplitude * t.powf(-fit.exponent))]);
    }
    let target = match mode {
        DecayMode::GeneralP => "(n-p)/(p-1)",
        _ => "n-2",
    };
    let mut out = Report::default();
    out.lines.push(format!(
        "verdict: {} ({mode}: exponent {} vs {target} = {}, tol {})",
        if verdict.pass { "PASS" } else { "FAIL" },
        fmt17(verdict.exponent),
        fmt17(verdict.target),
        verdict.tol
    ));
    out.push(Entry::text("direction", &samples.direction.to_string(), ""));
    out.push(Entry::num("radius_lo", samples.radii[0], "", ""));
    out.push(Entry::num("radius_hi", *samples.radii.last().unwrap_or(&f64::NAN), "", ""));
    out.push(Entry::num("exponent", fit.exponent, "", "least squares of ln u against ln radius"));
    out.push(Entry::num("amplitude", fit.amplitude, "", ""));
    out.push(Entry::num("r_squared", fit.r_squared, "", "coefficient of determination"));
    out.push(Entry::text("mode", &mode.to_string(), ""));
    out.push(Entry::num("target", verdict.target, "", target));
    out.push(Entry::num("tol", verdict.tol, "", ""));
    out.push(Entry::flag("pass", verdict.pass, "decay bound verdict"));
    out.tables.push(table);
    out.files.push(rays_path);
    Ok(out)
}
