use shl_monge::analysis::{empirical_modulus, fit_exponent, psi_norm, stability_from_solutions, t_grid, PairOptions};
use shl_monge::barriers::{barrier_bundle, sandwich, BarrierOptions, Construction};
use shl_monge::config::{parse_config, RunConfig};
use shl_monge::data::Psi;
use shl_monge::grid::ScalarField;
use shl_monge::verify::{self, barriers_for, solve_config, Solved};

fn ball(h: f64, extra: &str) -> RunConfig {
    let frames = if extra.contains("directions.frames") { "" } else { "directions.frames = 16\n" };
    parse_config(&format!("n = 2\ndomain.kind = ball\ngrid.h = {h}\n{frames}{extra}")).unwrap()
}

fn sandwiched(s: &Solved, cfg: &RunConfig) {
    let b = barriers_for(s, cfg).unwrap();
    let tol = s.report.tol.max(s.report.value_residual);
    let sw = sandwich(&b, &s.u, tol);
    assert!(sw.pass, "lower excess {:e}, upper excess {:e}", sw.lower_excess, sw.upper_excess);
    if let Some(sub) = &b.report.sub {
        assert_eq!(sub.check.violations, 0, "sub-barrier fails the subsolution test");
    }
}

#[test]
fn abs_sq_sits_between_its_barriers() {
    let cfg = ball(0.2, "phi.kind = abs_sq\nf.kind = const\nf.value = 1\n");
    let s = solve_config(&cfg).unwrap();
    let b = barrier_bundle(&s.problem, &s.disc, &BarrierOptions::default()).unwrap();
    let g = &s.u.grid;
    for &i in &g.interior {
        let exact: f64 = g.coords(i).iter().map(|x| x * x).sum();
        assert!(b.lower.values[i] <= exact + 1e-9 && exact <= b.upper.values[i] + 1e-9);
    }
    sandwiched(&s, &cfg);
}

#[test]
fn ball_example_sits_between_its_barriers() {
    let cfg = ball(0.2, "phi.kind = example47_linear\nf.kind = zero\n");
    sandwiched(&solve_config(&cfg).unwrap(), &cfg);
}

#[test]
fn singular_density_uses_the_composite_barrier() {
    let cfg = ball(0.25, "phi.kind = re_z1\nf.kind = inv_abs_z1\nf.p = 1.5\nf.ladder = 4,16\n");
    let s = solve_config(&cfg).unwrap();
    let b = barriers_for(&s, &cfg).unwrap();
    assert!(matches!(b.construction, Construction::Composite));
    let sw = sandwich(&b, &s.u, s.report.tol.max(s.report.value_residual));
    assert!(sw.pass, "{sw:?}");
}

#[test]
fn ball_example_error_and_modulus_at_h_one_tenth() {
    let cfg = ball(0.1, "directions.frames = 32\n");
    let ex = verify::example_ball(&cfg, Psi::Linear).unwrap();
    let exact = |x: &[f64]| -((1.0 + x[0]) / 2.0).max(0.0).sqrt();
    let g = &ex.solved.u.grid;
    let err = g.interior.iter().map(|&i| (ex.solved.u.values[i] - exact(&g.coords(i))).abs()).fold(0.0, f64::max);
    assert!(err <= 0.03, "sup error {err}");
    // the exact modulus is sqrt(t / 2); the estimate cannot exceed it by more
    // than the solve error on both ends
    for &(t, w) in &ex.modulus.samples {
        assert!(w <= (t / 2.0).sqrt() + 2.0 * err, "w({t}) = {w}");
    }
    assert!((0.3..=0.7).contains(&ex.fit.slope), "slope {}", ex.fit.slope);
}

#[test]
fn exact_ball_example_field_has_square_root_modulus() {
    let cfg = ball(0.1, "");
    let grid = cfg.problem().unwrap().build_grid().unwrap();
    let field = ScalarField::from_fn(grid, "exact", |x| -((1.0 + x[0]) / 2.0).max(0.0).sqrt());
    let ts = t_grid(0.2, 0.5, 12);
    let curve = empirical_modulus(&field, &ts, &PairOptions::default()).unwrap();
    for &(t, w) in &curve.samples {
        let exact = (t / 2.0).sqrt();
        assert!(w <= exact + 1e-12 && w >= 0.8 * exact, "w({t}) = {w} vs {exact}");
    }
    let fit = fit_exponent(&curve, (0.2, 0.5)).unwrap();
    assert!((fit.slope - 0.5).abs() < 0.1, "{fit:?}");
}

#[test]
fn psi_norm_of_re_z1_against_t() {
    let cfg = ball(0.1, "");
    let grid = cfg.problem().unwrap().build_grid().unwrap();
    let field = ScalarField::from_fn(grid, "re z1", |x| x[0]);
    let r = psi_norm(&field, &|t| t, "t", 1.0, &PairOptions::default()).unwrap();
    // the interior sup of |x1| and the Lipschitz ratio both approach 1 from below
    assert!(r.sup_part <= 1.0 && r.sup_part > 0.85, "{r:?}");
    assert!(r.ratio_part <= 1.0 + 1e-12 && r.ratio_part > 0.99, "{r:?}");
    assert!((r.total - 2.0).abs() < 0.2);
}

#[test]
fn constant_shift_is_exact_in_the_stability_report() {
    let a = ball(0.2, "phi.kind = example47_linear\nf.kind = zero\nsolver.tol = 1e-12\n");
    let s1 = solve_config(&a).unwrap();
    let s2 = verify::solve_problem(
        s1.problem.with_data(
            shl_monge::data::BoundaryData::Sum(vec![s1.problem.phi.clone(), shl_monge::data::BoundaryData::Const(0.25)]),
            s1.problem.f.clone(),
        ),
        &a,
    )
    .unwrap();
    let rep = stability_from_solutions(&s1.problem.domain, &s1.u, &s1.disc, &s1.report, &s2.u, &s2.disc, &s2.report).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!((rep.lhs - 0.25).abs() <= 1e-8, "{rep:?}");
    assert!((rep.phi_diff - 0.25).abs() <= 1e-12);
}

#[test]
fn comparison_suite_passes_on_the_ball() {
    let v = verify::comparison_suite(&ball(0.2, "phi.kind = abs_sq\nf.kind = const\nf.value = 1\n")).unwrap();
    assert!(v.pass, "{}", v.to_text());
}

#[test]
fn mass_suite_matches_the_hand_value_at_h_one_tenth() {
    let v = verify::mass_suite(&ball(0.1, "phi.kind = abs_sq\nf.kind = const\nf.value = 1\n")).unwrap();
    assert!(v.pass, "{}", v.to_text());
}
