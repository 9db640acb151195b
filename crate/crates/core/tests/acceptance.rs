//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Runs without the libtest harness so the lines always print.

use std::time::Instant;

use shl_monge::analysis::{laplacian_mass, mass_comparison};
use shl_monge::barriers::{barrier_bundle, sandwich, BarrierBundle, BarrierOptions};
use shl_monge::config::{parse_config, RunConfig};
use shl_monge::data::Psi;
use shl_monge::grid::{write_field, FieldHeader, ScalarField};
use shl_monge::hermitian::{build_direction_set, gaveau_inf, ladder_profiles, ComplexHessian};
use shl_monge::modulus::ModulusCurve;
use shl_monge::sampling::rng;
use shl_monge::verify::{self, random_psd, Solved};

struct Line {
    id: usize,
    pass: bool,
    what: String,
}

fn config(text: &str) -> RunConfig {
    parse_config(text).expect("acceptance config parses")
}

fn sup_error(u: &ScalarField, exact: impl Fn(&[f64]) -> f64) -> f64 {
    let g = &u.grid;
    g.interior.iter().map(|&i| (u.values[i] - exact(&g.coords(i))).abs()).fold(0.0, f64::max)
}

fn abs_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn ball_exact(psi: Psi) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| {
        let s = ((1.0 + x[0]) / 2.0).max(0.0).sqrt();
        match psi {
            Psi::Linear => -s,
            Psi::Sqrt => -s.sqrt(),
        }
    }
}

const BALL: &str = "n = 2\ndomain.kind = ball\ndirections.frames = 32\ndirections.arm_scale = 2\n";

fn criterion_1() -> Line {
    let t = Instant::now();
    let ladder = [1.0, 4.0, 16.0, 64.0];
    let mut below = 0;
    let mut worst: f64 = 0.0;
    let mut r = rng(2024);
    for n in [2usize, 3] {
        let set = build_direction_set(n, 64, &ladder_profiles(n, &ladder), 1, 2.0).unwrap();
        for _ in 0..100 {
            let (q, _) = random_psd(n, 10.0, &mut r);
            // oracle: LU determinant, independent of the direction family
            let det_root = q.determinant().re.powf(1.0 / n as f64);
            let inf = gaveau_inf(&ComplexHessian::new(q).unwrap(), &set).unwrap();
            below += usize::from(inf < det_root - 1e-10);
            worst = worst.max(inf / det_root);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Line {
        id: 1,
        pass: below == 0 && worst <= 1.05 && secs < 10.0,
        what: format!("Gaveau: {below} one-sided violations, max ratio {worst:.4} (<= 1.05), {secs:.2} s"),
    }
}

fn criterion_2(c2: &Solved, fine: &Solved) -> Line {
    let e1 = sup_error(&c2.u, abs_sq);
    let e2 = sup_error(&fine.u, abs_sq);
    let secs = fine.report.wall_time_s;
    Line {
        id: 2,
        pass: e1 <= 0.02 && e2 < e1 && secs < 300.0,
        what: format!("|z|^2: sup error {e1:.3e} at h = 0.1, {e2:.3e} at h = 0.05 (strictly smaller required), {secs:.1} s"),
    }
}

fn criterion_3(c3: &Solved) -> Line {
    let err = sup_error(&c3.u, |x| x[0]);
    let tol = c3.report.tol;
    Line {
        id: 3,
        pass: err <= 10.0 * tol && c3.report.wall_time_s < 60.0,
        what: format!("Re z1: sup error {err:.3e} <= 10 tol = {:.3e}, {:.1} s", 10.0 * tol, c3.report.wall_time_s),
    }
}

fn criterion_4(ex: &verify::ExampleBall) -> Line {
    let err = sup_error(&ex.solved.u, ball_exact(Psi::Linear));
    let slope = ex.fit.slope;
    Line {
        id: 4,
        pass: err <= 0.03 && (0.4..=0.6).contains(&slope),
        what: format!(
            "ball example psi = t: sup error {err:.3e} (<= 0.03) at h = 0.05, exponent {slope:.4} over [2h, 0.5] (in [0.4, 0.6])"
        ),
    }
}

fn criterion_5(solves: &[&Solved], pairs: &[(&Solved, &BarrierBundle)]) -> Line {
    let violations: usize = solves.iter().map(|s| s.report.monotonicity_violations).sum();
    let mut worst = f64::NEG_INFINITY;
    let mut pass = violations == 0;
    for (s, b) in pairs {
        let tol = s.report.tol.max(s.report.value_residual);
        let sw = sandwich(b, &s.u, tol);
        pass &= sw.pass;
        worst = worst.max(sw.lower_excess).max(sw.upper_excess);
    }
    Line {
        id: 5,
        pass,
        what: format!("{violations} monotonicity violations over {} solves; worst barrier excess {worst:.3e}", solves.len()),
    }
}

fn criterion_6(cfg: &RunConfig) -> Line {
    let v = verify::stability_suite(cfg, 5, 6).unwrap();
    let failed: Vec<&str> = v.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let shift = v.checks.iter().find(|c| c.name == "constant shift").map(|c| c.detail.clone()).unwrap_or_default();
    Line { id: 6, pass: v.pass, what: format!("stability: 5 pairs + shift, failed {failed:?}; {shift}") }
}

fn band_tol(s: &Solved, b: &BarrierBundle) -> f64 {
    let sub = b.report.sub.as_ref().unwrap();
    let omega = ModulusCurve { samples: Vec::new(), breakpoints: sub.omega_breakpoints.clone(), pair_budget: 0 };
    let g = &s.u.grid;
    verify::mass_band_tol(&s.problem.domain, &omega, sub.b, g.reach_cells as f64 * g.h * (g.dim() as f64).sqrt())
}

fn criterion_7(pairs: &[(&Solved, &BarrierBundle)], c2: &Solved) -> Line {
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, b) in pairs {
        let tol = s.report.tol.max(s.report.value_residual) + b.report.sub.as_ref().unwrap().check.slack;
        match mass_comparison(&s.u, &b.lower, tol, band_tol(s, b)) {
            Ok(m) => {
                pass &= m.pass;
                parts.push(format!("{:.3} <= {:.3}", m.mass_u, m.mass_v));
            }
            Err(e) => {
                pass = false;
                parts.push(e.to_string());
            }
        }
    }
    let field = ScalarField::from_fn(c2.u.grid.clone(), "|z|^2", abs_sq);
    let m = laplacian_mass(&field).unwrap();
    // hand value: Laplacian 8 in R^4 times the unit-ball volume pi^2 / 2
    let hand = 8.0 * std::f64::consts::PI.powi(2) / 2.0;
    pass &= (m - hand).abs() <= 0.05 * hand;
    Line {
        id: 7,
        pass,
        what: format!("mass(U) vs mass(sub-barrier): {parts:?}; |z|^2 mass {m:.4} vs {hand:.4} at h = 0.1"),
    }
}

fn criterion_8() -> Line {
    let cases = [
        ("phi.kind = abs_sq\nf.kind = const\nf.value = 1\n", "|z|^2"),
        ("phi.kind = re_z1\nf.kind = zero\n", "Re z1"),
        ("phi.kind = example47_linear\nf.kind = zero\n", "ball psi = t"),
        ("phi.kind = re_z1\nf.kind = const\nf.value = 1\n", "Re z1, f = 1"),
        ("phi.kind = example47_sqrt\nf.kind = zero\n", "ball psi = t^1/2"),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (data, name) in cases {
        let cfg = config(&format!("{BALL}grid.h = 0.1\n{data}"));
        let out = verify::theorem_a_suite(&cfg).unwrap();
        let v = &out.theorem_a.verdict;
        pass &= v.pass;
        parts.push(format!("{name}: max eta {:.3}{}", v.max_ratio, if v.blow_up { " blow-up" } else { "" }));
    }
    // Lipschitz phi and f^{1/2} = 1 + x/2: exponent at least min(1, 1/2) - 0.1
    let cfg = config(&format!("{BALL}grid.h = 0.1\nphi.kind = re_z1\nf.kind = poly\nf.terms = 1:0,0,0,0; 1:1,0,0,0; 0.25:2,0,0,0\n"));
    let s = verify::solve_config(&cfg).unwrap();
    let (_, fit) = verify::modulus_fit(&s.u, &cfg, 0.2, 0.5).unwrap();
    pass &= fit.slope >= 0.4;
    parts.push(format!("Lipschitz data exponent {:.3} (>= 0.4)", fit.slope));
    Line { id: 8, pass, what: format!("modulus ratio (cap 1e3): {}", parts.join("; ")) }
}

fn criterion_9() -> Line {
    let cfg = config(&format!(
        "{BALL}grid.h = 0.1\nphi.kind = re_z1\nf.kind = inv_abs_z1\nf.p = 1.5\nf.ladder = 4,16,64\n"
    ));
    let v = verify::theorem_b_suite(&cfg).unwrap();
    let detail: Vec<String> = v.checks.iter().map(|c| format!("{} {}", if c.pass { "ok" } else { "FAILED" }, c.detail)).collect();
    Line { id: 9, pass: v.pass, what: format!("truncation ladder: {}", detail.join("; ")) }
}

fn artifacts(cfg: &RunConfig, dir: &std::path::Path) -> Vec<u8> {
    let ex = verify::example_ball(cfg, Psi::Linear).unwrap();
    let header = FieldHeader {
        domain: "unit ball".into(),
        directions: cfg.directions().unwrap().descriptor(),
        tol: ex.solved.report.tol,
        iterations: ex.solved.report.iterations,
        config: cfg.echo(),
    };
    let path = dir.join("field.csv");
    write_field(&path, &ex.solved.u, &header).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    for &(t, w) in &ex.modulus.samples {
        bytes.extend(format!("{t},{w},{}\n", ex.modulus.majorant(t)).bytes());
    }
    bytes
}

fn criterion_10() -> Line {
    let cfg = config(&format!("{BALL}grid.h = 0.1\n"));
    let dir = std::env::temp_dir().join(format!("shl-monge-acceptance-{}", std::process::id()));
    let (a, b) = (dir.join("a"), dir.join("b"));
    std::fs::create_dir_all(&a).unwrap();
    std::fs::create_dir_all(&b).unwrap();
    let first = artifacts(&cfg, &a);
    let second = artifacts(&cfg, &b);
    let _ = std::fs::remove_dir_all(&dir);
    Line {
        id: 10,
        pass: first == second,
        what: format!("re-run of the ball example: field and modulus CSV identical ({} bytes)", first.len()),
    }
}

fn main() {
    let started = Instant::now();
    let mut lines = vec![criterion_1()];

    let c2 = verify::solve_config(&config(&format!("{BALL}grid.h = 0.1\nphi.kind = abs_sq\nf.kind = const\nf.value = 1\n"))).unwrap();
    let c2_fine =
        verify::solve_config(&config(&format!("{BALL}grid.h = 0.05\nphi.kind = abs_sq\nf.kind = const\nf.value = 1\n"))).unwrap();
    lines.push(criterion_2(&c2, &c2_fine));

    let c3 = verify::solve_config(&config(&format!("{BALL}grid.h = 0.1\nphi.kind = re_z1\nf.kind = zero\n"))).unwrap();
    lines.push(criterion_3(&c3));

    let ex_cfg = config(&format!("{BALL}grid.h = 0.05\n"));
    let ex = verify::example_ball(&ex_cfg, Psi::Linear).unwrap();
    lines.push(criterion_4(&ex));

    let opts = BarrierOptions::default();
    let b2 = barrier_bundle(&c2.problem, &c2.disc, &opts).unwrap();
    let b4 = barrier_bundle(&ex.solved.problem, &ex.solved.disc, &opts).unwrap();
    let pairs = [(&c2, &b2), (&ex.solved, &b4)];
    lines.push(criterion_5(&[&c2, &c2_fine, &c3, &ex.solved], &pairs));

    lines.push(criterion_6(&config(&format!("{BALL}grid.h = 0.1\n"))));
    lines.push(criterion_7(&pairs, &c2));
    lines.push(criterion_8());
    lines.push(criterion_9());
    lines.push(criterion_10());

    for l in &lines {
        println!("{} criterion {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.what);
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    println!("{} of {} criteria passed in {:.0} s", lines.len() - failed, lines.len(), started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
