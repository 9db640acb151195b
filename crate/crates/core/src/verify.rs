//! Verification suites. Each returns a [`Verdict`]: named checks with the
//! numbers behind them, and an overall PASS when every check passes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::analysis::{
    empirical_modulus, fit_exponent, laplacian_mass, mass_comparison, omega_u0_comparison, psi_norm_verdict,
    stability_from_solutions, theorem_a, ExponentFit, StabilityReport, TheoremA,
};
use crate::barriers::{barrier_bundle, composite_barrier_lp, sandwich, BarrierBundle};
use crate::config::RunConfig;
use crate::data::{BoundaryData, Density, DensityKind, Monomial, Psi};
use crate::domain::{DomainKind, DomainSpec};
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::hermitian::{build_direction_set, gaveau_inf, ladder_profiles, pointwise_delta_h, ComplexHessian};
use crate::modulus::ModulusCurve;
use crate::sampling::{box_muller, rng};
use crate::solver::{solve_discrete, solve_lp_on_grid, truncated_discrete, Discrete, ProblemSpec, SolverReport};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
}

impl Verdict {
    fn new(suite: &str, checks: Vec<Check>, details: serde_json::Value) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self { suite: suite.into(), pass, checks, details }
    }

    /// `PASS`/`FAIL` lines, one per check, then the overall verdict.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!("{} {}: {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        out.push_str(&format!("{} {}\n", if self.pass { "PASS" } else { "FAIL" }, self.suite));
        out
    }
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check { name: name.into(), pass, detail }
}

fn gaussian_complex(r: &mut ChaCha8Rng, count: usize) -> Vec<Complex64> {
    let uni: Vec<f64> = (0..2 * count).map(|_| r.gen::<f64>().max(1e-300)).collect();
    let mut g = vec![0.0; 2 * count];
    box_muller(&uni, &mut g);
    g.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

/// A random Hermitian positive definite matrix with eigenvalues in
/// `[1, cond]` (both ends attained) and a Haar-like random eigenbasis.
/// Returns the matrix and its eigenvalues.
pub fn random_psd(n: usize, cond: f64, r: &mut ChaCha8Rng) -> (DMatrix<Complex64>, Vec<f64>) {
    let mut eig: Vec<f64> = (0..n).map(|_| cond.powf(r.gen::<f64>())).collect();
    eig[0] = 1.0;
    if n > 1 {
        eig[n - 1] = cond;
    }
    let g = gaussian_complex(r, n * n);
    let qr = DMatrix::from_iterator(n, n, g).qr();
    let u = qr.q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, eig.iter().map(|&l| Complex64::new(l, 0.0))));
    let m = &u * d * u.adjoint();
    // symmetrize away the rounding
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    (m, eig)
}

#[derive(Debug, Clone, Serialize)]
pub struct GaveauCase {
    pub n: usize,
    pub det_root: f64,
    pub inf: f64,
    pub ratio: f64,
}

/// `det(Q)^{1/n} <= min_H tr(HQ) <= 1.05 det(Q)^{1/n}` over `cases` random
/// matrices of condition number at most 10, for `n = 2` and `n = 3`.
pub fn gaveau_suite(cases: usize, frames: usize, ladder: &[f64], seed: u64) -> Result<Verdict> {
    let mut out = Vec::new();
    for n in [2usize, 3] {
        let set = build_direction_set(n, frames, &ladder_profiles(n, ladder), seed, 2.0)?;
        let mut r = rng(seed ^ (n as u64) << 32);
        for _ in 0..cases {
            let (q, eig) = random_psd(n, 10.0, &mut r);
            let det_root = eig.iter().product::<f64>().powf(1.0 / n as f64);
            let inf = gaveau_inf(&ComplexHessian::new(q)?, &set)?;
            out.push(GaveauCase { n, det_root, inf, ratio: inf / det_root });
        }
    }
    let below = out.iter().filter(|c| c.inf < c.det_root - 1e-10).count();
    let worst = out.iter().map(|c| c.ratio).fold(0.0, f64::max);
    let least = out.iter().map(|c| c.inf - c.det_root).fold(f64::INFINITY, f64::min);
    let checks = vec![
        check("one-sided", below == 0, format!("{below} of {} cases below det^(1/n) - 1e-10; min excess {least:e}", out.len())),
        check("within 5%", worst <= 1.05, format!("max inf / det^(1/n) = {worst:.5} (frames = {frames}, ladder = {ladder:?})")),
    ];
    Ok(Verdict::new("gaveau", checks, json!({ "cases": out })))
}

/// Sampled equivalence of the operator families: for `u = z^* A z + |z_1|^4`
/// at random points, every sampled `tr(HQ)` bounds `det(Q)^{1/n}` from above,
/// the bound tightens as the frame count grows (the frame sequence is
/// nested), and the stencil reproduces `tr(HQ)` to second order.
pub fn equivalence_suite(n: usize, points: usize, ladder: &[f64], seed: u64) -> Result<Verdict> {
    let coarse = build_direction_set(n, 8, &ladder_profiles(n, ladder), seed, 2.0)?;
    let fine = build_direction_set(n, 64, &ladder_profiles(n, ladder), seed, 2.0)?;
    let mut r = rng(seed.wrapping_add(99));
    let (a, _) = random_psd(n, 10.0, &mut r);
    let mut below = 0;
    let mut not_nested = 0;
    let (mut sum_coarse, mut sum_fine) = (0.0, 0.0);
    let mut worst_consistency: f64 = 0.0;
    let delta = 0.02;
    for _ in 0..points {
        let z: Vec<f64> = (0..2 * n).map(|_| r.gen_range(-0.5..0.5)).collect();
        let z1_sq = z[0] * z[0] + z[1] * z[1];
        // Q_{jk} = d^2 u / dz_j dz-bar_k = conj(A_{jk})
        let mut q = a.conjugate();
        q[(0, 0)] += Complex64::new(4.0 * z1_sq, 0.0);
        let det_root = q.determinant().re.powf(1.0 / n as f64);
        let hq = ComplexHessian::new(q)?;
        let ic = gaveau_inf(&hq, &coarse)?;
        let i_f = gaveau_inf(&hq, &fine)?;
        below += usize::from(i_f < det_root - 1e-10 || ic < det_root - 1e-10);
        not_nested += usize::from(i_f > ic + 1e-14);
        sum_coarse += ic / det_root - 1.0;
        sum_fine += i_f / det_root - 1.0;
        let u = |x: &[f64]| {
            let w: Vec<Complex64> = x.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                for k in 0..n {
                    s += w[j].conj() * a[(j, k)] * w[k];
                }
            }
            s.re + w[0].norm_sqr().powi(2)
        };
        for d in &fine.directions {
            let exact = hq.trace_with(d);
            let approx = pointwise_delta_h(u, &z, d, delta);
            worst_consistency = worst_consistency.max((approx - exact).abs() / (delta * delta * d.trace()));
        }
    }
    let m = points as f64;
    let checks = vec![
        check("one-sided", below == 0, format!("{below} of {points} points below det^(1/n)")),
        check("nested refinement", not_nested == 0, format!("{not_nested} points where 64 frames did worse than 8")),
        check(
            "refinement tightens",
            sum_fine < sum_coarse,
            format!("mean relative excess {:.4} (8 frames) -> {:.4} (64 frames)", sum_coarse / m, sum_fine / m),
        ),
        check(
            "stencil consistency",
            worst_consistency <= 8.0,
            format!("max |stencil - tr(HQ)| / (delta^2 tr H) = {worst_consistency:.3} at delta = {delta}"),
        ),
    ];
    Ok(Verdict::new("equivalence", checks, json!({ "n": n, "points": points })))
}

/// A solved problem on its grid.
pub struct Solved {
    pub problem: ProblemSpec,
    pub disc: Discrete,
    pub u: ScalarField,
    pub report: SolverReport,
}

pub fn solve_config(cfg: &RunConfig) -> Result<Solved> {
    let problem = cfg.problem()?;
    solve_problem(problem, cfg)
}

/// Solves the configured problem. For `L^p` densities the solution is the
/// top level of the truncation ladder and `disc` is that level's problem.
pub fn solve_problem(problem: ProblemSpec, cfg: &RunConfig) -> Result<Solved> {
    let disc = match (&problem.f_kind, cfg.f_ladder.last()) {
        (DensityKind::Lp { .. }, Some(&top)) => truncated_discrete(&problem, problem.build_grid()?, top)?,
        _ => Discrete::new(&problem)?,
    };
    let (u, report) = solve_discrete(&disc, &cfg.solver_config())?;
    Ok(Solved { problem, disc, u, report })
}

/// Barriers for a solved problem: the composite construction for `L^p`
/// densities, the pointwise maxima otherwise.
pub fn barriers_for(s: &Solved, cfg: &RunConfig) -> Result<BarrierBundle> {
    if cfg.f_p.is_some() {
        composite_barrier_lp(&s.problem, &cfg.f_ladder, &cfg.solver_config(), &cfg.barrier_options())
    } else {
        barrier_bundle(&s.problem, &s.disc, &cfg.barrier_options())
    }
}

/// `lower <= U <= upper` at interior nodes, and the barrier checks.
pub fn comparison_suite(cfg: &RunConfig) -> Result<Verdict> {
    let s = solve_config(cfg)?;
    let b = barriers_for(&s, cfg)?;
    let tol = s.report.tol.max(s.report.value_residual);
    let sw = sandwich(&b, &s.u, tol);
    let mut checks = vec![
        check("monotone ascent", s.report.monotonicity_violations == 0, format!("{} violations", s.report.monotonicity_violations)),
        check("lower <= U", sw.lower_excess <= tol, format!("max (lower - U) = {:e}, tol {tol:e}", sw.lower_excess)),
        check("U <= upper", sw.upper_excess <= tol, format!("max (U - upper) = {:e}, tol {tol:e}", sw.upper_excess)),
    ];
    if let Some(sub) = &b.report.sub {
        checks.push(check(
            "sub-barrier is a discrete subsolution",
            sub.check.violations == 0,
            format!("{} violations, worst {:e}", sub.check.violations, sub.check.worst),
        ));
    }
    checks.push(check(
        "super-barrier is a discrete supersolution",
        b.report.sup.check.violations == 0,
        format!("{} violations, worst {:e}", b.report.sup.check.violations, b.report.sup.check.worst),
    ));
    Ok(Verdict::new("comparison", checks, json!({ "sandwich": sw, "barriers": b.report, "solve": s.report })))
}

fn random_pair_data(r: &mut ChaCha8Rng, n: usize) -> (BoundaryData, Density) {
    let dim = 2 * n;
    let mut phi = vec![Monomial { coef: r.gen_range(-1.0..1.0), exponents: vec![0; dim] }];
    for i in 0..dim {
        let mut e = vec![0; dim];
        e[i] = 1;
        phi.push(Monomial { coef: r.gen_range(-0.5..0.5), exponents: e.clone() });
        e[i] = 2;
        phi.push(Monomial { coef: r.gen_range(0.0..1.0), exponents: e });
    }
    let mut f = vec![Monomial { coef: r.gen_range(0.5..2.0), exponents: vec![0; dim] }];
    for i in 0..dim {
        let mut e = vec![0; dim];
        e[i] = 1;
        f.push(Monomial { coef: r.gen_range(-0.2..0.2), exponents: e });
    }
    (BoundaryData::Poly(phi), Density::Poly(f))
}

/// `|U1 - U2| <= d^2 |f1 - f2|^{1/n} + |phi1 - phi2| + eps` on seeded random
/// smooth pairs, and the constant shift `phi + c`, which must move the
/// solution by exactly `c`.
pub fn stability_suite(cfg: &RunConfig, pairs: usize, seed: u64) -> Result<Verdict> {
    let base = cfg.problem()?;
    let domain = base.domain.clone();
    let grid = base.build_grid()?;
    let solve = |p: &ProblemSpec, tol: Option<f64>| -> Result<(Discrete, ScalarField, SolverReport)> {
        let d = Discrete::on_grid(p, grid.clone())?;
        let mut sc = cfg.solver_config();
        if tol.is_some() {
            sc.tol = tol;
        }
        let (u, r) = solve_discrete(&d, &sc)?;
        Ok((d, u, r))
    };
    let mut r = rng(seed);
    let mut checks = Vec::new();
    let mut reports: Vec<StabilityReport> = Vec::new();
    for k in 0..pairs {
        let (phi1, f1) = random_pair_data(&mut r, cfg.n);
        let (phi2, f2) = random_pair_data(&mut r, cfg.n);
        let (d1, u1, r1) = solve(&base.with_data(phi1, f1), None)?;
        let (d2, u2, r2) = solve(&base.with_data(phi2, f2), None)?;
        let rep = stability_from_solutions(&domain, &u1, &d1, &r1, &u2, &d2, &r2)?;
        checks.push(check(
            &format!("pair {k}"),
            rep.pass,
            format!("|U1 - U2| = {:.6} <= {:.6} + {:.1e}; L^n ratio {:.4}", rep.lhs, rep.rhs, rep.eps_disc, rep.ln_ratio),
        ));
        reports.push(rep);
    }
    let shift = 0.3;
    let (phi, f) = random_pair_data(&mut r, cfg.n);
    let shifted = BoundaryData::Sum(vec![phi.clone(), BoundaryData::Const(shift)]);
    let (d1, u1, r1) = solve(&base.with_data(phi, f.clone()), Some(1e-12))?;
    let (d2, u2, r2) = solve(&base.with_data(shifted, f), Some(1e-12))?;
    let rep = stability_from_solutions(&domain, &u1, &d1, &r1, &u2, &d2, &r2)?;
    let dev = grid
        .interior
        .iter()
        .map(|&i| (u2.values[i] - u1.values[i] - shift).abs())
        .fold(0.0, f64::max);
    checks.push(check(
        "constant shift",
        dev <= 1e-8 && (rep.lhs - shift).abs() <= 1e-8,
        format!("|U2 - U1 - {shift}| <= {dev:.2e}, sup |U1 - U2| = {:.12}", rep.lhs),
    ));
    reports.push(rep);
    Ok(Verdict::new("stability", checks, json!({ "reports": reports })))
}

/// Hand value of the cross-stencil mass of `|z - a|^2` on a ball: the
/// Laplacian in `R^{2n}` is `4n`, times the volume of the ball.
pub fn abs_sq_mass_on_ball(n: usize, radius: f64) -> f64 {
    let m = 2 * n;
    // volume of the unit ball in R^m by the recursion V_m = 2 pi V_{m-2} / m
    let (mut k, mut v) = if m % 2 == 0 { (0, 1.0) } else { (1, 2.0) };
    while k < m {
        k += 2;
        v *= 2.0 * std::f64::consts::PI / k as f64;
    }
    4.0 * n as f64 * v * radius.powi(m as i32)
}

/// Tolerance on the band for the mass comparison: the barrier estimate
/// `lambda w(2 sqrt(gap))` of how far a barrier can sit from the data at
/// distance `gap` outside the domain.
pub fn mass_band_tol(domain: &DomainSpec, omega: &ModulusCurve, b: f64, gap: f64) -> f64 {
    let d = domain.diameter;
    let c = 1.0 + (2.0 * d + b * domain.lipschitz_bound).sqrt();
    let lambda = (c + 2.0 * d.sqrt()) * (1.0 + 2.0 * d);
    lambda * omega.majorant(2.0 * gap.sqrt())
}

/// Mass comparison of the sub-barrier against the solution, and the mass of
/// `|z|^2` against its hand value on ball domains.
pub fn mass_suite(cfg: &RunConfig) -> Result<Verdict> {
    let s = solve_config(cfg)?;
    let b = barrier_bundle(&s.problem, &s.disc, &cfg.barrier_options())?;
    let sub = b.report.sub.as_ref().ok_or_else(|| Error::Input("no sub-barrier report".into()))?;
    let omega = ModulusCurve { samples: Vec::new(), breakpoints: sub.omega_breakpoints.clone(), pair_budget: 0 };
    let g = s.u.grid.clone();
    let gap = g.reach_cells as f64 * g.h * (g.dim() as f64).sqrt();
    let band_tol = mass_band_tol(&s.problem.domain, &omega, sub.b, gap);
    let tol = s.report.tol.max(s.report.value_residual) + sub.check.slack;
    let mut checks = Vec::new();
    let mut details = json!({ "band_tol": band_tol, "band_gap": sub.band_gap });
    match mass_comparison(&s.u, &b.lower, tol, band_tol) {
        Ok(m) => {
            checks.push(check(
                "mass(U) <= mass(sub-barrier) + 5%",
                m.pass,
                format!("mass(U) = {:.6}, mass(v) = {:.6}", m.mass_u, m.mass_v),
            ));
            details["comparison"] = json!(m);
        }
        Err(e) => checks.push(check("mass comparison preconditions", false, e.to_string())),
    }
    if let DomainKind::Ball { center, radius } = &s.problem.domain.kind {
        let c = center.clone();
        let field = ScalarField::from_fn(g, "|z - a|^2", move |x| x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum());
        let m = laplacian_mass(&field)?;
        let expect = abs_sq_mass_on_ball(cfg.n, *radius);
        checks.push(check(
            "|z|^2 mass",
            (m - expect).abs() <= 0.05 * expect,
            format!("{m:.6} vs hand value {expect:.6} ({:+.2}%)", 100.0 * (m / expect - 1.0)),
        ));
    }
    Ok(Verdict::new("mass", checks, details))
}

pub struct TheoremAOutcome {
    pub solved: Solved,
    pub theorem_a: TheoremA,
    pub verdict: Verdict,
}

/// Modulus ratio, the psi-norm bound with `psi1(t) = psi2(t) = t` and the
/// comparison with the `f = 0` solution, on the configured problem.
pub fn theorem_a_suite(cfg: &RunConfig) -> Result<TheoremAOutcome> {
    let s = solve_config(cfg)?;
    let domain = s.problem.domain.clone();
    let ts = cfg.t_grid(domain.diameter);
    let pairs = cfg.pair_options();
    let ta = theorem_a(&s.u, &s.disc, &domain, &ts, &pairs, cfg.eta_cap)?;
    let psi = psi_norm_verdict(&s.u, &s.disc, &domain, &|t| t, &|t| t, &pairs)?;
    let u0 = omega_u0_comparison(&s.problem, &cfg.solver_config(), &ts, &pairs, cfg.eta_cap)?;
    let checks = vec![
        check(
            "eta bounded",
            ta.verdict.max_ratio <= cfg.eta_cap,
            format!("max eta = {:.4} (cap {})", ta.verdict.max_ratio, cfg.eta_cap),
        ),
        check("no blow-up", !ta.verdict.blow_up, format!("ratios near t = 2h: {:?}", &ta.verdict.ratios[..ta.verdict.ratios.len().min(4)])),
        check("psi-norm bound", psi.pass, format!("|U|_psi = {:.4} <= {:.4}", psi.u.total, psi.bound)),
        check(
            "modulus against f = 0 solution",
            u0.verdict.pass,
            format!("max ratio = {:.4}{}", u0.verdict.max_ratio, if u0.verdict.flagged { " (floored by t^(1/2))" } else { "" }),
        ),
    ];
    let verdict = Verdict::new(
        "theorem-a",
        checks,
        json!({ "theorem_a": ta, "psi": psi, "omega_u0": u0, "solve": s.report }),
    );
    Ok(TheoremAOutcome { solved: s, theorem_a: ta, verdict })
}

/// Fit of the modulus of a field over `[lo, hi]`, on the configured t grid
/// with `lo` and `hi` added.
pub fn modulus_fit(u: &ScalarField, cfg: &RunConfig, lo: f64, hi: f64) -> Result<(ModulusCurve, ExponentFit)> {
    let mut ts = crate::analysis::t_grid(lo, hi, cfg.t_points);
    ts.retain(|&t| t >= cfg.t_min_factor * cfg.h - 1e-12);
    let curve = empirical_modulus(u, &ts, &cfg.pair_options())?;
    let fit = fit_exponent(&curve, (lo, hi))?;
    Ok((curve, fit))
}

/// Truncation ladder for an `L^p` density: gaps strictly decreasing and
/// the top-level exponent at least `1/(nq + 1) - 0.1`, `q` the conjugate
/// exponent of `p`.
pub fn theorem_b_suite(cfg: &RunConfig) -> Result<Verdict> {
    let p_exp = cfg.f_p.unwrap_or(1.5);
    let problem = cfg.problem()?;
    let grid = problem.build_grid()?;
    let (u, ladder) = solve_lp_on_grid(&problem, grid, &cfg.f_ladder, &cfg.solver_config())?;
    let q = p_exp / (p_exp - 1.0);
    let bound = 1.0 / (cfg.n as f64 * q + 1.0) - 0.1;
    let hi = 0.2 * problem.domain.diameter;
    let (curve, fit) = modulus_fit(&u, cfg, 2.0 * cfg.h, hi)?;
    let decreasing = ladder.gaps.windows(2).all(|w| w[1] < w[0]);
    let violations: usize = ladder.reports.iter().map(|r| r.monotonicity_violations).sum();
    let checks = vec![
        check("ladder gaps strictly decreasing", decreasing, format!("levels {:?}, gaps {:?}", ladder.levels, ladder.gaps)),
        check("exponent lower bound", fit.slope >= bound, format!("fitted {:.4} >= {bound:.4} (p = {p_exp}, q = {q})", fit.slope)),
        check("monotone ascent", violations == 0, format!("{violations} violations")),
    ];
    Ok(Verdict::new("theorem-b", checks, json!({ "ladder": ladder, "fit": fit, "modulus": curve })))
}

/// The exact solution of the ball example with `psi`.
pub fn example_ball_exact(psi: Psi) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| BoundaryData::Example47(psi).eval(x)
}

pub struct ExampleBall {
    pub solved: Solved,
    pub sup_error: f64,
    pub modulus: ModulusCurve,
    pub fit: ExponentFit,
}

/// Solves the ball example for `psi` with the configured grid and
/// directions; the fit runs over `[2h, 0.5]`.
pub fn example_ball(cfg: &RunConfig, psi: Psi) -> Result<ExampleBall> {
    let kind = match psi {
        Psi::Linear => "example47_linear",
        Psi::Sqrt => "example47_sqrt",
    };
    let cfg = cfg.with_all(&[("phi.kind", kind), ("f.kind", "zero")])?;
    let s = solve_config(&cfg)?;
    if !matches!(s.problem.domain.kind, DomainKind::Ball { ref center, radius } if radius == 1.0 && center.iter().all(|c| *c == 0.0)) {
        return Err(Error::Input("the ball example needs the unit ball".into()));
    }
    let exact = example_ball_exact(psi);
    let g = &s.u.grid;
    let sup_error = g
        .interior
        .iter()
        .map(|&i| (s.u.values[i] - exact(&g.coords(i))).abs())
        .fold(0.0, f64::max);
    let (modulus, fit) = modulus_fit(&s.u, &cfg, 2.0 * cfg.h, 0.5)?;
    Ok(ExampleBall { solved: s, sup_error, modulus, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_psd_has_the_requested_spectrum() {
        let mut r = rng(5);
        for n in [2, 3] {
            let (q, eig) = random_psd(n, 10.0, &mut r);
            let h = ComplexHessian::new(q.clone()).unwrap();
            let mut e = h.eigenvalues();
            e.sort_by(f64::total_cmp);
            let mut want = eig.clone();
            want.sort_by(f64::total_cmp);
            for (a, b) in e.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10);
            }
            assert!((q.determinant().re - eig.iter().product::<f64>()).abs() < 1e-9);
        }
    }

    #[test]
    fn ball_volumes() {
        let pi = std::f64::consts::PI;
        assert!((abs_sq_mass_on_ball(1, 1.0) - 4.0 * pi).abs() < 1e-12);
        assert!((abs_sq_mass_on_ball(2, 1.0) - 8.0 * pi * pi / 2.0).abs() < 1e-12);
    }
}
