//! Empirical moduli of continuity, Hölder exponent fits, psi-norms and the
//! inequality verdicts built on them.
//!
//! Moduli are estimated from a deterministic pair sample: every axis pair at
//! every lag, plus seeded random pairs. One end of a pair is an interior
//! node, the other an interior or band node, so the boundary values held on
//! the band take part. Undersampling can only make an estimate smaller, so verdicts with
//! the estimated modulus of the solution on the left are one-sided safe.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::barriers::barrier_slack;
use crate::data::{BoundaryData, Density};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::grid::{Grid, NodeClass, ScalarField};
use crate::modulus::{minimal_concave_majorant, point_set_modulus, ModulusCurve};
use crate::sampling::rng;
use crate::solver::{density_root, solve_discrete, Discrete, ProblemSpec, SolverConfig, SolverReport};

#[derive(Debug, Clone)]
pub struct PairOptions {
    /// Random pairs on top of the axis pairs.
    pub pair_budget: usize,
    pub seed: u64,
}

impl Default for PairOptions {
    fn default() -> Self {
        Self { pair_budget: 2_000_000, seed: 17 }
    }
}

/// Geometric grid of `points` values from `t_min` to `t_max`.
pub fn t_grid(t_min: f64, t_max: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![t_min];
    }
    let r = (t_max / t_min).powf(1.0 / (points - 1) as f64);
    (0..points).map(|k| t_min * r.powi(k as i32)).collect()
}

/// The default grid: from `2h` to half the diameter, 24 points.
pub fn default_t_grid(h: f64, diameter: f64) -> Vec<f64> {
    t_grid(2.0 * h, 0.5 * diameter, 24)
}

/// Differences over the pair sample of a field.
struct PairSample {
    h: f64,
    /// `lag_max[k - 1]`: largest difference over axis pairs at lag `k`.
    lag_max: Vec<f64>,
    /// `(distance, difference)` of the random pairs, by distance.
    random: Vec<(f64, f64)>,
}

/// Value at a pair partner: interior nodes, and band nodes with a finite value.
fn partner_value(field: &ScalarField, lin: usize) -> Option<f64> {
    let v = field.values[lin];
    match field.grid.class[lin] {
        NodeClass::Interior => Some(v),
        NodeClass::Band if v.is_finite() => Some(v),
        _ => None,
    }
}

fn sample_pairs(field: &ScalarField, max_dist: f64, opts: &PairOptions) -> Result<PairSample> {
    let g: &Grid = &field.grid;
    if g.interior.iter().any(|&i| !field.values[i].is_finite()) {
        return Err(Error::Input(format!("field {} is not finite at interior nodes", field.metadata)));
    }
    let kmax = (max_dist / g.h + 1e-9).floor() as usize;
    let dim = g.dim();
    let lag_max: Vec<f64> = (1..=kmax)
        .into_par_iter()
        .map(|k| {
            let mut m: f64 = 0.0;
            for d in 0..dim {
                let stride = g.strides[d];
                for &i in &g.interior {
                    let coord = (i / stride) % g.extents[d];
                    if coord + k < g.extents[d] {
                        if let Some(v) = partner_value(field, i + k * stride) {
                            m = m.max((field.values[i] - v).abs());
                        }
                    }
                    // interior pairs are seen from their lower end already
                    if coord >= k && g.class[i - k * stride] == NodeClass::Band {
                        if let Some(v) = partner_value(field, i - k * stride) {
                            m = m.max((field.values[i] - v).abs());
                        }
                    }
                }
            }
            m
        })
        .collect();

    // random pairs: a uniform interior node and a uniform lattice offset in
    // the ball of radius kmax, in fixed-size chunks with their own seeds
    const CHUNK: usize = 1 << 16;
    let chunks = opts.pair_budget.div_ceil(CHUNK);
    let kmax_i = kmax as i64;
    let mut random: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut r = rng(opts.seed.wrapping_mul(0x9e37_79b9).wrapping_add(c as u64));
            let count = CHUNK.min(opts.pair_budget - c * CHUNK);
            let mut out = Vec::with_capacity(count);
            let mut off = vec![0i64; dim];
            let mut idx = vec![0usize; dim];
            let mut attempts = 0;
            while out.len() < count && attempts < 4 * count && kmax > 0 {
                attempts += 1;
                let i = g.interior[r.gen_range(0..g.interior.len())];
                let mut n2 = 0;
                for o in off.iter_mut() {
                    *o = r.gen_range(-kmax_i..=kmax_i);
                    n2 += *o * *o;
                }
                if n2 == 0 || n2 > kmax_i * kmax_i {
                    continue;
                }
                g.multi_index(i, &mut idx);
                let mut lin = 0usize;
                let mut inside = true;
                for d in 0..dim {
                    let k = idx[d] as i64 + off[d];
                    if k < 0 || k as usize >= g.extents[d] {
                        inside = false;
                        break;
                    }
                    lin += k as usize * g.strides[d];
                }
                if !inside {
                    continue;
                }
                if let Some(v) = partner_value(field, lin) {
                    out.push(((n2 as f64).sqrt() * g.h, (field.values[i] - v).abs()));
                }
            }
            out
        })
        .collect();
    random.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(PairSample { h: g.h, lag_max, random })
}

impl PairSample {
    /// Largest difference over pairs at distance at most `t`, or `None` if
    /// there are none.
    fn modulus_at(&self, t: f64) -> Option<f64> {
        let k = ((t / self.h + 1e-9).floor() as usize).min(self.lag_max.len());
        let axis = self.lag_max[..k].iter().copied().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
        let n = self.random.partition_point(|p| p.0 <= t);
        let rand = self.random[..n].iter().map(|p| p.1).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
        match (axis, rand) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    /// `sup |difference| / psi(distance)` over the sample.
    fn ratio_sup(&self, psi: &dyn Fn(f64) -> f64) -> Result<f64> {
        let mut best: f64 = 0.0;
        let pairs = self
            .lag_max
            .iter()
            .enumerate()
            .map(|(k, &m)| ((k + 1) as f64 * self.h, m))
            .chain(self.random.iter().copied());
        for (d, w) in pairs {
            let p = psi(d);
            if !(p > 0.0) {
                return Err(Error::Input(format!("psi({d}) = {p} at a sampled positive distance")));
            }
            best = best.max(w / p);
        }
        Ok(best)
    }
}

/// Empirical modulus `w(t)` of a field over its interior and band nodes at the given
/// `t`, with the concave majorant attached. Values of `t` with no pair at
/// distance `<= t` are dropped with a warning.
pub fn empirical_modulus(field: &ScalarField, ts: &[f64], opts: &PairOptions) -> Result<ModulusCurve> {
    if ts.windows(2).any(|w| !(w[0] < w[1])) || ts.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Input("t grid must be positive and increasing".into()));
    }
    let max = ts.last().copied().unwrap_or(0.0);
    let pairs = sample_pairs(field, max, opts)?;
    let mut samples = Vec::with_capacity(ts.len());
    let mut run: f64 = 0.0;
    for &t in ts {
        match pairs.modulus_at(t) {
            Some(w) => {
                run = run.max(w);
                samples.push((t, run));
            }
            None => log::warn!("no pairs at distance <= {t}; dropped from the modulus"),
        }
    }
    let mut curve = minimal_concave_majorant(&samples)?;
    curve.pair_budget = opts.pair_budget;
    Ok(curve)
}

/// Least-squares line through `(log t, log w)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExponentFit {
    pub t_range: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    pub samples: usize,
    pub pair_budget: usize,
}

pub fn fit_exponent(curve: &ModulusCurve, t_range: (f64, f64)) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> = curve
        .samples
        .iter()
        .filter(|&&(t, w)| t >= t_range.0 * (1.0 - 1e-12) && t <= t_range.1 * (1.0 + 1e-12) && w > 0.0)
        .map(|&(t, w)| (t.ln(), w.ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::Fit(format!(
            "{} usable samples in [{}, {}], need at least 5",
            pts.len(),
            t_range.0,
            t_range.1
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / m).sqrt();
    if !slope.is_finite() {
        return Err(Error::Fit("slope is not finite".into()));
    }
    Ok(ExponentFit { t_range, slope, intercept, residual, samples: pts.len(), pair_budget: curve.pair_budget })
}

/// Sampled modulus of the boundary data as a step function.
pub fn boundary_data_modulus(domain: &DomainSpec, phi: &BoundaryData, samples: usize, seed: u64) -> Result<ModulusCurve> {
    let pts = domain.boundary_samples(samples, seed);
    let vals: Vec<f64> = pts.iter().map(|p| phi.eval(p)).collect();
    minimal_concave_majorant(&point_set_modulus(&pts, &vals))
}

/// `f^{1/n}` as a field on the interior nodes.
pub fn density_root_field(f: &Density, grid: Arc<Grid>, truncate: Option<f64>) -> Result<ScalarField> {
    let rhs = density_root(f, &grid, truncate)?;
    let mut out = ScalarField::new(grid.clone(), format!("f^(1/n), f={}", f.label()));
    for (pos, &i) in grid.interior.iter().enumerate() {
        out.values[i] = rhs[pos];
    }
    Ok(out)
}

/// A ratio `w_U(t) / bound(t)` over a `t` grid and its verdict.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub ts: Vec<f64>,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub cap: f64,
    /// The ratio rises at every step as `t` decreases over the lower half
    /// of the grid.
    pub blow_up: bool,
    /// The bound vanished somewhere and was floored by `t^{1/2}`.
    pub flagged: bool,
    pub pass: bool,
}

fn ratio_report(ts: Vec<f64>, ratios: Vec<f64>, cap: f64, flagged: bool) -> RatioReport {
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let half = ratios.len().div_ceil(2).max(3).min(ratios.len());
    let low = &ratios[..half];
    let blow_up = low.len() >= 3 && low.windows(2).all(|w| w[0] > w[1]);
    let pass = max_ratio.is_finite() && max_ratio <= cap && !blow_up;
    RatioReport { ts, ratios, max_ratio, cap, blow_up, flagged, pass }
}

/// `eta(t) = w_U(t) / ((1 + |f|^{1/n}) max(w_phi(t^{1/2}), w_{f^{1/n}}(t), t^{1/2}))`
/// on the samples of `u_curve`.
pub fn theorem_a_verdict(
    u_curve: &ModulusCurve,
    phi_curve: &ModulusCurve,
    f_curve: &ModulusCurve,
    f_root_sup: f64,
    eta_cap: f64,
) -> RatioReport {
    let (ts, ratios) = u_curve
        .samples
        .iter()
        .map(|&(t, w)| {
            let bound = (1.0 + f_root_sup) * phi_curve.value(t.sqrt()).max(f_curve.value(t)).max(t.sqrt());
            (t, w / bound)
        })
        .unzip();
    ratio_report(ts, ratios, eta_cap, false)
}

/// Moduli and verdict for one solved problem.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremA {
    pub u: ModulusCurve,
    pub phi: ModulusCurve,
    pub f: ModulusCurve,
    pub f_root_sup: f64,
    pub verdict: RatioReport,
}

/// Runs the modulus ratio verdict on a solution of the problem bound in `disc`.
pub fn theorem_a(
    u: &ScalarField,
    disc: &Discrete,
    domain: &DomainSpec,
    ts: &[f64],
    pairs: &PairOptions,
    eta_cap: f64,
) -> Result<TheoremA> {
    let u_curve = empirical_modulus(u, ts, pairs)?;
    let phi_curve = boundary_data_modulus(domain, disc.scheme.phi(), 1500, pairs.seed)?;
    let mut f_field = ScalarField::new(disc.grid().clone(), "f^(1/n)");
    for (pos, &i) in disc.grid().interior.iter().enumerate() {
        f_field.values[i] = disc.rhs[pos];
    }
    let f_curve = empirical_modulus(&f_field, ts, pairs)?;
    let f_root_sup = disc.rhs.iter().copied().fold(0.0, f64::max);
    let verdict = theorem_a_verdict(&u_curve, &phi_curve, &f_curve, f_root_sup, eta_cap);
    Ok(TheoremA { u: u_curve, phi: phi_curve, f: f_curve, f_root_sup, verdict })
}

/// Comparison of the moduli of the solutions with and without the density.
#[derive(Debug, Clone, Serialize)]
pub struct OmegaU0 {
    pub u: ModulusCurve,
    pub u0: ModulusCurve,
    pub f: ModulusCurve,
    pub verdict: RatioReport,
    pub reports: Vec<SolverReport>,
}

/// `w_U(t) / ((1 + |f|^{1/n}) max(w_{U0}(t), w_{f^{1/n}}(t)))` where `U0`
/// solves the same problem with `f = 0`. If that bound vanishes anywhere
/// (with `w_{U0}` below the accuracy of its solve taken as zero) it is
/// floored by `t^{1/2}` and the report is flagged.
pub fn omega_u0_comparison(
    problem: &ProblemSpec,
    cfg: &SolverConfig,
    ts: &[f64],
    pairs: &PairOptions,
    eta_cap: f64,
) -> Result<OmegaU0> {
    let grid = problem.build_grid()?;
    let disc = Discrete::on_grid(problem, grid.clone())?;
    let (u, r1) = solve_discrete(&disc, cfg)?;
    let disc0 = Discrete::on_grid(&problem.with_data(problem.phi.clone(), Density::Zero), grid.clone())?;
    let (u0, r0) = solve_discrete(&disc0, cfg)?;
    let f_field = density_root_field(&problem.f, grid, None)?;
    let cu = empirical_modulus(&u, ts, pairs)?;
    let c0 = empirical_modulus(&u0, ts, pairs)?;
    let cf = empirical_modulus(&f_field, ts, pairs)?;
    let k = disc.rhs.iter().copied().fold(0.0, f64::max);
    // differences of U0 below its solve accuracy count as zero
    let noise = 2.0 * (r0.tol + r0.value_residual + barrier_slack(&disc0));
    let raw: Vec<f64> = cu
        .samples
        .iter()
        .map(|&(t, _)| {
            let w0 = c0.value(t);
            (1.0 + k) * (if w0 <= noise { 0.0 } else { w0 }).max(cf.value(t))
        })
        .collect();
    let flagged = raw.iter().any(|&b| b <= 0.0);
    let (ts, ratios) = cu
        .samples
        .iter()
        .zip(&raw)
        .map(|(&(t, w), &b)| {
            let b = if flagged { b.max((1.0 + k) * t.sqrt()) } else { b };
            (t, if w == 0.0 { 0.0 } else { w / b })
        })
        .unzip();
    let verdict = ratio_report(ts, ratios, eta_cap, flagged);
    Ok(OmegaU0 { u: cu, u0: c0, f: cf, verdict, reports: vec![r1, r0] })
}

/// Stability of solutions under changes of the data.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    /// `sup |U1 - U2|` over interior nodes.
    pub lhs: f64,
    /// `d^2 |f1 - f2|_inf^{1/n} + |phi1 - phi2|_inf`.
    pub rhs: f64,
    pub phi_diff: f64,
    pub f_diff: f64,
    pub eps_disc: f64,
    pub pass: bool,
    /// `|U1 - U2|_{L^n} / (|phi1 - phi2|_inf + (r^2 / 4) |f1 - f2|_{L^1}^{1/n})`,
    /// reported only.
    pub ln_ratio: f64,
}

/// Stability verdict for two solutions on the same grid. The data
/// difference is taken over band nodes and a boundary sample, since the
/// discrete problem reads `phi` on the band.
#[allow(clippy::too_many_arguments)]
pub fn stability_from_solutions(
    domain: &DomainSpec,
    u1: &ScalarField,
    d1: &Discrete,
    r1: &SolverReport,
    u2: &ScalarField,
    d2: &Discrete,
    r2: &SolverReport,
) -> Result<StabilityReport> {
    let g = &u1.grid;
    if !g.same_layout(&u2.grid) || !g.same_layout(d1.grid()) || !g.same_layout(d2.grid()) {
        return Err(Error::Input("stability check needs both solutions on the same grid".into()));
    }
    let n = g.n as i32;
    let (p1, p2) = (d1.scheme.phi(), d2.scheme.phi());
    let mut phi_diff: f64 = 0.0;
    let mut x = vec![0.0; g.dim()];
    for &b in &g.band {
        g.coord(b, &mut x);
        phi_diff = phi_diff.max((p1.eval(&x) - p2.eval(&x)).abs());
    }
    for p in domain.boundary_samples(1000, 3) {
        phi_diff = phi_diff.max((p1.eval(&p) - p2.eval(&p)).abs());
    }
    let f_diffs: Vec<f64> = d1.rhs.iter().zip(&d2.rhs).map(|(a, b)| (a.powi(n) - b.powi(n)).abs()).collect();
    let f_diff = f_diffs.iter().copied().fold(0.0, f64::max);
    let lhs = u1.max_abs_diff_interior(u2);
    let d = domain.diameter;
    let rhs = d * d * f_diff.powf(1.0 / n as f64) + phi_diff;
    let eps_disc = 2.0 * (r1.tol.max(r2.tol) + r1.value_residual.max(r2.value_residual));
    let vol = g.h.powi(2 * n);
    let ln = (g.interior.iter().map(|&i| (u1.values[i] - u2.values[i]).abs().powi(n)).sum::<f64>() * vol)
        .powf(1.0 / n as f64);
    let l1 = (f_diffs.iter().sum::<f64>() * vol).powf(1.0 / n as f64);
    let r = domain.circumradius;
    let denom = phi_diff + 0.25 * r * r * l1;
    let ln_ratio = if denom > 0.0 { ln / denom } else if ln == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(StabilityReport { lhs, rhs, phi_diff, f_diff, eps_disc, pass: lhs <= rhs + eps_disc, ln_ratio })
}

/// Solves both problems on one grid and runs the stability verdict.
pub fn stability_check(p1: &ProblemSpec, p2: &ProblemSpec, cfg: &SolverConfig) -> Result<StabilityReport> {
    let grid = p1.build_grid()?;
    if !grid.same_layout(&*p2.build_grid()?) {
        return Err(Error::Input("stability check needs the same domain and grid spacing".into()));
    }
    let d1 = Discrete::on_grid(p1, grid.clone())?;
    let d2 = Discrete::on_grid(p2, grid)?;
    let (u1, r1) = solve_discrete(&d1, cfg)?;
    let (u2, r2) = solve_discrete(&d2, cfg)?;
    stability_from_solutions(&p1.domain, &u1, &d1, &r1, &u2, &d2, &r2)
}

#[derive(Debug, Clone, Serialize)]
pub struct PsiNormReport {
    pub sup_part: f64,
    pub ratio_part: f64,
    pub psi: String,
    pub total: f64,
}

/// `sup |g| + sup |g(x) - g(y)| / psi(|x - y|)` over interior nodes and the
/// pair sample.
pub fn psi_norm(field: &ScalarField, psi: &dyn Fn(f64) -> f64, label: &str, max_dist: f64, pairs: &PairOptions) -> Result<PsiNormReport> {
    let sample = sample_pairs(field, max_dist, pairs)?;
    let sup_part = field.grid.interior.iter().map(|&i| field.values[i].abs()).fold(0.0, f64::max);
    let ratio_part = sample.ratio_sup(psi)?;
    Ok(PsiNormReport { sup_part, ratio_part, psi: label.into(), total: sup_part + ratio_part })
}

/// The psi-norm of boundary data over a boundary sample (all pairs).
pub fn boundary_psi_norm(domain: &DomainSpec, phi: &BoundaryData, psi: &dyn Fn(f64) -> f64, label: &str, samples: usize) -> Result<PsiNormReport> {
    let pts = domain.boundary_samples(samples, 5);
    let vals: Vec<f64> = pts.iter().map(|p| phi.eval(p)).collect();
    let sup_part = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut ratio_part: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if d == 0.0 {
                continue;
            }
            let p = psi(d);
            if !(p > 0.0) {
                return Err(Error::Input(format!("psi({d}) = {p} at a sampled positive distance")));
            }
            ratio_part = ratio_part.max((vals[i] - vals[j]).abs() / p);
        }
    }
    Ok(PsiNormReport { sup_part, ratio_part, psi: label.into(), total: sup_part + ratio_part })
}

/// `|U|_psi <= 2 (d^2 + 1)(1 + |f|^{1/n}) max(|phi|_{psi1}, |f^{1/n}|_{psi2})`
/// with `psi(t) = max(psi1(t^{1/2}), psi2(t))`.
#[derive(Debug, Clone, Serialize)]
pub struct PsiVerdict {
    pub u: PsiNormReport,
    pub phi: PsiNormReport,
    pub f: PsiNormReport,
    pub bound: f64,
    pub pass: bool,
}

pub fn psi_norm_verdict(
    u: &ScalarField,
    disc: &Discrete,
    domain: &DomainSpec,
    psi1: &dyn Fn(f64) -> f64,
    psi2: &dyn Fn(f64) -> f64,
    pairs: &PairOptions,
) -> Result<PsiVerdict> {
    let psi = |t: f64| psi1(t.sqrt()).max(psi2(t));
    let reach = domain.diameter;
    let ru = psi_norm(u, &psi, "max(psi1(t^1/2), psi2(t))", reach, pairs)?;
    let rphi = boundary_psi_norm(domain, disc.scheme.phi(), psi1, "psi1", 600)?;
    let mut f_field = ScalarField::new(disc.grid().clone(), "f^(1/n)");
    for (pos, &i) in disc.grid().interior.iter().enumerate() {
        f_field.values[i] = disc.rhs[pos];
    }
    let rf = psi_norm(&f_field, psi2, "psi2", reach, pairs)?;
    let d = domain.diameter;
    let k = rf.sup_part;
    let bound = 2.0 * (d * d + 1.0) * (1.0 + k) * rphi.total.max(rf.total);
    Ok(PsiVerdict { pass: ru.total <= bound, u: ru, phi: rphi, f: rf, bound })
}

/// `h^{2n}` times the sum over interior nodes of the cross-stencil
/// Laplacian in the `2n` real coordinates.
pub fn laplacian_mass(field: &ScalarField) -> Result<f64> {
    let g = &field.grid;
    let h2 = g.h * g.h;
    let mut total = 0.0;
    for &i in &g.interior {
        let mut lap = 0.0;
        for &s in &g.strides {
            let (a, b) = (field.values[i + s], field.values[i - s]);
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::Input(format!("field {} is not finite next to node {i}", field.metadata)));
            }
            lap += (a + b - 2.0 * field.values[i]) / h2;
        }
        total += lap;
    }
    Ok(total * g.h.powi(2 * g.n as i32))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MassComparison {
    pub mass_u: f64,
    pub mass_v: f64,
    pub relative_slack: f64,
    pub pass: bool,
}

/// For `v <= u` in the interior and `u = v` on the band (within the given
/// tolerances): `mass(u) <= mass(v) + 5% |mass(v)|`.
pub fn mass_comparison(u: &ScalarField, v: &ScalarField, tol: f64, band_tol: f64) -> Result<MassComparison> {
    let g = &u.grid;
    if !g.same_layout(&v.grid) {
        return Err(Error::Input("mass comparison needs both fields on one grid".into()));
    }
    if let Some(&i) = g.interior.iter().find(|&&i| v.values[i] > u.values[i] + tol) {
        return Err(Error::Input(format!("v exceeds u by {:e} at interior node {i}", v.values[i] - u.values[i])));
    }
    if let Some(&i) = g.band.iter().find(|&&i| (v.values[i] - u.values[i]).abs() > band_tol) {
        return Err(Error::Input(format!("u and v differ by {:e} at band node {i}", (v.values[i] - u.values[i]).abs())));
    }
    let mass_u = laplacian_mass(u)?;
    let mass_v = laplacian_mass(v)?;
    let relative_slack = 0.05;
    Ok(MassComparison { mass_u, mass_v, relative_slack, pass: mass_u <= mass_v + relative_slack * mass_v.abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_domain, DomainKind};
    use crate::grid::{build_grid, GridOptions};

    fn ball_grid(h: f64) -> (DomainSpec, Arc<Grid>) {
        let d = make_domain(DomainKind::Ball { center: vec![0.0; 4], radius: 1.0 }, 2).unwrap();
        let g = build_grid(&d, h, 3.0 * h, &GridOptions::default()).unwrap();
        (d, Arc::new(g))
    }

    fn small_pairs() -> PairOptions {
        PairOptions { pair_budget: 20_000, seed: 3 }
    }

    #[test]
    fn constant_field_has_zero_modulus() {
        let (d, g) = ball_grid(0.2);
        let u = ScalarField::from_fn(g, "c", |_| 2.5);
        let c = empirical_modulus(&u, &default_t_grid(0.2, d.diameter), &small_pairs()).unwrap();
        assert!(c.samples.iter().all(|p| p.1 == 0.0));
    }

    #[test]
    fn linear_field_modulus_is_distance() {
        let (d, g) = ball_grid(0.1);
        let u = ScalarField::from_fn(g, "re z1", |x| x[0]);
        let ts = default_t_grid(0.1, d.diameter);
        let c = empirical_modulus(&u, &ts, &small_pairs()).unwrap();
        // axis pairs realize every multiple of h, so w(t) = h floor(t / h)
        for &(t, w) in &c.samples {
            let expect = 0.1 * (t / 0.1 + 1e-9).floor();
            assert!(w <= t + 1e-12, "w({t}) = {w}");
            assert!(w >= expect - 1e-12, "w({t}) = {w}, expected at least {expect}");
        }
    }

    #[test]
    fn power_law_fit_is_exact() {
        let samples: Vec<(f64, f64)> = t_grid(0.01, 1.0, 12).into_iter().map(|t| (t, 3.0 * t.powf(0.4))).collect();
        let mut c = minimal_concave_majorant(&samples).unwrap();
        c.pair_budget = 7;
        let fit = fit_exponent(&c, (0.01, 1.0)).unwrap();
        assert!((fit.slope - 0.4).abs() < 1e-6);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-6);
        assert_eq!(fit.pair_budget, 7);
    }

    #[test]
    fn fit_needs_five_samples() {
        let c = minimal_concave_majorant(&[(0.1, 0.1), (0.2, 0.2), (0.3, 0.3)]).unwrap();
        assert!(matches!(fit_exponent(&c, (0.0, 1.0)), Err(Error::Fit(_))));
    }

    #[test]
    fn mass_of_abs_sq_is_four_pi_squared() {
        let (_, g) = ball_grid(0.1);
        let u = ScalarField::from_fn(g, "|z|^2", |x| x.iter().map(|a| a * a).sum());
        let m = laplacian_mass(&u).unwrap();
        let exact = 4.0 * std::f64::consts::PI.powi(2);
        assert!((m - exact).abs() < 0.05 * exact, "mass {m}");
    }

    #[test]
    fn mass_comparison_checks_preconditions() {
        let (_, g) = ball_grid(0.2);
        let u = ScalarField::from_fn(g.clone(), "u", |x| x.iter().map(|a| a * a).sum());
        let v = ScalarField::from_fn(g, "v", |x| x.iter().map(|a| a * a).sum::<f64>() + 1.0);
        assert!(mass_comparison(&u, &v, 1e-9, 1e-9).is_err());
        assert!(mass_comparison(&u, &u, 1e-9, 1e-9).unwrap().pass);
    }

    #[test]
    fn psi_norm_of_linear_field() {
        let (_, g) = ball_grid(0.2);
        let u = ScalarField::from_fn(g, "re z1", |x| x[0]);
        let r = psi_norm(&u, &|t| t, "t", 2.0, &small_pairs()).unwrap();
        assert!((r.ratio_part - 1.0).abs() < 1e-9);
        assert!(r.sup_part <= 1.0);
        assert!(psi_norm(&u, &|_| 0.0, "zero", 2.0, &small_pairs()).is_err());
    }

    #[test]
    fn blow_up_detection() {
        let ts = t_grid(0.1, 1.0, 8);
        let rising: Vec<f64> = ts.iter().map(|t| 1.0 / t).collect();
        let r = ratio_report(ts.clone(), rising, 1e3, false);
        assert!(r.blow_up && !r.pass);
        let flat = vec![1.0; ts.len()];
        assert!(ratio_report(ts, flat, 1e3, false).pass);
    }
}
