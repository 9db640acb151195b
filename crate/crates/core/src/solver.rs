//! Monotone fixed-point iteration for `min_H Delta_H u = f^{1/n}`.
//!
//! The iteration starts from the explicit subsolution `A rho + g - eps` and
//! only ever increases, so it realizes the envelope of discrete subsolutions
//! as an increasing limit. Band nodes are frozen at the boundary data.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{BoundaryData, Density, DensityKind};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::grid::{build_grid, Grid, GridOptions, NodeClass, ScalarField};
use crate::hermitian::DirectionSet;
use crate::screen::Screen;
use crate::stencil::{Scheme, Scratch};

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub domain: Arc<DomainSpec>,
    pub phi: BoundaryData,
    pub f: Density,
    pub f_kind: DensityKind,
    pub directions: Arc<DirectionSet>,
    pub grid_h: f64,
    pub grid_margin: Option<f64>,
    pub grid_options: GridOptions,
}

impl ProblemSpec {
    pub fn new(domain: DomainSpec, phi: BoundaryData, f: Density, directions: DirectionSet, grid_h: f64) -> Self {
        let reach = directions.arm_scale.ceil() as usize + 1;
        Self {
            domain: Arc::new(domain),
            phi,
            f,
            f_kind: DensityKind::Continuous,
            directions: Arc::new(directions),
            grid_h,
            grid_margin: None,
            grid_options: GridOptions { reach_cells: reach, ..GridOptions::default() },
        }
    }

    pub fn n(&self) -> usize {
        self.domain.n
    }

    pub fn margin(&self) -> f64 {
        self.grid_margin
            .unwrap_or((self.grid_options.reach_cells + 1) as f64 * self.grid_h)
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(build_grid(&self.domain, self.grid_h, self.margin(), &self.grid_options)?))
    }

    pub fn with_data(&self, phi: BoundaryData, f: Density) -> Self {
        let mut p = self.clone();
        p.phi = phi;
        p.f = f;
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepMode {
    GaussSeidelLex,
    Jacobi,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Update tolerance; `None` means `1e-8 (1 + sup |phi|)`.
    pub tol: Option<f64>,
    pub max_sweeps: usize,
    pub mode: SweepMode,
    /// Skip frames that provably cannot attain the minimum (Gauss-Seidel
    /// only). Results are bit-identical either way.
    pub screening: bool,
    /// Gauss-Seidel only: once the sweep updates decay geometrically, jump
    /// ahead along the last update and keep the jump only if the next sweep
    /// raises every node.
    pub extrapolate: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: None, max_sweeps: 20_000, mode: SweepMode::GaussSeidelLex, screening: true, extrapolate: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub converged: bool,
    pub tol: f64,
    pub tol_residual: f64,
    pub final_residual: f64,
    /// Largest `|min_H Delta_H u - f^{1/n}|` over nodes with no shortened arm.
    pub deep_residual: f64,
    /// Largest `|T(u) - u|` with `T` the node update: the residual in value
    /// units.
    pub value_residual: f64,
    pub residual_exceedances: usize,
    pub monotonicity_violations: usize,
    /// Sup update of every kept sweep; undone sweeps are counted in
    /// `iterations` but not listed.
    pub sup_update_history: Vec<f64>,
    pub wall_time_s: f64,
    pub subsolution_a: f64,
    pub subsolution_eps: f64,
    pub frame_evaluations: u64,
    pub skipped_frames: u64,
    /// Extrapolation jumps kept and undone.
    pub jumps_accepted: usize,
    pub jumps_rejected: usize,
    pub interior_nodes: usize,
    pub directions: String,
}

/// A problem bound to its grid: the scheme plus `f^{1/n}` at interior nodes.
#[derive(Debug)]
pub struct Discrete {
    pub scheme: Scheme,
    pub rhs: Vec<f64>,
}

impl Discrete {
    pub fn new(problem: &ProblemSpec) -> Result<Self> {
        let grid = problem.build_grid()?;
        Self::on_grid(problem, grid)
    }

    /// Uses an existing grid (which must have been built for this domain).
    pub fn on_grid(problem: &ProblemSpec, grid: Arc<Grid>) -> Result<Self> {
        let rhs = density_root(&problem.f, &grid, None)?;
        let scheme = Scheme::new(grid, problem.domain.clone(), problem.directions.clone(), problem.phi.clone())?;
        Ok(Self { scheme, rhs })
    }

    pub fn with_rhs(problem: &ProblemSpec, grid: Arc<Grid>, rhs: Vec<f64>) -> Result<Self> {
        let scheme = Scheme::new(grid, problem.domain.clone(), problem.directions.clone(), problem.phi.clone())?;
        Ok(Self { scheme, rhs })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.scheme.grid
    }

    pub fn phi_sup(&self) -> f64 {
        let g = &self.scheme.grid;
        let mut x = vec![0.0; g.dim()];
        g.band
            .iter()
            .map(|&i| {
                g.coord(i, &mut x);
                self.scheme.phi().eval(&x).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn default_tol(&self) -> f64 {
        1e-8 * (1.0 + self.phi_sup())
    }

    pub fn tol_residual(&self, tol: f64) -> f64 {
        10.0 * tol * self.scheme.max_trace() / (self.scheme.delta * self.scheme.delta)
    }
}

/// `f^{1/n}` at interior nodes; `truncate` caps `f` first (an infinite
/// value becomes the cap).
pub fn density_root(f: &Density, grid: &Grid, truncate: Option<f64>) -> Result<Vec<f64>> {
    let n = grid.n as f64;
    let mut x = vec![0.0; grid.dim()];
    grid.interior
        .iter()
        .map(|&i| {
            grid.coord(i, &mut x);
            let mut v = f.eval(&x);
            if let Some(m) = truncate {
                v = v.min(m);
            }
            if v.is_nan() || v < 0.0 {
                return Err(Error::Input(format!("density {} is {v} at {x:?}", f.label())));
            }
            if !v.is_finite() {
                return Err(Error::Input(format!(
                    "density {} is infinite at {x:?}; use the truncation ladder",
                    f.label()
                )));
            }
            Ok(v.powf(1.0 / n))
        })
        .collect()
}

/// Field holding the boundary data at interior and band nodes.
pub fn boundary_field(grid: Arc<Grid>, phi: &BoundaryData) -> ScalarField {
    ScalarField::from_fn(grid, format!("phi={}", phi.label()), |x| phi.eval(x))
}

/// Constants chosen for the starting subsolution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Subsolution {
    pub a: f64,
    pub eps: f64,
    pub slack_g: f64,
    pub doublings: usize,
}

/// `v0 = A rho + g - eps` with `g` the boundary data, band nodes set to the
/// boundary data. `A` starts at `(sup f^{1/n} + slack_g) / c` and doubles
/// until every interior node satisfies the discrete subsolution inequality.
pub fn initial_subsolution(disc: &Discrete) -> Result<(ScalarField, Subsolution)> {
    let sch = &disc.scheme;
    let grid = sch.grid.clone();
    let g = boundary_field(grid.clone(), sch.phi());
    let mut sc = sch.scratch();

    // how far g itself is from being a subsolution, node by node
    let mut deficit: f64 = 0.0;
    let mut min_dg = f64::INFINITY;
    for pos in 0..grid.interior.len() {
        let dg = sch.min_delta_h(&g.values, pos, &mut sc)?;
        min_dg = min_dg.min(dg);
        deficit = deficit.max(disc.rhs[pos] - dg);
    }
    let slack_g = (-min_dg).max(0.0);
    let c = sch.domain.c;

    // lag-one oscillation of phi across neighboring band nodes
    let mut osc: f64 = 0.0;
    let mut max_rho_band: f64 = 0.0;
    let mut x = vec![0.0; grid.dim()];
    for &b in &grid.band {
        grid.coord(b, &mut x);
        max_rho_band = max_rho_band.max(sch.domain.rho(&x));
        for &s in &grid.strides {
            let nb = b + s;
            if nb < grid.len() && grid.class[nb] == NodeClass::Band {
                osc = osc.max((g.values[b] - g.values[nb]).abs());
            }
        }
    }

    let rho: Vec<f64> = grid
        .interior
        .iter()
        .map(|&i| {
            grid.coord(i, &mut x);
            sch.domain.rho(&x)
        })
        .collect();

    // deficits at rounding level are noise, not a reason to bend g
    let mut a = if deficit > 1e-12 * (1.0 + sup_abs(&disc.rhs)) { deficit / c } else { 0.0 };
    let mut doublings = 0;
    loop {
        if a > 1e12 {
            return Err(Error::IllPosed(format!(
                "subsolution constant A exceeded 1e12 (c = {c}); is the convexity constant right?"
            )));
        }
        // the full shift keeps v below phi on the whole band; smaller
        // shifts are tried first since only the band near the domain is read
        let full = osc + a * max_rho_band;
        for eps in [0.0, full / 8.0, full] {
            let mut v = g.clone();
            v.metadata = "initial subsolution".into();
            for (pos, &i) in grid.interior.iter().enumerate() {
                v.values[i] = a * rho[pos] + g.values[i] - eps;
            }
            if is_subsolution(disc, &v.values, &mut sc)? {
                log::debug!("subsolution A = {a}, eps = {eps}, slack_g = {slack_g}");
                return Ok((v, Subsolution { a, eps, slack_g, doublings }));
            }
        }
        a = (2.0 * a).max(1e-6);
        doublings += 1;
    }
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `T(v) >= v` at every interior node, up to rounding.
fn is_subsolution(disc: &Discrete, v: &[f64], sc: &mut Scratch) -> Result<bool> {
    let sch = &disc.scheme;
    for (pos, &i) in sch.grid.interior.iter().enumerate() {
        let target = sch.full_update(v, pos, disc.rhs[pos], sc)?;
        if target < v[i] - 1e-13 * (1.0 + v[i].abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Consecutive ratios of the sup update within this spread count as a
/// settled geometric decay.
const RATIO_SPREAD: f64 = 0.02;
const MAX_JUMP_FACTOR: f64 = 1e3;
/// Fraction of the extrapolated remaining ascent taken in a jump.
const MAX_THETA: f64 = 0.9;

/// The common ratio of the last three decay steps of `hist`, if settled.
fn settled_ratio(hist: &[f64]) -> Option<f64> {
    if hist.len() < 4 {
        return None;
    }
    let h = &hist[hist.len() - 4..];
    if h.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let r: Vec<f64> = h.windows(2).map(|w| w[1] / w[0]).collect();
    let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    (hi < 1.0 && hi - lo <= RATIO_SPREAD * hi).then_some(r[2])
}

/// Iterates from `start` until the largest update drops below `tol`.
pub fn iterate(disc: &Discrete, start: ScalarField, cfg: &SolverConfig) -> Result<(ScalarField, SolverReport)> {
    let t0 = Instant::now();
    let sch = &disc.scheme;
    let grid = sch.grid.clone();
    let tol = cfg.tol.unwrap_or_else(|| disc.default_tol());
    if !(tol > 0.0) {
        return Err(Error::Input(format!("solver tolerance {tol} must be positive")));
    }
    let mut u = start;
    let n_int = grid.interior.len();
    let nf = sch.frame_count();
    let mut history = Vec::new();
    let mut violations = 0usize;
    let mut counts = (0u64, 0u64);
    let mut converged = false;
    let mut sweeps = 0;
    let mut sc = sch.scratch();
    let mut screen = (cfg.screening && cfg.mode == SweepMode::GaussSeidelLex).then(|| Screen::new(n_int, nf));
    let mut prefix = 0.0;

    let extrapolate = cfg.extrapolate && cfg.mode == SweepMode::GaussSeidelLex;
    let mut inc: Vec<f64> = vec![0.0; if extrapolate { n_int } else { 0 }];
    let mut prev_inc = inc.clone();
    let mut saved: Vec<f64> = Vec::new();
    // sup updates of plain sweeps since the last jump
    let mut plain: Vec<f64> = Vec::new();
    let mut theta = MAX_THETA;
    let mut jumps = (0usize, 0usize);

    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let mut sup: f64 = 0.0;
        let mut run_dec: f64 = 0.0;
        let jumped = match extrapolate.then(|| settled_ratio(&plain)).flatten() {
            Some(r) => {
                saved.clear();
                for (pos, &i) in grid.interior.iter().enumerate() {
                    saved.push(u.values[i]);
                    // the local decay rate, capped by the global one
                    let local = if prev_inc[pos] > 0.0 { (inc[pos] / prev_inc[pos]).clamp(0.0, r) } else { 0.0 };
                    u.values[i] += theta * (local / (1.0 - local)).min(MAX_JUMP_FACTOR) * inc[pos].max(0.0);
                }
                true
            }
            None => false,
        };
        match cfg.mode {
            SweepMode::GaussSeidelLex => {
                let mut dropped = None;
                for pos in 0..n_int {
                    let i = grid.interior[pos];
                    let old = u.values[i];
                    let new = match screen.as_mut() {
                        Some(scr) => {
                            let (v, evals) = scr.update(sch, &u.values, pos, disc.rhs[pos], &mut sc, prefix + run_dec)?;
                            counts.0 += evals as u64;
                            counts.1 += (nf - evals) as u64;
                            v
                        }
                        None => {
                            counts.0 += nf as u64;
                            sch.full_update(&u.values, pos, disc.rhs[pos], &mut sc)?
                        }
                    };
                    if new.is_nan() {
                        return Err(Error::Numeric(format!("NaN at interior node {i} in sweep {sweeps}")));
                    }
                    if jumped && new < old {
                        log::debug!("jump undone at sweep {sweeps}: node {pos} drops {:e} (theta {theta})", old - new);
                        dropped = Some(pos);
                        break;
                    }
                    if new < old {
                        run_dec = run_dec.max(old - new);
                        if new < old - 1e-12 {
                            violations += 1;
                        }
                    }
                    sup = sup.max((new - old).abs());
                    if extrapolate {
                        prev_inc[pos] = inc[pos];
                        inc[pos] = new - old;
                    }
                    u.values[i] = new;
                }
                if let Some(last) = dropped {
                    // the jump overshot somewhere: undo it and the partial
                    // sweep; bounds past `last` still describe the restored field
                    for (pos, &i) in grid.interior.iter().enumerate() {
                        u.values[i] = saved[pos];
                    }
                    if let Some(scr) = screen.as_mut() {
                        scr.forget(last + 1);
                    }
                    theta *= 0.5;
                    jumps.1 += 1;
                    plain.clear();
                    continue;
                }
                if jumped {
                    log::debug!("jump kept at sweep {sweeps} (theta {theta}), sup update after {sup:e}");
                    jumps.0 += 1;
                    theta = (2.0 * theta).min(MAX_THETA);
                    plain.clear();
                } else {
                    plain.push(sup);
                }
            }
            SweepMode::Jacobi => {
                let vals = &u.values;
                let news: Vec<Result<f64>> = (0..n_int)
                    .into_par_iter()
                    .map_init(|| sch.scratch(), |sc, pos| sch.full_update(vals, pos, disc.rhs[pos], sc))
                    .collect();
                counts.0 += (n_int * sch.frame_count()) as u64;
                let mut next = u.values.clone();
                for (pos, r) in news.into_iter().enumerate() {
                    let new = r?;
                    let i = grid.interior[pos];
                    let old = vals[i];
                    if new.is_nan() {
                        return Err(Error::Numeric(format!("NaN at interior node {i} in sweep {sweeps}")));
                    }
                    if new < old - 1e-12 {
                        violations += 1;
                    }
                    sup = sup.max((new - old).abs());
                    next[i] = new;
                }
                u.values = next;
            }
        }
        prefix += run_dec;
        history.push(sup);
        if sweeps % 100 == 0 {
            log::debug!("sweep {sweeps}: sup update {sup:e}");
        }
        if sup < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("solver stopped after {sweeps} sweeps without reaching tol {tol:e}");
    }

    log::info!("{sweeps} sweeps in {:.2} s", t0.elapsed().as_secs_f64());
    let tol_residual = disc.tol_residual(tol);
    let vals = &u.values;
    let per_node: Vec<(f64, f64)> = (0..n_int)
        .into_par_iter()
        .map_init(
            || sch.scratch(),
            |sc, pos| {
                let r = (sch.min_delta_h(vals, pos, sc)? - disc.rhs[pos]).abs();
                let t = sch.full_update(vals, pos, disc.rhs[pos], sc)?;
                Ok((r, (t - vals[grid.interior[pos]]).abs()))
            },
        )
        .collect::<Result<_>>()?;
    let mut final_residual: f64 = 0.0;
    let mut deep_residual: f64 = 0.0;
    let mut value_residual: f64 = 0.0;
    let mut exceed = 0;
    for (pos, &(r, dv)) in per_node.iter().enumerate() {
        final_residual = final_residual.max(r);
        value_residual = value_residual.max(dv);
        if sch.is_deep(pos) {
            deep_residual = deep_residual.max(r);
        }
        if r > tol_residual {
            exceed += 1;
        }
    }
    u.metadata = format!("solution phi={} rhs-nodes={}", sch.phi().label(), n_int);
    let report = SolverReport {
        iterations: sweeps,
        converged,
        tol,
        tol_residual,
        final_residual,
        deep_residual,
        value_residual,
        residual_exceedances: exceed,
        monotonicity_violations: violations,
        sup_update_history: history,
        wall_time_s: t0.elapsed().as_secs_f64(),
        subsolution_a: 0.0,
        subsolution_eps: 0.0,
        frame_evaluations: counts.0,
        skipped_frames: counts.1,
        jumps_accepted: jumps.0,
        jumps_rejected: jumps.1,
        interior_nodes: n_int,
        directions: sch.dirs.descriptor(),
    };
    Ok((u, report))
}

/// Solves on a prepared discretization, starting from the subsolution.
pub fn solve_discrete(disc: &Discrete, cfg: &SolverConfig) -> Result<(ScalarField, SolverReport)> {
    let t0 = Instant::now();
    let (v0, sub) = initial_subsolution(disc)?;
    log::info!("subsolution ready after {:.2} s (A = {}, {} doublings)", t0.elapsed().as_secs_f64(), sub.a, sub.doublings);
    let (u, mut report) = iterate(disc, v0, cfg)?;
    report.subsolution_a = sub.a;
    report.subsolution_eps = sub.eps;
    report.wall_time_s = t0.elapsed().as_secs_f64();
    Ok((u, report))
}

/// Solves `Dir(Omega, phi, f)` for a continuous density.
pub fn solve(problem: &ProblemSpec, cfg: &SolverConfig) -> Result<(ScalarField, SolverReport)> {
    if problem.f_kind != DensityKind::Continuous {
        return Err(Error::Input("density is declared L^p; use solve_lp".into()));
    }
    let disc = Discrete::new(problem)?;
    solve_discrete(&disc, cfg)
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderReport {
    pub levels: Vec<f64>,
    /// `sup |U_{k+1} - U_k|` over interior nodes.
    pub gaps: Vec<f64>,
    pub reports: Vec<SolverReport>,
}

/// Solves with `min(f, M)` for each level of the truncation ladder and
/// returns the top-level solution and the successive gaps.
pub fn solve_lp(problem: &ProblemSpec, ladder: &[f64], cfg: &SolverConfig) -> Result<(ScalarField, LadderReport)> {
    let grid = problem.build_grid()?;
    solve_lp_on_grid(problem, grid, ladder, cfg)
}

/// The discrete problem with the density truncated at `m`.
pub fn truncated_discrete(problem: &ProblemSpec, grid: Arc<Grid>, m: f64) -> Result<Discrete> {
    let singular: &[Vec<f64>] = match &problem.f_kind {
        DensityKind::Lp { singular_points, .. } => singular_points,
        DensityKind::Continuous => &[],
    };
    let mut rhs = density_root(&problem.f, &grid, Some(m))?;
    // declared singular points take the truncation level
    let mut x = vec![0.0; grid.dim()];
    for (pos, &i) in grid.interior.iter().enumerate() {
        grid.coord(i, &mut x);
        if singular.iter().any(|s| s.iter().zip(&x).all(|(a, b)| (a - b).abs() < 0.5 * grid.h)) {
            rhs[pos] = m.powf(1.0 / grid.n as f64);
        }
    }
    Discrete::with_rhs(problem, grid, rhs)
}

pub fn solve_lp_on_grid(
    problem: &ProblemSpec,
    grid: Arc<Grid>,
    ladder: &[f64],
    cfg: &SolverConfig,
) -> Result<(ScalarField, LadderReport)> {
    if let DensityKind::Lp { p, .. } = &problem.f_kind {
        if !(*p > 1.0) {
            return Err(Error::Input(format!("L^p exponent {p} must exceed 1")));
        }
    }
    if ladder.is_empty() || ladder.windows(2).any(|w| !(w[0] < w[1])) || !(ladder[0] > 0.0) {
        return Err(Error::Input(format!("truncation ladder {ladder:?} must be positive and increasing")));
    }
    let mut fields: Vec<ScalarField> = Vec::new();
    let mut reports = Vec::new();
    let mut gaps = Vec::new();
    for &m in ladder {
        let disc = truncated_discrete(problem, grid.clone(), m)?;
        let (u, rep) = solve_discrete(&disc, cfg)?;
        if let Some(prev) = fields.last() {
            gaps.push(u.max_abs_diff_interior(prev));
        }
        fields.push(u);
        reports.push(rep);
    }
    let top = fields.pop().expect("nonempty ladder");
    Ok((top, LadderReport { levels: ladder.to_vec(), gaps, reports }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_domain, DomainKind};
    use crate::hermitian::{build_direction_set, ladder_profiles};

    fn problem(phi: BoundaryData, f: Density, h: f64, frames: usize) -> ProblemSpec {
        let d = make_domain(DomainKind::Ball { center: vec![0.0; 4], radius: 1.0 }, 2).unwrap();
        let dirs = build_direction_set(2, frames, &ladder_profiles(2, &[1.0, 4.0, 16.0, 64.0]), 1, 2.0).unwrap();
        ProblemSpec::new(d, phi, f, dirs, h)
    }

    #[test]
    fn zero_data_needs_no_doubling() {
        let p = problem(BoundaryData::Const(0.0), Density::Zero, 0.25, 4);
        let disc = Discrete::new(&p).unwrap();
        let (v, sub) = initial_subsolution(&disc).unwrap();
        assert_eq!(sub.a, 0.0);
        assert_eq!(sub.doublings, 0);
        assert!(v.values.iter().filter(|x| x.is_finite()).all(|&x| x == 0.0));
    }

    #[test]
    fn subsolution_below_abs_sq() {
        let p = problem(BoundaryData::AbsSq, Density::Const(1.0), 0.2, 4);
        let disc = Discrete::new(&p).unwrap();
        let (v, _) = initial_subsolution(&disc).unwrap();
        for &i in &disc.grid().interior {
            let x = disc.grid().coords(i);
            assert!(v.values[i] <= x.iter().map(|a| a * a).sum::<f64>() + 1e-12);
        }
    }

    #[test]
    fn linear_data_is_reproduced() {
        let p = problem(BoundaryData::ReZ1, Density::Zero, 0.2, 4);
        let (u, rep) = solve(&p, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.monotonicity_violations, 0);
        let g = u.grid.clone();
        for &i in &g.interior {
            assert!((u.values[i] - g.coords(i)[0]).abs() <= 10.0 * rep.tol);
        }
    }

    #[test]
    fn screening_is_bit_identical() {
        let p = problem(BoundaryData::Example47(crate::data::Psi::Linear), Density::Const(0.5), 0.2, 8);
        let on = SolverConfig { screening: true, ..Default::default() };
        let off = SolverConfig { screening: false, ..Default::default() };
        let (a, ra) = solve(&p, &on).unwrap();
        let (b, rb) = solve(&p, &off).unwrap();
        assert!(ra.skipped_frames > 0);
        assert_eq!(ra.iterations, rb.iterations);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn jacobi_agrees_with_gauss_seidel() {
        let p = problem(BoundaryData::AbsSq, Density::Const(1.0), 0.25, 4);
        let (a, _) = solve(&p, &SolverConfig::default()).unwrap();
        let (b, rb) = solve(&p, &SolverConfig { mode: SweepMode::Jacobi, ..Default::default() }).unwrap();
        assert_eq!(rb.monotonicity_violations, 0);
        assert!(a.max_abs_diff_interior(&b) < 1e-5);
    }

    #[test]
    fn bounded_density_ladder_has_zero_gap() {
        let p = problem(BoundaryData::ReZ1, Density::Const(1.0), 0.25, 2);
        let (_, rep) = solve_lp(&p, &[1.0, 2.0], &SolverConfig::default()).unwrap();
        assert_eq!(rep.gaps, vec![0.0]);
    }

    #[test]
    fn larger_density_lowers_the_update() {
        let p = problem(BoundaryData::AbsSq, Density::Const(1.0), 0.25, 2);
        let disc = Discrete::new(&p).unwrap();
        let g = boundary_field(disc.grid().clone(), &BoundaryData::AbsSq);
        let mut sc = disc.scheme.scratch();
        let a = disc.scheme.full_update(&g.values, 0, 1.0, &mut sc).unwrap();
        let b = disc.scheme.full_update(&g.values, 0, 2.0, &mut sc).unwrap();
        assert!(b < a);
    }
}
