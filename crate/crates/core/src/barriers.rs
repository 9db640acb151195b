//! Explicit sub- and super-barriers.
//!
//! For a boundary point `xi` the local barrier is
//!
//! ```text
//! h(z)    = phi(xi) - wbar(sqrt(|z - xi|^2 - B rho(z)))
//! h_xi(z) = max(gamma1 (h(z) - phi(xi)) + phi(xi), gamma2)   inside B(xi, r1)
//!         = gamma2                                            outside
//! ```
//!
//! where `wbar` is the minimal concave majorant of the sampled boundary
//! modulus of `phi` and `gamma2 = inf phi`. The sub-barrier is
//! `max_xi h_xi + K1 |z - z0|^2` built for the shifted data
//! `phi - K1 |z - z0|^2`, with `K1 = sup f^{1/n}`; the super-barrier is minus
//! the sub-barrier of `-phi` with `f = 0`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{BoundaryData, Density};
use crate::domain::{make_domain, DomainKind, DomainSpec};
use crate::error::{Error, Result};
use crate::grid::{Grid, NodeClass, ScalarField};
use crate::hermitian::{pointwise_delta_h, DirectionSet};
use crate::modulus::{minimal_concave_majorant, point_set_modulus, ModulusCurve};
use crate::sampling::{sphere_points, ShiftedHalton};
use crate::solver::{boundary_field, solve_discrete, solve_lp_on_grid, Discrete, ProblemSpec, SolverConfig, SolverReport};

#[derive(Debug, Clone)]
pub struct BarrierOptions {
    /// Number of boundary points `xi`.
    pub xi_count: usize,
    pub seed: u64,
    /// Boundary samples used to estimate the modulus of `phi`.
    pub phi_samples: usize,
    /// `B = b_factor / c` before any doubling.
    pub b_factor: f64,
    /// Directions per shell when sampling spheres around `xi`.
    pub shell_points: usize,
    pub max_doublings: usize,
    /// Radius of the auxiliary ball of the composite barrier, in units of
    /// the circumradius.
    pub ball_scale: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            xi_count: 200,
            seed: 11,
            phi_samples: 1500,
            b_factor: 2.0,
            shell_points: 256,
            max_doublings: 60,
            ball_scale: 2.0,
        }
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sampled boundary modulus of `phi` and its minimal concave majorant.
pub fn boundary_modulus(domain: &DomainSpec, phi: &BoundaryData, samples: usize, seed: u64) -> Result<ModulusCurve> {
    let pts = domain.boundary_samples(samples, seed);
    let vals: Vec<f64> = pts.iter().map(|p| phi.eval(p)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input(format!("boundary data {} is not finite on the boundary", phi.label())));
    }
    minimal_concave_majorant(&point_set_modulus(&pts, &vals))
}

/// `B >= b0` such that `B rho - |z - xi|^2` has nonnegative stencil values
/// for every direction at sampled interior points, found by doubling.
pub fn choose_b(domain: &DomainSpec, dirs: &DirectionSet, delta: f64, b0: f64, max_doublings: usize) -> Result<f64> {
    let dim = domain.real_dim();
    let halton = ShiftedHalton::new(dim, 0xb0);
    let mut pts = Vec::new();
    let mut u = vec![0.0; dim];
    let mut k = 0;
    while pts.len() < 64 && k < 10_000 {
        halton.point(k, &mut u);
        k += 1;
        let p: Vec<f64> = (0..dim).map(|i| domain.bbox_lo[i] + u[i] * (domain.bbox_hi[i] - domain.bbox_lo[i])).collect();
        if domain.rho(&p) < 0.0 {
            pts.push(p);
        }
    }
    let mut b = b0;
    for _ in 0..=max_doublings {
        let ok = pts.iter().all(|z| {
            dirs.directions.iter().all(|dir| {
                // the translate by xi does not change second differences
                let g = |x: &[f64]| b * domain.rho(x) - dist2(x, z);
                pointwise_delta_h(g, z, dir, delta) >= -1e-9 * (1.0 + b)
            })
        });
        if ok {
            return Ok(b);
        }
        b *= 2.0;
    }
    Err(Error::IllPosed(format!("B rho - |z|^2 is not plurisubharmonic for B up to {b}")))
}

/// Largest `r = d / 2^k` with `|B rho - |z - xi|^2| <= d^2` at sampled
/// points of `B(xi, r)` inside the domain.
pub fn choose_radius(domain: &DomainSpec, xi: &[f64], b: f64, shell_points: usize) -> f64 {
    let d = domain.diameter;
    let dirs = sphere_points(domain.real_dim(), shell_points, 0x5e11);
    let mut r = d;
    let mut p = vec![0.0; xi.len()];
    for _ in 0..40 {
        let ok = (1..=8).all(|k| {
            let s = r * k as f64 / 8.0;
            dirs.iter().all(|v| {
                for i in 0..p.len() {
                    p[i] = xi[i] + s * v[i];
                }
                let rho = domain.rho(&p);
                rho > 0.0 || (b * rho - s * s).abs() <= d * d
            })
        });
        if ok {
            return r;
        }
        r *= 0.5;
    }
    r
}

/// The local barrier `h_xi` for one boundary point.
#[derive(Debug, Clone)]
pub struct PointBarrier {
    pub xi: Vec<f64>,
    /// The data at `xi`.
    pub phi_xi: f64,
    pub b: f64,
    pub r: f64,
    pub r1: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub omega: Arc<ModulusCurve>,
}

impl PointBarrier {
    /// `h_xi(x)` given `rho(x)`.
    pub fn eval_with_rho(&self, x: &[f64], rho: f64) -> f64 {
        let d2 = dist2(x, &self.xi);
        if d2 >= self.r1 * self.r1 {
            return self.gamma2;
        }
        let s = (d2 - self.b * rho).max(0.0).sqrt();
        (self.phi_xi - self.gamma1 * self.omega.majorant(s)).max(self.gamma2)
    }

    pub fn eval(&self, domain: &DomainSpec, x: &[f64]) -> f64 {
        self.eval_with_rho(x, domain.rho(x))
    }
}

/// Builds `h_xi` for the data `phi`, with `gamma1` the first value of the
/// doubling sequence from `d / r1` that meets the gluing condition on
/// sampled points of the sphere `|z - xi| = r1` in the closed domain.
#[allow(clippy::too_many_arguments)]
pub fn point_barrier(
    domain: &DomainSpec,
    phi: &BoundaryData,
    omega: Arc<ModulusCurve>,
    gamma2: f64,
    xi: &[f64],
    b: f64,
    r: f64,
    r1: f64,
    opts: &BarrierOptions,
) -> Result<PointBarrier> {
    if !(r1 > 0.0 && r1 < r) {
        return Err(Error::Barrier { xi: xi.to_vec(), msg: format!("need 0 < r1 < r, got r1 = {r1}, r = {r}") });
    }
    let phi_xi = phi.eval(xi);
    let sphere: Vec<Vec<f64>> = sphere_points(domain.real_dim(), opts.shell_points, 0x9a1)
        .into_iter()
        .map(|v| xi.iter().zip(&v).map(|(a, b)| a + r1 * b).collect::<Vec<f64>>())
        .filter(|p| domain.rho(p) <= 0.0)
        .collect();
    let mut gamma1 = domain.diameter / r1;
    for _ in 0..=opts.max_doublings {
        // on the sphere inside the closed domain the majorant's argument is
        // at least r1, with equality on the boundary, which sampling misses
        let glued = phi_xi - gamma1 * omega.majorant(r1) <= gamma2
            && sphere.iter().all(|z| {
                let s = (dist2(z, xi) - b * domain.rho(z)).max(0.0).sqrt();
                phi_xi - gamma1 * omega.majorant(s) <= gamma2
            });
        if glued {
            return Ok(PointBarrier { xi: xi.to_vec(), phi_xi, b, r, r1, gamma1, gamma2, omega });
        }
        gamma1 *= 2.0;
    }
    Err(Error::Barrier {
        xi: xi.to_vec(),
        msg: format!("gluing condition fails for gamma1 up to {gamma1:e}"),
    })
}

/// `max_xi h_xi + K1 |z - z0|^2`.
#[derive(Debug, Clone)]
pub struct SubBarrier {
    pub points: Vec<PointBarrier>,
    pub k1: f64,
    pub z0: Vec<f64>,
    pub b: f64,
    pub gamma2: f64,
    pub omega: Arc<ModulusCurve>,
    /// Largest distance from a point of the sample to its nearest neighbor.
    pub xi_gap: f64,
}

impl SubBarrier {
    pub fn eval_with_rho(&self, x: &[f64], rho: f64) -> f64 {
        let m = self.points.iter().map(|p| p.eval_with_rho(x, rho)).fold(f64::NEG_INFINITY, f64::max);
        m + self.k1 * dist2(x, &self.z0)
    }

    pub fn eval(&self, domain: &DomainSpec, x: &[f64]) -> f64 {
        self.eval_with_rho(x, domain.rho(x))
    }

    /// Samples the barrier at interior and band nodes.
    pub fn field(&self, domain: &DomainSpec, grid: Arc<Grid>, label: &str) -> ScalarField {
        let mut out = ScalarField::new(grid.clone(), label);
        let nodes: Vec<usize> = grid.interior.iter().chain(&grid.band).copied().collect();
        let vals: Vec<f64> = nodes
            .par_iter()
            .map_init(
                || vec![0.0; grid.dim()],
                |x, &i| {
                    grid.coord(i, x);
                    self.eval_with_rho(x, domain.rho(x))
                },
            )
            .collect();
        for (&i, v) in nodes.iter().zip(vals) {
            out.values[i] = v;
        }
        out
    }
}

/// Builds the sub-barrier of `(phi, K1)` over a quasi-uniform boundary
/// sample.
pub fn build_sub_barrier(problem: &ProblemSpec, phi: &BoundaryData, k1: f64, opts: &BarrierOptions) -> Result<SubBarrier> {
    let domain = &problem.domain;
    let z0 = domain.reference_point.clone();
    // the local barriers are built for phi - K1 |z - z0|^2
    let shifted = if k1 > 0.0 {
        BoundaryData::Sum(vec![phi.clone(), BoundaryData::Quadratic { center: z0.clone(), k: -k1 }])
    } else {
        phi.clone()
    };
    let omega = Arc::new(boundary_modulus(domain, &shifted, opts.phi_samples, opts.seed ^ 0x0e)?);
    let xis = domain.boundary_samples(opts.xi_count, opts.seed);
    if xis.is_empty() {
        return Err(Error::Domain("no boundary points found".into()));
    }
    // inf of the data: the smallest sampled value, lowered by the modulus
    // over the sampling gap since the true minimizer is rarely sampled
    let samples = domain.boundary_samples(opts.phi_samples, opts.seed ^ 0x0e);
    let sampled_inf = samples.iter().chain(&xis).map(|p| shifted.eval(p)).fold(f64::INFINITY, f64::min);
    let gamma2 = sampled_inf - omega.majorant(nearest_neighbor_gap(&samples));
    let delta = problem.directions.arm_scale * problem.grid_h;
    let b = choose_b(domain, &problem.directions, delta, opts.b_factor / domain.c, opts.max_doublings)?;
    let points: Vec<PointBarrier> = xis
        .par_iter()
        .map(|xi| {
            let r = choose_radius(domain, xi, b, opts.shell_points);
            point_barrier(domain, &shifted, omega.clone(), gamma2, xi, b, r, 0.5 * r, opts)
        })
        .collect::<Result<_>>()?;
    let xi_gap = nearest_neighbor_gap(&xis);
    Ok(SubBarrier { points, k1, z0, b, gamma2, omega, xi_gap })
}

/// Largest distance from a point of the set to its nearest neighbor.
fn nearest_neighbor_gap(pts: &[Vec<f64>]) -> f64 {
    pts.par_iter()
        .enumerate()
        .map(|(i, a)| {
            pts.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| dist2(a, b))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .filter(|v| v.is_finite())
        .reduce(|| 0.0, f64::max)
}

/// Outcome of testing the discrete subsolution inequality at interior
/// nodes. The test is done in value units: `T(v) - v`, where `T` is the
/// node update, has the sign of `min_H Delta_H v - f^{1/n}` and is that
/// defect divided by the stencil coefficient of the node, so one slack works
/// for deep nodes and nodes with very short boundary arms alike.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SubsolutionCheck {
    /// `min over nodes of (T(v) - v)`; negative means a violation somewhere.
    pub worst: f64,
    pub violations: usize,
    pub slack: f64,
}

pub fn subsolution_check(disc: &Discrete, values: &[f64], slack: f64) -> Result<SubsolutionCheck> {
    let sch = &disc.scheme;
    let g = &sch.grid;
    let defects: Vec<f64> = (0..g.interior.len())
        .into_par_iter()
        .map_init(
            || sch.scratch(),
            |sc, pos| Ok(sch.full_update(values, pos, disc.rhs[pos], sc)? - values[g.interior[pos]]),
        )
        .collect::<Result<_>>()?;
    let worst = defects.iter().copied().fold(f64::INFINITY, f64::min);
    let violations = defects.iter().filter(|&&d| d < -slack).count();
    Ok(SubsolutionCheck { worst, violations, slack })
}

/// The sub-barrier field for the problem bound in `disc`, with
/// `K1 = max f^{1/n}` over the interior nodes.
pub fn sub_barrier(problem: &ProblemSpec, disc: &Discrete, opts: &BarrierOptions) -> Result<(ScalarField, SubBarrier)> {
    let k1 = disc.rhs.iter().copied().fold(0.0, f64::max);
    let sb = build_sub_barrier(problem, &problem.phi, k1, opts)?;
    let field = sb.field(&problem.domain, disc.grid().clone(), "sub-barrier");
    Ok((field, sb))
}

/// `-v1` where `v1` is the sub-barrier of `-phi` with zero density.
pub fn super_barrier(problem: &ProblemSpec, grid: Arc<Grid>, opts: &BarrierOptions) -> Result<(ScalarField, SubBarrier)> {
    let neg = problem.phi.clone().neg();
    let sb = build_sub_barrier(problem, &neg, 0.0, opts)?;
    let mut field = sb.field(&problem.domain, grid, "super-barrier");
    for v in &mut field.values {
        *v = -*v;
    }
    Ok((field, sb))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Construction {
    /// Maximum of local barriers over a boundary sample.
    PointwiseMax,
    /// `h1 + h2` through an auxiliary ball, for unbounded densities.
    Composite,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub xi: Vec<f64>,
    pub phi_xi: f64,
    pub k2: f64,
    pub r: f64,
    pub r1: f64,
    pub gamma1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SideReport {
    pub b: f64,
    pub k1: f64,
    pub gamma2: f64,
    pub xi_count: usize,
    pub xi_gap: f64,
    pub gamma1_range: (f64, f64),
    pub r_range: (f64, f64),
    pub omega_breakpoints: Vec<(f64, f64)>,
    pub check: SubsolutionCheck,
    /// `max |v - phi|` over band nodes.
    pub band_gap: f64,
    pub points: Vec<PointRecord>,
}

fn side_report(sb: &SubBarrier, check: SubsolutionCheck, band_gap: f64) -> SideReport {
    let range = |f: &dyn Fn(&PointBarrier) -> f64| {
        sb.points.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    SideReport {
        b: sb.b,
        k1: sb.k1,
        gamma2: sb.gamma2,
        xi_count: sb.points.len(),
        xi_gap: sb.xi_gap,
        gamma1_range: range(&|p| p.gamma1),
        r_range: range(&|p| p.r),
        omega_breakpoints: sb.omega.breakpoints.clone(),
        check,
        band_gap,
        points: sb
            .points
            .iter()
            .map(|p| PointRecord {
                xi: p.xi.clone(),
                phi_xi: p.phi_xi + sb.k1 * dist2(&p.xi, &sb.z0),
                k2: sb.k1 * dist2(&p.xi, &sb.z0),
                r: p.r,
                r1: p.r1,
                gamma1: p.gamma1,
            })
            .collect(),
    }
}

/// All constants chosen while building a barrier pair.
#[derive(Debug, Clone, Serialize)]
pub struct BarrierReport {
    pub construction: Construction,
    /// Constant of the starting subsolution when a solve was involved.
    pub a: Option<f64>,
    pub sub: Option<SideReport>,
    pub sup: SideReport,
    pub solves: Vec<SolverReport>,
}

/// A sub-barrier `lower` and a super-barrier `upper` on one grid.
#[derive(Debug, Clone)]
pub struct BarrierBundle {
    pub lower: ScalarField,
    pub upper: ScalarField,
    pub construction: Construction,
    pub report: BarrierReport,
}

fn band_gap(field: &ScalarField, phi: &BoundaryData) -> f64 {
    let g = &field.grid;
    g.band
        .iter()
        .map(|&i| (field.values[i] - phi.eval(&g.coords(i))).abs())
        .fold(0.0, f64::max)
}

/// Slack for the discrete subsolution test of a barrier: the solver's
/// default update tolerance plus the change of the data over the crossing
/// tolerance, since the scheme reads `phi` at points within `rho_tol` of the
/// boundary rather than on it.
pub fn barrier_slack(disc: &Discrete) -> f64 {
    let sch = &disc.scheme;
    let g = &sch.grid;
    let phi = boundary_field(g.clone(), sch.phi());
    let mut slope: f64 = 0.0;
    for &b in &g.band {
        for &s in &g.strides {
            for nb in [b.wrapping_sub(s), b + s] {
                if nb < g.len() && g.class[nb] != NodeClass::Exterior {
                    slope = slope.max((phi.values[b] - phi.values[nb]).abs() / g.h);
                }
            }
        }
    }
    disc.default_tol() + slope * sch.rho_tol
}

/// Super-barrier plus its check against the scheme for `-phi`, `f = 0`.
fn upper_side(problem: &ProblemSpec, grid: Arc<Grid>, opts: &BarrierOptions) -> Result<(ScalarField, SideReport)> {
    let (upper, sb) = super_barrier(problem, grid.clone(), opts)?;
    let neg = problem.with_data(problem.phi.clone().neg(), Density::Zero);
    let ndisc = Discrete::on_grid(&neg, grid)?;
    let negated: Vec<f64> = upper.values.iter().map(|v| -v).collect();
    let check = subsolution_check(&ndisc, &negated, barrier_slack(&ndisc))?;
    let gap = band_gap(&upper, &problem.phi);
    Ok((upper, side_report(&sb, check, gap)))
}

/// Sub- and super-barrier from the pointwise constructions.
pub fn barrier_bundle(problem: &ProblemSpec, disc: &Discrete, opts: &BarrierOptions) -> Result<BarrierBundle> {
    let (lower, sb) = sub_barrier(problem, disc, opts)?;
    let check = subsolution_check(disc, &lower.values, barrier_slack(disc))?;
    let sub = side_report(&sb, check, band_gap(&lower, &problem.phi));
    let (upper, sup) = upper_side(problem, disc.grid().clone(), opts)?;
    Ok(BarrierBundle {
        lower,
        upper,
        construction: Construction::PointwiseMax,
        report: BarrierReport { construction: Construction::PointwiseMax, a: None, sub: Some(sub), sup, solves: vec![] },
    })
}

/// Composite barrier for a possibly unbounded density: `h1` solves the
/// problem with zero data and the density extended by zero on a ball around
/// the domain (through the truncation ladder), `h2` solves the homogeneous
/// problem on the domain with data `phi - h1`, and the sub-barrier is
/// `h1 + h2`. The super-barrier is the pointwise one.
pub fn composite_barrier_lp(
    problem: &ProblemSpec,
    ladder: &[f64],
    cfg: &SolverConfig,
    opts: &BarrierOptions,
) -> Result<BarrierBundle> {
    let domain = &problem.domain;
    let big = make_domain(
        DomainKind::Ball { center: domain.reference_point.clone(), radius: opts.ball_scale * domain.circumradius },
        domain.n,
    )?;
    let big = Arc::new(big);
    let extended = Density::Restricted { inner: Box::new(problem.f.clone()), domain: domain.clone() };
    let mut outer = problem.with_data(BoundaryData::Const(0.0), extended);
    outer.domain = big;
    let outer_grid = outer.build_grid()?;
    let (h1, ladder_rep) = solve_lp_on_grid(&outer, outer_grid, ladder, cfg)?;
    let mut solves = ladder_rep.reports;

    let h1 = Arc::new(h1);
    let data = BoundaryData::Sum(vec![problem.phi.clone(), BoundaryData::Sampled(h1.clone()).neg()]);
    let inner = problem.with_data(data, Density::Zero);
    let grid = problem.build_grid()?;
    let disc = Discrete::on_grid(&inner, grid.clone())?;
    let (h2, rep2) = solve_discrete(&disc, cfg)?;
    let a = rep2.subsolution_a;
    solves.push(rep2);

    let mut lower = h2;
    lower.metadata = "composite sub-barrier".into();
    let mut x = vec![0.0; grid.dim()];
    for &i in grid.interior.iter().chain(&grid.band) {
        grid.coord(i, &mut x);
        lower.values[i] += h1.interpolate(&x).ok_or_else(|| {
            Error::Geometry { node: i, msg: "domain grid node outside the auxiliary ball grid".into() }
        })?;
    }
    let (upper, sup) = upper_side(problem, grid, opts)?;
    Ok(BarrierBundle {
        lower,
        upper,
        construction: Construction::Composite,
        report: BarrierReport { construction: Construction::Composite, a: Some(a), sub: None, sup, solves },
    })
}

/// How far a solution pokes out of a barrier pair at interior nodes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sandwich {
    /// `max (lower - u)`.
    pub lower_excess: f64,
    /// `max (u - upper)`.
    pub upper_excess: f64,
    pub tol: f64,
    pub pass: bool,
}

pub fn sandwich(bundle: &BarrierBundle, u: &ScalarField, tol: f64) -> Sandwich {
    let g = &u.grid;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &i in &g.interior {
        lo = lo.max(bundle.lower.values[i] - u.values[i]);
        hi = hi.max(u.values[i] - bundle.upper.values[i]);
    }
    Sandwich { lower_excess: lo, upper_excess: hi, tol, pass: lo <= tol && hi <= tol }
}
