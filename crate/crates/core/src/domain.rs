//! Strongly hyperconvex Lipschitz domains described by a defining function.
//!
//! A domain is only ever touched through pointwise evaluation of its defining
//! function `rho` (negative inside, zero on the boundary). Points of `C^n` are
//! stored as real vectors of length `2n` in interleaved order
//! `(Re z_1, Im z_1, Re z_2, Im z_2, ...)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::{pointwise_delta_h, DirectionSet};
use crate::sampling::{sphere_points, ShiftedHalton};

/// Built-in strictly convex shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexShape {
    /// `sum_j w_j |z_j - a_j|^2 < 1`.
    Ellipsoid { center: Vec<f64>, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    Ball { center: Vec<f64>, radius: f64 },
    StrictlyConvex(ConvexShape),
    IntersectionOfBalls(Vec<(Vec<f64>, f64)>),
    /// `|z_1| + ... + |z_n| < scale`.
    L1Ball { scale: f64 },
    /// The polydisc `max_j |z_j| < radius`. Hyperconvex but not strongly
    /// hyperconvex: kept only so that SHL validation has a negative case, the
    /// solver refuses it.
    Polydisc { radius: f64 },
}

impl DomainKind {
    pub fn label(&self) -> String {
        match self {
            DomainKind::Ball { center, radius } => format!("ball(center={center:?},radius={radius})"),
            DomainKind::StrictlyConvex(ConvexShape::Ellipsoid { center, weights }) => {
                format!("ellipsoid(center={center:?},weights={weights:?})")
            }
            DomainKind::IntersectionOfBalls(balls) => {
                let parts: Vec<String> =
                    balls.iter().map(|(c, r)| format!("({c:?},{r})")).collect();
                format!("intersection[{}]", parts.join(","))
            }
            DomainKind::L1Ball { scale } => format!("l1ball(scale={scale})"),
            DomainKind::Polydisc { radius } => format!("polydisc(radius={radius})"),
        }
    }
}

/// A bounded domain together with the constants the estimates depend on.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Complex dimension; points live in `R^{2n}`.
    pub n: usize,
    /// Lower bound `dd^c rho >= c beta`.
    pub c: f64,
    pub lipschitz_bound: f64,
    pub diameter: f64,
    pub circumradius: f64,
    /// An interior point (`z_0` in the barrier constructions).
    pub reference_point: Vec<f64>,
    pub bbox_lo: Vec<f64>,
    pub bbox_hi: Vec<f64>,
}

/// Result of a ray/boundary bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub t: f64,
    /// `false` when the iteration cap was hit before `|rho| <= rho_tol`.
    pub converged: bool,
}

pub const BISECTION_CAP: usize = 80;

fn check_point(n: usize, p: &[f64], what: &str) -> Result<()> {
    if p.len() != 2 * n {
        return Err(Error::Domain(format!(
            "{what} has {} real coordinates, expected {}",
            p.len(),
            2 * n
        )));
    }
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("{what} is not finite")));
    }
    Ok(())
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Builds a domain of the given kind in `C^n`, filling in the analytic
/// constants. Intersections are checked for non-emptiness by sampling.
pub fn make_domain(kind: DomainKind, n: usize) -> Result<DomainSpec> {
    if n == 0 {
        return Err(Error::Domain("complex dimension must be positive".into()));
    }
    let dim = 2 * n;
    let spec = match &kind {
        DomainKind::Ball { center, radius } => {
            check_point(n, center, "ball center")?;
            if !(*radius > 0.0) {
                return Err(Error::Domain(format!("ball radius {radius} must be positive")));
            }
            DomainSpec {
                n,
                c: 1.0,
                // |grad rho| = 2|z - a| on the closure inflated by a quarter radius
                lipschitz_bound: 2.5 * radius,
                diameter: 2.0 * radius,
                circumradius: *radius,
                reference_point: center.clone(),
                bbox_lo: center.iter().map(|a| a - radius).collect(),
                bbox_hi: center.iter().map(|a| a + radius).collect(),
                kind: kind.clone(),
            }
        }
        DomainKind::StrictlyConvex(ConvexShape::Ellipsoid { center, weights }) => {
            check_point(n, center, "ellipsoid center")?;
            if weights.len() != n || weights.iter().any(|w| !(*w > 0.0)) {
                return Err(Error::Domain(format!(
                    "ellipsoid needs {n} positive weights, got {weights:?}"
                )));
            }
            let w_min = weights.iter().cloned().fold(f64::INFINITY, f64::min);
            let w_max = weights.iter().cloned().fold(0.0, f64::max);
            let semi_max = 1.0 / w_min.sqrt();
            let mut lo = center.clone();
            let mut hi = center.clone();
            for j in 0..n {
                let s = 1.0 / weights[j].sqrt();
                for k in 0..2 {
                    lo[2 * j + k] -= s;
                    hi[2 * j + k] += s;
                }
            }
            DomainSpec {
                n,
                c: w_min,
                lipschitz_bound: 2.5 * w_max * semi_max,
                diameter: 2.0 * semi_max,
                circumradius: semi_max,
                reference_point: center.clone(),
                bbox_lo: lo,
                bbox_hi: hi,
                kind: kind.clone(),
            }
        }
        DomainKind::IntersectionOfBalls(balls) => {
            if balls.is_empty() {
                return Err(Error::Domain("intersection of zero balls".into()));
            }
            let mut lo = vec![f64::NEG_INFINITY; dim];
            let mut hi = vec![f64::INFINITY; dim];
            for (c, r) in balls {
                check_point(n, c, "ball center")?;
                if !(*r > 0.0) {
                    return Err(Error::Domain(format!("ball radius {r} must be positive")));
                }
                for i in 0..dim {
                    lo[i] = lo[i].max(c[i] - r);
                    hi[i] = hi[i].min(c[i] + r);
                }
            }
            if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
                return Err(Error::Domain("intersection of balls is empty".into()));
            }
            let r_min = balls.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
            let r_max = balls.iter().map(|b| b.1).fold(0.0, f64::max);
            let mut spec = DomainSpec {
                n,
                c: 1.0,
                lipschitz_bound: 2.5 * r_max,
                // upper bounds; the intersection sits inside every ball
                diameter: 2.0 * r_min,
                circumradius: r_min,
                reference_point: vec![0.0; dim],
                bbox_lo: lo,
                bbox_hi: hi,
                kind: kind.clone(),
            };
            let deepest = spec.deepest_sample(4096)?;
            spec.reference_point = deepest;
            spec
        }
        DomainKind::L1Ball { scale } => {
            if !(*scale > 0.0) {
                return Err(Error::Domain(format!("l1 ball scale {scale} must be positive")));
            }
            DomainSpec {
                n,
                // d^2|w|/dw dw-bar = 1/(4|w|) >= 1/(4 scale) inside
                c: 0.25 / scale,
                lipschitz_bound: (n as f64).sqrt(),
                diameter: 2.0 * scale,
                circumradius: *scale,
                reference_point: vec![0.0; dim],
                bbox_lo: vec![-scale; dim],
                bbox_hi: vec![*scale; dim],
                kind: kind.clone(),
            }
        }
        DomainKind::Polydisc { radius } => {
            if !(*radius > 0.0) {
                return Err(Error::Domain(format!("polydisc radius {radius} must be positive")));
            }
            DomainSpec {
                n,
                c: 1.0,
                lipschitz_bound: 2.5 * radius,
                diameter: 2.0 * radius * (n as f64).sqrt(),
                circumradius: radius * (n as f64).sqrt(),
                reference_point: vec![0.0; dim],
                bbox_lo: vec![-radius; dim],
                bbox_hi: vec![*radius; dim],
                kind: kind.clone(),
            }
        }
    };
    Ok(spec)
}

impl DomainSpec {
    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    /// Overrides the Lipschitz constant, e.g. from configuration.
    pub fn with_lipschitz_bound(mut self, bound: f64) -> Self {
        self.lipschitz_bound = bound;
        self
    }

    /// Whether the kind is one of the strongly hyperconvex Lipschitz kinds
    /// the solver accepts.
    pub fn is_shl_kind(&self) -> bool {
        !matches!(self.kind, DomainKind::Polydisc { .. })
    }

    /// The defining function.
    pub fn rho(&self, x: &[f64]) -> f64 {
        match &self.kind {
            DomainKind::Ball { center, radius } => dist2(x, center) - radius * radius,
            DomainKind::StrictlyConvex(ConvexShape::Ellipsoid { center, weights }) => {
                let mut s = 0.0;
                for (j, w) in weights.iter().enumerate() {
                    let a = x[2 * j] - center[2 * j];
                    let b = x[2 * j + 1] - center[2 * j + 1];
                    s += w * (a * a + b * b);
                }
                s - 1.0
            }
            DomainKind::IntersectionOfBalls(balls) => balls
                .iter()
                .map(|(c, r)| dist2(x, c) - r * r)
                .fold(f64::NEG_INFINITY, f64::max),
            DomainKind::L1Ball { scale } => {
                x.chunks_exact(2).map(|p| p[0].hypot(p[1])).sum::<f64>() - scale
            }
            DomainKind::Polydisc { radius } => {
                x.chunks_exact(2)
                    .map(|p| p[0] * p[0] + p[1] * p[1])
                    .fold(f64::NEG_INFINITY, f64::max)
                    - radius * radius
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.rho(x) < 0.0
    }

    /// Conservative test that the closed Euclidean ball of radius `reach`
    /// around `x` lies inside the domain.
    pub fn ball_inside(&self, x: &[f64], reach: f64) -> bool {
        let margin = 1e-9 * (1.0 + reach);
        match &self.kind {
            DomainKind::Ball { center, radius } => dist2(x, center).sqrt() + reach + margin < *radius,
            DomainKind::IntersectionOfBalls(balls) => balls
                .iter()
                .all(|(c, r)| dist2(x, c).sqrt() + reach + margin < *r),
            _ => self.rho(x) + self.lipschitz_bound * (reach + margin) < 0.0,
        }
    }

    fn deepest_sample(&self, count: usize) -> Result<Vec<f64>> {
        let dim = self.real_dim();
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut consider = |p: Vec<f64>, spec: &DomainSpec| {
            let r = spec.rho(&p);
            if r < 0.0 && best.as_ref().map_or(true, |(b, _)| r < *b) {
                best = Some((r, p));
            }
        };
        if let DomainKind::IntersectionOfBalls(balls) = &self.kind {
            for (c, _) in balls {
                consider(c.clone(), self);
            }
        }
        let mid: Vec<f64> = self.bbox_lo.iter().zip(&self.bbox_hi).map(|(l, h)| 0.5 * (l + h)).collect();
        consider(mid, self);
        let halton = ShiftedHalton::new(dim, 0x5eed);
        let mut u = vec![0.0; dim];
        for k in 0..count as u64 {
            halton.point(k, &mut u);
            let p: Vec<f64> = (0..dim)
                .map(|i| self.bbox_lo[i] + u[i] * (self.bbox_hi[i] - self.bbox_lo[i]))
                .collect();
            consider(p, self);
        }
        best.map(|(_, p)| p)
            .ok_or_else(|| Error::Domain("no sampled point with all rho_i < 0: empty intersection".into()))
    }

    /// Quasi-uniform points on the boundary, found by bisection along rays
    /// from the reference point (all built-in kinds are star-shaped about it).
    pub fn boundary_samples(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let dirs = sphere_points(self.real_dim(), count, seed);
        let reach = 2.0 * self.diameter + 1.0;
        dirs.iter()
            .filter_map(|v| {
                let c = boundary_crossing(self, &self.reference_point, v, reach, 1e-13)?;
                Some(
                    self.reference_point
                        .iter()
                        .zip(v)
                        .map(|(a, b)| a + c.t * b)
                        .collect(),
                )
            })
            .collect()
    }
}

/// Finds `t* in (0, t_max]` with `|rho(z + t* v)| <= rho_tol` by bisection,
/// provided the far end of the segment is outside (`rho >= 0`). Returns
/// `None` when the whole segment stays inside.
pub fn boundary_crossing(
    domain: &DomainSpec,
    z: &[f64],
    v: &[f64],
    t_max: f64,
    rho_tol: f64,
) -> Option<Crossing> {
    let mut p = vec![0.0; z.len()];
    crossing_with_buffer(|x| domain.rho(x), z, v, t_max, rho_tol, &mut p)
}

pub(crate) fn crossing_with_buffer<F: Fn(&[f64]) -> f64>(
    rho: F,
    z: &[f64],
    v: &[f64],
    t_max: f64,
    rho_tol: f64,
    buf: &mut [f64],
) -> Option<Crossing> {
    let at = |t: f64, buf: &mut [f64]| {
        for ((b, a), d) in buf.iter_mut().zip(z).zip(v) {
            *b = a + t * d;
        }
        rho(buf)
    };
    if at(t_max, buf) < 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, t_max);
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        let r = at(mid, buf);
        if r.abs() <= rho_tol {
            return Some(Crossing { t: mid, converged: true });
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    log::warn!("boundary bisection hit the {BISECTION_CAP}-iteration cap");
    Some(Crossing { t: 0.5 * (lo + hi), converged: false })
}

/// Sampled check of the strongly hyperconvex Lipschitz conditions.
#[derive(Debug, Clone, Serialize)]
pub struct ShlReport {
    /// Smallest `Delta_H rho / tr H` seen over interior samples and directions.
    pub c_hat: f64,
    pub c: f64,
    /// Largest `|rho(x) - rho(y)| / |x - y|` over sampled pairs near the closure.
    pub lipschitz_hat: f64,
    pub lipschitz_bound: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Checks `Delta_H rho >= c tr H` (up to a relative slack `rel_slack`) at
/// quasi-random interior points for every direction, with stencil arm
/// `delta`, and the declared Lipschitz bound on pairs near the closure.
pub fn validate_shl(
    domain: &DomainSpec,
    dirs: &DirectionSet,
    delta: f64,
    samples: usize,
    rel_slack: f64,
) -> Result<ShlReport> {
    if dirs.n != domain.n {
        return Err(Error::Input(format!("direction set is for n = {}, domain has n = {}", dirs.n, domain.n)));
    }
    let dim = domain.real_dim();
    let halton = ShiftedHalton::new(dim, 0x5b1);
    let pad = 0.1 * domain.diameter;
    let lo: Vec<f64> = domain.bbox_lo.iter().map(|x| x - pad).collect();
    let hi: Vec<f64> = domain.bbox_hi.iter().map(|x| x + pad).collect();
    let near = 0.1 * domain.rho(&domain.reference_point).abs();
    let mut u = vec![0.0; dim];
    let mut inner = Vec::new();
    let mut close = Vec::new();
    let mut k = 0u64;
    while (inner.len() < samples || close.len() < samples) && k < 400 * samples as u64 {
        halton.point(k, &mut u);
        k += 1;
        let p: Vec<f64> = (0..dim).map(|i| lo[i] + u[i] * (hi[i] - lo[i])).collect();
        let r = domain.rho(&p);
        if inner.len() < samples && domain.ball_inside(&p, delta) {
            inner.push(p.clone());
        }
        if close.len() < samples && r <= near {
            close.push(p);
        }
    }
    if inner.is_empty() {
        return Err(Error::Domain(format!("no interior point keeps arms of length {delta} inside")));
    }
    let mut c_hat = f64::INFINITY;
    for p in &inner {
        for d in &dirs.directions {
            let v = pointwise_delta_h(|x| domain.rho(x), p, d, delta);
            c_hat = c_hat.min(v / d.trace());
        }
    }
    let mut lipschitz_hat: f64 = 0.0;
    for w in close.windows(2) {
        let dist = dist2(&w[0], &w[1]).sqrt();
        if dist > 0.0 {
            lipschitz_hat = lipschitz_hat.max((domain.rho(&w[0]) - domain.rho(&w[1])).abs() / dist);
        }
    }
    let pass = c_hat >= domain.c * (1.0 - rel_slack) && lipschitz_hat <= domain.lipschitz_bound;
    Ok(ShlReport {
        c_hat,
        c: domain.c,
        lipschitz_hat,
        lipschitz_bound: domain.lipschitz_bound,
        samples: inner.len(),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_ball(n: usize) -> DomainSpec {
        make_domain(DomainKind::Ball { center: vec![0.0; 2 * n], radius: 1.0 }, n).unwrap()
    }

    #[test]
    fn unit_ball_constants() {
        let d = unit_ball(2);
        assert_eq!(d.rho(&[0.0; 4]), -1.0);
        assert_eq!(d.c, 1.0);
        assert_eq!(d.diameter, 2.0);
        assert_eq!(d.circumradius, 1.0);
    }

    #[test]
    fn intersection_takes_max_of_defining_functions() {
        let d = make_domain(
            DomainKind::IntersectionOfBalls(vec![
                (vec![0.0; 4], 1.0),
                (vec![0.5, 0.0, 0.0, 0.0], 1.0),
            ]),
            2,
        )
        .unwrap();
        assert_abs_diff_eq!(d.rho(&[0.0; 4]), -0.75, epsilon = 1e-15);
        assert!(d.rho(&d.reference_point) < -0.75 + 1e-12 || d.rho(&d.reference_point) < 0.0);
    }

    #[test]
    fn disjoint_balls_are_rejected() {
        let err = make_domain(
            DomainKind::IntersectionOfBalls(vec![
                (vec![0.0; 4], 1.0),
                (vec![3.0, 0.0, 0.0, 0.0], 1.0),
            ]),
            2,
        );
        assert!(matches!(err, Err(Error::Domain(_))));
        // boxes overlap but the balls do not
        let err = make_domain(
            DomainKind::IntersectionOfBalls(vec![
                (vec![0.0, 0.0], 1.0),
                (vec![1.9, 1.9], 1.0),
            ]),
            1,
        );
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn l1_ball_value() {
        let d = make_domain(DomainKind::L1Ball { scale: 1.0 }, 2).unwrap();
        assert_abs_diff_eq!(d.rho(&[0.5, 0.0, 0.0, 0.0]), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn bad_parameters() {
        assert!(make_domain(DomainKind::Ball { center: vec![0.0; 4], radius: -1.0 }, 2).is_err());
        assert!(make_domain(DomainKind::Ball { center: vec![0.0; 3], radius: 1.0 }, 2).is_err());
        assert!(make_domain(DomainKind::L1Ball { scale: 0.0 }, 2).is_err());
    }

    #[test]
    fn crossing_on_unit_ball() {
        let d = unit_ball(2);
        let tol = 1e-9;
        let c = boundary_crossing(&d, &[0.0; 4], &[1.0, 0.0, 0.0, 0.0], 2.0, tol).unwrap();
        assert!(c.converged);
        // rho = t^2 - 1, so |t - 1| <= tol / 2 roughly
        assert!((c.t - 1.0).abs() <= tol);
        assert!(boundary_crossing(&d, &[0.0; 4], &[1.0, 0.0, 0.0, 0.0], 0.5, tol).is_none());
    }

    #[test]
    fn crossing_on_l1_ball() {
        let d = make_domain(DomainKind::L1Ball { scale: 1.0 }, 2).unwrap();
        let tol = 1e-9;
        let c = boundary_crossing(&d, &[0.5, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0], 1.0, tol)
            .unwrap();
        // on the ray rho = 0.5 + t - 1 exactly
        assert!((c.t - 0.5).abs() <= tol);
    }

    #[test]
    fn boundary_samples_lie_on_boundary() {
        for d in [
            unit_ball(2),
            make_domain(DomainKind::L1Ball { scale: 1.0 }, 2).unwrap(),
            make_domain(
                DomainKind::StrictlyConvex(ConvexShape::Ellipsoid {
                    center: vec![0.0; 4],
                    weights: vec![1.0, 4.0],
                }),
                2,
            )
            .unwrap(),
        ] {
            let pts = d.boundary_samples(64, 1);
            assert_eq!(pts.len(), 64);
            for p in pts {
                assert!(d.rho(&p).abs() <= 1e-12);
            }
        }
    }

    fn shl_directions(n: usize) -> DirectionSet {
        crate::hermitian::build_direction_set(n, 8, &crate::hermitian::ladder_profiles(n, &[1.0, 4.0, 16.0, 64.0]), 1, 2.0)
            .unwrap()
    }

    #[test]
    fn shl_kinds_validate() {
        let dirs = shl_directions(2);
        let kinds = [
            DomainKind::Ball { center: vec![0.0; 4], radius: 1.0 },
            DomainKind::IntersectionOfBalls(vec![(vec![0.0; 4], 1.0), (vec![0.5, 0.0, 0.0, 0.0], 1.0)]),
            DomainKind::L1Ball { scale: 1.0 },
            DomainKind::StrictlyConvex(ConvexShape::Ellipsoid { center: vec![0.0; 4], weights: vec![1.0, 4.0] }),
        ];
        for kind in kinds {
            let d = make_domain(kind, 2).unwrap();
            let r = validate_shl(&d, &dirs, 0.05, 200, 0.1).unwrap();
            assert!(r.pass, "{}: {r:?}", d.kind.label());
        }
    }

    #[test]
    fn polydisc_fails_shl_validation() {
        let d = make_domain(DomainKind::Polydisc { radius: 1.0 }, 2).unwrap();
        let r = validate_shl(&d, &shl_directions(2), 0.05, 200, 0.1).unwrap();
        assert!(!r.pass);
        assert!(r.c_hat < 0.1, "{r:?}");
    }
}
