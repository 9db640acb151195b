//! Run configuration: line-based `section.key = value` text with `#`
//! comments. Parsing is strict: unknown keys, duplicates, malformed values
//! and out-of-range values are errors carrying the line number.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::analysis::PairOptions;
use crate::barriers::BarrierOptions;
use crate::data::{BoundaryData, Density, DensityKind, Monomial, Psi};
use crate::domain::{make_domain, ConvexShape, DomainKind, DomainSpec};
use crate::error::{Error, Result};
use crate::hermitian::{build_direction_set, ladder_profiles, DirectionSet};
use crate::solver::{ProblemSpec, SolverConfig, SweepMode};

#[derive(Debug, Clone, PartialEq)]
pub enum DomainChoice {
    Ball { center: Option<Vec<f64>>, radius: f64 },
    Ellipsoid { center: Option<Vec<f64>>, weights: Vec<f64> },
    Intersection(Vec<(Vec<f64>, f64)>),
    L1Ball { scale: f64 },
    Polydisc { radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhiChoice {
    ReZ1,
    AbsSq,
    Example47(Psi),
    Const(f64),
    Poly(Vec<Monomial>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityChoice {
    Zero,
    Const(f64),
    InvAbsZ1,
    Poly(Vec<Monomial>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub domain: DomainChoice,
    pub lipschitz: Option<f64>,
    pub phi: PhiChoice,
    pub f: DensityChoice,
    /// `Some(p)` declares `f` to be in `L^p` only.
    pub f_p: Option<f64>,
    pub f_singular: Vec<Vec<f64>>,
    pub f_ladder: Vec<f64>,
    pub h: f64,
    pub margin: Option<f64>,
    pub frames: usize,
    pub ladder: Vec<f64>,
    pub direction_seed: u64,
    pub arm_scale: f64,
    pub tol: Option<f64>,
    pub max_sweeps: usize,
    pub mode: SweepMode,
    pub t_min_factor: f64,
    pub t_points: usize,
    pub pair_budget: usize,
    pub analysis_seed: u64,
    pub eta_cap: f64,
    pub xi_count: usize,
    pub ball_scale: f64,
    pub output_dir: PathBuf,
    /// Every key with its resolved value, in key order.
    pub resolved: BTreeMap<String, String>,
}

const KEYS: &[&str] = &[
    "n",
    "domain.kind",
    "domain.center",
    "domain.radius",
    "domain.weights",
    "domain.balls",
    "domain.scale",
    "domain.lipschitz",
    "phi.kind",
    "phi.value",
    "phi.terms",
    "f.kind",
    "f.value",
    "f.terms",
    "f.p",
    "f.singular",
    "f.ladder",
    "grid.h",
    "grid.margin",
    "directions.frames",
    "directions.ladder",
    "directions.seed",
    "directions.arm_scale",
    "solver.tol",
    "solver.max_sweeps",
    "solver.mode",
    "analysis.t_min_factor",
    "analysis.t_points",
    "analysis.pair_budget",
    "analysis.seed",
    "analysis.eta_cap",
    "barriers.xi_count",
    "barriers.ball_scale",
    "output.dir",
];

fn defaults() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("n", "2"),
        ("domain.kind", "ball"),
        ("domain.radius", "1"),
        ("domain.scale", "1"),
        ("phi.kind", "abs_sq"),
        ("f.kind", "zero"),
        ("f.ladder", "4,16,64"),
        ("grid.h", "0.1"),
        ("directions.frames", "32"),
        ("directions.ladder", "1,4,16,64"),
        ("directions.seed", "1"),
        ("directions.arm_scale", "2"),
        ("solver.max_sweeps", "20000"),
        ("solver.mode", "gauss_seidel"),
        ("analysis.t_min_factor", "2"),
        ("analysis.t_points", "24"),
        ("analysis.pair_budget", "2000000"),
        ("analysis.seed", "17"),
        ("analysis.eta_cap", "1000"),
        ("barriers.xi_count", "200"),
        ("barriers.ball_scale", "2"),
        ("output.dir", "out"),
    ])
}

struct Entries {
    values: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.values.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn line(&self, key: &str) -> usize {
        self.values.get(key).map_or(0, |v| v.0)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Parse { line, msg: format!("{key}: cannot parse {v:?}") }),
        }
    }

    fn req<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Parse { line: 0, msg: format!("missing key {key}") })
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => parse_list(v).map(Some).map_err(|msg| Error::Parse { line, msg: format!("{key}: {msg}") }),
        }
    }

    fn range(&self, key: &str, ok: bool, what: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::Parse { line: self.line(key), msg: format!("{key} must be {what}") })
        }
    }
}

fn parse_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad number {:?}", s.trim())))
        .collect()
}

/// `coef:e1,e2,...; coef:...`
fn parse_terms(v: &str, dim: usize) -> std::result::Result<Vec<Monomial>, String> {
    v.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|t| {
            let (c, e) = t.split_once(':').ok_or_else(|| format!("term {t:?} is not coef:exponents"))?;
            let coef = c.trim().parse::<f64>().map_err(|_| format!("bad coefficient {c:?}"))?;
            let exponents = e
                .split(',')
                .map(|s| s.trim().parse::<u32>().map_err(|_| format!("bad exponent {s:?}")))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if exponents.len() != dim {
                return Err(format!("term {t:?} needs {dim} exponents"));
            }
            Ok(Monomial { coef, exponents })
        })
        .collect()
}

/// `x1,...,x2n; x1,...` or, with radii, `x1,...,x2n : r; ...`
fn parse_points(v: &str, dim: usize) -> std::result::Result<Vec<Vec<f64>>, String> {
    v.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|p| {
            let x = parse_list(p)?;
            if x.len() != dim {
                return Err(format!("point {p:?} needs {dim} real coordinates"));
            }
            Ok(x)
        })
        .collect()
}

fn parse_balls(v: &str, dim: usize) -> std::result::Result<Vec<(Vec<f64>, f64)>, String> {
    v.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|b| {
            let (c, r) = b.split_once(':').ok_or_else(|| format!("ball {b:?} is not center:radius"))?;
            let c = parse_list(c)?;
            if c.len() != dim {
                return Err(format!("ball center {c:?} needs {dim} real coordinates"));
            }
            let r = r.trim().parse::<f64>().map_err(|_| format!("bad radius {r:?}"))?;
            Ok((c, r))
        })
        .collect()
}

pub fn parse_config_file(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut values: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, msg: format!("expected `key = value`, got {body:?}") })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Parse { line, msg: format!("unknown key {key:?}") });
        }
        if value.is_empty() {
            return Err(Error::Parse { line, msg: format!("{key} has no value") });
        }
        if let Some((first, _)) = values.insert(key.to_string(), (line, value.to_string())) {
            return Err(Error::Parse { line, msg: format!("{key} already set on line {first}") });
        }
    }
    for (k, v) in defaults() {
        if !values.contains_key(k) {
            log::info!("default {k} = {v}");
            values.insert(k.to_string(), (0, v.to_string()));
        }
    }
    let e = Entries { values };
    build(&e)
}

fn build(e: &Entries) -> Result<RunConfig> {
    let n: usize = e.req("n")?;
    e.range("n", (1..=4).contains(&n), "in 1..=4")?;
    let dim = 2 * n;
    let point = |key: &str| -> Result<Option<Vec<f64>>> {
        let p = e.list(key)?;
        if let Some(p) = &p {
            e.range(key, p.len() == dim, &format!("a list of {dim} numbers"))?;
        }
        Ok(p)
    };
    let positive = |key: &str| -> Result<f64> {
        let v: f64 = e.req(key)?;
        e.range(key, v > 0.0 && v.is_finite(), "positive")?;
        Ok(v)
    };

    let kind: String = e.req("domain.kind")?;
    let domain = match kind.as_str() {
        "ball" => DomainChoice::Ball { center: point("domain.center")?, radius: positive("domain.radius")? },
        "ellipsoid" => {
            let weights = e
                .list("domain.weights")?
                .ok_or_else(|| Error::Parse { line: e.line("domain.kind"), msg: "ellipsoid needs domain.weights".into() })?;
            e.range("domain.weights", weights.len() == n && weights.iter().all(|w| *w > 0.0), &format!("{n} positive numbers"))?;
            DomainChoice::Ellipsoid { center: point("domain.center")?, weights }
        }
        "intersection" => {
            let (line, v) = e
                .raw("domain.balls")
                .ok_or_else(|| Error::Parse { line: e.line("domain.kind"), msg: "intersection needs domain.balls".into() })?;
            let balls = parse_balls(v, dim).map_err(|msg| Error::Parse { line, msg: format!("domain.balls: {msg}") })?;
            e.range("domain.balls", !balls.is_empty() && balls.iter().all(|b| b.1 > 0.0), "nonempty with positive radii")?;
            DomainChoice::Intersection(balls)
        }
        "l1ball" => DomainChoice::L1Ball { scale: positive("domain.scale")? },
        "polydisc" => DomainChoice::Polydisc { radius: positive("domain.radius")? },
        other => {
            return Err(Error::Parse {
                line: e.line("domain.kind"),
                msg: format!("domain.kind {other:?} is not one of ball, ellipsoid, intersection, l1ball, polydisc"),
            })
        }
    };
    let lipschitz: Option<f64> = e.get("domain.lipschitz")?;
    if let Some(l) = lipschitz {
        e.range("domain.lipschitz", l > 0.0 && l.is_finite(), "positive")?;
    }

    let terms = |key: &str| -> Result<Vec<Monomial>> {
        let (line, v) = e.raw(key).ok_or_else(|| Error::Parse { line: 0, msg: format!("missing key {key}") })?;
        parse_terms(v, dim).map_err(|msg| Error::Parse { line, msg: format!("{key}: {msg}") })
    };
    let phi_kind: String = e.req("phi.kind")?;
    let phi = match phi_kind.as_str() {
        "re_z1" => PhiChoice::ReZ1,
        "abs_sq" => PhiChoice::AbsSq,
        "example47_linear" => PhiChoice::Example47(Psi::Linear),
        "example47_sqrt" => PhiChoice::Example47(Psi::Sqrt),
        "const" => {
            let v: f64 = e.req("phi.value")?;
            e.range("phi.value", v.is_finite(), "finite")?;
            PhiChoice::Const(v)
        }
        "poly" => PhiChoice::Poly(terms("phi.terms")?),
        other => {
            return Err(Error::Parse { line: e.line("phi.kind"), msg: format!("unknown phi.kind {other:?}") })
        }
    };
    let f_kind: String = e.req("f.kind")?;
    let f = match f_kind.as_str() {
        "zero" => DensityChoice::Zero,
        "const" => {
            let v: f64 = e.req("f.value")?;
            e.range("f.value", v >= 0.0 && v.is_finite(), "nonnegative")?;
            DensityChoice::Const(v)
        }
        "inv_abs_z1" => DensityChoice::InvAbsZ1,
        "poly" => DensityChoice::Poly(terms("f.terms")?),
        other => return Err(Error::Parse { line: e.line("f.kind"), msg: format!("unknown f.kind {other:?}") }),
    };
    let f_p: Option<f64> = e.get("f.p")?;
    if let Some(p) = f_p {
        e.range("f.p", p > 1.0 && p.is_finite(), "greater than 1")?;
    }
    let f_singular = match e.raw("f.singular") {
        None => Vec::new(),
        Some((line, v)) => parse_points(v, dim).map_err(|msg| Error::Parse { line, msg: format!("f.singular: {msg}") })?,
    };
    let f_ladder = e.list("f.ladder")?.unwrap_or_default();
    e.range(
        "f.ladder",
        !f_ladder.is_empty() && f_ladder[0] > 0.0 && f_ladder.windows(2).all(|w| w[0] < w[1]),
        "positive and increasing",
    )?;

    let h = positive("grid.h")?;
    let margin: Option<f64> = e.get("grid.margin")?;
    if let Some(m) = margin {
        e.range("grid.margin", m >= 0.0 && m.is_finite(), "nonnegative")?;
    }
    let frames: usize = e.req("directions.frames")?;
    e.range("directions.frames", (1..=128).contains(&frames), "in 1..=128")?;
    let ladder = e.list("directions.ladder")?.unwrap_or_default();
    e.range("directions.ladder", !ladder.is_empty() && ladder.iter().all(|k| *k >= 1.0), "a list of ratios >= 1")?;
    let direction_seed: u64 = e.req("directions.seed")?;
    let arm_scale = positive("directions.arm_scale")?;

    let tol: Option<f64> = e.get("solver.tol")?;
    if let Some(t) = tol {
        e.range("solver.tol", t > 0.0 && t.is_finite(), "positive")?;
    }
    let max_sweeps: usize = e.req("solver.max_sweeps")?;
    e.range("solver.max_sweeps", max_sweeps >= 1, "at least 1")?;
    let mode_s: String = e.req("solver.mode")?;
    let mode = match mode_s.as_str() {
        "gauss_seidel" => SweepMode::GaussSeidelLex,
        "jacobi" => SweepMode::Jacobi,
        other => {
            return Err(Error::Parse { line: e.line("solver.mode"), msg: format!("solver.mode {other:?} is not gauss_seidel or jacobi") })
        }
    };

    let t_min_factor: f64 = e.req("analysis.t_min_factor")?;
    e.range("analysis.t_min_factor", t_min_factor >= 2.0 && t_min_factor.is_finite(), "at least 2")?;
    let t_points: usize = e.req("analysis.t_points")?;
    e.range("analysis.t_points", (5..=1000).contains(&t_points), "in 5..=1000")?;
    let pair_budget: usize = e.req("analysis.pair_budget")?;
    let analysis_seed: u64 = e.req("analysis.seed")?;
    let eta_cap = positive("analysis.eta_cap")?;
    let xi_count: usize = e.req("barriers.xi_count")?;
    e.range("barriers.xi_count", xi_count >= 1, "at least 1")?;
    let ball_scale: f64 = e.req("barriers.ball_scale")?;
    e.range("barriers.ball_scale", ball_scale > 1.0 && ball_scale.is_finite(), "greater than 1")?;
    let output_dir = PathBuf::from(e.req::<String>("output.dir")?);

    let resolved = e.values.iter().map(|(k, (_, v))| (k.clone(), v.clone())).collect();
    Ok(RunConfig {
        n,
        domain,
        lipschitz,
        phi,
        f,
        f_p,
        f_singular,
        f_ladder,
        h,
        margin,
        frames,
        ladder,
        direction_seed,
        arm_scale,
        tol,
        max_sweeps,
        mode,
        t_min_factor,
        t_points,
        pair_budget,
        analysis_seed,
        eta_cap,
        xi_count,
        ball_scale,
        output_dir,
        resolved,
    })
}

impl RunConfig {
    /// The resolved configuration as `key = value` lines; parses back to
    /// the same configuration.
    pub fn echo(&self) -> Vec<String> {
        self.resolved.iter().map(|(k, v)| format!("{k} = {v}")).collect()
    }

    /// Overrides one key, re-validating the whole configuration.
    pub fn with(&self, key: &str, value: &str) -> Result<RunConfig> {
        self.with_all(&[(key, value)])
    }

    /// Overrides several keys at once, then re-validates.
    pub fn with_all(&self, overrides: &[(&str, &str)]) -> Result<RunConfig> {
        let mut text = self
            .resolved
            .iter()
            .filter(|(k, _)| !overrides.iter().any(|(o, _)| o == k))
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect::<String>();
        for (k, v) in overrides {
            text.push_str(&format!("{k} = {v}\n"));
        }
        parse_config(&text)
    }

    pub fn domain_spec(&self) -> Result<DomainSpec> {
        let zero = vec![0.0; 2 * self.n];
        let kind = match &self.domain {
            DomainChoice::Ball { center, radius } => {
                DomainKind::Ball { center: center.clone().unwrap_or(zero), radius: *radius }
            }
            DomainChoice::Ellipsoid { center, weights } => DomainKind::StrictlyConvex(ConvexShape::Ellipsoid {
                center: center.clone().unwrap_or(zero),
                weights: weights.clone(),
            }),
            DomainChoice::Intersection(balls) => DomainKind::IntersectionOfBalls(balls.clone()),
            DomainChoice::L1Ball { scale } => DomainKind::L1Ball { scale: *scale },
            DomainChoice::Polydisc { radius } => DomainKind::Polydisc { radius: *radius },
        };
        let d = make_domain(kind, self.n)?;
        Ok(match self.lipschitz {
            Some(l) => d.with_lipschitz_bound(l),
            None => d,
        })
    }

    pub fn phi_data(&self) -> BoundaryData {
        match &self.phi {
            PhiChoice::ReZ1 => BoundaryData::ReZ1,
            PhiChoice::AbsSq => BoundaryData::AbsSq,
            PhiChoice::Example47(p) => BoundaryData::Example47(*p),
            PhiChoice::Const(c) => BoundaryData::Const(*c),
            PhiChoice::Poly(t) => BoundaryData::Poly(t.clone()),
        }
    }

    pub fn density(&self) -> Density {
        match &self.f {
            DensityChoice::Zero => Density::Zero,
            DensityChoice::Const(c) => Density::Const(*c),
            DensityChoice::InvAbsZ1 => Density::InvAbsZ1,
            DensityChoice::Poly(t) => Density::Poly(t.clone()),
        }
    }

    pub fn directions(&self) -> Result<DirectionSet> {
        build_direction_set(
            self.n,
            self.frames,
            &ladder_profiles(self.n, &self.ladder),
            self.direction_seed,
            self.arm_scale,
        )
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let mut p = ProblemSpec::new(self.domain_spec()?, self.phi_data(), self.density(), self.directions()?, self.h);
        p.grid_margin = self.margin;
        if let Some(p_exp) = self.f_p {
            p.f_kind = DensityKind::Lp { p: p_exp, singular_points: self.f_singular.clone() };
        }
        Ok(p)
    }

    /// The problem on an already built domain, sharing it.
    pub fn problem_on(&self, domain: Arc<DomainSpec>) -> Result<ProblemSpec> {
        let mut p = self.problem()?;
        p.domain = domain;
        Ok(p)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig { tol: self.tol, max_sweeps: self.max_sweeps, mode: self.mode, ..SolverConfig::default() }
    }

    pub fn pair_options(&self) -> PairOptions {
        PairOptions { pair_budget: self.pair_budget, seed: self.analysis_seed }
    }

    pub fn barrier_options(&self) -> BarrierOptions {
        BarrierOptions { xi_count: self.xi_count, ball_scale: self.ball_scale, ..BarrierOptions::default() }
    }

    pub fn t_grid(&self, diameter: f64) -> Vec<f64> {
        crate::analysis::t_grid(self.t_min_factor * self.h, 0.5 * diameter, self.t_points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "n = 2\ndomain.kind = ball\ngrid.h = 0.1\nphi.kind = re_z1\nf.kind = zero\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.n, 2);
        assert_eq!(c.phi, PhiChoice::ReZ1);
        assert_eq!(c.frames, 32);
        assert_eq!(c.pair_budget, 2_000_000);
        assert_eq!(c.resolved["domain.radius"], "1");
    }

    #[test]
    fn negative_tol_is_a_range_error_at_its_line() {
        let text = format!("{MINIMAL}# tolerance\nsolver.tol = -1\n");
        match parse_config(&text) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 7);
                assert!(msg.contains("solver.tol"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn frames_reach_the_direction_set() {
        let c = parse_config(&format!("{MINIMAL}directions.frames = 32\n")).unwrap();
        assert!(c.directions().unwrap().descriptor().starts_with("frames=32 "));
    }

    #[test]
    fn strictness() {
        for (text, line) in [
            ("grid.hh = 0.1\n", 1),
            ("n = 2\nn = 3\n", 2),
            ("n = two\n", 1),
            ("\n\nno equals sign\n", 3),
            ("phi.kind = nope\n", 1),
            ("domain.center = 0, 0\n", 1),
        ] {
            match parse_config(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn echo_round_trips() {
        let text = format!("{MINIMAL}domain.kind = intersection\n");
        assert!(parse_config(&text).is_err());
        let c = parse_config(
            "domain.kind = intersection\ndomain.balls = 0,0,0,0 : 1; 0.5,0,0,0 : 1\nphi.kind = poly\nphi.terms = 1:2,0,0,0; -0.5:0,0,1,1\n",
        )
        .unwrap();
        let again = parse_config(&c.echo().join("\n")).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.domain_spec().unwrap().rho(&[0.0; 4]), -0.75);
    }
}
