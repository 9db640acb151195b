//! The discrete operators `Delta_H` on a grid.
//!
//! Every direction `H = sum_j lambda_j v_j v_j^*` contributes, for each of its
//! complex lines, four arms of length `delta = s h`. An arm whose endpoint
//! leaves the domain is cut at the boundary crossing and reads the boundary
//! data there; any other arm reads the field by multilinear interpolation.
//! For each line the result is affine in the center value,
//! `qhat_j = num_j - coef_j u(z)`, with nonnegative neighbor weights and
//! `coef_j > 0`, which is what makes the scheme monotone.

use std::sync::Arc;

use rayon::prelude::*;

use crate::data::BoundaryData;
use crate::domain::{crossing_with_buffer, DomainSpec};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hermitian::{line_axes, DirectionSet};

#[derive(Debug, Clone)]
struct ArmPlan {
    /// Unit direction of the arm (already signed).
    dir: Vec<f64>,
    start: usize,
    end: usize,
    center_w: f64,
}

#[derive(Debug, Clone)]
struct LinePlan {
    start: usize,
    end: usize,
    coef: f64,
}

#[derive(Debug, Clone)]
struct FramePlan {
    /// `4n` arms, ordered line, then axis (re, im), then sign (+, -).
    arms: Vec<ArmPlan>,
    /// Merged taps for nodes whose arms all stay inside.
    lines: Vec<LinePlan>,
}

/// Per-call working memory, so that evaluation never allocates.
#[derive(Debug, Clone)]
pub struct Scratch {
    num: Vec<f64>,
    coef: Vec<f64>,
    pub frame_values: Vec<f64>,
}

/// Discretization of the family `{Delta_H : H in D}` on a fixed grid.
pub struct Scheme {
    pub grid: Arc<Grid>,
    pub domain: Arc<DomainSpec>,
    pub dirs: Arc<DirectionSet>,
    phi: BoundaryData,
    pub delta: f64,
    pub rho_tol: f64,
    frames: Vec<FramePlan>,
    arm_off: Vec<isize>,
    arm_w: Vec<f64>,
    line_off: Vec<isize>,
    line_w: Vec<f64>,
    /// Per interior position: no arm of any direction can leave the domain.
    deep: Vec<bool>,
    /// Per interior position, the first row of `cut_mask` for that node
    /// (unused for deep nodes).
    cut_base: Vec<usize>,
    /// Per (shallow node, frame): bit `a` set when arm `a` crosses.
    cut_mask: Vec<u32>,
    cut_start: Vec<usize>,
    /// Arm length and boundary value for each crossing arm, in arm order.
    cut_hits: Vec<(f64, f64)>,
}

type NodeCuts = (Vec<u32>, Vec<usize>, Vec<(f64, f64)>);

fn node_cuts(
    frames: &[FramePlan],
    domain: &DomainSpec,
    phi: &BoundaryData,
    x: &[f64],
    delta: f64,
    rho_tol: f64,
    node: usize,
) -> Result<NodeCuts> {
    let mut p = vec![0.0; x.len()];
    let mut masks = Vec::with_capacity(frames.len());
    let mut counts = Vec::with_capacity(frames.len());
    let mut hits = Vec::new();
    for plan in frames {
        let mut mask = 0u32;
        let before = hits.len();
        for (a, arm) in plan.arms.iter().enumerate() {
            if let Some(c) = crossing_with_buffer(|y| domain.rho(y), x, &arm.dir, delta, rho_tol, &mut p) {
                if !(c.t > 0.0) {
                    return Err(Error::Geometry { node, msg: "boundary arm of zero length".into() });
                }
                for k in 0..x.len() {
                    p[k] = x[k] + c.t * arm.dir[k];
                }
                mask |= 1 << a;
                hits.push((c.t, phi.eval(&p)));
            }
        }
        masks.push(mask);
        counts.push(hits.len() - before);
    }
    Ok((masks, counts, hits))
}

impl std::fmt::Debug for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scheme")
            .field("delta", &self.delta)
            .field("frames", &self.frames.len())
            .field("interior", &self.grid.interior.len())
            .finish()
    }
}

/// `sum_t w[t] u[node + off[t]]`.
#[inline]
fn gather(u: &[f64], node: usize, w: &[f64], off: &[isize]) -> f64 {
    w.iter().zip(off).map(|(w, &o)| w * u[(node as isize + o) as usize]).sum()
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-12 {
        r
    } else {
        v
    }
}

impl Scheme {
    pub fn new(
        grid: Arc<Grid>,
        domain: Arc<DomainSpec>,
        dirs: Arc<DirectionSet>,
        phi: BoundaryData,
    ) -> Result<Self> {
        if dirs.n != grid.n || domain.n != grid.n {
            return Err(Error::Input("grid, domain and direction set disagree on n".into()));
        }
        if !domain.is_shl_kind() {
            return Err(Error::Domain(format!(
                "{} is not strongly hyperconvex Lipschitz; the solver refuses it",
                domain.kind.label()
            )));
        }
        let s = dirs.arm_scale;
        let needed = s.ceil() as usize + 1;
        if grid.reach_cells < needed {
            return Err(Error::Input(format!(
                "arm scale {s} needs a boundary band of {needed} cells, grid has {}",
                grid.reach_cells
            )));
        }
        let h = grid.h;
        let delta = s * h;
        let dim = grid.dim();
        let n = grid.n;
        let strides: Vec<isize> = grid.strides.iter().map(|&v| v as isize).collect();

        let mut arm_off = Vec::new();
        let mut arm_w = Vec::new();
        let mut line_off = Vec::new();
        let mut line_w = Vec::new();
        let mut frames = Vec::with_capacity(dirs.frames.len());
        for frame in &dirs.frames {
            let mut arms = Vec::with_capacity(4 * n);
            let mut lines = Vec::with_capacity(n);
            for v in frame {
                let (a, b) = line_axes(v);
                let mut merged: Vec<(isize, f64)> = Vec::new();
                let mut center_sum = 0.0;
                for axis in [&a, &b] {
                    for sign in [1.0, -1.0] {
                        let dir: Vec<f64> = axis.iter().map(|x| sign * x).collect();
                        let off: Vec<f64> = dir.iter().map(|x| snap(x * s)).collect();
                        let base: Vec<f64> = off.iter().map(|o| o.floor()).collect();
                        let theta: Vec<f64> = off.iter().zip(&base).map(|(o, b)| o - b).collect();
                        let start = arm_off.len();
                        let mut center_w = 0.0;
                        for mask in 0..(1usize << dim) {
                            let mut w = 1.0;
                            let mut lin = 0isize;
                            for d in 0..dim {
                                let bit = (mask >> d) & 1;
                                w *= if bit == 1 { theta[d] } else { 1.0 - theta[d] };
                                lin += (base[d] as isize + bit as isize) * strides[d];
                            }
                            if w == 0.0 {
                                continue;
                            }
                            if lin == 0 {
                                center_w += w;
                            } else {
                                arm_off.push(lin);
                                arm_w.push(w);
                                merged.push((lin, w));
                            }
                        }
                        center_sum += center_w;
                        arms.push(ArmPlan { dir, start, end: arm_off.len(), center_w });
                    }
                }
                merged.sort_by_key(|t| t.0);
                let start = line_off.len();
                let scale = 1.0 / (4.0 * delta * delta);
                for (off, w) in merged {
                    if line_off.len() > start && *line_off.last().unwrap() == off {
                        *line_w.last_mut().unwrap() += w * scale;
                    } else {
                        line_off.push(off);
                        line_w.push(w * scale);
                    }
                }
                lines.push(LinePlan { start, end: line_off.len(), coef: (4.0 - center_sum) * scale });
            }
            frames.push(FramePlan { arms, lines });
        }

        if 4 * n > 32 {
            return Err(Error::Input(format!("n = {n} is too large for the arm masks")));
        }
        let mut x = vec![0.0; dim];
        let deep: Vec<bool> = grid
            .interior
            .iter()
            .map(|&i| {
                grid.coord(i, &mut x);
                domain.ball_inside(&x, delta)
            })
            .collect();

        // Arm crossings depend only on geometry and boundary data, so they
        // are found once here instead of on every sweep.
        let rho_tol = h * 1e-6;
        let shallow: Vec<usize> = (0..deep.len()).filter(|&p| !deep[p]).collect();
        let per_node: Vec<NodeCuts> = shallow
            .par_iter()
            .map_init(
                || vec![0.0; dim],
                |x, &pos| {
                    let node = grid.interior[pos];
                    grid.coord(node, x);
                    node_cuts(&frames, &domain, &phi, x, delta, rho_tol, node)
                },
            )
            .collect::<Result<_>>()?;
        let mut cut_base = vec![usize::MAX; deep.len()];
        let mut cut_mask = Vec::with_capacity(shallow.len() * frames.len());
        let mut cut_start = Vec::with_capacity(shallow.len() * frames.len());
        let mut cut_hits = Vec::new();
        for (&pos, (masks, counts, hits)) in shallow.iter().zip(per_node) {
            cut_base[pos] = cut_mask.len();
            let mut at = cut_hits.len();
            for (m, c) in masks.into_iter().zip(counts) {
                cut_mask.push(m);
                cut_start.push(at);
                at += c;
            }
            cut_hits.extend(hits);
        }

        Ok(Self {
            rho_tol,
            grid,
            domain,
            dirs,
            phi,
            delta,
            frames,
            arm_off,
            arm_w,
            line_off,
            line_w,
            deep,
            cut_base,
            cut_mask,
            cut_start,
            cut_hits,
        })
    }

    pub fn phi(&self) -> &BoundaryData {
        &self.phi
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn is_deep(&self, pos: usize) -> bool {
        self.deep[pos]
    }

    pub fn deep_count(&self) -> usize {
        self.deep.iter().filter(|&&d| d).count()
    }

    pub fn scratch(&self) -> Scratch {
        let n = self.grid.n;
        Scratch {
            num: vec![0.0; n],
            coef: vec![0.0; n],
            frame_values: vec![0.0; self.frames.len()],
        }
    }

    /// Largest `sum_j lambda_j` over the direction set.
    pub fn max_trace(&self) -> f64 {
        self.dirs.profiles.iter().map(|p| p.iter().sum::<f64>()).fold(0.0, f64::max)
    }

    /// Fills `num`, `coef` for every line of `frame` at interior position `pos`.
    #[inline]
    fn lines(&self, u: &[f64], pos: usize, frame: usize, sc: &mut Scratch) -> Result<()> {
        let node = self.grid.interior[pos];
        let plan = &self.frames[frame];
        if self.deep[pos] {
            for (j, lp) in plan.lines.iter().enumerate() {
                sc.num[j] = gather(u, node, &self.line_w[lp.start..lp.end], &self.line_off[lp.start..lp.end]);
                sc.coef[j] = lp.coef;
            }
            return Ok(());
        }
        let row = self.cut_base[pos] + frame;
        let mask = self.cut_mask[row];
        let mut hit = self.cut_start[row];
        let delta = self.delta;
        for j in 0..self.grid.n {
            let mut num = 0.0;
            let mut coef = 0.0;
            for axis in 0..2 {
                let mut len = [delta; 2];
                let mut rest = [0.0; 2];
                let mut cw = [0.0; 2];
                for sgn in 0..2 {
                    let a = 4 * j + 2 * axis + sgn;
                    if mask & (1 << a) != 0 {
                        (len[sgn], rest[sgn]) = self.cut_hits[hit];
                        hit += 1;
                    } else {
                        let arm = &plan.arms[a];
                        rest[sgn] = gather(u, node, &self.arm_w[arm.start..arm.end], &self.arm_off[arm.start..arm.end]);
                        cw[sgn] = arm.center_w;
                    }
                }
                let (p, m) = (len[0], len[1]);
                let s = p + m;
                let wp = 2.0 / (p * s);
                let wm = 2.0 / (m * s);
                num += wp * rest[0] + wm * rest[1];
                coef += 2.0 / (p * m) - wp * cw[0] - wm * cw[1];
            }
            sc.num[j] = 0.25 * num;
            sc.coef[j] = 0.25 * coef;
        }
        Ok(())
    }

    /// Smallest center value over the profiles of one frame solving
    /// `Delta_H u = rhs` with the neighbors held fixed.
    #[inline]
    pub fn frame_value(&self, u: &[f64], pos: usize, frame: usize, rhs: f64, sc: &mut Scratch) -> Result<f64> {
        self.lines(u, pos, frame, sc)?;
        let mut best = f64::INFINITY;
        for prof in &self.dirs.profiles {
            let mut a = 0.0;
            let mut b = 0.0;
            for j in 0..prof.len() {
                a += prof[j] * sc.num[j];
                b += prof[j] * sc.coef[j];
            }
            let v = (a - rhs) / b;
            if v < best {
                best = v;
            }
        }
        Ok(best)
    }

    /// The monotone node update: `min_H u_H`. Per-frame values are left in
    /// `sc.frame_values`.
    pub fn full_update(&self, u: &[f64], pos: usize, rhs: f64, sc: &mut Scratch) -> Result<f64> {
        let mut best = f64::INFINITY;
        for f in 0..self.frames.len() {
            let v = self.frame_value(u, pos, f, rhs, sc)?;
            sc.frame_values[f] = v;
            if v < best {
                best = v;
            }
        }
        Ok(best)
    }

    /// `Delta_H u` at an interior position for every direction, as
    /// `(min, max)` over the set.
    pub fn delta_h_range(&self, u: &[f64], pos: usize, sc: &mut Scratch) -> Result<(f64, f64)> {
        let u0 = u[self.grid.interior[pos]];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for f in 0..self.frames.len() {
            self.lines(u, pos, f, sc)?;
            for prof in &self.dirs.profiles {
                let mut v = 0.0;
                for j in 0..prof.len() {
                    v += prof[j] * (sc.num[j] - sc.coef[j] * u0);
                }
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Ok((lo, hi))
    }

    /// `min_H Delta_H u` at an interior position.
    pub fn min_delta_h(&self, u: &[f64], pos: usize, sc: &mut Scratch) -> Result<f64> {
        Ok(self.delta_h_range(u, pos, sc)?.0)
    }

    /// `Delta_H u` for one direction (frame, profile index).
    pub fn delta_h(&self, u: &[f64], pos: usize, frame: usize, profile: usize, sc: &mut Scratch) -> Result<f64> {
        let u0 = u[self.grid.interior[pos]];
        self.lines(u, pos, frame, sc)?;
        let prof = &self.dirs.profiles[profile];
        Ok((0..prof.len()).map(|j| prof[j] * (sc.num[j] - sc.coef[j] * u0)).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_domain, DomainKind};
    use crate::grid::{build_grid, GridOptions, ScalarField};
    use crate::hermitian::{build_direction_set, ladder_profiles};

    fn setup(h: f64, frames: usize, phi: BoundaryData) -> Scheme {
        let domain = Arc::new(make_domain(DomainKind::Ball { center: vec![0.0; 4], radius: 1.0 }, 2).unwrap());
        let grid = Arc::new(build_grid(&domain, h, 4.0 * h, &GridOptions::default()).unwrap());
        let dirs = Arc::new(build_direction_set(2, frames, &ladder_profiles(2, &[1.0, 4.0]), 5, 2.0).unwrap());
        Scheme::new(grid, domain, dirs, phi).unwrap()
    }

    #[test]
    fn linear_functions_are_annihilated() {
        let sch = setup(0.2, 4, BoundaryData::ReZ1);
        let f = ScalarField::from_fn(sch.grid.clone(), "re", |x| x[0]);
        let mut sc = sch.scratch();
        for pos in 0..sch.grid.interior.len() {
            let (lo, hi) = sch.delta_h_range(&f.values, pos, &mut sc).unwrap();
            assert!(lo.abs() < 1e-9 && hi.abs() < 1e-9, "{lo} {hi}");
        }
    }

    #[test]
    fn identity_frame_is_exact_on_abs_sq() {
        let sch = setup(0.2, 1, BoundaryData::AbsSq);
        let f = ScalarField::from_fn(sch.grid.clone(), "abs", |x| x.iter().map(|v| v * v).sum());
        let mut sc = sch.scratch();
        for pos in 0..sch.grid.interior.len() {
            for (k, prof) in sch.dirs.profiles.iter().enumerate() {
                let v = sch.delta_h(&f.values, pos, 0, k, &mut sc).unwrap();
                let tr: f64 = prof.iter().sum();
                assert!((v - tr).abs() < 1e-9 * tr.max(1.0) * 1e3, "{v} vs {tr}");
            }
        }
    }

    #[test]
    fn interpolation_bias_is_nonnegative_on_convex() {
        let sch = setup(0.2, 6, BoundaryData::AbsSq);
        let f = ScalarField::from_fn(sch.grid.clone(), "abs", |x| x.iter().map(|v| v * v).sum());
        let mut sc = sch.scratch();
        for pos in 0..sch.grid.interior.len() {
            let (lo, _) = sch.delta_h_range(&f.values, pos, &mut sc).unwrap();
            assert!(lo >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn update_is_fixed_by_constants() {
        let sch = setup(0.2, 6, BoundaryData::Const(0.7));
        let f = ScalarField::from_fn(sch.grid.clone(), "c", |_| 0.7);
        let mut sc = sch.scratch();
        for pos in 0..sch.grid.interior.len() {
            let v = sch.full_update(&f.values, pos, 0.0, &mut sc).unwrap();
            assert!((v - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn polydisc_is_refused() {
        let domain = Arc::new(make_domain(DomainKind::Polydisc { radius: 1.0 }, 2).unwrap());
        let grid = Arc::new(build_grid(&domain, 0.25, 1.0, &GridOptions::default()).unwrap());
        let dirs = Arc::new(build_direction_set(2, 1, &[vec![1.0, 1.0]], 0, 2.0).unwrap());
        assert!(matches!(Scheme::new(grid, domain, dirs, BoundaryData::ReZ1), Err(Error::Domain(_))));
    }
}
