//! Frame screening for Gauss-Seidel sweeps.
//!
//! A frame value is a nonnegative combination of neighbor values and fixed
//! boundary data, and rounding is monotone, so while the field only rises
//! every frame value computed earlier stays a lower bound for the current
//! one. Frames whose stored value is already at least the running minimum
//! are skipped; they cannot change the minimum, so the update is exact.
//!
//! Any decrease in the field (`drift`) invalidates the bounds of a node at
//! its next visit.

use crate::error::Result;
use crate::stencil::{Scheme, Scratch};

pub(crate) struct Screen {
    frames: usize,
    /// Per (node, frame): the frame value when last evaluated.
    bound: Vec<f64>,
    stamp: Vec<f64>,
    /// Per node: the frame that attained the minimum last time.
    best: Vec<u32>,
}

impl Screen {
    pub(crate) fn new(len: usize, frames: usize) -> Self {
        Self { frames, bound: vec![f64::NEG_INFINITY; len * frames], stamp: vec![0.0; len], best: vec![0; len] }
    }

    /// Drops the bounds of positions `..end`.
    pub(crate) fn forget(&mut self, end: usize) {
        self.bound[..end * self.frames].fill(f64::NEG_INFINITY);
    }

    /// The exact node update `min_H u_H` at `pos`. Returns the value and the
    /// number of frames evaluated.
    pub(crate) fn update(
        &mut self,
        sch: &Scheme,
        u: &[f64],
        pos: usize,
        rhs: f64,
        sc: &mut Scratch,
        drift: f64,
    ) -> Result<(f64, usize)> {
        let nf = self.frames;
        let bound = &mut self.bound[pos * nf..(pos + 1) * nf];
        if drift != self.stamp[pos] {
            bound.fill(f64::NEG_INFINITY);
            self.stamp[pos] = drift;
        }
        let first = self.best[pos] as usize;
        let mut best = sch.frame_value(u, pos, first, rhs, sc)?;
        bound[first] = best;
        let mut arg = first;
        let mut evals = 1;
        for f in 0..nf {
            if f != first && bound[f] < best {
                let v = sch.frame_value(u, pos, f, rhs, sc)?;
                bound[f] = v;
                evals += 1;
                if v < best {
                    best = v;
                    arg = f;
                }
            }
        }
        self.best[pos] = arg as u32;
        Ok((best, evals))
    }
}
