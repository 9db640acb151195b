//! Sampled moduli of continuity and their minimal concave majorants.

use serde::Serialize;

use crate::error::{Error, Result};

/// Samples `(t, omega(t))` and the upper concave hull through the origin.
#[derive(Debug, Clone, Serialize)]
pub struct ModulusCurve {
    pub samples: Vec<(f64, f64)>,
    pub breakpoints: Vec<(f64, f64)>,
    /// Random pairs drawn when the samples come from a field, else 0.
    pub pair_budget: usize,
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Upper concave hull of the samples together with `(0, 0)`.
pub fn minimal_concave_majorant(samples: &[(f64, f64)]) -> Result<ModulusCurve> {
    let mut prev = (0.0, 0.0);
    for (k, &(t, w)) in samples.iter().enumerate() {
        if !t.is_finite() || !w.is_finite() {
            return Err(Error::Input(format!("modulus sample {k} is not finite")));
        }
        if t < prev.0 || (k > 0 && t == prev.0) || t < 0.0 {
            return Err(Error::Input(format!("modulus samples must have increasing t (index {k})")));
        }
        if w < prev.1 {
            return Err(Error::Input(format!("modulus samples decrease at t = {t}")));
        }
        if t == 0.0 && w != 0.0 {
            return Err(Error::Input("a modulus vanishes at 0".into()));
        }
        prev = (t, w);
    }
    let mut hull: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for &p in samples.iter().filter(|p| p.0 > 0.0) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) >= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    Ok(ModulusCurve { samples: samples.to_vec(), breakpoints: hull, pair_budget: 0 })
}

/// Sampled modulus of a finite point set: every pair is used, and the
/// result lists `(distance, running max)` at each distance where the running
/// max grows, so it describes the step function exactly.
pub fn point_set_modulus(points: &[Vec<f64>], values: &[f64]) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            pairs.push((d, (values[i] - values[j]).abs()));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut best = 0.0;
    for (d, w) in pairs {
        if w > best && d > 0.0 {
            best = w;
            match out.last_mut() {
                Some(last) if last.0 == d => last.1 = w,
                _ => out.push((d, w)),
            }
        }
    }
    out
}

impl ModulusCurve {
    /// The majorant: linear between breakpoints, constant after the last.
    pub fn majorant(&self, t: f64) -> f64 {
        let b = &self.breakpoints;
        if t <= 0.0 {
            return 0.0;
        }
        let last = b[b.len() - 1];
        if t >= last.0 {
            return last.1;
        }
        let k = b.partition_point(|p| p.0 <= t);
        let (a, c) = (b[k - 1], b[k]);
        a.1 + (c.1 - a.1) * (t - a.0) / (c.0 - a.0)
    }

    /// The sampled modulus itself, as a step function from the right:
    /// the value at the largest sample `<= t`.
    pub fn value(&self, t: f64) -> f64 {
        let k = self.samples.partition_point(|p| p.0 <= t);
        if k == 0 {
            0.0
        } else {
            self.samples[k - 1].1
        }
    }

    pub fn ts(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.0).collect()
    }

    /// Rows `t, omega, majorant` for CSV output.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,omega,majorant\n");
        for &(t, w) in &self.samples {
            out.push_str(&format!("{t},{w},{}\n", self.majorant(t)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_is_its_own_majorant() {
        let s: Vec<(f64, f64)> = (1..=10).map(|k| (k as f64 * 0.1, k as f64 * 0.1)).collect();
        let m = minimal_concave_majorant(&s).unwrap();
        for &(t, w) in &s {
            assert!((m.majorant(t) - w).abs() < 1e-15);
        }
    }

    #[test]
    fn square_samples_give_a_chord() {
        let m = minimal_concave_majorant(&[(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)]).unwrap();
        assert_eq!(m.majorant(0.5), 0.5);
        assert_eq!(m.breakpoints, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn clipped_line_is_fixed() {
        let s: Vec<(f64, f64)> = (1..=20).map(|k| k as f64 * 0.05).map(|t| (t, (2.0 * t).min(1.0))).collect();
        let m = minimal_concave_majorant(&s).unwrap();
        for t in [0.1, 0.3, 0.5, 0.77, 1.0, 2.0] {
            assert!((m.majorant(t) - (2.0f64 * t).min(1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn point_set_modulus_of_a_line() {
        let pts: Vec<Vec<f64>> = (0..5).map(|k| vec![k as f64, 0.0]).collect();
        let vals = [0.0, 2.0, 1.0, 1.0, 5.0];
        // the largest lag-one jump is 4; only the full span beats it
        assert_eq!(point_set_modulus(&pts, &vals), vec![(1.0, 4.0), (4.0, 5.0)]);
    }

    #[test]
    fn decreasing_samples_are_rejected() {
        assert!(minimal_concave_majorant(&[(0.1, 0.5), (0.2, 0.4)]).is_err());
    }

    proptest! {
        #[test]
        fn majorant_is_concave_and_above(incs in proptest::collection::vec(0.0f64..1.0, 2..30)) {
            let mut w = 0.0;
            let s: Vec<(f64, f64)> = incs.iter().enumerate().map(|(k, d)| { w += d; ((k + 1) as f64 * 0.1, w) }).collect();
            let m = minimal_concave_majorant(&s).unwrap();
            for &(t, w) in &s {
                prop_assert!(m.majorant(t) >= w - 1e-12);
            }
            let b = &m.breakpoints;
            for k in 2..b.len() {
                let s1 = (b[k - 1].1 - b[k - 2].1) / (b[k - 1].0 - b[k - 2].0);
                let s2 = (b[k].1 - b[k - 1].1) / (b[k].0 - b[k - 1].0);
                prop_assert!(s2 <= s1 + 1e-12);
            }
            // minimality: any chord-based concave candidate through the hull
            // vertices cannot go below; check the hull touches a sample at
            // every breakpoint
            for p in b.iter().skip(1) {
                prop_assert!(s.contains(p));
            }
        }

        #[test]
        fn subadditive_samples_bound(a in 0.1f64..3.0, e in 0.2f64..1.0, eta in 0.1f64..5.0) {
            // omega(t) = a t^e is concave, hence subadditive
            let ts: Vec<f64> = (1..=200).map(|k| k as f64 * 0.01).collect();
            let s: Vec<(f64, f64)> = ts.iter().map(|&t| (t, a * t.powf(e))).collect();
            let m = minimal_concave_majorant(&s).unwrap();
            for &t in &ts {
                if eta * t <= 2.0 {
                    let lhs = m.majorant(eta * t);
                    prop_assert!(lhs <= (1.0 + eta) * a * t.powf(e) + 1e-10);
                }
            }
        }
    }
}
