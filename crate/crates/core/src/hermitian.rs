//! Positive Hermitian matrices with `det H = n^{-n}`, the linear operators
//! `Delta_H u = tr(H Q_u)` they define, and Gaveau's infimum formula.
//!
//! `Q_u` is the complex Hessian `Q_{jk} = d^2 u / dz_j dzbar_k`. For a rank-one
//! `H = v v^*` the operator is the Laplacian of `u` restricted to the complex
//! line through `conj(v)`, which is what the stencils sample.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::domain::{crossing_with_buffer, DomainSpec};
use crate::error::{Error, Result};
use crate::sampling::{box_muller, rng, ShiftedHalton};

#[derive(Debug, Clone)]
pub struct HermitianDirection {
    /// Orthonormal columns `v_1, ..., v_n`, each of length `n`.
    pub frame: Vec<Vec<Complex64>>,
    pub eigenvalues: Vec<f64>,
    /// Arm length in units of the grid spacing.
    pub arm_scale: f64,
    /// Index of the frame inside its direction set.
    pub frame_index: usize,
}

impl HermitianDirection {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// `H = sum_j lambda_j v_j v_j^*`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for (v, &l) in self.frame.iter().zip(&self.eigenvalues) {
            for r in 0..n {
                for c in 0..n {
                    m[(r, c)] += v[r] * v[c].conj() * l;
                }
            }
        }
        m
    }

    /// The real unit vectors spanning the complex line of column `j`.
    pub fn line_axes(&self, j: usize) -> (Vec<f64>, Vec<f64>) {
        line_axes(&self.frame[j])
    }
}

/// Real embedding of the complex line through `conj(v)`: the pair
/// `(conj(v), i conj(v))` in interleaved coordinates.
pub fn line_axes(v: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let mut a = Vec::with_capacity(2 * v.len());
    let mut b = Vec::with_capacity(2 * v.len());
    for z in v {
        a.push(z.re);
        a.push(-z.im);
        b.push(z.im);
        b.push(z.re);
    }
    (a, b)
}

/// A Hermitian complex Hessian.
#[derive(Debug, Clone)]
pub struct ComplexHessian {
    pub q: DMatrix<Complex64>,
}

impl ComplexHessian {
    pub fn new(q: DMatrix<Complex64>) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::Input("complex Hessian must be square".into()));
        }
        let scale = q.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        for r in 0..q.nrows() {
            for c in 0..q.ncols() {
                if (q[(r, c)] - q[(c, r)].conj()).norm() > 1e-12 * scale {
                    return Err(Error::Input(format!("complex Hessian is not Hermitian at ({r}, {c})")));
                }
            }
        }
        Ok(Self { q })
    }

    /// Complex Hessian of the real quadratic form `x^T A x / 2` in
    /// interleaved coordinates.
    pub fn from_real_hessian(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows() / 2;
        let mut q = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
                q[(j, k)] = Complex64::new(
                    0.25 * (a[(xj, xk)] + a[(yj, yk)]),
                    0.25 * (a[(xj, yk)] - a[(yj, xk)]),
                );
            }
        }
        Self::new(q)
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    /// `v^* Q v`.
    pub fn quadratic(&self, v: &[Complex64]) -> f64 {
        let n = self.n();
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..n {
            for c in 0..n {
                acc += v[r].conj() * self.q[(r, c)] * v[c];
            }
        }
        acc.re
    }

    /// `tr(H Q)` for a direction in spectral form.
    pub fn trace_with(&self, dir: &HermitianDirection) -> f64 {
        dir.frame
            .iter()
            .zip(&dir.eigenvalues)
            .map(|(v, l)| l * self.quadratic(v))
            .sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.q.clone().symmetric_eigenvalues().iter().cloned().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }
}

/// A finite sample of the admissible family, grouped by frame: every frame
/// carries the same eigenvalue profiles.
#[derive(Debug, Clone)]
pub struct DirectionSet {
    pub n: usize,
    pub directions: Vec<HermitianDirection>,
    pub frames: Vec<Vec<Vec<Complex64>>>,
    /// Normalized eigenvalue profiles shared by every frame.
    pub profiles: Vec<Vec<f64>>,
    pub frame_count: usize,
    pub ladder: Vec<f64>,
    pub seed: u64,
    pub arm_scale: f64,
}

impl DirectionSet {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn descriptor(&self) -> String {
        format!(
            "frames={} ladder={:?} profiles={} directions={} seed={} arm_scale={}",
            self.frame_count,
            self.ladder,
            self.profiles.len(),
            self.directions.len(),
            self.seed,
            self.arm_scale
        )
    }

    /// One row per direction: eigenvalues, then the frame entries column by
    /// column as interleaved (re, im).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for d in &self.directions {
            let mut cells: Vec<String> = d.eigenvalues.iter().map(|l| l.to_string()).collect();
            for v in &d.frame {
                for z in v {
                    cells.push(z.re.to_string());
                    cells.push(z.im.to_string());
                }
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Eigenvalue profiles `(kappa, 1, ..., 1)` and their distinct permutations.
pub fn ladder_profiles(n: usize, ladder: &[f64]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for &k in ladder {
        for pos in 0..n {
            let mut p = vec![1.0; n];
            p[pos] = k;
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

/// Rescales a positive profile so that its product is `n^{-n}`.
pub fn normalize_profile(profile: &[f64]) -> Vec<f64> {
    let n = profile.len() as f64;
    let log_mean = profile.iter().map(|r| r.ln()).sum::<f64>() / n;
    let s = 1.0 / (n * log_mean.exp());
    profile.iter().map(|r| r * s).collect()
}

fn gram_schmidt(cols: &mut [Vec<Complex64>]) -> bool {
    let n = cols.len();
    for j in 0..n {
        // two passes keep the columns orthonormal to machine precision
        for _ in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let proj: Complex64 = done[k].iter().zip(&rest[0]).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in rest[0].iter_mut().zip(&done[k]) {
                    *x -= proj * y;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return false;
        }
        for z in cols[j].iter_mut() {
            *z /= norm;
        }
    }
    true
}

fn identity_frame(n: usize) -> Vec<Vec<Complex64>> {
    (0..n)
        .map(|j| (0..n).map(|k| Complex64::new(if j == k { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect()
}

/// Quasi-uniform unitary frames: the identity, then Gram-Schmidt applied to
/// complex Gaussian matrices drawn from a shifted Halton sequence.
pub fn unitary_frames(n: usize, count: usize, seed: u64) -> Vec<Vec<Vec<Complex64>>> {
    let mut frames = vec![identity_frame(n)];
    let dim = 2 * n * n;
    let halton = (dim <= 32).then(|| ShiftedHalton::new(dim, seed));
    let mut fallback = rng(seed);
    let mut uni = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    let mut index = 0u64;
    while frames.len() < count {
        match &halton {
            Some(hs) => hs.point(index, &mut uni),
            None => {
                use rand::Rng;
                for u in uni.iter_mut() {
                    *u = fallback.gen::<f64>().max(1e-300);
                }
            }
        }
        index += 1;
        box_muller(&uni, &mut gauss);
        let mut cols: Vec<Vec<Complex64>> = (0..n)
            .map(|j| (0..n).map(|k| Complex64::new(gauss[2 * (j * n + k)], gauss[2 * (j * n + k) + 1])).collect())
            .collect();
        if gram_schmidt(&mut cols) {
            frames.push(cols);
        }
    }
    frames
}

/// Crosses `frame_count` unitary frames with the normalized profiles; the
/// canonical direction (identity frame, all eigenvalues `1/n`) is added when
/// no profile produces it.
pub fn build_direction_set(
    n: usize,
    frame_count: usize,
    profiles: &[Vec<f64>],
    seed: u64,
    arm_scale: f64,
) -> Result<DirectionSet> {
    if n == 0 || frame_count == 0 {
        return Err(Error::Input("direction set needs n >= 1 and at least one frame".into()));
    }
    if frame_count > 128 {
        return Err(Error::Input(format!("at most 128 frames are supported, got {frame_count}")));
    }
    if !(arm_scale > 0.0) {
        return Err(Error::Input(format!("arm scale {arm_scale} must be positive")));
    }
    let mut normalized: Vec<Vec<f64>> = Vec::new();
    for p in profiles {
        if p.len() != n || p.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::Input(format!("eigenvalue profile {p:?} must have {n} positive entries")));
        }
        let q = normalize_profile(p);
        if !normalized.iter().any(|e| same_profile(e, &q)) {
            normalized.push(q);
        }
    }
    let canonical = vec![1.0 / n as f64; n];
    if !normalized.iter().any(|e| same_profile(e, &canonical)) {
        normalized.push(canonical);
    }
    let frames = unitary_frames(n, frame_count, seed);
    let mut directions = Vec::with_capacity(frames.len() * normalized.len());
    for (fi, frame) in frames.iter().enumerate() {
        for p in &normalized {
            directions.push(HermitianDirection {
                frame: frame.clone(),
                eigenvalues: p.clone(),
                arm_scale,
                frame_index: fi,
            });
        }
    }
    let mut ladder: Vec<f64> = profiles
        .iter()
        .map(|p| p.iter().cloned().fold(0.0, f64::max) / p.iter().cloned().fold(f64::INFINITY, f64::min))
        .collect();
    ladder.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ladder.dedup();
    Ok(DirectionSet {
        n,
        directions,
        frames,
        profiles: normalized,
        frame_count,
        ladder,
        seed,
        arm_scale,
    })
}

fn same_profile(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-14 * x.abs().max(y.abs()))
}

/// `min_{H in D} tr(H Q)`, an upper bound for `det(Q)^{1/n}`.
pub fn gaveau_inf(q: &ComplexHessian, set: &DirectionSet) -> Result<f64> {
    let scale = q.q.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let min_eig = q.eigenvalues()[0];
    if min_eig < -1e-8 * scale {
        return Err(Error::NotPsh { min_eigenvalue: min_eig });
    }
    // the quadratic forms only depend on the frame
    let mut best = f64::INFINITY;
    for frame in &set.frames {
        let diag: Vec<f64> = frame.iter().map(|v| q.quadratic(v)).collect();
        for p in &set.profiles {
            let t: f64 = p.iter().zip(&diag).map(|(l, d)| l * d).sum();
            best = best.min(t);
        }
    }
    Ok(best)
}

/// Four-point complex-line stencil of a smooth function at `z` with arm
/// length `delta`, no boundary handling.
pub fn pointwise_delta_h<F: Fn(&[f64]) -> f64>(u: F, z: &[f64], dir: &HermitianDirection, delta: f64) -> f64 {
    let u0 = u(z);
    let mut p = vec![0.0; z.len()];
    let mut total = 0.0;
    for (j, &l) in dir.eigenvalues.iter().enumerate() {
        let (a, b) = dir.line_axes(j);
        let mut s = 0.0;
        for axis in [&a, &b] {
            for sign in [1.0, -1.0] {
                for k in 0..z.len() {
                    p[k] = z[k] + sign * delta * axis[k];
                }
                s += u(&p);
            }
        }
        total += l * (s - 4.0 * u0) / (4.0 * delta * delta);
    }
    total
}

/// Unequal-arm second difference along one axis.
pub fn second_difference(u_plus: f64, u_minus: f64, u0: f64, a_plus: f64, a_minus: f64) -> f64 {
    let s = a_plus + a_minus;
    2.0 * (u_plus / (a_plus * s) + u_minus / (a_minus * s) - u0 / (a_plus * a_minus))
}

/// Complex-line stencil at an interior point of `domain`: arms that leave
/// the domain are shortened to the crossing and take the boundary data there.
pub fn delta_h_with_boundary<F, G>(
    u: F,
    phi: G,
    domain: &DomainSpec,
    z: &[f64],
    dir: &HermitianDirection,
    delta: f64,
    rho_tol: f64,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    let u0 = u(z);
    let mut p = vec![0.0; z.len()];
    let mut total = 0.0;
    for (j, &l) in dir.eigenvalues.iter().enumerate() {
        let (a, b) = dir.line_axes(j);
        let mut q = 0.0;
        for axis in [&a, &b] {
            let mut vals = [0.0; 2];
            let mut lens = [delta; 2];
            for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
                let v: Vec<f64> = axis.iter().map(|x| sign * x).collect();
                match crossing_with_buffer(|x| domain.rho(x), z, &v, delta, rho_tol, &mut p) {
                    Some(c) => {
                        if !(c.t > 0.0) {
                            return Err(Error::Geometry { node: 0, msg: "arm has zero length".into() });
                        }
                        lens[s] = c.t;
                        for k in 0..z.len() {
                            p[k] = z[k] + c.t * v[k];
                        }
                        vals[s] = phi(&p);
                    }
                    None => {
                        for k in 0..z.len() {
                            p[k] = z[k] + delta * v[k];
                        }
                        vals[s] = u(&p);
                    }
                }
            }
            q += second_difference(vals[0], vals[1], u0, lens[0], lens[1]);
        }
        total += l * q / 4.0;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag(values: &[f64]) -> ComplexHessian {
        let n = values.len();
        let mut q = DMatrix::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            q[(i, i)] = Complex64::new(*v, 0.0);
        }
        ComplexHessian::new(q).unwrap()
    }

    #[test]
    fn single_canonical_direction() {
        let d = build_direction_set(2, 1, &[vec![1.0, 1.0]], 0, 2.0).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.directions[0].eigenvalues, vec![0.5, 0.5]);
    }

    #[test]
    fn profile_four_one_rescales() {
        let d = build_direction_set(2, 1, &[vec![4.0, 1.0]], 0, 2.0).unwrap();
        assert_relative_eq!(d.directions[0].eigenvalues[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(d.directions[0].eigenvalues[1], 0.25, max_relative = 1e-15);
        // canonical appended
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn one_dimensional_case() {
        let d = build_direction_set(1, 3, &ladder_profiles(1, &[1.0, 4.0]), 7, 2.0).unwrap();
        for dir in &d.directions {
            assert_relative_eq!(dir.eigenvalues[0], 1.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn directions_are_admissible() {
        for n in [2, 3] {
            let d = build_direction_set(n, 16, &ladder_profiles(n, &[1.0, 4.0, 16.0, 64.0]), 11, 2.0).unwrap();
            let target = (n as f64).powi(-(n as i32));
            for dir in &d.directions {
                let prod: f64 = dir.eigenvalues.iter().product();
                assert!(((prod - target) / target).abs() < 1e-12);
                for j in 0..n {
                    for k in 0..n {
                        let ip: Complex64 = dir.frame[j].iter().zip(&dir.frame[k]).map(|(a, b)| a.conj() * b).sum();
                        let want = if j == k { 1.0 } else { 0.0 };
                        assert!((ip - Complex64::new(want, 0.0)).norm() < 1e-12);
                    }
                }
                let m = dir.matrix();
                assert!(m.symmetric_eigenvalues().iter().all(|&e| e > 0.0));
            }
        }
    }

    #[test]
    fn identity_hessian() {
        let d = build_direction_set(2, 8, &ladder_profiles(2, &[1.0, 4.0]), 1, 2.0).unwrap();
        assert_relative_eq!(gaveau_inf(&diag(&[1.0, 1.0]), &d).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn diagonal_four_one() {
        // minimize 4 l1 + l2 with l1 l2 = 1/4: l = (1/4, 1), value 2
        let d = build_direction_set(2, 4, &ladder_profiles(2, &[1.0, 4.0]), 1, 2.0).unwrap();
        assert_relative_eq!(gaveau_inf(&diag(&[4.0, 1.0]), &d).unwrap(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn negative_eigenvalue_is_rejected() {
        let d = build_direction_set(2, 1, &[vec![1.0, 1.0]], 0, 2.0).unwrap();
        assert!(matches!(gaveau_inf(&diag(&[1.0, -0.5]), &d), Err(Error::NotPsh { .. })));
    }

    #[test]
    fn abs_sq_stencil_is_trace() {
        let d = build_direction_set(2, 6, &ladder_profiles(2, &[1.0, 16.0]), 3, 2.0).unwrap();
        let u = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let z = [0.1, -0.2, 0.3, 0.05];
        for dir in &d.directions {
            let v = pointwise_delta_h(u, &z, dir, 0.1);
            assert!((v - dir.trace()).abs() < 1e-12);
            assert!(v >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn pluriharmonic_stencil_is_zero() {
        let d = build_direction_set(2, 6, &ladder_profiles(2, &[1.0, 16.0]), 3, 2.0).unwrap();
        for dir in &d.directions {
            assert!(pointwise_delta_h(|x| x[0], &[0.3, 0.1, -0.2, 0.4], dir, 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn quartic_on_canonical_direction() {
        // d^2 |z1|^4 / dz1 dzbar1 = 4 |z1|^2 = 4 at z = (1, 0); canonical weight 1/2
        let d = build_direction_set(2, 1, &[vec![1.0, 1.0]], 0, 2.0).unwrap();
        let u = |x: &[f64]| (x[0] * x[0] + x[1] * x[1]).powi(2);
        let mut prev = f64::INFINITY;
        for delta in [0.1, 0.05, 0.025] {
            let err = (pointwise_delta_h(u, &[1.0, 0.0, 0.0, 0.0], &d.directions[0], delta) - 2.0).abs();
            assert!(err < 2.0 * delta * delta);
            assert!(err < prev);
            prev = err;
        }
    }
}
