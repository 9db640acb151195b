//! Catalogs of boundary data `phi` and densities `f`.

use std::fmt;
use std::sync::Arc;

use crate::grid::ScalarField;

/// A monomial `coef * prod_i x_i^{e_i}` in the real coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub exponents: Vec<u32>,
}

fn eval_poly(terms: &[Monomial], x: &[f64]) -> f64 {
    terms
        .iter()
        .map(|m| {
            m.exponents
                .iter()
                .zip(x)
                .fold(m.coef, |acc, (&e, &xi)| acc * xi.powi(e as i32))
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Psi {
    /// `psi(t) = t`
    Linear,
    /// `psi(t) = t^{1/2}`
    Sqrt,
}

impl Psi {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Psi::Linear => t,
            Psi::Sqrt => t.sqrt(),
        }
    }
}

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Boundary data, given as a function on a neighborhood of the boundary.
#[derive(Clone)]
pub enum BoundaryData {
    ReZ1,
    AbsSq,
    /// `-psi(sqrt((1 + Re z_1) / 2))`, clamped at zero below the square root.
    Example47(Psi),
    Const(f64),
    Poly(Vec<Monomial>),
    /// `k |z - center|^2`
    Quadratic { center: Vec<f64>, k: f64 },
    /// Multilinear interpolation of a solved field.
    Sampled(Arc<ScalarField>),
    Scaled(f64, Box<BoundaryData>),
    Sum(Vec<BoundaryData>),
    Custom(PointFn, String),
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl BoundaryData {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            BoundaryData::ReZ1 => x[0],
            BoundaryData::AbsSq => x.iter().map(|v| v * v).sum(),
            BoundaryData::Example47(psi) => -psi.eval((0.5 * (1.0 + x[0])).max(0.0).sqrt()),
            BoundaryData::Const(c) => *c,
            BoundaryData::Poly(terms) => eval_poly(terms, x),
            BoundaryData::Quadratic { center, k } => {
                k * x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            }
            BoundaryData::Sampled(field) => field.interpolate(x).unwrap_or(f64::NAN),
            BoundaryData::Scaled(s, inner) => s * inner.eval(x),
            BoundaryData::Sum(parts) => parts.iter().map(|p| p.eval(x)).sum(),
            BoundaryData::Custom(f, _) => f(x),
        }
    }

    pub fn neg(self) -> Self {
        BoundaryData::Scaled(-1.0, Box::new(self))
    }

    pub fn label(&self) -> String {
        match self {
            BoundaryData::ReZ1 => "re_z1".into(),
            BoundaryData::AbsSq => "abs_sq".into(),
            BoundaryData::Example47(Psi::Linear) => "example47_linear".into(),
            BoundaryData::Example47(Psi::Sqrt) => "example47_sqrt".into(),
            BoundaryData::Const(c) => format!("const({c})"),
            BoundaryData::Poly(t) => format!("poly({} terms)", t.len()),
            BoundaryData::Quadratic { k, .. } => format!("quadratic(k={k})"),
            BoundaryData::Sampled(f) => format!("sampled({})", f.metadata),
            BoundaryData::Scaled(s, inner) => format!("{s}*{}", inner.label()),
            BoundaryData::Sum(parts) => {
                parts.iter().map(|p| p.label()).collect::<Vec<_>>().join("+")
            }
            BoundaryData::Custom(_, l) => l.clone(),
        }
    }
}

/// Nonnegative densities. Values may be `+inf` at singular points.
#[derive(Clone)]
pub enum Density {
    Zero,
    Const(f64),
    /// `1 / |z_1|`
    InvAbsZ1,
    /// Polynomial clamped below at zero.
    Poly(Vec<Monomial>),
    /// The trivial extension by zero of `inner` outside `{rho < 0}`.
    Restricted { inner: Box<Density>, domain: Arc<crate::domain::DomainSpec> },
    Custom(PointFn, String),
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Density {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Density::Zero => 0.0,
            Density::Const(c) => *c,
            Density::InvAbsZ1 => 1.0 / x[0].hypot(x[1]),
            Density::Poly(terms) => eval_poly(terms, x).max(0.0),
            Density::Restricted { inner, domain } => {
                if domain.rho(x) < 0.0 {
                    inner.eval(x)
                } else {
                    0.0
                }
            }
            Density::Custom(f, _) => f(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Density::Zero => true,
            Density::Const(c) => *c == 0.0,
            _ => false,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Density::Zero => "zero".into(),
            Density::Const(c) => format!("const({c})"),
            Density::InvAbsZ1 => "inv_abs_z1".into(),
            Density::Poly(t) => format!("poly({} terms)", t.len()),
            Density::Restricted { inner, .. } => format!("{}|domain", inner.label()),
            Density::Custom(_, l) => l.clone(),
        }
    }
}

/// Regularity class of the density.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityKind {
    Continuous,
    Lp { p: f64, singular_points: Vec<Vec<f64>> },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example47_on_sphere() {
        // on the unit sphere the boundary value is -|z - (-1, 0)| / 2
        let x = [0.6, 0.0, 0.0, 0.8];
        let v = BoundaryData::Example47(Psi::Linear).eval(&x);
        let dist = ((0.6f64 + 1.0).powi(2) + 0.64).sqrt();
        assert!((v + dist / 2.0).abs() < 1e-15);
    }

    #[test]
    fn poly_and_combinators() {
        let p = BoundaryData::Poly(vec![
            Monomial { coef: 2.0, exponents: vec![1, 0] },
            Monomial { coef: -1.0, exponents: vec![0, 2] },
        ]);
        assert_eq!(p.eval(&[3.0, 2.0]), 2.0);
        let s = BoundaryData::Sum(vec![p, BoundaryData::Const(1.0)]).neg();
        assert_eq!(s.eval(&[3.0, 2.0]), -3.0);
    }

    #[test]
    fn density_catalog() {
        assert_eq!(Density::InvAbsZ1.eval(&[0.0, 0.5, 1.0, 1.0]), 2.0);
        assert_eq!(Density::InvAbsZ1.eval(&[0.0, 0.0, 1.0, 1.0]), f64::INFINITY);
        let p = Density::Poly(vec![Monomial { coef: -1.0, exponents: vec![0, 0] }]);
        assert_eq!(p.eval(&[0.0, 0.0]), 0.0);
    }
}
