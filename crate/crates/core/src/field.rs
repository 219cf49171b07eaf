//! Analytic planar fields built from separable terms `f(x₁)·g(x₂)`.
//!
//! Each factor is either a monomial or a shifted sine, so derivatives of any
//! order are exact. Scalar fields (out-of-plane displacements) and 3×3 matrix
//! fields (the prestrain tensors) share the same term representation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Mat3;

/// One-dimensional factor of a separable term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Factor {
    /// `x^p`
    Power { p: u32 },
    /// `sin(k·x + φ)`
    Sine { k: f64, phase: f64 },
}

impl Factor {
    pub fn one() -> Self {
        Factor::Power { p: 0 }
    }

    pub fn cos(k: f64) -> Self {
        Factor::Sine {
            k,
            phase: std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn sin(k: f64) -> Self {
        Factor::Sine { k, phase: 0.0 }
    }

    /// `n`-th derivative at `x`.
    pub fn deriv(&self, n: u32, x: f64) -> f64 {
        match *self {
            Factor::Power { p } => {
                if n > p {
                    return 0.0;
                }
                let mut c = 1.0;
                for i in 0..n {
                    c *= (p - i) as f64;
                }
                c * x.powi((p - n) as i32)
            }
            Factor::Sine { k, phase } => {
                k.powi(n as i32) * (k * x + phase + n as f64 * std::f64::consts::FRAC_PI_2).sin()
            }
        }
    }

    fn degree(&self) -> Option<u32> {
        match self {
            Factor::Power { p } => Some(*p),
            Factor::Sine { .. } => None,
        }
    }
}

/// Separable term `f(x₁)·g(x₂)` without its coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Separable {
    pub x: Factor,
    pub y: Factor,
}

impl Separable {
    pub fn monomial(px: u32, py: u32) -> Self {
        Separable {
            x: Factor::Power { p: px },
            y: Factor::Power { p: py },
        }
    }

    /// `∂₁^a ∂₂^b` at `(x, y)`.
    pub fn deriv(&self, a: u32, b: u32, p: [f64; 2]) -> f64 {
        self.x.deriv(a, p[0]) * self.y.deriv(b, p[1])
    }
}

/// Scalar analytic field `Σ cᵢ fᵢ(x₁) gᵢ(x₂)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnalyticScalar {
    pub terms: Vec<(f64, Separable)>,
}

impl AnalyticScalar {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(terms: Vec<(f64, Separable)>) -> Self {
        AnalyticScalar { terms }
    }

    /// Polynomial from `(coefficient, [px, py])` pairs.
    pub fn polynomial(coeffs: &[(f64, [u32; 2])]) -> Self {
        AnalyticScalar {
            terms: coeffs
                .iter()
                .map(|&(c, [px, py])| (c, Separable::monomial(px, py)))
                .collect(),
        }
    }

    /// `a·sin(k₁x₁ + φ₁)·sin(k₂x₂ + φ₂)`.
    pub fn sine_product(a: f64, k: [f64; 2], phase: [f64; 2]) -> Self {
        AnalyticScalar {
            terms: vec![(
                a,
                Separable {
                    x: Factor::Sine { k: k[0], phase: phase[0] },
                    y: Factor::Sine { k: k[1], phase: phase[1] },
                },
            )],
        }
    }

    pub fn deriv(&self, a: u32, b: u32, p: [f64; 2]) -> f64 {
        self.terms.iter().map(|(c, t)| c * t.deriv(a, b, p)).sum()
    }

    pub fn value(&self, p: [f64; 2]) -> f64 {
        self.deriv(0, 0, p)
    }

    pub fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        [self.deriv(1, 0, p), self.deriv(0, 1, p)]
    }

    pub fn hessian(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let h12 = self.deriv(1, 1, p);
        [[self.deriv(2, 0, p), h12], [h12, self.deriv(0, 2, p)]]
    }

    /// Third derivatives `t[a][b][c] = ∂_a ∂_b ∂_c`.
    pub fn third(&self, p: [f64; 2]) -> [[[f64; 2]; 2]; 2] {
        let d300 = self.deriv(3, 0, p);
        let d210 = self.deriv(2, 1, p);
        let d120 = self.deriv(1, 2, p);
        let d030 = self.deriv(0, 3, p);
        let pick = |n1: usize| match n1 {
            3 => d300,
            2 => d210,
            1 => d120,
            _ => d030,
        };
        let mut t = [[[0.0; 2]; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let n1 = [a, b, c].iter().filter(|&&i| i == 0).count();
                    t[a][b][c] = pick(n1);
                }
            }
        }
        t
    }

    /// Total polynomial degree, `None` if any term is trigonometric.
    pub fn polynomial_degree(&self) -> Option<u32> {
        self.terms.iter().try_fold(0, |acc, (_, t)| {
            Some(acc.max(t.x.degree()? + t.y.degree()?))
        })
    }
}

/// 3×3 matrix field `Σ Cᵢ fᵢ(x₁) gᵢ(x₂)` on the plane.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlanarMatrixField {
    pub terms: Vec<(Mat3, Separable)>,
}

impl PlanarMatrixField {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(m: Mat3) -> Self {
        PlanarMatrixField {
            terms: vec![(m, Separable::monomial(0, 0))],
        }
    }

    /// Polynomial field; total degree must not exceed 4.
    pub fn polynomial(terms: &[(Mat3, [u32; 2])]) -> Result<Self> {
        if let Some((_, p)) = terms.iter().find(|(_, p)| p[0] + p[1] > 4) {
            return Err(Error::Config(format!(
                "polynomial matrix field term x^{} y^{} exceeds degree 4",
                p[0], p[1]
            )));
        }
        Ok(PlanarMatrixField {
            terms: terms
                .iter()
                .map(|&(m, [px, py])| (m, Separable::monomial(px, py)))
                .collect(),
        })
    }

    /// `A·sin(k₁x₁ + k₂x₂ + φ)`, split into separable pieces.
    pub fn trig(amplitude: Mat3, k: [f64; 2], phase: f64) -> Self {
        // sin(a + b) = sin a cos b + cos a sin b
        let a = Factor::Sine { k: k[0], phase };
        let a_cos = Factor::Sine {
            k: k[0],
            phase: phase + std::f64::consts::FRAC_PI_2,
        };
        PlanarMatrixField {
            terms: vec![
                (amplitude, Separable { x: a, y: Factor::cos(k[1]) }),
                (amplitude, Separable { x: a_cos, y: Factor::sin(k[1]) }),
            ],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(m, _)| *m == Mat3::ZERO)
    }

    pub fn deriv(&self, a: u32, b: u32, p: [f64; 2]) -> Mat3 {
        self.terms
            .iter()
            .fold(Mat3::ZERO, |acc, (m, t)| acc + *m * t.deriv(a, b, p))
    }

    pub fn value(&self, p: [f64; 2]) -> Mat3 {
        self.deriv(0, 0, p)
    }

    /// `[∂₁F, ∂₂F]`.
    pub fn gradient(&self, p: [f64; 2]) -> [Mat3; 2] {
        [self.deriv(1, 0, p), self.deriv(0, 1, p)]
    }

    /// Componentwise sup-norm estimate of `|F|` over sample points.
    pub fn sup_norm(&self, points: &[[f64; 2]]) -> f64 {
        points
            .iter()
            .map(|&p| self.value(p).norm())
            .fold(0.0, f64::max)
    }
}
