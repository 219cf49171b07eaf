//! Growth tensors `A^h = I + h^γ S + h^{γ/2} x₃ B`, the induced metric, and the
//! curl-curl curvature diagnostics of planar symmetric fields.

use crate::error::{Error, Result};
use crate::field::PlanarMatrixField;
use crate::tensor::{sym, Mat3};

/// Axis-aligned rectangle `(x0, x1) × (y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Rect {
    pub fn new(x: [f64; 2], y: [f64; 2]) -> Result<Self> {
        let r = Rect { x, y };
        if !(r.width() > 0.0 && r.height() > 0.0) {
            return Err(Error::Config(format!(
                "domain rectangle must have positive area (got {x:?} x {y:?})"
            )));
        }
        Ok(r)
    }

    pub fn unit_square() -> Self {
        Rect { x: [0.0, 1.0], y: [0.0, 1.0] }
    }

    pub fn width(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn height(&self) -> f64 {
        self.y[1] - self.y[0]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrestrainSpec {
    pub stretching: PlanarMatrixField,
    pub bending: PlanarMatrixField,
    pub gamma: f64,
    pub omega: Rect,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthTensor {
    pub a: Mat3,
    pub inverse: Mat3,
}

impl PrestrainSpec {
    pub fn new(
        stretching: PlanarMatrixField,
        bending: PlanarMatrixField,
        gamma: f64,
        omega: Rect,
    ) -> Result<Self> {
        if !(gamma > 2.0) || !gamma.is_finite() {
            return Err(Error::Config(format!(
                "gamma must satisfy gamma > 2 (got {gamma})"
            )));
        }
        Rect::new(omega.x, omega.y)?;
        Ok(PrestrainSpec {
            stretching,
            bending,
            gamma,
            omega,
        })
    }

    /// No prestrain at all: `S = B = 0`.
    pub fn flat(gamma: f64, omega: Rect) -> Result<Self> {
        Self::new(PlanarMatrixField::zero(), PlanarMatrixField::zero(), gamma, omega)
    }

    /// `A^h(x', x₃)` with `x₃` the physical thickness coordinate, `|x₃| ≤ h/2`.
    pub fn growth_tensor(&self, h: f64, xp: [f64; 2], x3: f64) -> Result<GrowthTensor> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("thickness must be positive (got {h})")));
        }
        let a = self.growth_matrix(h, xp, x3);
        let det = a.det();
        if det <= 1e-10 {
            return Err(Error::Singular(format!(
                "growth tensor near-singular at {xp:?}, x3 = {x3}: det = {det:e}"
            )));
        }
        let inverse = a
            .inverse()
            .ok_or_else(|| Error::Singular("growth tensor not invertible".into()))?;
        Ok(GrowthTensor { a, inverse })
    }

    pub fn growth_matrix(&self, h: f64, xp: [f64; 2], x3: f64) -> Mat3 {
        let mut a = Mat3::IDENTITY;
        if !self.stretching.is_zero() {
            a += self.stretching.value(xp) * h.powf(self.gamma);
        }
        if !self.bending.is_zero() {
            a += self.bending.value(xp) * (h.powf(0.5 * self.gamma) * x3);
        }
        a
    }

    /// `G^h = (A^h)ᵀ A^h`.
    pub fn metric(&self, h: f64, xp: [f64; 2], x3: f64) -> Result<Mat3> {
        let a = self.growth_tensor(h, xp, x3)?.a;
        Ok(a.transpose() * a)
    }

    /// First-order truncation `I + 2h^γ sym S + 2h^{γ/2} x₃ sym B`.
    pub fn metric_truncated(&self, h: f64, xp: [f64; 2], x3: f64) -> Mat3 {
        Mat3::IDENTITY
            + sym(&self.stretching.value(xp)) * (2.0 * h.powf(self.gamma))
            + sym(&self.bending.value(xp)) * (2.0 * h.powf(0.5 * self.gamma) * x3)
    }

    /// Curl-curl of `(sym B)_{2×2}` at a point. Zero everywhere iff that
    /// block is a Hessian on the rectangle, in which case the bending
    /// limit has zero minimum.
    pub fn bending_compatibility(&self, xp: [f64; 2]) -> f64 {
        linearized_gauss_curvature(&self.bending, xp)
    }
}

/// `f = −(∂₂₂M₁₁ − 2∂₁₂M₁₂ + ∂₁₁M₂₂)` for `M = (sym F)_{2×2}`.
pub fn linearized_gauss_curvature(field: &PlanarMatrixField, xp: [f64; 2]) -> f64 {
    let m22_11 = sym(&field.deriv(0, 2, xp))[(0, 0)];
    let m12_12 = sym(&field.deriv(1, 1, xp))[(0, 1)];
    let m11_22 = sym(&field.deriv(2, 0, xp))[(1, 1)];
    -(m22_11 - 2.0 * m12_12 + m11_22)
}

/// Samples `bending_compatibility` on an `n1 × n2` node grid (row-major in x₂).
pub fn bending_compatibility_field(spec: &PrestrainSpec, n1: usize, n2: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            let x = spec.omega.x[0] + spec.omega.width() * i as f64 / (n1 - 1) as f64;
            let y = spec.omega.y[0] + spec.omega.height() * j as f64 / (n2 - 1) as f64;
            out.push(spec.bending_compatibility([x, y]));
        }
    }
    out
}
