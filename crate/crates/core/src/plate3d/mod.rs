//! The three-dimensional prestrained plate energy on the rescaled domain.
//!
//! Deformations are stored as `y(x', t) = u^h(x', h t)` on the nodes of a
//! [`PlateGrid`]; the thickness derivative of `u^h` is `(1/h) ∂_t y`. The
//! energy `(1/h) ∫_{Ω^h} W(∇u (A^h)⁻¹)` becomes a weighted nodal sum with
//! trapezoid weights in-plane and Gauss weights across the thickness.

mod diagnostics;
mod energy;

pub use diagnostics::{
    affine_residual, relative_l2_affine_aligned, rotation_field_diagnostic, scaled_displacement,
    RotationDiagnostic, ScaledDisplacement,
};
pub use energy::{
    energy_gradient, evaluate_energy, minimize_energy, EnergyBreakdown, MinimizeOutcome,
    PlateEnergy,
};

use crate::error::{Error, Result};
use crate::grid::PlateGrid;
use crate::tensor::{vec_add, Mat3, Vec3};

/// Nodal values of a deformation of the rescaled plate.
#[derive(Clone, Debug, PartialEq)]
pub struct Deformation3D {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    pub values: Vec<Vec3>,
}

impl Deformation3D {
    pub fn from_fn<F: Fn([f64; 2], f64) -> Vec3>(grid: &PlateGrid, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.node_count());
        for i in 0..grid.n1() {
            for j in 0..grid.n2() {
                let p = grid.plane.point(i, j);
                for &t in &grid.t {
                    values.push(f(p, t));
                }
            }
        }
        Deformation3D {
            n1: grid.n1(),
            n2: grid.n2(),
            m: grid.m,
            values,
        }
    }

    /// `u^h(x', x₃) = (x', x₃)`, stored as `(x', h t)`.
    pub fn identity_lift(grid: &PlateGrid, h: f64) -> Self {
        Self::from_fn(grid, |p, t| [p[0], p[1], h * t])
    }

    pub fn check(&self, grid: &PlateGrid) -> Result<()> {
        if self.n1 != grid.n1() || self.n2 != grid.n2() || self.m != grid.m {
            return Err(Error::Domain(format!(
                "deformation shape {}x{}x{} does not match grid {}x{}x{}",
                self.n1,
                self.n2,
                self.m,
                grid.n1(),
                grid.n2(),
                grid.m
            )));
        }
        if self.values.len() != grid.node_count() {
            return Err(Error::Domain("deformation has wrong node count".into()));
        }
        if !self.values.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::Domain("deformation has non-finite entries".into()));
        }
        Ok(())
    }

    /// `x ↦ R x + c` applied to every node.
    pub fn rigid_motion(&self, r: &Mat3, c: Vec3) -> Self {
        Deformation3D {
            values: self.values.iter().map(|&v| vec_add(r.mul_vec(v), c)).collect(),
            ..*self
        }
    }

    pub fn as_flat(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn from_flat(&self, flat: &[f64]) -> Self {
        Deformation3D {
            values: flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
            ..*self
        }
    }
}

#[cfg(test)]
mod tests;
