//! Stored-energy densities, their quadratic forms at the identity, and the
//! plane-stress relaxation used by the bending limit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{dist2_so3, polar_decompose, star, sym, Mat2, Mat3, Vec3};

const E3: Vec3 = [0.0, 0.0, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropicModuli {
    pub mu: f64,
    pub lambda: f64,
}

impl IsotropicModuli {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        let m = IsotropicModuli { mu, lambda };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.lambda.is_finite()) {
            return Err(Error::Config("moduli must be finite".into()));
        }
        if self.mu <= 0.0 {
            return Err(Error::Config(format!("mu must be > 0 (got {})", self.mu)));
        }
        if self.lambda < 0.0 {
            return Err(Error::Config(format!("lambda must be >= 0 (got {})", self.lambda)));
        }
        Ok(())
    }

    /// Coefficient of `(tr F)²` in the relaxed planar form.
    pub fn plane_stress_lambda(&self) -> f64 {
        2.0 * self.mu * self.lambda / (2.0 * self.mu + self.lambda)
    }
}

impl Default for IsotropicModuli {
    fn default() -> Self {
        IsotropicModuli { mu: 1.0, lambda: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EnergyDensity {
    /// St. Venant–Kirchhoff: `(μ/4)|FᵀF−I|² + (λ/8)(tr(FᵀF−I))²`.
    Svk(IsotropicModuli),
    /// Squared distance to `SO(3)`.
    Dist2,
}

impl EnergyDensity {
    pub fn svk(mu: f64, lambda: f64) -> Result<Self> {
        Ok(EnergyDensity::Svk(IsotropicModuli::new(mu, lambda)?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnergyDensity::Svk(_) => "svk",
            EnergyDensity::Dist2 => "dist2",
        }
    }

    /// Moduli of the quadratic form `D²W(I)`. The distance density linearizes
    /// to `2|sym F|²`, i.e. `μ = 1, λ = 0`.
    pub fn moduli(&self) -> IsotropicModuli {
        match self {
            EnergyDensity::Svk(m) => *m,
            EnergyDensity::Dist2 => IsotropicModuli { mu: 1.0, lambda: 0.0 },
        }
    }

    /// Constant `c` in `W(F) ≥ c·dist²(F, SO(3))`. Global for `dist2`; for
    /// `svk` it holds on the neighbourhood of `SO(3)` where the experiments run.
    pub fn nondegeneracy_constant(&self) -> f64 {
        match self {
            EnergyDensity::Svk(m) => 0.5 * m.mu,
            EnergyDensity::Dist2 => 1.0,
        }
    }

    /// True when `det F ≤ 0` must abort an energy evaluation.
    pub fn rejects_inverted(&self) -> bool {
        matches!(self, EnergyDensity::Dist2)
    }

    pub fn density(&self, f: &Mat3) -> Result<f64> {
        if !f.is_finite() {
            return Err(Error::Domain("non-finite deformation gradient".into()));
        }
        Ok(self.density_unchecked(f))
    }

    /// Density without the finiteness check; used in the quadrature hot loops.
    pub fn density_unchecked(&self, f: &Mat3) -> f64 {
        match self {
            EnergyDensity::Svk(m) => {
                let e = green_strain2(f);
                0.25 * m.mu * e.norm_sq() + 0.125 * m.lambda * e.trace().powi(2)
            }
            EnergyDensity::Dist2 => dist2_so3(f),
        }
    }

    /// `∂W/∂F`.
    pub fn density_gradient(&self, f: &Mat3) -> Result<Mat3> {
        if !f.is_finite() {
            return Err(Error::Domain("non-finite deformation gradient".into()));
        }
        match self {
            EnergyDensity::Svk(m) => {
                let e = green_strain2(f);
                let s = e * m.mu + Mat3::IDENTITY * (0.5 * m.lambda * e.trace());
                Ok(*f * s)
            }
            EnergyDensity::Dist2 => {
                let r = polar_decompose(f)?.rotation;
                Ok((*f - r) * 2.0)
            }
        }
    }

    /// `Q₃(F) = D²W(I)[F, F]`.
    pub fn q3(&self, f: &Mat3) -> f64 {
        let m = self.moduli();
        2.0 * m.mu * sym(f).norm_sq() + m.lambda * f.trace().powi(2)
    }

    /// Relaxed planar form `Q₂(F) = min { Q₃(F̃) : F̃_{2×2} = F }`.
    pub fn q2(&self, f: &Mat2) -> f64 {
        let m = self.moduli();
        2.0 * m.mu * f.sym().norm_sq() + m.plane_stress_lambda() * f.trace().powi(2)
    }

    /// The vector `c(F)` realising the minimum in `q2`:
    /// `Q₂(F) = Q₃(F* + sym(c ⊗ e₃))`. Linear in `F`.
    pub fn c_vector(&self, f: &Mat2) -> Vec3 {
        let m = self.moduli();
        [0.0, 0.0, -m.lambda * f.trace() / (2.0 * m.mu + m.lambda)]
    }
}

/// `FᵀF − I`, formed as `G + Gᵀ + GᵀG` with `G = F − I`.
fn green_strain2(f: &Mat3) -> Mat3 {
    let g = *f - Mat3::IDENTITY;
    g + g.transpose() + g.transpose() * g
}

/// The vector `l(F)` with `sym(F − (F_{2×2})*) = sym(l(F) ⊗ e₃)`.
pub fn l_vector(f: &Mat3) -> Vec3 {
    [f[(0, 2)] + f[(2, 0)], f[(1, 2)] + f[(2, 1)], f[(2, 2)]]
}

/// `F* + sym(c ⊗ e₃)`: the 3×3 extension of a planar matrix by a third column.
pub fn extend(f: &Mat2, c: Vec3) -> Mat3 {
    star(f) + sym(&Mat3::outer(c, E3))
}

/// Result of the derivative-free relaxation search.
#[derive(Clone, Copy, Debug)]
pub struct RelaxationMinimum {
    pub value: f64,
    pub argmin: Vec3,
}

/// Relaxes an arbitrary quadratic form `q3` over the extensions `F* + sym(c ⊗ e₃)`
/// by brute force: a coarse grid over `c ∈ [−10, 10]³` followed by compass
/// search refinement. Works for any `Q₃`, not only the isotropic closed form.
pub fn relax_numerically<Q: Fn(&Mat3) -> f64>(q3: Q, f: &Mat2) -> RelaxationMinimum {
    let eval = |c: Vec3| q3(&extend(f, c));
    let n = 21;
    let mut best = [0.0; 3];
    let mut best_val = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c = [
                    -10.0 + 20.0 * i as f64 / (n - 1) as f64,
                    -10.0 + 20.0 * j as f64 / (n - 1) as f64,
                    -10.0 + 20.0 * k as f64 / (n - 1) as f64,
                ];
                let v = eval(c);
                if v < best_val {
                    best_val = v;
                    best = c;
                }
            }
        }
    }
    let mut step = 1.0;
    while step > 1e-11 {
        let mut improved = false;
        for axis in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut c = best;
                c[axis] += sign * step;
                let v = eval(c);
                if v < best_val {
                    best_val = v;
                    best = c;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    RelaxationMinimum {
        value: best_val,
        argmin: best,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::rotation_from_axis_angle;

    fn unit() -> EnergyDensity {
        EnergyDensity::svk(1.0, 1.0).unwrap()
    }

    #[test]
    fn moduli_validation() {
        assert!(IsotropicModuli::new(0.0, 1.0).is_err());
        assert!(IsotropicModuli::new(1.0, -0.1).is_err());
        assert!(IsotropicModuli::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn svk_density_values() {
        let w = unit();
        assert_eq!(w.density(&Mat3::IDENTITY).unwrap(), 0.0);
        let f = Mat3::diag([1.1, 1.0, 1.0]);
        assert!((w.density(&f).unwrap() - 0.0165375).abs() < 1e-15);
        let r = rotation_from_axis_angle([0.2, -1.0, 0.4], 1.3);
        assert!((w.density(&(r * f)).unwrap() - 0.0165375).abs() < 1e-14);
    }

    #[test]
    fn density_rejects_nan() {
        let f = Mat3::diag([1.0, f64::NAN, 1.0]);
        assert!(matches!(unit().density(&f), Err(Error::Domain(_))));
        assert!(matches!(unit().density_gradient(&f), Err(Error::Domain(_))));
    }

    #[test]
    fn gradient_vanishes_on_rotations() {
        let w = unit();
        assert_eq!(w.density_gradient(&Mat3::IDENTITY).unwrap(), Mat3::ZERO);
        let r = rotation_from_axis_angle([1.0, 1.0, 0.0], 0.4);
        assert!(w.density_gradient(&r).unwrap().max_abs() < 1e-15);
        assert!(EnergyDensity::Dist2.density_gradient(&r).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn q3_values() {
        let w = unit();
        assert_eq!(w.q3(&Mat3::outer([1.0, 0.0, 0.0], [1.0, 0.0, 0.0])), 3.0);
        assert_eq!(w.q3(&Mat3::skew([1.0, 2.0, 3.0])), 0.0);
        assert_eq!(w.q3(&Mat3::IDENTITY), 15.0);
    }

    #[test]
    fn q2_and_c_vector_values() {
        let w = unit();
        assert!((w.q2(&Mat2::IDENTITY) - 20.0 / 3.0).abs() < 1e-14);
        assert_eq!(w.q2(&Mat2::ZERO), 0.0);
        assert!((w.q2(&Mat2([[1.0, 0.0], [0.0, 0.0]])) - 8.0 / 3.0).abs() < 1e-14);
        let c = w.c_vector(&Mat2::IDENTITY);
        assert_eq!(c[0], 0.0);
        assert_eq!(c[1], 0.0);
        assert!((c[2] + 2.0 / 3.0).abs() < 1e-15);
        let trace_free = Mat2([[0.7, 0.3], [0.3, -0.7]]);
        assert_eq!(w.c_vector(&trace_free), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn brute_force_relaxation_matches_closed_form() {
        let w = unit();
        for f in [Mat2::IDENTITY, Mat2([[1.0, 0.0], [0.0, 0.0]]), Mat2([[0.3, -1.2], [-1.2, 2.0]])] {
            let m = relax_numerically(|g| w.q3(g), &f);
            assert!((m.value - w.q2(&f)).abs() < 1e-9, "{} vs {}", m.value, w.q2(&f));
            let c = w.c_vector(&f);
            // only the (3,3) component and the sym of (1,3),(2,3) matter; for
            // symmetric F the in-plane components of c are zero
            assert!((m.argmin[2] - c[2]).abs() < 1e-5);
        }
    }

    #[test]
    fn l_vector_examples() {
        let e = |i: usize, j: usize| {
            let mut m = Mat3::ZERO;
            m[(i, j)] = 1.0;
            m
        };
        assert_eq!(l_vector(&e(2, 2)), [0.0, 0.0, 1.0]);
        assert_eq!(l_vector(&e(0, 2)), [1.0, 0.0, 0.0]);
        assert_eq!(l_vector(&star(&Mat2([[1.0, 2.0], [3.0, 4.0]]))), [0.0; 3]);
    }

    #[test]
    fn dist2_density_is_distance() {
        let f = Mat3::diag([2.0, 2.0, 2.0]);
        assert!((EnergyDensity::Dist2.density(&f).unwrap() - 3.0).abs() < 1e-13);
    }
}
