use super::{Deformation3D, PlateEnergy};
use crate::error::Result;
use crate::grid::{PlanarGrid, PlateGrid};
use crate::scalar::GridScalar;
use crate::tensor::{polar_decompose, rotation_angle, Mat3, Vec3};

/// `V^h(x') = h^{−γ/2} (∫ y(x', t) dt − (x', 0))` on the in-plane nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledDisplacement {
    pub plane: PlanarGrid,
    pub values: Vec<Vec3>,
}

impl ScaledDisplacement {
    pub fn component(&self, c: usize) -> GridScalar {
        GridScalar {
            rect: self.plane.rect,
            n1: self.plane.n1,
            n2: self.plane.n2,
            values: self.values.iter().map(|v| v[c]).collect(),
        }
    }
}

pub fn scaled_displacement(u: &Deformation3D, grid: &PlateGrid, gamma: f64, h: f64) -> Result<ScaledDisplacement> {
    u.check(grid)?;
    let scale = h.powf(-0.5 * gamma);
    let mut values = Vec::with_capacity(grid.plane.len());
    for i in 0..grid.n1() {
        for j in 0..grid.n2() {
            let p = grid.plane.point(i, j);
            let mut avg = [0.0; 3];
            for k in 0..grid.m {
                let v = u.values[grid.index(i, j, k)];
                for c in 0..3 {
                    avg[c] += grid.wt[k] * v[c];
                }
            }
            values.push([
                (avg[0] - p[0]) * scale,
                (avg[1] - p[1]) * scale,
                avg[2] * scale,
            ]);
        }
    }
    Ok(ScaledDisplacement {
        plane: grid.plane.clone(),
        values,
    })
}

/// Weighted least-squares affine fit `a + b₁x₁ + b₂x₂`, subtracted from `v`.
pub fn affine_residual(v: &[f64], plane: &PlanarGrid) -> Vec<f64> {
    // normal equations of the 3-parameter fit
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for i in 0..plane.n1 {
        for j in 0..plane.n2 {
            let w = plane.weight(i, j);
            let [x, y] = plane.point(i, j);
            let basis = [1.0, x, y];
            for a in 0..3 {
                rhs[a] += w * basis[a] * v[plane.index(i, j)];
                for b in 0..3 {
                    m[a][b] += w * basis[a] * basis[b];
                }
            }
        }
    }
    let coef = Mat3(m)
        .inverse()
        .map(|inv| inv.mul_vec(rhs))
        .unwrap_or([0.0; 3]);
    (0..plane.n1)
        .flat_map(|i| (0..plane.n2).map(move |j| (i, j)))
        .map(|(i, j)| {
            let [x, y] = plane.point(i, j);
            v[plane.index(i, j)] - coef[0] - coef[1] * x - coef[2] * y
        })
        .collect()
}

/// `‖a − b‖ / ‖b‖` in discrete L² after removing the best affine fit from both.
pub fn relative_l2_affine_aligned(a: &[f64], b: &[f64], plane: &PlanarGrid) -> f64 {
    let ra = affine_residual(a, plane);
    let rb = affine_residual(b, plane);
    let diff: Vec<f64> = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).collect();
    let base: Vec<f64> = rb.iter().map(|y| y * y).collect();
    (plane.integrate(&diff) / plane.integrate(&base)).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationDiagnostic {
    /// Polar rotation of the thickness-averaged elastic tensor, per in-plane node.
    pub rotations: Vec<Mat3>,
    /// `(1/h) ∫_{Ω^h} |∇u − R A^h|²`.
    pub misfit: f64,
    /// Largest thickness-integrated misfit density over in-plane nodes.
    pub max_local_misfit: f64,
    /// Largest rotation angle (radians).
    pub max_angle: f64,
}

pub fn rotation_field_diagnostic(energy: &PlateEnergy<'_>, u: &Deformation3D) -> Result<RotationDiagnostic> {
    let grid = energy.grid;
    let tensors = energy.elastic_tensors(u)?;
    let mut rotations = Vec::with_capacity(grid.plane.len());
    let mut rows = Vec::with_capacity(grid.n1());
    let mut max_local: f64 = 0.0;
    let mut max_angle: f64 = 0.0;
    for i in 0..grid.n1() {
        let mut row = 0.0;
        for j in 0..grid.n2() {
            let mut avg = Mat3::ZERO;
            for k in 0..grid.m {
                avg += tensors[grid.index(i, j, k)] * grid.wt[k];
            }
            let r = polar_decompose(&avg)?.rotation;
            let mut local = 0.0;
            for k in 0..grid.m {
                let node = grid.index(i, j, k);
                let (a, _) = energy.growth(node);
                let grad_u = energy.deformation_gradient(&u.values, i, j, k);
                local += grid.wt[k] * (grad_u - r * *a).norm_sq();
            }
            row += grid.plane.weight(i, j) * local;
            max_local = max_local.max(local);
            max_angle = max_angle.max(rotation_angle(&r));
            rotations.push(r);
        }
        rows.push(row);
    }
    Ok(RotationDiagnostic {
        rotations,
        misfit: crate::exec::pairwise_sum(&rows),
        max_local_misfit: max_local,
        max_angle,
    })
}
