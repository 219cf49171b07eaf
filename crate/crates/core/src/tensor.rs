//! Fixed-size 2×2 / 3×3 linear algebra and rotation-group helpers.
//!
//! Everything here works on plain `[[f64; N]; N]` storage wrapped in small
//! `Copy` newtypes. The 3×3 singular value decomposition goes through a
//! cyclic Jacobi eigen-solver on `FᵀF`, which is accurate for the
//! near-rotation gradients this crate deals with.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Mat3(pub [[f64; 3]; 3]);

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn new(rows: [[f64; 3]; 3]) -> Self {
        Mat3(rows)
    }

    pub fn diag(d: Vec3) -> Self {
        Mat3([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    pub fn from_columns(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Mat3([
            [c0[0], c1[0], c2[0]],
            [c0[1], c1[1], c2[1]],
            [c0[2], c1[2], c2[2]],
        ])
    }

    /// Outer product `a ⊗ b`.
    pub fn outer(a: Vec3, b: Vec3) -> Self {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = a[i] * b[j];
            }
        }
        m
    }

    /// Skew-symmetric matrix with `skew(w) v = w × v`.
    pub fn skew(w: Vec3) -> Self {
        Mat3([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])
    }

    pub fn column(&self, j: usize) -> Vec3 {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    pub fn set_column(&mut self, j: usize, c: Vec3) {
        for i in 0..3 {
            self.0[i][j] = c[i];
        }
    }

    pub fn transpose(&self) -> Self {
        let a = &self.0;
        Mat3([
            [a[0][0], a[1][0], a[2][0]],
            [a[0][1], a[1][1], a[2][1]],
            [a[0][2], a[1][2], a[2][2]],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        let a = &self.0;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    /// Frobenius inner product `A : B`.
    pub fn dot(&self, other: &Mat3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.0[i][j] * other.0[i][j];
            }
        }
        s
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let a = &self.0;
        [
            a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
            a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
            a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
        ]
    }

    /// Adjugate transpose (cofactor matrix).
    pub fn cofactor(&self) -> Mat3 {
        let a = &self.0;
        Mat3([
            [
                a[1][1] * a[2][2] - a[1][2] * a[2][1],
                a[1][2] * a[2][0] - a[1][0] * a[2][2],
                a[1][0] * a[2][1] - a[1][1] * a[2][0],
            ],
            [
                a[0][2] * a[2][1] - a[0][1] * a[2][2],
                a[0][0] * a[2][2] - a[0][2] * a[2][0],
                a[0][1] * a[2][0] - a[0][0] * a[2][1],
            ],
            [
                a[0][1] * a[1][2] - a[0][2] * a[1][1],
                a[0][2] * a[1][0] - a[0][0] * a[1][2],
                a[0][0] * a[1][1] - a[0][1] * a[1][0],
            ],
        ])
    }

    /// Inverse by cofactors; `None` when the determinant is not safely nonzero.
    pub fn inverse(&self) -> Option<Mat3> {
        let d = self.det();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        if !d.is_finite() || d.abs() <= 1e-300 || d.abs() <= 1e-15 * scale.powi(3) {
            return None;
        }
        Some(self.cofactor().transpose() * (1.0 / d))
    }

    /// Principal 2×2 minor `F_{2×2}`.
    pub fn minor2(&self) -> Mat2 {
        Mat2([[self.0[0][0], self.0[0][1]], [self.0[1][0], self.0[1][1]]])
    }
}

/// Symmetric part `(F + Fᵀ)/2`.
pub fn sym(f: &Mat3) -> Mat3 {
    let mut s = Mat3::ZERO;
    for i in 0..3 {
        s.0[i][i] = f.0[i][i];
        for j in (i + 1)..3 {
            let v = 0.5 * (f.0[i][j] + f.0[j][i]);
            s.0[i][j] = v;
            s.0[j][i] = v;
        }
    }
    s
}

/// Zero-padded embedding `F*` of a 2×2 matrix, so that `F*_{2×2} = F`.
pub fn star(f: &Mat2) -> Mat3 {
    Mat3([
        [f.0[0][0], f.0[0][1], 0.0],
        [f.0[1][0], f.0[1][1], 0.0],
        [0.0, 0.0, 0.0],
    ])
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0; 2]; 2]);
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(rows: [[f64; 2]; 2]) -> Self {
        Mat2(rows)
    }

    pub fn transpose(&self) -> Self {
        Mat2([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    pub fn sym(&self) -> Self {
        let off = 0.5 * (self.0[0][1] + self.0[1][0]);
        Mat2([[self.0[0][0], off], [off, self.0[1][1]]])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn dot(&self, other: &Mat2) -> f64 {
        self.0[0][0] * other.0[0][0]
            + self.0[0][1] * other.0[0][1]
            + self.0[1][0] * other.0[1][0]
            + self.0[1][1] * other.0[1][1]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn star(&self) -> Mat3 {
        star(self)
    }
}

macro_rules! impl_elementwise {
    ($t:ident, $n:expr) => {
        impl Add for $t {
            type Output = $t;
            fn add(mut self, rhs: $t) -> $t {
                for i in 0..$n {
                    for j in 0..$n {
                        self.0[i][j] += rhs.0[i][j];
                    }
                }
                self
            }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(mut self, rhs: $t) -> $t {
                for i in 0..$n {
                    for j in 0..$n {
                        self.0[i][j] -= rhs.0[i][j];
                    }
                }
                self
            }
        }
        impl AddAssign for $t {
            fn add_assign(&mut self, rhs: $t) {
                *self = *self + rhs;
            }
        }
        impl SubAssign for $t {
            fn sub_assign(&mut self, rhs: $t) {
                *self = *self - rhs;
            }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                self * -1.0
            }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(mut self, s: f64) -> $t {
                for i in 0..$n {
                    for j in 0..$n {
                        self.0[i][j] *= s;
                    }
                }
                self
            }
        }
        impl Mul<$t> for f64 {
            type Output = $t;
            fn mul(self, m: $t) -> $t {
                m * self
            }
        }
        impl Index<(usize, usize)> for $t {
            type Output = f64;
            fn index(&self, (i, j): (usize, usize)) -> &f64 {
                &self.0[i][j]
            }
        }
        impl IndexMut<(usize, usize)> for $t {
            fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
                &mut self.0[i][j]
            }
        }
        impl Mul for $t {
            type Output = $t;
            fn mul(self, rhs: $t) -> $t {
                let mut out = $t::ZERO;
                for i in 0..$n {
                    for j in 0..$n {
                        let mut s = 0.0;
                        for k in 0..$n {
                            s += self.0[i][k] * rhs.0[k][j];
                        }
                        out.0[i][j] = s;
                    }
                }
                out
            }
        }
    };
}

impl_elementwise!(Mat3, 3);
impl_elementwise!(Mat2, 2);

pub fn vec_add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn vec_sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn vec_scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn vec_dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Eigen-decomposition of a symmetric 3×3 matrix by cyclic Jacobi sweeps.
///
/// Returns eigenvalues in ascending order and the matrix whose columns are the
/// corresponding orthonormal eigenvectors.
pub fn sym_eigen(a: &Mat3) -> (Vec3, Mat3) {
    let mut m = sym(a);
    let mut v = Mat3::IDENTITY;
    let scale = m.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..50 {
        let off = m.0[0][1].powi(2) + m.0[0][2].powi(2) + m.0[1][2].powi(2);
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = m.0[p][q];
            if apq.abs() <= f64::MIN_POSITIVE {
                continue;
            }
            let theta = (m.0[q][q] - m.0[p][p]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // m <- Jᵀ m J with the Givens rotation J acting on (p, q)
            for k in 0..3 {
                let mkp = m.0[k][p];
                let mkq = m.0[k][q];
                m.0[k][p] = c * mkp - s * mkq;
                m.0[k][q] = s * mkp + c * mkq;
            }
            for k in 0..3 {
                let mpk = m.0[p][k];
                let mqk = m.0[q][k];
                m.0[p][k] = c * mpk - s * mqk;
                m.0[q][k] = s * mpk + c * mqk;
            }
            for k in 0..3 {
                let vkp = v.0[k][p];
                let vkq = v.0[k][q];
                v.0[k][p] = c * vkp - s * vkq;
                v.0[k][q] = s * vkp + c * vkq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m.0[i][i].total_cmp(&m.0[j][j]));
    let vals = [m.0[order[0]][order[0]], m.0[order[1]][order[1]], m.0[order[2]][order[2]]];
    let vecs = Mat3::from_columns(v.column(order[0]), v.column(order[1]), v.column(order[2]));
    (vals, vecs)
}

/// Singular values of `F` in ascending order, from the eigenvalues of `FᵀF`.
pub fn singular_values(f: &Mat3) -> Vec3 {
    let (vals, _) = sym_eigen(&(f.transpose() * *f));
    [vals[0].max(0.0).sqrt(), vals[1].max(0.0).sqrt(), vals[2].max(0.0).sqrt()]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarFactors {
    pub rotation: Mat3,
    pub stretch: Mat3,
}

/// Right polar decomposition `F = R U` with `R ∈ SO(3)` and `U` symmetric
/// positive definite.
pub fn polar_decompose(f: &Mat3) -> Result<PolarFactors> {
    if !f.is_finite() {
        return Err(Error::Domain("non-finite matrix in polar decomposition".into()));
    }
    let det = f.det();
    let (vals, v) = sym_eigen(&(f.transpose() * *f));
    let sigma = [vals[0].max(0.0).sqrt(), vals[1].max(0.0).sqrt(), vals[2].max(0.0).sqrt()];
    let tol = 1e-12 * f.norm();
    if det <= 0.0 || sigma[0] <= tol {
        return Err(Error::Singular(format!(
            "polar decomposition needs det F > 0 (det = {det:e}, smallest singular value = {:e})",
            sigma[0]
        )));
    }
    let stretch = v * Mat3::diag(sigma) * v.transpose();
    let inv_stretch = v * Mat3::diag([1.0 / sigma[0], 1.0 / sigma[1], 1.0 / sigma[2]]) * v.transpose();
    let rotation = *f * inv_stretch;
    Ok(PolarFactors {
        rotation: reorthonormalize(&rotation),
        stretch: sym(&stretch),
    })
}

/// One Newton step towards the orthogonal factor; removes the rounding drift
/// left by the eigen-solver.
fn reorthonormalize(r: &Mat3) -> Mat3 {
    match r.inverse() {
        Some(inv) => (*r + inv.transpose()) * 0.5,
        None => *r,
    }
}

/// Squared Frobenius distance from `F` to `SO(3)`.
pub fn dist2_so3(f: &Mat3) -> f64 {
    let s = singular_values(f);
    if f.det() >= 0.0 {
        s.iter().map(|x| (x - 1.0).powi(2)).sum()
    } else {
        (s[0] + 1.0).powi(2) + (s[1] - 1.0).powi(2) + (s[2] - 1.0).powi(2)
    }
}

/// Rotation about a unit axis by `angle` (Rodrigues formula).
pub fn rotation_from_axis_angle(axis: Vec3, angle: f64) -> Mat3 {
    let n = vec_dot(axis, axis).sqrt();
    if n == 0.0 {
        return Mat3::IDENTITY;
    }
    let k = Mat3::skew(vec_scale(axis, 1.0 / n));
    Mat3::IDENTITY + k * angle.sin() + (k * k) * (1.0 - angle.cos())
}

/// Rotation from a unit quaternion `(w, x, y, z)`; the input is normalized first.
pub fn rotation_from_quaternion(q: [f64; 4]) -> Mat3 {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
    Mat3([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])
}

/// Rotation angle of `R ∈ SO(3)` in radians.
pub fn rotation_angle(r: &Mat3) -> f64 {
    ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0).acos()
}
