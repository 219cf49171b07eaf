//! The bending limit functional `I_γ(V₃) = (1/24) ∫ Q₂(∇²V₃ + (sym B)_{2×2})`.
//!
//! On a grid the functional is a quadratic form in the nodal values of `V₃`
//! built from second-order finite-difference Hessians and end-corrected
//! trapezoid (Gregory) weights; plain trapezoid weights would leave an
//! `O(dx²)` boundary error that dominates the discrete minimum.
//! Its kernel is exactly the affine functions, which the minimizer removes
//! through the constraints `∫V₃ = ∫∂₁V₃ = ∫∂₂V₃ = 0`.

use crate::error::{Error, Result};
use crate::exec::{dot, pairwise_sum, Execution};
use crate::field::{AnalyticScalar, PlanarMatrixField};
use crate::grid::{gauss_legendre, NodalQuadrature, PlanarGrid};
use crate::material::EnergyDensity;
use crate::prestrain::{PrestrainSpec, Rect};
use crate::scalar::{GridScalar, PlanarDifferences, ScalarField2D};
use crate::tensor::{star, sym, Mat2, Mat3};

/// Matrix `M` with `Q₂(F) = vᵀ M v`, `v = (F₁₁, F₂₂, F₁₂)` for symmetric `F`.
pub fn planar_form_matrix(density: &EnergyDensity) -> [[f64; 3]; 3] {
    let basis = [
        Mat2([[1.0, 0.0], [0.0, 0.0]]),
        Mat2([[0.0, 0.0], [0.0, 1.0]]),
        Mat2([[0.0, 1.0], [1.0, 0.0]]),
    ];
    let mut m = [[0.0; 3]; 3];
    for a in 0..3 {
        m[a][a] = density.q2(&basis[a]);
    }
    for a in 0..3 {
        for b in (a + 1)..3 {
            let v = 0.5 * (density.q2(&(basis[a] + basis[b])) - m[a][a] - m[b][b]);
            m[a][b] = v;
            m[b][a] = v;
        }
    }
    m
}

fn quad3(m: &[[f64; 3]; 3], v: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            s += v[a] * m[a][b] * v[b];
        }
    }
    s
}

fn apply3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// `(sym B)_{2×2}` as `(b₁₁, b₂₂, b₁₂)`.
fn bending_target(bending: &PlanarMatrixField, p: [f64; 2]) -> [f64; 3] {
    let s = sym(&bending.value(p));
    [s[(0, 0)], s[(1, 1)], s[(0, 1)]]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitSolverOptions {
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub direct: bool,
}

impl Default for LimitSolverOptions {
    fn default() -> Self {
        LimitSolverOptions {
            cg_tol: 1e-10,
            cg_max_iter: 200_000,
            direct: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LimitFunctional {
    pub bending: PlanarMatrixField,
    pub density: EnergyDensity,
    pub rect: Rect,
    form: [[f64; 3]; 3],
}

#[derive(Clone, Debug)]
pub struct LimitMinimum {
    pub field: GridScalar,
    pub value: f64,
    pub iterations: usize,
    pub relative_residual: f64,
}

impl LimitFunctional {
    pub fn new(spec: &PrestrainSpec, density: EnergyDensity) -> Self {
        LimitFunctional {
            bending: spec.bending.clone(),
            density,
            rect: spec.omega,
            form: planar_form_matrix(&density),
        }
    }

    pub fn form(&self) -> &[[f64; 3]; 3] {
        &self.form
    }

    /// `(1/24) Q₂(H + (sym B)_{2×2})` with `H = (h₁₁, h₂₂, h₁₂)`.
    pub fn integrand(&self, hess: [f64; 3], p: [f64; 2]) -> f64 {
        let b = bending_target(&self.bending, p);
        quad3(&self.form, [hess[0] + b[0], hess[1] + b[1], hess[2] + b[2]]) / 24.0
    }

    /// Analytic fields: composite 4×4 Gauss rule on the cells of `plane`.
    /// Grid fields: finite-difference Hessians with trapezoid weights.
    pub fn evaluate(&self, v3: &ScalarField2D, plane: &PlanarGrid) -> Result<f64> {
        match v3 {
            ScalarField2D::Analytic(a) => Ok(self.evaluate_analytic(a, plane)),
            ScalarField2D::Grid(g) => {
                let values = ScalarField2D::Grid(g.clone()).values_on(plane)?;
                let ops = PlanarDifferences::new(plane)?;
                Ok(self.evaluate_nodal(&ops, plane, &values))
            }
        }
    }

    pub fn evaluate_analytic(&self, v3: &AnalyticScalar, plane: &PlanarGrid) -> f64 {
        composite_gauss(plane, 4, |p| {
            let h = v3.hessian(p);
            self.integrand([h[0][0], h[1][1], h[0][1]], p)
        })
    }

    fn targets(&self, plane: &PlanarGrid) -> Vec<[f64; 3]> {
        (0..plane.n1)
            .flat_map(|i| (0..plane.n2).map(move |j| (i, j)))
            .map(|(i, j)| bending_target(&self.bending, plane.point(i, j)))
            .collect()
    }

    fn evaluate_nodal(&self, ops: &PlanarDifferences, plane: &PlanarGrid, v: &[f64]) -> f64 {
        let [h11, h22, h12] = ops.hessian(v);
        let b = self.targets(plane);
        let dens: Vec<f64> = (0..plane.len())
            .map(|k| {
                quad3(&self.form, [h11[k] + b[k][0], h22[k] + b[k][1], h12[k] + b[k][2]]) / 24.0
            })
            .collect();
        NodalQuadrature::gregory(plane).integrate(&dens)
    }

    /// Gradient of the discrete functional with respect to the nodal values.
    pub fn discrete_gradient(&self, plane: &PlanarGrid, v: &[f64]) -> Result<Vec<f64>> {
        let ops = PlanarDifferences::new(plane)?;
        let [h11, h22, h12] = ops.hessian(v);
        let b = self.targets(plane);
        Ok(self.weighted_adjoint(&ops, plane, |k| {
            [h11[k] + b[k][0], h22[k] + b[k][1], h12[k] + b[k][2]]
        }))
    }

    /// `(1/12) Hᵀ W M s(k)` for a per-node triple `s`.
    fn weighted_adjoint<F: Fn(usize) -> [f64; 3]>(
        &self,
        ops: &PlanarDifferences,
        plane: &PlanarGrid,
        s: F,
    ) -> Vec<f64> {
        let n = plane.len();
        let quad = NodalQuadrature::gregory(plane);
        let (mut a, mut b, mut c) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..plane.n1 {
            for j in 0..plane.n2 {
                let k = plane.index(i, j);
                let w = quad.weight(i, j) / 12.0;
                let m = apply3(&self.form, s(k));
                a[k] = w * m[0];
                b[k] = w * m[1];
                c[k] = w * m[2];
            }
        }
        ops.hessian_transpose(&a, &b, &c)
    }

    /// Minimizes the discrete functional on `plane` subject to the affine constraints.
    pub fn minimize(&self, plane: &PlanarGrid, opts: &LimitSolverOptions) -> Result<LimitMinimum> {
        if plane.n1 < 5 || plane.n2 < 5 {
            return Err(Error::Config(format!(
                "limit minimization needs at least a 5x5 grid (got {}x{})",
                plane.n1, plane.n2
            )));
        }
        let ops = PlanarDifferences::new(plane)?;
        let targets = self.targets(plane);
        let rhs: Vec<f64> = self
            .weighted_adjoint(&ops, plane, |k| targets[k])
            .into_iter()
            .map(|v| -v)
            .collect();
        let (mut v, iterations, rel) = if opts.direct {
            (self.solve_direct(&ops, plane, &rhs)?, 0, 0.0)
        } else {
            self.solve_cg(&ops, plane, &rhs, opts)?
        };
        enforce_affine_constraints(&mut v, plane, &ops);
        let value = self.evaluate_nodal(&ops, plane, &v);
        let relative_residual = if opts.direct {
            let kv = self.apply_operator(&ops, plane, &v);
            let r: Vec<f64> = rhs.iter().zip(&kv).map(|(b, k)| b - k).collect();
            let nb = dot(&rhs, &rhs).sqrt();
            if nb > 0.0 { dot(&r, &r).sqrt() / nb } else { 0.0 }
        } else {
            rel
        };
        Ok(LimitMinimum {
            field: GridScalar::new(plane, v)?,
            value,
            iterations,
            relative_residual,
        })
    }

    fn apply_operator(&self, ops: &PlanarDifferences, plane: &PlanarGrid, v: &[f64]) -> Vec<f64> {
        let [h11, h22, h12] = ops.hessian(v);
        self.weighted_adjoint(ops, plane, |k| [h11[k], h22[k], h12[k]])
    }

    /// Sparse rows of the discrete Hessian at node `p`: `(q, [∂₁₁, ∂₂₂, ∂₁₂])`.
    fn hessian_row(ops: &PlanarDifferences, i: usize, j: usize) -> Vec<(usize, [f64; 3])> {
        let n2 = ops.n2;
        let mut row: Vec<(usize, [f64; 3])> = Vec::with_capacity(17);
        let mut add = |q: usize, slot: usize, c: f64| {
            if let Some(e) = row.iter_mut().find(|e| e.0 == q) {
                e.1[slot] += c;
            } else {
                let mut v = [0.0; 3];
                v[slot] = c;
                row.push((q, v));
            }
        };
        for &(ii, c) in &ops.d11.rows[i] {
            add(ii * n2 + j, 0, c);
        }
        for &(jj, c) in &ops.d22.rows[j] {
            add(i * n2 + jj, 1, c);
        }
        for &(ii, c1) in &ops.d1.rows[i] {
            for &(jj, c2) in &ops.d2.rows[j] {
                add(ii * n2 + jj, 2, c1 * c2);
            }
        }
        row
    }

    fn operator_diagonal(&self, ops: &PlanarDifferences, plane: &PlanarGrid) -> Vec<f64> {
        let mut diag = vec![0.0; plane.len()];
        let quad = NodalQuadrature::gregory(plane);
        for i in 0..plane.n1 {
            for j in 0..plane.n2 {
                let w = quad.weight(i, j) / 12.0;
                for (q, h) in Self::hessian_row(ops, i, j) {
                    diag[q] += w * quad3(&self.form, h);
                }
            }
        }
        diag
    }

    fn solve_cg(
        &self,
        ops: &PlanarDifferences,
        plane: &PlanarGrid,
        rhs: &[f64],
        opts: &LimitSolverOptions,
    ) -> Result<(Vec<f64>, usize, f64)> {
        let n = plane.len();
        let null = NullspaceProjector::new(plane);
        let mut b = rhs.to_vec();
        null.project(&mut b);
        let nb = dot(&b, &b).sqrt();
        let mut x = vec![0.0; n];
        if nb == 0.0 {
            return Ok((x, 0, 0.0));
        }
        let inv_diag: Vec<f64> = self
            .operator_diagonal(ops, plane)
            .into_iter()
            .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        let precondition = |r: &[f64]| {
            let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
            null.project(&mut z);
            z
        };
        let mut r = b.clone();
        let mut z = precondition(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for it in 1..=opts.cg_max_iter {
            let kp = self.apply_operator(ops, plane, &p);
            let pkp = dot(&p, &kp);
            if pkp <= 0.0 {
                return Err(Error::NoConvergence(format!(
                    "conjugate gradient lost positive definiteness at iteration {it}"
                )));
            }
            let alpha = rz / pkp;
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
            r.iter_mut().zip(&kp).for_each(|(ri, ki)| *ri -= alpha * ki);
            let rel = dot(&r, &r).sqrt() / nb;
            if rel <= opts.cg_tol {
                return Ok((x, it, rel));
            }
            z = precondition(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        }
        let rel = dot(&r, &r).sqrt() / nb;
        Err(Error::NoConvergence(format!(
            "conjugate gradient reached {} iterations with relative residual {rel:e}",
            opts.cg_max_iter
        )))
    }

    /// Banded Cholesky on the operator with three nodes pinned to zero, which
    /// removes the affine kernel; the constraints are restored afterwards.
    fn solve_direct(&self, ops: &PlanarDifferences, plane: &PlanarGrid, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = plane.len();
        let rows: Vec<_> = (0..plane.n1)
            .flat_map(|i| (0..plane.n2).map(move |j| (i, j)))
            .map(|(i, j)| Self::hessian_row(ops, i, j))
            .collect();
        let bw = rows
            .iter()
            .map(|r| {
                let (lo, hi) = r.iter().fold((usize::MAX, 0), |(lo, hi), e| (lo.min(e.0), hi.max(e.0)));
                hi - lo
            })
            .max()
            .unwrap_or(0);
        let mut band = BandMatrix::new(n, bw);
        let quad = NodalQuadrature::gregory(plane);
        for i in 0..plane.n1 {
            for j in 0..plane.n2 {
                let w = quad.weight(i, j) / 12.0;
                let row = &rows[plane.index(i, j)];
                for &(q, hq) in row {
                    let mq = apply3(&self.form, hq);
                    for &(r, hr) in row {
                        if r <= q {
                            band.add(q, r, w * (mq[0] * hr[0] + mq[1] * hr[1] + mq[2] * hr[2]));
                        }
                    }
                }
            }
        }
        let pinned = [
            plane.index(0, 0),
            plane.index(plane.n1 - 1, 0),
            plane.index(0, plane.n2 - 1),
        ];
        let mut b = rhs.to_vec();
        for &p in &pinned {
            band.pin(p);
            b[p] = 0.0;
        }
        band.cholesky()?;
        Ok(band.solve(&b))
    }
}

/// Lower-triangular band storage: `data[i][d]` holds entry `(i, i − d)`.
struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<Vec<f64>>,
}

impl BandMatrix {
    fn new(n: usize, bw: usize) -> Self {
        BandMatrix {
            n,
            bw,
            data: vec![vec![0.0; bw + 1]; n],
        }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i && i - j <= self.bw);
        self.data[i][i - j] += v;
    }

    fn pin(&mut self, p: usize) {
        for d in 1..=self.bw.min(p) {
            self.data[p][d] = 0.0;
        }
        for i in (p + 1)..self.n.min(p + self.bw + 1) {
            self.data[i][i - p] = 0.0;
        }
        self.data[p][0] = 1.0;
    }

    fn cholesky(&mut self) -> Result<()> {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let mut s = self.data[i][i - j];
                let klo = lo.max(j.saturating_sub(self.bw));
                for k in klo..j {
                    s -= self.data[i][i - k] * self.data[j][j - k];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(Error::Singular(format!(
                            "banded Cholesky: non-positive pivot at row {i}"
                        )));
                    }
                    self.data[i][0] = s.sqrt();
                } else {
                    self.data[i][i - j] = s / self.data[j][0];
                }
            }
        }
        Ok(())
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut s = y[i];
            for k in lo..i {
                s -= self.data[i][i - k] * y[k];
            }
            y[i] = s / self.data[i][0];
        }
        for i in (0..self.n).rev() {
            let mut s = y[i];
            for k in (i + 1)..self.n.min(i + self.bw + 1) {
                s -= self.data[k][k - i] * y[k];
            }
            y[i] = s / self.data[i][0];
        }
        y
    }
}

/// Euclidean projection onto the orthogonal complement of nodal affine functions.
struct NullspaceProjector {
    basis: Vec<Vec<f64>>,
}

impl NullspaceProjector {
    fn new(plane: &PlanarGrid) -> Self {
        let mut raw = vec![Vec::with_capacity(plane.len()); 3];
        for i in 0..plane.n1 {
            for j in 0..plane.n2 {
                let [x, y] = plane.point(i, j);
                raw[0].push(1.0);
                raw[1].push(x);
                raw[2].push(y);
            }
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(3);
        for mut v in raw {
            for q in &basis {
                let c = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
            let n = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|a| *a /= n);
            basis.push(v);
        }
        NullspaceProjector { basis }
    }

    fn project(&self, v: &mut [f64]) {
        for q in &self.basis {
            let c = dot(v, q);
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
    }
}

/// Adds the affine function that makes `∫V = ∫∂₁V = ∫∂₂V = 0`.
pub fn enforce_affine_constraints(v: &mut [f64], plane: &PlanarGrid, ops: &PlanarDifferences) {
    let quad = NodalQuadrature::gregory(plane);
    let area = plane.rect.area();
    let [g1, g2] = ops.gradient(v);
    let b1 = quad.integrate(&g1) / area;
    let b2 = quad.integrate(&g2) / area;
    let points: Vec<[f64; 2]> = (0..plane.n1)
        .flat_map(|i| (0..plane.n2).map(move |j| (i, j)))
        .map(|(i, j)| plane.point(i, j))
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
    let a = (quad.integrate(v) - b1 * quad.integrate(&xs) - b2 * quad.integrate(&ys)) / area;
    for k in 0..v.len() {
        v[k] -= a + b1 * xs[k] + b2 * ys[k];
    }
}

/// The three affine constraint integrals `(∫V, ∫∂₁V, ∫∂₂V)`.
pub fn affine_constraints(v: &[f64], plane: &PlanarGrid) -> Result<[f64; 3]> {
    let ops = PlanarDifferences::new(plane)?;
    let quad = NodalQuadrature::gregory(plane);
    let [g1, g2] = ops.gradient(v);
    Ok([quad.integrate(v), quad.integrate(&g1), quad.integrate(&g2)])
}

/// Composite tensor Gauss rule with `q` points per direction on each grid cell.
pub fn composite_gauss<F: Fn([f64; 2]) -> f64 + Sync + Send>(plane: &PlanarGrid, q: usize, f: F) -> f64 {
    let (nodes, weights) = gauss_legendre(q);
    let rows = Execution::default().map(plane.n1 - 1, |i| {
        let (x0, x1) = (plane.x1[i], plane.x1[i + 1]);
        let mut s = 0.0;
        for j in 0..plane.n2 - 1 {
            let (y0, y1) = (plane.x2[j], plane.x2[j + 1]);
            let jac = 0.25 * (x1 - x0) * (y1 - y0);
            for (a, wa) in nodes.iter().zip(&weights) {
                let x = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * a;
                for (b, wb) in nodes.iter().zip(&weights) {
                    let y = 0.5 * (y0 + y1) + 0.5 * (y1 - y0) * b;
                    s += jac * wa * wb * f([x, y]);
                }
            }
        }
        s
    });
    pairwise_sum(&rows)
}

/// The two leading integrals of the formal thickness expansion, without
/// their `h^{2γ}/8` and `h^{γ+2}/24` prefactors:
/// stretching `∫ Q₃(−2 sym S + (∇V₃ ⊗ ∇V₃)*)` and bending `∫ Q₃(−sym B − (∇²V₃)*)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoTermExpansion {
    pub stretching: f64,
    pub bending: f64,
}

impl TwoTermExpansion {
    /// `(h^{2γ}/8)·stretching` and `(h^{γ+2}/24)·bending` at thickness `h`.
    pub fn scaled(&self, gamma: f64, h: f64) -> (f64, f64) {
        (
            h.powf(2.0 * gamma) / 8.0 * self.stretching,
            h.powf(gamma + 2.0) / 24.0 * self.bending,
        )
    }

    pub fn bending_dominates(&self, gamma: f64, h: f64) -> bool {
        let (s, b) = self.scaled(gamma, h);
        b >= s
    }
}

pub fn formal_two_term_expansion(
    v3: &AnalyticScalar,
    spec: &PrestrainSpec,
    density: &EnergyDensity,
    plane: &PlanarGrid,
) -> TwoTermExpansion {
    let stretching = composite_gauss(plane, 4, |p| {
        let g = v3.gradient(p);
        let gg = Mat2([[g[0] * g[0], g[0] * g[1]], [g[1] * g[0], g[1] * g[1]]]);
        density.q3(&(sym(&spec.stretching.value(p)) * -2.0 + star(&gg)))
    });
    let bending = composite_gauss(plane, 4, |p| {
        let h = v3.hessian(p);
        let m: Mat3 = -sym(&spec.bending.value(p)) - star(&Mat2(h));
        density.q3(&m)
    });
    TwoTermExpansion { stretching, bending }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit() -> EnergyDensity {
        EnergyDensity::svk(1.0, 1.0).unwrap()
    }

    #[test]
    fn planar_form_matches_q2() {
        let w = EnergyDensity::svk(1.7, 0.6).unwrap();
        let m = planar_form_matrix(&w);
        let f = Mat2([[0.3, -0.8], [-0.8, 1.4]]);
        assert!((quad3(&m, [0.3, 1.4, -0.8]) - w.q2(&f)).abs() < 1e-13);
    }

    #[test]
    fn zero_field_zero_bending() {
        let spec = PrestrainSpec::flat(3.0, Rect::unit_square()).unwrap();
        let fnl = LimitFunctional::new(&spec, unit());
        let plane = PlanarGrid::new(spec.omega, 9, 9).unwrap();
        assert_eq!(fnl.evaluate(&ScalarField2D::zero(), &plane).unwrap(), 0.0);
        let min = fnl.minimize(&plane, &LimitSolverOptions::default()).unwrap();
        assert_eq!(min.value, 0.0);
        assert!(min.field.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_bending_value() {
        let spec = PrestrainSpec::new(
            PlanarMatrixField::zero(),
            PlanarMatrixField::constant(Mat3::diag([1.0, 1.0, 0.0])),
            3.0,
            Rect::unit_square(),
        )
        .unwrap();
        let fnl = LimitFunctional::new(&spec, unit());
        let plane = PlanarGrid::new(spec.omega, 9, 9).unwrap();
        let v = fnl.evaluate(&ScalarField2D::zero(), &plane).unwrap();
        assert!((v - 5.0 / 18.0).abs() < 1e-14);
        let grid_zero = ScalarField2D::Grid(GridScalar::sample(&plane, &AnalyticScalar::zero()));
        assert!((fnl.evaluate(&grid_zero, &plane).unwrap() - 5.0 / 18.0).abs() < 1e-14);
    }

    #[test]
    fn sine_product_value() {
        let spec = PrestrainSpec::flat(3.0, Rect::unit_square()).unwrap();
        let fnl = LimitFunctional::new(&spec, unit());
        let plane = PlanarGrid::new(spec.omega, 17, 17).unwrap();
        let v = AnalyticScalar::sine_product(1.0, [PI, PI], [0.0, 0.0]);
        let val = fnl.evaluate(&v.into(), &plane).unwrap();
        assert!((val - PI.powi(4) / 9.0).abs() < 1e-7, "{val}");
    }

    #[test]
    fn direct_and_cg_agree() {
        let spec = PrestrainSpec::new(
            PlanarMatrixField::zero(),
            PlanarMatrixField::polynomial(&[
                (Mat3::diag([1.0, 0.0, 0.0]), [0, 2]),
                (Mat3::diag([0.0, 1.0, 0.0]), [2, 0]),
            ])
            .unwrap(),
            3.0,
            Rect::unit_square(),
        )
        .unwrap();
        let fnl = LimitFunctional::new(&spec, unit());
        let plane = PlanarGrid::new(spec.omega, 13, 11).unwrap();
        let cg = fnl.minimize(&plane, &LimitSolverOptions::default()).unwrap();
        let direct = fnl
            .minimize(&plane, &LimitSolverOptions { direct: true, ..Default::default() })
            .unwrap();
        assert!((cg.value - direct.value).abs() < 1e-10 * cg.value);
        let diff = cg
            .field
            .values
            .iter()
            .zip(&direct.field.values)
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(diff < 1e-7, "{diff}");
        let c = affine_constraints(&cg.field.values, &plane).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn grid_too_small() {
        let spec = PrestrainSpec::flat(3.0, Rect::unit_square()).unwrap();
        let fnl = LimitFunctional::new(&spec, unit());
        let plane = PlanarGrid::new(spec.omega, 4, 9).unwrap();
        assert!(matches!(
            fnl.minimize(&plane, &LimitSolverOptions::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn cg_iteration_cap_reports_non_convergence() {
        let spec = PrestrainSpec::new(
            PlanarMatrixField::zero(),
            PlanarMatrixField::polynomial(&[(Mat3::diag([1.0, 0.0, 0.0]), [0, 2])]).unwrap(),
            3.0,
            Rect::unit_square(),
        )
        .unwrap();
        let fnl = LimitFunctional::new(&spec, unit());
        let plane = PlanarGrid::new(spec.omega, 17, 17).unwrap();
        let opts = LimitSolverOptions { cg_max_iter: 2, ..Default::default() };
        assert!(matches!(fnl.minimize(&plane, &opts), Err(Error::NoConvergence(_))));
    }

    #[test]
    fn expansion_examples() {
        let spec = PrestrainSpec::flat(3.0, Rect::unit_square()).unwrap();
        let plane = PlanarGrid::new(spec.omega, 9, 9).unwrap();
        let e = formal_two_term_expansion(&AnalyticScalar::zero(), &spec, &unit(), &plane);
        assert_eq!(e.stretching, 0.0);
        assert_eq!(e.bending, 0.0);
    }
}
