//! Out-of-plane displacement fields: analytic or sampled on a planar grid.

use crate::error::{Error, Result};
use crate::field::AnalyticScalar;
use crate::grid::{PlanarGrid, Stencil1d};
use crate::prestrain::Rect;

#[derive(Clone, Debug, PartialEq)]
pub struct GridScalar {
    pub rect: Rect,
    pub n1: usize,
    pub n2: usize,
    /// Node values, index `i * n2 + j`.
    pub values: Vec<f64>,
}

impl GridScalar {
    pub fn new(plane: &PlanarGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != plane.len() {
            return Err(Error::Domain(format!(
                "grid field has {} values for a {}x{} grid",
                values.len(),
                plane.n1,
                plane.n2
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("grid field has non-finite values".into()));
        }
        Ok(GridScalar {
            rect: plane.rect,
            n1: plane.n1,
            n2: plane.n2,
            values,
        })
    }

    pub fn sample(plane: &PlanarGrid, f: &AnalyticScalar) -> Self {
        let mut values = Vec::with_capacity(plane.len());
        for i in 0..plane.n1 {
            for j in 0..plane.n2 {
                values.push(f.value(plane.point(i, j)));
            }
        }
        GridScalar {
            rect: plane.rect,
            n1: plane.n1,
            n2: plane.n2,
            values,
        }
    }

    pub fn plane(&self) -> Result<PlanarGrid> {
        PlanarGrid::new(self.rect, self.n1, self.n2)
    }

    pub fn compatible(&self, plane: &PlanarGrid) -> bool {
        self.n1 == plane.n1 && self.n2 == plane.n2 && self.rect == plane.rect
    }
}

/// Finite-difference derivative operators on a planar grid, second order
/// throughout (one-sided at the boundary).
#[derive(Clone, Debug)]
pub struct PlanarDifferences {
    pub n1: usize,
    pub n2: usize,
    pub d1: Stencil1d,
    pub d2: Stencil1d,
    pub d11: Stencil1d,
    pub d22: Stencil1d,
}

impl PlanarDifferences {
    pub fn new(plane: &PlanarGrid) -> Result<Self> {
        if plane.n1 < 4 || plane.n2 < 4 {
            return Err(Error::Config(format!(
                "second differences need at least 4 nodes per axis (got {}x{})",
                plane.n1, plane.n2
            )));
        }
        let [dx, dy] = plane.spacing();
        Ok(PlanarDifferences {
            n1: plane.n1,
            n2: plane.n2,
            d1: plane.d1.clone(),
            d2: plane.d2.clone(),
            d11: Stencil1d::second_derivative(plane.n1, dx),
            d22: Stencil1d::second_derivative(plane.n2, dy),
        })
    }

    fn along_x(&self, op: &Stencil1d, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                out[i * self.n2 + j] = op.rows[i].iter().map(|&(ii, c)| c * v[ii * self.n2 + j]).sum();
            }
        }
        out
    }

    fn along_y(&self, op: &Stencil1d, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                out[i * self.n2 + j] = op.rows[j].iter().map(|&(jj, c)| c * v[i * self.n2 + jj]).sum();
            }
        }
        out
    }

    fn along_x_t(&self, op: &Stencil1d, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                out[i * self.n2 + j] = op.cols[i].iter().map(|&(ii, c)| c * v[ii * self.n2 + j]).sum();
            }
        }
        out
    }

    fn along_y_t(&self, op: &Stencil1d, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                out[i * self.n2 + j] = op.cols[j].iter().map(|&(jj, c)| c * v[i * self.n2 + jj]).sum();
            }
        }
        out
    }

    pub fn gradient(&self, v: &[f64]) -> [Vec<f64>; 2] {
        [self.along_x(&self.d1, v), self.along_y(&self.d2, v)]
    }

    /// `(∂₁₁v, ∂₂₂v, ∂₁₂v)` with `∂₁₂ = D₁ ∘ D₂`.
    pub fn hessian(&self, v: &[f64]) -> [Vec<f64>; 3] {
        let d2v = self.along_y(&self.d2, v);
        [
            self.along_x(&self.d11, v),
            self.along_y(&self.d22, v),
            self.along_x(&self.d1, &d2v),
        ]
    }

    /// Adjoint of [`hessian`](Self::hessian): `H₁₁ᵀa + H₂₂ᵀb + H₁₂ᵀc`.
    pub fn hessian_transpose(&self, a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
        let ta = self.along_x_t(&self.d11, a);
        let tb = self.along_y_t(&self.d22, b);
        let tc = self.along_y_t(&self.d2, &self.along_x_t(&self.d1, c));
        ta.iter()
            .zip(&tb)
            .zip(&tc)
            .map(|((x, y), z)| x + y + z)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScalarField2D {
    Analytic(AnalyticScalar),
    Grid(GridScalar),
}

impl ScalarField2D {
    pub fn zero() -> Self {
        ScalarField2D::Analytic(AnalyticScalar::zero())
    }

    pub fn as_analytic(&self) -> Option<&AnalyticScalar> {
        match self {
            ScalarField2D::Analytic(a) => Some(a),
            ScalarField2D::Grid(_) => None,
        }
    }

    /// Node values on `plane`; grid fields must already live on it.
    pub fn values_on(&self, plane: &PlanarGrid) -> Result<Vec<f64>> {
        match self {
            ScalarField2D::Analytic(a) => Ok(GridScalar::sample(plane, a).values),
            ScalarField2D::Grid(g) if g.compatible(plane) => Ok(g.values.clone()),
            ScalarField2D::Grid(g) => Err(Error::Domain(format!(
                "grid field {}x{} does not match grid {}x{}",
                g.n1, g.n2, plane.n1, plane.n2
            ))),
        }
    }

    /// Gradient and Hessian `(∂₁₁, ∂₂₂, ∂₁₂)` at every node of `plane`:
    /// exact for analytic fields, finite differences for grid fields.
    pub fn derivatives_on(&self, plane: &PlanarGrid) -> Result<([Vec<f64>; 2], [Vec<f64>; 3])> {
        match self {
            ScalarField2D::Analytic(a) => {
                let n = plane.len();
                let (mut g1, mut g2) = (Vec::with_capacity(n), Vec::with_capacity(n));
                let (mut h11, mut h22, mut h12) =
                    (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
                for i in 0..plane.n1 {
                    for j in 0..plane.n2 {
                        let p = plane.point(i, j);
                        let g = a.gradient(p);
                        let h = a.hessian(p);
                        g1.push(g[0]);
                        g2.push(g[1]);
                        h11.push(h[0][0]);
                        h22.push(h[1][1]);
                        h12.push(h[0][1]);
                    }
                }
                Ok(([g1, g2], [h11, h22, h12]))
            }
            ScalarField2D::Grid(_) => {
                let v = self.values_on(plane)?;
                let d = PlanarDifferences::new(plane)?;
                Ok((d.gradient(&v), d.hessian(&v)))
            }
        }
    }
}

impl From<AnalyticScalar> for ScalarField2D {
    fn from(a: AnalyticScalar) -> Self {
        ScalarField2D::Analytic(a)
    }
}

impl From<GridScalar> for ScalarField2D {
    fn from(g: GridScalar) -> Self {
        ScalarField2D::Grid(g)
    }
}
