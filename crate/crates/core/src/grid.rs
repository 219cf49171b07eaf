//! Tensor-product discretization of the rescaled plate `ω × (−1/2, 1/2)`.
//!
//! In-plane: uniform nodes, trapezoid weights, second-order finite
//! differences (central inside, one-sided at the ends). Through the
//! thickness: Gauss–Legendre points with the Lagrange differentiation matrix
//! on those points, which is exact for polynomials of degree `< m`.

use crate::error::{Error, Result};
use crate::prestrain::Rect;

/// Sparse 1D operator: row `i` is a list of `(column, coefficient)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil1d {
    pub rows: Vec<Vec<(usize, f64)>>,
    /// `cols[j]` lists `(row, coefficient)` for every row touching column `j`.
    pub cols: Vec<Vec<(usize, f64)>>,
}

impl Stencil1d {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut cols = vec![Vec::new(); n];
        for (i, row) in rows.iter().enumerate() {
            for &(j, c) in row {
                cols[j].push((i, c));
            }
        }
        Stencil1d { rows, cols }
    }

    /// First derivative on `n ≥ 3` uniform nodes with spacing `dx`: central
    /// inside, one-sided at the ends. The end rows use four points (third
    /// order) when available; a second-order end closure leaves an `O(dx³)`
    /// boundary contribution with a large constant in integrated quantities.
    pub fn first_derivative(n: usize, dx: f64) -> Self {
        assert!(n >= 3, "first derivative stencil needs at least 3 nodes");
        let s = 1.0 / (2.0 * dx);
        let mut rows = Vec::with_capacity(n);
        let (first, last) = if n >= 4 {
            let t = 1.0 / (6.0 * dx);
            (
                vec![(0, -11.0 * t), (1, 18.0 * t), (2, -9.0 * t), (3, 2.0 * t)],
                vec![(n - 4, -2.0 * t), (n - 3, 9.0 * t), (n - 2, -18.0 * t), (n - 1, 11.0 * t)],
            )
        } else {
            (
                vec![(0, -3.0 * s), (1, 4.0 * s), (2, -s)],
                vec![(n - 3, s), (n - 2, -4.0 * s), (n - 1, 3.0 * s)],
            )
        };
        rows.push(first);
        for i in 1..n - 1 {
            rows.push(vec![(i - 1, -s), (i + 1, s)]);
        }
        rows.push(last);
        Self::from_rows(rows)
    }

    /// Second-order second derivative on `n ≥ 4` uniform nodes.
    pub fn second_derivative(n: usize, dx: f64) -> Self {
        assert!(n >= 4, "second derivative stencil needs at least 4 nodes");
        let s = 1.0 / (dx * dx);
        let mut rows = Vec::with_capacity(n);
        rows.push(vec![(0, 2.0 * s), (1, -5.0 * s), (2, 4.0 * s), (3, -s)]);
        for i in 1..n - 1 {
            rows.push(vec![(i - 1, s), (i, -2.0 * s), (i + 1, s)]);
        }
        rows.push(vec![(n - 4, -s), (n - 3, 4.0 * s), (n - 2, -5.0 * s), (n - 1, 2.0 * s)]);
        Self::from_rows(rows)
    }

    /// Dense operator (used for the through-thickness differentiation matrix).
    pub fn dense(m: &[Vec<f64>]) -> Self {
        Self::from_rows(
            m.iter()
                .map(|row| row.iter().copied().enumerate().collect())
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, c)| c * v[j]).sum())
            .collect()
    }
}

/// Gauss–Legendre nodes and weights on `(−1, 1)`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(m, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Differentiation matrix of the Lagrange interpolant through `nodes`.
pub fn lagrange_differentiation(nodes: &[f64]) -> Vec<Vec<f64>> {
    let m = nodes.len();
    let bary: Vec<f64> = (0..m)
        .map(|j| {
            1.0 / (0..m)
                .filter(|&k| k != j)
                .map(|k| nodes[j] - nodes[k])
                .product::<f64>()
        })
        .collect();
    let mut d = vec![vec![0.0; m]; m];
    for i in 0..m {
        let mut diag = 0.0;
        for j in 0..m {
            if i != j {
                d[i][j] = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                diag -= d[i][j];
            }
        }
        d[i][i] = diag;
    }
    d
}

/// Trapezoid weights for `n` uniform nodes with spacing `dx`.
pub fn trapezoid_weights(n: usize, dx: f64) -> Vec<f64> {
    let mut w = vec![dx; n];
    w[0] = 0.5 * dx;
    w[n - 1] = 0.5 * dx;
    w
}

/// In-plane tensor grid on a rectangle.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarGrid {
    pub n1: usize,
    pub n2: usize,
    pub rect: Rect,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub d1: Stencil1d,
    pub d2: Stencil1d,
}

impl PlanarGrid {
    pub fn new(rect: Rect, n1: usize, n2: usize) -> Result<Self> {
        if n1 < 3 || n2 < 3 {
            return Err(Error::Config(format!(
                "in-plane grid needs at least 3 nodes per axis (got {n1} x {n2})"
            )));
        }
        let dx1 = rect.width() / (n1 - 1) as f64;
        let dx2 = rect.height() / (n2 - 1) as f64;
        Ok(PlanarGrid {
            n1,
            n2,
            rect,
            x1: (0..n1).map(|i| rect.x[0] + dx1 * i as f64).collect(),
            x2: (0..n2).map(|j| rect.y[0] + dx2 * j as f64).collect(),
            w1: trapezoid_weights(n1, dx1),
            w2: trapezoid_weights(n2, dx2),
            d1: Stencil1d::first_derivative(n1, dx1),
            d2: Stencil1d::first_derivative(n2, dx2),
        })
    }

    pub fn spacing(&self) -> [f64; 2] {
        [self.x1[1] - self.x1[0], self.x2[1] - self.x2[0]]
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of node `(i, j)`; `i` runs along x₁.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n2 + j
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x1[i], self.x2[j]]
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w1[i] * self.w2[j]
    }

    /// Trapezoid integral of nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let rows: Vec<f64> = (0..self.n1)
            .map(|i| (0..self.n2).map(|j| self.weight(i, j) * values[self.index(i, j)]).sum())
            .collect();
        crate::exec::pairwise_sum(&rows)
    }
}

/// End-corrected trapezoid (Gregory) weights: positive and exact for cubics,
/// so the quadrature error is `O(dx⁴)` for smooth non-periodic integrands.
/// Falls back to the trapezoid rule below 6 nodes.
pub fn gregory_weights(n: usize, dx: f64) -> Vec<f64> {
    if n < 6 {
        return trapezoid_weights(n, dx);
    }
    let mut w = vec![dx; n];
    for (k, c) in [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0].into_iter().enumerate() {
        w[k] = c * dx;
        w[n - 1 - k] = c * dx;
    }
    w
}

/// Tensor-product nodal quadrature on a planar grid.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalQuadrature {
    pub n2: usize,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl NodalQuadrature {
    pub fn gregory(plane: &PlanarGrid) -> Self {
        let [dx, dy] = plane.spacing();
        NodalQuadrature {
            n2: plane.n2,
            w1: gregory_weights(plane.n1, dx),
            w2: gregory_weights(plane.n2, dy),
        }
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w1[i] * self.w2[j]
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        let rows: Vec<f64> = (0..self.w1.len())
            .map(|i| (0..self.n2).map(|j| self.weight(i, j) * values[i * self.n2 + j]).sum())
            .collect();
        crate::exec::pairwise_sum(&rows)
    }
}

/// Discretization of the rescaled plate: in-plane grid × Gauss points in `t ∈ (−1/2, 1/2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlateGrid {
    pub plane: PlanarGrid,
    pub m: usize,
    /// Gauss nodes in `(−1/2, 1/2)`.
    pub t: Vec<f64>,
    /// Gauss weights, summing to 1.
    pub wt: Vec<f64>,
    /// Differentiation in `t` on the Gauss nodes.
    pub dt: Stencil1d,
}

impl PlateGrid {
    pub fn new(rect: Rect, n1: usize, n2: usize, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Config(format!(
                "through-thickness Gauss rule needs m >= 2 (got {m})"
            )));
        }
        let plane = PlanarGrid::new(rect, n1, n2)?;
        let (nodes, weights) = gauss_legendre(m);
        let t: Vec<f64> = nodes.iter().map(|x| 0.5 * x).collect();
        let wt: Vec<f64> = weights.iter().map(|w| 0.5 * w).collect();
        let dt = Stencil1d::dense(&lagrange_differentiation(&t));
        Ok(PlateGrid { plane, m, t, wt, dt })
    }

    pub fn n1(&self) -> usize {
        self.plane.n1
    }

    pub fn n2(&self) -> usize {
        self.plane.n2
    }

    pub fn node_count(&self) -> usize {
        self.plane.len() * self.m
    }

    /// Flat index of node `(i, j, k)`.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.plane.n2 + j) * self.m + k
    }

    /// Same grid with the in-plane resolution doubled (`n ↦ 2n`).
    pub fn refined(&self) -> Result<Self> {
        PlateGrid::new(self.plane.rect, 2 * self.plane.n1, 2 * self.plane.n2, self.m)
    }
}
