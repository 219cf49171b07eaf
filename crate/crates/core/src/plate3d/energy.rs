use log::warn;

use super::Deformation3D;
use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, Execution};
use crate::grid::PlateGrid;
use crate::material::EnergyDensity;
use crate::optimize::{lbfgs, IterationRecord, LbfgsOptions, Termination};
use crate::prestrain::PrestrainSpec;
use crate::tensor::{dist2_so3, Mat3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBreakdown {
    /// The discrete value of `I_W^h`.
    pub total: f64,
    /// Largest `dist²(F, SO(3))` over quadrature points.
    pub max_dist2: f64,
    /// Smallest `det F` over quadrature points.
    pub min_det: f64,
    /// Number of quadrature points with `det F ≤ 0`.
    pub inverted: usize,
}

/// Precomputed quadrature data for one `(grid, prestrain, density, h)` tuple.
#[derive(Clone, Debug)]
pub struct PlateEnergy<'a> {
    pub grid: &'a PlateGrid,
    pub spec: &'a PrestrainSpec,
    pub density: EnergyDensity,
    pub h: f64,
    pub exec: Execution,
    /// `(A^h)⁻¹` per node.
    a_inv: Vec<Mat3>,
    /// `A^h` per node.
    a: Vec<Mat3>,
    /// Quadrature weight per node (sums to `|ω|`).
    weight: Vec<f64>,
}

impl<'a> PlateEnergy<'a> {
    pub fn new(
        grid: &'a PlateGrid,
        spec: &'a PrestrainSpec,
        density: EnergyDensity,
        h: f64,
    ) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("thickness must be positive (got {h})")));
        }
        let n = grid.node_count();
        let mut a = Vec::with_capacity(n);
        let mut a_inv = Vec::with_capacity(n);
        let mut weight = Vec::with_capacity(n);
        for i in 0..grid.n1() {
            for j in 0..grid.n2() {
                let p = grid.plane.point(i, j);
                let w = grid.plane.weight(i, j);
                for k in 0..grid.m {
                    let g = spec.growth_tensor(h, p, h * grid.t[k])?;
                    a.push(g.a);
                    a_inv.push(g.inverse);
                    weight.push(w * grid.wt[k]);
                }
            }
        }
        Ok(PlateEnergy {
            grid,
            spec,
            density,
            h,
            exec: Execution::default(),
            a_inv,
            a,
            weight,
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn growth(&self, node: usize) -> (&Mat3, &Mat3) {
        (&self.a[node], &self.a_inv[node])
    }

    pub fn weight(&self, node: usize) -> f64 {
        self.weight[node]
    }

    /// `∇u^h` at node `(i, j, k)` from the stored values.
    #[inline]
    pub fn deformation_gradient(&self, y: &[Vec3], i: usize, j: usize, k: usize) -> Mat3 {
        let g = self.grid;
        let mut c1 = [0.0; 3];
        for &(ii, c) in &g.plane.d1.rows[i] {
            let v = y[g.index(ii, j, k)];
            c1[0] += c * v[0];
            c1[1] += c * v[1];
            c1[2] += c * v[2];
        }
        let mut c2 = [0.0; 3];
        for &(jj, c) in &g.plane.d2.rows[j] {
            let v = y[g.index(i, jj, k)];
            c2[0] += c * v[0];
            c2[1] += c * v[1];
            c2[2] += c * v[2];
        }
        let mut c3 = [0.0; 3];
        for &(kk, c) in &g.dt.rows[k] {
            let v = y[g.index(i, j, kk)];
            c3[0] += c * v[0];
            c3[1] += c * v[1];
            c3[2] += c * v[2];
        }
        let s = 1.0 / self.h;
        Mat3::from_columns(c1, c2, [c3[0] * s, c3[1] * s, c3[2] * s])
    }

    /// Elastic tensor `F = ∇u (A^h)⁻¹` at every node, in node order.
    pub fn elastic_tensors(&self, u: &Deformation3D) -> Result<Vec<Mat3>> {
        u.check(self.grid)?;
        let g = self.grid;
        let rows = self.exec.map(g.n1(), |i| {
            let mut out = Vec::with_capacity(g.n2() * g.m);
            for j in 0..g.n2() {
                for k in 0..g.m {
                    let node = g.index(i, j, k);
                    out.push(self.deformation_gradient(&u.values, i, j, k) * self.a_inv[node]);
                }
            }
            out
        });
        Ok(rows.into_iter().flatten().collect())
    }

    /// Energy only, without the per-point diagnostics.
    pub fn value(&self, u: &Deformation3D) -> Result<f64> {
        u.check(self.grid)?;
        self.value_unchecked(&u.values)
    }

    fn value_unchecked(&self, y: &[Vec3]) -> Result<f64> {
        let g = self.grid;
        let rows = self.exec.map(g.n1(), |i| {
            let mut s = 0.0;
            let mut inverted = 0usize;
            for j in 0..g.n2() {
                for k in 0..g.m {
                    let node = g.index(i, j, k);
                    let f = self.deformation_gradient(y, i, j, k) * self.a_inv[node];
                    if f.det() <= 0.0 {
                        inverted += 1;
                    }
                    s += self.weight[node] * self.density.density_unchecked(&f);
                }
            }
            (s, inverted)
        });
        let inverted: usize = rows.iter().map(|r| r.1).sum();
        if inverted > 0 && self.density.rejects_inverted() {
            return Err(Error::DegenerateElement(format!(
                "{inverted} quadrature points with det F <= 0"
            )));
        }
        let partial: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let total = pairwise_sum(&partial);
        if !total.is_finite() {
            return Err(Error::Domain("non-finite energy".into()));
        }
        Ok(total)
    }

    pub fn evaluate(&self, u: &Deformation3D) -> Result<EnergyBreakdown> {
        u.check(self.grid)?;
        let g = self.grid;
        let rows = self.exec.map(g.n1(), |i| {
            let mut s = 0.0;
            let mut max_d2: f64 = 0.0;
            let mut min_det = f64::INFINITY;
            let mut inverted = 0usize;
            for j in 0..g.n2() {
                for k in 0..g.m {
                    let node = g.index(i, j, k);
                    let f = self.deformation_gradient(&u.values, i, j, k) * self.a_inv[node];
                    let det = f.det();
                    min_det = min_det.min(det);
                    if det <= 0.0 {
                        inverted += 1;
                    }
                    s += self.weight[node] * self.density.density_unchecked(&f);
                    max_d2 = max_d2.max(dist2_so3(&f));
                }
            }
            (s, max_d2, min_det, inverted)
        });
        let inverted: usize = rows.iter().map(|r| r.3).sum();
        if inverted > 0 {
            if self.density.rejects_inverted() {
                return Err(Error::DegenerateElement(format!(
                    "{inverted} quadrature points with det F <= 0"
                )));
            }
            warn!(
                "{inverted} quadrature points with det F <= 0; svk energy is not coercive there"
            );
        }
        let partial: Vec<f64> = rows.iter().map(|r| r.0).collect();
        Ok(EnergyBreakdown {
            total: pairwise_sum(&partial),
            max_dist2: rows.iter().map(|r| r.1).fold(0.0, f64::max),
            min_det: rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min),
            inverted,
        })
    }

    /// Exact gradient of the discrete energy with respect to the node values.
    pub fn gradient(&self, u: &Deformation3D) -> Result<Vec<Vec3>> {
        u.check(self.grid)?;
        Ok(self.value_and_gradient(&u.values)?.1)
    }

    fn value_and_gradient(&self, y: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
        let g = self.grid;
        let per_row = g.n2() * g.m;
        // stage 1: T = w · ∂W/∂F · (A⁻¹)ᵀ, the co-vector of ∇u at each node
        let rows = self.exec.map(g.n1(), |i| -> Result<(f64, usize, Vec<Mat3>)> {
            let mut s = 0.0;
            let mut inverted = 0usize;
            let mut t = Vec::with_capacity(per_row);
            for j in 0..g.n2() {
                for k in 0..g.m {
                    let node = g.index(i, j, k);
                    let f = self.deformation_gradient(y, i, j, k) * self.a_inv[node];
                    if f.det() <= 0.0 {
                        inverted += 1;
                    }
                    let w = self.weight[node];
                    s += w * self.density.density_unchecked(&f);
                    let p = self.density.density_gradient(&f)?;
                    t.push(p * self.a_inv[node].transpose() * w);
                }
            }
            Ok((s, inverted, t))
        });
        let mut partial = Vec::with_capacity(g.n1());
        let mut cotangent = Vec::with_capacity(g.node_count());
        let mut inverted = 0usize;
        for r in rows {
            let (s, inv, t) = r?;
            partial.push(s);
            inverted += inv;
            cotangent.extend(t);
        }
        if inverted > 0 && self.density.rejects_inverted() {
            return Err(Error::DegenerateElement(format!(
                "{inverted} quadrature points with det F <= 0"
            )));
        }
        let total = pairwise_sum(&partial);

        // stage 2: gather the transposed difference operators
        let inv_h = 1.0 / self.h;
        let mut grad = vec![[0.0; 3]; g.node_count()];
        self.exec.for_each_chunk(&mut grad, per_row, |i, chunk| {
            for j in 0..g.n2() {
                for k in 0..g.m {
                    let mut acc = [0.0; 3];
                    for &(ii, c) in &g.plane.d1.cols[i] {
                        let t = &cotangent[g.index(ii, j, k)];
                        for r in 0..3 {
                            acc[r] += c * t.0[r][0];
                        }
                    }
                    for &(jj, c) in &g.plane.d2.cols[j] {
                        let t = &cotangent[g.index(i, jj, k)];
                        for r in 0..3 {
                            acc[r] += c * t.0[r][1];
                        }
                    }
                    for &(kk, c) in &g.dt.cols[k] {
                        let t = &cotangent[g.index(i, j, kk)];
                        for r in 0..3 {
                            acc[r] += c * inv_h * t.0[r][2];
                        }
                    }
                    chunk[j * g.m + k] = acc;
                }
            }
        });
        Ok((total, grad))
    }

    /// Quasi-Newton descent from `u0`.
    pub fn minimize(&self, u0: &Deformation3D, opts: &LbfgsOptions) -> Result<MinimizeOutcome> {
        u0.check(self.grid)?;
        let start = self.evaluate(u0)?;
        let result = lbfgs(
            u0.as_flat(),
            |x| {
                let y: Vec<Vec3> = x.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
                let (f, gr) = self.value_and_gradient(&y)?;
                Ok((f, gr.into_iter().flatten().collect()))
            },
            opts,
        )?;
        let u = u0.from_flat(&result.x);
        let breakdown = self.evaluate(&u)?;
        if result.termination == Termination::LineSearchFailed {
            warn!(
                "line search failed after {} iterations (energy {:e}, |g| {:e})",
                result.log.len() - 1,
                result.value,
                result.grad_norm
            );
        }
        Ok(MinimizeOutcome {
            deformation: u,
            initial: start,
            breakdown,
            termination: result.termination,
            log: result.log,
        })
    }
}

#[derive(Clone, Debug)]
pub struct MinimizeOutcome {
    pub deformation: Deformation3D,
    pub initial: EnergyBreakdown,
    pub breakdown: EnergyBreakdown,
    pub termination: Termination,
    pub log: Vec<IterationRecord>,
}

pub fn evaluate_energy(
    u: &Deformation3D,
    grid: &PlateGrid,
    spec: &PrestrainSpec,
    density: EnergyDensity,
    h: f64,
) -> Result<EnergyBreakdown> {
    PlateEnergy::new(grid, spec, density, h)?.evaluate(u)
}

pub fn energy_gradient(
    u: &Deformation3D,
    grid: &PlateGrid,
    spec: &PrestrainSpec,
    density: EnergyDensity,
    h: f64,
) -> Result<Vec<Vec3>> {
    PlateEnergy::new(grid, spec, density, h)?.gradient(u)
}

pub fn minimize_energy(
    u0: &Deformation3D,
    grid: &PlateGrid,
    spec: &PrestrainSpec,
    density: EnergyDensity,
    h: f64,
    opts: &LbfgsOptions,
) -> Result<MinimizeOutcome> {
    PlateEnergy::new(grid, spec, density, h)?.minimize(u0, opts)
}
