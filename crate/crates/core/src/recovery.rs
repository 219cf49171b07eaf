//! Recovery sequences: explicit plate deformations built from an out-of-plane
//! displacement `V₃` whose rescaled energies converge to `I_γ(V₃)`.
//!
//! With `s = h^{γ/2}`,
//!
//! ```text
//! u^h(x', x₃) = (x', 0) + s V₃ e₃ + x₃ (−s ∇V₃, 1) + ½ s x₃² d¹(x'),
//! d¹ = l(B) + c(−∇²V₃ − (sym B)_{2×2}).
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, Execution};
use crate::field::AnalyticScalar;
use crate::grid::{PlanarGrid, PlateGrid};
use crate::harness::fit::{fit_loglog_slope, LogLogFit};
use crate::limit2d::LimitFunctional;
use crate::material::{l_vector, EnergyDensity};
use crate::plate3d::{Deformation3D, PlateEnergy};
use crate::prestrain::PrestrainSpec;
use crate::scalar::{GridScalar, PlanarDifferences, ScalarField2D};
use crate::tensor::{sym, vec_add, Mat2, Mat3, Vec3};

/// An analytic `V₃` together with the prestrain and density it is paired with.
#[derive(Clone, Debug)]
pub struct RecoveryInput {
    pub v3: AnalyticScalar,
    pub spec: PrestrainSpec,
    pub density: EnergyDensity,
}

impl RecoveryInput {
    /// Grid-sampled fields are rejected: the gradient of `d¹` needs `∇³V₃`.
    pub fn new(v3: ScalarField2D, spec: PrestrainSpec, density: EnergyDensity) -> Result<Self> {
        match v3 {
            ScalarField2D::Analytic(v3) => Ok(RecoveryInput { v3, spec, density }),
            ScalarField2D::Grid(_) => Err(Error::Config(
                "recovery sequences need an analytic V3 (third derivatives are required)".into(),
            )),
        }
    }
}


/// `d¹` and its in-plane partial derivatives at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Warping {
    pub value: Vec3,
    pub gradient: [Vec3; 2],
}

fn warping_from(density: &EnergyDensity, b: &Mat3, hess: [[f64; 2]; 2]) -> Vec3 {
    let m = Mat2(hess) * -1.0 - sym(b).minor2();
    vec_add(l_vector(b), density.c_vector(&m))
}

pub fn warping_field(inp: &RecoveryInput, p: [f64; 2]) -> Warping {
    let b = inp.spec.bending.value(p);
    let value = warping_from(&inp.density, &b, inp.v3.hessian(p));
    let third = inp.v3.third(p);
    let db = inp.spec.bending.gradient(p);
    // l and c are linear, so ∂_α d¹ = l(∂_α B) + c(−∂_α∇²V₃ − (sym ∂_α B)_{2×2})
    let gradient = [0, 1].map(|a| warping_from(&inp.density, &db[a], third[a]));
    Warping { value, gradient }
}

fn check_thickness(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(Error::Domain(format!(
            "recovery thickness must lie in (0, 1/2] (got {h})"
        )));
    }
    Ok(())
}

/// `u^h` at a physical point `(x', x₃)` from `V₃`, `∇V₃` and `d¹`.
fn recovery_point(p: [f64; 2], x3: f64, s: f64, v: f64, g: [f64; 2], d: Vec3) -> Vec3 {
    let q = 0.5 * s * x3 * x3;
    [
        p[0] - x3 * s * g[0] + q * d[0],
        p[1] - x3 * s * g[1] + q * d[1],
        s * v + x3 + q * d[2],
    ]
}

/// Samples the recovery sequence at the nodes of `grid`, storing `u^h(x', h t)`.
pub fn build_recovery(inp: &RecoveryInput, h: f64, grid: &PlateGrid) -> Result<Deformation3D> {
    check_thickness(h)?;
    let s = h.powf(0.5 * inp.spec.gamma);
    Ok(Deformation3D::from_fn(grid, |p, t| {
        let d = warping_field(inp, p).value;
        recovery_point(p, h * t, s, inp.v3.value(p), inp.v3.gradient(p), d)
    }))
}

/// Recovery sequence of a grid-sampled `V₃` (e.g. a discrete limit minimizer),
/// with `∇V₃` and `∇²V₃` taken from finite differences on the plate grid.
pub fn build_recovery_from_grid(
    v3: &GridScalar,
    spec: &PrestrainSpec,
    density: &EnergyDensity,
    h: f64,
    grid: &PlateGrid,
) -> Result<Deformation3D> {
    check_thickness(h)?;
    if !v3.compatible(&grid.plane) {
        return Err(Error::Domain(format!(
            "grid field {}x{} does not match plate grid {}x{}",
            v3.n1,
            v3.n2,
            grid.n1(),
            grid.n2()
        )));
    }
    let ops = PlanarDifferences::new(&grid.plane)?;
    let [g1, g2] = ops.gradient(&v3.values);
    let [h11, h22, h12] = ops.hessian(&v3.values);
    let s = h.powf(0.5 * spec.gamma);
    let mut values = Vec::with_capacity(grid.node_count());
    for i in 0..grid.n1() {
        for j in 0..grid.n2() {
            let p = grid.plane.point(i, j);
            let k = grid.plane.index(i, j);
            let hess = [[h11[k], h12[k]], [h12[k], h22[k]]];
            let d = warping_from(density, &spec.bending.value(p), hess);
            for &t in &grid.t {
                values.push(recovery_point(p, h * t, s, v3.values[k], [g1[k], g2[k]], d));
            }
        }
    }
    Ok(Deformation3D {
        n1: grid.n1(),
        n2: grid.n2(),
        m: grid.m,
        values,
    })
}

/// Exact `∇u^h` of the recovery sequence at a physical point `(x', x₃)`.
pub fn recovery_gradient(inp: &RecoveryInput, h: f64, p: [f64; 2], x3: f64) -> Mat3 {
    let s = h.powf(0.5 * inp.spec.gamma);
    let g = inp.v3.gradient(p);
    let hess = inp.v3.hessian(p);
    let w = warping_field(inp, p);
    let q = 0.5 * s * x3 * x3;
    let col = |a: usize| -> Vec3 {
        let mut c = [0.0; 3];
        c[a] = 1.0;
        c[0] += -x3 * s * hess[a][0] + q * w.gradient[a][0];
        c[1] += -x3 * s * hess[a][1] + q * w.gradient[a][1];
        c[2] += s * g[a] + q * w.gradient[a][2];
        c
    };
    let c3 = [
        -s * g[0] + s * x3 * w.value[0],
        -s * g[1] + s * x3 * w.value[1],
        1.0 + s * x3 * w.value[2],
    ];
    Mat3::from_columns(col(0), col(1), c3)
}

/// How `∇u^h` is obtained when evaluating the recovery energy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientPath {
    /// Finite differences of the sampled deformation, as for any grid deformation.
    #[default]
    FiniteDifference,
    /// The closed-form gradient, leaving only quadrature error.
    Analytic,
}

/// The recovery energy `I_W^h(u^h)` on `grid`.
pub fn recovery_energy(inp: &RecoveryInput, h: f64, grid: &PlateGrid, path: GradientPath) -> Result<f64> {
    check_thickness(h)?;
    let energy = PlateEnergy::new(grid, &inp.spec, inp.density, h)?;
    match path {
        GradientPath::FiniteDifference => energy.value(&build_recovery(inp, h, grid)?),
        GradientPath::Analytic => {
            let rows = Execution::default().map(grid.n1(), |i| -> Result<f64> {
                let mut s = 0.0;
                for j in 0..grid.n2() {
                    let p = grid.plane.point(i, j);
                    for k in 0..grid.m {
                        let node = grid.index(i, j, k);
                        let (_, a_inv) = energy.growth(node);
                        let f = recovery_gradient(inp, h, p, h * grid.t[k]) * *a_inv;
                        s += energy.weight(node) * inp.density.density(&f)?;
                    }
                }
                Ok(s)
            });
            let partial = rows.into_iter().collect::<Result<Vec<f64>>>()?;
            Ok(pairwise_sum(&partial))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub h: f64,
    pub energy: f64,
    pub rescaled_energy: f64,
    /// Rescaled energy on the grid refined once in-plane.
    pub refined_rescaled_energy: f64,
    pub reference_igamma: f64,
    pub abs_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryCurve {
    pub points: Vec<CurvePoint>,
    pub reference_igamma: f64,
    /// Fit of `abs_error` against `h`; `None` when the errors are not all positive.
    pub fit: Option<LogLogFit>,
}

/// Largest relative change of a rescaled energy allowed under one in-plane refinement.
pub const REFINEMENT_TOLERANCE: f64 = 0.10;

/// Rescaled energies `I_W^h(u^h)/h^{γ+2}` for each `h`, the reference `I_γ(V₃)`,
/// and a log-log fit of the distance between them.
pub fn rescaled_energy_curve(
    inp: &RecoveryInput,
    hs: &[f64],
    grid: &PlateGrid,
    path: GradientPath,
) -> Result<RecoveryCurve> {
    if hs.is_empty() {
        return Err(Error::Config("the h list is empty".into()));
    }
    if hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("h values must be strictly decreasing".into()));
    }
    for &h in hs {
        check_thickness(h)?;
    }
    let fnl = LimitFunctional::new(&inp.spec, inp.density);
    let reference = fnl.evaluate_analytic(&inp.v3, &grid.plane);
    let refined = grid.refined()?;
    let gamma = inp.spec.gamma;

    let rows = Execution::default().map(hs.len(), |n| -> Result<CurvePoint> {
        let h = hs[n];
        let scale = h.powf(gamma + 2.0);
        let e = recovery_energy(inp, h, grid, path).map_err(|e| e.at_h(h))?;
        let fine = recovery_energy(inp, h, &refined, path).map_err(|e| e.at_h(h))? / scale;
        let rescaled = e / scale;
        let change = (fine - rescaled).abs();
        if change > REFINEMENT_TOLERANCE * fine.abs() && change > 1e-14 {
            return Err(Error::Refinement(format!(
                "at h = {h}: rescaled energy {rescaled:.6e} on {}x{} changes to {fine:.6e} on {}x{}",
                grid.n1(),
                grid.n2(),
                refined.n1(),
                refined.n2()
            )));
        }
        Ok(CurvePoint {
            h,
            energy: e,
            rescaled_energy: rescaled,
            refined_rescaled_energy: fine,
            reference_igamma: reference,
            abs_error: (rescaled - reference).abs(),
        })
    });
    let points = rows.into_iter().collect::<Result<Vec<_>>>()?;
    // errors at roundoff level (e.g. a flat configuration) carry no rate
    let floor = 1e-12 * reference.abs().max(1.0);
    let fit = if points.len() >= 3 && points.iter().all(|p| p.abs_error > floor) {
        let data: Vec<(f64, f64)> = points.iter().map(|p| (p.h, p.abs_error)).collect();
        Some(fit_loglog_slope(&data)?)
    } else {
        None
    };
    Ok(RecoveryCurve {
        points,
        reference_igamma: reference,
        fit,
    })
}

/// Limit reference on an arbitrary planar grid, exposed for reporting.
pub fn reference_igamma(inp: &RecoveryInput, plane: &PlanarGrid) -> f64 {
    LimitFunctional::new(&inp.spec, inp.density).evaluate_analytic(&inp.v3, plane)
}
