//! The thickness sweep comparing 3D energies with the bending limit.
//!
//! For every `h` in the sweep the experiment builds the recovery sequence,
//! evaluates its energy on the configured grid and on a grid of half the
//! in-plane resolution, measures its rotation misfit and, optionally,
//! minimizes the 3D energy starting from it. The minimizer's scaled
//! out-of-plane displacement is compared with the discrete limit minimizer
//! after removing affine parts.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::PlateGrid;
use crate::harness::config::ExperimentConfig;
use crate::harness::fit::{fit_loglog_slope, LogLogFit};
use crate::limit2d::{LimitFunctional, LimitSolverOptions};
use crate::material::EnergyDensity;
use crate::optimize::{IterationRecord, Termination};
use crate::plate3d::{
    relative_l2_affine_aligned, rotation_field_diagnostic, scaled_displacement, Deformation3D,
    PlateEnergy,
};
use crate::prestrain::PrestrainSpec;
use crate::recovery::{
    build_recovery, build_recovery_from_grid, recovery_energy, GradientPath, RecoveryInput,
    REFINEMENT_TOLERANCE,
};
use crate::scalar::GridScalar;

/// One thickness value of the sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub h: f64,
    pub e3d_recovery: f64,
    pub e3d_minimized: Option<f64>,
    pub rescaled_recovery: f64,
    pub rescaled_minimized: Option<f64>,
    /// Rescaled recovery energy on the half-resolution grid.
    pub half_res_rescaled_recovery: f64,
    pub reference_igamma: f64,
    /// `(1/h)∫|∇u − R A^h|²` of the recovery sequence.
    pub recovery_misfit: f64,
    pub minimized_misfit: Option<f64>,
    /// Affine-aligned relative L² distance between the minimizer's scaled
    /// out-of-plane displacement and the limit minimizer.
    pub displacement_rel_l2: Option<f64>,
    pub termination: Option<Termination>,
    pub iterations: usize,
    pub inverted: usize,
    pub flags: Vec<String>,
    pub log: Vec<IterationRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceSource {
    /// `I_γ` of the configured closed-form displacement.
    Displacement,
    /// Minimum of the discrete limit functional.
    LimitMinimizer,
}

impl ReferenceSource {
    pub fn label(self) -> &'static str {
        match self {
            ReferenceSource::Displacement => "configured displacement",
            ReferenceSource::LimitMinimizer => "limit minimizer",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitSummary {
    pub value: f64,
    pub iterations: usize,
    pub relative_residual: f64,
    pub direct: bool,
}

/// A log-log slope, or the reason it could not be computed.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedFit {
    pub name: &'static str,
    /// Rate predicted by the theory, when there is one.
    pub expected: Option<f64>,
    pub fit: Option<LogLogFit>,
    pub note: Option<String>,
}

impl NamedFit {
    pub fn from_points(name: &'static str, expected: Option<f64>, points: &[(f64, f64)]) -> Self {
        match fit_loglog_slope(points) {
            Ok(fit) => NamedFit {
                name,
                expected,
                fit: Some(fit),
                note: None,
            },
            Err(e) => NamedFit {
                name,
                expected,
                fit: None,
                note: Some(e.to_string()),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub name: Option<String>,
    pub density: EnergyDensity,
    pub gamma: f64,
    pub grid: [usize; 3],
    pub half_grid: [usize; 3],
    pub limit: LimitSummary,
    pub limit_field: GridScalar,
    pub reference_igamma: f64,
    pub reference_source: ReferenceSource,
    /// Successful rows, ordered by decreasing `h`.
    pub rows: Vec<SweepRow>,
    pub fits: Vec<NamedFit>,
    /// Set when a sweep point failed; the rows are then partial.
    pub aborted: Option<String>,
}

impl ExperimentReport {
    pub fn fit(&self, name: &str) -> Option<&NamedFit> {
        self.fits.iter().find(|f| f.name == name)
    }

    fn refit(&mut self) {
        let pts = |f: &dyn Fn(&SweepRow) -> Option<f64>| -> Vec<(f64, f64)> {
            self.rows.iter().filter_map(|r| f(r).map(|v| (r.h, v))).collect()
        };
        let rate = self.gamma + 2.0;
        let floor = 1e-12 * self.reference_igamma.abs().max(1.0);
        let error_pts: Vec<(f64, f64)> = pts(&|r| Some((r.rescaled_recovery - r.reference_igamma).abs()));
        let error_fit = if error_pts.iter().all(|p| p.1 > floor) {
            NamedFit::from_points("recovery_rescaled_error", None, &error_pts)
        } else {
            NamedFit {
                name: "recovery_rescaled_error",
                expected: None,
                fit: None,
                note: Some("errors at roundoff level carry no rate".into()),
            }
        };
        let mut fits = vec![
            NamedFit::from_points("recovery_energy", Some(rate), &pts(&|r| Some(r.e3d_recovery))),
            error_fit,
            NamedFit::from_points("recovery_misfit", Some(rate), &pts(&|r| Some(r.recovery_misfit))),
        ];
        if self.rows.iter().any(|r| r.e3d_minimized.is_some()) {
            fits.push(NamedFit::from_points(
                "minimized_energy",
                Some(rate),
                &pts(&|r| r.e3d_minimized),
            ));
            fits.push(NamedFit::from_points(
                "displacement_error",
                None,
                &pts(&|r| r.displacement_rel_l2),
            ));
        }
        self.fits = fits;
    }
}

/// Source of the out-of-plane displacement driving the recovery sequence.
enum Displacement {
    Analytic(RecoveryInput),
    Grid {
        field: GridScalar,
        half: GridScalar,
        spec: PrestrainSpec,
        density: EnergyDensity,
    },
}

impl Displacement {
    fn build(&self, h: f64, grid: &PlateGrid, half: bool) -> Result<Deformation3D> {
        match self {
            Displacement::Analytic(inp) => build_recovery(inp, h, grid),
            Displacement::Grid {
                field,
                half: coarse,
                spec,
                density,
            } => build_recovery_from_grid(if half { coarse } else { field }, spec, density, h, grid),
        }
    }

    fn energy(&self, energy: &PlateEnergy<'_>, u: &Deformation3D, path: GradientPath) -> Result<f64> {
        match (self, path) {
            (Displacement::Analytic(inp), GradientPath::Analytic) => {
                recovery_energy(inp, energy.h, energy.grid, path)
            }
            _ => energy.value(u),
        }
    }
}

/// Same plate with the in-plane resolution halved.
pub fn half_resolution(grid: &PlateGrid) -> Result<PlateGrid> {
    let n = |k: usize| (k / 2).max(crate::harness::config::MIN_PLANAR_NODES);
    PlateGrid::new(grid.plane.rect, n(grid.n1()), n(grid.n2()), grid.m)
}

/// Runs the sweep described by `cfg`.
///
/// Sweep points are processed in parallel; the rows come back ordered by `h`.
/// If a point fails, the report carries every row that succeeded together
/// with the failure, and the caller decides whether to persist it; see
/// [`run_and_write`](crate::harness::output::run_and_write).
pub fn run_gamma_limit_experiment(cfg: &ExperimentConfig) -> Result<(ExperimentReport, Option<Error>)> {
    cfg.validate()?;
    let spec = cfg.spec()?;
    let density = cfg.density()?;
    let grid = cfg.plate_grid()?;
    let half = half_resolution(&grid)?;
    let fnl = LimitFunctional::new(&spec, density);
    let limit_opts: LimitSolverOptions = cfg.limit_options();
    let limit = fnl.minimize(&grid.plane, &limit_opts)?;

    let (source, reference, reference_source) = match cfg.recovery_v3()? {
        Some(v3) => {
            let reference = fnl.evaluate_analytic(&v3, &grid.plane);
            let inp = RecoveryInput {
                v3,
                spec: spec.clone(),
                density,
            };
            (Displacement::Analytic(inp), reference, ReferenceSource::Displacement)
        }
        None => {
            let coarse = fnl.minimize(&half.plane, &limit_opts)?;
            (
                Displacement::Grid {
                    field: limit.field.clone(),
                    half: coarse.field,
                    spec: spec.clone(),
                    density,
                },
                limit.value,
                ReferenceSource::LimitMinimizer,
            )
        }
    };
    let limit_norm = limit.field.values.iter().map(|v| v * v).sum::<f64>().sqrt();

    let hs = &cfg.sweep.h;
    let ctx = RowContext {
        cfg,
        spec: &spec,
        density,
        grid: &grid,
        half: &half,
        source: &source,
        reference,
        limit_field: (limit_norm > 1e-12).then_some(&limit.field),
    };
    let results = Execution::default().map(hs.len(), |n| ctx.row(hs[n]).map_err(|e| e.at_h(hs[n])));

    let mut rows = Vec::with_capacity(hs.len());
    let mut first_error = None;
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    let mut report = ExperimentReport {
        name: cfg.name.clone(),
        density,
        gamma: spec.gamma,
        grid: [grid.n1(), grid.n2(), grid.m],
        half_grid: [half.n1(), half.n2(), half.m],
        limit: LimitSummary {
            value: limit.value,
            iterations: limit.iterations,
            relative_residual: limit.relative_residual,
            direct: limit_opts.direct,
        },
        limit_field: limit.field,
        reference_igamma: reference,
        reference_source,
        rows,
        fits: Vec::new(),
        aborted: first_error.as_ref().map(|e| e.to_string()),
    };
    report.refit();
    Ok((report, first_error))
}

struct RowContext<'a> {
    cfg: &'a ExperimentConfig,
    spec: &'a PrestrainSpec,
    density: EnergyDensity,
    grid: &'a PlateGrid,
    half: &'a PlateGrid,
    source: &'a Displacement,
    reference: f64,
    limit_field: Option<&'a GridScalar>,
}

impl RowContext<'_> {
    fn row(&self, h: f64) -> Result<SweepRow> {
        let gamma = self.spec.gamma;
        let scale = h.powf(gamma + 2.0);
        let path = self.cfg.recovery.gradient;
        let energy = PlateEnergy::new(self.grid, self.spec, self.density, h)?;
        let u0 = self.source.build(h, self.grid, false)?;
        let e_rec = self.source.energy(&energy, &u0, path)?;

        let coarse = PlateEnergy::new(self.half, self.spec, self.density, h)?;
        let u_half = self.source.build(h, self.half, true)?;
        let e_half = self.source.energy(&coarse, &u_half, path)?;

        let recovery_misfit = rotation_field_diagnostic(&energy, &u0)?.misfit;
        let mut flags = Vec::new();
        let rescaled = e_rec / scale;
        let half_rescaled = e_half / scale;
        let drift = (half_rescaled - rescaled).abs();
        if drift > REFINEMENT_TOLERANCE * rescaled.abs() && drift > 1e-14 {
            flags.push("resolution-drift".to_string());
        }

        let mut row = SweepRow {
            h,
            e3d_recovery: e_rec,
            e3d_minimized: None,
            rescaled_recovery: rescaled,
            rescaled_minimized: None,
            half_res_rescaled_recovery: half_rescaled,
            reference_igamma: self.reference,
            recovery_misfit,
            minimized_misfit: None,
            displacement_rel_l2: None,
            termination: None,
            iterations: 0,
            inverted: 0,
            flags,
            log: Vec::new(),
        };
        if !self.cfg.opt.minimize {
            return Ok(row);
        }

        let out = energy.minimize(&u0, &self.cfg.lbfgs_options())?;
        let e_min = out.breakdown.total;
        row.e3d_minimized = Some(e_min);
        row.rescaled_minimized = Some(e_min / scale);
        row.minimized_misfit = Some(rotation_field_diagnostic(&energy, &out.deformation)?.misfit);
        if let Some(limit) = self.limit_field {
            let v = scaled_displacement(&out.deformation, self.grid, gamma, h)?;
            let rel = relative_l2_affine_aligned(&v.component(2).values, &limit.values, &self.grid.plane);
            row.displacement_rel_l2 = rel.is_finite().then_some(rel);
        }
        row.termination = Some(out.termination);
        row.iterations = out.log.len().saturating_sub(1);
        row.inverted = out.breakdown.inverted;
        if out.termination != Termination::Converged {
            row.flags.push(out.termination.label().to_string());
        }
        if out.breakdown.inverted > 0 {
            row.flags.push("inverted-elements".to_string());
        }
        if e_min > e_rec {
            row.flags.push("energy-increase".to_string());
        }
        row.log = out.log;
        Ok(row)
    }
}
