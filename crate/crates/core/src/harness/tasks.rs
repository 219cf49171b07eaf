//! The individual experiments behind the command-line subcommands, each
//! writing its artefacts into an output directory.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::harness::config::ExperimentConfig;
use crate::harness::output::{
    ensure_dir, fit_line, num, write_config_echo, write_csv, write_field, write_json, FitRecord,
    CURVE_CSV, CURVE_HEADER, FIT_JSON, SUMMARY_TXT, V3_CSV,
};
use crate::limit2d::{affine_constraints, formal_two_term_expansion, LimitFunctional, LimitMinimum};
use crate::material::{relax_numerically, EnergyDensity, IsotropicModuli};
use crate::plate3d::{rotation_field_diagnostic, PlateEnergy};
use crate::prestrain::bending_compatibility_field;
use crate::recovery::{build_recovery, rescaled_energy_curve, RecoveryCurve, RecoveryInput};
use crate::tensor::{Mat2, Vec3};

/// One sample of the relaxed-form oracle comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Q2Sample {
    pub f: Mat2,
    pub moduli: IsotropicModuli,
    pub q2: f64,
    pub q2_brute: f64,
    pub c: Vec3,
    pub c_brute: Vec3,
}

impl Q2Sample {
    pub fn q2_error(&self) -> f64 {
        (self.q2 - self.q2_brute).abs()
    }

    pub fn c_error(&self) -> f64 {
        (0..3).map(|k| (self.c[k] - self.c_brute[k]).abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Q2CheckReport {
    pub samples: Vec<Q2Sample>,
    pub max_q2_error: f64,
    pub max_c_error: f64,
}

/// Compares the closed-form relaxed form `Q₂` and its minimizing vector with a
/// brute-force minimization of `Q₃` over extensions, on random symmetric
/// matrices with entries in `[−2, 2]`, `μ ∈ [0.5, 4]` and `λ ∈ [0, 4]`.
pub fn q2_oracle_check(samples: usize, seed: u64) -> Result<Q2CheckReport> {
    if samples == 0 {
        return Err(Error::Config("the oracle check needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<(Mat2, IsotropicModuli)> = (0..samples)
        .map(|_| {
            let (a, b, c) = (
                rng.gen_range(-2.0..=2.0),
                rng.gen_range(-2.0..=2.0),
                rng.gen_range(-2.0..=2.0),
            );
            let moduli = IsotropicModuli {
                mu: rng.gen_range(0.5..=4.0),
                lambda: rng.gen_range(0.0..=4.0),
            };
            (Mat2([[a, c], [c, b]]), moduli)
        })
        .collect();
    let out = Execution::default().map(samples, |k| -> Result<Q2Sample> {
        let (f, moduli) = inputs[k];
        let w = EnergyDensity::Svk(moduli);
        let brute = relax_numerically(|m| w.q3(m), &f);
        Ok(Q2Sample {
            f,
            moduli,
            q2: w.q2(&f),
            q2_brute: brute.value,
            c: w.c_vector(&f),
            c_brute: brute.argmin,
        })
    });
    let samples = out.into_iter().collect::<Result<Vec<_>>>()?;
    let max_q2_error = samples.iter().map(Q2Sample::q2_error).fold(0.0, f64::max);
    let max_c_error = samples.iter().map(Q2Sample::c_error).fold(0.0, f64::max);
    Ok(Q2CheckReport {
        samples,
        max_q2_error,
        max_c_error,
    })
}

pub fn run_q2_check(cfg: &ExperimentConfig, dir: &Path) -> Result<Q2CheckReport> {
    ensure_dir(dir)?;
    write_config_echo(dir, cfg)?;
    let report = q2_oracle_check(cfg.q2_check.samples, cfg.q2_check.seed)?;
    write_csv(
        &dir.join("q2_check.csv"),
        &[
            "f11", "f12", "f22", "mu", "lambda", "q2", "q2_brute", "q2_abs_error", "c3", "c3_brute", "c_abs_error",
        ],
        report.samples.iter().map(|s| {
            [
                num(s.f.0[0][0]),
                num(s.f.0[0][1]),
                num(s.f.0[1][1]),
                num(s.moduli.mu),
                num(s.moduli.lambda),
                num(s.q2),
                num(s.q2_brute),
                num(s.q2_error()),
                num(s.c[2]),
                num(s.c_brute[2]),
                num(s.c_error()),
            ]
        }),
    )?;
    fs::write(
        dir.join(SUMMARY_TXT),
        format!(
            "relaxed form oracle check\nsamples: {} (seed {})\nmax |q2 - brute force|: {:e}\nmax |c - brute force argmin|: {:e}\n",
            report.samples.len(),
            cfg.q2_check.seed,
            report.max_q2_error,
            report.max_c_error
        ),
    )?;
    Ok(report)
}

/// Minimizes the discrete limit functional and writes the minimizer.
pub fn run_limit_min(cfg: &ExperimentConfig, dir: &Path) -> Result<LimitMinimum> {
    cfg.validate()?;
    ensure_dir(dir)?;
    write_config_echo(dir, cfg)?;
    let spec = cfg.spec()?;
    let grid = cfg.plate_grid()?;
    let fnl = LimitFunctional::new(&spec, cfg.density()?);
    let min = fnl.minimize(&grid.plane, &cfg.limit_options())?;
    write_field(&dir.join(V3_CSV), &min.field)?;
    let constraints = affine_constraints(&min.field.values, &grid.plane)?;
    write_json(
        &dir.join("limit.json"),
        &serde_json::json!({
            "value": min.value,
            "iterations": min.iterations,
            "relative_residual": min.relative_residual,
            "solver": if cfg.limit.direct { "direct" } else { "cg" },
            "affine_constraints": constraints,
        }),
    )?;
    fs::write(
        dir.join(SUMMARY_TXT),
        format!(
            "limit minimization on {}x{}\nminimum I_gamma: {}\nsolver: {} ({} iterations, relative residual {:.3e})\n",
            grid.n1(),
            grid.n2(),
            num(min.value),
            if cfg.limit.direct { "direct" } else { "conjugate gradients" },
            min.iterations,
            min.relative_residual
        ),
    )?;
    Ok(min)
}

fn recovery_input(cfg: &ExperimentConfig, task: &str) -> Result<RecoveryInput> {
    let v3 = cfg.recovery_v3()?.ok_or_else(|| {
        Error::Config(format!("{task} needs a closed-form displacement in [recovery.v3]"))
    })?;
    Ok(RecoveryInput {
        v3,
        spec: cfg.spec()?,
        density: cfg.density()?,
    })
}

/// Rescaled recovery energies against the limit value, with a log-log fit of
/// the error.
pub fn run_recovery_sweep(cfg: &ExperimentConfig, dir: &Path) -> Result<RecoveryCurve> {
    cfg.validate()?;
    let inp = recovery_input(cfg, "recovery-sweep")?;
    ensure_dir(dir)?;
    write_config_echo(dir, cfg)?;
    let grid = cfg.plate_grid()?;
    let curve = rescaled_energy_curve(&inp, &cfg.sweep.h, &grid, cfg.recovery.gradient)?;
    write_csv(
        &dir.join(CURVE_CSV),
        &CURVE_HEADER,
        curve
            .points
            .iter()
            .map(|p| [num(p.h), num(p.rescaled_energy), num(p.reference_igamma), num(p.abs_error)]),
    )?;
    let note = curve
        .fit
        .is_none()
        .then_some("fewer than three points or errors at roundoff level");
    write_json(
        &dir.join(FIT_JSON),
        &FitRecord::new("recovery_rescaled_error", curve.fit.as_ref(), None, note),
    )?;
    let mut s = format!(
        "recovery sweep on {}x{}x{}\nreference I_gamma: {}\n",
        grid.n1(),
        grid.n2(),
        grid.m,
        num(curve.reference_igamma)
    );
    for p in &curve.points {
        s.push_str(&format!(
            "  h = {}: rescaled {} (refined {}), |error| {:.3e}\n",
            p.h,
            num(p.rescaled_energy),
            num(p.refined_rescaled_energy),
            p.abs_error
        ));
    }
    s.push_str(&fit_line("recovery_rescaled_error", curve.fit.as_ref(), None, note));
    s.push('\n');
    fs::write(dir.join(SUMMARY_TXT), s)?;
    Ok(curve)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsReport {
    pub max_abs_compatibility: f64,
    /// `(h, misfit, max local misfit, max rotation angle)` of the recovery sequence.
    pub misfit: Vec<[f64; 4]>,
    /// `(h, stretching term, bending term)` of the formal expansion.
    pub expansion: Vec<[f64; 3]>,
}

/// Bending compatibility field, recovery-sequence rotation misfit and the
/// formal two-term energy expansion.
pub fn run_diagnostics(cfg: &ExperimentConfig, dir: &Path) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    let inp = recovery_input(cfg, "diagnostics")?;
    ensure_dir(dir)?;
    write_config_echo(dir, cfg)?;
    let grid = cfg.plate_grid()?;
    let plane = &grid.plane;

    let compat = bending_compatibility_field(&inp.spec, plane.n1, plane.n2);
    write_csv(
        &dir.join("curvature.csv"),
        &["x1", "x2", "compatibility"],
        (0..plane.n1).flat_map(|i| {
            let compat = &compat;
            (0..plane.n2).map(move |j| {
                let [x, y] = plane.point(i, j);
                [num(x), num(y), num(compat[plane.index(i, j)])]
            })
        }),
    )?;
    let max_abs_compatibility = compat.iter().fold(0.0_f64, |a, v| a.max(v.abs()));

    let hs = &cfg.sweep.h;
    let misfit = Execution::default()
        .map(hs.len(), |n| -> Result<[f64; 4]> {
            let h = hs[n];
            let energy = PlateEnergy::new(&grid, &inp.spec, inp.density, h)?;
            let u = build_recovery(&inp, h, &grid)?;
            let d = rotation_field_diagnostic(&energy, &u)?;
            Ok([h, d.misfit, d.max_local_misfit, d.max_angle])
        })
        .into_iter()
        .enumerate()
        .map(|(n, r)| r.map_err(|e| e.at_h(hs[n])))
        .collect::<Result<Vec<_>>>()?;
    write_csv(
        &dir.join("rotation_misfit.csv"),
        &["h", "misfit", "max_local_misfit", "max_angle"],
        misfit.iter().map(|r| r.map(num)),
    )?;

    let terms = formal_two_term_expansion(&inp.v3, &inp.spec, &inp.density, plane);
    let gamma = inp.spec.gamma;
    let expansion: Vec<[f64; 3]> = hs
        .iter()
        .map(|&h| {
            let (s, b) = terms.scaled(gamma, h);
            [h, s, b]
        })
        .collect();
    write_csv(
        &dir.join("expansion.csv"),
        &["h", "stretching_term", "bending_term", "bending_dominates"],
        expansion
            .iter()
            .map(|r| [num(r[0]), num(r[1]), num(r[2]), (r[2] >= r[1]).to_string()]),
    )?;

    let pts: Vec<(f64, f64)> = misfit.iter().map(|r| (r[0], r[1])).collect();
    let fit = crate::harness::experiment::NamedFit::from_points("recovery_misfit", Some(gamma + 2.0), &pts);
    let mut s = format!(
        "diagnostics on {}x{}x{}\nmax |bending compatibility|: {:e}\nexpansion integrals: stretching {}, bending {}\n",
        grid.n1(),
        grid.n2(),
        grid.m,
        max_abs_compatibility,
        num(terms.stretching),
        num(terms.bending)
    );
    s.push_str(&fit_line(fit.name, fit.fit.as_ref(), fit.expected, fit.note.as_deref()));
    s.push('\n');
    fs::write(dir.join(SUMMARY_TXT), s)?;
    Ok(DiagnosticsReport {
        max_abs_compatibility,
        misfit,
        expansion,
    })
}
