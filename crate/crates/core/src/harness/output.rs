//! Writers for experiment artefacts: CSV tables, fit JSON, summaries and the
//! configuration echo.
//!
//! Floating-point values are written in Rust's shortest round-trip notation,
//! so identical runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::experiment::{run_gamma_limit_experiment, ExperimentReport, NamedFit};
use crate::harness::fit::LogLogFit;
use crate::optimize::IterationRecord;
use crate::scalar::GridScalar;

pub const REPORT_CSV: &str = "report.csv";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const CONFIG_ECHO: &str = "config_echo.toml";
pub const FITS_JSON: &str = "fits.json";
pub const CURVE_CSV: &str = "curve.csv";
pub const FIT_JSON: &str = "fit.json";
pub const V3_CSV: &str = "v3.csv";

pub const REPORT_HEADER: [&str; 16] = [
    "h",
    "e3d_recovery",
    "e3d_minimized",
    "rescaled_recovery",
    "rescaled_minimized",
    "half_res_rescaled_recovery",
    "reference_Igamma",
    "recovery_misfit",
    "minimized_misfit",
    "displacement_rel_l2",
    "termination",
    "iterations",
    "inverted",
    "flags",
    "abs_error",
    "iteration_log",
];

pub const CURVE_HEADER: [&str; 4] = ["h", "rescaled_energy", "reference_Igamma", "abs_error"];

/// Shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV table into its header and string rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, csv::Error>>()?;
    Ok((header, rows))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_config_echo(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    fs::write(dir.join(CONFIG_ECHO), cfg.to_toml_string()?)?;
    Ok(())
}

/// `(iter, energy, grad_norm, step)` per optimizer iteration.
pub fn write_iteration_log(path: &Path, log: &[IterationRecord]) -> Result<()> {
    write_csv(
        path,
        &["iter", "energy", "grad_norm", "step"],
        log.iter()
            .map(|r| [r.iter.to_string(), num(r.energy), num(r.grad_norm), num(r.step)]),
    )
}

/// `(x1, x2, V3)` on the nodes of the field's grid.
pub fn write_field(path: &Path, field: &GridScalar) -> Result<()> {
    let plane = field.plane()?;
    write_csv(
        path,
        &["x1", "x2", "V3"],
        (0..plane.n1).flat_map(|i| {
            let plane = &plane;
            (0..plane.n2).map(move |j| {
                let [x, y] = plane.point(i, j);
                [num(x), num(y), num(field.values[plane.index(i, j)])]
            })
        }),
    )
}

/// Fit JSON: `slope`, `intercept`, `r2` (null when undefined) and a note.
#[derive(Serialize)]
pub struct FitRecord<'a> {
    pub name: &'a str,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    pub slope_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<&'a str>,
}

impl<'a> FitRecord<'a> {
    pub fn new(name: &'a str, fit: Option<&LogLogFit>, expected: Option<f64>, note: Option<&'a str>) -> Self {
        FitRecord {
            name,
            slope: fit.map(|f| f.slope),
            intercept: fit.map(|f| f.intercept),
            r2: fit.map(|f| f.r2),
            slope_stderr: fit.map(|f| f.slope_stderr),
            expected,
            note,
        }
    }

    fn from_named(f: &'a NamedFit) -> Self {
        Self::new(f.name, f.fit.as_ref(), f.expected, f.note.as_deref())
    }
}

/// One summary line: slope with its standard-error band, or why it is undefined.
pub fn fit_line(name: &str, fit: Option<&LogLogFit>, expected: Option<f64>, note: Option<&str>) -> String {
    match fit {
        Some(f) => {
            let mut s = format!(
                "{name}: slope = {:.4} ± {:.4} [{:.4}, {:.4}], r2 = {:.6}",
                f.slope,
                f.slope_stderr,
                f.slope - 2.0 * f.slope_stderr,
                f.slope + 2.0 * f.slope_stderr,
                f.r2
            );
            if let Some(e) = expected {
                s.push_str(&format!(", expected {e}"));
            }
            s
        }
        None => format!("{name}: slope = undefined ({})", note.unwrap_or("no data")),
    }
}

fn iteration_log_name(n: usize, h: f64) -> String {
    format!("iterations_{n:02}_h{h}.csv")
}

/// Writes every artefact of a sweep into `dir`.
pub fn write_experiment(dir: &Path, cfg: &ExperimentConfig, report: &ExperimentReport) -> Result<()> {
    ensure_dir(dir)?;
    write_config_echo(dir, cfg)?;
    let mut logs = Vec::new();
    for (n, r) in report.rows.iter().enumerate() {
        if r.log.is_empty() {
            logs.push(String::new());
            continue;
        }
        let name = iteration_log_name(n, r.h);
        write_iteration_log(&dir.join(&name), &r.log)?;
        logs.push(name);
    }
    write_csv(
        &dir.join(REPORT_CSV),
        &REPORT_HEADER,
        report.rows.iter().zip(&logs).map(|(r, log)| {
            [
                num(r.h),
                num(r.e3d_recovery),
                opt_num(r.e3d_minimized),
                num(r.rescaled_recovery),
                opt_num(r.rescaled_minimized),
                num(r.half_res_rescaled_recovery),
                num(r.reference_igamma),
                num(r.recovery_misfit),
                opt_num(r.minimized_misfit),
                opt_num(r.displacement_rel_l2),
                r.termination.map(|t| t.label().to_string()).unwrap_or_default(),
                r.iterations.to_string(),
                r.inverted.to_string(),
                r.flags.join(";"),
                num((r.rescaled_recovery - r.reference_igamma).abs()),
                log.clone(),
            ]
        }),
    )?;
    write_field(&dir.join(V3_CSV), &report.limit_field)?;
    let fits: Vec<FitRecord<'_>> = report.fits.iter().map(FitRecord::from_named).collect();
    write_json(&dir.join(FITS_JSON), &fits)?;
    fs::write(dir.join(SUMMARY_TXT), experiment_summary(report))?;
    Ok(())
}

pub fn experiment_summary(report: &ExperimentReport) -> String {
    let mut s = String::new();
    if let Some(name) = &report.name {
        s.push_str(&format!("experiment: {name}\n"));
    }
    let m = report.density.moduli();
    s.push_str(&format!(
        "density: {} (mu = {}, lambda = {}), gamma = {}\n",
        report.density.name(),
        m.mu,
        m.lambda,
        report.gamma
    ));
    s.push_str(&format!(
        "grid: {}x{}x{} (half resolution {}x{}x{})\n",
        report.grid[0], report.grid[1], report.grid[2], report.half_grid[0], report.half_grid[1], report.half_grid[2]
    ));
    s.push_str(&format!(
        "limit minimum: {} ({}, {} iterations, relative residual {:.3e})\n",
        num(report.limit.value),
        if report.limit.direct { "direct" } else { "conjugate gradients" },
        report.limit.iterations,
        report.limit.relative_residual
    ));
    s.push_str(&format!(
        "reference I_gamma: {} ({})\n",
        num(report.reference_igamma),
        report.reference_source.label()
    ));
    s.push_str(&format!("sweep points: {}\n", report.rows.len()));
    for r in &report.rows {
        if !r.flags.is_empty() {
            s.push_str(&format!("  h = {}: {}\n", r.h, r.flags.join(", ")));
        }
    }
    s.push_str("fits (log-log, ± one standard error, bracket = two):\n");
    for f in &report.fits {
        s.push_str("  ");
        s.push_str(&fit_line(f.name, f.fit.as_ref(), f.expected, f.note.as_deref()));
        s.push('\n');
    }
    match &report.aborted {
        Some(e) => s.push_str(&format!("status: aborted: {e}\n")),
        None => s.push_str("status: complete\n"),
    }
    s
}

/// Runs the sweep and writes its artefacts. When a sweep point fails, the
/// partial report is written first and the point's error is returned.
pub fn run_and_write(cfg: &ExperimentConfig, dir: &Path) -> Result<ExperimentReport> {
    let (report, err) = run_gamma_limit_experiment(cfg)?;
    write_experiment(dir, cfg, &report)?;
    match err {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

/// Collects the fits of previously written `report.csv` / `curve.csv` files in
/// `dir` and writes a combined `summary.txt`. Returns the summary text.
pub fn aggregate_report(dir: &Path) -> Result<String> {
    let mut s = String::new();
    let mut found = false;
    let report = dir.join(REPORT_CSV);
    if report.exists() {
        found = true;
        let (header, rows) = read_csv(&report)?;
        s.push_str(&format!("{}: {} rows\n", REPORT_CSV, rows.len()));
        for (col, name) in [
            ("e3d_recovery", "recovery_energy"),
            ("e3d_minimized", "minimized_energy"),
            ("recovery_misfit", "recovery_misfit"),
            ("abs_error", "recovery_rescaled_error"),
            ("displacement_rel_l2", "displacement_error"),
        ] {
            let fit = column_fit(&header, &rows, col, name, &report)?;
            s.push_str("  ");
            s.push_str(&fit_line(name, fit.fit.as_ref(), None, fit.note.as_deref()));
            s.push('\n');
        }
    }
    let curve = dir.join(CURVE_CSV);
    if curve.exists() {
        found = true;
        let (header, rows) = read_csv(&curve)?;
        s.push_str(&format!("{}: {} rows\n", CURVE_CSV, rows.len()));
        let fit = column_fit(&header, &rows, "abs_error", "recovery_rescaled_error", &curve)?;
        s.push_str("  ");
        s.push_str(&fit_line(fit.name, fit.fit.as_ref(), None, fit.note.as_deref()));
        s.push('\n');
    }
    if !found {
        return Err(Error::DegenerateInput(format!(
            "no {REPORT_CSV} or {CURVE_CSV} in {}",
            dir.display()
        )));
    }
    fs::write(dir.join(SUMMARY_TXT), &s)?;
    Ok(s)
}

fn column_fit(
    header: &[String],
    rows: &[Vec<String>],
    col: &str,
    name: &'static str,
    path: &PathBuf,
) -> Result<NamedFit> {
    let find = |c: &str| {
        header.iter().position(|h| h == c).ok_or_else(|| {
            Error::DegenerateInput(format!("{} has no '{c}' column", path.display()))
        })
    };
    let (hi, ci) = (find("h")?, find(col)?);
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::DegenerateInput(format!("{}: '{s}' is not a number", path.display())))
    };
    let mut pts = Vec::new();
    for row in rows {
        if row[ci].is_empty() {
            continue;
        }
        pts.push((parse(&row[hi])?, parse(&row[ci])?));
    }
    Ok(NamedFit::from_points(name, None, &pts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            r#"
name = "determinism"
[prestrain]
gamma = 3.0
[prestrain.B]
kind = "constant"
params.matrix = [[1, 0, 0], [0, 0.5, 0], [0, 0, 0]]
[grid]
n1 = 10
n2 = 10
m = 3
[sweep]
h = [0.125, 0.0625, 0.03125]
[opt]
tol = 1e-8
max_iter = 20
minimize = true
[limit]
cg_tol = 1e-10
cg_maxiter = 100000
direct = false
"#,
        )
        .unwrap()
    }

    fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<_> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
            .collect();
        files.sort();
        files
    }

    #[test]
    fn repeated_runs_write_identical_files() {
        let cfg = small_config();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_and_write(&cfg, a.path()).unwrap();
        run_and_write(&cfg, b.path()).unwrap();
        let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
        assert_eq!(sa.len(), sb.len());
        for (fa, fb) in sa.iter().zip(&sb) {
            assert_eq!(fa.0, fb.0);
            assert!(fa.1 == fb.1, "{} differs between runs", fa.0);
        }
        // re-running from the echoed configuration reproduces the report
        let echo = fs::read_to_string(a.path().join(CONFIG_ECHO)).unwrap();
        let c = tempfile::tempdir().unwrap();
        run_and_write(&ExperimentConfig::from_toml_str(&echo).unwrap(), c.path()).unwrap();
        assert!(snapshot(c.path()) == sa, "echoed configuration gives a different report");
        let names: Vec<&str> = sa.iter().map(|f| f.0.as_str()).collect();
        for expected in [REPORT_CSV, SUMMARY_TXT, CONFIG_ECHO, FITS_JSON, V3_CSV, "iterations_00_h0.125.csv"] {
            assert!(names.contains(&expected), "{expected} missing from {names:?}");
        }
    }

    #[test]
    fn written_tables_have_headers_and_round_trip() {
        let cfg = small_config();
        let dir = tempfile::tempdir().unwrap();
        let report = run_and_write(&cfg, dir.path()).unwrap();
        let (header, rows) = read_csv(&dir.path().join(REPORT_CSV)).unwrap();
        assert_eq!(header, REPORT_HEADER);
        assert_eq!(rows.len(), 3);
        for (row, r) in rows.iter().zip(&report.rows) {
            assert_eq!(row[0].parse::<f64>().unwrap(), r.h);
            assert_eq!(row[1].parse::<f64>().unwrap(), r.e3d_recovery);
        }
        let (header, rows) = read_csv(&dir.path().join("iterations_00_h0.125.csv")).unwrap();
        assert_eq!(header, ["iter", "energy", "grad_norm", "step"]);
        assert_eq!(rows.len(), report.rows[0].log.len());
        let (header, rows) = read_csv(&dir.path().join(V3_CSV)).unwrap();
        assert_eq!(header, ["x1", "x2", "V3"]);
        assert_eq!(rows.len(), 100);

        let echo = fs::read_to_string(dir.path().join(CONFIG_ECHO)).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&echo).unwrap(), cfg);
        let summary = fs::read_to_string(dir.path().join(SUMMARY_TXT)).unwrap();
        assert!(summary.contains("minimized_energy: slope ="), "{summary}");
        assert!(summary.contains("status: complete"));
        let fits: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(FITS_JSON)).unwrap()).unwrap();
        assert!(fits.as_array().unwrap().iter().any(|f| f["name"] == "recovery_energy"));
    }

    #[test]
    fn aggregate_refits_written_tables() {
        let cfg = small_config();
        let dir = tempfile::tempdir().unwrap();
        let report = run_and_write(&cfg, dir.path()).unwrap();
        let text = aggregate_report(dir.path()).unwrap();
        let slope = report.fit("minimized_energy").unwrap().fit.unwrap().slope;
        assert!(text.contains(&format!("minimized_energy: slope = {slope:.4}")), "{text}");

        let empty = tempfile::tempdir().unwrap();
        let err = aggregate_report(empty.path()).unwrap_err();
        assert_eq!(err.category(), "degenerate-input");
    }

    #[test]
    fn undefined_fit_line() {
        let line = fit_line("x", None, None, Some("too few points"));
        assert_eq!(line, "x: slope = undefined (too few points)");
    }
}
