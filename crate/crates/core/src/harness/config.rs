//! Experiment configuration, read from TOML.
//!
//! A configuration names a material, a prestrain (exponent and the two
//! planar tensor fields), the domain and grid, the thickness sweep and the
//! solver settings. Prestrain fields and out-of-plane displacements are
//! chosen from a small catalog of closed-form families:
//!
//! ```toml
//! [material]
//! kind = "svk"
//! mu = 1.0
//! lambda = 1.0
//!
//! [prestrain]
//! gamma = 3.0
//!
//! [prestrain.B]
//! kind = "polynomial"
//! params.terms = [
//!   { matrix = [[0, 0, 0], [0, 2, 0], [0, 0, 0]], powers = [2, 0] },
//! ]
//!
//! [grid]
//! n1 = 64
//! n2 = 64
//! m = 4
//! ```
//!
//! Missing sections fall back to defaults; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{AnalyticScalar, PlanarMatrixField};
use crate::grid::PlateGrid;
use crate::limit2d::LimitSolverOptions;
use crate::material::EnergyDensity;
use crate::optimize::LbfgsOptions;
use crate::prestrain::{PrestrainSpec, Rect};
use crate::recovery::GradientPath;
use crate::tensor::Mat3;

/// Smallest in-plane resolution accepted; the limit solver needs interior nodes
/// beyond the one-sided stencils.
pub const MIN_PLANAR_NODES: usize = 5;

/// Largest total degree of a polynomial displacement in the catalog.
pub const MAX_DISPLACEMENT_DEGREE: u32 = 6;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub material: MaterialConfig,
    pub prestrain: PrestrainConfig,
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub opt: OptConfig,
    #[serde(default)]
    pub limit: LimitConfig,
    #[serde(default)]
    pub recovery: RecoveryConfig,
    #[serde(default)]
    pub q2_check: Q2CheckConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaterialKind {
    Svk,
    Dist2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub kind: MaterialKind,
    /// Ignored by `dist2`, whose linearization is fixed.
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default = "one")]
    pub lambda: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        MaterialConfig {
            kind: MaterialKind::Svk,
            mu: 1.0,
            lambda: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrestrainConfig {
    pub gamma: f64,
    #[serde(rename = "S", default)]
    pub stretching: MatrixFieldConfig,
    #[serde(rename = "B", default)]
    pub bending: MatrixFieldConfig,
}

impl Default for PrestrainConfig {
    fn default() -> Self {
        PrestrainConfig {
            gamma: 3.0,
            stretching: MatrixFieldConfig::Zero,
            bending: MatrixFieldConfig::Zero,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixTerm {
    pub matrix: [[f64; 3]; 3],
    pub powers: [u32; 2],
}

/// Catalog of planar 3×3 tensor fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase", deny_unknown_fields)]
pub enum MatrixFieldConfig {
    #[default]
    Zero,
    Constant { matrix: [[f64; 3]; 3] },
    /// `Σ Mᵢ x^p y^q` with total degree at most 4.
    Polynomial { terms: Vec<MatrixTerm> },
    /// `A sin(k₁x + k₂y + φ)`.
    Trig {
        amplitude: [[f64; 3]; 3],
        k: [f64; 2],
        #[serde(default)]
        phase: f64,
    },
}

impl MatrixFieldConfig {
    pub fn build(&self) -> Result<PlanarMatrixField> {
        let finite = |m: &[[f64; 3]; 3]| m.iter().flatten().all(|v| v.is_finite());
        match self {
            MatrixFieldConfig::Zero => Ok(PlanarMatrixField::zero()),
            MatrixFieldConfig::Constant { matrix } => {
                if !finite(matrix) {
                    return Err(Error::Config("constant matrix field has non-finite entries".into()));
                }
                Ok(PlanarMatrixField::constant(Mat3(*matrix)))
            }
            MatrixFieldConfig::Polynomial { terms } => {
                if terms.iter().any(|t| !finite(&t.matrix)) {
                    return Err(Error::Config("polynomial matrix field has non-finite entries".into()));
                }
                let terms: Vec<(Mat3, [u32; 2])> =
                    terms.iter().map(|t| (Mat3(t.matrix), t.powers)).collect();
                PlanarMatrixField::polynomial(&terms)
            }
            MatrixFieldConfig::Trig { amplitude, k, phase } => {
                if !finite(amplitude) || !k.iter().chain([phase]).all(|v| v.is_finite()) {
                    return Err(Error::Config("trigonometric matrix field has non-finite parameters".into()));
                }
                Ok(PlanarMatrixField::trig(Mat3(*amplitude), *k, *phase))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarTerm {
    pub coef: f64,
    pub powers: [u32; 2],
}

/// Catalog of out-of-plane displacements used to build recovery sequences.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScalarFieldConfig {
    #[default]
    Zero,
    /// `Σ cᵢ x^p y^q`.
    Polynomial { terms: Vec<ScalarTerm> },
    /// `a sin(k₁x + φ₁) sin(k₂y + φ₂)`.
    Sine {
        amplitude: f64,
        k: [f64; 2],
        #[serde(default)]
        phase: [f64; 2],
    },
}

impl ScalarFieldConfig {
    pub fn build(&self) -> Result<AnalyticScalar> {
        match self {
            ScalarFieldConfig::Zero => Ok(AnalyticScalar::zero()),
            ScalarFieldConfig::Polynomial { terms } => {
                if let Some(t) = terms
                    .iter()
                    .find(|t| t.powers[0] + t.powers[1] > MAX_DISPLACEMENT_DEGREE)
                {
                    return Err(Error::Config(format!(
                        "displacement term x^{} y^{} exceeds degree {MAX_DISPLACEMENT_DEGREE}",
                        t.powers[0], t.powers[1]
                    )));
                }
                if terms.iter().any(|t| !t.coef.is_finite()) {
                    return Err(Error::Config("displacement coefficient is not finite".into()));
                }
                let coeffs: Vec<(f64, [u32; 2])> = terms.iter().map(|t| (t.coef, t.powers)).collect();
                Ok(AnalyticScalar::polynomial(&coeffs))
            }
            ScalarFieldConfig::Sine { amplitude, k, phase } => {
                if !std::iter::once(amplitude).chain(k).chain(phase).all(|v| v.is_finite()) {
                    return Err(Error::Config("sine displacement has non-finite parameters".into()));
                }
                Ok(AnalyticScalar::sine_product(*amplitude, *k, *phase))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// `[[x_min, x_max], [y_min, y_max]]`.
    pub rect: [[f64; 2]; 2],
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig {
            rect: [[0.0, 1.0], [0.0, 1.0]],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n1: usize,
    pub n2: usize,
    /// Gauss points across the thickness.
    pub m: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n1: 64, n2: 64, m: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Thickness values, strictly decreasing, each in `(0, 1/2]`.
    pub h: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            h: vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptConfig {
    /// Gradient tolerance relative to the initial gradient.
    pub tol: f64,
    pub max_iter: usize,
    /// Whether the sweep also minimizes the 3D energy from the recovery sequence.
    pub minimize: bool,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            tol: 1e-8,
            max_iter: 500,
            minimize: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitConfig {
    pub cg_tol: f64,
    pub cg_maxiter: usize,
    /// Use the banded Cholesky factorization instead of conjugate gradients.
    pub direct: bool,
}

impl Default for LimitConfig {
    fn default() -> Self {
        let d = LimitSolverOptions::default();
        LimitConfig {
            cg_tol: d.cg_tol,
            cg_maxiter: d.cg_max_iter,
            direct: d.direct,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryConfig {
    /// Displacement for the recovery sequence. When absent, the sweep builds
    /// it from the discrete limit minimizer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v3: Option<ScalarFieldConfig>,
    #[serde(default)]
    pub gradient: GradientPath,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Q2CheckConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for Q2CheckConfig {
    fn default() -> Self {
        Q2CheckConfig { samples: 1000, seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            formats: default_formats(),
        }
    }
}

fn default_formats() -> Vec<String> {
    vec!["csv".into()]
}

fn one() -> f64 {
    1.0
}

const KNOWN_FORMATS: [&str; 2] = ["csv", "json"];

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(one_line(&e.to_string())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// The parsed configuration, serialized back to TOML with every default filled in.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.density()?;
        self.spec()?;
        if self.grid.n1 < MIN_PLANAR_NODES || self.grid.n2 < MIN_PLANAR_NODES {
            return Err(Error::Config(format!(
                "grid needs at least {MIN_PLANAR_NODES} nodes per direction (got {}x{})",
                self.grid.n1, self.grid.n2
            )));
        }
        self.plate_grid()?;
        validate_sweep(&self.sweep.h)?;
        if !(self.opt.tol > 0.0 && self.opt.tol.is_finite()) {
            return Err(Error::Config(format!("opt.tol must be positive (got {})", self.opt.tol)));
        }
        if !(self.limit.cg_tol > 0.0 && self.limit.cg_tol < 1.0) {
            return Err(Error::Config(format!(
                "limit.cg_tol must lie in (0, 1) (got {})",
                self.limit.cg_tol
            )));
        }
        if self.limit.cg_maxiter == 0 {
            return Err(Error::Config("limit.cg_maxiter must be positive".into()));
        }
        if let Some(v3) = &self.recovery.v3 {
            v3.build()?;
        }
        if self.q2_check.samples == 0 {
            return Err(Error::Config("q2_check.samples must be positive".into()));
        }
        if let Some(f) = self
            .output
            .formats
            .iter()
            .find(|f| !KNOWN_FORMATS.contains(&f.as_str()))
        {
            return Err(Error::Config(format!(
                "unknown output format '{f}' (expected one of {})",
                KNOWN_FORMATS.join(", ")
            )));
        }
        Ok(())
    }

    pub fn density(&self) -> Result<EnergyDensity> {
        match self.material.kind {
            MaterialKind::Svk => EnergyDensity::svk(self.material.mu, self.material.lambda),
            MaterialKind::Dist2 => Ok(EnergyDensity::Dist2),
        }
    }

    pub fn rect(&self) -> Result<Rect> {
        let [x, y] = self.domain.rect;
        Rect::new(x, y)
    }

    pub fn spec(&self) -> Result<PrestrainSpec> {
        PrestrainSpec::new(
            self.prestrain.stretching.build()?,
            self.prestrain.bending.build()?,
            self.prestrain.gamma,
            self.rect()?,
        )
    }

    pub fn plate_grid(&self) -> Result<PlateGrid> {
        PlateGrid::new(self.rect()?, self.grid.n1, self.grid.n2, self.grid.m)
    }

    pub fn lbfgs_options(&self) -> LbfgsOptions {
        LbfgsOptions {
            max_iter: self.opt.max_iter,
            tol_rel: self.opt.tol,
            ..LbfgsOptions::default()
        }
    }

    pub fn limit_options(&self) -> LimitSolverOptions {
        LimitSolverOptions {
            cg_tol: self.limit.cg_tol,
            cg_max_iter: self.limit.cg_maxiter,
            direct: self.limit.direct,
        }
    }

    pub fn recovery_v3(&self) -> Result<Option<AnalyticScalar>> {
        self.recovery.v3.as_ref().map(|v| v.build()).transpose()
    }

    pub fn wants_format(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }
}

/// Checks a thickness sweep: non-empty, strictly decreasing, each `h ∈ (0, 1/2]`.
pub fn validate_sweep(hs: &[f64]) -> Result<()> {
    if hs.is_empty() {
        return Err(Error::Config("sweep.h is empty".into()));
    }
    if let Some(h) = hs.iter().find(|&&h| !(h > 0.0 && h <= 0.5)) {
        return Err(Error::Config(format!("sweep.h values must lie in (0, 1/2] (got {h})")));
    }
    if hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("sweep.h values must be strictly decreasing".into()));
    }
    Ok(())
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    const INCOMPATIBLE: &str = r#"
name = "incompatible"

[material]
kind = "svk"
mu = 1.0
lambda = 1.0

[prestrain]
gamma = 3.0

[prestrain.B]
kind = "polynomial"
params.terms = [
  { matrix = [[1, 0, 0], [0, 0, 0], [0, 0, 0]], powers = [0, 2] },
  { matrix = [[0, 0, 0], [0, 1, 0], [0, 0, 0]], powers = [2, 0] },
]

[grid]
n1 = 16
n2 = 16
m = 3

[sweep]
h = [0.125, 0.0625, 0.03125]
"#;

    #[test]
    fn parses_catalog_fields() {
        let cfg = ExperimentConfig::from_toml_str(INCOMPATIBLE).unwrap();
        assert_eq!(cfg.grid, GridConfig { n1: 16, n2: 16, m: 3 });
        let spec = cfg.spec().unwrap();
        assert!(spec.stretching.is_zero());
        let b = spec.bending.value([0.5, 0.25]);
        assert!((b.0[0][0] - 0.0625).abs() < 1e-15 && (b.0[1][1] - 0.25).abs() < 1e-15);
        assert_eq!(cfg.opt, OptConfig::default());
        assert!(cfg.recovery_v3().unwrap().is_none());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(INCOMPATIBLE).unwrap();
        let echo = cfg.to_toml_string().unwrap();
        let again = ExperimentConfig::from_toml_str(&echo).unwrap();
        assert_eq!(cfg, again);
        assert!(echo.contains("cg_tol"), "defaults are written out:\n{echo}");
    }

    #[test]
    fn displacement_catalog() {
        let text = r#"
[prestrain]
gamma = 3.0
[recovery]
gradient = "analytic"
[recovery.v3]
kind = "sine"
params = { amplitude = 1.0, k = [3.141592653589793, 3.141592653589793] }
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        let v = cfg.recovery_v3().unwrap().unwrap();
        assert!((v.value([0.5, 0.5]) - 1.0).abs() < 1e-15);
        assert_eq!(cfg.recovery.gradient, GradientPath::Analytic);
    }

    #[test]
    fn rejects_invalid_input() {
        let cases = [
            ("[prestrain]\ngamma = 2.0\n", "gamma > 2"),
            ("[prestrain]\ngamma = 3.0\n[sweep]\nh = [0.1, 0.2, 0.05]\n", "strictly decreasing"),
            ("[prestrain]\ngamma = 3.0\n[sweep]\nh = [0.75]\n", "(0, 1/2]"),
            ("[prestrain]\ngamma = 3.0\n[material]\nkind = \"neo\"\n", "unknown variant"),
            ("[prestrain]\ngamma = 3.0\n[prestrain.S]\nkind = \"spiral\"\n", "unknown variant"),
            ("[prestrain]\ngamma = 3.0\n[material]\nkind = \"svk\"\nmu = -1.0\n", "mu"),
            ("[prestrain]\ngamma = 3.0\n[grid]\nn1 = 4\nn2 = 8\nm = 3\n", "at least 5"),
            ("[prestrain]\ngamma = 3.0\n[output]\nformats = [\"xlsx\"]\n", "xlsx"),
            ("[prestrain]\ngamma = 3.0\nbogus = 1\n", "bogus"),
            (
                "[prestrain]\ngamma = 3.0\n[prestrain.B]\nkind = \"polynomial\"\nparams.terms = [{ matrix = [[1,0,0],[0,0,0],[0,0,0]], powers = [3, 2] }]\n",
                "degree 4",
            ),
        ];
        for (text, needle) in cases {
            let err = ExperimentConfig::from_toml_str(text).unwrap_err();
            assert_eq!(err.category(), "config", "{text}");
            let msg = err.to_string();
            assert!(msg.contains(needle), "'{msg}' should mention '{needle}'");
            assert!(!msg.contains('\n'), "error must be a single line: {msg}");
        }
    }

    #[test]
    fn dist2_ignores_moduli() {
        let cfg = ExperimentConfig::from_toml_str(
            "[material]\nkind = \"dist2\"\n[prestrain]\ngamma = 4.0\n",
        )
        .unwrap();
        assert_eq!(cfg.density().unwrap(), EnergyDensity::Dist2);
    }
}
