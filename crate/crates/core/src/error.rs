use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular input: {0}")]
    Singular(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate element: {0}")]
    DegenerateElement(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("solver did not converge: {0}")]
    NoConvergence(String),
    #[error("refinement check failed: {0}")]
    Refinement(String),
    #[error("at h = {h}: {source}")]
    AtStep {
        h: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable category used by the command line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Singular(_) => "singular",
            Error::Domain(_) => "domain",
            Error::DegenerateElement(_) => "degenerate-element",
            Error::Config(_) => "config",
            Error::DegenerateInput(_) => "degenerate-input",
            Error::NoConvergence(_) => "no-convergence",
            Error::Refinement(_) => "refinement",
            Error::AtStep { source, .. } => source.category(),
            Error::Io(_) | Error::Csv(_) => "io",
            Error::Json(_) => "io",
        }
    }

    pub fn at_h(self, h: f64) -> Self {
        Error::AtStep {
            h,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
