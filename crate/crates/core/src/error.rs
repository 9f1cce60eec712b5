use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Mesh topology is broken (hanging nodes, overlapping or non-manifold triangles).
    #[error("nonconforming mesh: {0}")]
    Structural(String),
    #[error("degenerate geometry: {0}")]
    Geometric(String),
    #[error("point outside domain: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("basis construction failed: {0}")]
    Construction(String),
    #[error("singular geometry: {0}")]
    Singular(String),
    #[error("boundary fitting failed: {0}")]
    Fitting(String),
    #[error("NURBS conversion failed: {0}")]
    Conversion(String),
    #[error("projection failed: {0}")]
    Projection(String),
    #[error("optimization failed: {0}")]
    Optimization(String),
    #[error("unsupported: {0}")]
    Capability(String),
    #[error("linear solver failed: {0}")]
    Solver(String),
    #[error("level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI and the C API.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Structural(_) => "nonconforming",
            Error::Geometric(_) => "geometric",
            Error::Domain(_) => "domain",
            Error::Validation(_) => "validation",
            Error::Configuration(_) => "configuration",
            Error::Construction(_) => "construction",
            Error::Singular(_) => "singular",
            Error::Fitting(_) => "fitting",
            Error::Conversion(_) => "conversion",
            Error::Projection(_) => "projection",
            Error::Optimization(_) => "optimization",
            Error::Capability(_) => "capability",
            Error::Solver(_) => "solver",
            Error::AtLevel { source, .. } => source.kind(),
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub fn at_level(self, level: usize) -> Error {
        Error::AtLevel {
            level,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
