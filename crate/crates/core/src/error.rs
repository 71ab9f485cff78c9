use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("pole {0:?} lies outside the domain")]
    PoleOutside([f64; 2]),
    #[error("pole {pole:?} is within {dist:.3e} of the boundary (h_max = {h_max:.3e})")]
    PoleNearBoundary { pole: [f64; 2], dist: f64, h_max: f64 },
    #[error("element {0} is degenerate or inverted")]
    DegenerateElement(usize),
    #[error("mesh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("point {0:?} lies on the cut segment")]
    OnCut([f64; 2]),
    #[error("point {0:?} lies outside the mesh")]
    OutsideMesh([f64; 2]),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("eigenvalue {index} is not simple (relative gap {gap:.3e})")]
    NotSimple { index: usize, gap: f64 },
    #[error("phase is ambiguous: overlap magnitude {0:.3e}")]
    AmbiguousPhase(f64),
    #[error("root bracketing failed: {0}")]
    Bracket(String),
    #[error("Bessel evaluation overflow for x = {0}")]
    BesselOverflow(f64),
    #[error("radius {radius} is under-resolved (local diameter {diameter:.3e})")]
    UnderResolved { radius: f64, diameter: f64 },
    #[error("circle of radius {radius} around {center:?} leaves the domain")]
    CircleOutside { center: [f64; 2], radius: f64 },
    #[error("coefficient for mode {mode} depends on R (spread {spread:.3e})")]
    RDependence { mode: i32, spread: f64 },
    #[error("field vanishes on every sampled circle")]
    DegenerateField,
    #[error("H({0}) is not positive")]
    NonPositiveH(f64),
    #[error("only {0} samples above the noise floor")]
    InsufficientSamples(usize),
    #[error("truncation error too large: {0}")]
    Truncation(String),
    #[error("no usable radii above the resolution floor")]
    NoRadii,
    #[error("sweep sample |a| = {abs_a}: {source}")]
    Sample { abs_a: f64, source: Box<Error> },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// The underlying error, unwrapping sweep-sample context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Sample { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
