use thiserror::Error;

/// Errors raised by the net constructions, predicates and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate quadrilateral: {0}")]
    DegenerateQuad(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("net is not circular at quad ({m}, {n}): residual {residual:e}")]
    NotCircular { m: i32, n: i32, residual: f64 },
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported exponent gamma = {0}; expected a value in (0, 2) or (2, 4)")]
    UnsupportedGamma(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("pole on grid at vertex ({m}, {n})")]
    PoleOnGrid { m: i32, n: i32 },
    #[error("propagation hit infinity at vertex ({m}, {n})")]
    PropagationBlowup { m: i32, n: i32 },
    #[error("zero dg on edge ({0:?}) -> ({1:?})")]
    ZeroDg((i32, i32), (i32, i32)),
    #[error("quad loop at ({m}, {n}) fails to close: residual {residual:e}")]
    ClosureFailure { m: i32, n: i32, residual: f64 },
    #[error("net is not isothermic for the given labels: worst residual {0:e}")]
    NotIsothermic(f64),
    #[error("normal bundle inconsistent at quad ({m}, {n}): residual {residual:e}")]
    InconsistentBundle { m: i32, n: i32, residual: f64 },
    #[error("quad is not coplanar: residual {0:e}")]
    NotCoplanar(f64),
    #[error("quad area vanishes")]
    ZeroArea,
    #[error("boundary is not reflectable: {0}")]
    NotReflectable(String),
    #[error("boundary is not planar: {0}")]
    NotPlanarBoundary(String),
    #[error("orbit exceeds {0} group elements")]
    OrbitExplosion(usize),
    #[error("infeasible boundary-value problem: {0}")]
    InfeasibleSpec(String),
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best: Box<crate::bvp::SolveResult>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Variant name, for machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateQuad(_) => "DegenerateQuad",
            Error::DegenerateFit(_) => "DegenerateFit",
            Error::NotCircular { .. } => "NotCircular",
            Error::DomainMismatch(_) => "DomainMismatch",
            Error::Parse { .. } => "ParseError",
            Error::Io(_) => "Io",
            Error::UnsupportedGamma(_) => "UnsupportedGamma",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::PoleOnGrid { .. } => "PoleOnGrid",
            Error::PropagationBlowup { .. } => "PropagationBlowup",
            Error::ZeroDg(..) => "ZeroDg",
            Error::ClosureFailure { .. } => "ClosureFailure",
            Error::NotIsothermic(_) => "NotIsothermic",
            Error::InconsistentBundle { .. } => "InconsistentBundle",
            Error::NotCoplanar(_) => "NotCoplanar",
            Error::ZeroArea => "ZeroArea",
            Error::NotReflectable(_) => "NotReflectable",
            Error::NotPlanarBoundary(_) => "NotPlanarBoundary",
            Error::OrbitExplosion(_) => "OrbitExplosion",
            Error::InfeasibleSpec(_) => "InfeasibleSpec",
            Error::NoConvergence { .. } => "NoConvergence",
        }
    }

    /// Errors caused by the request rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Io(_)
                | Error::UnsupportedGamma(_)
                | Error::InvalidGrid(_)
                | Error::DomainMismatch(_)
                | Error::InfeasibleSpec(_)
                | Error::NotReflectable(_)
                | Error::NotPlanarBoundary(_)
        )
    }
}
