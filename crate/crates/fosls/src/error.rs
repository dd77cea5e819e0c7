use thiserror::Error;

/// Errors surfaced by mesh construction, assembly and the linear solvers.
#[derive(Debug, Error)]
pub enum FoslsError {
    #[error("degenerate element map: det J = {det:.3e} <= 0 at reference point ({x:.4}, {y:.4}) of element {element}")]
    DegenerateMap {
        element: usize,
        x: f64,
        y: f64,
        det: f64,
    },

    #[error("unsupported quadrature degree {0} (supported range 1..=40)")]
    UnsupportedQuadDegree(usize),

    #[error("unknown manufactured solution case `{0}`")]
    UnknownCase(String),

    #[error("matrix is not positive definite: pivot {pivot} has value {value:.3e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("iterative solver breakdown: negative curvature p'Ap = {0:.3e}")]
    NegativeCurvature(f64),

    #[error("solver did not reach tolerance: relative residual {residual:.3e} after {iterations} iterations")]
    ToleranceNotMet { residual: f64, iterations: usize },

    #[error("constraint block is rank deficient: Schur pivot {pivot} has value {value:.3e}")]
    RankDeficientConstraint { pivot: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("solver failed at study level {level}: {source}")]
    StudyLevel {
        level: usize,
        #[source]
        source: Box<FoslsError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FoslsError>;
