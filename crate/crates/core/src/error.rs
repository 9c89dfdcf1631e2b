use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CopopError {
    #[error("{what} = {value} is outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid self-map: {0}")]
    InvalidMap(String),

    #[error("not a self-map of the disk: |φ| = {max_modulus} at boundary point e^(i·{angle})")]
    NotSelfMap { max_modulus: f64, angle: f64 },

    #[error("constant self-map: the counting function is degenerate")]
    ConstantMap,

    #[error("root finder failed for degree {degree}: residual {residual:e} after {iterations} iterations")]
    RootFinding {
        degree: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("quadrature refinement stalled at {nodes} nodes with relative change {achieved:e}")]
    QuadratureRefinement { nodes: usize, achieved: f64 },

    #[error("non-finite integrand value at z = {re} + {im}i")]
    NonFinite { re: f64, im: f64 },

    #[error("kernel diagonal at |z| = {modulus} needs about {required} moments but only {available} are available")]
    InsufficientMoments {
        modulus: f64,
        required: usize,
        available: usize,
    },

    #[error("Jacobi SVD did not converge after {sweeps} sweeps (off-diagonal {off:e})")]
    SvdNoConvergence { sweeps: usize, off: f64 },

    #[error("geometry: {0}")]
    Geometry(String),
}

pub type Result<T> = std::result::Result<T, CopopError>;
