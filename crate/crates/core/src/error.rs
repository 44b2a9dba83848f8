use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite argument {0} passed to kernel evaluation")]
    Domain(f64),

    #[error("matrix is singular (zero pivot in column {pivot})")]
    Singular { pivot: usize },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("eigenvalue {re} + {im}i of a matrix pair is not real within tolerance")]
    SpectralReality { re: f64, im: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid boundary condition: {0}")]
    InvalidBoundary(String),

    #[error("invalid problem definition: {0}")]
    InvalidProblem(String),

    #[error("potential evaluation failed at x = {x}: {reason}")]
    Potential { x: f64, reason: String },

    #[error("R-matrix extraction at x = {x} is ill-conditioned (cond = {cond:e})")]
    SingularExtraction { x: f64, cond: f64 },

    #[error("phase update failed on [{x_lo}, {x_hi}] after repeated interval splitting")]
    PhaseStep { x_lo: f64, x_hi: f64 },

    #[error("index function is not integral at E = {energy} (residual {residual:e})")]
    IndexIntegrity { energy: f64, residual: f64 },

    #[error("tolerance {0} outside the supported range [1e-12, 1e-2]")]
    Tolerance(f64),

    #[error("mesh would need more than {limit} intervals")]
    MeshInfeasible { limit: usize },

    #[error("eigenvalue index {k} not found below E = {e_max} (index there is {count})")]
    IndexOutOfRange { k: usize, e_max: f64, count: usize },

    #[error("Newton iteration for k = {k} stagnated after {iters} iterations (last E = {energy}, |dE| = {step:e})")]
    Convergence { k: usize, iters: usize, energy: f64, step: f64 },

    #[error("{0} is not an eigenvalue (empty null space of the matching matrix)")]
    NotAnEigenvalue(f64),

    #[error("eigenfunction norm squared {0} is not positive")]
    Normalization(f64),

    #[error("config error: {0}")]
    Config(String),
}
