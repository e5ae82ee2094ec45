use thiserror::Error;

pub type Result<T, E = RomError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum RomError {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid medium: {0}")]
    Medium(String),

    #[error("system matrix is not coercive at lambda = {lambda} (min q = {min_q})")]
    NonCoercive { lambda: f64, min_q: f64 },

    #[error(
        "spectral points {i} and {j} coincide (b = {value}); the Loewner divided differences \
         divide by b_i - b_j, so all spectral points must be pairwise distinct"
    )]
    CoincidentPoints { i: usize, j: usize, value: f64 },

    #[error("invalid spectral points: {0}")]
    SpectralPoints(String),

    #[error("ill-posed data: mass matrix eigenvalue {eigenvalue:e} is below -{floor:e}")]
    IllPosed { eigenvalue: f64, floor: f64 },

    #[error("singular pencil at lambda = {0}")]
    SingularPencil(f64),

    #[error("structure mismatch: {0}")]
    Structure(String),

    #[error("invalid rational interpolant: {0}")]
    InvalidInterpolant(String),

    #[error("degenerate interpolant: {0}")]
    DegenerateInterpolant(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
