use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("wrong dimension: expected {expected}x{expected}, found {rows}x{cols}")]
    WrongDimension {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("empty Kraus set")]
    EmptyKrausSet,
    #[error("channel is not trace preserving: max |sum K^dag K - I| = {deviation:e}")]
    NotTracePreserving { deviation: f64 },
    #[error("matrix is not unitary: max |U^dag U - I| = {deviation:e}")]
    NotUnitary { deviation: f64 },
    #[error("Bloch vector is not a unit vector: |T| = {norm}")]
    NotUnitVector { norm: f64 },
    #[error("not a density matrix: {reason}")]
    NotDensityMatrix { reason: String },
    #[error("Pauli coefficient {label} has imaginary part {imag:e}")]
    NonRealCoefficient { label: String, imag: f64 },
    #[error("canonical parameters ({dx}, {dy}, {dz}) violate |d_z| <= d_y <= d_x <= pi/2")]
    OrderingViolated { dx: f64, dy: f64, dz: f64 },
    #[error("canonical decomposition failed: reconstruction residual {residual:e}")]
    DecompositionFailed { residual: f64 },
    #[error("closed-form maximizer not attained: best branch {attained}, closed form {expected}")]
    MaximizerNotAttained { attained: f64, expected: f64 },
    #[error("transfer probability has imaginary part {imag:e}")]
    NonRealProbability { imag: f64 },
    #[error("transfer probability {value} outside [0, 1]")]
    OutOfRange { value: f64 },
    #[error(
        "Monte-Carlo check {mc_mean} +/- {std_error:e} disagrees with analytic power {analytic}"
    )]
    ValidationMismatch {
        analytic: f64,
        mc_mean: f64,
        std_error: f64,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
