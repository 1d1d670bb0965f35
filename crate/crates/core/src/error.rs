use thiserror::Error;

/// Errors raised by the simulator and its diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grids of the operands differ")]
    GridMismatch,

    #[error("samples are not even in z: relative oddness {oddness:.3e}")]
    NotEven { oddness: f64 },

    #[error("field is not barotropically divergence-free: |div| = {residual:.3e}")]
    NotInV { residual: f64 },

    #[error("vertical integrand has a nonzero mean: {residual:.3e}")]
    NonzeroMeanIntegrand { residual: f64 },

    #[error("Haar index out of range: k = {k} with level j = {j}")]
    HaarIndex { j: u32, k: u64 },

    #[error("invalid stepper configuration: {0}")]
    InvalidStepper(String),

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("absorbing set left at t = {time}: |v|_Vm = {norm:.6e} > K = {bound:.6e}")]
    AbsorbingSetViolation { time: f64, norm: f64, bound: f64 },

    #[error("non-finite state at t = {time}")]
    NonFiniteState { time: f64 },

    #[error("trajectory does not cover [{t1}, {t2}]")]
    TrajectoryCoverage { t1: f64, t2: f64 },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("exponential fit failed: {0}")]
    FitFailure(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
