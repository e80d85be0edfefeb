use thiserror::Error;

pub type Result<T> = std::result::Result<T, MphdError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MphdError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{name} is not unitary (‖M†M − I‖_F = {residual:.3e}, tol {tol:.1e})")]
    NotUnitary {
        name: String,
        residual: f64,
        tol: f64,
    },

    #[error("grid resolution error: {0}")]
    Resolution(String),

    #[error("pixel {pixel} carries no local-oscillator intensity")]
    SingularPixel { pixel: usize },

    #[error("target is not MPHD-feasible (off-diagonal {offdiag:.3e}, modulus {modulus:.3e})")]
    Infeasible { offdiag: f64, modulus: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("{modes} modes give 2^{modes} branches; enumerate at most 2^{max} or pick a single branch")]
    Capacity { modes: usize, max: usize },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("cluster system VAV = I − A has no accepted solution (residual {residual:.3e})")]
    ClusterInfeasible { residual: f64 },

    #[error("singular gate: {0}")]
    Singular(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
