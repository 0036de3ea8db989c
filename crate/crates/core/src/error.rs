//! Error type shared across the crate.
//!
//! Numerical operations in this crate refuse to guess: every tolerance has a
//! guard band, and a value that lands inside a guard band produces an error
//! instead of a silently rounded answer. The variants below therefore split
//! into three classes, which the CLI maps to exit codes: I/O failures (1),
//! invalid inputs (2), and numerical refusals (3).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("matrix is not unitary (residual {residual:.3e} > tol {tol:.3e})")]
    NotUnitary { residual: f64, tol: f64 },

    #[error("map is not an anti-involution: u conj(u) != -1 (residual {residual:.3e})")]
    NotAntiInvolution { residual: f64 },

    #[error("anti-unitary anti-involutions force even dimension, got {dim}")]
    OddDimension { dim: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (residual {residual:.3e} > tol {tol:.3e})")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("eigensolver failure: {0}")]
    ConvergenceFailure(String),

    #[error(
        "ambiguous kernel: |eigenvalue| {value:.3e} inside the guard band [{tol:.3e}, {guard:.3e})"
    )]
    AmbiguousKernel { value: f64, tol: f64, guard: f64 },

    #[error("family is not tau-invariant at {context}: residual {residual:.3e}")]
    NotTauInvariant { context: String, residual: f64 },

    #[error("no time-reversal structure attached to the operator family")]
    TauMissing,

    #[error("scan grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("degenerate crossing at t={t:.6}: crossing operator has eigenvalue {value:.3e}")]
    DegenerateCrossing { t: f64, value: f64 },

    #[error(
        "odd kernel rank {rank} at symmetric point t={t:.6}; Kramers pairing failed numerically"
    )]
    OddKernelAtSymmetricPoint { t: f64, rank: usize },

    #[error("Fourier tail norm {tail:.3e} exceeds {threshold:.3e}; symbol under-resolved, raise n_modes")]
    AliasingDetected { tail: f64, threshold: f64 },

    #[error("endpoint operator at t={t:.6} is singular (smallest |eigenvalue| {value:.3e})")]
    SingularEndpoint { t: f64, value: f64 },

    #[error("no spectral gap in singular values: ratio {ratio:.3e} < required {required:.3e}")]
    NoSpectralGap { ratio: f64, required: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("hopping ({p},{q}) breaks self-adjointness: residual {residual:.3e}")]
    NotSelfAdjoint { p: i32, q: i32, residual: f64 },

    #[error("hopping ({p},{q}) breaks time-reversal symmetry: residual {residual:.3e}")]
    NotTimeReversalSymmetric { p: i32, q: i32, residual: f64 },

    #[error("internal dimension {k} is odd; T^2 = -1 forces even dimension")]
    OddInternalDimension { k: usize },

    #[error(
        "spectral gap closed: distance {min_gap:.3e} to the Fermi level at (t,s)=({t:.4},{s:.4})"
    )]
    GapClosed { min_gap: f64, t: f64, s: f64 },

    #[error("truncation too small: {n_sites} sites for hopping range {q_range}")]
    TruncationTooSmall { n_sites: usize, q_range: i32 },

    #[error(
        "ambiguous edge localization at t={t:.6}: weight {weight:.4} inside the rejection band"
    )]
    AmbiguousLocalization { t: f64, weight: f64 },

    #[error("overlap matrix nearly singular (sigma_min {sigma_min:.3e}); loop too coarse")]
    RankDrop { sigma_min: f64 },

    #[error("Wannier phase tracking lost: {0}")]
    TrackingLost(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CoreError {
    /// CLI exit-code class: 1 = I/O, 2 = invalid input, 3 = numerical refusal.
    pub fn exit_class(&self) -> i32 {
        use CoreError::*;
        match self {
            Io(_) => 1,
            NotUnitary { .. }
            | NotAntiInvolution { .. }
            | OddDimension { .. }
            | DimensionMismatch { .. }
            | NonFinite
            | NotHermitian { .. }
            | TauMissing
            | Parse(_)
            | NotSelfAdjoint { .. }
            | NotTimeReversalSymmetric { .. }
            | OddInternalDimension { .. }
            | TruncationTooSmall { .. } => 2,
            ConvergenceFailure(_)
            | AmbiguousKernel { .. }
            | NotTauInvariant { .. }
            | GridTooCoarse(_)
            | DegenerateCrossing { .. }
            | OddKernelAtSymmetricPoint { .. }
            | AliasingDetected { .. }
            | SingularEndpoint { .. }
            | NoSpectralGap { .. }
            | GapClosed { .. }
            | AmbiguousLocalization { .. }
            | RankDrop { .. }
            | TrackingLost(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
