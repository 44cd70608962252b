use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sector parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rapidity machinery requires M <= 2S (M = {m}, 2S = {two_s})")]
    UnsupportedSector { m: usize, two_s: usize },

    #[error("rapidity set contains {0} non-finite root(s)")]
    NonFiniteRoot(usize),

    #[error("rapidities {a} and {b} collide (|λa - λb| = {distance:e})")]
    RootCollision { a: usize, b: usize, distance: f64 },

    #[error("rapidity {0} vanishes")]
    ZeroRapidity(usize),

    #[error("state has no nonzero amplitude")]
    NullState,

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian in Newton refinement")]
    SingularJacobian,

    #[error("norm defect {defect:e} at cycle {cycle} exceeds tolerance; step size too coarse")]
    NormFailure { cycle: usize, defect: f64 },

    #[error("classical flow halted at t = {time}: {reason}")]
    FlowHalted { reason: HaltReason, time: f64 },

    #[error("cannot average weights over an empty record sequence")]
    EmptyAverage,

    #[error("mean energy lies on or outside the spectral interval; Boltzmann fit saturates at beta = {}", if *.positive { "+inf" } else { "-inf" })]
    SaturatedFit { positive: bool },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Why an adaptive classical integration stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltReason {
    Collision,
    BlowUp,
    ZeroRapidity,
    StepUnderflow,
}

impl std::fmt::Display for HaltReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            HaltReason::Collision => "rapidity collision",
            HaltReason::BlowUp => "rapidity blow-up",
            HaltReason::ZeroRapidity => "rapidity reached zero",
            HaltReason::StepUnderflow => "step size underflow",
        };
        f.write_str(s)
    }
}

impl Error {
    /// Process exit status for the CLI: 2 config, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParams(_) | Error::UnsupportedSector { .. } | Error::EmptyAverage => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
