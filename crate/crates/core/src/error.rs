use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The sine basis is 1-indexed.
    #[error("mode index must be at least 1")]
    ZeroMode,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value at mode {mode}")]
    NonFinite { mode: usize },

    #[error("dimension mismatch: expected {expected} modes, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{grid_points} grid subintervals cannot resolve {n_modes} modes without aliasing")]
    Aliasing { n_modes: usize, grid_points: usize },

    #[error("requested step {step} outside a stream of {fine_steps} fine steps (ratio {ratio})")]
    StepOutOfRange {
        step: usize,
        ratio: usize,
        fine_steps: usize,
    },

    #[error("monotonicity estimate requires nu > 1/6, got nu = {nu}")]
    MonotonicityViolated { nu: f64 },

    #[error("{}", blow_up_message(*.trajectory, *.step))]
    BlowUp {
        step: usize,
        trajectory: Option<usize>,
    },
}

fn blow_up_message(trajectory: Option<usize>, step: usize) -> String {
    match trajectory {
        Some(j) => format!("blow-up: non-finite state in trajectory {j} at step {step}"),
        None => format!("blow-up: non-finite state at step {step}"),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Attaches a trajectory index to a blow-up error.
    pub fn in_trajectory(self, index: usize) -> Self {
        match self {
            Error::BlowUp { step, .. } => Error::BlowUp {
                step,
                trajectory: Some(index),
            },
            other => other,
        }
    }
}
