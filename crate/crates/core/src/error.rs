use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dilute regime violated: volume fraction {phi:.4} is not below 1")]
    DiluteRegime { phi: f64 },

    #[error("infeasible channel subdivision: {0}")]
    Infeasible(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("time integration failed at t = {time:.6e}: {reason} (step size {step:.3e}, {steps} steps taken)")]
    Integrator {
        time: f64,
        step: f64,
        steps: usize,
        reason: String,
    },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e}); {hint}")]
    Newton {
        iterations: usize,
        residual: f64,
        hint: String,
        last_iterate: Vec<f64>,
    },

    #[error("setup error: {0}")]
    Setup(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}
