use thiserror::Error;

/// Errors produced by the model, optimizer and scenario loader.
#[derive(Debug, Error)]
pub enum Error {
    /// A scenario or allocation file failed validation. `path` names the offending field.
    #[error("invalid scenario at `{path}`: {reason}")]
    InvalidScenario { path: String, reason: String },

    #[error("failed to read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// An argument fell outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "equilibrium did not converge after {iterations} iterations (last residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("allocation solver did not converge after {sweeps} sweeps (best residual norm {residual:.3e})")]
    AllocationNoConvergence { sweeps: usize, residual: f64 },

    #[error("Markov chain is singular: {0}")]
    SingularChain(String),

    #[error("load ratio does not cross 1 for packet rates in [{lo}, {hi}] pkt/s")]
    NoCrossing { lo: f64, hi: f64 },

    #[error(
        "target tau {target:.6e} is unreachable; achievable interval is [{min:.6e}, {max:.6e}]"
    )]
    UnreachableTau { target: f64, min: f64, max: f64 },

    #[error("allocation infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidScenario {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidScenario { .. } | Error::Io { .. })
    }
}
