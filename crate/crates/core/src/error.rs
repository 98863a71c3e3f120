//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum RnnError {
    /// Network parameters violate a structural rule (negative weight,
    /// departure probability out of range, rate inconsistency, ...).
    #[error("inconsistent parameters: {0}")]
    InconsistentParameters(String),

    /// Fixed-point iteration did not reach the tolerance.
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// A neuron receives excitation but has no loss mechanism at the fixed
    /// point (`r + Ω⁻ = 0` with `Ω⁺ > 0`), so its excitation ratio diverges.
    #[error("ill-posed neuron {neuron}: r + inhibitory arrival rate is zero while excitatory arrival rate is positive")]
    IllPosedNeuron { neuron: usize },

    /// The gradient linear system was singular and the finite-difference
    /// fallback was disabled.
    #[error("singular gradient system")]
    SingularGradientSystem,

    /// Training aborted because a per-sample solve failed.
    #[error("training failed at epoch {epoch}, sample {sample}: {source}")]
    TrainingFailed {
        epoch: usize,
        sample: usize,
        #[source]
        source: Box<RnnError>,
    },

    /// Simulation cannot start: no event has a positive rate.
    #[error("frozen chain: all event rates are zero")]
    FrozenChain,

    /// A potential exceeded the configured cap, signalling a supercritical
    /// network.
    #[error("potential of neuron {neuron} exceeded cap {cap}; network appears supercritical")]
    PotentialCapExceeded { neuron: usize, cap: u64 },

    /// Product-form comparison refused: the analytical solution is saturated.
    #[error("product form undefined: steady state has saturated neurons {saturated:?} (all q must be < 1)")]
    SaturatedSteadyState { saturated: Vec<usize> },

    /// Malformed CSV input.
    #[error("{path}:{line}: {message}")]
    MalformedRow {
        path: String,
        line: usize,
        message: String,
    },

    /// A label not present in the schema's class order.
    #[error("{path}:{line}: unknown label {label:?}")]
    UnknownLabel {
        path: String,
        line: usize,
        label: String,
    },

    /// Dataset cannot be split as requested.
    #[error("invalid split: {0}")]
    InvalidSplit(String),

    /// Evaluation called with no test rows.
    #[error("empty test set")]
    EmptyTestSet,

    /// Catch-all for invalid arguments to an operation.
    #[error("{0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
