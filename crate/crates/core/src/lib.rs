//! Random Neural Network (RNN) toolkit.
//!
//! The RNN is a spiking stochastic network: each neuron holds a non-negative
//! integer potential, exchanges excitatory/inhibitory spikes as Poisson
//! streams, and fires at an exponential rate while excited. Its stationary
//! behaviour has a closed analytical form, which makes the model trainable by
//! ordinary gradient descent while remaining a genuine spiking system.
//!
//! The crate is organised around that duality:
//!
//! - [`model`] — network parameterization (weights, exogenous rates,
//!   departure probabilities, firing rates) and its consistency rules
//! - [`solver`] — fixed-point computation of the stationary excitation
//!   probabilities `q`
//! - [`learning`] — recurrent gradient-descent training on the quadratic
//!   output error, with a finite-difference cross-check
//! - [`simulator`] — exact event-driven Monte Carlo simulation of the spike
//!   dynamics, used to validate the analytical solution and its product-form
//!   joint distribution
//! - [`data`] — CSV ingestion, rate encoding, stratified splits
//! - [`harness`] — classification benchmark runner (confusion matrices,
//!   accuracy, report generation)
//! - [`synth`] — random subcritical network generation and gradient checking
//!
//! All core math is generic over the floating-point scalar via [`Scalar`];
//! concrete `f64` aliases are exported at the crate root (`f64` is what the
//! CLI and the benchmark harness use).

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub mod data;
pub mod error;
pub mod harness;
pub mod learning;
pub mod linalg;
pub mod model;
pub mod simulator;
pub mod solver;
pub mod synth;

pub use error::RnnError;

/// Floating-point scalar used throughout the network arithmetic.
///
/// Implemented for `f32` and `f64`. Tolerance defaults in the option structs
/// are chosen for `f64`; `f32` callers should relax them.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Result alias for fallible toolkit operations.
pub type Result<T, E = RnnError> = std::result::Result<T, E>;

// Concrete f64 aliases for the main public types.
pub type RnnParameters64 = model::RnnParameters<f64>;
pub type SteadyState64 = solver::SteadyState<f64>;
pub type SolverOptions64 = solver::SolverOptions<f64>;
pub type TrainingConfig64 = learning::TrainingConfig<f64>;
pub type TrainedModel64 = learning::TrainedModel<f64>;
pub type SimulationReport64 = simulator::SimulationReport<f64>;
pub type LabeledDataset64 = data::LabeledDataset<f64>;

// And f32 counterparts for callers that trade precision for footprint.
pub type RnnParameters32 = model::RnnParameters<f32>;
pub type SteadyState32 = solver::SteadyState<f32>;
pub type SolverOptions32 = solver::SolverOptions<f32>;
