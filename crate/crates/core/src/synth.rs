//! Synthetic network generation and the gradient checker built on it.
//!
//! Random subcritical networks back the solver/gradient verification
//! machinery: multi-start uniqueness checks, the finite-difference gradient
//! oracle, and the simulator-versus-solver comparisons all draw their
//! instances here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::learning::{analytic_gradient, finite_difference_gradient};
use crate::linalg::Matrix;
use crate::model::{NeuronId, NeuronRoles, RnnParameters};
use crate::solver::{solve_fixed_point, SolverOptions, SteadyState};
use crate::{Result, RnnError, Scalar};

/// Acceptance bounds for a generated network.
#[derive(Debug, Clone)]
pub struct SubcriticalConfig {
    /// Reject solutions with any `q` above this (keeps the clamp inactive
    /// with margin).
    pub max_q: f64,
    /// Reject solutions where any loss denominator `r + Ω⁻` falls below
    /// this (keeps the instance well-conditioned for differentiation).
    pub min_denominator: f64,
    /// Allow self-loops (training networks exclude them; generic networks
    /// may carry them).
    pub self_loops: bool,
}

impl Default for SubcriticalConfig {
    fn default() -> Self {
        Self {
            max_q: 0.95,
            min_denominator: 0.05,
            self_loops: true,
        }
    }
}

/// Draws a random subcritical network with `neurons` neurons, rejecting
/// candidates until the solved state satisfies `config`. Deterministic for a
/// given RNG state. Returns the network and its steady state.
pub fn random_subcritical<T: Scalar>(
    neurons: usize,
    rng: &mut ChaCha8Rng,
    config: &SubcriticalConfig,
) -> Result<(RnnParameters<T>, SteadyState<T>)> {
    assert!(neurons >= 1);
    let solver = SolverOptions::default();
    // Scale weights down with size so row sums stay O(1).
    let weight_scale = 1.0 / (neurons as f64).sqrt();

    for _ in 0..200 {
        let mut w_plus = Matrix::zeros(neurons, neurons);
        let mut w_minus = Matrix::zeros(neurons, neurons);
        for u in 0..neurons {
            for v in 0..neurons {
                if u == v && !config.self_loops {
                    continue;
                }
                w_plus.set(u, v, T::from(rng.random::<f64>() * weight_scale).unwrap());
                w_minus.set(u, v, T::from(rng.random::<f64>() * weight_scale).unwrap());
            }
        }
        let lambda_plus: Vec<T> = (0..neurons)
            .map(|_| T::from(0.05 + 0.6 * rng.random::<f64>()).unwrap())
            .collect();
        let lambda_minus: Vec<T> = (0..neurons)
            .map(|_| T::from(0.05 + 0.4 * rng.random::<f64>()).unwrap())
            .collect();

        let params = RnnParameters::new(
            w_plus,
            w_minus,
            lambda_plus,
            lambda_minus,
            vec![T::zero(); neurons],
        )?;
        let Ok(steady) = solve_fixed_point(&params, &solver) else {
            continue;
        };
        let max_q = steady.q.iter().fold(T::zero(), |acc, &q| acc.max(q));
        let min_denom = (0..neurons)
            .map(|i| params.firing()[i] + steady.omega_minus[i])
            .fold(T::infinity(), |acc, d| acc.min(d));
        if max_q <= T::from(config.max_q).unwrap()
            && min_denom >= T::from(config.min_denominator).unwrap()
        {
            return Ok((params, steady));
        }
    }
    Err(RnnError::InvalidArgument(
        "could not generate a subcritical network within 200 attempts".into(),
    ))
}

/// Outcome of a gradient-checking run.
#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub trials: usize,
    pub max_neurons: usize,
    pub tolerance: f64,
    /// Worst elementwise relative error across all trials and both weight
    /// classes (absolute below 1e-9 counts as zero).
    pub max_relative_error: f64,
    pub passed: bool,
}

/// Elementwise disagreement measure between analytic and numeric gradients:
/// zero when the absolute gap is below 1e-9, otherwise the gap relative to
/// the larger magnitude.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let gap = (analytic - numeric).abs();
    if gap <= 1e-9 {
        return 0.0;
    }
    gap / analytic.abs().max(numeric.abs())
}

/// Checks analytic against central-finite-difference gradients on random
/// subcritical networks with up to `max_neurons` neurons.
pub fn gradcheck(trials: usize, seed: u64, max_neurons: usize) -> Result<GradCheckReport> {
    let tolerance = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = SubcriticalConfig::default();
    let solver = SolverOptions::default();
    let mut worst = 0.0f64;

    for _ in 0..trials {
        let neurons = 2 + (rng.random::<u64>() as usize) % (max_neurons.max(2) - 1);
        let (params, steady) = random_subcritical::<f64>(neurons, &mut rng, &config)?;

        // Every neuron beyond the first acts as an output with a random
        // target; at least one output always exists.
        let n_out = 1 + (rng.random::<u64>() as usize) % neurons.max(1);
        let roles = NeuronRoles {
            input_ids: vec![],
            hidden_ids: vec![],
            output_ids: (neurons - n_out..neurons).map(NeuronId).collect(),
        };
        let targets: Vec<f64> = (0..n_out)
            .map(|_| 0.1 + 0.8 * rng.random::<f64>())
            .collect();

        let (analytic_plus, analytic_minus) =
            analytic_gradient(&params, &steady, &targets, &roles)?;
        let (numeric_plus, numeric_minus) =
            finite_difference_gradient(&params, &targets, &roles, &solver)?;

        for (a, b) in [(&analytic_plus, &numeric_plus), (&analytic_minus, &numeric_minus)] {
            for (x, y) in a.iter().zip(b.iter()) {
                worst = worst.max(relative_error(*x, *y));
            }
        }
    }

    Ok(GradCheckReport {
        trials,
        max_neurons,
        tolerance,
        max_relative_error: worst,
        passed: worst <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_networks_are_subcritical_and_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let config = SubcriticalConfig::default();
        for _ in 0..20 {
            let (params, steady) = random_subcritical::<f64>(4, &mut rng, &config).unwrap();
            assert!(params.validate().is_empty());
            assert!(steady.q.iter().all(|&q| q <= 0.95));
            assert!(steady.saturated.is_empty());
        }
    }

    #[test]
    fn gradcheck_small_run_passes() {
        let report = gradcheck(10, 123, 4).unwrap();
        assert!(
            report.passed,
            "max relative error {}",
            report.max_relative_error
        );
    }

    #[test]
    fn relative_error_near_zero_is_absolute() {
        assert_eq!(relative_error(5e-10, -4e-10), 0.0);
        assert!(relative_error(1.0, 1.1) > 0.09);
    }
}
