//! Fixed-point computation of the stationary excitation probabilities.
//!
//! With total arrival rates
//!
//! ```text
//! Ω⁺_i = Λ_i + Σ_j q_j w⁺_ji        Ω⁻_i = λ_i + Σ_j q_j w⁻_ji
//! ```
//!
//! the excitation probabilities solve the nonlinear system
//!
//! ```text
//! q_i = min{ 1, Ω⁺_i / (r_i + Ω⁻_i) }
//! ```
//!
//! solved here by damped Picard iteration (synchronous full-vector updates).
//! The solution is unique, so any start converges to the same point for
//! subcritical networks; the default initial iterate is
//! `q⁰_i = min{1, Λ_i / (r_i + λ_i)}` with `0/0` mapped to 0.

use serde::{Deserialize, Serialize};

use crate::model::{NeuronId, RnnParameters};
use crate::{Result, RnnError, Scalar};

fn default_tolerance<T: Scalar>() -> T {
    T::from(1e-12).unwrap_or_else(T::epsilon)
}

fn default_max_iterations() -> usize {
    10_000
}

fn default_damping<T: Scalar>() -> T {
    T::one()
}

/// Iteration controls for [`solve_fixed_point`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct SolverOptions<T> {
    /// Convergence threshold on the max-norm fixed-point mismatch.
    #[serde(default = "default_tolerance")]
    pub tolerance: T,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Damping factor α in `(0, 1]`: `q ← (1−α) q_old + α q_new`. With the
    /// default α = 1 the solver retries once at α = 0.5 before giving up,
    /// which settles oscillating iterations deterministically.
    #[serde(default = "default_damping")]
    pub damping: T,
    /// Overrides the default initial iterate (used by multi-start checks).
    #[serde(skip)]
    pub initial: Option<Vec<T>>,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
            max_iterations: default_max_iterations(),
            damping: default_damping(),
            initial: None,
        }
    }
}

impl<T: Scalar> SolverOptions<T> {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > T::zero()) {
            return Err(RnnError::InvalidArgument("tolerance must be > 0".into()));
        }
        if self.max_iterations == 0 {
            return Err(RnnError::InvalidArgument(
                "max_iterations must be ≥ 1".into(),
            ));
        }
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return Err(RnnError::InvalidArgument(
                "damping must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Converged stationary solution.
#[derive(Debug, Clone, Serialize)]
pub struct SteadyState<T> {
    /// Excitation probabilities, each in `[0, 1]`.
    pub q: Vec<T>,
    /// Total excitatory arrival rates at the solution.
    pub omega_plus: Vec<T>,
    /// Total inhibitory arrival rates at the solution.
    pub omega_minus: Vec<T>,
    /// Max-norm fixed-point mismatch at the reported `q`.
    pub residual: T,
    /// Iterations used by the converging attempt.
    pub iterations: usize,
    /// Neurons where the `min{1, ·}` clamp is active at the solution.
    pub saturated: Vec<NeuronId>,
}

impl<T: Scalar> SteadyState<T> {
    pub fn is_saturated(&self) -> bool {
        !self.saturated.is_empty()
    }
}

/// Total arrival rates of excitatory and inhibitory spikes at every neuron,
/// given excitation probabilities `q`.
pub fn arrival_rates<T: Scalar>(params: &RnnParameters<T>, q: &[T]) -> (Vec<T>, Vec<T>) {
    let n = params.neuron_count();
    assert_eq!(q.len(), n, "q length mismatch");
    let mut omega_plus = params.lambda_plus().to_vec();
    let mut omega_minus = params.lambda_minus().to_vec();
    for j in 0..n {
        let qj = q[j];
        if qj == T::zero() {
            continue;
        }
        let row_plus = params.w_plus().row(j);
        let row_minus = params.w_minus().row(j);
        for i in 0..n {
            omega_plus[i] = omega_plus[i] + qj * row_plus[i];
            omega_minus[i] = omega_minus[i] + qj * row_minus[i];
        }
    }
    (omega_plus, omega_minus)
}

/// One synchronous update of the fixed-point map, writing into `next`.
/// Returns the max-norm change. A transiently undefined ratio (`Ω⁺ > 0`
/// with `r + Ω⁻ = 0`) is clamped to 1; whether it is genuinely ill-posed is
/// decided at the converged point.
fn apply_step<T: Scalar>(params: &RnnParameters<T>, q: &[T], next: &mut [T]) -> T {
    let (omega_plus, omega_minus) = arrival_rates(params, q);
    let mut delta = T::zero();
    for i in 0..q.len() {
        let numer = omega_plus[i];
        let denom = params.firing()[i] + omega_minus[i];
        let value = if denom > T::zero() {
            T::one().min(numer / denom)
        } else if numer > T::zero() {
            T::one()
        } else {
            T::zero()
        };
        delta = delta.max((value - q[i]).abs());
        next[i] = value;
    }
    delta
}

/// Solves the excitation fixed point. Deterministic in `params` and
/// `options`.
pub fn solve_fixed_point<T: Scalar>(
    params: &RnnParameters<T>,
    options: &SolverOptions<T>,
) -> Result<SteadyState<T>> {
    let violations = params.validate();
    if !violations.is_empty() {
        return Err(RnnError::InconsistentParameters(
            violations
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }
    solve_fixed_point_unchecked(params, options)
}

/// Solve without the parameter validation gate. Finite-difference probes
/// evaluate the fixed-point map at weights nudged epsilon below zero, which
/// is a legal evaluation of the map but not a legal network.
pub(crate) fn solve_fixed_point_unchecked<T: Scalar>(
    params: &RnnParameters<T>,
    options: &SolverOptions<T>,
) -> Result<SteadyState<T>> {
    options.validate()?;

    let q0 = match &options.initial {
        Some(q0) => {
            if q0.len() != params.neuron_count() {
                return Err(RnnError::InvalidArgument(
                    "initial iterate length mismatch".into(),
                ));
            }
            if q0.iter().any(|&x| !(x >= T::zero() && x <= T::one())) {
                return Err(RnnError::InvalidArgument(
                    "initial iterate must lie in [0, 1]^L".into(),
                ));
            }
            q0.clone()
        }
        None => default_initial(params),
    };

    match attempt(params, options, &q0, options.damping) {
        Ok(state) => Ok(state),
        Err(err @ RnnError::NonConvergence { .. }) if options.damping == T::one() => {
            // Oscillation retry at half step.
            let half = T::from(0.5).unwrap();
            attempt(params, options, &q0, half).map_err(|_| err)
        }
        Err(err) => Err(err),
    }
}

fn default_initial<T: Scalar>(params: &RnnParameters<T>) -> Vec<T> {
    (0..params.neuron_count())
        .map(|i| {
            let numer = params.lambda_plus()[i];
            let denom = params.firing()[i] + params.lambda_minus()[i];
            if denom > T::zero() {
                T::one().min(numer / denom)
            } else if numer > T::zero() {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect()
}

fn attempt<T: Scalar>(
    params: &RnnParameters<T>,
    options: &SolverOptions<T>,
    q0: &[T],
    damping: T,
) -> Result<SteadyState<T>> {
    let n = params.neuron_count();
    let mut q = q0.to_vec();
    let mut stepped = vec![T::zero(); n];
    let mut residual = T::infinity();

    for iteration in 1..=options.max_iterations {
        residual = apply_step(params, &q, &mut stepped);
        if residual <= options.tolerance {
            // Adopt the freshest iterate and finalize at it.
            return finalize(params, stepped, residual, iteration);
        }
        if damping == T::one() {
            std::mem::swap(&mut q, &mut stepped);
        } else {
            let keep = T::one() - damping;
            for i in 0..n {
                q[i] = keep * q[i] + damping * stepped[i];
            }
        }
    }

    Err(RnnError::NonConvergence {
        iterations: options.max_iterations,
        residual: residual.to_f64().unwrap_or(f64::NAN),
    })
}

fn finalize<T: Scalar>(
    params: &RnnParameters<T>,
    q: Vec<T>,
    residual: T,
    iterations: usize,
) -> Result<SteadyState<T>> {
    let (omega_plus, omega_minus) = arrival_rates(params, &q);
    let mut saturated = Vec::new();
    for i in 0..q.len() {
        let denom = params.firing()[i] + omega_minus[i];
        if denom > T::zero() {
            if omega_plus[i] / denom >= T::one() {
                saturated.push(NeuronId(i));
            }
        } else if omega_plus[i] > T::zero() {
            // Excitation flows in and nothing ever drains it: the ratio in
            // the fixed-point map diverges, so the solution is ill-posed.
            return Err(RnnError::IllPosedNeuron { neuron: i });
        }
    }
    Ok(SteadyState {
        q,
        omega_plus,
        omega_minus,
        residual,
        iterations,
        saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn params(
        w_plus: &[(usize, usize, f64)],
        w_minus: &[(usize, usize, f64)],
        lambda_plus: Vec<f64>,
        lambda_minus: Vec<f64>,
    ) -> RnnParameters<f64> {
        let n = lambda_plus.len();
        let mut wp = Matrix::zeros(n, n);
        for &(i, j, v) in w_plus {
            wp.set(i, j, v);
        }
        let mut wm = Matrix::zeros(n, n);
        for &(i, j, v) in w_minus {
            wm.set(i, j, v);
        }
        RnnParameters::new(wp, wm, lambda_plus, lambda_minus, vec![0.0; n]).unwrap()
    }

    #[test]
    fn arrival_rates_with_inactive_network() {
        let p = params(&[(0, 1, 1.0)], &[], vec![0.7, 0.0], vec![0.2, 0.3]);
        let (op, om) = arrival_rates(&p, &[0.0, 0.0]);
        assert_eq!(op, vec![0.7, 0.0]);
        assert_eq!(om, vec![0.2, 0.3]);
    }

    #[test]
    fn arrival_rates_single_edge() {
        let p = params(&[(0, 1, 1.0)], &[], vec![0.0, 0.0], vec![0.0, 0.0]);
        let (op, _) = arrival_rates(&p, &[0.5, 0.9]);
        assert_eq!(op[1], 0.5);
    }

    #[test]
    fn arrival_rates_recurrent_pair() {
        let p = params(
            &[(0, 1, 1.0), (1, 0, 1.0)],
            &[],
            vec![0.5, 0.0],
            vec![0.0, 0.0],
        );
        let (op, _) = arrival_rates(&p, &[0.6, 0.4]);
        assert!((op[0] - 0.9).abs() < 1e-15);
        assert!((op[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn solves_acyclic_pair() {
        // w⁺₀₁ = 1 (r = (1, 0)), Λ₀ = 0.5, λ₁ = 1 → q = (0.5, 0.5).
        let p = params(&[(0, 1, 1.0)], &[], vec![0.5, 0.0], vec![0.0, 1.0]);
        let state = solve_fixed_point(&p, &SolverOptions::default()).unwrap();
        assert!((state.q[0] - 0.5).abs() < 1e-12);
        assert!((state.q[1] - 0.5).abs() < 1e-12);
        assert!(state.saturated.is_empty());
    }

    #[test]
    fn solves_recurrent_pair_exactly() {
        // Mutual excitation w⁺₀₁ = w⁺₁₀ = 1, Λ₀ = 0.5, λ = (0.5, 0.5):
        // substitution gives q = (0.6, 0.4) exactly.
        let p = params(
            &[(0, 1, 1.0), (1, 0, 1.0)],
            &[],
            vec![0.5, 0.0],
            vec![0.5, 0.5],
        );
        let state = solve_fixed_point(&p, &SolverOptions::default()).unwrap();
        assert!((state.q[0] - 0.6).abs() < 1e-10, "q0 = {}", state.q[0]);
        assert!((state.q[1] - 0.4).abs() < 1e-10, "q1 = {}", state.q[1]);
        assert!(state.residual <= 1e-12);
    }

    #[test]
    fn clamps_and_reports_saturation() {
        // Λ₀ = 2 against r₀ = 1: ratio 2, clamped to 1. λ₁ keeps neuron 1
        // well-posed.
        let p = params(&[(0, 1, 1.0)], &[], vec![2.0, 0.0], vec![0.0, 2.0]);
        let state = solve_fixed_point(&p, &SolverOptions::default()).unwrap();
        assert_eq!(state.q[0], 1.0);
        assert_eq!(state.saturated, vec![NeuronId(0)]);
        assert!((state.q[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn no_excitation_means_zero_vector() {
        let p = params(
            &[(0, 1, 1.0), (1, 0, 1.0)],
            &[],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
        );
        let state = solve_fixed_point(&p, &SolverOptions::default()).unwrap();
        assert_eq!(state.q, vec![0.0, 0.0]);
    }

    #[test]
    fn ill_posed_sink_is_an_error() {
        // Neuron 1 receives excitation but has r = 0, λ = 0: diverges.
        let p = params(&[(0, 1, 1.0)], &[], vec![2.0, 0.0], vec![0.0, 0.0]);
        let err = solve_fixed_point(&p, &SolverOptions::default());
        assert!(matches!(err, Err(RnnError::IllPosedNeuron { neuron: 1 })));
    }

    #[test]
    fn custom_initial_iterate_reaches_same_fixed_point() {
        let p = params(
            &[(0, 1, 1.0), (1, 0, 1.0)],
            &[],
            vec![0.5, 0.0],
            vec![0.5, 0.5],
        );
        for start in [vec![0.0, 1.0], vec![1.0, 1.0], vec![0.3, 0.7]] {
            let opts = SolverOptions {
                initial: Some(start),
                ..SolverOptions::default()
            };
            let state = solve_fixed_point(&p, &opts).unwrap();
            assert!((state.q[0] - 0.6).abs() < 1e-10);
            assert!((state.q[1] - 0.4).abs() < 1e-10);
        }
    }

    #[test]
    fn reapplying_step_is_idempotent_at_solution() {
        let p = params(
            &[(0, 1, 1.0), (1, 0, 1.0)],
            &[(0, 1, 0.5)],
            vec![0.5, 0.2],
            vec![0.5, 0.5],
        );
        let state = solve_fixed_point(&p, &SolverOptions::default()).unwrap();
        let mut next = vec![0.0; 2];
        let change = apply_step(&p, &state.q, &mut next);
        assert!(change <= 1e-12, "change after convergence: {change}");
    }

    #[test]
    fn rejects_bad_options() {
        let p = params(&[(0, 1, 1.0)], &[], vec![0.0, 0.0], vec![0.0, 0.0]);
        let opts = SolverOptions {
            tolerance: 0.0,
            ..SolverOptions::default()
        };
        assert!(solve_fixed_point(&p, &opts).is_err());
    }
}
