//! Recurrent gradient-descent training.
//!
//! Training runs per-sample stochastic gradient descent on the quadratic
//! output error `E = Σ_{i ∈ outputs} (q_i − y_i)²`. For each pattern the
//! exogenous excitatory rates of the input neurons are set to the encoded
//! features, exogenous inhibition is zero, the excitation fixed point is
//! solved, and both weight matrices are updated along the negative gradient
//! with projection back onto the non-negative orthant. Firing rates are
//! re-derived from the updated weights after every step, so the parameters
//! stay consistent throughout.
//!
//! # Gradient
//!
//! Writing `D_i = r_i + Ω⁻_i` for the loss rate at neuron `i`, the fixed
//! point `q_i = Ω⁺_i / D_i` differentiates into the linear system
//!
//! ```text
//! ∂q = M ∂q + c(θ)      M[i][j] = (w⁺_ji − q_i w⁻_ji) / D_i
//! ```
//!
//! where `c(θ)` is sparse for a single weight `θ = w±_uv` (two entries: the
//! arrival term at `v` and the firing-rate term at `u`, since `r_u` depends
//! on the weight through the rate relation). Rather than solving for every
//! `∂q/∂θ` separately, one adjoint solve with the transposed system matrix
//! yields all `2 L²` derivatives of `E` in `O(L²)` extra work. Neurons
//! pinned by the saturation clamp are locally constant and enter the system
//! as frozen rows.
//!
//! Analytic gradients are contractually interchangeable with central finite
//! differences of `E` over re-solves of the fixed point; the crate's
//! gradient checker enforces agreement to 1e-5 relative error.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{EncodingConfig, LabeledDataset, Normalization};
use crate::linalg::{lu_solve, Matrix};
use crate::model::{derive_firing_rates, ModelDocument, NeuronId, NeuronRoles, RnnParameters};
use crate::solver::{solve_fixed_point, SolverOptions, SteadyState};
use crate::{Result, RnnError, Scalar};

/// How gradients are computed during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Adjoint solve of the differentiated fixed point (fast path). Falls
    /// back to finite differences if the linear system is singular.
    Analytic,
    /// Central finite differences over per-weight re-solves (slow, used as
    /// the reference).
    FiniteDifference,
}

/// Which weight entries are trainable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// All off-diagonal entries of both matrices are trainable.
    Recurrent,
    /// Only the input→hidden and hidden→output blocks are trainable; output
    /// neurons are pure sinks (`d = 1`) with the fixed firing rate
    /// `output_firing_rate`, which decouples their response range from
    /// their (empty) outgoing weight rows.
    Layered,
}

fn default_learning_rate<T: Scalar>() -> T {
    T::from(0.1).unwrap()
}

fn default_epochs() -> usize {
    200
}

fn default_weight_init<T: Scalar>() -> (T, T) {
    (T::zero(), T::one())
}

fn default_hidden_count() -> usize {
    8
}

fn default_target_high<T: Scalar>() -> T {
    T::from(0.9).unwrap()
}

fn default_target_low<T: Scalar>() -> T {
    T::from(0.1).unwrap()
}

fn default_gradient_mode() -> GradientMode {
    GradientMode::Analytic
}

fn default_topology() -> Topology {
    Topology::Recurrent
}

fn default_output_firing_rate<T: Scalar>() -> T {
    T::from(0.1).unwrap()
}

fn default_restarts() -> usize {
    1
}

/// Training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct TrainingConfig<T> {
    #[serde(default = "default_learning_rate")]
    pub learning_rate: T,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Uniform initialization range `[lo, hi)` for both weight matrices.
    #[serde(default = "default_weight_init")]
    pub weight_init: (T, T),
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_hidden_count")]
    pub hidden_count: usize,
    /// Explicit hidden layer sizes for [`Topology::Layered`]; `None` means a
    /// single layer of `hidden_count` neurons. Ignored by
    /// [`Topology::Recurrent`], where all hidden neurons are
    /// interconnected anyway.
    #[serde(default)]
    pub hidden_layers: Option<Vec<usize>>,
    #[serde(default = "default_target_high")]
    pub target_high: T,
    #[serde(default = "default_target_low")]
    pub target_low: T,
    #[serde(default = "default_gradient_mode")]
    pub gradient_mode: GradientMode,
    #[serde(default = "default_topology")]
    pub topology: Topology,
    /// Firing rate of output neurons under [`Topology::Layered`].
    #[serde(default = "default_output_firing_rate")]
    pub output_firing_rate: T,
    /// Constant exogenous excitation applied to every hidden neuron (a bias
    /// node). Zero disables it. The rate is stored in the trained model's
    /// `Lambda` vector, so prediction sees it automatically.
    #[serde(default)]
    pub bias_rate: T,
    /// Independent training restarts from different weight initializations;
    /// the candidate with the best training-set fit (accuracy, then error)
    /// wins. SGD on this loss surface is multimodal, so a handful of
    /// restarts stabilizes results considerably.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Stop once the epoch-mean error drops to this level.
    #[serde(default)]
    pub convergence_threshold: Option<T>,
    #[serde(default)]
    pub solver: SolverOptions<T>,
}

impl<T: Scalar> Default for TrainingConfig<T> {
    fn default() -> Self {
        Self {
            learning_rate: default_learning_rate(),
            epochs: default_epochs(),
            weight_init: default_weight_init(),
            rng_seed: 0,
            hidden_count: default_hidden_count(),
            hidden_layers: None,
            target_high: default_target_high(),
            target_low: default_target_low(),
            gradient_mode: default_gradient_mode(),
            topology: default_topology(),
            output_firing_rate: default_output_firing_rate(),
            bias_rate: T::zero(),
            restarts: default_restarts(),
            convergence_threshold: None,
            solver: SolverOptions::default(),
        }
    }
}

impl<T: Scalar> TrainingConfig<T> {
    pub fn encoding(&self) -> EncodingConfig<T> {
        EncodingConfig {
            target_high: self.target_high,
            target_low: self.target_low,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > T::zero()) {
            return Err(RnnError::InvalidArgument(
                "learning rate must be > 0".into(),
            ));
        }
        let (lo, hi) = self.weight_init;
        if !(lo >= T::zero() && lo < hi && hi <= T::one()) {
            return Err(RnnError::InvalidArgument(
                "weight_init must satisfy 0 ≤ lo < hi ≤ 1".into(),
            ));
        }
        if !(self.target_low < self.target_high && self.target_high <= T::one()) {
            return Err(RnnError::InvalidArgument(
                "targets must satisfy low < high ≤ 1".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(RnnError::InvalidArgument("epochs must be ≥ 1".into()));
        }
        if self.topology == Topology::Layered && !(self.output_firing_rate > T::zero()) {
            return Err(RnnError::InvalidArgument(
                "layered topology needs output_firing_rate > 0".into(),
            ));
        }
        if self.restarts == 0 {
            return Err(RnnError::InvalidArgument("restarts must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Quadratic error over the output neurons: `Σ (q_i − y_i)²`.
/// `targets[c]` corresponds to `output_ids[c]`; non-output neurons do not
/// contribute.
pub fn loss<T: Scalar>(q: &[T], targets: &[T], output_ids: &[NeuronId]) -> T {
    assert_eq!(targets.len(), output_ids.len(), "target/output mismatch");
    output_ids
        .iter()
        .zip(targets)
        .fold(T::zero(), |acc, (&NeuronId(i), &y)| {
            let diff = q[i] - y;
            acc + diff * diff
        })
}

/// Gradient of the output error with respect to both weight matrices.
#[derive(Debug, Clone)]
pub struct WeightGradients<T> {
    pub w_plus: Matrix<T>,
    pub w_minus: Matrix<T>,
    /// True when the analytic path hit a singular system and the result was
    /// produced by the finite-difference fallback.
    pub used_finite_difference: bool,
}

/// Analytic gradient via one adjoint solve. Falls back to finite
/// differences (with a warning on standard error) if the linear system is
/// singular.
pub fn gradient<T: Scalar>(
    params: &RnnParameters<T>,
    steady: &SteadyState<T>,
    targets: &[T],
    roles: &NeuronRoles,
    solver_options: &SolverOptions<T>,
) -> Result<WeightGradients<T>> {
    match analytic_gradient(params, steady, targets, roles) {
        Ok((w_plus, w_minus)) => Ok(WeightGradients {
            w_plus,
            w_minus,
            used_finite_difference: false,
        }),
        Err(RnnError::SingularGradientSystem) => {
            eprintln!("warning: singular gradient system; falling back to finite differences");
            let (w_plus, w_minus) =
                finite_difference_gradient(params, targets, roles, solver_options)?;
            Ok(WeightGradients {
                w_plus,
                w_minus,
                used_finite_difference: true,
            })
        }
        Err(other) => Err(other),
    }
}

/// Strictly analytic gradient (no fallback); errors on a singular system.
/// The gradient checker uses this directly so that a fallback can never mask
/// a transcription error in the analytic path.
pub fn analytic_gradient<T: Scalar>(
    params: &RnnParameters<T>,
    steady: &SteadyState<T>,
    targets: &[T],
    roles: &NeuronRoles,
) -> Result<(Matrix<T>, Matrix<T>)> {
    let n = params.neuron_count();
    assert_eq!(steady.q.len(), n, "steady state size mismatch");
    let q = &steady.q;

    // Loss denominators D_i = r_i + Ω⁻_i, and the set of neurons whose q is
    // locally constant: saturated ones (the clamp is active) and degenerate
    // D = 0 neurons (which can only carry q = 0).
    let mut denom = vec![T::zero(); n];
    let mut frozen = vec![false; n];
    for i in 0..n {
        denom[i] = params.firing()[i] + steady.omega_minus[i];
        if denom[i] <= T::zero() {
            frozen[i] = true;
        }
    }
    for &NeuronId(i) in &steady.saturated {
        frozen[i] = true;
    }

    // System matrix of the differentiated fixed point, transposed for the
    // adjoint solve: we need z with (I − M)ᵀ z = e.
    let mut a_t = Matrix::zeros(n, n);
    for i in 0..n {
        if frozen[i] {
            a_t.set(i, i, T::one());
            continue;
        }
        for j in 0..n {
            let coupling = (params.w_plus().get(j, i) - q[i] * params.w_minus().get(j, i))
                / denom[i];
            let delta = if i == j { T::one() } else { T::zero() };
            // (I − M)[i][j] transposed → stored at (j, i).
            a_t.set(j, i, delta - coupling);
        }
    }

    let two = T::from(2.0).unwrap();
    let mut e = vec![T::zero(); n];
    for (&NeuronId(i), &y) in roles.output_ids.iter().zip(targets) {
        e[i] = two * (q[i] - y);
    }

    let z = lu_solve(&a_t, &e)?;

    // Per-neuron pieces of the sparse right-hand sides:
    //   arrival term at v, firing-rate term at u (zero where frozen).
    let mut arrive_plus = vec![T::zero(); n];
    let mut arrive_minus = vec![T::zero(); n];
    let mut rate_term = vec![T::zero(); n];
    for i in 0..n {
        if frozen[i] {
            continue;
        }
        arrive_plus[i] = z[i] / denom[i];
        arrive_minus[i] = q[i] * z[i] / denom[i];
        let keep = T::one() - params.depart()[i];
        if keep > T::zero() {
            rate_term[i] = z[i] / (keep * denom[i]);
        }
        // d = 1 neurons have no outgoing weights; their r is a free
        // parameter, so the rate term vanishes.
    }

    let mut g_plus = Matrix::zeros(n, n);
    let mut g_minus = Matrix::zeros(n, n);
    for u in 0..n {
        let qu = q[u];
        if qu == T::zero() {
            continue; // a never-excited neuron emits nothing to differentiate
        }
        for v in 0..n {
            g_plus.set(u, v, qu * (arrive_plus[v] - rate_term[u]));
            g_minus.set(u, v, -qu * (arrive_minus[v] + rate_term[u]));
        }
    }
    Ok((g_plus, g_minus))
}

/// Central finite differences of `E` over full re-solves, one probe pair per
/// weight: `ε = 1e-6 · max(1, |w|)`. The reference implementation for the
/// analytic path.
pub fn finite_difference_gradient<T: Scalar>(
    params: &RnnParameters<T>,
    targets: &[T],
    roles: &NeuronRoles,
    solver_options: &SolverOptions<T>,
) -> Result<(Matrix<T>, Matrix<T>)> {
    let n = params.neuron_count();
    let mut g_plus = Matrix::zeros(n, n);
    let mut g_minus = Matrix::zeros(n, n);

    let eval = |probe: &RnnParameters<T>| -> Result<T> {
        let state = crate::solver::solve_fixed_point_unchecked(probe, solver_options)?;
        Ok(loss(&state.q, targets, &roles.output_ids))
    };

    for (excitatory, grad) in [(true, &mut g_plus), (false, &mut g_minus)] {
        for u in 0..n {
            for v in 0..n {
                let base = if excitatory {
                    params.w_plus().get(u, v)
                } else {
                    params.w_minus().get(u, v)
                };
                let eps = T::from(1e-6).unwrap() * T::one().max(base.abs());
                let plus = eval(&perturbed(params, excitatory, u, v, eps))?;
                let minus = eval(&perturbed(params, excitatory, u, v, -eps))?;
                grad.set(u, v, (plus - minus) / (eps + eps));
            }
        }
    }
    Ok((g_plus, g_minus))
}

/// Clone with a single weight nudged by `delta`, re-deriving the source
/// neuron's firing rate (kept explicit for pure-departure neurons, whose
/// rate does not depend on weights). Bypasses the non-negativity check: a
/// probe at `w = 0 − ε` is a legal evaluation of the fixed point even though
/// it is not a legal network.
fn perturbed<T: Scalar>(
    params: &RnnParameters<T>,
    excitatory: bool,
    u: usize,
    v: usize,
    delta: T,
) -> RnnParameters<T> {
    let mut w_plus = params.w_plus().clone();
    let mut w_minus = params.w_minus().clone();
    {
        let target = if excitatory { &mut w_plus } else { &mut w_minus };
        let value = target.get(u, v) + delta;
        target.set(u, v, value);
    }
    let mut firing = params.firing().to_vec();
    let keep = T::one() - params.depart()[u];
    if keep > T::zero() {
        let row_sum = w_plus
            .row(u)
            .iter()
            .zip(w_minus.row(u))
            .fold(T::zero(), |acc, (&p, &m)| acc + p + m);
        firing[u] = row_sum / keep;
    }
    RnnParameters::new_unchecked(
        w_plus,
        w_minus,
        params.lambda_plus().to_vec(),
        params.lambda_minus().to_vec(),
        params.depart().to_vec(),
        firing,
    )
}

/// A trained classifier: consistent parameters, role map, loss history, and
/// everything needed to encode unseen rows (normalization, class names).
#[derive(Debug, Clone)]
pub struct TrainedModel<T> {
    pub params: RnnParameters<T>,
    pub roles: NeuronRoles,
    /// Epoch-mean error, one entry per completed epoch.
    pub history: Vec<T>,
    pub config: TrainingConfig<T>,
    pub normalization: Normalization<T>,
    pub class_names: Vec<String>,
}

/// Trains a network on an encoded dataset. Deterministic in
/// `(dataset, config)` — each restart's RNG is derived from
/// `config.rng_seed` and drives weight initialization then per-epoch
/// shuffling.
pub fn train<T: Scalar>(
    dataset: &LabeledDataset<T>,
    config: &TrainingConfig<T>,
) -> Result<TrainedModel<T>> {
    config.validate()?;
    let mut best: Option<(usize, T, TrainedModel<T>)> = None;
    for restart in 0..config.restarts {
        // Golden-ratio stream splitting keeps restart 0 identical to a
        // single-start run with the same seed.
        let seed = config
            .rng_seed
            .wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let model = train_single(dataset, config, seed)?;
        let (correct, error) = training_fit(&model, dataset, &config.solver)?;
        let replace = match &best {
            None => true,
            Some((best_correct, best_error, _)) => {
                correct > *best_correct || (correct == *best_correct && error < *best_error)
            }
        };
        if replace {
            best = Some((correct, error, model));
        }
        if correct == dataset.split.train.len() {
            break; // a perfect training fit cannot be beaten
        }
    }
    Ok(best.expect("restarts ≥ 1").2)
}

/// Training-set fit of a model: correctly classified rows and total error.
fn training_fit<T: Scalar>(
    model: &TrainedModel<T>,
    dataset: &LabeledDataset<T>,
    solver: &SolverOptions<T>,
) -> Result<(usize, T)> {
    let n = model.params.neuron_count();
    let mut correct = 0usize;
    let mut total_error = T::zero();
    for &k in &dataset.split.train {
        let mut lambda_plus = model.params.lambda_plus().to_vec();
        for (j, &NeuronId(i)) in model.roles.input_ids.iter().enumerate() {
            lambda_plus[i] = dataset.inputs[k][j];
        }
        let probe = model
            .params
            .with_exogenous(lambda_plus, model.params.lambda_minus().to_vec())?;
        let steady = solve_fixed_point(&probe, solver)?;
        total_error = total_error + loss(&steady.q, &dataset.targets[k], &model.roles.output_ids);
        let mut best_class = 0usize;
        for (c, &NeuronId(i)) in model.roles.output_ids.iter().enumerate() {
            if steady.q[i] > steady.q[model.roles.output_ids[best_class].0] {
                best_class = c;
            }
        }
        if best_class == dataset.labels[k] {
            correct += 1;
        }
    }
    Ok((correct, total_error))
}

fn train_single<T: Scalar>(
    dataset: &LabeledDataset<T>,
    config: &TrainingConfig<T>,
    seed: u64,
) -> Result<TrainedModel<T>> {
    let n_in = dataset.feature_count();
    let n_out = dataset.class_count();
    let hidden_sizes: Vec<usize> = config
        .hidden_layers
        .clone()
        .unwrap_or_else(|| vec![config.hidden_count])
        .into_iter()
        .filter(|&h| h > 0)
        .collect();
    let total_hidden: usize = hidden_sizes.iter().sum();
    let n = n_in + total_hidden + n_out;
    let roles = NeuronRoles::contiguous(n_in, total_hidden, n_out);
    roles.validate_classifier(n)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = config.weight_init;
    let span = hi - lo;
    let sample_weight =
        |rng: &mut ChaCha8Rng| lo + span * T::from(rng.random::<f64>()).unwrap();

    // Trainable entries and departure vector, by topology. Self-loops are
    // never trainable and the diagonal stays zero.
    let mut trainable = vec![false; n * n];
    let mut depart = vec![T::zero(); n];
    match config.topology {
        Topology::Recurrent => {
            for u in 0..n {
                for v in 0..n {
                    trainable[u * n + v] = u != v;
                }
            }
        }
        Topology::Layered => {
            // Chain of fully connected blocks: inputs → hidden layers → outputs.
            let mut groups: Vec<Vec<NeuronId>> = vec![roles.input_ids.clone()];
            let mut next = n_in;
            for &size in &hidden_sizes {
                groups.push((next..next + size).map(NeuronId).collect());
                next += size;
            }
            groups.push(roles.output_ids.clone());
            for pair in groups.windows(2) {
                for &NeuronId(u) in &pair[0] {
                    for &NeuronId(v) in &pair[1] {
                        trainable[u * n + v] = true;
                    }
                }
            }
            // Outputs are pure sinks with a fixed firing rate.
            for &NeuronId(i) in &roles.output_ids {
                depart[i] = T::one();
            }
        }
    }

    let mut w_plus = Matrix::zeros(n, n);
    let mut w_minus = Matrix::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            if !trainable[u * n + v] {
                continue;
            }
            let wp = sample_weight(&mut rng);
            let wm = sample_weight(&mut rng);
            w_plus.set(u, v, wp);
            w_minus.set(u, v, wm);
        }
    }

    let rederive = |w_plus: &Matrix<T>, w_minus: &Matrix<T>| -> Result<Vec<T>> {
        let mut firing = derive_firing_rates(w_plus, w_minus, &depart)?;
        if config.topology == Topology::Layered {
            for &NeuronId(i) in &roles.output_ids {
                firing[i] = config.output_firing_rate;
            }
        }
        Ok(firing)
    };

    let firing = rederive(&w_plus, &w_minus)?;
    let mut params = RnnParameters::with_explicit_rates(
        w_plus,
        w_minus,
        vec![T::zero(); n],
        vec![T::zero(); n],
        depart.clone(),
        firing,
    )?;

    let eta = config.learning_rate;
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = dataset.split.train.clone();
    if order.is_empty() {
        return Err(RnnError::InvalidSplit("empty train split".into()));
    }

    // Bias excitation on hidden neurons, present during training and stored
    // in the final model so prediction applies it too.
    let mut base_lambda = vec![T::zero(); n];
    for &NeuronId(i) in &roles.hidden_ids {
        base_lambda[i] = config.bias_rate;
    }

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_error = T::zero();

        for &k in &order {
            let mut lambda_plus = base_lambda.clone();
            for (j, &NeuronId(i)) in roles.input_ids.iter().enumerate() {
                lambda_plus[i] = dataset.inputs[k][j];
            }
            let sample_params = params.with_exogenous(lambda_plus, vec![T::zero(); n])?;

            let fail = |source: RnnError| RnnError::TrainingFailed {
                epoch,
                sample: k,
                source: Box::new(source),
            };
            let steady = solve_fixed_point(&sample_params, &config.solver).map_err(fail)?;
            epoch_error = epoch_error + loss(&steady.q, &dataset.targets[k], &roles.output_ids);

            let grads = match config.gradient_mode {
                GradientMode::Analytic => gradient(
                    &sample_params,
                    &steady,
                    &dataset.targets[k],
                    &roles,
                    &config.solver,
                )
                .map_err(fail)?,
                GradientMode::FiniteDifference => {
                    let (w_plus, w_minus) = finite_difference_gradient(
                        &sample_params,
                        &dataset.targets[k],
                        &roles,
                        &config.solver,
                    )
                    .map_err(fail)?;
                    WeightGradients {
                        w_plus,
                        w_minus,
                        used_finite_difference: true,
                    }
                }
            };

            // Projected descent step on the trainable entries.
            let mut w_plus = sample_params.w_plus().clone();
            let mut w_minus = sample_params.w_minus().clone();
            for u in 0..n {
                for v in 0..n {
                    if !trainable[u * n + v] {
                        continue;
                    }
                    let new_plus =
                        (w_plus.get(u, v) - eta * grads.w_plus.get(u, v)).max(T::zero());
                    let new_minus =
                        (w_minus.get(u, v) - eta * grads.w_minus.get(u, v)).max(T::zero());
                    w_plus.set(u, v, new_plus);
                    w_minus.set(u, v, new_minus);
                }
            }
            let firing = rederive(&w_plus, &w_minus).map_err(fail)?;
            params = RnnParameters::new_unchecked(
                w_plus,
                w_minus,
                vec![T::zero(); n],
                vec![T::zero(); n],
                depart.clone(),
                firing,
            );
            debug_assert!(params.validate().is_empty());
        }

        let mean = epoch_error / T::from(order.len()).unwrap();
        history.push(mean);
        if let Some(threshold) = config.convergence_threshold {
            if mean <= threshold {
                break;
            }
        }
    }

    // Persist the bias rates; input entries stay zero until prediction
    // fills them per sample.
    params = params.with_exogenous(base_lambda, vec![T::zero(); n])?;

    Ok(TrainedModel {
        params,
        roles,
        history,
        config: config.clone(),
        normalization: dataset.normalization.clone(),
        class_names: dataset.class_names.clone(),
    })
}

/// On-disk JSON form of a trained model: the plain network document plus the
/// training artefacts needed for inference.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct TrainedModelDocument<T> {
    #[serde(flatten)]
    pub model: ModelDocument<T>,
    pub history: Vec<T>,
    pub normalization: Normalization<T>,
    pub classes: Vec<String>,
    pub config: TrainingConfig<T>,
}

impl<T: Scalar> TrainedModelDocument<T> {
    pub fn from_model(model: &TrainedModel<T>) -> Self {
        Self {
            model: ModelDocument::from_params(&model.params, &model.roles),
            history: model.history.clone(),
            normalization: model.normalization.clone(),
            classes: model.class_names.clone(),
            config: model.config.clone(),
        }
    }

    pub fn into_model(self) -> Result<TrainedModel<T>> {
        let (params, roles) = self.model.into_params()?;
        roles.validate_classifier(params.neuron_count())?;
        if self.classes.len() != roles.output_ids.len() {
            return Err(RnnError::InvalidArgument(format!(
                "{} classes but {} output neurons",
                self.classes.len(),
                roles.output_ids.len()
            )));
        }
        if self.normalization.attribute_count() != roles.input_ids.len() {
            return Err(RnnError::InvalidArgument(format!(
                "normalization covers {} attributes but there are {} input neurons",
                self.normalization.attribute_count(),
                roles.input_ids.len()
            )));
        }
        Ok(TrainedModel {
            params,
            roles,
            history: self.history,
            config: self.config,
            normalization: self.normalization,
            class_names: self.classes,
        })
    }
}
