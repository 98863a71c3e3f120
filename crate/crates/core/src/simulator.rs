//! Exact event-driven Monte Carlo simulation of the spike dynamics.
//!
//! The network is a continuous-time Markov chain over the vector of neuron
//! potentials. Competing exponential clocks drive three event kinds:
//!
//! - exogenous excitatory arrival at `i` (rate `Λ_i`): `k_i + 1`
//! - exogenous inhibitory arrival at `i` (rate `λ_i`): `k_i − 1`, a no-op at
//!   `k_i = 0`
//! - firing of an excited neuron `i` (rate `r_i` while `k_i > 0`): `k_i − 1`,
//!   then the spike is routed to `j` as excitation with probability `p⁺_ij`,
//!   as inhibition with probability `p⁻_ij`, or departs with probability
//!   `d_i`
//!
//! Next-event times are sampled from the aggregate rate (Gillespie-style),
//! so the simulation is exact — there is no step-size knob. Statistics are
//! time-weighted between events, with the first 5% of the horizon discarded
//! as warm-up (the chain starts empty and the comparison targets are
//! stationary quantities).
//!
//! For subcritical networks the empirical time-weighted marginals converge
//! to the analytical excitation probabilities, and the joint occupancy
//! converges to the product of per-neuron geometric laws — which is exactly
//! what [`compare_product_form`] measures.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{NeuronId, RnnParameters};
use crate::solver::SteadyState;
use crate::{Result, RnnError, Scalar};

/// Fraction of the horizon discarded before statistics accumulate.
const WARMUP_FRACTION: f64 = 0.05;
/// Joint-occupancy collection is limited to this many neurons (state-space
/// growth).
const JOINT_NEURON_LIMIT: usize = 4;
/// Refresh the incrementally maintained firing-rate sum this often to stop
/// floating-point drift.
const FIRING_SUM_REFRESH: u64 = 1 << 16;

/// Instantaneous state of the simulated chain.
#[derive(Debug, Clone)]
pub struct NetworkState<T> {
    /// Non-negative integer potentials.
    pub k: Vec<u64>,
    /// Current simulated time.
    pub t: T,
}

/// Simulation controls.
#[derive(Debug, Clone)]
pub struct SimulationOptions<T> {
    pub horizon: T,
    pub seed: u64,
    /// Collect the joint occupancy histogram (small networks only).
    pub collect_joint: bool,
    /// Joint histogram truncation: states with any `k_i > k_max` are lumped
    /// into the overflow mass.
    pub k_max: usize,
    /// Abort threshold for a single potential; hitting it signals a
    /// supercritical network.
    pub potential_cap: u64,
}

impl<T: Scalar> SimulationOptions<T> {
    pub fn new(horizon: T, seed: u64) -> Self {
        Self {
            horizon,
            seed,
            collect_joint: false,
            k_max: 10,
            potential_cap: 1_000_000,
        }
    }
}

/// Time-weighted joint occupancy, truncated at `k_max`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointOccupancy<T> {
    pub k_max: usize,
    /// `(state, occupancy time)` pairs in lexicographic state order.
    pub entries: Vec<(Vec<u32>, T)>,
    /// Time spent in states outside the truncation box.
    pub overflow_weight: T,
}

/// Simulation output: empirical stationary statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport<T> {
    pub horizon: T,
    /// Length of the discarded warm-up prefix.
    pub warmup: T,
    /// Events counted after warm-up.
    pub event_count: u64,
    /// Time-weighted fraction of post-warm-up time with `k_i > 0`.
    pub empirical_q: Vec<T>,
    pub joint: Option<JointOccupancy<T>>,
}

impl<T: Scalar> SimulationReport<T> {
    /// Post-warm-up observation window.
    pub fn observed_time(&self) -> T {
        self.horizon - self.warmup
    }
}

/// Runs an exact simulation. Deterministic given the seed; replications
/// should derive their seeds as `master ^ replication_index`.
pub fn simulate<T: Scalar>(
    params: &RnnParameters<T>,
    horizon: T,
    seed: u64,
    collect_joint: bool,
) -> Result<SimulationReport<T>> {
    let mut options = SimulationOptions::new(horizon, seed);
    options.collect_joint = collect_joint;
    simulate_with(params, &options)
}

pub fn simulate_with<T: Scalar>(
    params: &RnnParameters<T>,
    options: &SimulationOptions<T>,
) -> Result<SimulationReport<T>> {
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
    if !(options.horizon > T::zero()) {
        return Err(RnnError::InvalidArgument("horizon must be > 0".into()));
    }
    let n = params.neuron_count();
    if options.collect_joint && n > JOINT_NEURON_LIMIT {
        return Err(RnnError::InvalidArgument(format!(
            "joint occupancy collection is limited to {JOINT_NEURON_LIMIT} neurons (got {n})"
        )));
    }

    let routing = params.routing_probabilities();
    let lambda_plus = params.lambda_plus();
    let lambda_minus = params.lambda_minus();
    let firing = params.firing();

    let exo_rate: T = lambda_plus
        .iter()
        .chain(lambda_minus)
        .fold(T::zero(), |acc, &x| acc + x);
    if exo_rate == T::zero() {
        // The chain starts empty, so without exogenous arrivals nothing can
        // ever happen.
        return Err(RnnError::FrozenChain);
    }

    let horizon = options.horizon;
    let warmup = horizon * T::from(WARMUP_FRACTION).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut state = NetworkState {
        k: vec![0u64; n],
        t: T::zero(),
    };

    let mut excited_time = vec![T::zero(); n];
    let mut joint: BTreeMap<Vec<u32>, T> = BTreeMap::new();
    let mut overflow_weight = T::zero();
    let mut event_count = 0u64;
    let mut events_since_refresh = 0u64;

    // Sum of firing rates over currently excited neurons, maintained
    // incrementally and refreshed periodically.
    let mut firing_sum = T::zero();

    loop {
        let total_rate = exo_rate + firing_sum;
        debug_assert!(total_rate > T::zero());

        let u: f64 = rng.random();
        let dt = -T::from(1.0 - u).unwrap().ln() / total_rate;
        let t_next = state.t + dt;
        let segment_end = t_next.min(horizon);

        // Time-weighted statistics over [t, segment_end), clipped to the
        // post-warm-up window.
        let begin = state.t.max(warmup);
        if segment_end > begin {
            let span = segment_end - begin;
            for i in 0..n {
                if state.k[i] > 0 {
                    excited_time[i] = excited_time[i] + span;
                }
            }
            if options.collect_joint {
                if state.k.iter().all(|&k| k as usize <= options.k_max) {
                    let key: Vec<u32> = state.k.iter().map(|&k| k as u32).collect();
                    let slot = joint.entry(key).or_insert_with(T::zero);
                    *slot = *slot + span;
                } else {
                    overflow_weight = overflow_weight + span;
                }
            }
        }

        if t_next >= horizon {
            break;
        }
        state.t = t_next;

        // Select the event: exogenous excitations, exogenous inhibitions,
        // then firings of excited neurons, in index order.
        let mut x = T::from(rng.random::<f64>()).unwrap() * total_rate;
        let mut event: Option<Event> = None;
        'select: {
            for i in 0..n {
                if x < lambda_plus[i] {
                    event = Some(Event::ExoExcite(i));
                    break 'select;
                }
                x = x - lambda_plus[i];
            }
            for i in 0..n {
                if x < lambda_minus[i] {
                    event = Some(Event::ExoInhibit(i));
                    break 'select;
                }
                x = x - lambda_minus[i];
            }
            let mut last_excited = None;
            for i in 0..n {
                if state.k[i] > 0 && firing[i] > T::zero() {
                    last_excited = Some(i);
                    if x < firing[i] {
                        event = Some(Event::Fire(i));
                        break 'select;
                    }
                    x = x - firing[i];
                }
            }
            // Numerical fall-off at x ≈ total_rate: attribute to the last
            // candidate.
            event = last_excited.map(Event::Fire).or(event).or_else(|| {
                (0..n)
                    .rev()
                    .find(|&i| lambda_minus[i] > T::zero() || lambda_plus[i] > T::zero())
                    .map(|i| {
                        if lambda_minus[i] > T::zero() {
                            Event::ExoInhibit(i)
                        } else {
                            Event::ExoExcite(i)
                        }
                    })
            });
        }
        let event = event.expect("positive total rate implies a candidate event");

        match event {
            Event::ExoExcite(i) => {
                bump(&mut state.k, i, firing, &mut firing_sum, options.potential_cap)?;
            }
            Event::ExoInhibit(i) => {
                drain(&mut state.k, i, firing, &mut firing_sum);
            }
            Event::Fire(i) => {
                drain(&mut state.k, i, firing, &mut firing_sum);
                // Route the emitted spike: departure, then excitatory
                // targets, then inhibitory targets.
                let mut y = T::from(rng.random::<f64>()).unwrap();
                let mut routed = false;
                if y < routing.depart[i] {
                    routed = true;
                } else {
                    y = y - routing.depart[i];
                    for j in 0..n {
                        let p = routing.p_plus.get(i, j);
                        if y < p {
                            bump(&mut state.k, j, firing, &mut firing_sum, options.potential_cap)?;
                            routed = true;
                            break;
                        }
                        y = y - p;
                    }
                    if !routed {
                        for j in 0..n {
                            let p = routing.p_minus.get(i, j);
                            if y < p {
                                drain(&mut state.k, j, firing, &mut firing_sum);
                                routed = true;
                                break;
                            }
                            y = y - p;
                        }
                    }
                }
                // Fall-off at y ≈ 1 counts as departure.
                let _ = routed;
            }
        }

        if state.t >= warmup {
            event_count += 1;
        }
        events_since_refresh += 1;
        if events_since_refresh >= FIRING_SUM_REFRESH {
            events_since_refresh = 0;
            firing_sum = (0..n)
                .filter(|&i| state.k[i] > 0)
                .fold(T::zero(), |acc, i| acc + firing[i]);
        }
        debug_assert!(state.k.iter().all(|&k| k <= options.potential_cap));
    }

    let observed = horizon - warmup;
    let empirical_q: Vec<T> = excited_time.iter().map(|&t| t / observed).collect();

    Ok(SimulationReport {
        horizon,
        warmup,
        event_count,
        empirical_q,
        joint: options.collect_joint.then(|| JointOccupancy {
            k_max: options.k_max,
            entries: joint.into_iter().collect(),
            overflow_weight,
        }),
    })
}

enum Event {
    ExoExcite(usize),
    ExoInhibit(usize),
    Fire(usize),
}

fn bump<T: Scalar>(
    k: &mut [u64],
    i: usize,
    firing: &[T],
    firing_sum: &mut T,
    cap: u64,
) -> Result<()> {
    k[i] += 1;
    if k[i] > cap {
        return Err(RnnError::PotentialCapExceeded { neuron: i, cap });
    }
    if k[i] == 1 {
        *firing_sum = *firing_sum + firing[i];
    }
    Ok(())
}

fn drain<T: Scalar>(k: &mut [u64], i: usize, firing: &[T], firing_sum: &mut T) {
    if k[i] > 0 {
        k[i] -= 1;
        if k[i] == 0 {
            *firing_sum = (*firing_sum - firing[i]).max(T::zero());
        }
    }
}

/// Gap between simulated statistics and the analytical solution.
#[derive(Debug, Clone, Serialize)]
pub struct ProductFormComparison<T> {
    /// `|empirical_q_i − q_i|` per neuron.
    pub marginal_gaps: Vec<T>,
    pub max_marginal_gap: T,
    /// Total-variation distance between the empirical joint occupancy and
    /// the product-form law over the truncation box (out-of-box mass is
    /// lumped into one complementary state). Present when the report
    /// collected a joint histogram.
    pub joint_tv: Option<T>,
}

/// Compares a simulation report against the analytical steady state. The
/// product form requires strict subcriticality, so saturated solutions are
/// refused.
pub fn compare_product_form<T: Scalar>(
    report: &SimulationReport<T>,
    steady: &SteadyState<T>,
    k_max: usize,
) -> Result<ProductFormComparison<T>> {
    if steady.is_saturated() || steady.q.iter().any(|&q| q >= T::one()) {
        let mut saturated: Vec<usize> =
            steady.saturated.iter().map(|&NeuronId(i)| i).collect();
        for (i, &q) in steady.q.iter().enumerate() {
            if q >= T::one() && !saturated.contains(&i) {
                saturated.push(i);
            }
        }
        saturated.sort_unstable();
        return Err(RnnError::SaturatedSteadyState { saturated });
    }
    let n = steady.q.len();
    if report.empirical_q.len() != n {
        return Err(RnnError::InvalidArgument(
            "report and steady state size mismatch".into(),
        ));
    }

    let marginal_gaps: Vec<T> = report
        .empirical_q
        .iter()
        .zip(&steady.q)
        .map(|(&e, &q)| (e - q).abs())
        .collect();
    let max_marginal_gap = marginal_gaps
        .iter()
        .fold(T::zero(), |acc, &g| acc.max(g));

    let joint_tv = match &report.joint {
        Some(joint) => Some(joint_tv_distance(joint, &steady.q, k_max, report)?),
        None => None,
    };

    Ok(ProductFormComparison {
        marginal_gaps,
        max_marginal_gap,
        joint_tv,
    })
}

fn joint_tv_distance<T: Scalar>(
    joint: &JointOccupancy<T>,
    q: &[T],
    k_max: usize,
    report: &SimulationReport<T>,
) -> Result<T> {
    if k_max > joint.k_max {
        return Err(RnnError::InvalidArgument(format!(
            "comparison k_max {k_max} exceeds collected truncation {}",
            joint.k_max
        )));
    }
    let n = q.len();
    let total = report.observed_time();
    if !(total > T::zero()) {
        return Err(RnnError::InvalidArgument("empty observation window".into()));
    }

    // Empirical probabilities: in-box states plus everything else lumped.
    let mut empirical: BTreeMap<&[u32], T> = BTreeMap::new();
    let mut outside = joint.overflow_weight;
    for (state, weight) in &joint.entries {
        if state.iter().all(|&k| (k as usize) <= k_max) {
            empirical.insert(state.as_slice(), *weight / total);
        } else {
            outside = outside + *weight;
        }
    }
    let empirical_out = outside / total;

    // Enumerate the full box and accumulate |p̂ − p|; the product-form
    // probability of a state is Π q_i^{k_i} (1 − q_i).
    let mut state = vec![0u32; n];
    let mut tv_sum = T::zero();
    let mut predicted_box_mass = T::zero();
    loop {
        let mut predicted = T::one();
        for i in 0..n {
            predicted = predicted * q[i].powi(state[i] as i32) * (T::one() - q[i]);
        }
        predicted_box_mass = predicted_box_mass + predicted;
        let observed = empirical
            .get(state.as_slice())
            .copied()
            .unwrap_or_else(T::zero);
        tv_sum = tv_sum + (observed - predicted).abs();

        // Odometer increment over the box.
        let mut pos = 0;
        loop {
            if pos == n {
                break;
            }
            if (state[pos] as usize) < k_max {
                state[pos] += 1;
                break;
            }
            state[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
    }

    let predicted_out = (T::one() - predicted_box_mass).max(T::zero());
    let half = T::from(0.5).unwrap();
    Ok(half * (tv_sum + (empirical_out - predicted_out).abs()))
}
