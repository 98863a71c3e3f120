//! Network parameterization and its consistency rules.
//!
//! A network of `L` neurons is described by excitatory/inhibitory weight
//! matrices `w⁺`, `w⁻` (spikes per unit time), exogenous Poisson rates `Λ`
//! (excitatory) and `λ` (inhibitory), departure probabilities `d`, and firing
//! rates `r`. Weights and rates are tied together: a spike emitted by neuron
//! `i` reaches neuron `j` as an excitatory spike with probability
//! `w⁺_ij / r_i`, as an inhibitory spike with probability `w⁻_ij / r_i`, or
//! leaves the network with probability `d_i`, and those probabilities sum to
//! one. Eliminating the probabilities gives
//!
//! ```text
//! r_i = Σ_j (w⁺_ij + w⁻_ij) / (1 − d_i)
//! ```
//!
//! `r` is stored explicitly rather than recomputed: a neuron with `d_i = 1`
//! (every emitted spike departs) has no outgoing weights and its firing rate
//! is a free parameter, which the rate relation cannot express. Such
//! pure-departure neurons are the natural building block for closed-form
//! simulator test cases.

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::{Result, RnnError, Scalar};

/// Index of a neuron inside its owning network, in `[0, L)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NeuronId(pub usize);

impl std::fmt::Display for NeuronId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Relative tolerance for the rate-consistency check.
fn consistency_tol<T: Scalar>() -> T {
    // 1e-12 is the f64 contract; widen to a few ulps for narrower scalars.
    let spec = T::from(1e-12).unwrap_or_else(T::epsilon);
    spec.max(T::epsilon() * T::from(8.0).unwrap())
}

/// Full parameterization of a random neural network.
///
/// Immutable after construction; constructors enforce the invariants
/// (non-negative entries, `d_i ∈ [0, 1]`, rate consistency).
#[derive(Debug, Clone, PartialEq)]
pub struct RnnParameters<T> {
    neuron_count: usize,
    w_plus: Matrix<T>,
    w_minus: Matrix<T>,
    lambda_plus: Vec<T>,
    lambda_minus: Vec<T>,
    depart: Vec<T>,
    firing: Vec<T>,
}

impl<T: Scalar> RnnParameters<T> {
    /// Builds a network whose firing rates are derived from the weights via
    /// the rate relation. Requires `d_i < 1` wherever a row has outgoing
    /// weight (the relation divides by `1 − d_i`).
    pub fn new(
        w_plus: Matrix<T>,
        w_minus: Matrix<T>,
        lambda_plus: Vec<T>,
        lambda_minus: Vec<T>,
        depart: Vec<T>,
    ) -> Result<Self> {
        let firing = derive_firing_rates(&w_plus, &w_minus, &depart)?;
        Self::with_explicit_rates(w_plus, w_minus, lambda_plus, lambda_minus, depart, firing)
    }

    /// Builds a network with explicitly supplied firing rates, checking the
    /// rate relation `r_i (1 − d_i) = Σ_j (w⁺_ij + w⁻_ij)`. Neurons with
    /// `d_i = 1` must have a zero weight row and may carry any `r_i ≥ 0`.
    pub fn with_explicit_rates(
        w_plus: Matrix<T>,
        w_minus: Matrix<T>,
        lambda_plus: Vec<T>,
        lambda_minus: Vec<T>,
        depart: Vec<T>,
        firing: Vec<T>,
    ) -> Result<Self> {
        let params = Self {
            neuron_count: depart.len(),
            w_plus,
            w_minus,
            lambda_plus,
            lambda_minus,
            depart,
            firing,
        };
        let violations = params.validate();
        if violations.is_empty() {
            Ok(params)
        } else {
            Err(RnnError::InconsistentParameters(
                violations
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; "),
            ))
        }
    }

    /// Bypasses validation. Used internally for finite-difference probes,
    /// which nudge a single weight below zero by epsilon.
    pub(crate) fn new_unchecked(
        w_plus: Matrix<T>,
        w_minus: Matrix<T>,
        lambda_plus: Vec<T>,
        lambda_minus: Vec<T>,
        depart: Vec<T>,
        firing: Vec<T>,
    ) -> Self {
        Self {
            neuron_count: depart.len(),
            w_plus,
            w_minus,
            lambda_plus,
            lambda_minus,
            depart,
            firing,
        }
    }

    pub fn neuron_count(&self) -> usize {
        self.neuron_count
    }

    pub fn w_plus(&self) -> &Matrix<T> {
        &self.w_plus
    }

    pub fn w_minus(&self) -> &Matrix<T> {
        &self.w_minus
    }

    /// Exogenous excitatory arrival rates `Λ`.
    pub fn lambda_plus(&self) -> &[T] {
        &self.lambda_plus
    }

    /// Exogenous inhibitory arrival rates `λ`.
    pub fn lambda_minus(&self) -> &[T] {
        &self.lambda_minus
    }

    /// Departure probabilities `d`.
    pub fn depart(&self) -> &[T] {
        &self.depart
    }

    /// Firing rates `r`.
    pub fn firing(&self) -> &[T] {
        &self.firing
    }

    /// Returns a copy with different exogenous rates (used per training
    /// sample and per prediction). Weights, `d` and `r` are unchanged, so no
    /// re-validation is needed.
    pub fn with_exogenous(&self, lambda_plus: Vec<T>, lambda_minus: Vec<T>) -> Result<Self> {
        if lambda_plus.len() != self.neuron_count || lambda_minus.len() != self.neuron_count {
            return Err(RnnError::InvalidArgument(format!(
                "exogenous rate vectors must have length {}",
                self.neuron_count
            )));
        }
        if lambda_plus
            .iter()
            .chain(lambda_minus.iter())
            .any(|x| !x.is_finite() || *x < T::zero())
        {
            return Err(RnnError::InvalidArgument(
                "exogenous rates must be finite and non-negative".into(),
            ));
        }
        let mut out = self.clone();
        out.lambda_plus = lambda_plus;
        out.lambda_minus = lambda_minus;
        Ok(out)
    }

    /// Checks every structural invariant and reports the violations found
    /// (empty means valid).
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.neuron_count;
        let mut out = Vec::new();

        for (name, len) in [
            ("Lambda", self.lambda_plus.len()),
            ("lambda", self.lambda_minus.len()),
            ("d", self.depart.len()),
            ("r", self.firing.len()),
        ] {
            if len != n {
                out.push(Violation::ShapeMismatch {
                    field: name,
                    got: len,
                    expected: n,
                });
            }
        }
        for (name, m) in [("w_plus", &self.w_plus), ("w_minus", &self.w_minus)] {
            if m.rows() != n || m.cols() != n {
                out.push(Violation::ShapeMismatch {
                    field: name,
                    got: m.rows() * m.cols(),
                    expected: n * n,
                });
            }
        }
        if !out.is_empty() {
            return out; // shape is broken; element checks would panic
        }

        let check_nonneg = |out: &mut Vec<Violation>, field: &'static str, idx: usize, v: T| {
            if !v.is_finite() {
                out.push(Violation::NotFinite { field, index: idx });
            } else if v < T::zero() {
                out.push(Violation::Negative {
                    field,
                    index: idx,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        };

        for i in 0..n {
            for j in 0..n {
                check_nonneg(&mut out, "w_plus", i * n + j, self.w_plus.get(i, j));
                check_nonneg(&mut out, "w_minus", i * n + j, self.w_minus.get(i, j));
            }
            check_nonneg(&mut out, "Lambda", i, self.lambda_plus[i]);
            check_nonneg(&mut out, "lambda", i, self.lambda_minus[i]);
            check_nonneg(&mut out, "r", i, self.firing[i]);
            let d = self.depart[i];
            if !d.is_finite() || d < T::zero() || d > T::one() {
                out.push(Violation::DepartureOutOfRange {
                    neuron: NeuronId(i),
                    value: d.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        if !out.is_empty() {
            return out;
        }

        // Rate consistency, written multiplication-side to stay defined at
        // d_i = 1: r_i (1 − d_i) must equal the outgoing weight row sum.
        let tol = consistency_tol::<T>();
        for i in 0..n {
            let row_sum = self
                .w_plus
                .row(i)
                .iter()
                .zip(self.w_minus.row(i))
                .fold(T::zero(), |acc, (&p, &m)| acc + p + m);
            let lhs = self.firing[i] * (T::one() - self.depart[i]);
            let scale = T::one().max(lhs.abs()).max(row_sum.abs());
            if (lhs - row_sum).abs() > tol * scale {
                out.push(Violation::RateInconsistent {
                    neuron: NeuronId(i),
                    lhs: lhs.to_f64().unwrap_or(f64::NAN),
                    row_sum: row_sum.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        out
    }

    /// Inverts the weight definition back into routing probabilities:
    /// `p⁺_ij = w⁺_ij / r_i`, `p⁻_ij = w⁻_ij / r_i`. A neuron that never
    /// fires (`r_i = 0`) gets zero rows and a departure probability of 1 by
    /// convention.
    pub fn routing_probabilities(&self) -> RoutingProbabilities<T> {
        let n = self.neuron_count;
        let mut p_plus = Matrix::zeros(n, n);
        let mut p_minus = Matrix::zeros(n, n);
        let mut depart = self.depart.clone();
        for i in 0..n {
            let r = self.firing[i];
            if r > T::zero() {
                for j in 0..n {
                    p_plus.set(i, j, self.w_plus.get(i, j) / r);
                    p_minus.set(i, j, self.w_minus.get(i, j) / r);
                }
            } else {
                depart[i] = T::one();
            }
        }
        RoutingProbabilities {
            p_plus,
            p_minus,
            depart,
        }
    }
}

/// Per-spike routing probabilities recovered from a parameter set.
#[derive(Debug, Clone)]
pub struct RoutingProbabilities<T> {
    /// `p⁺_ij`: probability a spike from `i` arrives at `j` as excitation.
    pub p_plus: Matrix<T>,
    /// `p⁻_ij`: probability a spike from `i` arrives at `j` as inhibition.
    pub p_minus: Matrix<T>,
    /// Departure probabilities, with the `r_i = 0` convention applied.
    pub depart: Vec<T>,
}

/// Derives firing rates from weights and departure probabilities:
/// `r_i = Σ_j (w⁺_ij + w⁻_ij) / (1 − d_i)`.
///
/// Errors when `d_i = 1` with a nonzero outgoing row (the relation divides
/// by zero); a zero row with `d_i = 1` yields `r_i = 0`.
pub fn derive_firing_rates<T: Scalar>(
    w_plus: &Matrix<T>,
    w_minus: &Matrix<T>,
    depart: &[T],
) -> Result<Vec<T>> {
    let n = depart.len();
    let mut firing = Vec::with_capacity(n);
    for i in 0..n {
        let row_sum = w_plus
            .row(i)
            .iter()
            .zip(w_minus.row(i))
            .fold(T::zero(), |acc, (&p, &m)| acc + p + m);
        let keep = T::one() - depart[i];
        if keep == T::zero() {
            if row_sum != T::zero() {
                return Err(RnnError::InconsistentParameters(format!(
                    "neuron {i} has d = 1 but nonzero outgoing weights (sum {row_sum})"
                )));
            }
            firing.push(T::zero());
        } else {
            firing.push(row_sum / keep);
        }
    }
    Ok(firing)
}

/// A single violated invariant reported by [`RnnParameters::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Negative {
        field: &'static str,
        index: usize,
        value: f64,
    },
    NotFinite {
        field: &'static str,
        index: usize,
    },
    DepartureOutOfRange {
        neuron: NeuronId,
        value: f64,
    },
    RateInconsistent {
        neuron: NeuronId,
        lhs: f64,
        row_sum: f64,
    },
    ShapeMismatch {
        field: &'static str,
        got: usize,
        expected: usize,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Negative {
                field,
                index,
                value,
            } => write!(f, "{field}[{index}] is negative ({value})"),
            Violation::NotFinite { field, index } => write!(f, "{field}[{index}] is not finite"),
            Violation::DepartureOutOfRange { neuron, value } => {
                write!(f, "departure probability of {neuron} out of [0, 1] ({value})")
            }
            Violation::RateInconsistent {
                neuron,
                lhs,
                row_sum,
            } => write!(
                f,
                "rate relation violated at {neuron}: r(1-d) = {lhs} vs weight row sum {row_sum}"
            ),
            Violation::ShapeMismatch {
                field,
                got,
                expected,
            } => write!(f, "{field} has {got} entries, expected {expected}"),
        }
    }
}

/// Assignment of neurons to classifier roles. Order matters: feature `j`
/// drives `input[j]`, class `c` is read from `output[c]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronRoles {
    pub input_ids: Vec<NeuronId>,
    pub hidden_ids: Vec<NeuronId>,
    pub output_ids: Vec<NeuronId>,
}

impl NeuronRoles {
    /// Contiguous layout: inputs first, hidden next, outputs last.
    pub fn contiguous(inputs: usize, hidden: usize, outputs: usize) -> Self {
        let id = NeuronId;
        Self {
            input_ids: (0..inputs).map(id).collect(),
            hidden_ids: (inputs..inputs + hidden).map(id).collect(),
            output_ids: (inputs + hidden..inputs + hidden + outputs).map(id).collect(),
        }
    }

    pub fn total_assigned(&self) -> usize {
        self.input_ids.len() + self.hidden_ids.len() + self.output_ids.len()
    }

    /// Checks that ids are in range and pairwise disjoint.
    pub fn validate(&self, neuron_count: usize) -> Result<()> {
        let mut seen = vec![false; neuron_count];
        for &NeuronId(i) in self
            .input_ids
            .iter()
            .chain(&self.hidden_ids)
            .chain(&self.output_ids)
        {
            if i >= neuron_count {
                return Err(RnnError::InvalidArgument(format!(
                    "neuron id {i} out of range (L = {neuron_count})"
                )));
            }
            if seen[i] {
                return Err(RnnError::InvalidArgument(format!(
                    "neuron id {i} assigned to more than one role"
                )));
            }
            seen[i] = true;
        }
        Ok(())
    }

    /// Additional requirement for classifier use.
    pub fn validate_classifier(&self, neuron_count: usize) -> Result<()> {
        self.validate(neuron_count)?;
        if self.input_ids.is_empty() || self.output_ids.is_empty() {
            return Err(RnnError::InvalidArgument(
                "classifier roles need non-empty input and output sets".into(),
            ));
        }
        Ok(())
    }
}

/// On-disk JSON form of a network. Field names are the external contract:
/// `L`, `w_plus` (flat, row-major), `w_minus`, `Lambda`, `lambda`, `d`, `r`,
/// `roles`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument<T> {
    #[serde(rename = "L")]
    pub neuron_count: usize,
    pub w_plus: Vec<T>,
    pub w_minus: Vec<T>,
    #[serde(rename = "Lambda")]
    pub lambda_plus: Vec<T>,
    #[serde(rename = "lambda")]
    pub lambda_minus: Vec<T>,
    pub d: Vec<T>,
    pub r: Vec<T>,
    #[serde(default)]
    pub roles: NeuronRoles,
}

impl<T: Scalar> ModelDocument<T> {
    pub fn from_params(params: &RnnParameters<T>, roles: &NeuronRoles) -> Self {
        Self {
            neuron_count: params.neuron_count(),
            w_plus: params.w_plus().as_flat().to_vec(),
            w_minus: params.w_minus().as_flat().to_vec(),
            lambda_plus: params.lambda_plus().to_vec(),
            lambda_minus: params.lambda_minus().to_vec(),
            d: params.depart().to_vec(),
            r: params.firing().to_vec(),
            roles: roles.clone(),
        }
    }

    /// Validates and converts back into a parameter set plus roles.
    pub fn into_params(self) -> Result<(RnnParameters<T>, NeuronRoles)> {
        let n = self.neuron_count;
        let w_plus = Matrix::from_flat(n, self.w_plus)?;
        let w_minus = Matrix::from_flat(n, self.w_minus)?;
        let params = RnnParameters::with_explicit_rates(
            w_plus,
            w_minus,
            self.lambda_plus,
            self.lambda_minus,
            self.d,
            self.r,
        )?;
        self.roles.validate(n)?;
        Ok((params, self.roles))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_neuron_single_edge() -> RnnParameters<f64> {
        // w⁺_01 = 1, everything else zero, d = 0.
        let mut w_plus = Matrix::zeros(2, 2);
        w_plus.set(0, 1, 1.0);
        RnnParameters::new(
            w_plus,
            Matrix::zeros(2, 2),
            vec![0.0; 2],
            vec![0.0; 2],
            vec![0.0; 2],
        )
        .unwrap()
    }

    #[test]
    fn firing_rates_from_row_sums() {
        let p = two_neuron_single_edge();
        assert_eq!(p.firing(), &[1.0, 0.0]);
    }

    #[test]
    fn firing_rates_with_departure() {
        // Single neuron, w⁺₀₀ = 0.5, w⁻₀₀ = 0.5, d = 0.5 → r = 2.
        let mut w_plus = Matrix::zeros(1, 1);
        w_plus.set(0, 0, 0.5);
        let mut w_minus = Matrix::zeros(1, 1);
        w_minus.set(0, 0, 0.5);
        let r = derive_firing_rates(&w_plus, &w_minus, &[0.5]).unwrap();
        assert_eq!(r, vec![2.0]);
    }

    #[test]
    fn firing_rates_zero_network() {
        let r = derive_firing_rates::<f64>(
            &Matrix::zeros(3, 3),
            &Matrix::zeros(3, 3),
            &[0.0, 0.0, 0.0],
        )
        .unwrap();
        assert_eq!(r, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn full_departure_with_outgoing_weights_is_inconsistent() {
        let mut w_plus = Matrix::zeros(2, 2);
        w_plus.set(0, 1, 1.0);
        let err = derive_firing_rates(&w_plus, &Matrix::zeros(2, 2), &[1.0, 0.0]);
        assert!(matches!(err, Err(RnnError::InconsistentParameters(_))));
    }

    #[test]
    fn pure_departure_neuron_with_free_rate() {
        // d = 1, zero weight row, explicit r = 2: legal.
        let p = RnnParameters::with_explicit_rates(
            Matrix::zeros(1, 1),
            Matrix::zeros(1, 1),
            vec![1.0],
            vec![0.0],
            vec![1.0],
            vec![2.0],
        )
        .unwrap();
        assert_eq!(p.firing(), &[2.0]);
    }

    #[test]
    fn routing_single_edge() {
        let p = two_neuron_single_edge();
        let routing = p.routing_probabilities();
        assert_eq!(routing.p_plus.get(0, 1), 1.0);
        let row_total: f64 = routing.p_plus.row(0).iter().sum::<f64>()
            + routing.p_minus.row(0).iter().sum::<f64>()
            + routing.depart[0];
        assert!((row_total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn routing_symmetric_split() {
        let mut w_plus = Matrix::zeros(2, 2);
        w_plus.set(0, 1, 1.0);
        let mut w_minus = Matrix::zeros(2, 2);
        w_minus.set(0, 1, 1.0);
        let p = RnnParameters::new(w_plus, w_minus, vec![0.0; 2], vec![0.0; 2], vec![0.0; 2])
            .unwrap();
        let routing = p.routing_probabilities();
        assert_eq!(routing.p_plus.get(0, 1), 0.5);
        assert_eq!(routing.p_minus.get(0, 1), 0.5);
    }

    #[test]
    fn routing_silent_neuron_departs_by_convention() {
        let p = two_neuron_single_edge();
        let routing = p.routing_probabilities();
        // Neuron 1 never fires: zero rows, d reported as 1.
        assert!(routing.p_plus.row(1).iter().all(|&x| x == 0.0));
        assert_eq!(routing.depart[1], 1.0);
    }

    #[test]
    fn validate_accepts_consistent_network() {
        assert!(two_neuron_single_edge().validate().is_empty());
    }

    #[test]
    fn validate_flags_rate_inconsistency() {
        let mut w_plus = Matrix::zeros(2, 2);
        w_plus.set(0, 1, 1.0);
        let p = RnnParameters::new_unchecked(
            w_plus,
            Matrix::zeros(2, 2),
            vec![0.0; 2],
            vec![0.0; 2],
            vec![0.0; 2],
            vec![5.0, 0.0], // r₀ claims 5, row sum is 1
        );
        let violations = p.validate();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::RateInconsistent { neuron, .. } if neuron.0 == 0)));
    }

    #[test]
    fn validate_flags_negative_weight() {
        let mut w_minus = Matrix::zeros(2, 2);
        w_minus.set(1, 0, -0.25);
        let p = RnnParameters::new_unchecked(
            Matrix::zeros(2, 2),
            w_minus,
            vec![0.0; 2],
            vec![0.0; 2],
            vec![0.0; 2],
            vec![0.0, -0.25],
        );
        let violations = p.validate();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::Negative { field: "w_minus", .. })));
    }

    #[test]
    fn roles_reject_overlap() {
        let roles = NeuronRoles {
            input_ids: vec![NeuronId(0)],
            hidden_ids: vec![NeuronId(0)],
            output_ids: vec![NeuronId(1)],
        };
        assert!(roles.validate(2).is_err());
    }

    #[test]
    fn model_document_round_trip() {
        let p = two_neuron_single_edge();
        let roles = NeuronRoles::contiguous(1, 0, 1);
        let doc = ModelDocument::from_params(&p, &roles);
        let json = serde_json::to_string(&doc).unwrap();
        // External field names are a contract.
        for key in ["\"L\"", "\"w_plus\"", "\"w_minus\"", "\"Lambda\"", "\"lambda\"", "\"d\"", "\"r\"", "\"roles\""] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
        let parsed: ModelDocument<f64> = serde_json::from_str(&json).unwrap();
        let (p2, roles2) = parsed.into_params().unwrap();
        assert_eq!(p, p2);
        assert_eq!(roles, roles2);
    }

    proptest! {
        // Routing rows always close to 1 with the departure probability, and
        // scaling all weights scales r linearly.
        #[test]
        fn routing_rows_sum_to_one(
            w in proptest::collection::vec(0.0f64..2.0, 9),
            d in proptest::collection::vec(0.0f64..0.9, 3),
            scale in 0.1f64..10.0,
        ) {
            let w_plus = Matrix::from_flat(3, w.clone()).unwrap();
            let w_minus = Matrix::from_flat(3, w.iter().rev().copied().collect()).unwrap();
            let p = RnnParameters::new(
                w_plus.clone(), w_minus.clone(), vec![0.0; 3], vec![0.0; 3], d.clone(),
            ).unwrap();
            let routing = p.routing_probabilities();
            for i in 0..3 {
                let total: f64 = routing.p_plus.row(i).iter().sum::<f64>()
                    + routing.p_minus.row(i).iter().sum::<f64>()
                    + routing.depart[i];
                prop_assert!((total - 1.0).abs() < 1e-12, "row {i} sums to {total}");
            }

            // Homogeneity of the rate relation.
            let scaled = RnnParameters::new(
                w_plus.map(|x| x * scale),
                w_minus.map(|x| x * scale),
                vec![0.0; 3], vec![0.0; 3], d,
            ).unwrap();
            for i in 0..3 {
                let expected = p.firing()[i] * scale;
                let rel = (scaled.firing()[i] - expected).abs() / expected.abs().max(1e-300);
                prop_assert!(expected == 0.0 || rel < 1e-12);
            }
        }
    }
}
