//! Dataset ingestion: CSV loading, rate encoding, and stratified splits.
//!
//! Features become exogenous excitatory rates. Each attribute is mapped
//! affinely from its train-split range onto `[0.1, 1.0]` so that every input
//! neuron receives strictly positive excitation (a zero-rate input neuron is
//! invisible to the network). Class labels become one-hot target vectors at
//! configurable high/low levels.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Result, RnnError, Scalar};

/// Lower end of the normalized rate range.
const RATE_LO: f64 = 0.1;
/// Upper end of the normalized rate range.
const RATE_HI: f64 = 1.0;

/// Column reference: positional index or header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

/// Parsing schema for a CSV file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    pub label_column: ColumnRef,
    /// Token marking a missing value; rows containing it are dropped.
    #[serde(default)]
    pub missing_token: Option<String>,
    /// Fixed label → class-index mapping. When absent, classes are the
    /// sorted distinct labels.
    #[serde(default)]
    pub class_order: Option<Vec<String>>,
    #[serde(default)]
    pub has_header: bool,
}

/// A loaded dataset before encoding.
#[derive(Debug, Clone)]
pub struct RawDataset<T> {
    pub name: String,
    /// `(features, class index)` per usable row.
    pub rows: Vec<(Vec<T>, usize)>,
    pub attribute_count: usize,
    pub class_names: Vec<String>,
    /// Rows removed by the missing-value policy.
    pub dropped_rows: usize,
}

impl<T: Scalar> RawDataset<T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Per-class row counts, indexed by class.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_names.len()];
        for (_, label) in &self.rows {
            counts[*label] += 1;
        }
        counts
    }
}

/// Loads a comma-separated file according to `schema`. Parsing is
/// locale-independent (dot decimal separator); malformed rows and unknown
/// labels error with their line number.
pub fn load_csv<T: Scalar>(path: &Path, schema: &Schema) -> Result<RawDataset<T>> {
    let text = std::fs::read_to_string(path)?;
    let display_path = path.display().to_string();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| display_path.clone());
    parse_csv(&text, &display_path, name, schema)
}

fn parse_csv<T: Scalar>(
    text: &str,
    display_path: &str,
    name: String,
    schema: &Schema,
) -> Result<RawDataset<T>> {
    let malformed = |line: usize, message: String| RnnError::MalformedRow {
        path: display_path.to_string(),
        line,
        message,
    };

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(idx, l)| (idx + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let mut header: Option<Vec<String>> = None;
    if schema.has_header {
        match lines.next() {
            Some((_, l)) => {
                header = Some(l.split(',').map(|s| s.trim().to_string()).collect());
            }
            None => return Err(malformed(1, "missing header row".into())),
        }
    }

    let label_at = |line: usize, field_count: usize| -> Result<usize> {
        match &schema.label_column {
            ColumnRef::Index(i) => {
                if *i < field_count {
                    Ok(*i)
                } else {
                    Err(malformed(
                        line,
                        format!("label column {i} out of range ({field_count} fields)"),
                    ))
                }
            }
            ColumnRef::Name(name) => header
                .as_ref()
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| {
                    malformed(line, format!("label column {name:?} not found in header"))
                }),
        }
    };

    struct PendingRow<T> {
        features: Vec<T>,
        label: String,
        line: usize,
    }

    let mut pending: Vec<PendingRow<T>> = Vec::new();
    let mut attribute_count: Option<usize> = None;
    let mut dropped_rows = 0usize;

    for (line, raw) in lines {
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        let label_idx = label_at(line, fields.len())?;

        if let Some(token) = &schema.missing_token {
            if fields.iter().any(|f| *f == token) {
                dropped_rows += 1;
                continue;
            }
        }

        let mut features = Vec::with_capacity(fields.len() - 1);
        for (i, field) in fields.iter().enumerate() {
            if i == label_idx {
                continue;
            }
            let value: f64 = field.parse().map_err(|_| {
                malformed(line, format!("cannot parse field {i} ({field:?}) as a number"))
            })?;
            if !value.is_finite() {
                return Err(malformed(line, format!("field {i} is not finite")));
            }
            features.push(T::from(value).unwrap());
        }

        match attribute_count {
            None => attribute_count = Some(features.len()),
            Some(n) if n != features.len() => {
                return Err(malformed(
                    line,
                    format!("row has {} attributes, expected {n}", features.len()),
                ));
            }
            _ => {}
        }

        pending.push(PendingRow {
            features,
            label: fields[label_idx].to_string(),
            line,
        });
    }

    // Resolve the class order.
    let class_names: Vec<String> = match &schema.class_order {
        Some(order) => order.clone(),
        None => {
            let mut distinct: Vec<String> =
                pending.iter().map(|r| r.label.clone()).collect();
            distinct.sort();
            distinct.dedup();
            distinct
        }
    };
    if class_names.is_empty() {
        return Err(RnnError::InvalidArgument(format!(
            "{display_path}: no classes found"
        )));
    }
    let class_index: BTreeMap<&str, usize> = class_names
        .iter()
        .enumerate()
        .map(|(i, name)| (name.as_str(), i))
        .collect();

    let mut rows = Vec::with_capacity(pending.len());
    for row in pending {
        let label = *class_index
            .get(row.label.as_str())
            .ok_or_else(|| RnnError::UnknownLabel {
                path: display_path.to_string(),
                line: row.line,
                label: row.label.clone(),
            })?;
        rows.push((row.features, label));
    }

    Ok(RawDataset {
        name,
        rows,
        attribute_count: attribute_count.unwrap_or(0),
        class_names,
        dropped_rows,
    })
}

/// Train/test row indices produced by [`stratified_split`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits rows so that each class lands in the test set in proportion
/// `test_fraction`, within one sample. Deterministic for a given seed.
pub fn stratified_split<T: Scalar>(
    raw: &RawDataset<T>,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitAssignment> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(RnnError::InvalidSplit(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }

    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); raw.class_names.len()];
    for (idx, (_, label)) in raw.rows.iter().enumerate() {
        per_class[*label].push(idx);
    }
    for (class, members) in per_class.iter().enumerate() {
        if members.len() < 2 {
            return Err(RnnError::InvalidSplit(format!(
                "class {:?} has {} sample(s); need at least 2",
                raw.class_names[class],
                members.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut members in per_class {
        members.shuffle(&mut rng);
        let want = (members.len() as f64 * test_fraction).round() as usize;
        let take = want.min(members.len() - 1);
        test.extend_from_slice(&members[..take]);
        train.extend_from_slice(&members[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitAssignment { train, test })
}

/// Target encoding levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncodingConfig<T> {
    pub target_high: T,
    pub target_low: T,
}

impl<T: Scalar> Default for EncodingConfig<T> {
    fn default() -> Self {
        Self {
            target_high: T::from(0.9).unwrap(),
            target_low: T::from(0.1).unwrap(),
        }
    }
}

/// Per-attribute affine normalization parameters (train-split min/max).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization<T> {
    pub mins: Vec<T>,
    pub maxs: Vec<T>,
}

impl<T: Scalar> Normalization<T> {
    /// Fits min/max per attribute over the given rows.
    fn fit(rows: &[(Vec<T>, usize)], indices: &[usize], attribute_count: usize) -> Self {
        let mut mins = vec![T::infinity(); attribute_count];
        let mut maxs = vec![T::neg_infinity(); attribute_count];
        for &idx in indices {
            for (a, &v) in rows[idx].0.iter().enumerate() {
                mins[a] = mins[a].min(v);
                maxs[a] = maxs[a].max(v);
            }
        }
        Self { mins, maxs }
    }

    /// Maps a raw value onto `[0.1, 1.0]`, clamped; constant attributes map
    /// to the midpoint 0.55.
    pub fn apply(&self, attribute: usize, value: T) -> T {
        let lo = T::from(RATE_LO).unwrap();
        let hi = T::from(RATE_HI).unwrap();
        let span = self.maxs[attribute] - self.mins[attribute];
        if span <= T::zero() {
            return T::from((RATE_LO + RATE_HI) / 2.0).unwrap();
        }
        let scaled = lo + (hi - lo) * (value - self.mins[attribute]) / span;
        scaled.max(lo).min(hi)
    }

    /// Inverse of [`apply`](Self::apply) (constant attributes return their
    /// single value).
    pub fn invert(&self, attribute: usize, normalized: T) -> T {
        let lo = T::from(RATE_LO).unwrap();
        let hi = T::from(RATE_HI).unwrap();
        let span = self.maxs[attribute] - self.mins[attribute];
        if span <= T::zero() {
            return self.mins[attribute];
        }
        self.mins[attribute] + (normalized - lo) / (hi - lo) * span
    }

    pub fn attribute_count(&self) -> usize {
        self.mins.len()
    }
}

/// Encoded dataset: rate vectors, one-hot targets, split, and the
/// normalization needed to encode unseen rows the same way.
#[derive(Debug, Clone)]
pub struct LabeledDataset<T> {
    pub name: String,
    /// Normalized rate vectors for every row (train and test).
    pub inputs: Vec<Vec<T>>,
    /// One-hot targets at `target_high` / `target_low` for every row.
    pub targets: Vec<Vec<T>>,
    /// Class index per row.
    pub labels: Vec<usize>,
    pub split: SplitAssignment,
    pub normalization: Normalization<T>,
    pub encoding: EncodingConfig<T>,
    pub class_names: Vec<String>,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn feature_count(&self) -> usize {
        self.normalization.attribute_count()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }
}

/// Normalizes features against the train split and one-hot encodes targets.
pub fn normalize_and_encode<T: Scalar>(
    raw: &RawDataset<T>,
    encoding: &EncodingConfig<T>,
    split: &SplitAssignment,
) -> Result<LabeledDataset<T>> {
    if !(encoding.target_low < encoding.target_high && encoding.target_high <= T::one()) {
        return Err(RnnError::InvalidArgument(
            "target encoding requires low < high ≤ 1".into(),
        ));
    }
    if split.train.is_empty() {
        return Err(RnnError::InvalidSplit("empty train split".into()));
    }
    for &idx in split.train.iter().chain(&split.test) {
        if idx >= raw.rows.len() {
            return Err(RnnError::InvalidSplit(format!(
                "split references row {idx}, dataset has {}",
                raw.rows.len()
            )));
        }
    }

    let normalization = Normalization::fit(&raw.rows, &split.train, raw.attribute_count);

    let mut inputs = Vec::with_capacity(raw.rows.len());
    let mut targets = Vec::with_capacity(raw.rows.len());
    let mut labels = Vec::with_capacity(raw.rows.len());
    for (features, label) in &raw.rows {
        let rates: Vec<T> = features
            .iter()
            .enumerate()
            .map(|(a, &v)| normalization.apply(a, v))
            .collect();
        let mut target = vec![encoding.target_low; raw.class_names.len()];
        target[*label] = encoding.target_high;
        inputs.push(rates);
        targets.push(target);
        labels.push(*label);
    }

    Ok(LabeledDataset {
        name: raw.name.clone(),
        inputs,
        targets,
        labels,
        split: split.clone(),
        normalization,
        encoding: encoding.clone(),
        class_names: raw.class_names.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn schema_last_column() -> Schema {
        Schema {
            label_column: ColumnRef::Index(2),
            missing_token: None,
            class_order: None,
            has_header: false,
        }
    }

    #[test]
    fn parses_basic_csv() {
        let raw: RawDataset<f64> = parse_csv(
            "1.0,2.0,a\n3.0,4.0,b\n5.5,0.25,a\n",
            "test.csv",
            "test".into(),
            &schema_last_column(),
        )
        .unwrap();
        assert_eq!(raw.len(), 3);
        assert_eq!(raw.attribute_count, 2);
        assert_eq!(raw.class_names, vec!["a", "b"]);
        assert_eq!(raw.class_histogram(), vec![2, 1]);
    }

    #[test]
    fn drops_rows_with_missing_token() {
        let schema = Schema {
            missing_token: Some("?".into()),
            ..schema_last_column()
        };
        let raw: RawDataset<f64> =
            parse_csv("1,2,a\n1,?,b\n3,4,b\n", "t.csv", "t".into(), &schema).unwrap();
        assert_eq!(raw.len(), 2);
        assert_eq!(raw.dropped_rows, 1);
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = parse_csv::<f64>(
            "1,2,a\n1,notanumber,b\n",
            "t.csv",
            "t".into(),
            &schema_last_column(),
        )
        .unwrap_err();
        match err {
            RnnError::MalformedRow { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_label_rejected_with_class_order() {
        let schema = Schema {
            class_order: Some(vec!["a".into()]),
            ..schema_last_column()
        };
        let err =
            parse_csv::<f64>("1,2,a\n3,4,b\n", "t.csv", "t".into(), &schema).unwrap_err();
        assert!(matches!(err, RnnError::UnknownLabel { line: 2, .. }));
    }

    #[test]
    fn header_name_resolution() {
        let schema = Schema {
            label_column: ColumnRef::Name("species".into()),
            missing_token: None,
            class_order: None,
            has_header: true,
        };
        let raw: RawDataset<f64> = parse_csv(
            "x,species,y\n1.0,a,2.0\n3.0,b,4.0\n",
            "t.csv",
            "t".into(),
            &schema,
        )
        .unwrap();
        assert_eq!(raw.attribute_count, 2);
        assert_eq!(raw.rows[0].0, vec![1.0, 2.0]);
    }

    fn toy_raw(n_per_class: usize) -> RawDataset<f64> {
        let mut rows = Vec::new();
        for i in 0..n_per_class {
            rows.push((vec![i as f64, 10.0 - i as f64], 0));
            rows.push((vec![i as f64 + 100.0, i as f64], 1));
        }
        RawDataset {
            name: "toy".into(),
            rows,
            attribute_count: 2,
            class_names: vec!["a".into(), "b".into()],
            dropped_rows: 0,
        }
    }

    #[test]
    fn split_is_deterministic_and_stratified() {
        let raw = toy_raw(10);
        let s1 = stratified_split(&raw, 0.2, 7).unwrap();
        let s2 = stratified_split(&raw, 0.2, 7).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.test.len(), 4);
        // Exactly 2 per class.
        let class_counts = s1
            .test
            .iter()
            .fold([0usize; 2], |mut acc, &i| {
                acc[raw.rows[i].1] += 1;
                acc
            });
        assert_eq!(class_counts, [2, 2]);
        // Disjoint and covering.
        let mut all: Vec<usize> = s1.train.iter().chain(&s1.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_tiny_class() {
        // One lone sample in class b.
        let raw = RawDataset::<f64> {
            name: "t".into(),
            rows: vec![
                (vec![0.0], 0),
                (vec![1.0], 0),
                (vec![2.0], 1),
            ],
            attribute_count: 1,
            class_names: vec!["a".into(), "b".into()],
            dropped_rows: 0,
        };
        assert!(matches!(
            stratified_split(&raw, 0.3, 0),
            Err(RnnError::InvalidSplit(_))
        ));
    }

    #[test]
    fn normalization_maps_train_range_endpoints() {
        let raw = RawDataset::<f64> {
            name: "t".into(),
            rows: vec![
                (vec![1.0, 5.0], 0),
                (vec![10.0, 5.0], 1),
                (vec![4.0, 5.0], 0),
                (vec![7.0, 5.0], 1),
            ],
            attribute_count: 2,
            class_names: vec!["a".into(), "b".into()],
            dropped_rows: 0,
        };
        let split = SplitAssignment {
            train: vec![0, 1],
            test: vec![2, 3],
        };
        let ds = normalize_and_encode(&raw, &EncodingConfig::default(), &split).unwrap();
        assert!((ds.inputs[0][0] - 0.1).abs() < 1e-15); // train min → 0.1
        assert!((ds.inputs[1][0] - 1.0).abs() < 1e-15); // train max → 1.0
        // Constant attribute maps to the midpoint everywhere.
        for row in &ds.inputs {
            assert!((row[1] - 0.55).abs() < 1e-15);
        }
        // One-hot targets.
        assert_eq!(ds.targets[0], vec![0.9, 0.1]);
        assert_eq!(ds.targets[1], vec![0.1, 0.9]);
    }

    #[test]
    fn test_rows_use_train_parameters_and_clamp() {
        let raw = RawDataset::<f64> {
            name: "t".into(),
            rows: vec![
                (vec![0.0], 0),
                (vec![10.0], 1),
                (vec![-5.0], 0),  // below train range
                (vec![20.0], 1), // above train range
            ],
            attribute_count: 1,
            class_names: vec!["a".into(), "b".into()],
            dropped_rows: 0,
        };
        let split = SplitAssignment {
            train: vec![0, 1],
            test: vec![2, 3],
        };
        let ds = normalize_and_encode(&raw, &EncodingConfig::default(), &split).unwrap();
        assert_eq!(ds.normalization.mins, vec![0.0]);
        assert_eq!(ds.normalization.maxs, vec![10.0]);
        assert_eq!(ds.inputs[2][0], 0.1);
        assert_eq!(ds.inputs[3][0], 1.0);
    }

    proptest! {
        // Affine round trip: apply then invert recovers the raw value for
        // in-range data.
        #[test]
        fn normalize_round_trip(
            values in proptest::collection::vec(-1000.0f64..1000.0, 4..40),
        ) {
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assume!(hi - lo > 1e-6);
            let norm = Normalization { mins: vec![lo], maxs: vec![hi] };
            for &v in &values {
                let back = norm.invert(0, norm.apply(0, v));
                let rel = (back - v).abs() / v.abs().max(1.0);
                prop_assert!(rel < 1e-9, "{v} -> {back}");
            }
        }

        // Per-class test proportions stay within one sample of the target.
        #[test]
        fn split_proportions_within_one(
            seed in any::<u64>(),
            n_a in 4usize..60,
            n_b in 4usize..60,
            frac in 0.1f64..0.5,
        ) {
            let mut rows = Vec::new();
            for i in 0..n_a { rows.push((vec![i as f64], 0)); }
            for i in 0..n_b { rows.push((vec![i as f64], 1)); }
            let raw = RawDataset::<f64> {
                name: "t".into(),
                rows,
                attribute_count: 1,
                class_names: vec!["a".into(), "b".into()],
                dropped_rows: 0,
            };
            let split = stratified_split(&raw, frac, seed).unwrap();
            for (class, n_class) in [(0usize, n_a), (1usize, n_b)] {
                let in_test = split.test.iter().filter(|&&i| raw.rows[i].1 == class).count();
                let target = n_class as f64 * frac;
                prop_assert!((in_test as f64 - target).abs() <= 1.0,
                    "class {class}: {in_test} of {n_class} vs target {target}");
            }
        }
    }
}
