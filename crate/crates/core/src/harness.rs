//! Classification benchmark harness: prediction, evaluation, and the
//! multi-dataset benchmark runner.
//!
//! Published reference results for the four benchmark datasets are embedded
//! as display-only constants so reports can show them side by side with the
//! measured numbers; they are never used in any computation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{load_csv, normalize_and_encode, stratified_split, Schema};
use crate::learning::{train, TrainedModel, TrainingConfig};
use crate::model::NeuronId;
use crate::solver::{solve_fixed_point, SolverOptions};
use crate::{Result, RnnError, Scalar};

/// Outcome of classifying one input.
#[derive(Debug, Clone, Serialize)]
pub struct Prediction<T> {
    /// Arg-max class over the output neurons' excitation probabilities;
    /// exact ties resolve to the lowest class index.
    pub class_index: usize,
    /// Excitation probability per output neuron, in class order.
    pub output_q: Vec<T>,
}

/// Classifies one sample given its already-normalized input rates.
pub fn predict<T: Scalar>(
    model: &TrainedModel<T>,
    input_rates: &[T],
    solver_options: &SolverOptions<T>,
) -> Result<Prediction<T>> {
    let n = model.params.neuron_count();
    if input_rates.len() != model.roles.input_ids.len() {
        return Err(RnnError::InvalidArgument(format!(
            "expected {} input rates, got {}",
            model.roles.input_ids.len(),
            input_rates.len()
        )));
    }
    // Input neurons carry the sample's rates; all other exogenous rates are
    // whatever the model stores (zero for trained models).
    let mut lambda_plus = vec![T::zero(); n];
    for (j, &NeuronId(i)) in model.roles.input_ids.iter().enumerate() {
        lambda_plus[i] = input_rates[j];
    }
    let probe = model
        .params
        .with_exogenous(lambda_plus, model.params.lambda_minus().to_vec())?;
    let steady = solve_fixed_point(&probe, solver_options)?;

    let output_q: Vec<T> = model
        .roles
        .output_ids
        .iter()
        .map(|&NeuronId(i)| steady.q[i])
        .collect();
    let mut class_index = 0;
    for (c, &q) in output_q.iter().enumerate() {
        if q > output_q[class_index] {
            class_index = c;
        }
    }
    Ok(Prediction {
        class_index,
        output_q,
    })
}

/// Classifies one raw (unnormalized) feature vector using the model's stored
/// normalization.
pub fn predict_raw<T: Scalar>(
    model: &TrainedModel<T>,
    features: &[T],
    solver_options: &SolverOptions<T>,
) -> Result<Prediction<T>> {
    if features.len() != model.normalization.attribute_count() {
        return Err(RnnError::InvalidArgument(format!(
            "expected {} features, got {}",
            model.normalization.attribute_count(),
            features.len()
        )));
    }
    let rates: Vec<T> = features
        .iter()
        .enumerate()
        .map(|(a, &v)| model.normalization.apply(a, v))
        .collect();
    predict(model, &rates, solver_options)
}

/// Row-normalized confusion matrix (row = true class, column = predicted).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfusionMatrix<T> {
    pub class_names: Vec<String>,
    /// Row-normalized rates; a row with zero support is all zeros.
    pub rates: Vec<Vec<T>>,
    /// True-class sample counts.
    pub support: Vec<usize>,
}

impl<T: Scalar> ConfusionMatrix<T> {
    fn from_counts(class_names: Vec<String>, counts: &[Vec<usize>]) -> Self {
        let rates = counts
            .iter()
            .map(|row| {
                let total: usize = row.iter().sum();
                row.iter()
                    .map(|&c| {
                        if total == 0 {
                            T::zero()
                        } else {
                            T::from(c).unwrap() / T::from(total).unwrap()
                        }
                    })
                    .collect()
            })
            .collect();
        let support = counts.iter().map(|row| row.iter().sum()).collect();
        Self {
            class_names,
            rates,
            support,
        }
    }

    /// Support-weighted diagonal mass = overall accuracy.
    pub fn accuracy(&self) -> T {
        let total: usize = self.support.iter().sum();
        if total == 0 {
            return T::zero();
        }
        let mut correct = T::zero();
        for (c, row) in self.rates.iter().enumerate() {
            correct = correct + row[c] * T::from(self.support[c]).unwrap();
        }
        correct / T::from(total).unwrap()
    }
}

/// Evaluation result on a held-out set.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationOutcome<T> {
    pub confusion: ConfusionMatrix<T>,
    pub accuracy: T,
}

/// Evaluates a model on raw `(features, class index)` rows. The rows must be
/// disjoint from the training data for the numbers to mean anything; that is
/// the caller's contract.
pub fn evaluate<T: Scalar>(
    model: &TrainedModel<T>,
    rows: &[(Vec<T>, usize)],
    solver_options: &SolverOptions<T>,
) -> Result<EvaluationOutcome<T>> {
    if rows.is_empty() {
        return Err(RnnError::EmptyTestSet);
    }
    let classes = model.class_names.len();
    let mut counts = vec![vec![0usize; classes]; classes];
    for (features, label) in rows {
        if *label >= classes {
            return Err(RnnError::InvalidArgument(format!(
                "label index {label} out of range ({classes} classes)"
            )));
        }
        let prediction = predict_raw(model, features, solver_options)?;
        counts[*label][prediction.class_index] += 1;
    }
    let confusion = ConfusionMatrix::from_counts(model.class_names.clone(), &counts);
    let accuracy = confusion.accuracy();
    Ok(EvaluationOutcome {
        confusion,
        accuracy,
    })
}

/// Published reference results, embedded for side-by-side display only.
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceResults {
    /// Reported accuracy of this model family on the dataset.
    pub accuracy: Option<f64>,
    /// Reported accuracy of the conventional-ANN comparison baseline.
    pub baseline_accuracy: Option<f64>,
    /// Reported row-normalized confusion matrix.
    pub confusion: Option<Vec<Vec<f64>>>,
    pub note: &'static str,
}

/// Looks up embedded reference numbers for a canonical dataset name.
pub fn reference_results(name: &str) -> Option<ReferenceResults> {
    let source = "published reference results; displayed only, never used in computation";
    match name {
        "iris" => Some(ReferenceResults {
            accuracy: Some(1.0),
            baseline_accuracy: Some(0.959),
            confusion: Some(vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ]),
            note: source,
        }),
        "breast_cancer_wisconsin" => Some(ReferenceResults {
            accuracy: Some(0.964),
            baseline_accuracy: Some(0.963),
            confusion: Some(vec![vec![0.984, 0.016], vec![0.067, 0.933]]),
            note: source,
        }),
        "glass" => Some(ReferenceResults {
            accuracy: None,
            baseline_accuracy: None,
            // Second row as published sums to 0.9409, not 1; kept verbatim.
            confusion: Some(vec![vec![1.0, 0.0], vec![0.127, 0.8139]]),
            note: source,
        }),
        "ovarian" => Some(ReferenceResults {
            accuracy: None,
            baseline_accuracy: None,
            confusion: Some(vec![vec![1.0, 0.0], vec![0.1064, 0.8936]]),
            note: source,
        }),
        _ => None,
    }
}

fn default_runs() -> usize {
    10
}

fn default_test_fraction() -> f64 {
    0.2
}

/// One dataset entry in a benchmark configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct BenchDataset<T> {
    pub name: String,
    /// CSV path; relative paths resolve against the benchmark data
    /// directory.
    pub data: String,
    /// Schema path; relative paths resolve against the config directory.
    pub schema: String,
    #[serde(default = "TrainingConfig::default")]
    pub config: TrainingConfig<T>,
}

/// Benchmark configuration (the committed `bench.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct BenchConfig<T> {
    #[serde(default)]
    pub master_seed: u64,
    /// Independent seeded runs per dataset.
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    pub datasets: Vec<BenchDataset<T>>,
}

/// Per-dataset benchmark outcome.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct DatasetReport<T> {
    pub name: String,
    /// Present when the dataset failed; the other fields are then empty.
    pub error: Option<String>,
    pub seeds: Vec<u64>,
    pub accuracies: Vec<T>,
    pub mean_accuracy: Option<T>,
    pub std_accuracy: Option<T>,
    /// Confusion rates averaged over runs (equal weight per run), with
    /// supports summed.
    pub confusion: Option<ConfusionMatrix<T>>,
    pub reference: Option<ReferenceResults>,
    pub config: TrainingConfig<T>,
    /// Wall-clock seconds; excluded from serialized reports so that a fixed
    /// master seed yields byte-identical JSON.
    #[serde(skip)]
    pub wall_seconds: f64,
}

/// Full benchmark report.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct BenchmarkReport<T> {
    pub master_seed: u64,
    pub runs: usize,
    pub test_fraction: f64,
    pub datasets: Vec<DatasetReport<T>>,
}

/// Runs every dataset in the configuration: load → split → train → evaluate
/// across `runs` seeds. `(dataset, run)` cells execute in parallel; output
/// order and content are deterministic for a fixed master seed. A failing
/// dataset is reported as failed without stopping the others.
pub fn run_benchmark<T: Scalar>(
    config: &BenchConfig<T>,
    data_dir: &Path,
    schema_dir: &Path,
) -> BenchmarkReport<T> {
    let datasets = config
        .datasets
        .iter()
        .enumerate()
        .map(|(ds_index, spec)| {
            let started = Instant::now();
            let mut report = run_dataset(config, spec, ds_index, data_dir, schema_dir)
                .unwrap_or_else(|err| DatasetReport {
                    name: spec.name.clone(),
                    error: Some(err.to_string()),
                    seeds: vec![],
                    accuracies: vec![],
                    mean_accuracy: None,
                    std_accuracy: None,
                    confusion: None,
                    reference: reference_results(&spec.name),
                    config: spec.config.clone(),
                    wall_seconds: 0.0,
                });
            report.wall_seconds = started.elapsed().as_secs_f64();
            report
        })
        .collect();

    BenchmarkReport {
        master_seed: config.master_seed,
        runs: config.runs,
        test_fraction: config.test_fraction,
        datasets,
    }
}

fn resolve(base: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Documented seed-splitting rule for benchmark cells.
pub fn cell_seed(master_seed: u64, dataset_index: usize, run: usize) -> u64 {
    master_seed ^ (((dataset_index as u64) << 32) | run as u64)
}

fn run_dataset<T: Scalar>(
    config: &BenchConfig<T>,
    spec: &BenchDataset<T>,
    ds_index: usize,
    data_dir: &Path,
    schema_dir: &Path,
) -> Result<DatasetReport<T>> {
    let schema_path = resolve(schema_dir, &spec.schema);
    let schema: Schema = serde_json::from_str(&std::fs::read_to_string(&schema_path)?)?;
    let raw = load_csv::<T>(&resolve(data_dir, &spec.data), &schema)?;

    let seeds: Vec<u64> = (0..config.runs)
        .map(|run| cell_seed(config.master_seed, ds_index, run))
        .collect();

    let outcomes: Vec<Result<EvaluationOutcome<T>>> = seeds
        .par_iter()
        .map(|&seed| {
            let split = stratified_split(&raw, config.test_fraction, seed)?;
            let encoded = normalize_and_encode(&raw, &spec.config.encoding(), &split)?;
            let mut train_config = spec.config.clone();
            train_config.rng_seed = seed;
            let model = train(&encoded, &train_config)?;
            let test_rows: Vec<(Vec<T>, usize)> = split
                .test
                .iter()
                .map(|&i| raw.rows[i].clone())
                .collect();
            evaluate(&model, &test_rows, &train_config.solver)
        })
        .collect();

    let mut accuracies = Vec::with_capacity(outcomes.len());
    let mut mean_rates: Option<Vec<Vec<T>>> = None;
    let mut support_totals: Option<Vec<usize>> = None;
    let mut class_names = raw.class_names.clone();
    for outcome in outcomes {
        let outcome = outcome?;
        accuracies.push(outcome.accuracy);
        class_names = outcome.confusion.class_names.clone();
        match (&mut mean_rates, &mut support_totals) {
            (Some(rates), Some(support)) => {
                for (acc_row, row) in rates.iter_mut().zip(&outcome.confusion.rates) {
                    for (acc, &v) in acc_row.iter_mut().zip(row) {
                        *acc = *acc + v;
                    }
                }
                for (acc, &s) in support.iter_mut().zip(&outcome.confusion.support) {
                    *acc += s;
                }
            }
            _ => {
                mean_rates = Some(outcome.confusion.rates.clone());
                support_totals = Some(outcome.confusion.support.clone());
            }
        }
    }

    let n_runs = T::from(accuracies.len()).unwrap();
    let mean = accuracies.iter().fold(T::zero(), |a, &x| a + x) / n_runs;
    let variance = accuracies
        .iter()
        .fold(T::zero(), |a, &x| a + (x - mean) * (x - mean))
        / n_runs;
    let confusion = mean_rates.map(|rates| ConfusionMatrix {
        class_names,
        rates: rates
            .into_iter()
            .map(|row| row.into_iter().map(|v| v / n_runs).collect())
            .collect(),
        support: support_totals.unwrap_or_default(),
    });

    Ok(DatasetReport {
        name: spec.name.clone(),
        error: None,
        seeds,
        accuracies,
        mean_accuracy: Some(mean),
        std_accuracy: Some(variance.sqrt()),
        confusion,
        reference: reference_results(&spec.name),
        config: spec.config.clone(),
        wall_seconds: 0.0,
    })
}

/// Renders the report as an aligned text table (the human layer over the
/// JSON).
pub fn render_text<T: Scalar>(report: &BenchmarkReport<T>) -> String {
    use std::fmt::Write;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "benchmark: {} run(s) per dataset, test fraction {}, master seed {}",
        report.runs, report.test_fraction, report.master_seed
    );
    let _ = writeln!(
        out,
        "{:<26} {:>10} {:>8} {:>10} {:>10} {:>9}",
        "dataset", "accuracy", "std", "reference", "baseline", "secs"
    );
    for ds in &report.datasets {
        if let Some(err) = &ds.error {
            let _ = writeln!(out, "{:<26} FAILED: {err}", ds.name);
            continue;
        }
        let fmt_opt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.3}"),
            None => "-".to_string(),
        };
        let _ = writeln!(
            out,
            "{:<26} {:>10} {:>8} {:>10} {:>10} {:>9.1}",
            ds.name,
            fmt_opt(ds.mean_accuracy.map(|x| x.to_f64().unwrap_or(f64::NAN))),
            fmt_opt(ds.std_accuracy.map(|x| x.to_f64().unwrap_or(f64::NAN))),
            fmt_opt(ds.reference.as_ref().and_then(|r| r.accuracy)),
            fmt_opt(ds.reference.as_ref().and_then(|r| r.baseline_accuracy)),
            ds.wall_seconds,
        );
    }
    for ds in &report.datasets {
        let Some(confusion) = &ds.confusion else {
            continue;
        };
        let _ = writeln!(out, "\n{} confusion (rows = true class):", ds.name);
        for (c, row) in confusion.rates.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .map(|v| format!("{:.4}", v.to_f64().unwrap_or(f64::NAN)))
                .collect();
            let reference = ds
                .reference
                .as_ref()
                .and_then(|r| r.confusion.as_ref())
                .and_then(|m| m.get(c))
                .map(|row| {
                    let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
                    format!("   (reference: {})", cells.join(" "))
                })
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "  {:<18} {}{}",
                confusion.class_names[c],
                cells.join(" "),
                reference
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Normalization;
    use crate::linalg::Matrix;
    use crate::model::{NeuronRoles, RnnParameters};
    use std::io::Write;

    /// Hand-built "model" whose outputs mirror two input rates: output 0
    /// follows input 0, output 1 follows input 1.
    fn passthrough_model() -> TrainedModel<f64> {
        // 0,1 inputs; 2,3 outputs; w⁺₀₂ = w⁺₁₃ = 1.
        let mut w_plus = Matrix::zeros(4, 4);
        w_plus.set(0, 2, 1.0);
        w_plus.set(1, 3, 1.0);
        let params = RnnParameters::new(
            w_plus,
            Matrix::zeros(4, 4),
            vec![0.0; 4],
            vec![0.0, 0.0, 1.0, 1.0],
            vec![0.0; 4],
        )
        .unwrap();
        TrainedModel {
            params,
            roles: NeuronRoles::contiguous(2, 0, 2),
            history: vec![],
            config: TrainingConfig::default(),
            normalization: Normalization {
                mins: vec![0.0, 0.0],
                maxs: vec![1.0, 1.0],
            },
            class_names: vec!["first".into(), "second".into()],
        }
    }

    #[test]
    fn predict_takes_argmax() {
        let model = passthrough_model();
        let opts = SolverOptions::default();
        let p = predict(&model, &[0.9, 0.2], &opts).unwrap();
        assert_eq!(p.class_index, 0);
        let p = predict(&model, &[0.2, 0.9], &opts).unwrap();
        assert_eq!(p.class_index, 1);
    }

    #[test]
    fn predict_breaks_ties_toward_lowest_index() {
        let model = passthrough_model();
        let p = predict(&model, &[0.5, 0.5], &SolverOptions::default()).unwrap();
        assert_eq!(p.output_q[0], p.output_q[1]);
        assert_eq!(p.class_index, 0);
    }

    #[test]
    fn predictions_ignore_target_encoding() {
        let mut model = passthrough_model();
        let opts = SolverOptions::default();
        let before = predict(&model, &[0.7, 0.4], &opts).unwrap();
        model.config.target_high = 0.99;
        model.config.target_low = 0.01;
        let after = predict(&model, &[0.7, 0.4], &opts).unwrap();
        assert_eq!(before.class_index, after.class_index);
        assert_eq!(before.output_q, after.output_q);
    }

    #[test]
    fn evaluate_all_correct_gives_identity_confusion() {
        let model = passthrough_model();
        let rows = vec![
            (vec![0.9, 0.1], 0),
            (vec![0.8, 0.2], 0),
            (vec![0.1, 0.9], 1),
        ];
        let outcome = evaluate(&model, &rows, &SolverOptions::default()).unwrap();
        assert_eq!(outcome.accuracy, 1.0);
        assert_eq!(outcome.confusion.rates[0], vec![1.0, 0.0]);
        assert_eq!(outcome.confusion.rates[1], vec![0.0, 1.0]);
        assert_eq!(outcome.confusion.support, vec![2, 1]);
    }

    #[test]
    fn evaluate_rejects_empty_test_set() {
        let model = passthrough_model();
        assert!(matches!(
            evaluate(&model, &[], &SolverOptions::default()),
            Err(RnnError::EmptyTestSet)
        ));
    }

    #[test]
    fn confusion_rows_sum_to_one_and_accuracy_is_weighted_diagonal() {
        let counts = vec![vec![8, 2], vec![1, 9]];
        let matrix = ConfusionMatrix::<f64>::from_counts(
            vec!["a".into(), "b".into()],
            &counts,
        );
        for row in &matrix.rates {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
        assert!((matrix.accuracy() - 17.0 / 20.0).abs() < 1e-12);
    }

    fn write_toy_csv(dir: &Path) -> (PathBuf, PathBuf) {
        // Two separable blobs, ten rows per class.
        let data_path = dir.join("toy.csv");
        let mut file = std::fs::File::create(&data_path).unwrap();
        for i in 0..10 {
            writeln!(file, "{},{},a", 0.1 + 0.01 * i as f64, 0.2).unwrap();
            writeln!(file, "{},{},b", 0.9 - 0.01 * i as f64, 0.8).unwrap();
        }
        let schema_path = dir.join("toy.schema.json");
        std::fs::write(
            &schema_path,
            r#"{"label_column": 2, "class_order": ["a", "b"]}"#,
        )
        .unwrap();
        (data_path, schema_path)
    }

    #[test]
    fn benchmark_runs_and_contains_failures() {
        let dir = tempfile::tempdir().unwrap();
        write_toy_csv(dir.path());

        let small = TrainingConfig::<f64> {
            epochs: 30,
            hidden_count: 2,
            ..TrainingConfig::default()
        };
        let config = BenchConfig {
            master_seed: 7,
            runs: 2,
            test_fraction: 0.2,
            datasets: vec![
                BenchDataset {
                    name: "toy".into(),
                    data: "toy.csv".into(),
                    schema: "toy.schema.json".into(),
                    config: small.clone(),
                },
                BenchDataset {
                    name: "missing".into(),
                    data: "does-not-exist.csv".into(),
                    schema: "toy.schema.json".into(),
                    config: small,
                },
            ],
        };
        let report = run_benchmark(&config, dir.path(), dir.path());
        assert_eq!(report.datasets.len(), 2);
        let toy = &report.datasets[0];
        assert!(toy.error.is_none(), "toy failed: {:?}", toy.error);
        assert!(toy.mean_accuracy.unwrap() > 0.7);
        assert!(report.datasets[1].error.is_some());

        // Deterministic JSON for a fixed master seed.
        let again = run_benchmark(&config, dir.path(), dir.path());
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            serde_json::to_string(&again).unwrap()
        );

        let text = render_text(&report);
        assert!(text.contains("toy"));
        assert!(text.contains("FAILED"));
    }
}
