//! Scratch tuning harness (not shipped).
use std::path::Path;
use rnn_core::data::{load_csv, normalize_and_encode, stratified_split, Schema};
use rnn_core::harness::evaluate;
use rnn_core::learning::{train, Topology, TrainingConfig};
use rayon::prelude::*;

fn run(name: &str, base: &TrainingConfig<f64>, runs: u64) -> (f64, f64, Vec<Vec<f64>>) {
    let schema: Schema = serde_json::from_str(
        &std::fs::read_to_string(format!("configs/schemas/{name}.json")).unwrap()).unwrap();
    let raw = load_csv::<f64>(Path::new(&format!("data/{name}.csv")), &schema).unwrap();
    let results: Vec<(f64, Vec<Vec<f64>>)> = (0..runs).into_par_iter().map(|seed| {
        let split = stratified_split(&raw, 0.2, seed).unwrap();
        let ds = normalize_and_encode(&raw, &base.encoding(), &split).unwrap();
        let mut cfg = base.clone();
        cfg.rng_seed = seed;
        let model = train(&ds, &cfg).unwrap();
        let test_rows: Vec<(Vec<f64>, usize)> =
            split.test.iter().map(|&i| raw.rows[i].clone()).collect();
        let out = evaluate(&model, &test_rows, &cfg.solver).unwrap();
        (out.accuracy, out.confusion.rates)
    }).collect();
    let accs: Vec<f64> = results.iter().map(|r| r.0).collect();
    let k = results[0].1.len();
    let mut conf = vec![vec![0.0; k]; k];
    for (_, rates) in &results {
        for i in 0..k { for j in 0..k { conf[i][j] += rates[i][j] / results.len() as f64; } }
    }
    (accs.iter().sum::<f64>() / accs.len() as f64, accs.iter().copied().fold(1.0, f64::min), conf)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let dataset = args.get(1).cloned().unwrap_or("iris".into());
    let runs: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(8);
    let lay = |h: usize, eta: f64, hi: f64, epochs: usize, restarts: usize| TrainingConfig::<f64> {
        topology: Topology::Layered, hidden_count: h, learning_rate: eta,
        weight_init: (0.0, hi), epochs, restarts,
        ..Default::default()
    };
    let rec = |h: usize, eta: f64, hi: f64, epochs: usize, restarts: usize| TrainingConfig::<f64> {
        hidden_count: h, learning_rate: eta, weight_init: (0.0, hi), epochs, restarts,
        ..Default::default()
    };
    let grid: Vec<(String, TrainingConfig<f64>)> = vec![
        ("L h12 eta.02 i.05 e120 r4".into(), lay(12, 0.02, 0.05, 120, 4)),
        ("L h16 eta.02 i.05 e100 r3".into(), lay(16, 0.02, 0.05, 100, 3)),
        ("L h12 eta.01 i.05 e150 r3".into(), lay(12, 0.01, 0.05, 150, 3)),
    ];



    for (label, cfg) in grid {
        let t0 = std::time::Instant::now();
        let (mean, min, conf) = run(&dataset, &cfg, runs);
        println!("{dataset} {label:<26} mean {mean:.4} min {min:.4} ({:?})", t0.elapsed());
        for row in &conf {
            println!("    {:?}", row.iter().map(|x| (x*1000.0).round()/1000.0).collect::<Vec<_>>());
        }
    }
}
