// Scratch harness: one simulation trial end to end, printing accuracies.
use funnet::datagen::{generate, SimConfig, SimDataset};
use funnet::engine::{evaluate, train, Model, ModelSpec, TrainConfig};
use funnet::knn::knn_sweep;
use funnet::smoothing::LLEConfig;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let dataset = if args.get(1).map(|s| s.as_str()) == Some("1") {
        SimDataset::One
    } else {
        SimDataset::Two
    };
    let n: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);

    let t0 = Instant::now();
    let data = generate(&SimConfig::new(dataset, n, 250, seed)).unwrap();
    let split = n * 4 / 5;
    let (train_set, test_set) = data.split_at(split);
    println!("gen: {:?}", t0.elapsed());

    let t0 = Instant::now();
    let mut model = Model::scalar_classifier(2, 3, &ModelSpec::default()).unwrap();
    let lr: f64 = std::env::args()
        .nth(4)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1e-3);
    let cfg = TrainConfig {
        seed,
        optimizer: funnet::engine::OptimizerKind::adam(lr),
        ..TrainConfig::default()
    };
    let history = train(&mut model, train_set, &cfg).unwrap();
    for r in &history.rows {
        println!(
            "epoch {} {}: loss {:.4} acc {:.4}",
            r.epoch, r.split, r.loss, r.accuracy
        );
    }
    let (test_loss, test_acc) = evaluate(&model, test_set).unwrap();
    println!(
        "fnn train: {:?}  test loss {:.4} acc {:.4}",
        t0.elapsed(),
        test_loss,
        test_acc
    );

    let t0 = Instant::now();
    let lle = LLEConfig::local_linear_default();
    let ks: Vec<usize> = (1..=19).collect();
    let sweep = knn_sweep(train_set, test_set, &lle, &ks).unwrap();
    let best = sweep
        .iter()
        .cloned()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    println!(
        "knn sweep: {:?}  best k={} acc {:.4}",
        t0.elapsed(),
        best.0,
        best.1
    );

    let prep = funnet::knn::KnnPrep::smoothing_and_standardization(lle.clone());
    let sweep2 = funnet::knn::knn_sweep_with(train_set, test_set, &prep, &ks).unwrap();
    let best2 = sweep2
        .iter()
        .cloned()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    println!("standardized knn: best k={} acc {:.4}", best2.0, best2.1);
    for (k, a) in &sweep2 {
        print!("k{}={:.3} ", k, a);
    }
    println!();
}