// Scratch: dataset-I KNN accuracy trend in N (criterion-3 shape).
use funnet::datagen::{generate, SimConfig, SimDataset};
use funnet::knn::knn_sweep;
use funnet::smoothing::LLEConfig;

fn main() {
    let lle = LLEConfig::local_linear_default();
    let ks: Vec<usize> = (1..=19).collect();
    for n in [1000usize, 5000] {
        for seed in 0..3u64 {
            let data = generate(&SimConfig::new(SimDataset::One, n, 250, seed)).unwrap();
            let split = n * 4 / 5;
            let (tr, te) = data.split_at(split);
            let sweep = knn_sweep(tr, te, &lle, &ks).unwrap();
            let best = sweep
                .iter()
                .cloned()
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            println!("N={n} seed={seed}: best k={} acc {:.4}", best.0, best.1);
        }
    }
}
