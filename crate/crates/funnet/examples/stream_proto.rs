// Scratch: functional-head training on the synthetic labeled stream.
use funnet::curves::{extract_windows, label_curves, Label, LabeledSample};
use funnet::datagen::{gen_labeled_stream, StreamConfig};
use funnet::engine::{evaluate, train, Model, ModelSpec, OptimizerKind, Prediction, TrainConfig};
use funnet::metrics::per_timepoint_accuracy;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let noise: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let window_len = 250usize;
    let step = 50usize;
    let margin = 40usize;

    let total: usize = std::env::args()
        .nth(3)
        .and_then(|s| s.parse().ok())
        .unwrap_or(25_000);
    let cfg = StreamConfig {
        total_len: total,
        segment_len: (500, 900),
        noise_scale: noise,
        seed: 5,
        ..StreamConfig::default()
    };
    let (rec, labels) = gen_labeled_stream(&cfg).unwrap();

    let t0 = Instant::now();
    let wins: Vec<_> = extract_windows(&rec, window_len, step).unwrap().collect();
    let samples: Vec<LabeledSample> = wins
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let off = i * step;
            let lc = label_curves(&labels[off..off + window_len], 3).unwrap();
            LabeledSample::new(w.clone(), Label::Curves(lc)).unwrap()
        })
        .collect();
    let split = samples.len() * 4 / 5;
    let (train_set, test_set) = samples.split_at(split);
    println!("windows: {} train {} test {}", samples.len(), split, samples.len() - split);

    let mut model = Model::functional_classifier(2, 3, &ModelSpec::default()).unwrap();
    let tc = TrainConfig {
        epochs,
        batch_size: 32,
        optimizer: OptimizerKind::adam(5e-3),
        seed: 11,
    };
    let hist = train(&mut model, train_set, &tc).unwrap();
    for r in hist.rows.iter().rev().take(2) {
        println!("epoch {}: loss {:.4} acc {:.4}", r.epoch, r.loss, r.accuracy);
    }
    let (tl, ta) = evaluate(&model, test_set).unwrap();
    println!("test: loss {:.4} per-timepoint acc {:.4}  ({:?})", tl, ta, t0.elapsed());

    // interior accuracy: points at least `margin` samples from a transition
    let mut hits = 0usize;
    let mut total = 0usize;
    for (wi, s) in test_set.iter().enumerate() {
        let off = (split + wi) * step;
        let pred = match model.forward(&s.data).unwrap() {
            Prediction::Curves(c) => c,
            _ => unreachable!(),
        };
        let Label::Curves(truth) = &s.label else { unreachable!() };
        for t in 0..window_len {
            let p = off + t;
            let lo = p.saturating_sub(margin);
            let hi = (p + margin).min(labels.len() - 1);
            if labels[lo..=hi].iter().all(|&l| l == labels[p]) {
                total += 1;
                let am = |mc: &funnet::curves::MultiCurve, t: usize| {
                    (0..mc.num_channels())
                        .max_by(|&a, &b| {
                            mc.channel(a).values()[t]
                                .partial_cmp(&mc.channel(b).values()[t])
                                .unwrap()
                        })
                        .unwrap()
                };
                // max_by returns the LAST max; fine for probing
                if am(&pred, t) == am(truth, t) {
                    hits += 1;
                }
            }
        }
    }
    println!("interior accuracy: {:.4} ({} / {})", hits as f64 / total as f64, hits, total);
}
