use clap::{Args, Parser, Subcommand};
use funnet_cli::{config::ExperimentConfig, experiments};
use std::path::PathBuf;
use std::process::ExitCode;

/// Functional neural network experiments: simulation studies, sliding-window
/// stream classification, gradient checks and data export.
#[derive(Parser)]
#[command(name = "funnet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file with `key = value` lines; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for result files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulation study: per trial a fresh data set, an FNN and a
    /// KNN sweep; aggregates Table-1-style results.
    Simulate,
    /// Train on sliding windows of a labeled recording and report window or
    /// per-timepoint metrics.
    Stream,
    /// Compare analytic gradients against central finite differences.
    Gradcheck {
        /// Maximum allowed relative error.
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        /// Number of randomly selected coefficients to check.
        #[arg(long, default_value_t = 100)]
        coeffs: usize,
    },
    /// Write generated data sets (or the stream fixture) to CSV.
    ExportData,
}

/// One optional flag per config key; values are parsed by the config layer.
#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    experiment: Option<String>,
    #[arg(long, global = true)]
    n_samples: Option<String>,
    #[arg(long, global = true)]
    t_len: Option<String>,
    #[arg(long, global = true)]
    trials: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    workers: Option<String>,
    #[arg(long, global = true)]
    train_fraction: Option<String>,
    #[arg(long, global = true)]
    conv_filters: Option<String>,
    #[arg(long, global = true)]
    filter_len: Option<String>,
    #[arg(long, global = true)]
    basis_count: Option<String>,
    #[arg(long, global = true)]
    basis_family: Option<String>,
    #[arg(long = "head", global = true)]
    head: Option<String>,
    #[arg(long, global = true)]
    lle_degree: Option<String>,
    #[arg(long, global = true)]
    lle_orders: Option<String>,
    #[arg(long, global = true)]
    lle_bandwidths: Option<String>,
    #[arg(long, global = true)]
    epochs: Option<String>,
    #[arg(long, global = true)]
    batch_size: Option<String>,
    #[arg(long, global = true)]
    optimizer: Option<String>,
    #[arg(long, global = true)]
    lr: Option<String>,
    #[arg(long, global = true)]
    knn_k_min: Option<String>,
    #[arg(long, global = true)]
    knn_k_max: Option<String>,
    #[arg(long, global = true)]
    knn_standardize: Option<String>,
    #[arg(long, global = true)]
    stream_data: Option<String>,
    #[arg(long, global = true)]
    window_len: Option<String>,
    #[arg(long, global = true)]
    step: Option<String>,
    #[arg(long, global = true)]
    margin: Option<String>,
    #[arg(long, global = true)]
    total_len: Option<String>,
    #[arg(long, global = true)]
    segment_min: Option<String>,
    #[arg(long, global = true)]
    segment_max: Option<String>,
    #[arg(long, global = true)]
    stream_noise: Option<String>,
    #[arg(long, global = true)]
    stream_classes: Option<String>,
    #[arg(long, global = true)]
    export_per_class: Option<String>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> funnet::Result<()> {
        let pairs: [(&str, &Option<String>); 31] = [
            ("experiment", &self.experiment),
            ("n_samples", &self.n_samples),
            ("t_len", &self.t_len),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("workers", &self.workers),
            ("split.train_fraction", &self.train_fraction),
            ("model.conv_filters", &self.conv_filters),
            ("model.filter_len", &self.filter_len),
            ("model.basis_count", &self.basis_count),
            ("model.basis_family", &self.basis_family),
            ("model.head", &self.head),
            ("lle.degree", &self.lle_degree),
            ("lle.orders", &self.lle_orders),
            ("lle.bandwidths", &self.lle_bandwidths),
            ("train.epochs", &self.epochs),
            ("train.batch_size", &self.batch_size),
            ("train.optimizer", &self.optimizer),
            ("train.lr", &self.lr),
            ("knn.k_min", &self.knn_k_min),
            ("knn.k_max", &self.knn_k_max),
            ("knn.standardize", &self.knn_standardize),
            ("stream.data", &self.stream_data),
            ("stream.window_len", &self.window_len),
            ("stream.step", &self.step),
            ("stream.margin", &self.margin),
            ("stream.total_len", &self.total_len),
            ("stream.segment_min", &self.segment_min),
            ("stream.segment_max", &self.segment_max),
            ("stream.noise", &self.stream_noise),
            ("stream.classes", &self.stream_classes),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(v) = &self.export_per_class {
            cfg.set("export.per_class", v)?;
        }
        Ok(())
    }
}

fn run(cli: &Cli) -> funnet::Result<bool> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)?;
        cfg.apply_file(&text)?;
    }
    cli.overrides.apply(&mut cfg)?;
    if cfg.workers > 0 {
        // gates trial-level parallelism; ignore failure if a pool exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global();
    }

    match &cli.command {
        Command::Simulate => {
            let out = experiments::run_simulation(&cfg)?;
            out.write(&cli.out)?;
            println!(
                "fnn: mean accuracy {:.4} (std {:.4})",
                out.fnn_mean, out.fnn_std
            );
            println!(
                "knn: best k = {} mean accuracy {:.4} (std {:.4})",
                out.knn_best_k, out.knn_best_mean, out.knn_best_std
            );
            println!("results written to {}", cli.out.display());
            Ok(true)
        }
        Command::Stream => {
            let out = experiments::run_stream(&cfg)?;
            out.write(&cli.out)?;
            println!("windows: {}", out.window_count);
            println!("test accuracy: {:.4}", out.test_accuracy);
            if let Some(ia) = out.interior_accuracy {
                println!("interior per-timepoint accuracy: {ia:.4}");
            }
            println!("results written to {}", cli.out.display());
            Ok(true)
        }
        Command::Gradcheck { tolerance, coeffs } => {
            let (report, summary) = experiments::run_gradcheck(&cfg, *tolerance, *coeffs)?;
            print!("{summary}");
            Ok(report.passed)
        }
        Command::ExportData => {
            experiments::run_export(&cfg, &cli.out)?;
            println!("data written to {}", cli.out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
