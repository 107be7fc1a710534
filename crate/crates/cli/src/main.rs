//! `pedcc` — generate, inspect and benchmark evenly-distributed class
//! centroids on the unit hypersphere.
//!
//! Exit codes: 0 success, 1 diagnostic failure (a verify that found
//! deviations), 2 usage / unreadable input, 3 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use pedcc::frame::{cosine_distance_table, verify_pedcc};
use pedcc::generator::{run_charge_model, ChargeSimConfig};
use pedcc::linalg::{RandomSeed, RNG_ALGORITHM};
use pedcc::loss::LossParams;
use pedcc::trainer::{dim_sweep, make_blobs, train, TrainConfig, TrainReport};
use pedcc::{generate_basic_recursive, generate_pedcc, Error as CoreError, PedccSet};

use pedcc_cli::bench::run_bench;
use pedcc_cli::pointset::{parse_point_set, serialize_point_set};
use pedcc_cli::table::render_half_table;

/// Threshold separating analytic-grade sets from everything else in `verify`.
const ANALYTIC_GRADE_DEVIATION: f64 = 1e-8;

#[derive(Parser)]
#[command(
    name = "pedcc",
    version,
    about = "Evenly-distributed class centroids: generation, verification, benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a centroid set and write it as a point-set file.
    Generate(GenerateArgs),
    /// Check the equal-cosine and frame invariants of a point-set file.
    Verify(VerifyArgs),
    /// Print the pairwise cosine half-table of a point-set file.
    Distances(DistancesArgs),
    /// Time the analytic generator against the fixed-budget iterative one.
    Bench(BenchArgs),
    /// Train the toy feature extractor on synthetic blobs.
    TrainToy(TrainToyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Analytic,
    Iterative,
}

#[derive(clap::Args)]
struct GenerateArgs {
    /// Number of centroids.
    #[arg(long)]
    k: usize,
    /// Ambient dimension.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    method: Method,
    /// Output file path.
    #[arg(long)]
    out: PathBuf,
    /// Analytic only: skip the random rotation and emit the basic
    /// closed-form points (trailing-coordinate layout).
    #[arg(long)]
    no_rotate: bool,
    /// Iterative only: force-to-velocity step per iteration.
    #[arg(long, default_value_t = 1e-2)]
    step_size: f64,
    /// Iterative only: per-iteration velocity retention in (0, 1].
    #[arg(long, default_value_t = 0.9)]
    damping: f64,
    /// Iterative only: iteration budget.
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Iterative only: stop once no point moves farther than this.
    #[arg(long, default_value_t = 1e-9)]
    stop_displacement: f64,
    #[arg(long)]
    json: bool,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Input point-set file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Random query vectors for the frame-sum check.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(clap::Args)]
struct DistancesArgs {
    /// Input point-set file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Decimal places in the printed table.
    #[arg(long, default_value_t = 2)]
    dp: usize,
    #[arg(long)]
    json: bool,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Comma-separated centroid counts.
    #[arg(long, value_delimiter = ',', required = true)]
    ks: Vec<usize>,
    /// Comma-separated ambient dimensions.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed iteration budget for the iterative method.
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    /// Run independent (k, n) cells on separate threads.
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    json: bool,
}

#[derive(clap::Args)]
struct TrainToyArgs {
    /// Number of blob classes.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Input dimension of the synthetic data.
    #[arg(long, default_value_t = 5)]
    din: usize,
    /// Feature dimension of the extractor.
    #[arg(long, conflicts_with = "dim_sweep")]
    feature_dim: Option<usize>,
    /// Comma-separated feature dimensions to sweep.
    #[arg(long, value_delimiter = ',')]
    dim_sweep: Option<Vec<usize>>,
    /// Blob standard deviation.
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 3)]
    seed: u64,
    /// Samples per class.
    #[arg(long, default_value_t = 100)]
    per_class: usize,
    /// Hidden width of the two-layer extractor.
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long)]
    json: bool,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

/// Shape and argument problems are usage errors (2); everything else that
/// the core reports at runtime is a generation failure (3).
fn core_failure(err: CoreError) -> Failure {
    let code = match err {
        CoreError::InvalidShape(_) | CoreError::DimensionMismatch(_) => 2,
        _ => 3,
    };
    fail(code, err.to_string())
}

fn read_set(path: &PathBuf) -> Result<PedccSet, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(2, format!("cannot read {}: {e}", path.display())))?;
    parse_point_set(&text).map_err(|e| fail(2, e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Distances(args) => cmd_distances(args),
        Command::Bench(args) => cmd_bench(args),
        Command::TrainToy(args) => cmd_train_toy(args),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode, Failure> {
    if args.no_rotate && args.method == Method::Iterative {
        return Err(fail(2, "--no-rotate only applies to --method analytic"));
    }
    let set = match args.method {
        Method::Analytic => {
            if args.no_rotate {
                generate_basic_recursive(args.k, args.n).map_err(core_failure)?
            } else {
                generate_pedcc(args.k, args.n, RandomSeed(args.seed)).map_err(core_failure)?
            }
        }
        Method::Iterative => {
            let cfg = ChargeSimConfig {
                step_size: args.step_size,
                damping: args.damping,
                max_iters: args.max_iters,
                stop_displacement: args.stop_displacement,
                seed: RandomSeed(args.seed),
            };
            run_charge_model(args.k, args.n, &cfg)
                .map_err(core_failure)?
                .set
        }
    };

    let deviation = set.max_pairwise_cosine_deviation();
    let text = serialize_point_set(&set);
    std::fs::write(&args.out, text)
        .map_err(|e| fail(3, format!("cannot write {}: {e}", args.out.display())))?;

    if args.json {
        let doc = json!({
            "command": "generate",
            "params": {
                "k": args.k,
                "n": args.n,
                "seed": args.seed,
                "method": match args.method { Method::Analytic => "analytic", Method::Iterative => "iterative" },
                "no_rotate": args.no_rotate,
                "out": args.out.display().to_string(),
                "rng": RNG_ALGORITHM,
            },
            "results": {
                "provenance": set.provenance().tag(),
                "max_cosine_deviation": deviation,
                "centroid_sum_norm": set.centroid_sum_norm(),
            }
        });
        println!("{doc}");
    } else {
        println!(
            "k={} n={} provenance={} max_cosine_deviation={:.3e} -> {}",
            set.k(),
            set.n(),
            set.provenance().tag(),
            deviation,
            args.out.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, Failure> {
    let set = read_set(&args.input)?;
    let deviation = set.max_pairwise_cosine_deviation();
    let sum_norm = set.centroid_sum_norm();

    // k > n+1 sets have no centroid basis to project on; report what can be
    // measured and flag them diagnostically.
    let frame = match verify_pedcc(&set, args.trials, RandomSeed(args.seed)) {
        Ok(report) => Some(report),
        Err(CoreError::IllConditioned { .. }) => None,
        Err(e) => return Err(core_failure(e)),
    };

    let analytic_grade = deviation <= ANALYTIC_GRADE_DEVIATION;
    if args.json {
        let doc = json!({
            "command": "verify",
            "params": {
                "in": args.input.display().to_string(),
                "trials": args.trials,
                "seed": args.seed,
                "rng": RNG_ALGORITHM,
            },
            "results": {
                "k": set.k(),
                "n": set.n(),
                "provenance": set.provenance().tag(),
                "max_pairwise_cosine_deviation": deviation,
                "centroid_sum_norm": sum_norm,
                "worst_frame_relative_error": frame.as_ref().map(|r| r.relative_error),
                "frame_sum": frame.as_ref().map(|r| r.frame_sum),
                "predicted": frame.as_ref().map(|r| r.predicted),
                "analytic_grade": analytic_grade,
            }
        });
        println!("{doc}");
    } else {
        println!(
            "k={} n={} provenance={}",
            set.k(),
            set.n(),
            set.provenance().tag()
        );
        println!("max pairwise cosine deviation: {deviation:.6e}");
        println!("centroid sum norm:             {sum_norm:.6e}");
        match &frame {
            Some(report) => println!(
                "worst frame-sum relative error over {} trials: {:.6e}",
                args.trials, report.relative_error
            ),
            None => println!("frame-sum check skipped: k exceeds n+1, no centroid basis"),
        }
        println!(
            "analytic grade (deviation <= {ANALYTIC_GRADE_DEVIATION:.0e}): {}",
            if analytic_grade { "PASS" } else { "FAIL" }
        );
    }
    Ok(if analytic_grade {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_distances(args: DistancesArgs) -> Result<ExitCode, Failure> {
    let set = read_set(&args.input)?;
    let table = cosine_distance_table(&set);
    if args.json {
        let entries: Vec<Vec<f64>> = (0..table.rows())
            .map(|i| (0..table.cols()).map(|j| table.get(i, j)).collect())
            .collect();
        let doc = json!({
            "command": "distances",
            "params": {
                "in": args.input.display().to_string(),
                "dp": args.dp,
            },
            "results": {
                "k": set.k(),
                "n": set.n(),
                "table": entries,
            }
        });
        println!("{doc}");
    } else {
        print!("{}", render_half_table(&table, args.dp));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, Failure> {
    let cells = run_bench(&args.ks, &args.dims, args.seed, args.iters, args.parallel)
        .map_err(|e| fail(3, format!("bench cell failed: {e}")))?;

    if args.json {
        let records: Vec<_> = cells
            .iter()
            .flat_map(|cell| {
                [&cell.analytic, &cell.iterative].map(|r| {
                    json!({
                        "method": r.method.name(),
                        "k": r.k,
                        "n": r.n,
                        "wall_time_seconds": r.wall_time_seconds,
                        "max_cosine_deviation": r.max_cosine_deviation,
                        "iterations_used": r.iterations_used,
                    })
                })
            })
            .collect();
        let speedups: Vec<_> = cells
            .iter()
            .map(|c| json!({ "k": c.k(), "n": c.n(), "speedup": c.speedup() }))
            .collect();
        let doc = json!({
            "command": "bench",
            "params": {
                "ks": args.ks,
                "dims": args.dims,
                "seed": args.seed,
                "iters": args.iters,
                "parallel": args.parallel,
                "rng": RNG_ALGORITHM,
            },
            "results": { "records": records, "speedups": speedups }
        });
        println!("{doc}");
    } else {
        println!(
            "{:>5} {:>6} {:>14} {:>14} {:>10} {:>14} {:>14} {:>8}",
            "k",
            "n",
            "analytic_s",
            "iterative_s",
            "speedup",
            "analytic_dev",
            "iterative_dev",
            "iters"
        );
        for cell in &cells {
            println!(
                "{:>5} {:>6} {:>14.6} {:>14.6} {:>10.1} {:>14.3e} {:>14.3e} {:>8}",
                cell.k(),
                cell.n(),
                cell.analytic.wall_time_seconds,
                cell.iterative.wall_time_seconds,
                cell.speedup(),
                cell.analytic.max_cosine_deviation,
                cell.iterative.max_cosine_deviation,
                cell.iterative.iterations_used.unwrap_or(0),
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn train_report_json(report: &TrainReport) -> serde_json::Value {
    json!({
        "feature_dim": report.feature_dim,
        "final_train_accuracy": report.final_train_accuracy,
        "final_test_accuracy": report.final_test_accuracy,
        "mean_subspace_angle_deg": report.mean_subspace_angle_deg,
        "initial_subspace_angle_deg": report.angle_curve_deg.first(),
        "loss_first": report.loss_curve.first(),
        "loss_last": report.loss_curve.last(),
        "warnings": report.warnings,
    })
}

fn print_train_report(report: &TrainReport) {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "feature_dim={} train_acc={:.4} test_acc={:.4} angle_deg={:.4} (epoch0 {:.4}) loss {:.6} -> {:.6}",
        report.feature_dim,
        report.final_train_accuracy,
        report.final_test_accuracy,
        report.mean_subspace_angle_deg,
        report.angle_curve_deg.first().copied().unwrap_or(f64::NAN),
        report.loss_curve.first().copied().unwrap_or(f64::NAN),
        report.loss_curve.last().copied().unwrap_or(f64::NAN),
    );
}

fn cmd_train_toy(args: TrainToyArgs) -> Result<ExitCode, Failure> {
    let dataset = make_blobs(
        args.k,
        args.din,
        args.per_class,
        args.sigma,
        RandomSeed(args.seed),
    )
    .map_err(core_failure)?;
    let cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.lr,
        loss_params: LossParams::default(),
        feature_dim: args.feature_dim.unwrap_or(8),
        hidden_dim: args.hidden,
        seed: RandomSeed(args.seed),
    };

    let reports: Vec<TrainReport> = match &args.dim_sweep {
        Some(dims) => dim_sweep(&dataset, dims, &cfg).map_err(core_failure)?,
        None => {
            let (_, report) = train(&dataset, &cfg).map_err(core_failure)?;
            vec![report]
        }
    };

    if args.json {
        let doc = json!({
            "command": "train-toy",
            "params": {
                "k": args.k,
                "din": args.din,
                "sigma": args.sigma,
                "epochs": args.epochs,
                "seed": args.seed,
                "per_class": args.per_class,
                "hidden": args.hidden,
                "lr": args.lr,
                "batch_size": args.batch_size,
                "dim_sweep": args.dim_sweep,
                "feature_dim": args.feature_dim,
                "rng": RNG_ALGORITHM,
            },
            "results": {
                "runs": reports.iter().map(train_report_json).collect::<Vec<_>>(),
            }
        });
        println!("{doc}");
        for report in &reports {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
        }
    } else {
        if reports.len() > 1 {
            println!(
                "{:>12} {:>10} {:>10} {:>12}",
                "feature_dim", "train_acc", "test_acc", "angle_deg"
            );
            for report in &reports {
                for w in &report.warnings {
                    eprintln!("warning: {w}");
                }
                println!(
                    "{:>12} {:>10.4} {:>10.4} {:>12.4}",
                    report.feature_dim,
                    report.final_train_accuracy,
                    report.final_test_accuracy,
                    report.mean_subspace_angle_deg
                );
            }
        } else {
            print_train_report(&reports[0]);
        }
    }
    Ok(ExitCode::SUCCESS)
}
