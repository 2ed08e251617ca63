use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use llpd::bench::{loglog_slope, run_bench, save_csv, summarize, BenchConfig};
use llpd::dataset::{load_labels, save_labels, save_points};
use llpd::io::write_atomic;
use llpd::llpd::LadderMode;
use llpd::metrics::accuracy_report;
use llpd::spectral::{run, AssignMethod, ClusterConfig, Method, SigmaGridSpec};
use llpd::{generate, load_csv, DatasetKind, Execution, GeneratorSpec, Label, LabeledPointCloud, NOISE};
use log::info;

#[derive(Parser)]
#[command(name = "llpd", version, about = "Clustering with longest-leg path distances")]
struct Cli {
    /// Worker threads for the parallel stages.
    #[arg(long, global = true, env = "LLPD_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic data set and write points.csv and labels.csv.
    Generate(GenerateArgs),
    /// Denoise and cluster a data set; writes labels.csv, report.json,
    /// eigencurves.csv and sorted_beta.csv.
    Cluster(ClusterArgs),
    /// Compare predicted labels with ground truth on the labeled points not
    /// removed as noise; prints OA, AA and kappa as JSON.
    Evaluate(EvaluateArgs),
    /// Time the LLPD nearest-neighbor search on uniform samples of the unit square.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// four-lines, nine-gaussians, concentric-spheres, parallel-planes or prism.
    #[arg(long = "generate", value_name = "KIND")]
    kind: DatasetKind,
    /// Multiplier on every cluster size and the noise count.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    /// CSV of coordinates, one point per row.
    #[arg(long, value_name = "PATH", conflicts_with = "kind", required_unless_present = "kind")]
    input: Option<PathBuf>,
    /// Column of --input holding integer labels (0 = noise), by header name or index.
    #[arg(long, requires = "input")]
    label_column: Option<String>,
    /// Ground-truth labels file for --input, one integer per line.
    #[arg(long, requires = "input", conflicts_with = "label_column")]
    truth: Option<PathBuf>,
    /// Cluster a generated data set instead of a file.
    #[arg(long = "generate", value_name = "KIND")]
    kind: Option<DatasetKind>,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 20)]
    k_euc: usize,
    #[arg(long, default_value_t = 20)]
    k_noise: usize,
    #[arg(long, default_value_t = 20)]
    m: usize,
    /// exp or pct.
    #[arg(long, default_value = "exp")]
    ladder: LadderMode,
    #[arg(long, default_value_t = 20)]
    sigma_count: usize,
    #[arg(long)]
    sigma_min: Option<f64>,
    #[arg(long)]
    sigma_max: Option<f64>,
    /// Eigenvalues computed per scale of the sweep.
    #[arg(long, default_value_t = 12)]
    kmax: usize,
    /// Fixed denoising threshold.
    #[arg(long)]
    theta: Option<f64>,
    /// Fixed cluster count; skips estimation.
    #[arg(long)]
    k: Option<usize>,
    /// llpd, euclidean or kmeans.
    #[arg(long, default_value = "llpd")]
    method: Method,
    /// kmeans or distances.
    #[arg(long, default_value = "kmeans")]
    assign: AssignMethod,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predicted labels, one integer per line.
    #[arg(long)]
    labels: PathBuf,
    /// Ground-truth labels in the same format; 0 marks noise.
    #[arg(long)]
    truth: PathBuf,
    /// Also print a summary row `| NAME | OA | AA | kappa |`.
    #[arg(long, value_name = "NAME")]
    row: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [10_000, 30_000, 100_000])]
    sizes: Vec<usize>,
    /// Ladder sizes m.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 100])]
    scales: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 20)]
    k_euc: usize,
    #[arg(long, default_value_t = 10)]
    k_llpd: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
    /// Directory for bench.csv and bench_summary.csv.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            bail!("--threads must be positive");
        }
        if !llpd::exec::set_threads(threads) {
            log::warn!("could not cap the worker count at {threads}");
        }
    }
    match cli.command {
        Command::Generate(args) => cmd_generate(&args),
        Command::Cluster(args) => cmd_cluster(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Bench(args) => cmd_bench(&args),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let spec = GeneratorSpec::new(args.kind).with_seed(args.seed).with_scale(args.scale);
    let data = generate(&spec).context("generating data")?;
    create_dir(&args.out)?;
    save_points(&data.points, args.out.join("points.csv"))?;
    save_labels(&data.labels, args.out.join("labels.csv"))?;
    info!("wrote {} points to {}", data.len(), args.out.display());
    Ok(())
}

/// Labels `1..=K` and 0 for noise, `K` the largest label present.
fn with_truth(points: llpd::PointCloud, labels: Vec<Label>) -> Result<LabeledPointCloud> {
    let k = labels.iter().copied().max().unwrap_or(NOISE) as usize;
    Ok(LabeledPointCloud::new(points, labels, k)?)
}

fn load_input(args: &ClusterArgs) -> Result<LabeledPointCloud> {
    if let Some(kind) = args.kind {
        let spec = GeneratorSpec::new(kind).with_seed(args.seed).with_scale(args.scale);
        return generate(&spec).context("generating data");
    }
    let path = args.input.as_ref().expect("clap requires --input or --generate");
    let data = load_csv(path, args.label_column.as_deref()).with_context(|| format!("reading {}", path.display()))?;
    match &args.truth {
        Some(truth) => {
            let labels = load_labels(truth).with_context(|| format!("reading {}", truth.display()))?;
            with_truth(data.points, labels).context("ground truth does not match the input")
        }
        None => Ok(data),
    }
}

fn cmd_cluster(args: &ClusterArgs) -> Result<()> {
    let data = load_input(args)?;
    let config = ClusterConfig {
        k_euc: args.k_euc,
        k_noise: args.k_noise,
        m: args.m,
        ladder: args.ladder,
        sigma: SigmaGridSpec {
            count: args.sigma_count,
            min: args.sigma_min,
            max: args.sigma_max,
        },
        kmax: args.kmax,
        theta: args.theta,
        k: args.k,
        assign: args.assign,
        seed: args.seed,
        exec: Execution::Parallel,
        ..ClusterConfig::default()
    };
    let outcome = run(args.method, &data, &config).context("clustering failed")?;
    create_dir(&args.out)?;
    save_labels(&outcome.labels, args.out.join("labels.csv"))?;
    outcome.report.save_json(args.out.join("report.json"))?;
    outcome.denoise.save_sorted_beta(args.out.join("sorted_beta.csv"))?;
    if let Some(sweep) = &outcome.sweep {
        sweep.save_csv(args.out.join("eigencurves.csv"))?;
    }
    let r = &outcome.report;
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    println!(
        "method={} K_hat={} K={} sigma_hat={} theta={:.4} N={}/{} oa={} aa={} kappa={}",
        args.method,
        r.k_hat.map_or("-".to_string(), |k| k.to_string()),
        r.k_used,
        fmt(r.sigma_hat),
        r.theta,
        r.n_kept,
        r.n,
        fmt(r.oa),
        fmt(r.aa),
        fmt(r.kappa),
    );
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let y_hat = load_labels(&args.labels).with_context(|| format!("reading {}", args.labels.display()))?;
    let y = load_labels(&args.truth).with_context(|| format!("reading {}", args.truth.display()))?;
    if y.len() != y_hat.len() {
        bail!("{} predicted labels but {} true labels", y_hat.len(), y.len());
    }
    // scored on labeled points that were not removed as noise
    let kept: Vec<usize> = (0..y.len()).filter(|&i| y_hat[i] != NOISE).collect();
    let y_kept: Vec<Label> = kept.iter().map(|&i| y[i]).collect();
    let y_hat_kept: Vec<Label> = kept.iter().map(|&i| y_hat[i]).collect();
    let report = accuracy_report(&y_kept, &y_hat_kept)?;
    let scored = y_kept.iter().filter(|&&l| l != NOISE).count();
    let json = serde_json::json!({
        "oa": report.oa,
        "aa": report.aa,
        "kappa": report.kappa,
        "n": y.len(),
        "scored": scored,
    });
    println!("{}", serde_json::to_string_pretty(&json)?);
    if let Some(name) = &args.row {
        println!("| {name} | {:.4} | {:.4} | {:.4} |", report.oa, report.aa, report.kappa);
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let config = BenchConfig {
        sizes: args.sizes.clone(),
        k_euc: args.k_euc,
        k_llpd: args.k_llpd,
        scales: args.scales.clone(),
        repeats: args.repeats,
        seed: args.seed,
        exec: if args.sequential { Execution::Sequential } else { Execution::Parallel },
    };
    let rows = run_bench(&config)?;
    let summary = summarize(&rows);
    let mut out = String::from("n,m,mean_seconds,sd_seconds\n");
    for (n, m, mean, sd) in &summary {
        out.push_str(&format!("{n},{m},{mean:?},{sd:?}\n"));
    }
    print!("{out}");
    for &m in &args.scales {
        let samples: Vec<(usize, f64)> = summary.iter().filter(|s| s.1 == m).map(|s| (s.0, s.2)).collect();
        if let Ok(slope) = loglog_slope(&samples) {
            eprintln!("m={m}: log-log slope {slope:.3}");
        }
    }
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        save_csv(&rows, dir.join("bench.csv"))?;
        write_atomic(dir.join("bench_summary.csv"), out.as_bytes())?;
    }
    Ok(())
}
