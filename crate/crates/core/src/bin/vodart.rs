use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vodart::config::{CapacityMode, ExperimentConfig, LogFormatName};
use vodart::experiment;
use vodart::Error;

#[derive(Parser)]
#[command(
    name = "vodart",
    version,
    about = "ART1 client clustering and prefetch simulation for VoD logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster sessions window by window, evaluate prefetching and sweep vigilance
    Run(RunArgs),
    /// Write a synthetic request log and its planted ground truth
    Generate(GenerateArgs),
}

#[derive(Args)]
struct Common {
    /// TOML config file; missing keys fall back to the built-in defaults
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Request log to replay instead of generating one
    #[arg(long)]
    input: Option<PathBuf>,
    /// The input log is comma-separated
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    vigilance: Option<f64>,
    /// Comma-separated vigilance grid, e.g. 0.3,0.4,0.5
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
    #[arg(long)]
    max_clusters: Option<usize>,
    /// Maximum idle seconds between two requests of one session
    #[arg(long)]
    session_idle: Option<i64>,
    #[arg(long)]
    freq_threshold: Option<u32>,
    /// Train on the most recent K windows instead of the full history
    #[arg(long, value_name = "K")]
    history: Option<usize>,
    /// Assign to the most similar cluster when all slots are taken
    #[arg(long)]
    force_assign: bool,
    /// One presentation pass per training run
    #[arg(long)]
    single_pass: bool,
    /// Also write the first window's pattern matrix
    #[arg(long)]
    dump_patterns: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory for trace.log and truth.csv
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.workload.seed = s;
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<ExitCode, Error> {
    let mut cfg = load(&args.common)?;
    let x = &mut cfg.experiment;
    if let Some(p) = args.input {
        x.source = p.to_string_lossy().into_owned();
    }
    if args.csv {
        x.log_format = LogFormatName::Comma;
    }
    if let Some(s) = args.sweep {
        x.sweep = s;
    }
    if let Some(s) = args.session_idle {
        x.maximum_idle_time = s;
    }
    if let Some(f) = args.freq_threshold {
        x.freq_threshold = f;
    }
    if let Some(h) = args.history {
        x.history_windows = h;
    }
    if let Some(o) = args.out {
        x.output_dir = o;
    }
    if let Some(v) = args.vigilance {
        cfg.art1.vigilance = v;
    }
    if let Some(m) = args.max_clusters {
        cfg.art1.max_clusters = m;
    }
    if args.force_assign {
        cfg.art1.on_capacity = CapacityMode::Force;
    }
    if args.single_pass {
        cfg.art1.single_pass = true;
    }

    let summary = experiment::run(&cfg, args.dump_patterns)?;
    for w in &summary.sliding.windows {
        if !w.unclustered.clients.is_empty() {
            log::info!(
                "window {}: {} unclustered clients requested {} distinct videos",
                w.window,
                w.unclustered.clients.len(),
                w.unclustered.distinct_videos
            );
        }
    }
    match summary.sliding.member_weighted_accuracy() {
        Some(a) => eprintln!("{} windows, member-weighted accuracy {a:.4}", summary.windows),
        None => eprintln!("{} windows, nothing to evaluate", summary.windows),
    }
    eprintln!("wrote {}", summary.outputs.metrics.display());
    eprintln!("wrote {}", summary.outputs.clusters.display());
    eprintln!("wrote {}", summary.outputs.snapshot.display());
    if let Some(p) = &summary.outputs.patterns {
        eprintln!("wrote {}", p.display());
    }

    let failed: Vec<_> = summary.failed_sweep_points().collect();
    if failed.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for p in failed {
            if let Err(e) = &p.clusters {
                eprintln!("error: vigilance {}: {e}", p.vigilance);
            }
        }
        Ok(ExitCode::from(3))
    }
}

fn generate(args: GenerateArgs) -> Result<ExitCode, Error> {
    let cfg = load(&args.common)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let log = args.out.join("trace.log");
    let truth = args.out.join("truth.csv");
    let n = experiment::write_generated(&cfg, &log, &truth)?;
    eprintln!("wrote {n} requests to {}", log.display());
    eprintln!("wrote {}", truth.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Generate(a) => generate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
