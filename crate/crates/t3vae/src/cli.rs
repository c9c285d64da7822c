//! Command-line surface: data generation, training, sampling, MMD
//! evaluation, and histogram export, with JSON configs/reports and CSV
//! bulk data. The env var `T3_SEED` overrides every seed.

use crate::checkpoint::Checkpoint;
use crate::config::{DataSource, ModelFamily, RunConfig};
use crate::data::{gen_dataset, read_csv, split, stream_rng, write_csv, DatasetKind, SplitPreset};
use crate::error::{io_err, Error, Result};
use crate::eval::{
    log_histogram, mmd_linear_test, tail_filter, write_histogram_csv, TailRegion, TailSpec,
};
use crate::hvae::hier_generate;
use crate::models::{derive_constants, generate, ModelKind};
use crate::train::{train, write_training_log};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "t3vae", version, about = "Heavy-tailed VAE toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic heavy-tailed datasets as CSV
    GenData(GenDataArgs),
    /// Train a model described by a JSON config
    Train(TrainArgs),
    /// Draw samples from a trained checkpoint
    Generate(GenerateArgs),
    /// MMD two-sample tests between generated and reference samples
    Eval(EvalArgs),
    /// Export a log-density histogram of one CSV column
    Hist(HistArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// univariate or bivariate
    #[arg(long)]
    pub dataset: String,
    /// rows for a single file (writes --out)
    #[arg(long, conflicts_with = "preset")]
    pub count: Option<usize>,
    /// single output file, used with --count
    #[arg(long, requires = "count")]
    pub out: Option<PathBuf>,
    /// quick or paper: write train/val/test files into --out-dir
    #[arg(long, requires = "out_dir")]
    pub preset: Option<String>,
    /// directory for the three preset files, used with --preset
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON run config
    #[arg(long)]
    pub config: PathBuf,
    /// directory holding train.csv and val.csv; when omitted, data comes
    /// from the config's dataset field (built-in sets are generated from
    /// the run seed, a CSV source is split 2:2:5)
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// output directory for checkpoint.json and training_log.csv
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    /// output CSV of samples
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// CSV of model samples
    #[arg(long)]
    pub generated: PathBuf,
    /// CSV of reference samples
    #[arg(long)]
    pub reference: PathBuf,
    /// comma-separated tail regions (full, left, right, both)
    #[arg(long, default_value = "full,left,right")]
    pub region: String,
    /// tail threshold; defaults to 6 for univariate data and 10 otherwise
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// output file of one JSON report per region
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HistArgs {
    /// input CSV
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 80)]
    pub bins: usize,
    /// LO,HI; defaults to the data range
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub range: Option<(f64, f64)>,
    /// which column to bin
    #[arg(long, default_value_t = 0)]
    pub column: usize,
    /// output CSV (bin_center, count, log10_density)
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected LO,HI, got '{s}'"));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|e| format!("bad LO: {e}"))?;
    let hi: f64 = parts[1].trim().parse().map_err(|e| format!("bad HI: {e}"))?;
    Ok((lo, hi))
}

/// The given seed, unless `T3_SEED` is set in the environment.
pub fn seed_override(seed: u64) -> Result<u64> {
    match std::env::var("T3_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("T3_SEED must be an integer, got '{s}'"))),
        Err(_) => Ok(seed),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(args) => cmd_gen_data(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Generate(args) => cmd_generate(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Hist(args) => cmd_hist(&args),
    }
}

pub fn cmd_gen_data(args: &GenDataArgs) -> Result<()> {
    let kind: DatasetKind = args.dataset.parse()?;
    let seed = seed_override(args.seed)?;
    match (args.count, &args.preset) {
        (Some(count), None) => {
            let out = args
                .out
                .as_ref()
                .ok_or_else(|| Error::Config("--count requires --out".into()))?;
            let batch = kind.generate(count, &mut stream_rng(seed, 0));
            write_csv(out, &batch)?;
            println!(
                "{}",
                json!({"dataset": args.dataset, "rows": count, "seed": seed,
                       "out": out.display().to_string()})
            );
            Ok(())
        }
        (None, Some(preset)) => {
            let preset: SplitPreset = preset.parse()?;
            let dir = args
                .out_dir
                .as_ref()
                .ok_or_else(|| Error::Config("--preset requires --out-dir".into()))?;
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
            let sizes = preset.sizes();
            let (train, val, test) = gen_dataset(kind, sizes, seed);
            for (name, batch) in [("train", &train), ("val", &val), ("test", &test)] {
                write_csv(dir.join(format!("{name}.csv")), batch)?;
            }
            println!(
                "{}",
                json!({"dataset": args.dataset, "sizes": [sizes.0, sizes.1, sizes.2],
                       "seed": seed, "out_dir": dir.display().to_string()})
            );
            Ok(())
        }
        _ => Err(Error::Config(
            "use either --count with --out, or --preset with --out-dir".into(),
        )),
    }
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut run_cfg = RunConfig::from_path(&args.config)?;
    run_cfg.seed = seed_override(run_cfg.seed)?;
    let (train_data, val_data) = match (&args.data_dir, run_cfg.data_source()?) {
        (Some(dir), _) => (read_csv(dir.join("train.csv"))?, read_csv(dir.join("val.csv"))?),
        (None, DataSource::Builtin(kind)) => {
            let sizes = run_cfg.split_preset()?.sizes();
            let (train, val, _) = gen_dataset(kind, sizes, run_cfg.seed);
            (train, val)
        }
        (None, DataSource::Csv(path)) => {
            let all = read_csv(&path)?;
            let (train, val, _) = split(&all, (2.0 / 9.0, 2.0 / 9.0, 5.0 / 9.0), run_cfg.seed)?;
            (train, val)
        }
    };
    let outcome = train(&run_cfg, &train_data, &val_data)?;
    std::fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    outcome.checkpoint.save(args.out.join("checkpoint.json"))?;
    write_training_log(args.out.join("training_log.csv"), &outcome.log)?;
    println!(
        "{}",
        json!({"best_val_loss": outcome.best_val_loss, "best_epoch": outcome.best_epoch,
               "epochs_run": outcome.epochs_run, "stopped_early": outcome.stopped_early,
               "out": args.out.display().to_string()})
    );
    Ok(())
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let run_cfg = ckpt.run_config()?;
    let seed = seed_override(args.seed)?;
    let mut rng = stream_rng(seed, 10);
    let (batch, meta) = match run_cfg.family()? {
        ModelFamily::Flat(kind) => {
            let cfg = run_cfg.model_config()?;
            let decoder = ckpt.net("decoder")?;
            let consts = (kind == ModelKind::T3Vae)
                .then(|| derive_constants(&cfg))
                .transpose()?;
            let batch = generate(args.count, &cfg, consts.as_ref(), &decoder, &mut rng)?;
            let meta = match consts {
                Some(c) => json!({"model": run_cfg.model, "count": args.count, "seed": seed,
                                  "z_df": cfg.nu + cfg.n as f64, "z_scale": c.tau2}),
                None => json!({"model": run_cfg.model, "count": args.count, "seed": seed}),
            };
            (batch, meta)
        }
        ModelFamily::Hier(_) => {
            let cfg = run_cfg.hier_config()?;
            let prior2 = ckpt.net("prior2")?;
            let decoder = ckpt.net("decoder")?;
            let batch = hier_generate(args.count, &cfg, &prior2, &decoder, &mut rng)?;
            let meta = json!({"model": run_cfg.model, "count": args.count, "seed": seed});
            (batch, meta)
        }
    };
    write_csv(&args.out, &batch)?;
    println!("{meta}");
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let generated = read_csv(&args.generated)?;
    let reference = read_csv(&args.reference)?;
    if generated.cols() != reference.cols() {
        return Err(Error::Contract(format!(
            "generated has {} columns, reference has {}",
            generated.cols(),
            reference.cols()
        )));
    }
    let threshold = args
        .threshold
        .unwrap_or_else(|| TailSpec::default_threshold(generated.cols()));
    let regions: Vec<TailRegion> = args
        .region
        .split(',')
        .map(|r| r.trim().parse())
        .collect::<Result<_>>()?;
    let mut rng = stream_rng(seed_override(args.seed)?, 20);
    let mut lines = Vec::with_capacity(regions.len());
    for region in regions {
        let spec = TailSpec { region, threshold };
        let a = tail_filter(&generated, &spec);
        let b = tail_filter(&reference, &spec);
        let line = if a.rows() < 4 || b.rows() < 4 {
            json!({"region": region.to_string(), "empty": true,
                   "n_generated": a.rows(), "n_reference": b.rows()})
            .to_string()
        } else {
            let report = mmd_linear_test(&a, &b, args.bootstrap, &region.to_string(), &mut rng)?;
            serde_json::to_string(&report)?
        };
        println!("{line}");
        lines.push(line);
    }
    std::fs::write(&args.out, lines.join("\n") + "\n").map_err(io_err(&args.out))?;
    Ok(())
}

pub fn cmd_hist(args: &HistArgs) -> Result<()> {
    let batch = read_csv(&args.input)?;
    if args.column >= batch.cols() {
        return Err(Error::Contract(format!(
            "column {} out of range for {} columns",
            args.column,
            batch.cols()
        )));
    }
    let values = batch.column(args.column);
    if values.is_empty() {
        return Err(Error::Contract("input file holds no rows".into()));
    }
    let range = match args.range {
        Some(r) => r,
        None => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi.next_up())
        }
    };
    let hist = log_histogram(&values, args.bins, range)?;
    write_histogram_csv(&args.out, &hist)?;
    println!(
        "{}",
        json!({"bins": hist.bins.len(), "underflow": hist.underflow,
               "overflow": hist.overflow, "total": hist.total,
               "out": args.out.display().to_string()})
    );
    Ok(())
}
