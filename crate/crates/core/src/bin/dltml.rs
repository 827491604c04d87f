use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dlt_surrogate::config_text::parse_config;
use dlt_surrogate::data::{self, Dataset, DatasetRecord, SamplerRanges};
use dlt_surrogate::dlt::{self, SltnConfig, DEFAULT_COMPUTE_INTENSITY};
use dlt_surrogate::eval::{self, PlotInputs, Stratification};
use dlt_surrogate::hybrid::{hybrid_predict, HybridPolicy, DEFAULT_THRESHOLD_S};
use dlt_surrogate::model::{fit_model, MlpModel};
use dlt_surrogate::nn::{TrainConfig, TrainReport};
use dlt_surrogate::{Error, Result};

#[derive(Parser)]
#[command(name = "dltml", version, about = "Divisible-load solver and neural surrogate for single-level tree networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one network exactly and print the allocation and timeline.
    Solve {
        #[command(flatten)]
        network: NetworkArgs,
        #[arg(long, default_value_t = DEFAULT_COMPUTE_INTENSITY)]
        compute_intensity: f64,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Sample and label a synthetic dataset.
    Generate {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_COMPUTE_INTENSITY)]
        compute_intensity: f64,
    },
    /// Split a dataset, fit normalization and train the surrogate.
    Train(TrainArgs),
    /// Score a model on a dataset split and write reports and plot tables.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        /// Directory for stratified reports and plot tables.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Training report written by `train --report`, for the loss-curve table.
        #[arg(long)]
        train_report: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Predict the optimal processing time with the surrogate.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        network: NetworkArgs,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Surrogate prediction with exact verification above a threshold.
    Hybrid {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        network: NetworkArgs,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD_S)]
        threshold: f64,
        /// Also verify when max/min child speed exceeds this ratio.
        #[arg(long)]
        heterogeneity_trigger: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
}

#[derive(Args)]
struct NetworkArgs {
    /// Key-value network description file.
    #[arg(long, conflicts_with_all = ["root_speed", "load", "child"])]
    config: Option<PathBuf>,
    /// Root compute speed, GFLOPS/s.
    #[arg(long)]
    root_speed: Option<f64>,
    /// Total load, GB.
    #[arg(long)]
    load: Option<f64>,
    /// Child as `speed,bandwidth` (GFLOPS/s, MB/s); repeat in distribution order.
    #[arg(long)]
    child: Vec<String>,
}

impl NetworkArgs {
    fn resolve(&self) -> Result<SltnConfig> {
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            return parse_config(&text);
        }
        let root = self
            .root_speed
            .ok_or_else(|| Error::InvalidInput("give --config or --root-speed, --load and --child".into()))?;
        let load = self
            .load
            .ok_or_else(|| Error::InvalidInput("missing --load".into()))?;
        let mut speeds = Vec::new();
        let mut bandwidths = Vec::new();
        for c in &self.child {
            let (s, b) = c
                .split_once(',')
                .ok_or_else(|| Error::InvalidInput(format!("--child `{c}` is not `speed,bandwidth`")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("--child `{c}` has a non-numeric field")))
            };
            speeds.push(num(s)?);
            bandwidths.push(num(b)?);
        }
        SltnConfig::new(root, speeds, bandwidths, load)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Seed for initialization, shuffling and dropout.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed for the train/validation/test split; defaults to the dataset seed.
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long, default_value_t = 200)]
    max_epochs: usize,
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 0.001)]
    learning_rate: f64,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.2)]
    dropout: f64,
    /// Write the per-epoch training report here (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the normalization statistics here as well.
    #[arg(long)]
    stats_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SplitArg {
    Train,
    Val,
    Test,
    All,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn solve(network: &NetworkArgs, intensity: f64, format: Format) -> Result<()> {
    let config = network.resolve()?;
    let rates = dlt::to_time_rates(&config, intensity)?;
    let alloc = dlt::solve_optimal(&rates, config.load_gb)?;
    let timeline = dlt::simulate_timeline(&rates, &alloc, config.load_gb)?;
    match format {
        Format::Machine => {
            #[derive(Serialize)]
            struct Line<'a> {
                alpha: &'a [f64],
                t_star: f64,
                t_star_norm: f64,
                comm_finish: &'a [f64],
                compute_finish: &'a [f64],
            }
            let line = Line {
                alpha: &alloc.alpha,
                t_star: alloc.t_star,
                t_star_norm: alloc.t_star_norm,
                comm_finish: &timeline.comm_finish,
                compute_finish: &timeline.compute_finish,
            };
            println!("{}", serde_json::to_string(&line).expect("serializes"));
        }
        Format::Human => {
            println!(
                "network: root + {} children, load {} GB, intensity {} GFLOP/GB",
                config.n(),
                config.load_gb,
                intensity
            );
            println!("T* = {:.9} s ({:.9} s/GB)", alloc.t_star, alloc.t_star_norm);
            println!("{:<6}{:>14}{:>18}{:>18}", "proc", "alpha", "comm_finish_s", "finish_s");
            for (i, a) in alloc.alpha.iter().enumerate() {
                let comm = if i == 0 {
                    "-".to_string()
                } else {
                    format!("{:.9}", timeline.comm_finish[i - 1])
                };
                println!(
                    "{:<6}{:>14.9}{:>18}{:>18.9}",
                    format!("P{i}"),
                    a,
                    comm,
                    timeline.compute_finish[i]
                );
            }
        }
    }
    Ok(())
}

fn generate(count: usize, seed: u64, out: &Path, intensity: f64) -> Result<()> {
    eprintln!("generating {count} samples (seed {seed}, intensity {intensity})");
    let ds = data::generate_dataset(count, seed, &SamplerRanges::default(), intensity)?;
    ds.save(out)?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn train(args: &TrainArgs) -> Result<()> {
    let ds = Dataset::load(&args.data)?;
    let split_seed = args.split_seed.unwrap_or(ds.header.seed);
    let (tr, va, te) = data::split_dataset(&ds.records, split_seed)?;
    eprintln!(
        "split {} records: {} train / {} val / {} test",
        ds.records.len(),
        tr.len(),
        va.len(),
        te.len()
    );
    let config = TrainConfig {
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
        dropout_p: args.dropout,
        patience: args.patience,
        max_epochs: args.max_epochs,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let (model, report) = fit_model(&tr, &va, &config, &ds.header, split_seed)?;
    eprintln!(
        "epochs run: {} (best {} with validation MSE {:.6}; early stop: {}; {:.1}s)",
        report.epochs_run, report.best_epoch, report.best_val_loss, report.stopped_early, report.wall_seconds
    );
    model.save(&args.out)?;
    if let Some(path) = &args.report {
        write_json(path, &report)?;
    }
    if let Some(path) = &args.stats_out {
        model.norm.save(path)?;
    }
    println!("epochs_run={} best_epoch={} best_val_loss={}", report.epochs_run, report.best_epoch, report.best_val_loss);
    Ok(())
}

fn select_split(model: &MlpModel, ds: &Dataset, split: SplitArg) -> Result<Vec<DatasetRecord>> {
    if split == SplitArg::All {
        return Ok(ds.records.clone());
    }
    if ds.header.hash() != model.metadata.dataset_hash {
        return Err(Error::DatasetMismatch(
            "the model was trained on a different dataset, so its splits cannot be rebuilt; use --split all".into(),
        ));
    }
    let (tr, va, te) = data::split_dataset(&ds.records, model.metadata.split_seed)?;
    Ok(match split {
        SplitArg::Train => tr,
        SplitArg::Val => va,
        _ => te,
    })
}

#[derive(Serialize)]
struct EvaluationSummary {
    metrics: eval::MetricReport,
    mean_error_s: f64,
    share_within_50s: f64,
    share_within_100s: f64,
    share_pct_within_10: f64,
    feature_importance: Vec<eval::FeatureImportance>,
}

fn evaluate(
    model_path: &Path,
    data_path: &Path,
    split: SplitArg,
    out: Option<&Path>,
    report_path: Option<&Path>,
    format: Format,
) -> Result<()> {
    let model = MlpModel::load(model_path)?;
    let ds = Dataset::load(data_path)?;
    if ds.header.compute_intensity != model.metadata.compute_intensity {
        return Err(Error::DatasetMismatch(format!(
            "dataset intensity {} differs from the model's {}",
            ds.header.compute_intensity, model.metadata.compute_intensity
        )));
    }
    let records = select_split(&model, &ds, split)?;
    eprintln!("evaluating on {} records", records.len());
    let preds = model.predict_records(&records);
    let truth: Vec<f64> = records.iter().map(|r| r.t_star).collect();
    let metrics = eval::compute_metrics(&preds, &truth)?;
    let residuals = eval::residual_analysis(&preds, &truth)?;
    let importance = eval::model_feature_importance(&model, &records)?;

    match format {
        Format::Machine => println!(
            "{}",
            serde_json::to_string(&metrics).expect("serializes")
        ),
        Format::Human => {
            println!("samples  {}", metrics.count);
            println!("R2       {:.6}", metrics.r2);
            println!("MAE      {:.3} s", metrics.mae);
            println!("RMSE     {:.3} s", metrics.rmse);
            println!("MAPE     {:.3} %", metrics.mape);
            println!(
                "within ±50 s: {:.1}%  within ±100 s: {:.1}%  |pct| <= 10%: {:.1}%",
                residuals.share_within_50s * 100.0,
                residuals.share_within_100s * 100.0,
                residuals.share_pct_within_10 * 100.0
            );
            let top: Vec<&str> = importance.iter().take(4).map(|f| f.feature.as_str()).collect();
            println!("most influential features: {}", top.join(", "));
        }
    }

    if let Some(dir) = out {
        let train_report: Option<TrainReport> = match report_path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::Io {
                    path: p.to_path_buf(),
                    source: e,
                })?;
                Some(serde_json::from_str(&text).map_err(|e| Error::Malformed {
                    what: "training report",
                    detail: e.to_string(),
                })?)
            }
            None => None,
        };
        let written = eval::emit_plot_data(
            &PlotInputs {
                train_report: train_report.as_ref(),
                records: &records,
                predictions: &preds,
            },
            dir,
        )?;
        let strata: Vec<eval::StratifiedReport> = [
            Stratification::ByN,
            Stratification::ByLoad,
            Stratification::ByHeterogeneity,
        ]
        .into_iter()
        .map(|s| eval::stratify(&records, &preds, s))
        .collect::<Result<_>>()?;
        write_json(&dir.join("stratified.json"), &strata)?;
        write_json(
            &dir.join("summary.json"),
            &EvaluationSummary {
                metrics,
                mean_error_s: residuals.mean_error,
                share_within_50s: residuals.share_within_50s,
                share_within_100s: residuals.share_within_100s,
                share_pct_within_10: residuals.share_pct_within_10,
                feature_importance: importance,
            },
        )?;
        eprintln!("wrote {} tables and 2 reports to {}", written.len(), dir.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve {
            network,
            compute_intensity,
            format,
        } => solve(&network, compute_intensity, format),
        Command::Generate {
            count,
            seed,
            out,
            compute_intensity,
        } => generate(count, seed, &out, compute_intensity),
        Command::Train(args) => train(&args),
        Command::Evaluate {
            model,
            data,
            split,
            out,
            train_report,
            format,
        } => evaluate(&model, &data, split, out.as_deref(), train_report.as_deref(), format),
        Command::Predict {
            model,
            network,
            format,
        } => {
            let model = MlpModel::load(&model)?;
            let t = model.predict(&network.resolve()?);
            match format {
                Format::Human => println!("predicted T* = {t:.6} s"),
                Format::Machine => println!("{{\"t_star\":{t}}}"),
            }
            Ok(())
        }
        Command::Hybrid {
            model,
            network,
            threshold,
            heterogeneity_trigger,
            format,
        } => {
            let model = MlpModel::load(&model)?;
            let policy = HybridPolicy {
                threshold,
                heterogeneity_trigger,
            };
            let d = hybrid_predict(&model, &network.resolve()?, &policy)?;
            match format {
                Format::Human => println!(
                    "T* = {:.6} s (source: {}; ML estimate {:.6} s; threshold {} s)",
                    d.t_star,
                    serde_json::to_value(d.source).expect("serializes").as_str().unwrap_or("?"),
                    d.ml_estimate,
                    d.threshold
                ),
                Format::Machine => println!("{}", serde_json::to_string(&d).expect("serializes")),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
