//! Generate a desk-scale dataset, train the surrogate and score it on the
//! held-out split.
//!
//! ```bash
//! cargo run --release --example train_surrogate -- [count] [seed] [model.json]
//! ```

use dlt_surrogate::data::{generate_dataset, split_dataset, SamplerRanges};
use dlt_surrogate::dlt::DEFAULT_COMPUTE_INTENSITY;
use dlt_surrogate::eval::compute_metrics;
use dlt_surrogate::model::fit_model;
use dlt_surrogate::nn::TrainConfig;

fn main() -> dlt_surrogate::Result<()> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(20_000);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);
    let out = args.next().map(std::path::PathBuf::from);

    let ds = generate_dataset(count, seed, &SamplerRanges::default(), DEFAULT_COMPUTE_INTENSITY)?;
    let (train, val, test) = split_dataset(&ds.records, seed)?;
    println!("split: {} train / {} val / {} test", train.len(), val.len(), test.len());

    let config = TrainConfig { seed, ..TrainConfig::default() };
    let (model, report) = fit_model(&train, &val, &config, &ds.header, seed)?;
    println!(
        "trained {} epochs in {:.1}s (best epoch {}, val MSE {:.5}, early stop: {})",
        report.epochs_run, report.wall_seconds, report.best_epoch, report.best_val_loss, report.stopped_early
    );

    let preds = model.predict_records(&test);
    let truth: Vec<f64> = test.iter().map(|r| r.t_star).collect();
    let m = compute_metrics(&preds, &truth)?;
    println!(
        "test: R2 {:.4}  MAE {:.2}s  RMSE {:.2}s  MAPE {:.2}%  (n={})",
        m.r2, m.mae, m.rmse, m.mape, m.count
    );

    if let Some(path) = out {
        model.save(&path)?;
        println!("saved model bundle to {}", path.display());
    }
    Ok(())
}
