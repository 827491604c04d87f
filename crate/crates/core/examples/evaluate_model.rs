//! Train a small surrogate, then break its test error down by child count,
//! load and heterogeneity, analyse residuals and write the plot tables.
//!
//! ```bash
//! cargo run --release --example evaluate_model -- [plot-dir]
//! ```

use std::path::PathBuf;

use dlt_surrogate::data::{generate_dataset, split_dataset, SamplerRanges};
use dlt_surrogate::dlt::DEFAULT_COMPUTE_INTENSITY;
use dlt_surrogate::eval::{compute_metrics, emit_plot_data, residual_analysis, stratify, PlotInputs, Stratification};
use dlt_surrogate::model::fit_model;
use dlt_surrogate::nn::TrainConfig;

fn main() -> dlt_surrogate::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("dlt_plots"));

    let ds = generate_dataset(8_000, 3, &SamplerRanges::default(), DEFAULT_COMPUTE_INTENSITY)?;
    let (train, val, test) = split_dataset(&ds.records, 3)?;
    let (model, report) = fit_model(&train, &val, &TrainConfig::default(), &ds.header, 3)?;
    let preds = model.predict_records(&test);
    let truth: Vec<f64> = test.iter().map(|r| r.t_star).collect();

    let m = compute_metrics(&preds, &truth)?;
    println!("test R2 {:.4}  MAE {:.1}s  RMSE {:.1}s  MAPE {:.1}%", m.r2, m.mae, m.rmse, m.mape);

    for scheme in [Stratification::ByN, Stratification::ByLoad, Stratification::ByHeterogeneity] {
        println!("\n{scheme:?}");
        println!("{:>10} {:>6} {:>10} {:>12}", "bucket", "count", "MAE (s)", "median %err");
        for b in stratify(&test, &preds, scheme)?.buckets {
            println!(
                "{:>10} {:>6} {:>10.1} {:>12.1}",
                b.label,
                b.count,
                b.mae.unwrap_or(f64::NAN),
                b.median_pct_error.unwrap_or(f64::NAN)
            );
        }
    }

    let res = residual_analysis(&preds, &truth)?;
    println!(
        "\nmean error {:.1}s; within 50s: {:.0}%, within 100s: {:.0}%, within 10%: {:.0}%",
        res.mean_error,
        100.0 * res.share_within_50s,
        100.0 * res.share_within_100s,
        100.0 * res.share_pct_within_10
    );
    for d in &res.dispersion {
        println!(
            "decile {:>2}: predictions {:>8.1}..{:<8.1} residual std {:.1}s",
            d.decile, d.prediction_lo, d.prediction_hi, d.residual_std
        );
    }

    let written = emit_plot_data(
        &PlotInputs {
            train_report: Some(&report),
            records: &test,
            predictions: &preds,
        },
        &dir,
    )?;
    println!("\nwrote {} plot tables to {}", written.len(), dir.display());
    Ok(())
}
