//! Compare the surrogate, the exact solver and the hybrid policy that
//! re-solves exactly when the estimate is large.
//!
//! ```bash
//! cargo run --release --example hybrid_predict
//! ```

use std::time::Instant;

use dlt_surrogate::data::{generate_dataset, split_dataset, SamplerRanges};
use dlt_surrogate::dlt::{solve_optimal, to_time_rates, DEFAULT_COMPUTE_INTENSITY};
use dlt_surrogate::hybrid::{hybrid_predict, HybridPolicy, Source};
use dlt_surrogate::model::{fit_model, MlpModel};
use dlt_surrogate::nn::TrainConfig;

fn main() -> dlt_surrogate::Result<()> {
    let ds = generate_dataset(8_000, 5, &SamplerRanges::default(), DEFAULT_COMPUTE_INTENSITY)?;
    let (train, val, test) = split_dataset(&ds.records, 5)?;
    let (model, _) = fit_model(&train, &val, &TrainConfig::default(), &ds.header, 5)?;

    // Bundles round-trip through JSON; this is what `dltml train` writes.
    let model = MlpModel::from_json(&model.to_json())?;

    for threshold in [5000.0, 1000.0, 200.0] {
        let policy = HybridPolicy::with_threshold(threshold);
        let (mut ml_err, mut hybrid_err, mut verified) = (0.0, 0.0, 0);
        let started = Instant::now();
        for r in &test {
            let d = hybrid_predict(&model, &r.config, &policy)?;
            ml_err += (d.ml_estimate - r.t_star).abs();
            hybrid_err += (d.t_star - r.t_star).abs();
            if d.source == Source::DltVerified {
                verified += 1;
            }
        }
        let per_call = started.elapsed().as_secs_f64() / test.len() as f64;
        let nf = test.len() as f64;
        println!(
            "threshold {threshold:>6} s: MAE ml {:>7.1}s, hybrid {:>7.1}s, {verified:>4}/{} verified, {:.1} us/call",
            ml_err / nf,
            hybrid_err / nf,
            test.len(),
            per_call * 1e6
        );
    }

    let r = &test[0];
    let exact = solve_optimal(&to_time_rates(&r.config, DEFAULT_COMPUTE_INTENSITY)?, r.config.load_gb)?.t_star;
    println!("\nfirst test network: surrogate {:.1}s, exact {:.1}s", model.predict(&r.config), exact);
    Ok(())
}
