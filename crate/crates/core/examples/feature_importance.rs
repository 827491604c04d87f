//! Rank the 16 engineered features by the mean magnitude of the trained
//! network's input gradient.
//!
//! ```bash
//! cargo run --release --example feature_importance
//! ```

use dlt_surrogate::data::{generate_dataset, split_dataset, SamplerRanges};
use dlt_surrogate::dlt::DEFAULT_COMPUTE_INTENSITY;
use dlt_surrogate::eval::model_feature_importance;
use dlt_surrogate::model::fit_model;
use dlt_surrogate::nn::TrainConfig;

fn main() -> dlt_surrogate::Result<()> {
    let ds = generate_dataset(8_000, 11, &SamplerRanges::default(), DEFAULT_COMPUTE_INTENSITY)?;
    let (train, val, test) = split_dataset(&ds.records, 11)?;
    let (model, _) = fit_model(&train, &val, &TrainConfig::default(), &ds.header, 11)?;

    let ranked = model_feature_importance(&model, &test)?;
    let top = ranked[0].importance;
    for f in &ranked {
        let bar = "#".repeat((40.0 * f.importance / top).round() as usize);
        println!("{:<16} {:>8.4} {bar}", f.feature, f.importance);
    }
    Ok(())
}
