//! Sample and label a dataset, write it as JSON lines, reload it, and split it
//! into stratified train/validation/test sets.
//!
//! ```bash
//! cargo run --release --example generate_dataset -- [count] [seed] [out.jsonl]
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use dlt_surrogate::data::{fit_normalization, generate_dataset, split_dataset, Dataset, SamplerRanges};
use dlt_surrogate::dlt::DEFAULT_COMPUTE_INTENSITY;

fn main() -> dlt_surrogate::Result<()> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(5_000);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("dlt_dataset.jsonl"));

    let ds = generate_dataset(count, seed, &SamplerRanges::default(), DEFAULT_COMPUTE_INTENSITY)?;
    ds.save(&out)?;
    let reloaded = Dataset::load(&out)?;
    assert_eq!(reloaded, ds);
    println!("wrote {} records to {} (header hash {})", count, out.display(), &ds.header.hash()[..16]);

    let mut per_n: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for r in &ds.records {
        let e = per_n.entry(r.config.n()).or_default();
        e.0 += 1;
        e.1 += r.t_star;
    }
    println!("{:>3} {:>6} {:>12}", "n", "count", "mean T* (s)");
    for (n, (c, sum)) in &per_n {
        println!("{n:>3} {c:>6} {:>12.1}", sum / *c as f64);
    }

    let (train, val, test) = split_dataset(&ds.records, seed)?;
    println!("split: {} / {} / {}", train.len(), val.len(), test.len());
    let stats = fit_normalization(&train)?;
    println!("target mean {:.1} s, std {:.1} s", stats.target_mean, stats.target_std);
    Ok(())
}
