//! Accuracy metrics, stratified and residual analyses, gradient feature
//! importance, and plot-ready tables.
//!
//! Errors are signed as `prediction - truth`, so over-prediction is positive.
//! Percentage errors divide by the true value.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{DatasetRecord, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::model::MlpModel;
use crate::nn::{Mlp, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub r2: f64,
    /// Seconds.
    pub mae: f64,
    /// Seconds.
    pub rmse: f64,
    /// Percent.
    pub mape: f64,
    pub count: usize,
}

fn check_pairs(predictions: &[f64], targets: &[f64]) -> Result<()> {
    if predictions.len() != targets.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("no predictions to evaluate"));
    }
    Ok(())
}

pub fn compute_metrics(predictions: &[f64], targets: &[f64]) -> Result<MetricReport> {
    check_pairs(predictions, targets)?;
    if targets.iter().any(|&t| t <= 0.0) {
        return Err(Error::invalid("percentage errors need positive targets"));
    }
    let count = targets.len();
    let nf = count as f64;
    let mean_t = targets.iter().sum::<f64>() / nf;
    let ss_tot: f64 = targets.iter().map(|t| (t - mean_t).powi(2)).sum();
    if count < 2 || ss_tot == 0.0 {
        return Err(Error::ZeroTargetVariance);
    }
    let mut ss_res = 0.0;
    let mut abs_sum = 0.0;
    let mut pct_sum = 0.0;
    for (p, t) in predictions.iter().zip(targets) {
        let e = p - t;
        ss_res += e * e;
        abs_sum += e.abs();
        pct_sum += e.abs() / t;
    }
    Ok(MetricReport {
        r2: 1.0 - ss_res / ss_tot,
        mae: abs_sum / nf,
        rmse: (ss_res / nf).sqrt(),
        mape: pct_sum / nf * 100.0,
        count,
    })
}

/// Linear-interpolated percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

pub fn abs_percentage_errors(predictions: &[f64], targets: &[f64]) -> Vec<f64> {
    predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).abs() / t * 100.0)
        .collect()
}

/// Load bins in GB; the first and last bins are open-ended.
pub const LOAD_BIN_EDGES: [f64; 4] = [5.0, 10.0, 20.0, 40.0];
pub const LOAD_BIN_LABELS: [&str; 5] = ["[1,5)", "[5,10)", "[10,20)", "[20,40)", "[40,100]"];
/// Bins on the child speed heterogeneity ratio; the last bin is open-ended.
pub const HETEROGENEITY_BIN_EDGES: [f64; 3] = [2.0, 5.0, 10.0];
pub const HETEROGENEITY_BIN_LABELS: [&str; 4] = ["[1,2)", "[2,5)", "[5,10)", "[10,15]"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stratification {
    /// One bucket per child count.
    ByN,
    ByLoad,
    ByHeterogeneity,
    /// A single bucket holding everything.
    Whole,
}

fn bin_index(value: f64, edges: &[f64]) -> usize {
    edges.iter().take_while(|&&e| value >= e).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub label: String,
    pub count: usize,
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    pub mape: Option<f64>,
    /// Absent when the bucket has fewer than two samples or constant targets.
    pub r2: Option<f64>,
    pub median_pct_error: Option<f64>,
    pub p90_pct_error: Option<f64>,
    pub max_pct_error: Option<f64>,
}

impl Bucket {
    fn build(label: String, predictions: &[f64], targets: &[f64]) -> Bucket {
        let count = targets.len();
        if count == 0 {
            return Bucket {
                label,
                count,
                mae: None,
                rmse: None,
                mape: None,
                r2: None,
                median_pct_error: None,
                p90_pct_error: None,
                max_pct_error: None,
            };
        }
        let nf = count as f64;
        let mae = predictions.iter().zip(targets).map(|(p, t)| (p - t).abs()).sum::<f64>() / nf;
        let mse = predictions.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / nf;
        let pct = sorted(abs_percentage_errors(predictions, targets));
        Bucket {
            label,
            count,
            mae: Some(mae),
            rmse: Some(mse.sqrt()),
            mape: Some(pct.iter().sum::<f64>() / nf),
            r2: compute_metrics(predictions, targets).ok().map(|m| m.r2),
            median_pct_error: Some(percentile_sorted(&pct, 0.5)),
            p90_pct_error: Some(percentile_sorted(&pct, 0.9)),
            max_pct_error: pct.last().copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedReport {
    pub scheme: Stratification,
    pub buckets: Vec<Bucket>,
}

impl StratifiedReport {
    pub fn total_count(&self) -> usize {
        self.buckets.iter().map(|b| b.count).sum()
    }

    pub fn bucket(&self, label: &str) -> Option<&Bucket> {
        self.buckets.iter().find(|b| b.label == label)
    }
}

pub fn stratify(
    records: &[DatasetRecord],
    predictions: &[f64],
    scheme: Stratification,
) -> Result<StratifiedReport> {
    if records.len() != predictions.len() {
        return Err(Error::invalid("one prediction per record required"));
    }
    let labels: Vec<String> = match scheme {
        Stratification::ByN => {
            let lo = records.iter().map(|r| r.config.n()).min().unwrap_or(0);
            let hi = records.iter().map(|r| r.config.n()).max().unwrap_or(0);
            if records.is_empty() {
                Vec::new()
            } else {
                (lo..=hi).map(|n| n.to_string()).collect()
            }
        }
        Stratification::ByLoad => LOAD_BIN_LABELS.iter().map(|s| s.to_string()).collect(),
        Stratification::ByHeterogeneity => HETEROGENEITY_BIN_LABELS.iter().map(|s| s.to_string()).collect(),
        Stratification::Whole => vec!["all".to_string()],
    };
    let n_min = records.iter().map(|r| r.config.n()).min().unwrap_or(0);
    let slot = |r: &DatasetRecord| match scheme {
        Stratification::ByN => r.config.n() - n_min,
        Stratification::ByLoad => bin_index(r.config.load_gb, &LOAD_BIN_EDGES),
        Stratification::ByHeterogeneity => bin_index(r.features.heterog_w, &HETEROGENEITY_BIN_EDGES),
        Stratification::Whole => 0,
    };
    let mut preds = vec![Vec::new(); labels.len()];
    let mut truth = vec![Vec::new(); labels.len()];
    for (r, &p) in records.iter().zip(predictions) {
        let k = slot(r);
        preds[k].push(p);
        truth[k].push(r.t_star);
    }
    let buckets = labels
        .into_iter()
        .enumerate()
        .map(|(k, label)| Bucket::build(label, &preds[k], &truth[k]))
        .collect();
    Ok(StratifiedReport { scheme, buckets })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecileDispersion {
    pub decile: usize,
    pub prediction_lo: f64,
    pub prediction_hi: f64,
    pub count: usize,
    pub residual_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Seconds.
    pub mean_error: f64,
    pub share_within_50s: f64,
    pub share_within_100s: f64,
    pub share_pct_within_10: f64,
    /// `(prediction, residual)` pairs.
    pub pairs: Vec<(f64, f64)>,
    /// Residual spread within each tenth of the predictions, ordered by prediction.
    pub dispersion: Vec<DecileDispersion>,
}

pub fn residual_analysis(predictions: &[f64], targets: &[f64]) -> Result<ResidualReport> {
    check_pairs(predictions, targets)?;
    let nf = targets.len() as f64;
    let pairs: Vec<(f64, f64)> = predictions.iter().zip(targets).map(|(p, t)| (*p, p - t)).collect();
    let share = |pred: &dyn Fn(f64, f64) -> bool| {
        predictions.iter().zip(targets).filter(|(p, t)| pred(**p, **t)).count() as f64 / nf
    };

    let mut by_pred = pairs.clone();
    by_pred.sort_by(|a, b| a.0.total_cmp(&b.0));
    let groups = 10.min(by_pred.len());
    let dispersion = (0..groups)
        .map(|d| {
            let lo = d * by_pred.len() / groups;
            let hi = (d + 1) * by_pred.len() / groups;
            let part = &by_pred[lo..hi];
            let res: Vec<f64> = part.iter().map(|p| p.1).collect();
            DecileDispersion {
                decile: d + 1,
                prediction_lo: part[0].0,
                prediction_hi: part[part.len() - 1].0,
                count: part.len(),
                residual_std: crate::data::mean_std(&res).1,
            }
        })
        .collect();

    Ok(ResidualReport {
        mean_error: pairs.iter().map(|p| p.1).sum::<f64>() / nf,
        share_within_50s: share(&|p, t| (p - t).abs() <= 50.0),
        share_within_100s: share(&|p, t| (p - t).abs() <= 100.0),
        share_pct_within_10: share(&|p, t| (p - t).abs() / t <= 0.10),
        pairs,
        dispersion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub index: usize,
    /// Mean `|d y_hat / d x_j|` in normalized units.
    pub importance: f64,
}

/// Mean absolute input gradient per input column, ranked descending.
pub fn feature_importance(net: &Mlp, rows: &[f64], names: &[&str]) -> Result<Vec<FeatureImportance>> {
    let dim = net.input_dim();
    if rows.is_empty() || !rows.len().is_multiple_of(dim) {
        return Err(Error::invalid("sample set must be a non-empty whole number of rows"));
    }
    if names.len() != dim {
        return Err(Error::invalid("one name per input column required"));
    }
    let count = rows.len() / dim;
    let mut acc = vec![0.0; dim];
    for row in rows.chunks_exact(dim) {
        for (a, g) in acc.iter_mut().zip(net.input_gradient(row)) {
            *a += g.abs();
        }
    }
    let mut out: Vec<FeatureImportance> = acc
        .into_iter()
        .enumerate()
        .map(|(index, s)| FeatureImportance {
            feature: names[index].to_string(),
            index,
            importance: s / count as f64,
        })
        .collect();
    out.sort_by(|a, b| b.importance.total_cmp(&a.importance).then(a.index.cmp(&b.index)));
    Ok(out)
}

/// Feature importance of a model bundle over dataset records.
pub fn model_feature_importance(model: &MlpModel, records: &[DatasetRecord]) -> Result<Vec<FeatureImportance>> {
    let mut rows = Vec::with_capacity(records.len() * FEATURE_NAMES.len());
    for r in records {
        rows.extend_from_slice(&model.norm.normalize_features(&r.features));
    }
    feature_importance(&model.network, &rows, &FEATURE_NAMES)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width histogram over the data range; the maximum lands in the last bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return vec![HistogramBin { lo, hi, count: values.len() }];
    }
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            lo: lo + width * i as f64,
            hi: if i + 1 == bins { hi } else { lo + width * (i + 1) as f64 },
            count: 0,
        })
        .collect();
    for v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        out[k].count += 1;
    }
    out
}

pub const HISTOGRAM_BINS: usize = 40;

/// Everything the figure tables are built from.
pub struct PlotInputs<'a> {
    pub train_report: Option<&'a TrainReport>,
    pub records: &'a [DatasetRecord],
    pub predictions: &'a [f64],
}

fn bucket_table(report: &StratifiedReport) -> String {
    let mut s = String::from("bucket,count,mae_s,rmse_s,mape_pct,median_pct_error,p90_pct_error,max_pct_error\n");
    let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for b in &report.buckets {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            b.label,
            b.count,
            f(b.mae),
            f(b.rmse),
            f(b.mape),
            f(b.median_pct_error),
            f(b.p90_pct_error),
            f(b.max_pct_error)
        );
    }
    s
}

fn histogram_table(values: &[f64]) -> String {
    let mut s = String::from("bin_lo,bin_hi,count\n");
    for b in histogram(values, HISTOGRAM_BINS) {
        let _ = writeln!(s, "{},{},{}", b.lo, b.hi, b.count);
    }
    s
}

/// Writes one CSV table per figure into `dir` and returns the paths written.
pub fn emit_plot_data(inputs: &PlotInputs<'_>, dir: &Path) -> Result<Vec<PathBuf>> {
    let records = inputs.records;
    let preds = inputs.predictions;
    if records.len() != preds.len() {
        return Err(Error::invalid("one prediction per record required"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let targets: Vec<f64> = records.iter().map(|r| r.t_star).collect();
    let mut tables: Vec<(&str, String)> = Vec::new();

    if let Some(report) = inputs.train_report {
        let mut s = String::from("epoch,train_loss,val_loss\n");
        for (i, (t, v)) in report.train_loss.iter().zip(&report.val_loss).enumerate() {
            let _ = writeln!(s, "{},{},{}", i + 1, t, v);
        }
        tables.push(("fig2_loss_curve.csv", s));
    }

    let mut s = String::from("actual_s,predicted_s\n");
    for (t, p) in targets.iter().zip(preds) {
        let _ = writeln!(s, "{t},{p}");
    }
    tables.push(("fig3_predicted_vs_actual.csv", s));

    let errors: Vec<f64> = preds.iter().zip(&targets).map(|(p, t)| p - t).collect();
    tables.push(("fig4_error_histogram.csv", histogram_table(&errors)));
    let pct: Vec<f64> = preds.iter().zip(&targets).map(|(p, t)| (p - t) / t * 100.0).collect();
    tables.push(("fig5_percentage_error_histogram.csv", histogram_table(&pct)));

    let mut s = String::from("predicted_s,residual_s\n");
    for (p, e) in preds.iter().zip(&errors) {
        let _ = writeln!(s, "{p},{e}");
    }
    tables.push(("fig6_residual_vs_predicted.csv", s));

    let by_n = stratify(records, preds, Stratification::ByN)?;
    let mut s = String::from("n,count,min,q1,median,q3,max\n");
    let n_min = records.iter().map(|r| r.config.n()).min().unwrap_or(0);
    for (k, b) in by_n.buckets.iter().enumerate() {
        let n = n_min + k;
        let (p, t): (Vec<f64>, Vec<f64>) = records
            .iter()
            .zip(preds)
            .filter(|(r, _)| r.config.n() == n)
            .map(|(r, p)| (*p, r.t_star))
            .unzip();
        if p.is_empty() {
            let _ = writeln!(s, "{},0,,,,,", b.label);
            continue;
        }
        let e = sorted(abs_percentage_errors(&p, &t));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            b.label,
            e.len(),
            e[0],
            percentile_sorted(&e, 0.25),
            percentile_sorted(&e, 0.5),
            percentile_sorted(&e, 0.75),
            e[e.len() - 1]
        );
    }
    tables.push(("fig6_error_by_n.csv", s));
    tables.push((
        "fig7_load_bins.csv",
        bucket_table(&stratify(records, preds, Stratification::ByLoad)?),
    ));
    tables.push((
        "fig8_heterogeneity_bins.csv",
        bucket_table(&stratify(records, preds, Stratification::ByHeterogeneity)?),
    ));

    let mut written = Vec::with_capacity(tables.len());
    for (name, body) in tables {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
