//! Synthetic dataset generation, feature engineering, splitting and
//! z-score normalization.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dlt::{self, SltnConfig};
use crate::error::{Error, Result};

pub const FEATURE_COUNT: usize = 16;

/// Canonical feature order. Model files depend on it.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "n",
    "load_gb",
    "mean_w",
    "std_w",
    "min_w",
    "max_w",
    "mean_z",
    "std_z",
    "min_z",
    "max_z",
    "w0",
    "comp_comm_ratio",
    "cv_w",
    "cv_z",
    "heterog_w",
    "heterog_z",
];

pub const DATASET_FORMAT: &str = "dlt-sltn-dataset";
pub const DATASET_VERSION: u32 = 1;
pub const NORM_FORMAT: &str = "dlt-normalization";
pub const NORM_VERSION: u32 = 1;
pub const STD_CONVENTION: &str = "population";

/// Smallest stratum the 80/10/10 split accepts.
pub const MIN_STRATUM: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerRanges {
    pub n_range: (usize, usize),
    pub load_range: (f64, f64),
    pub speed_range: (f64, f64),
    pub bandwidth_range: (f64, f64),
}

impl Default for SamplerRanges {
    fn default() -> Self {
        SamplerRanges {
            n_range: (3, 20),
            load_range: (1.0, 100.0),
            speed_range: (1.0, 15.0),
            bandwidth_range: (10.0, 150.0),
        }
    }
}

impl SamplerRanges {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.n_range;
        if lo == 0 || lo > hi {
            return Err(Error::invalid(format!("bad n range [{lo}, {hi}]")));
        }
        for (name, (lo, hi)) in [
            ("load", self.load_range),
            ("speed", self.speed_range),
            ("bandwidth", self.bandwidth_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                return Err(Error::invalid(format!("bad {name} range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// The sixteen engineered features of a configuration.
///
/// Speed statistics are in GFLOPS/s and bandwidth statistics in MB/s, taken
/// over the children only; the root speed is its own feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; FEATURE_COUNT]", into = "[f64; FEATURE_COUNT]")]
pub struct FeatureVector {
    pub n: f64,
    pub load_gb: f64,
    pub mean_w: f64,
    pub std_w: f64,
    pub min_w: f64,
    pub max_w: f64,
    pub mean_z: f64,
    pub std_z: f64,
    pub min_z: f64,
    pub max_z: f64,
    pub w0: f64,
    pub comp_comm_ratio: f64,
    pub cv_w: f64,
    pub cv_z: f64,
    pub heterog_w: f64,
    pub heterog_z: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.n,
            self.load_gb,
            self.mean_w,
            self.std_w,
            self.min_w,
            self.max_w,
            self.mean_z,
            self.std_z,
            self.min_z,
            self.max_z,
            self.w0,
            self.comp_comm_ratio,
            self.cv_w,
            self.cv_z,
            self.heterog_w,
            self.heterog_z,
        ]
    }

    pub fn from_array(a: [f64; FEATURE_COUNT]) -> Self {
        FeatureVector {
            n: a[0],
            load_gb: a[1],
            mean_w: a[2],
            std_w: a[3],
            min_w: a[4],
            max_w: a[5],
            mean_z: a[6],
            std_z: a[7],
            min_z: a[8],
            max_z: a[9],
            w0: a[10],
            comp_comm_ratio: a[11],
            cv_w: a[12],
            cv_z: a[13],
            heterog_w: a[14],
            heterog_z: a[15],
        }
    }
}

impl From<[f64; FEATURE_COUNT]> for FeatureVector {
    fn from(a: [f64; FEATURE_COUNT]) -> Self {
        FeatureVector::from_array(a)
    }
}

impl From<FeatureVector> for [f64; FEATURE_COUNT] {
    fn from(f: FeatureVector) -> Self {
        f.to_array()
    }
}

#[derive(Debug, Clone, Copy)]
struct Summary {
    mean: f64,
    std: f64,
    min: f64,
    max: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
    (mean, var.sqrt())
}

fn summarize(values: &[f64]) -> Summary {
    let (mean, std) = mean_std(values);
    Summary {
        mean,
        std,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

pub fn extract_features(config: &SltnConfig) -> FeatureVector {
    let w = summarize(&config.child_speeds);
    let z = summarize(&config.link_bandwidths);
    FeatureVector {
        n: config.n() as f64,
        load_gb: config.load_gb,
        mean_w: w.mean,
        std_w: w.std,
        min_w: w.min,
        max_w: w.max,
        mean_z: z.mean,
        std_z: z.std,
        min_z: z.min,
        max_z: z.max,
        w0: config.root_speed,
        comp_comm_ratio: w.mean / z.mean,
        cv_w: w.std / w.mean,
        cv_z: z.std / z.mean,
        heterog_w: w.max / w.min,
        heterog_z: z.max / z.min,
    }
}

/// Random generator for record `index` of a dataset seeded with `seed`.
///
/// Each record owns a ChaCha stream, so records can be produced in any order
/// or in parallel and still come out identical.
pub fn record_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn sample_config<R: Rng + ?Sized>(rng: &mut R, ranges: &SamplerRanges) -> SltnConfig {
    let n = rng.gen_range(ranges.n_range.0..=ranges.n_range.1);
    let load_gb = rng.gen_range(ranges.load_range.0..=ranges.load_range.1);
    let (s_lo, s_hi) = ranges.speed_range;
    let (b_lo, b_hi) = ranges.bandwidth_range;
    let root_speed = rng.gen_range(s_lo..=s_hi);
    let child_speeds = (0..n).map(|_| rng.gen_range(s_lo..=s_hi)).collect();
    let link_bandwidths = (0..n).map(|_| rng.gen_range(b_lo..=b_hi)).collect();
    SltnConfig {
        root_speed,
        child_speeds,
        link_bandwidths,
        load_gb,
    }
}

/// One labelled example. The raw configuration is kept next to its features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub config: SltnConfig,
    pub features: FeatureVector,
    pub t_star: f64,
}

impl DatasetRecord {
    pub fn label(config: SltnConfig, compute_intensity: f64) -> Result<Self> {
        let rates = dlt::to_time_rates(&config, compute_intensity)?;
        let alloc = dlt::solve_optimal(&rates, config.load_gb)?;
        Ok(DatasetRecord {
            features: extract_features(&config),
            t_star: alloc.t_star,
            config,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub count: usize,
    pub ranges: SamplerRanges,
    pub compute_intensity: f64,
    pub std_convention: String,
    pub feature_names: Vec<String>,
}

impl DatasetHeader {
    pub fn new(seed: u64, count: usize, ranges: SamplerRanges, compute_intensity: f64) -> Self {
        DatasetHeader {
            format: DATASET_FORMAT.to_string(),
            version: DATASET_VERSION,
            seed,
            count,
            ranges,
            compute_intensity,
            std_convention: STD_CONVENTION.to_string(),
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// SHA-256 of the serialized header line, hex encoded.
    pub fn hash(&self) -> String {
        let line = serde_json::to_string(self).expect("header serializes");
        let digest = Sha256::digest(line.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub records: Vec<DatasetRecord>,
}

/// Samples and labels `count` configurations.
///
/// A labelling failure aborts the whole run; records are never skipped.
pub fn generate_dataset(
    count: usize,
    seed: u64,
    ranges: &SamplerRanges,
    compute_intensity: f64,
) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::invalid("dataset count must be at least 1"));
    }
    ranges.validate()?;
    if !(compute_intensity.is_finite() && compute_intensity > 0.0) {
        return Err(Error::invalid("compute intensity must be positive"));
    }
    let records = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let config = sample_config(&mut record_rng(seed, i), ranges);
            DatasetRecord::label(config, compute_intensity)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        header: DatasetHeader::new(seed, count, *ranges, compute_intensity),
        records,
    })
}

impl Dataset {
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let to_io = |e: std::io::Error| Error::io("<dataset stream>", e);
        serde_json::to_writer(&mut out, &self.header).map_err(|e| to_io(e.into()))?;
        out.write_all(b"\n").map_err(to_io)?;
        for rec in &self.records {
            serde_json::to_writer(&mut out, rec).map_err(|e| to_io(e.into()))?;
            out.write_all(b"\n").map_err(to_io)?;
        }
        out.flush().map_err(to_io)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let malformed = |detail: String| Error::Malformed {
            what: "dataset",
            detail,
        };
        let header_line = lines
            .next()
            .ok_or_else(|| malformed("empty file".into()))?
            .map_err(|e| Error::io(path, e))?;
        let probe: serde_json::Value = serde_json::from_str(&header_line)
            .map_err(|e| malformed(format!("header: {e}")))?;
        if probe.get("format").and_then(|f| f.as_str()) != Some(DATASET_FORMAT) {
            return Err(malformed("header does not name the dataset format".into()));
        }
        let version = probe.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != DATASET_VERSION {
            return Err(Error::VersionMismatch {
                what: "dataset",
                found: version,
                expected: DATASET_VERSION,
            });
        }
        let header: DatasetHeader =
            serde_json::from_value(probe).map_err(|e| malformed(format!("header: {e}")))?;

        let mut records = Vec::with_capacity(header.count);
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: DatasetRecord = serde_json::from_str(&line)
                .map_err(|e| malformed(format!("record on line {}: {e}", lineno + 2)))?;
            records.push(rec);
        }
        if records.len() != header.count {
            return Err(malformed(format!(
                "header declares {} records, file has {}",
                header.count,
                records.len()
            )));
        }
        Ok(Dataset { header, records })
    }
}

/// Record indices of a train/validation/test split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Largest-remainder apportionment of `total` across strata of the given sizes.
fn apportion(sizes: &[usize], total: usize, population: usize) -> Vec<usize> {
    let ideal: Vec<f64> = sizes
        .iter()
        .map(|&c| c as f64 * total as f64 / population as f64)
        .collect();
    let mut quota: Vec<usize> = ideal.iter().map(|q| q.floor() as usize).collect();
    let mut left = total - quota.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - ideal[a].floor();
        let fb = ideal[b] - ideal[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        quota[i] += 1;
        left -= 1;
    }
    quota
}

/// 80/10/10 split stratified by `n`.
///
/// The validation and test sizes are `round(N / 10)` each and are apportioned
/// across strata by largest remainder, so every `n` shows up in every split.
/// Each split keeps the original record order.
pub fn split_indices(records: &[DatasetRecord], seed: u64) -> Result<SplitIndices> {
    if records.is_empty() {
        return Err(Error::invalid("cannot split an empty dataset"));
    }
    let mut strata: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        strata.entry(r.config.n()).or_default().push(i);
    }
    if let Some((&n, members)) = strata.iter().find(|(_, m)| m.len() < MIN_STRATUM) {
        return Err(Error::StratificationInfeasible {
            n,
            count: members.len(),
            min: MIN_STRATUM,
        });
    }

    let total = records.len();
    let holdout = (total as f64 / 10.0).round() as usize;
    let sizes: Vec<usize> = strata.values().map(Vec::len).collect();
    let val_quota = apportion(&sizes, holdout, total);
    let test_quota = apportion(&sizes, holdout, total);

    let mut split = SplitIndices {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (k, (&n, members)) in strata.iter().enumerate() {
        let mut shuffled = members.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(n as u64);
        shuffled.shuffle(&mut rng);
        let (val, rest) = shuffled.split_at(val_quota[k]);
        let (test, train) = rest.split_at(test_quota[k]);
        split.val.extend_from_slice(val);
        split.test.extend_from_slice(test);
        split.train.extend_from_slice(train);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

pub type SplitRecords = (Vec<DatasetRecord>, Vec<DatasetRecord>, Vec<DatasetRecord>);

pub fn split_dataset(records: &[DatasetRecord], seed: u64) -> Result<SplitRecords> {
    let idx = split_indices(records, seed)?;
    let pick = |ids: &[usize]| ids.iter().map(|&i| records[i].clone()).collect();
    Ok((pick(&idx.train), pick(&idx.val), pick(&idx.test)))
}

/// Z-score statistics fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub feature_means: [f64; FEATURE_COUNT],
    pub feature_stds: [f64; FEATURE_COUNT],
    pub target_mean: f64,
    pub target_std: f64,
}

fn is_degenerate(mean: f64, std: f64) -> bool {
    !(std.is_finite() && std > 1e-12 * mean.abs().max(1.0))
}

pub fn fit_normalization(train: &[DatasetRecord]) -> Result<NormalizationStats> {
    if train.is_empty() {
        return Err(Error::invalid("cannot fit normalization on an empty set"));
    }
    let mut feature_means = [0.0; FEATURE_COUNT];
    let mut feature_stds = [0.0; FEATURE_COUNT];
    let mut column = Vec::with_capacity(train.len());
    for j in 0..FEATURE_COUNT {
        column.clear();
        column.extend(train.iter().map(|r| r.features.to_array()[j]));
        let (m, s) = mean_std(&column);
        if is_degenerate(m, s) {
            return Err(Error::ConstantFeature {
                feature: FEATURE_NAMES[j].to_string(),
            });
        }
        feature_means[j] = m;
        feature_stds[j] = s;
    }
    column.clear();
    column.extend(train.iter().map(|r| r.t_star));
    let (target_mean, target_std) = mean_std(&column);
    if is_degenerate(target_mean, target_std) {
        return Err(Error::ConstantFeature {
            feature: "t_star".to_string(),
        });
    }
    Ok(NormalizationStats {
        feature_means,
        feature_stds,
        target_mean,
        target_std,
    })
}

impl NormalizationStats {
    pub fn normalize_features(&self, f: &FeatureVector) -> [f64; FEATURE_COUNT] {
        let mut x = f.to_array();
        for ((v, m), s) in x.iter_mut().zip(&self.feature_means).zip(&self.feature_stds) {
            *v = (*v - m) / s;
        }
        x
    }

    pub fn denormalize_features(&self, x: &[f64; FEATURE_COUNT]) -> FeatureVector {
        let mut raw = *x;
        for ((v, m), s) in raw.iter_mut().zip(&self.feature_means).zip(&self.feature_stds) {
            *v = *v * s + m;
        }
        FeatureVector::from_array(raw)
    }

    pub fn normalize_target(&self, t: f64) -> f64 {
        (t - self.target_mean) / self.target_std
    }

    pub fn denormalize_target(&self, y: f64) -> f64 {
        y * self.target_std + self.target_mean
    }

    /// Normalized features and target of a record.
    pub fn apply(&self, record: &DatasetRecord) -> ([f64; FEATURE_COUNT], f64) {
        (
            self.normalize_features(&record.features),
            self.normalize_target(record.t_star),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = NormFile {
            format: NORM_FORMAT.to_string(),
            version: NORM_VERSION,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            stats: self.clone(),
        };
        let text = serde_json::to_string_pretty(&file).expect("stats serialize");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: NormFile = serde_json::from_str(&text).map_err(|e| Error::Malformed {
            what: "normalization stats",
            detail: e.to_string(),
        })?;
        if file.format != NORM_FORMAT {
            return Err(Error::Malformed {
                what: "normalization stats",
                detail: format!("unexpected format tag `{}`", file.format),
            });
        }
        if file.version != NORM_VERSION {
            return Err(Error::VersionMismatch {
                what: "normalization stats",
                found: file.version,
                expected: NORM_VERSION,
            });
        }
        Ok(file.stats)
    }
}

#[derive(Serialize, Deserialize)]
struct NormFile {
    format: String,
    version: u32,
    feature_names: Vec<String>,
    stats: NormalizationStats,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn homogeneous_features() {
        let cfg = SltnConfig::new(5.0, vec![5.0; 4], vec![50.0; 4], 10.0).unwrap();
        let f = extract_features(&cfg);
        assert_eq!(f.n, 4.0);
        assert_eq!(f.load_gb, 10.0);
        assert_eq!(f.std_w, 0.0);
        assert_eq!(f.std_z, 0.0);
        assert_eq!(f.cv_w, 0.0);
        assert_eq!(f.cv_z, 0.0);
        assert_eq!(f.heterog_w, 1.0);
        assert_eq!(f.heterog_z, 1.0);
        assert_eq!(f.comp_comm_ratio, 0.1);
        assert_eq!(f.w0, 5.0);
    }

    #[test]
    fn extreme_speed_heterogeneity() {
        let cfg = SltnConfig::new(5.0, vec![1.0, 15.0], vec![50.0, 60.0], 10.0).unwrap();
        assert_eq!(extract_features(&cfg).heterog_w, 15.0);
    }

    #[test]
    fn hand_computed_features() {
        let cfg = SltnConfig::new(3.0, vec![2.0, 4.0, 6.0], vec![10.0, 20.0, 30.0], 7.0).unwrap();
        let f = extract_features(&cfg);
        assert_eq!(f.mean_w, 4.0);
        // sqrt(8/3)
        assert_relative_eq!(f.std_w, 1.632_993_161_855_452, max_relative = 1e-12);
        assert_eq!(f.min_w, 2.0);
        assert_eq!(f.max_w, 6.0);
        assert_eq!(f.mean_z, 20.0);
        assert_eq!(f.comp_comm_ratio, 0.2);
        assert_relative_eq!(f.cv_z, f.std_z / 20.0);
        assert_eq!(f.heterog_z, 3.0);
    }

    #[test]
    fn toy_population_std() {
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 1.0));
    }

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let ranges = SamplerRanges::default();
        let a = sample_config(&mut record_rng(9, 4), &ranges);
        let b = sample_config(&mut record_rng(9, 4), &ranges);
        assert_eq!(a, b);

        let mut seen = [false; 21];
        for i in 0..10_000 {
            let c = sample_config(&mut record_rng(1, i), &ranges);
            assert!((3..=20).contains(&c.n()));
            seen[c.n()] = true;
            for s in c.child_speeds.iter().chain([&c.root_speed]) {
                assert!((1.0..=15.0).contains(s));
            }
            for b in &c.link_bandwidths {
                assert!((10.0..=150.0).contains(b));
            }
            assert!((1.0..=100.0).contains(&c.load_gb));
        }
        assert!(seen[3..=20].iter().all(|&s| s));
    }

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(&[10; 10], 10, 100), vec![1; 10]);
        let q = apportion(&[11, 12, 13, 14, 15], 7, 65);
        assert_eq!(q.iter().sum::<usize>(), 7);
        assert!(q.iter().all(|&x| x >= 1));
    }

    fn records_with_n(counts: &[(usize, usize)]) -> Vec<DatasetRecord> {
        let mut out = Vec::new();
        for &(n, count) in counts {
            for k in 0..count {
                let cfg = SltnConfig::new(
                    2.0,
                    vec![1.0 + k as f64; n],
                    vec![10.0 + k as f64; n],
                    1.0 + k as f64,
                )
                .unwrap();
                out.push(DatasetRecord::label(cfg, 100.0).unwrap());
            }
        }
        out
    }

    #[test]
    fn split_proportions_and_partition() {
        let recs = records_with_n(&(3..13).map(|n| (n, 10)).collect::<Vec<_>>());
        let s = split_indices(&recs, 5).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (80, 10, 10));
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        for n in 3..13 {
            for part in [&s.train, &s.val, &s.test] {
                assert!(part.iter().any(|&i| recs[i].config.n() == n));
            }
        }
        assert_eq!(s, split_indices(&recs, 5).unwrap());
        assert_ne!(s, split_indices(&recs, 6).unwrap());
    }

    #[test]
    fn small_stratum_is_rejected() {
        let recs = records_with_n(&[(3, 12), (4, 9)]);
        match split_indices(&recs, 0) {
            Err(Error::StratificationInfeasible { n, count, .. }) => {
                assert_eq!((n, count), (4, 9));
            }
            other => panic!("expected stratification error, got {other:?}"),
        }
    }

    #[test]
    fn normalization_centers_training_columns() {
        let ds = generate_dataset(400, 11, &SamplerRanges::default(), 100.0).unwrap();
        let stats = fit_normalization(&ds.records).unwrap();
        for j in 0..FEATURE_COUNT {
            let col: Vec<f64> = ds
                .records
                .iter()
                .map(|r| stats.normalize_features(&r.features)[j])
                .collect();
            let (m, s) = mean_std(&col);
            assert!(m.abs() < 1e-9, "column {j} mean {m}");
            assert!((s - 1.0).abs() < 1e-9, "column {j} std {s}");
        }
        let x = stats.normalize_features(&FeatureVector::from_array(stats.feature_means));
        assert!(x.iter().all(|v| *v == 0.0));
        let mut one_up = stats.feature_means;
        one_up[3] += stats.feature_stds[3];
        assert_relative_eq!(
            stats.normalize_features(&FeatureVector::from_array(one_up))[3],
            1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn constant_feature_rejected() {
        let recs = records_with_n(&[(4, 12)]);
        assert!(matches!(
            fit_normalization(&recs),
            Err(Error::ConstantFeature { feature }) if feature == "n"
        ));
    }

    #[test]
    fn stats_file_round_trip() {
        let ds = generate_dataset(50, 2, &SamplerRanges::default(), 100.0).unwrap();
        let stats = fit_normalization(&ds.records).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("norm.json");
        stats.save(&p).unwrap();
        assert_eq!(NormalizationStats::load(&p).unwrap(), stats);
    }

    #[test]
    fn dataset_version_checked() {
        let ds = generate_dataset(5, 2, &SamplerRanges::default(), 100.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        ds.save(&p).unwrap();
        let text = fs::read_to_string(&p).unwrap().replacen("\"version\":1", "\"version\":7", 1);
        fs::write(&p, text).unwrap();
        assert!(matches!(
            Dataset::load(&p),
            Err(Error::VersionMismatch { found: 7, .. })
        ));
    }
}
