//! Self-contained model bundle: network weights plus the normalization
//! statistics and provenance needed to serve predictions.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{
    self, extract_features, DatasetHeader, DatasetRecord, NormalizationStats, FEATURE_COUNT,
};
use crate::dlt::SltnConfig;
use crate::error::{Error, Result};
use crate::nn::{self, Mlp, TrainConfig, TrainReport, TrainingSet, STANDARD_DIMS, STANDARD_PARAM_COUNT};

pub const MODEL_FORMAT: &str = "dlt-mlp-bundle";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub format_version: u32,
    pub train_seed: u64,
    /// Seed that produced the train/validation/test split.
    pub split_seed: u64,
    pub dataset_hash: String,
    pub compute_intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub network: Mlp,
    pub norm: NormalizationStats,
    pub metadata: ModelMetadata,
}

/// Normalized training matrix for a set of records.
pub fn to_training_set(records: &[DatasetRecord], norm: &NormalizationStats) -> TrainingSet {
    let mut x = Vec::with_capacity(records.len() * FEATURE_COUNT);
    let mut y = Vec::with_capacity(records.len());
    for r in records {
        let (f, t) = norm.apply(r);
        x.extend_from_slice(&f);
        y.push(t);
    }
    TrainingSet::new(FEATURE_COUNT, x, y).expect("rows are FEATURE_COUNT wide")
}

/// Fits normalization on `train`, then trains the standard network.
pub fn fit_model(
    train: &[DatasetRecord],
    val: &[DatasetRecord],
    config: &TrainConfig,
    header: &DatasetHeader,
    split_seed: u64,
) -> Result<(MlpModel, TrainReport)> {
    let norm = data::fit_normalization(train)?;
    let train_set = to_training_set(train, &norm);
    let val_set = to_training_set(val, &norm);
    let (network, report) = nn::train(&train_set, &val_set, config)?;
    let model = MlpModel {
        network,
        norm,
        metadata: ModelMetadata {
            format_version: MODEL_VERSION,
            train_seed: config.seed,
            split_seed,
            dataset_hash: header.hash(),
            compute_intensity: header.compute_intensity,
        },
    };
    Ok((model, report))
}

impl MlpModel {
    /// Predicted optimal processing time in seconds.
    pub fn predict(&self, config: &SltnConfig) -> f64 {
        let x = self.norm.normalize_features(&extract_features(config));
        self.norm.denormalize_target(self.network.predict(&x))
    }

    pub fn predict_records(&self, records: &[DatasetRecord]) -> Vec<f64> {
        let mut x = Vec::with_capacity(records.len() * FEATURE_COUNT);
        for r in records {
            x.extend_from_slice(&self.norm.normalize_features(&r.features));
        }
        self.network
            .predict_batch(&x)
            .into_iter()
            .map(|y| self.norm.denormalize_target(y))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let layers = (0..self.network.num_layers())
            .map(|k| LayerFile {
                rows: self.network.dims()[k + 1],
                cols: self.network.dims()[k],
                weights: self.network.weights(k).to_vec(),
                biases: self.network.biases(k).to_vec(),
            })
            .collect();
        let file = BundleFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            layer_dims: self.network.dims().to_vec(),
            param_count: self.network.param_count(),
            layers,
            normalization: self.norm.clone(),
            metadata: self.metadata.clone(),
        };
        serde_json::to_string(&file).expect("bundle serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let malformed = |detail: String| Error::Malformed {
            what: "model bundle",
            detail,
        };
        let probe: serde_json::Value =
            serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
        if probe.get("format").and_then(|f| f.as_str()) != Some(MODEL_FORMAT) {
            return Err(malformed("missing or unexpected format tag".into()));
        }
        let version = probe.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != MODEL_VERSION {
            return Err(Error::VersionMismatch {
                what: "model bundle",
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let file: BundleFile = serde_json::from_value(probe).map_err(|e| malformed(e.to_string()))?;

        let stored: usize = file
            .layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum();
        if file.param_count != STANDARD_PARAM_COUNT || stored != STANDARD_PARAM_COUNT {
            return Err(Error::ParamCountMismatch {
                found: if stored != STANDARD_PARAM_COUNT { stored } else { file.param_count },
                expected: STANDARD_PARAM_COUNT,
            });
        }
        if file.layer_dims != STANDARD_DIMS {
            return Err(malformed(format!("unexpected layer widths {:?}", file.layer_dims)));
        }
        let mut params = Vec::with_capacity(stored);
        for (k, l) in file.layers.iter().enumerate() {
            let (cols, rows) = (file.layer_dims[k], file.layer_dims[k + 1]);
            if l.rows != rows || l.cols != cols || l.weights.len() != rows * cols || l.biases.len() != rows {
                return Err(malformed(format!("layer {k} has inconsistent shape")));
            }
            params.extend_from_slice(&l.weights);
            params.extend_from_slice(&l.biases);
        }
        let network = Mlp::from_params(&file.layer_dims, params)?;
        if !network.is_finite() {
            return Err(malformed("non-finite parameter".into()));
        }
        Ok(MlpModel {
            network,
            norm: file.normalization,
            metadata: file.metadata,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        MlpModel::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BundleFile {
    format: String,
    version: u32,
    layer_dims: Vec<usize>,
    param_count: usize,
    layers: Vec<LayerFile>,
    normalization: NormalizationStats,
    metadata: ModelMetadata,
}
