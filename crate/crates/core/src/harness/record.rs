use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub success_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_return: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub test_mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub discontinuity_sharpness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub graph_distance_p95: Option<f64>,
    /// Command-specific scalars.
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub extra: BTreeMap<String, f64>,
}

impl Metrics {
    /// Field-wise mean; a field is kept only when every input has it.
    pub fn mean(all: &[Metrics]) -> Metrics {
        let avg = |f: &dyn Fn(&Metrics) -> Option<f64>| -> Option<f64> {
            let vals: Option<Vec<f64>> = all.iter().map(f).collect();
            vals.filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64)
        };
        let mut extra = BTreeMap::new();
        if let Some(first) = all.first() {
            for key in first.extra.keys() {
                if let Some(v) = avg(&|m: &Metrics| m.extra.get(key).copied()) {
                    extra.insert(key.clone(), v);
                }
            }
        }
        Metrics {
            success_rate: avg(&|m| m.success_rate),
            mean_return: avg(&|m| m.mean_return),
            test_mse: avg(&|m| m.test_mse),
            discontinuity_sharpness: avg(&|m| m.discontinuity_sharpness),
            graph_distance_p95: avg(&|m| m.graph_distance_p95),
            extra,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub metrics: Metrics,
}

/// One cell of a comparison or sweep table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: Option<u64>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub command: String,
    /// Fully resolved inputs of the run.
    pub spec: serde_json::Value,
    pub spec_hash: String,
    pub metrics: Metrics,
    pub per_seed: Vec<SeedResult>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub table: Vec<TableRow>,
    pub wall_clock_seconds: f64,
}

impl ResultRecord {
    pub fn new<S: Serialize>(command: &str, spec: &S) -> Result<Self> {
        let spec = serde_json::to_value(spec)?;
        let text = serde_json::to_string(&spec)?;
        let spec_hash = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self {
            command: command.to_string(),
            spec,
            spec_hash,
            metrics: Metrics::default(),
            per_seed: Vec::new(),
            table: Vec::new(),
            wall_clock_seconds: 0.0,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("result.json"), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Writes a CSV with a fixed header.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch { expected: header.len(), got: row.len() });
        }
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Formats an optional metric; empty when absent.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
