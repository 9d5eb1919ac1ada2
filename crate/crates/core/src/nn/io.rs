//! JSON persistence of [`MlpModel`].
//!
//! Parameters are written as flat row-major arrays of `f64`. `serde_json` prints the
//! shortest decimal that parses back to the same bits, so a save/load cycle is
//! bit-exact.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::mlp::{Dense, MlpModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayerRecord {
    pub rows: usize,
    pub cols: usize,
    pub spectral: bool,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub spectral_u: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MlpRecord {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_width: usize,
    pub depth: usize,
    pub dropout_rate: f64,
    pub residual: bool,
    pub layers: Vec<LayerRecord>,
}

impl<T: Scalar> From<&MlpModel<T>> for MlpRecord {
    fn from(m: &MlpModel<T>) -> Self {
        let to64 = |it: &mut dyn Iterator<Item = &T>| it.map(|v| v.as_f64()).collect::<Vec<_>>();
        Self {
            input_dim: m.input_dim,
            output_dim: m.output_dim,
            hidden_width: m.hidden_width,
            depth: m.depth,
            dropout_rate: m.dropout_rate,
            residual: m.residual,
            layers: m
                .layers
                .iter()
                .map(|l| LayerRecord {
                    rows: l.weight.nrows(),
                    cols: l.weight.ncols(),
                    spectral: l.spectral,
                    weight: to64(&mut l.weight.iter()),
                    bias: to64(&mut l.bias.iter()),
                    spectral_u: to64(&mut l.u.iter()),
                })
                .collect(),
        }
    }
}

impl<T: Scalar> TryFrom<MlpRecord> for MlpModel<T> {
    type Error = Error;

    fn try_from(r: MlpRecord) -> Result<Self> {
        if r.layers.len() != r.depth + 1 {
            return Err(Error::InvalidArgument(format!("expected {} layers, found {}", r.depth + 1, r.layers.len())));
        }
        let mut layers = Vec::with_capacity(r.layers.len());
        let mut prev = r.input_dim;
        for l in r.layers {
            if l.cols != prev || l.weight.len() != l.rows * l.cols || l.bias.len() != l.rows {
                return Err(Error::InvalidArgument("inconsistent layer shapes".into()));
            }
            prev = l.rows;
            let weight = Array2::from_shape_vec((l.rows, l.cols), l.weight.into_iter().map(T::lit).collect())
                .expect("checked shape");
            layers.push(Dense {
                weight,
                bias: l.bias.into_iter().map(T::lit).collect::<Array1<T>>(),
                spectral: l.spectral,
                u: l.spectral_u.into_iter().map(T::lit).collect::<Array1<T>>(),
            });
        }
        if prev != r.output_dim {
            return Err(Error::InvalidArgument("output layer does not match output_dim".into()));
        }
        Ok(Self {
            layers,
            input_dim: r.input_dim,
            output_dim: r.output_dim,
            hidden_width: r.hidden_width,
            depth: r.depth,
            dropout_rate: r.dropout_rate,
            residual: r.residual,
        })
    }
}

impl<T: Scalar> MlpModel<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MlpRecord::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<MlpRecord>(s)?.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl<T: Scalar> Serialize for MlpModel<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MlpRecord::from(self).serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for MlpModel<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let record = MlpRecord::deserialize(deserializer)?;
        MlpModel::try_from(record).map_err(serde::de::Error::custom)
    }
}
