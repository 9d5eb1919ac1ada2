use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;
use crate::train::RegressionDataset;

/// Memorizes every training pair; predicts the output of the L2-nearest stored
/// input (lowest index on ties).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborIndex<T> {
    pub inputs: Array2<T>,
    pub outputs: Array2<T>,
}

impl<T: Scalar> NeighborIndex<T> {
    pub fn new(inputs: Array2<T>, outputs: Array2<T>) -> Result<Self> {
        check_dim(inputs.nrows(), outputs.nrows())?;
        Ok(Self { inputs, outputs })
    }

    pub fn from_dataset(data: &RegressionDataset<T>) -> Self {
        Self { inputs: data.inputs.clone(), outputs: data.targets.clone() }
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of the nearest stored input.
    pub fn nearest(&self, query: &[T]) -> Result<usize> {
        if self.is_empty() {
            return Err(Error::Empty("neighbor index"));
        }
        check_dim(self.inputs.ncols(), query.len())?;
        let mut best = (0, f64::INFINITY);
        for (i, row) in self.inputs.rows().into_iter().enumerate() {
            let d = sq_dist(row, query);
            if d < best.1 {
                best = (i, d);
            }
        }
        Ok(best.0)
    }

    pub fn predict(&self, query: &[T]) -> Result<Vec<T>> {
        Ok(self.outputs.row(self.nearest(query)?).to_vec())
    }

    /// Distance from `query` to the nearest stored input.
    pub fn min_distance(&self, query: &[T]) -> Result<f64> {
        let i = self.nearest(query)?;
        Ok(sq_dist(self.inputs.row(i), query).sqrt())
    }
}

fn sq_dist<T: Scalar>(row: ArrayView1<T>, query: &[T]) -> f64 {
    row.iter().zip(query).map(|(a, b)| (*a - *b).as_f64().powi(2)).sum()
}
