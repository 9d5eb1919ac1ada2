use crate::error::{Error, Result};
use crate::train::RegressionDataset;

/// Finite sample of a (possibly multi-valued) function's graph; points are
/// `concat(x, y)`, kept sorted by their first coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSample {
    pub dim_x: usize,
    points: Vec<Vec<f64>>,
}

impl GraphSample {
    pub fn new(mut points: Vec<Vec<f64>>, dim_x: usize) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| p.len() != points[0].len() || p.len() <= dim_x) {
            return Err(Error::InvalidArgument(format!("graph point of length {} (x dim {dim_x})", p.len())));
        }
        points.sort_by(|a, b| a[0].total_cmp(&b[0]));
        Ok(Self { dim_x, points })
    }

    pub fn from_dataset(data: &RegressionDataset<f64>) -> Result<Self> {
        let points = data
            .inputs
            .rows()
            .into_iter()
            .zip(data.targets.rows())
            .map(|(x, y)| x.iter().chain(y.iter()).copied().collect())
            .collect();
        Self::new(points, data.input_dim())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Euclidean distance from `p = concat(x, y)` to the nearest stored point.
    /// Scans outward from `p[0]` and stops once the first-coordinate gap alone
    /// exceeds the best distance.
    pub fn distance(&self, p: &[f64]) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::Empty("graph sample"));
        }
        crate::error::check_dim(self.points[0].len(), p.len())?;
        let start = self.points.partition_point(|q| q[0] < p[0]);
        let mut best = f64::INFINITY;
        let sq = |q: &[f64]| q.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        for q in &self.points[start..] {
            if (q[0] - p[0]).powi(2) > best {
                break;
            }
            best = best.min(sq(q));
        }
        for q in self.points[..start].iter().rev() {
            if (q[0] - p[0]).powi(2) > best {
                break;
            }
            best = best.min(sq(q));
        }
        Ok(best.sqrt())
    }
}

/// `min_k ||(x, y) - g_k||` over the stored graph points.
pub fn distance_to_graph(graph: &GraphSample, x: &[f64], y: &[f64]) -> Result<f64> {
    let p: Vec<f64> = x.iter().chain(y).copied().collect();
    graph.distance(&p)
}

/// Every grid value whose energy is within `tol` of the grid minimum.
pub fn argmin_grid<F: Fn(&[f64], f64) -> f64>(energy: F, x: &[f64], grid: &[f64], tol: f64) -> Vec<f64> {
    let energies: Vec<f64> = grid.iter().map(|&y| energy(x, y)).collect();
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    grid.iter().zip(&energies).filter(|(_, e)| **e <= min + tol).map(|(y, _)| *y).collect()
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
