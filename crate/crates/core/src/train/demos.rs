use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::RegressionDataset;
use crate::error::{Error, Result};

/// One episode of `(observation, action)` pairs and its return.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    #[serde(rename = "return", default)]
    pub ret: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// One JSON record per line.
pub fn write_jsonl(path: &Path, trajectories: &[Trajectory]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for t in trajectories {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<Trajectory>> {
    let r = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

/// All `(observation, action)` pairs in trajectory order.
pub fn flatten_trajectories(trajectories: &[Trajectory]) -> Result<RegressionDataset<f64>> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for t in trajectories {
        if t.observations.len() != t.actions.len() {
            return Err(Error::InvalidArgument("trajectory has unequal observation/action counts".into()));
        }
        xs.extend(t.observations.iter().cloned());
        ys.extend(t.actions.iter().cloned());
    }
    if xs.is_empty() {
        return Err(Error::Empty("trajectories"));
    }
    RegressionDataset::from_rows(&xs, &ys)
}

/// Indices of the trajectories whose return ranks in the top `keep_fraction`
/// (rounded up, ties to the earlier index), in their original order.
pub fn rwr_select(trajectories: &[Trajectory], keep_fraction: f64) -> Result<Vec<usize>> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("keep fraction {keep_fraction} not in (0, 1]")));
    }
    let returns: Vec<f64> = trajectories
        .iter()
        .map(|t| t.ret.ok_or_else(|| Error::InvalidArgument("trajectory without return".into())))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..returns.len()).collect();
    order.sort_by(|&a, &b| returns[b].total_cmp(&returns[a]).then(a.cmp(&b)));
    let keep = ((keep_fraction * returns.len() as f64).ceil() as usize).min(returns.len());
    let mut kept = order[..keep].to_vec();
    kept.sort_unstable();
    Ok(kept)
}

/// Keeps the top `keep_fraction` of trajectories by return and flattens them.
pub fn rwr_filter(trajectories: &[Trajectory], keep_fraction: f64) -> Result<RegressionDataset<f64>> {
    let kept: Vec<Trajectory> =
        rwr_select(trajectories, keep_fraction)?.into_iter().map(|i| trajectories[i].clone()).collect();
    flatten_trajectories(&kept)
}

/// Replaces each observation by the concatenation of the last `frames`
/// observations (oldest first), repeating the first one at episode start.
pub fn stack_history(trajectories: &[Trajectory], frames: usize) -> Vec<Trajectory> {
    if frames <= 1 {
        return trajectories.to_vec();
    }
    trajectories
        .iter()
        .map(|t| Trajectory {
            observations: (0..t.observations.len())
                .map(|i| {
                    (0..frames).rev().flat_map(|back| t.observations[i.saturating_sub(back)].iter().copied()).collect()
                })
                .collect(),
            actions: t.actions.clone(),
            ret: t.ret,
        })
        .collect()
}
