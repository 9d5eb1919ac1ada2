use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::graph::GraphSample;
use crate::error::{Error, Result};
use crate::train::RegressionDataset;

const STEP_THRESHOLD: f64 = 0.5;
const NOISE_MEAN: f64 = 0.5;
const NOISE_STD: f64 = 0.15;
const CIRCLE_CENTER: f64 = 0.5;
const CIRCLE_RADIUS: f64 = 0.4;
const CIRCLE_SHIFT: f64 = 0.05;
const LOOP_LO: f64 = 0.4;
const LOOP_HI: f64 = 0.6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    /// 0 below 0.5, 1 from 0.5 on.
    StepFn,
    /// Three linear pieces with different slopes and jumps at 1/3 and 2/3.
    PiecewiseSlopes,
    /// Independent Gaussian `y` per sample; no underlying function.
    GaussianNoise,
    /// Two circle branches whose halves are shifted apart at the center, a
    /// single value outside the circle.
    SplitCircle,
    /// 0 below 0.4, 1 from 0.6 on, both in between.
    Hysteresis,
    /// Union of a sloped band and a flat band.
    DisjointRanges,
}

impl FunctionKind {
    pub const ALL: [FunctionKind; 6] = [
        FunctionKind::StepFn,
        FunctionKind::PiecewiseSlopes,
        FunctionKind::GaussianNoise,
        FunctionKind::SplitCircle,
        FunctionKind::Hysteresis,
        FunctionKind::DisjointRanges,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionKind::StepFn => "step_fn",
            FunctionKind::PiecewiseSlopes => "piecewise_slopes",
            FunctionKind::GaussianNoise => "gaussian_noise",
            FunctionKind::SplitCircle => "split_circle",
            FunctionKind::Hysteresis => "hysteresis",
            FunctionKind::DisjointRanges => "disjoint_ranges",
        }
    }

    /// `x` values where the valid set jumps.
    pub fn discontinuities(self) -> &'static [f64] {
        match self {
            FunctionKind::StepFn => &[STEP_THRESHOLD],
            FunctionKind::PiecewiseSlopes => &[1.0 / 3.0, 2.0 / 3.0],
            FunctionKind::GaussianNoise | FunctionKind::DisjointRanges => &[],
            FunctionKind::SplitCircle => &[CIRCLE_CENTER - CIRCLE_RADIUS, CIRCLE_CENTER, CIRCLE_CENTER + CIRCLE_RADIUS],
            FunctionKind::Hysteresis => &[LOOP_LO, LOOP_HI],
        }
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown function kind {s:?}")))
    }
}

/// Valid outputs at one `x`: isolated values plus closed intervals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidSet {
    pub points: Vec<f64>,
    pub intervals: Vec<(f64, f64)>,
}

impl ValidSet {
    fn point(y: f64) -> Self {
        Self { points: vec![y], intervals: Vec::new() }
    }

    pub fn distance(&self, y: f64) -> f64 {
        let p = self.points.iter().map(|v| (y - v).abs());
        let i = self.intervals.iter().map(|&(lo, hi)| {
            if y < lo {
                lo - y
            } else if y > hi {
                y - hi
            } else {
                0.0
            }
        });
        p.chain(i).fold(f64::INFINITY, f64::min)
    }

    /// The value when the set is a single point.
    pub fn single(&self) -> Option<f64> {
        match (self.points.as_slice(), self.intervals.is_empty()) {
            ([y], true) => Some(*y),
            _ => None,
        }
    }

    /// Points plus each interval sampled at spacing `step` (endpoints included).
    pub fn sample(&self, step: f64) -> Vec<f64> {
        let mut out = self.points.clone();
        for &(lo, hi) in &self.intervals {
            let n = ((hi - lo) / step).ceil() as usize + 1;
            out.extend(super::graph::linspace(lo, hi, n));
        }
        out
    }
}

/// The reference function's valid outputs at `x`; `None` for pure noise.
pub fn valid_set(kind: FunctionKind, x: f64) -> Option<ValidSet> {
    Some(match kind {
        FunctionKind::StepFn => ValidSet::point(if x < STEP_THRESHOLD { 0.0 } else { 1.0 }),
        FunctionKind::PiecewiseSlopes => ValidSet::point(if x < 1.0 / 3.0 {
            2.0 * x
        } else if x < 2.0 / 3.0 {
            0.9 - 1.5 * (x - 1.0 / 3.0)
        } else {
            0.1 + 0.5 * (x - 2.0 / 3.0)
        }),
        FunctionKind::GaussianNoise => return None,
        FunctionKind::SplitCircle => {
            let dx = x - CIRCLE_CENTER;
            if dx.abs() < CIRCLE_RADIUS {
                let h = (CIRCLE_RADIUS * CIRCLE_RADIUS - dx * dx).sqrt();
                let shift = if x < CIRCLE_CENTER { CIRCLE_SHIFT } else { -CIRCLE_SHIFT };
                ValidSet { points: vec![CIRCLE_CENTER - h + shift, CIRCLE_CENTER + h + shift], intervals: Vec::new() }
            } else {
                ValidSet::point(CIRCLE_CENTER)
            }
        }
        FunctionKind::Hysteresis => {
            if x < LOOP_LO {
                ValidSet::point(0.0)
            } else if x < LOOP_HI {
                ValidSet { points: vec![0.0, 1.0], intervals: Vec::new() }
            } else {
                ValidSet::point(1.0)
            }
        }
        FunctionKind::DisjointRanges => {
            ValidSet { points: Vec::new(), intervals: vec![(0.1 + 0.1 * x, 0.3 + 0.1 * x), (0.6, 0.8)] }
        }
    })
}

/// `n_points` inputs uniform in `[0, 1]`. Each input emits one sample per valid
/// point and one uniform draw per valid interval.
pub fn gen_function_dataset(kind: FunctionKind, n_points: usize, seed: u64) -> Result<RegressionDataset<f64>> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 points, got {n_points}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for _ in 0..n_points {
        let x: f64 = rng.gen();
        match valid_set(kind, x) {
            None => {
                xs.push(x);
                ys.push(NOISE_MEAN + NOISE_STD * rng.sample::<f64, _>(StandardNormal));
            }
            Some(set) => {
                for y in set.points {
                    xs.push(x);
                    ys.push(y);
                }
                for (lo, hi) in set.intervals {
                    xs.push(x);
                    ys.push(rng.gen_range(lo..=hi));
                }
            }
        }
    }
    let n = xs.len();
    RegressionDataset::new(
        Array2::from_shape_vec((n, 1), xs).expect("shape"),
        Array2::from_shape_vec((n, 1), ys).expect("shape"),
    )
}

/// Dense sample of the reference graph over `[lo, hi]` at spacing `step` in both
/// axes. Jumps contribute both one-sided limits at the jump `x`. `None` for noise.
pub fn dense_graph(kind: FunctionKind, lo: f64, hi: f64, step: f64) -> Option<GraphSample> {
    valid_set(kind, lo)?;
    let n = ((hi - lo) / step).round() as usize + 1;
    let mut points = Vec::new();
    let mut push = |x: f64, set: ValidSet| {
        for y in set.sample(step) {
            points.push(vec![x, y]);
        }
    };
    for x in super::graph::linspace(lo, hi, n) {
        push(x, valid_set(kind, x)?);
    }
    for &xd in kind.discontinuities() {
        push(xd, valid_set(kind, xd)?);
        push(xd, valid_set(kind, xd - 1e-12)?);
    }
    Some(GraphSample::new(points, 1).expect("uniform point length"))
}
