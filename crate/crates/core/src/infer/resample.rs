use rand::Rng;

use crate::error::{Error, Result};

/// `n` i.i.d. draws of indices from the categorical distribution `probs`.
pub fn multinomial_indices<R: Rng + ?Sized>(rng: &mut R, probs: &[f64], n: usize) -> Result<Vec<usize>> {
    if probs.is_empty() {
        return Err(Error::Empty("probabilities"));
    }
    if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
        return Err(Error::InvalidArgument(format!("probability {p} is negative or NaN")));
    }
    let mut cdf = Vec::with_capacity(probs.len());
    let mut total = 0.0;
    for p in probs {
        total += p;
        cdf.push(total);
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("probabilities sum to {total}, not 1")));
    }
    let last_positive = probs.iter().rposition(|p| *p > 0.0).expect("sum is 1");
    Ok((0..n)
        .map(|_| {
            let u = rng.gen::<f64>() * total;
            cdf.partition_point(|&c| c <= u).min(last_positive)
        })
        .collect())
}

/// Resamples `values` with replacement, `values.len()` times, according to `probs`.
pub fn multinomial_resample<R: Rng + ?Sized, V: Clone>(rng: &mut R, probs: &[f64], values: &[V]) -> Result<Vec<V>> {
    crate::error::check_dim(values.len(), probs.len())?;
    Ok(multinomial_indices(rng, probs, values.len())?.into_iter().map(|i| values[i].clone()).collect())
}

/// `softmax(-energies)` with max-subtraction.
pub fn softmax_neg(energies: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let neg: Vec<f64> = energies.into_iter().map(|e| -e).collect();
    let max = neg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = neg.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|v| v / sum).collect()
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
