//! Error statistics and plot-ready CDF tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Quantile levels reported in every summary.
pub const QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    /// Quantile level (as text, e.g. `"0.9"`) to error in meters.
    pub quantiles: BTreeMap<String, f64>,
}

/// Linear-interpolation quantile of sorted data (`q` in [0, 1]).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(errors: &[f64]) -> Result<ErrorSummary, CliError> {
    if errors.is_empty() {
        return Err(CliError::Config("no errors to summarize".into()));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ErrorSummary {
        count: errors.len(),
        mean: errors.iter().sum::<f64>() / errors.len() as f64,
        median: quantile_sorted(&sorted, 0.5),
        max: sorted[sorted.len() - 1],
        quantiles: QUANTILES
            .iter()
            .map(|q| (q.to_string(), quantile_sorted(&sorted, *q)))
            .collect(),
    })
}

/// Empirical CDF: `(error, fraction of trials with error <= it)` per
/// sorted sample.
pub fn cdf(errors: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, e)| (*e, (i + 1) as f64 / n))
        .collect()
}

pub fn to_json_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("summary serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_three() {
        assert_eq!(summarize(&[3.0, 1.0, 2.0]).unwrap().median, 2.0);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one() {
        let c = cdf(&[0.5, 0.1, 0.3, 0.3]);
        assert!(c.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
        assert_eq!(c.last().unwrap().1, 1.0);
    }
}
