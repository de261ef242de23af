use super::{DataError, Dataset};

/// Effort summary in the layout of the usual dataset-description table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsReport {
    pub cases: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub skewness: f64,
}

pub fn summary_stats(d: &Dataset) -> Result<StatsReport, DataError> {
    effort_stats(d.effort())
}

pub(crate) fn effort_stats(effort: &[f64]) -> Result<StatsReport, DataError> {
    let n = effort.len();
    if n < 3 {
        return Err(DataError::TooFewRows { rows: n, needed: 3 });
    }
    let min = effort.iter().copied().fold(f64::INFINITY, f64::min);
    let max = effort.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = effort.iter().sum::<f64>() / n as f64;
    Ok(StatsReport {
        cases: n,
        min,
        max,
        mean,
        skewness: sample_skewness(effort),
    })
}

/// Adjusted Fisher-Pearson skewness `G1 = g1 * sqrt(n(n-1)) / (n-2)`.
/// Zero for a constant sample.
pub(crate) fn sample_skewness(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return 0.0;
    }
    let g1 = m3 / m2.powf(1.5);
    g1 * (n * (n - 1.0)).sqrt() / (n - 2.0)
}
