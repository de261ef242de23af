//! Relative-error accuracy measures and the Wilcoxon rank-sum test.

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("actual effort must be positive, got {0}")]
    NonPositiveActual(f64),
    #[error("metric of an empty prediction set")]
    Empty,
    #[error("actual and predicted lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("rank-sum test needs at least 3 values per sample, got {0} and {1}")]
    SampleTooSmall(usize, usize),
}

/// Paired actual and predicted efforts.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pairs: Vec<(f64, f64)>,
}

impl PredictionSet {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self, MetricsError> {
        if let Some(&(a, _)) = pairs.iter().find(|(a, _)| !(*a > 0.0)) {
            return Err(MetricsError::NonPositiveActual(a));
        }
        Ok(PredictionSet { pairs })
    }

    pub fn from_slices(actual: &[f64], predicted: &[f64]) -> Result<Self, MetricsError> {
        if actual.len() != predicted.len() {
            return Err(MetricsError::LengthMismatch(actual.len(), predicted.len()));
        }
        Self::new(actual.iter().copied().zip(predicted.iter().copied()).collect())
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn extend(&mut self, other: &PredictionSet) {
        self.pairs.extend_from_slice(&other.pairs);
    }

    fn mres(&self) -> Result<Vec<f64>, MetricsError> {
        if self.pairs.is_empty() {
            return Err(MetricsError::Empty);
        }
        Ok(self.pairs.iter().map(|&(a, p)| (a - p).abs() / a).collect())
    }
}

/// Magnitude of relative error, `|actual - predicted| / actual`.
pub fn mre(actual: f64, predicted: f64) -> Result<f64, MetricsError> {
    if !(actual > 0.0) {
        return Err(MetricsError::NonPositiveActual(actual));
    }
    Ok((actual - predicted).abs() / actual)
}

/// Mean MRE, in percent.
pub fn mmre(p: &PredictionSet) -> Result<f64, MetricsError> {
    let m = p.mres()?;
    Ok(100.0 * m.iter().sum::<f64>() / m.len() as f64)
}

/// Median MRE, in percent.
pub fn mdmre(p: &PredictionSet) -> Result<f64, MetricsError> {
    let mut m = p.mres()?;
    m.sort_by(f64::total_cmp);
    Ok(100.0 * median_sorted(&m))
}

pub(crate) fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Percentage of pairs whose MRE is strictly below `level`.
pub fn pred(p: &PredictionSet, level: f64) -> Result<f64, MetricsError> {
    let m = p.mres()?;
    let hits = m.iter().filter(|&&e| e < level).count();
    Ok(100.0 * hits as f64 / m.len() as f64)
}

/// `|actual - predicted|` per pair, in input order.
pub fn abs_residuals(p: &PredictionSet) -> Vec<f64> {
    p.pairs.iter().map(|&(a, q)| (a - q).abs()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignificanceResult {
    /// Rank sum of the first sample.
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub significant: bool,
}

/// Largest combined size for which p-values come from exact enumeration.
const EXACT_LIMIT: usize = 10;

/// Two-sided Wilcoxon rank-sum test of `a` against `b`.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64], alpha: f64) -> Result<SignificanceResult, MetricsError> {
    let (n1, n2) = (a.len(), b.len());
    if n1 < 3 || n2 < 3 {
        return Err(MetricsError::SampleTooSmall(n1, n2));
    }
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, tie_term) = mid_ranks(&all);
    let w: f64 = ranks[..n1].iter().sum();
    let n = (n1 + n2) as f64;
    let mean = n1 as f64 * (n + 1.0) / 2.0;

    let p = if n1 + n2 <= EXACT_LIMIT && tie_term == 0.0 {
        exact_p(n1, n2, w)
    } else {
        let var = n1 as f64 * n2 as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
        if var <= 0.0 {
            1.0
        } else {
            let dev = ((w - mean).abs() - 0.5).max(0.0);
            let z = dev / var.sqrt();
            let normal = Normal::new(0.0, 1.0).expect("standard normal");
            2.0 * (1.0 - normal.cdf(z))
        }
    };
    let p_value = p.clamp(0.0, 1.0);
    Ok(SignificanceResult {
        statistic: w,
        p_value,
        alpha,
        significant: p_value < alpha,
    })
}

/// Mid-ranks (1-based) and the tie correction sum of `t^3 - t` over tie groups.
fn mid_ranks(v: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && v[order[j]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    (ranks, tie_term)
}

/// Two-sided exact p-value: probability, over all equally likely choices of
/// `n1` ranks from `1..=n1+n2`, of a rank sum at least as far from the mean.
fn exact_p(n1: usize, n2: usize, w: f64) -> f64 {
    let n = n1 + n2;
    // counts[k][s]: number of k-subsets of the ranks seen so far with sum s.
    let max_sum = n * (n + 1) / 2;
    let mut counts = vec![vec![0u64; max_sum + 1]; n1 + 1];
    counts[0][0] = 1;
    for r in 1..=n {
        for k in (1..=n1.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                counts[k][s] += counts[k - 1][s - r];
            }
        }
    }
    let mean = n1 as f64 * (n as f64 + 1.0) / 2.0;
    let dev = (w - mean).abs();
    let total: u64 = counts[n1].iter().sum();
    let extreme: u64 = counts[n1]
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as f64 - mean).abs() >= dev - 1e-9)
        .map(|(_, c)| *c)
        .sum();
    extreme as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(a: &[f64], p: &[f64]) -> PredictionSet {
        PredictionSet::from_slices(a, p).unwrap()
    }

    #[test]
    fn mre_cases() {
        assert_eq!(mre(100.0, 100.0).unwrap(), 0.0);
        assert_eq!(mre(100.0, 150.0).unwrap(), 0.5);
        assert_eq!(mre(200.0, 100.0).unwrap(), 0.5);
        assert!(mre(0.0, 1.0).is_err());
    }

    #[test]
    fn mmre_hand_value() {
        let p = set(&[100.0, 200.0, 400.0], &[110.0, 150.0, 500.0]);
        assert_abs_diff_eq!(mmre(&p).unwrap(), 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mdmre(&p).unwrap(), 25.0, epsilon = 1e-12);
        assert_eq!(mmre(&set(&[100.0], &[150.0])).unwrap(), 50.0);
    }

    #[test]
    fn mdmre_even_count() {
        let p = set(&[100.0, 100.0], &[110.0, 70.0]);
        assert_abs_diff_eq!(mdmre(&p).unwrap(), 20.0, epsilon = 1e-12);
    }

    #[test]
    fn pred_is_strict() {
        let p = set(&[100.0, 100.0, 300.0], &[110.0, 125.0, 310.0]);
        assert_abs_diff_eq!(pred(&p, 0.25).unwrap(), 200.0 / 3.0, epsilon = 1e-9);
        let edge = set(&[100.0, 200.0], &[125.0, 150.0]);
        assert_eq!(pred(&edge, 0.25).unwrap(), 0.0);
        let perfect = set(&[1.0, 2.0], &[1.0, 2.0]);
        assert_eq!(pred(&perfect, 0.25).unwrap(), 100.0);
        assert_eq!(mmre(&perfect).unwrap(), 0.0);
    }

    #[test]
    fn empty_and_invalid_sets() {
        let empty = PredictionSet::new(vec![]).unwrap();
        assert_eq!(mmre(&empty), Err(MetricsError::Empty));
        assert_eq!(mdmre(&empty), Err(MetricsError::Empty));
        assert_eq!(pred(&empty, 0.25), Err(MetricsError::Empty));
        assert!(PredictionSet::new(vec![(-1.0, 2.0)]).is_err());
        assert!(PredictionSet::from_slices(&[1.0], &[]).is_err());
    }

    #[test]
    fn residuals() {
        let p = set(&[100.0, 200.0], &[150.0, 120.0]);
        assert_eq!(abs_residuals(&p), vec![50.0, 80.0]);
    }

    #[test]
    fn exact_small_sample() {
        let r = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], 0.05).unwrap();
        assert_abs_diff_eq!(r.p_value, 0.1, epsilon = 1e-12);
        assert_eq!(r.statistic, 6.0);
        assert!(!r.significant);
    }

    #[test]
    fn identical_samples_give_p_one() {
        let a = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0];
        let r = wilcoxon_rank_sum(&a, &a, 0.05).unwrap();
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn clear_shift_is_significant() {
        let a: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..30).map(|i| i as f64 + 40.0).collect();
        let r = wilcoxon_rank_sum(&a, &b, 0.05).unwrap();
        assert!(r.significant);
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn too_small_samples() {
        assert_eq!(
            wilcoxon_rank_sum(&[1.0, 2.0], &[1.0, 2.0, 3.0], 0.05),
            Err(MetricsError::SampleTooSmall(2, 3))
        );
    }

    /// Brute-force enumeration over all splits of the pooled ranks.
    fn brute_force_p(n1: usize, n2: usize, w: f64) -> f64 {
        let n = n1 + n2;
        let mean = n1 as f64 * (n as f64 + 1.0) / 2.0;
        let (mut total, mut extreme) = (0u32, 0u32);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != n1 {
                continue;
            }
            let s: usize = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).sum();
            total += 1;
            if (s as f64 - mean).abs() >= (w - mean).abs() - 1e-9 {
                extreme += 1;
            }
        }
        extreme as f64 / total as f64
    }

    #[test]
    fn exact_branch_matches_brute_force() {
        for (n1, n2) in [(3, 3), (3, 5), (4, 6), (5, 5), (3, 7)] {
            let n = n1 + n2;
            let lo: usize = (1..=n1).sum();
            let hi: usize = (n2 + 1..=n).sum();
            for w in lo..=hi {
                assert_abs_diff_eq!(
                    exact_p(n1, n2, w as f64),
                    brute_force_p(n1, n2, w as f64),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn normal_branch_tracks_exact_on_size_ten() {
        // Every split of ten distinct values; the largest gap (0.0225) is at
        // sizes 3 and 7.
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut worst: f64 = 0.0;
        for n1 in 3..=7 {
            let n = 10.0;
            let mean = n1 as f64 * (n + 1.0) / 2.0;
            let var = n1 as f64 * (10 - n1) as f64 * (n + 1.0) / 12.0;
            let lo: usize = (1..=n1).sum();
            let hi: usize = (11 - n1..=10).sum();
            for w in lo..=hi {
                let exact = exact_p(n1, 10 - n1, w as f64);
                let z = ((w as f64 - mean).abs() - 0.5).max(0.0) / var.sqrt();
                let approx = 2.0 * (1.0 - normal.cdf(z));
                worst = worst.max((exact - approx).abs());
            }
        }
        assert!(worst <= 0.023, "largest gap {worst}");
        assert!(worst > 0.02);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n1 = rng.gen_range(3..=7);
            let mut v: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..1.0)).collect();
            v.shuffle(&mut rng);
            let (a, b) = v.split_at(n1);
            let r = wilcoxon_rank_sum(a, b, 0.05).unwrap();
            let z = ((r.statistic - n1 as f64 * 5.5).abs() - 0.5).max(0.0)
                / (n1 as f64 * (10 - n1) as f64 * 11.0 / 12.0).sqrt();
            assert!((r.p_value - 2.0 * (1.0 - normal.cdf(z))).abs() <= 0.023);
        }
    }

    fn prediction_set() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((1.0f64..1e4, 0.0f64..2e4), 1..40)
    }

    proptest! {
        #[test]
        fn permutation_invariant(pairs in prediction_set(), seed in any::<u64>()) {
            let p = PredictionSet::new(pairs.clone()).unwrap();
            let mut shuffled = pairs;
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let q = PredictionSet::new(shuffled).unwrap();
            prop_assert!((mmre(&p).unwrap() - mmre(&q).unwrap()).abs() < 1e-9);
            prop_assert_eq!(mdmre(&p).unwrap(), mdmre(&q).unwrap());
            prop_assert_eq!(pred(&p, 0.25).unwrap(), pred(&q, 0.25).unwrap());
        }

        #[test]
        fn scale_invariant(pairs in prediction_set(), c in 0.01f64..100.0) {
            let p = PredictionSet::new(pairs.clone()).unwrap();
            let q = PredictionSet::new(pairs.iter().map(|&(a, b)| (a * c, b * c)).collect()).unwrap();
            prop_assert!((mmre(&p).unwrap() - mmre(&q).unwrap()).abs() < 1e-6);
            prop_assert!((mdmre(&p).unwrap() - mdmre(&q).unwrap()).abs() < 1e-6);
        }

        #[test]
        fn pred_monotone_in_level(pairs in prediction_set(), l1 in 0.0f64..2.0, l2 in 0.0f64..2.0) {
            let p = PredictionSet::new(pairs).unwrap();
            let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            prop_assert!(pred(&p, lo).unwrap() <= pred(&p, hi).unwrap());
        }

        #[test]
        fn mdmre_between_extremes(pairs in prediction_set()) {
            let p = PredictionSet::new(pairs).unwrap();
            let m = p.mres().unwrap();
            let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let md = mdmre(&p).unwrap() / 100.0;
            prop_assert!(lo - 1e-12 <= md && md <= hi + 1e-12);
        }

        #[test]
        fn wilcoxon_symmetric_and_bounded(
            a in prop::collection::vec(0.0f64..100.0, 3..15),
            b in prop::collection::vec(0.0f64..100.0, 3..15),
        ) {
            let ab = wilcoxon_rank_sum(&a, &b, 0.05).unwrap();
            let ba = wilcoxon_rank_sum(&b, &a, 0.05).unwrap();
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
            prop_assert_eq!(ab.significant, ab.p_value < ab.alpha);
        }
    }
}
