use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataError, Dataset};

/// Fold index per row for one stratified k-fold split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
    pub strata_bins: usize,
}

impl FoldAssignment {
    /// Rows held out in fold `f`, ascending.
    pub fn test_rows(&self, f: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&r| self.assignment[r] == f)
            .collect()
    }

    /// Rows used for training when fold `f` is held out, ascending.
    pub fn train_rows(&self, f: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&r| self.assignment[r] != f)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified fold assignment on the effort column.
///
/// Rows are sorted by effort (ties by row index), cut into `strata_bins`
/// equal-count bins, shuffled within each bin, and dealt round-robin into
/// `k` folds with one running counter across bins.
pub fn make_folds(d: &Dataset, k: usize, seed: u64, strata_bins: usize) -> Result<FoldAssignment, DataError> {
    stratified_folds(d.effort(), k, seed, strata_bins)
}

pub(crate) fn stratified_folds(
    effort: &[f64],
    k: usize,
    seed: u64,
    strata_bins: usize,
) -> Result<FoldAssignment, DataError> {
    let n = effort.len();
    if k < 2 {
        return Err(DataError::Folds(format!("k = {k}, at least 2 folds required")));
    }
    if n < k {
        return Err(DataError::Folds(format!("{n} rows cannot fill {k} folds")));
    }
    let bins = strata_bins.clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| effort[a].total_cmp(&effort[b]).then(a.cmp(&b)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; n];
    let mut dealt = 0;
    for b in 0..bins {
        let (lo, hi) = (b * n / bins, (b + 1) * n / bins);
        let bin = &mut order[lo..hi];
        bin.shuffle(&mut rng);
        for &row in bin.iter() {
            assignment[row] = dealt % k;
            dealt += 1;
        }
    }
    Ok(FoldAssignment {
        k,
        assignment,
        seed,
        strata_bins: bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nine_rows_one_per_tercile() {
        let effort: Vec<f64> = (1..=9).map(f64::from).collect();
        let f = stratified_folds(&effort, 3, 11, 3).unwrap();
        assert_eq!(f.fold_sizes(), vec![3, 3, 3]);
        for fold in 0..3 {
            let mut terciles: Vec<usize> = f.test_rows(fold).iter().map(|r| r / 3).collect();
            terciles.sort();
            assert_eq!(terciles, vec![0, 1, 2]);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let effort = [5.0, 1.0, 7.0, 3.0, 3.0, 9.0, 2.0, 8.0];
        let a = stratified_folds(&effort, 3, 42, 3).unwrap();
        let b = stratified_folds(&effort, 3, 42, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ten_rows_sizes_are_seed_independent() {
        // Oracle: deal 10 items round-robin into 3 piles.
        let mut expected = vec![0; 3];
        for i in 0..10 {
            expected[i % 3] += 1;
        }
        assert_eq!(expected, vec![4, 3, 3]);
        let effort: Vec<f64> = (0..10).map(|i| (i * 7 % 10) as f64 + 1.0).collect();
        for seed in 0..20 {
            assert_eq!(stratified_folds(&effort, 3, seed, 3).unwrap().fold_sizes(), expected);
        }
    }

    #[test]
    fn rejects_too_few_rows() {
        assert!(stratified_folds(&[1.0, 2.0], 3, 0, 3).is_err());
        assert!(stratified_folds(&[1.0, 2.0], 1, 0, 3).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_rows_and_balance_strata(
            effort in proptest::collection::vec(0.1f64..1e4, 3..80),
            k in 2usize..6,
            bins in 1usize..6,
            seed in any::<u64>(),
        ) {
            prop_assume!(effort.len() >= k);
            let f = stratified_folds(&effort, k, seed, bins).unwrap();
            prop_assert_eq!(f.assignment.len(), effort.len());
            let mut seen = vec![0; effort.len()];
            for fold in 0..k {
                for r in f.test_rows(fold) {
                    seen[r] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            // per-stratum spread
            let n = effort.len();
            let b = f.strata_bins;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&x, &y| effort[x].total_cmp(&effort[y]).then(x.cmp(&y)));
            for s in 0..b {
                let mut sizes = vec![0usize; k];
                for &row in &order[s * n / b..(s + 1) * n / b] {
                    sizes[f.assignment[row]] += 1;
                }
                let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
                prop_assert!(spread <= 1);
            }
        }
    }
}
