use std::sync::OnceLock;

use crate::data::{make_folds, Cell, Dataset};
use crate::tree::{build_tree, GrownTree, MTParams, ModelTree};

use super::{optimize, BeesConfig, BeesError, Dim, DimKind, SearchSpace, TraceRow};

/// Inner cross-validation folds used to score a candidate.
const INNER_FOLDS: usize = 3;

pub const C_RANGE: (f64, f64) = (2.0, 30.0);
pub const K_RANGE: (f64, f64) = (0.0, 100.0);
pub const T_RANGE: (f64, f64) = (0.0005, 0.5);

/// The `(C, P, K, T)` box searched when tuning.
pub fn mt_search_space() -> SearchSpace {
    let dim = |name: &str, (lower, upper): (f64, f64), kind| Dim {
        name: name.into(),
        lower,
        upper,
        kind,
    };
    SearchSpace::new(vec![
        dim("C", C_RANGE, DimKind::Integer),
        dim("P", (0.0, 1.0), DimKind::Boolean),
        dim("K", K_RANGE, DimKind::Continuous),
        dim("T", T_RANGE, DimKind::Continuous),
    ])
    .expect("static bounds are valid")
}

/// Maps a bee position to tree parameters: C rounded, P thresholded at 0.5,
/// K and T taken as they are. Values are clamped into the valid ranges.
pub fn decode_params(position: &[f64]) -> MTParams {
    assert_eq!(position.len(), 4, "position must be (C, P, K, T)");
    let c = position[0].round().max(2.0);
    MTParams {
        min_instances: if c.is_finite() { c as usize } else { 2 },
        prune: position[1] >= 0.5,
        smoothing: position[2].max(0.0),
        split_threshold: position[3].clamp(f64::MIN_POSITIVE, 1.0),
    }
}

pub fn encode_params(p: &MTParams) -> Vec<f64> {
    vec![
        p.min_instances as f64,
        if p.prune { 1.0 } else { 0.0 },
        p.smoothing,
        p.split_threshold,
    ]
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub params: MTParams,
    pub tree: ModelTree,
    /// Inner cross-validated mean MRE (a fraction) of the winning parameters.
    pub fitness: f64,
    pub trace: Vec<TraceRow>,
    pub evaluations: usize,
}

struct Fold {
    train: Dataset,
    test: Vec<Vec<Cell>>,
    actual: Vec<f64>,
    grown: Vec<OnceLock<Option<GrownTree>>>,
}

/// Scores tree parameters by inner cross-validation on a fixed split.
///
/// Growing is the expensive step and depends only on `C`, so the grown tree
/// of every `(fold, C)` pair is built once and then cut back per candidate.
pub(crate) struct CvObjective {
    folds: Vec<Fold>,
}

impl CvObjective {
    pub(crate) fn new(train: &Dataset, seed: u64) -> Result<Self, BeesError> {
        let needed = 3 * INNER_FOLDS;
        if train.len() < needed {
            return Err(BeesError::TooFewRows {
                rows: train.len(),
                needed,
            });
        }
        let assignment = make_folds(train, INNER_FOLDS, seed, INNER_FOLDS)?;
        let n_c = C_RANGE.1 as usize + 1;
        let folds = (0..INNER_FOLDS)
            .map(|f| {
                let test_rows = assignment.test_rows(f);
                Fold {
                    train: train.subset(&assignment.train_rows(f)),
                    test: test_rows.iter().map(|&r| train.record(r)).collect(),
                    actual: test_rows.iter().map(|&r| train.effort()[r]).collect(),
                    grown: (0..n_c).map(|_| OnceLock::new()).collect(),
                }
            })
            .collect();
        Ok(CvObjective { folds })
    }

    /// Mean MRE over all held-out rows, or +inf if any prediction fails.
    pub(crate) fn score(&self, p: &MTParams) -> f64 {
        if p.validate().is_err() {
            return f64::INFINITY;
        }
        let mut total = 0.0;
        let mut count = 0usize;
        for fold in &self.folds {
            let c = p.min_instances.min(fold.grown.len() - 1);
            let grown = fold.grown[c].get_or_init(|| GrownTree::grow(&fold.train, c).ok());
            let Some(grown) = grown else {
                return f64::INFINITY;
            };
            let tree = grown.materialize(p.prune, p.smoothing, p.split_threshold);
            for (record, &a) in fold.test.iter().zip(&fold.actual) {
                match tree.predict(record) {
                    Ok(y) => total += (a - y).abs() / a,
                    Err(_) => return f64::INFINITY,
                }
                count += 1;
            }
        }
        total / count as f64
    }
}

/// Searches `(C, P, K, T)` with the Bees Algorithm, scoring each candidate by
/// inner 3-fold cross-validated mean MRE on `train`, then refits the winner
/// on all of `train`.
pub fn tune_model_tree(train: &Dataset, cfg: &BeesConfig, seed: u64, workers: usize) -> Result<TuneResult, BeesError> {
    cfg.validate()?;
    let objective = CvObjective::new(train, seed)?;
    let space = mt_search_space();
    let result = optimize(|x| objective.score(&decode_params(x)), &space, cfg, seed, workers)?;
    let params = decode_params(&result.best.position);
    let tree = build_tree(train, params)?;
    Ok(TuneResult {
        params,
        tree,
        fitness: result.best.fitness,
        trace: result.trace,
        evaluations: result.evaluations,
    })
}
