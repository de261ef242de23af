use crate::data::{Cell, ColumnKind, Dataset, Imputer};

use super::linear::{compensated_error, fit_linear_model};
use super::prune::assemble;
use super::{FeatureInfo, MTParams, ModelTree, Node, Split, SplitRule, TreeError};

/// Standard-deviation reduction of splitting `targets` into the cases listed
/// in `left_indices` and the rest. Population standard deviations.
pub fn sdr_split_score(targets: &[f64], left_indices: &[usize]) -> Result<f64, TreeError> {
    let mut in_left = vec![false; targets.len()];
    for &i in left_indices {
        if i >= targets.len() {
            return Err(TreeError::SplitScore(format!("index {i} out of range")));
        }
        in_left[i] = true;
    }
    let left: Vec<f64> = (0..targets.len()).filter(|&i| in_left[i]).map(|i| targets[i]).collect();
    let right: Vec<f64> = (0..targets.len())
        .filter(|&i| !in_left[i])
        .map(|i| targets[i])
        .collect();
    if left.is_empty() || right.is_empty() {
        return Err(TreeError::SplitScore("both sides of a split must be non-empty".into()));
    }
    let n = targets.len() as f64;
    Ok(population_sd(targets)
        - left.len() as f64 / n * population_sd(&left)
        - right.len() as f64 / n * population_sd(&right))
}

/// Distinct levels sorted by ascending mean target (ties by level code).
/// Candidate categorical splits are the prefixes of this order.
pub fn order_categorical_levels(level_of_row: &[usize], targets: &[f64]) -> Vec<usize> {
    let mut stats: Vec<(usize, f64, usize)> = Vec::new();
    for (&level, &y) in level_of_row.iter().zip(targets) {
        match stats.iter_mut().find(|s| s.0 == level) {
            Some(s) => {
                s.1 += y;
                s.2 += 1;
            }
            None => stats.push((level, y, 1)),
        }
    }
    let mut means: Vec<(usize, f64)> = stats.into_iter().map(|(l, s, c)| (l, s / c as f64)).collect();
    means.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    means.into_iter().map(|(l, _)| l).collect()
}

pub(crate) fn population_sd(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    if y.is_empty() {
        return 0.0;
    }
    let mean = y.iter().sum::<f64>() / n;
    (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Builds a model tree on `train` with the given parameters.
pub fn build_tree(train: &Dataset, params: MTParams) -> Result<ModelTree, TreeError> {
    params.validate()?;
    let grown = GrownTree::grow(train, params.min_instances)?;
    Ok(grown.materialize(params.prune, params.smoothing, params.split_threshold))
}

/// A tree grown as deep as the minimum-coverage rule allows, with a model
/// and error estimate at every node.
///
/// The split threshold only decides where growth stops, and node models do
/// not depend on it, so any `(P, K, T)` tree for this `C` is obtained by
/// truncating and pruning this one. Tuning relies on that to avoid regrowing.
#[derive(Debug, Clone)]
pub struct GrownTree {
    nodes: Vec<Node>,
    global_sd: f64,
    min_instances: usize,
    features: FeatureInfo,
    imputer: Imputer,
}

struct Frame<'a> {
    cells: Vec<Vec<Cell>>,
    numeric: Vec<Vec<f64>>,
    y: &'a [f64],
    kinds: Vec<ColumnKind>,
    numeric_features: Vec<usize>,
    min_instances: usize,
}

impl GrownTree {
    pub fn grow(train: &Dataset, min_instances: usize) -> Result<GrownTree, TreeError> {
        if train.is_empty() {
            return Err(TreeError::EmptyTrainingSet);
        }
        if min_instances < 2 {
            return Err(TreeError::InvalidParams(format!("C must be >= 2, got {min_instances}")));
        }
        let imputer = Imputer::fit(train);
        let cells = imputer.fill_all(train);
        let kinds: Vec<ColumnKind> = (0..train.n_features()).map(|j| train.feature(j).kind).collect();
        let numeric: Vec<Vec<f64>> = cells
            .iter()
            .map(|row| row.iter().map(|c| c.number().unwrap_or(0.0)).collect())
            .collect();
        let frame = Frame {
            cells,
            numeric,
            y: train.effort(),
            kinds: kinds.clone(),
            numeric_features: train.numeric_features(),
            min_instances,
        };
        let mut nodes = Vec::new();
        let rows: Vec<usize> = (0..train.len()).collect();
        grow_node(&frame, rows, &mut nodes);
        Ok(GrownTree {
            global_sd: population_sd(train.effort()),
            nodes,
            min_instances,
            features: FeatureInfo {
                names: train.feature_names().into_iter().map(String::from).collect(),
                kinds,
                levels: (0..train.n_features()).map(|j| train.levels(j).to_vec()).collect(),
            },
            imputer,
        })
    }

    pub fn min_instances(&self) -> usize {
        self.min_instances
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// The tree for `(C, prune, smoothing, split_threshold)`.
    pub fn materialize(&self, prune: bool, smoothing: f64, split_threshold: f64) -> ModelTree {
        let stop_sd = split_threshold * self.global_sd;
        let nodes = assemble(&self.nodes, Some(stop_sd), prune);
        ModelTree {
            nodes,
            global_sd: self.global_sd,
            params: MTParams {
                min_instances: self.min_instances,
                prune,
                smoothing,
                split_threshold,
            },
            features: self.features.clone(),
            imputer: self.imputer.clone(),
        }
    }
}

fn grow_node(frame: &Frame<'_>, rows: Vec<usize>, nodes: &mut Vec<Node>) -> usize {
    let y: Vec<f64> = rows.iter().map(|&r| frame.y[r]).collect();
    let x: Vec<&[f64]> = rows.iter().map(|&r| frame.numeric[r].as_slice()).collect();
    let model = fit_linear_model(&x, &y, &frame.numeric_features);
    let error = compensated_error(&model, x.iter().copied().zip(y.iter().copied()));
    let sd = population_sd(&y);
    let idx = nodes.len();
    nodes.push(Node {
        model,
        coverage: rows.len(),
        sd,
        error,
        split: None,
    });
    if sd <= 0.0 {
        return idx;
    }
    if let Some(best) = best_split(frame, &rows, sd) {
        let left = grow_node(frame, best.left_rows, nodes);
        let right = grow_node(frame, best.right_rows, nodes);
        nodes[idx].split = Some(Split {
            feature: best.feature,
            rule: best.rule,
            left,
            right,
        });
    }
    idx
}

struct Candidate {
    feature: usize,
    rule: SplitRule,
    score: f64,
    left_rows: Vec<usize>,
    right_rows: Vec<usize>,
}

/// Running sums of centred targets, for O(1) standard deviations.
#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    s1: f64,
    s2: f64,
}

impl Moments {
    fn add(&mut self, v: f64) {
        self.n += 1.0;
        self.s1 += v;
        self.s2 += v * v;
    }

    fn minus(self, o: Moments) -> Moments {
        Moments {
            n: self.n - o.n,
            s1: self.s1 - o.s1,
            s2: self.s2 - o.s2,
        }
    }

    fn sd(&self) -> f64 {
        ((self.s2 - self.s1 * self.s1 / self.n) / self.n).max(0.0).sqrt()
    }
}

/// Highest-SDR split with at least `C` cases per side. Ties keep the first
/// candidate met, scanning features in order and thresholds ascending.
fn best_split(frame: &Frame<'_>, rows: &[usize], sd: f64) -> Option<Candidate> {
    let c = frame.min_instances;
    let n = rows.len();
    if n < 2 * c {
        return None;
    }
    let nf = n as f64;
    let mean = rows.iter().map(|&r| frame.y[r]).sum::<f64>() / nf;
    let centred = |r: usize| frame.y[r] - mean;
    let mut total = Moments::default();
    for &r in rows {
        total.add(centred(r));
    }
    let score = |l: Moments| {
        let rgt = total.minus(l);
        sd - l.n / nf * l.sd() - rgt.n / nf * rgt.sd()
    };

    let mut best: Option<(usize, SplitRule, f64)> = None;
    let mut consider = |feature: usize, rule: SplitRule, s: f64| {
        if s > best.as_ref().map_or(0.0, |b| b.2) {
            best = Some((feature, rule, s));
        }
    };

    for (j, kind) in frame.kinds.iter().enumerate() {
        match kind {
            ColumnKind::Numeric => {
                let mut sorted: Vec<(f64, usize)> = rows.iter().map(|&r| (frame.numeric[r][j], r)).collect();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut left = Moments::default();
                for i in 0..n - 1 {
                    left.add(centred(sorted[i].1));
                    let nl = i + 1;
                    if nl < c {
                        continue;
                    }
                    if n - nl < c {
                        break;
                    }
                    if sorted[i].0 == sorted[i + 1].0 {
                        continue;
                    }
                    let threshold = 0.5 * (sorted[i].0 + sorted[i + 1].0);
                    consider(j, SplitRule::Threshold(threshold), score(left));
                }
            }
            ColumnKind::Categorical => {
                let levels: Option<Vec<usize>> = rows
                    .iter()
                    .map(|&r| match frame.cells[r][j] {
                        Cell::Level(l) => Some(l),
                        _ => None,
                    })
                    .collect();
                let Some(levels) = levels else { continue };
                let ys: Vec<f64> = rows.iter().map(|&r| frame.y[r]).collect();
                let order = order_categorical_levels(&levels, &ys);
                let mut per_level = vec![Moments::default(); order.len()];
                for (&l, &r) in levels.iter().zip(rows) {
                    let pos = order.iter().position(|&o| o == l).expect("ordered level");
                    per_level[pos].add(centred(r));
                }
                let mut left = Moments::default();
                for cut in 1..order.len() {
                    let m = per_level[cut - 1];
                    left.n += m.n;
                    left.s1 += m.s1;
                    left.s2 += m.s2;
                    if (left.n as usize) < c || n - (left.n as usize) < c {
                        continue;
                    }
                    let rule = SplitRule::Levels {
                        left: order[..cut].to_vec(),
                        right: order[cut..].to_vec(),
                    };
                    consider(j, rule, score(left));
                }
            }
        }
    }

    let (feature, rule, score) = best?;
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| match &rule {
        SplitRule::Threshold(t) => frame.numeric[r][feature] <= *t,
        SplitRule::Levels { left, .. } => matches!(frame.cells[r][feature], Cell::Level(l) if left.contains(&l)),
    });
    Some(Candidate {
        feature,
        rule,
        score,
        left_rows,
        right_rows,
    })
    .filter(|c| c.score > 0.0)
}
