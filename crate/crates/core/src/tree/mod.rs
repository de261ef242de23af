//! M5-style model trees: standard-deviation-reduction growth, a linear model
//! at every node, pruning on a compensated error estimate, and smoothed
//! prediction along the root path.

mod display;
mod grow;
mod linear;
mod prune;

use std::fmt;

pub use grow::{build_tree, order_categorical_levels, sdr_split_score, GrownTree};
pub use linear::{
    compensated_error, compensation_factor, fit_least_squares, fit_linear_model, LinearModel, Term, MAX_COMPENSATION,
    PRUNING_MULTIPLIER,
};
pub use prune::prune_tree;

use crate::data::{Cell, ColumnKind, Imputer};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TreeError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("malformed instance: {0}")]
    MalformedInstance(String),
    #[error("split score: {0}")]
    SplitScore(String),
}

/// The four tunable settings of a model tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MTParams {
    /// Minimum number of training cases each child of a split must receive (C).
    pub min_instances: usize,
    /// Whether to prune the grown tree (P).
    pub prune: bool,
    /// Smoothing coefficient (K); 0 disables smoothing.
    pub smoothing: f64,
    /// A node is not split once its target sd is at most this fraction of the
    /// full training set's sd (T).
    pub split_threshold: f64,
}

impl Default for MTParams {
    fn default() -> Self {
        MTParams {
            min_instances: 4,
            prune: true,
            smoothing: 15.0,
            split_threshold: 0.05,
        }
    }
}

impl MTParams {
    pub fn validate(&self) -> Result<(), TreeError> {
        if self.min_instances < 2 {
            return Err(TreeError::InvalidParams(format!(
                "C must be >= 2, got {}",
                self.min_instances
            )));
        }
        if !(self.smoothing >= 0.0) || !self.smoothing.is_finite() {
            return Err(TreeError::InvalidParams(format!(
                "K must be a finite value >= 0, got {}",
                self.smoothing
            )));
        }
        if !(self.split_threshold > 0.0 && self.split_threshold <= 1.0) {
            return Err(TreeError::InvalidParams(format!(
                "T must lie in (0, 1], got {}",
                self.split_threshold
            )));
        }
        Ok(())
    }
}

impl fmt::Display for MTParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "C={} P={} K={} T={}",
            self.min_instances, self.prune, self.smoothing, self.split_threshold
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    /// Cases with `value <= threshold` go left.
    Threshold(f64),
    /// Level codes seen at the node on each side. Any other level is unseen.
    Levels { left: Vec<usize>, right: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub rule: SplitRule,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub model: LinearModel,
    pub coverage: usize,
    /// Population sd of the training targets at this node.
    pub sd: f64,
    /// Compensated error of `model` on this node's training cases.
    pub error: f64,
    pub split: Option<Split>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

/// Which way a case goes at a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

/// Names and kinds of the features a tree was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureInfo {
    pub names: Vec<String>,
    pub kinds: Vec<ColumnKind>,
    pub levels: Vec<Vec<String>>,
}

/// A fitted model tree. Nodes live in an arena; index 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTree {
    pub(crate) nodes: Vec<Node>,
    pub(crate) global_sd: f64,
    pub(crate) params: MTParams,
    pub(crate) features: FeatureInfo,
    pub(crate) imputer: Imputer,
}

impl ModelTree {
    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node(&self, idx: usize) -> &Node {
        &self.nodes[idx]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn params(&self) -> MTParams {
        self.params
    }

    pub fn global_sd(&self) -> f64 {
        self.global_sd
    }

    pub fn features(&self) -> &FeatureInfo {
        &self.features
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_indices().len()
    }

    /// Leaf arena indices, left to right.
    pub fn leaf_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            match &self.nodes[i].split {
                Some(s) => {
                    stack.push(s.right);
                    stack.push(s.left);
                }
                None => out.push(i),
            }
        }
        out
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(t: &ModelTree, i: usize) -> usize {
            match &t.nodes[i].split {
                Some(s) => 1 + walk(t, s.left).max(walk(t, s.right)),
                None => 0,
            }
        }
        walk(self, 0)
    }

    /// Smoothed prediction for one project record (cells in feature order).
    pub fn predict(&self, record: &[Cell]) -> Result<f64, TreeError> {
        let x = self.prepare(record)?;
        Ok(self.predict_prepared(&x.0, &x.1))
    }

    /// Smoothed prediction using an explicit smoothing coefficient.
    pub fn predict_with_smoothing(&self, record: &[Cell], k: f64) -> Result<f64, TreeError> {
        let x = self.prepare(record)?;
        let path = self.path(&x.0, &x.1);
        Ok(smooth(&self.nodes, &path, &x.1, k))
    }

    /// Output of the model at the leaf a record reaches, without smoothing.
    pub fn leaf_output(&self, record: &[Cell]) -> Result<f64, TreeError> {
        let x = self.prepare(record)?;
        let path = self.path(&x.0, &x.1);
        Ok(self.nodes[*path.last().expect("non-empty path")].model.predict(&x.1))
    }

    /// Arena indices from the root to the leaf a record reaches.
    pub fn route(&self, record: &[Cell]) -> Result<Vec<usize>, TreeError> {
        let x = self.prepare(record)?;
        Ok(self.path(&x.0, &x.1))
    }

    pub(crate) fn predict_prepared(&self, cells: &[Cell], numeric: &[f64]) -> f64 {
        let path = self.path(cells, numeric);
        smooth(&self.nodes, &path, numeric, self.params.smoothing)
    }

    /// Imputes and checks a record; returns the filled cells and a dense
    /// numeric row (0 at categorical positions).
    pub(crate) fn prepare(&self, record: &[Cell]) -> Result<(Vec<Cell>, Vec<f64>), TreeError> {
        let n = self.features.kinds.len();
        if record.len() != n {
            return Err(TreeError::MalformedInstance(format!(
                "{} cells supplied, tree expects {n}",
                record.len()
            )));
        }
        let cells = self.imputer.fill(record);
        let mut numeric = vec![0.0; n];
        for (j, (cell, kind)) in cells.iter().zip(&self.features.kinds).enumerate() {
            match (kind, cell) {
                (ColumnKind::Numeric, Cell::Number(v)) => numeric[j] = *v,
                (ColumnKind::Categorical, Cell::Level(_) | Cell::Missing) => {}
                _ => {
                    return Err(TreeError::MalformedInstance(format!(
                        "feature '{}' expects a {} value, got {cell:?}",
                        self.features.names[j], kind
                    )))
                }
            }
        }
        Ok((cells, numeric))
    }

    fn path(&self, cells: &[Cell], numeric: &[f64]) -> Vec<usize> {
        let mut path = vec![0];
        let mut i = 0;
        while let Some(split) = &self.nodes[i].split {
            i = match side(split, cells, numeric) {
                Some(Side::Left) => split.left,
                Some(Side::Right) => split.right,
                None => {
                    if self.nodes[split.right].coverage > self.nodes[split.left].coverage {
                        split.right
                    } else {
                        split.left
                    }
                }
            };
            path.push(i);
        }
        path
    }
}

/// `None` when the case's level was never seen at this node.
fn side(split: &Split, cells: &[Cell], numeric: &[f64]) -> Option<Side> {
    match &split.rule {
        SplitRule::Threshold(t) => Some(if numeric[split.feature] <= *t {
            Side::Left
        } else {
            Side::Right
        }),
        SplitRule::Levels { left, right } => match cells[split.feature] {
            Cell::Level(l) if left.contains(&l) => Some(Side::Left),
            Cell::Level(l) if right.contains(&l) => Some(Side::Right),
            _ => None,
        },
    }
}

/// Walks from the leaf back to the root, blending `p' = (n p + K q) / (n + K)`
/// where `n` is the coverage of the child on the path and `q` the ancestor's
/// own model output.
fn smooth(nodes: &[Node], path: &[usize], numeric: &[f64], k: f64) -> f64 {
    let leaf = *path.last().expect("non-empty path");
    let mut p = nodes[leaf].model.predict(numeric);
    if k == 0.0 {
        return p;
    }
    for w in path.windows(2).rev() {
        let (ancestor, child) = (w[0], w[1]);
        let n = nodes[child].coverage as f64;
        let q = nodes[ancestor].model.predict(numeric);
        p = (n * p + k * q) / (n + k);
    }
    p
}
