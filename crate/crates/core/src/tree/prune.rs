use crate::data::Dataset;

use super::linear::{compensated_error, compensation_factor};
use super::{ModelTree, Node, TreeError};

/// Bottom-up pruning of `tree` using error estimates recomputed on `train`.
///
/// An inner node becomes a leaf when the compensated error of its own model
/// is no larger than that of its subtree. The subtree's estimate is the mean
/// absolute error of its leaves over the node's rows, compensated for every
/// parameter the subtree spends: each leaf model's plus one per split.
pub fn prune_tree(tree: &ModelTree, train: &Dataset) -> Result<ModelTree, TreeError> {
    if train.is_empty() {
        return Err(TreeError::EmptyTrainingSet);
    }
    let mut rows_at: Vec<Vec<usize>> = vec![Vec::new(); tree.nodes.len()];
    let mut prepared = Vec::with_capacity(train.len());
    for r in 0..train.len() {
        let (cells, numeric) = tree.prepare(&train.record(r))?;
        for i in tree.path(&cells, &numeric) {
            rows_at[i].push(r);
        }
        prepared.push((cells, numeric));
    }
    let mut nodes = tree.nodes.clone();
    for (i, node) in nodes.iter_mut().enumerate() {
        node.error = compensated_error(
            &node.model,
            rows_at[i]
                .iter()
                .map(|&r| (prepared[r].1.as_slice(), train.effort()[r])),
        );
    }
    let mut pruned = tree.clone();
    pruned.nodes = assemble(&nodes, None, true);
    pruned.params.prune = true;
    Ok(pruned)
}

/// Copies the subtree rooted at node 0 into a fresh arena, turning nodes
/// whose sd is at most `stop_sd` into leaves and, when `prune` is set,
/// collapsing subtrees that do not beat their root's own model.
pub(crate) fn assemble(nodes: &[Node], stop_sd: Option<f64>, prune: bool) -> Vec<Node> {
    let mut out = Vec::with_capacity(nodes.len());
    emit(nodes, 0, stop_sd, prune, &mut out);
    out
}

/// What an emitted subtree costs: summed absolute training error over its
/// rows and its parameter count (leaf model parameters plus one per split).
struct Cost {
    abs_error: f64,
    params: usize,
}

fn leaf_cost(node: &Node) -> Cost {
    let v = node.model.n_params();
    let mae = node.error / compensation_factor(node.coverage, v);
    Cost {
        abs_error: mae * node.coverage as f64,
        params: v,
    }
}

fn emit(nodes: &[Node], idx: usize, stop_sd: Option<f64>, prune: bool, out: &mut Vec<Node>) -> (usize, Cost) {
    let node = &nodes[idx];
    let id = out.len();
    let mut copy = node.clone();
    copy.split = None;
    out.push(copy);

    let Some(split) = &node.split else {
        return (id, leaf_cost(node));
    };
    if stop_sd.is_some_and(|s| node.sd <= s) {
        return (id, leaf_cost(node));
    }
    let (left, lc) = emit(nodes, split.left, stop_sd, prune, out);
    let (right, rc) = emit(nodes, split.right, stop_sd, prune, out);
    let cost = Cost {
        abs_error: lc.abs_error + rc.abs_error,
        params: lc.params + rc.params + 1,
    };
    let n = node.coverage;
    let subtree_err = cost.abs_error / n as f64 * compensation_factor(n, cost.params);
    if prune && node.error <= subtree_err {
        out.truncate(id + 1);
        return (id, leaf_cost(node));
    }
    let mut s = split.clone();
    s.left = left;
    s.right = right;
    out[id].split = Some(s);
    (id, cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Cell, DatasetBuilder};
    use crate::tree::{build_tree, MTParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(prune: bool, c: usize) -> MTParams {
        MTParams {
            min_instances: c,
            prune,
            smoothing: 0.0,
            split_threshold: 0.01,
        }
    }

    #[test]
    fn pure_noise_collapses_to_one_leaf() {
        let mut collapsed = 0;
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 200;
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| 100.0 + rng.gen_range(-10.0..10.0)).collect();
            let d = DatasetBuilder::new("noise")
                .numeric("a", a)
                .numeric("b", b)
                .target("y", y)
                .build()
                .unwrap();
            let t = build_tree(&d, params(true, 4)).unwrap();
            if t.depth() == 0 {
                collapsed += 1;
            }
        }
        assert!(collapsed >= 9, "only {collapsed}/10 noise trees collapsed");
    }

    fn piecewise() -> crate::data::Dataset {
        // y = x for x < 0, y = 5 - x for x >= 0, shifted to stay positive.
        let x: Vec<f64> = (-20..20).map(|i| i as f64 * 0.25).collect();
        let y: Vec<f64> = x.iter().map(|&v| 10.0 + if v < 0.0 { v } else { 5.0 - v }).collect();
        DatasetBuilder::new("pw")
            .numeric("x", x)
            .target("y", y)
            .build()
            .unwrap()
    }

    #[test]
    fn piecewise_linear_keeps_its_split() {
        let d = piecewise();
        let t = build_tree(&d, params(true, 4)).unwrap();
        assert!(t.depth() >= 1, "breakpoint pruned away");
        // Either side of the breakpoint is fit exactly.
        for (x, want) in [(-3.0, 7.0), (3.0, 12.0)] {
            let got = t.predict(&[Cell::Number(x)]).unwrap();
            assert!((got - want).abs() < 1e-6, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn single_leaf_is_unchanged() {
        let d = piecewise();
        let mut p = params(false, 4);
        p.min_instances = d.len();
        let t = build_tree(&d, p).unwrap();
        let pruned = prune_tree(&t, &d).unwrap();
        assert_eq!(pruned.nodes, t.nodes);
    }

    #[test]
    fn prune_after_build_matches_pruned_build() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..60).map(|_| rng.gen_range(0.0..10.0)).collect();
        let z: Vec<f64> = (0..60).map(|_| rng.gen_range(0.0..10.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .zip(&z)
            .map(|(a, b)| 5.0 + if *a < 5.0 { 2.0 * b } else { 30.0 - b } + rng.gen_range(0.0..3.0))
            .collect();
        let d = DatasetBuilder::new("r")
            .numeric("x", x)
            .numeric("z", z)
            .target("y", y)
            .build()
            .unwrap();
        let unpruned = build_tree(&d, params(false, 3)).unwrap();
        let pruned = build_tree(&d, params(true, 3)).unwrap();
        let after = prune_tree(&unpruned, &d).unwrap();
        assert_eq!(after.nodes.len(), pruned.nodes.len());
        for (a, b) in after.nodes.iter().zip(&pruned.nodes) {
            assert_eq!(a.split, b.split);
            assert_eq!(a.model, b.model);
        }
    }
}
