//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each exported function is a thin wrapper over a plain Rust function of the
//! same name with an `_impl` suffix, so the logic is testable natively.

use omt_core::bees::{optimize, BeesConfig, SearchSpace};
use omt_core::data::{Cell, DatasetBuilder};
use omt_core::metrics::{mdmre, mmre, pred, PredictionSet};
use omt_core::tree::{build_tree, MTParams};
use wasm_bindgen::prelude::*;

/// Number of points on the fitted curve returned to the page.
const CURVE_POINTS: usize = 200;

#[wasm_bindgen]
#[derive(Debug)]
pub struct TreeFit {
    text: String,
    curve_x: Vec<f64>,
    curve_y: Vec<f64>,
    leaves: usize,
    train_mmre: f64,
}

#[wasm_bindgen]
impl TreeFit {
    /// Printed tree.
    #[wasm_bindgen(getter)]
    pub fn text(&self) -> String {
        self.text.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn curve_x(&self) -> Vec<f64> {
        self.curve_x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn curve_y(&self) -> Vec<f64> {
        self.curve_y.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn leaves(&self) -> usize {
        self.leaves
    }

    /// Training MMRE in percent.
    #[wasm_bindgen(getter)]
    pub fn train_mmre(&self) -> f64 {
        self.train_mmre
    }
}

pub fn fit_tree_impl(xs: &[f64], ys: &[f64], c: usize, prune: bool, k: f64, t: f64) -> Result<TreeFit, String> {
    if xs.len() != ys.len() {
        return Err(format!("{} x values but {} y values", xs.len(), ys.len()));
    }
    let params = MTParams {
        min_instances: c,
        prune,
        smoothing: k,
        split_threshold: t,
    };
    params.validate().map_err(|e| e.to_string())?;
    let d = DatasetBuilder::new("points")
        .numeric("x", xs.to_vec())
        .target("y", ys.to_vec())
        .build()
        .map_err(|e| e.to_string())?;
    let tree = build_tree(&d, params).map_err(|e| e.to_string())?;

    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut curve_x = Vec::with_capacity(CURVE_POINTS);
    let mut curve_y = Vec::with_capacity(CURVE_POINTS);
    for i in 0..CURVE_POINTS {
        let x = lo + (hi - lo) * i as f64 / (CURVE_POINTS - 1) as f64;
        let y = tree.predict(&[Cell::Number(x)]).map_err(|e| e.to_string())?;
        curve_x.push(x);
        curve_y.push(y);
    }
    let fitted = d
        .records()
        .iter()
        .map(|r| tree.predict(r))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let train_mmre = PredictionSet::from_slices(ys, &fitted)
        .and_then(|p| mmre(&p))
        .unwrap_or(f64::NAN);
    Ok(TreeFit {
        text: tree.to_string(),
        curve_x,
        curve_y,
        leaves: tree.n_leaves(),
        train_mmre,
    })
}

/// Fits a model tree to `(x, y)` points.
#[wasm_bindgen]
pub fn fit_tree(xs: Vec<f64>, ys: Vec<f64>, c: usize, prune: bool, k: f64, t: f64) -> Result<TreeFit, JsError> {
    fit_tree_impl(&xs, &ys, c, prune, k, t).map_err(|e| JsError::new(&e))
}

fn objective(name: &str) -> Result<fn(&[f64]) -> f64, String> {
    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }
    fn rastrigin(x: &[f64]) -> f64 {
        let tau = std::f64::consts::TAU;
        10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (tau * v).cos()).sum::<f64>()
    }
    fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }
    match name {
        "sphere" => Ok(sphere),
        "rastrigin" => Ok(rastrigin),
        "rosenbrock" => Ok(rosenbrock),
        other => Err(format!("unknown function '{other}'")),
    }
}

/// Best fitness after each iteration of a run on `[-5, 5]^dims`.
pub fn bees_trace_impl(function: &str, dims: usize, iterations: usize, seed: u64) -> Result<Vec<f64>, String> {
    let f = objective(function)?;
    let space = SearchSpace::cube(dims, -5.0, 5.0).map_err(|e| e.to_string())?;
    let cfg = BeesConfig {
        max_iterations: iterations,
        epsilon: 0.0,
        ..Default::default()
    };
    let r = optimize(f, &space, &cfg, seed, 1).map_err(|e| e.to_string())?;
    Ok(r.trace.iter().map(|t| t.best_fitness).collect())
}

/// Runs the Bees Algorithm with default settings on `sphere`, `rastrigin`
/// or `rosenbrock`.
#[wasm_bindgen]
pub fn bees_trace(function: &str, dims: usize, iterations: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    bees_trace_impl(function, dims, iterations, seed).map_err(|e| JsError::new(&e))
}

/// `[MMRE, MdMRE, PRED(level)]` in percent.
pub fn accuracy_impl(actual: &[f64], predicted: &[f64], level: f64) -> Result<Vec<f64>, String> {
    let p = PredictionSet::from_slices(actual, predicted).map_err(|e| e.to_string())?;
    let out = [mmre(&p), mdmre(&p), pred(&p, level)];
    out.into_iter().map(|r| r.map_err(|e| e.to_string())).collect()
}

#[wasm_bindgen]
pub fn accuracy(actual: Vec<f64>, predicted: Vec<f64>, level: f64) -> Result<Vec<f64>, JsError> {
    accuracy_impl(&actual, &predicted, level).map_err(|e| JsError::new(&e))
}
