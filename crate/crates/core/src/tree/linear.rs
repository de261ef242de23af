use crate::linalg::least_squares;

/// Upper bound on the error compensation factor, used when a node has no
/// more rows than model parameters.
pub const MAX_COMPENSATION: f64 = 10.0;

/// Weight on the parameter count in the numerator of the compensation factor.
pub const PRUNING_MULTIPLIER: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    /// Feature position in the training dataset.
    pub feature: usize,
    pub coef: f64,
}

/// Linear model over numeric features, as carried by every tree node.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub intercept: f64,
    pub terms: Vec<Term>,
    pub training_rmse: f64,
    pub n_train: usize,
}

impl LinearModel {
    pub fn constant(value: f64, n_train: usize) -> Self {
        LinearModel {
            intercept: value,
            terms: Vec::new(),
            training_rmse: 0.0,
            n_train,
        }
    }

    /// Evaluates the model on a row of numeric feature values indexed by
    /// feature position.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.terms.iter().map(|t| t.coef * x[t.feature]).sum::<f64>()
    }

    /// Intercept plus one coefficient per term.
    pub fn n_params(&self) -> usize {
        self.terms.len() + 1
    }

    pub fn coefficient(&self, feature: usize) -> Option<f64> {
        self.terms.iter().find(|t| t.feature == feature).map(|t| t.coef)
    }
}

/// `(n + m*v) / (n - v)` with `m` = [`PRUNING_MULTIPLIER`], or
/// [`MAX_COMPENSATION`] when `n <= v`.
pub fn compensation_factor(n: usize, v: usize) -> f64 {
    if n <= v {
        MAX_COMPENSATION
    } else {
        (n as f64 + PRUNING_MULTIPLIER * v as f64) / (n - v) as f64
    }
}

/// Mean absolute error of `model` on the given rows, inflated by the
/// compensation factor for its parameter count.
pub fn compensated_error<'a>(model: &LinearModel, rows: impl ExactSizeIterator<Item = (&'a [f64], f64)>) -> f64 {
    let n = rows.len();
    if n == 0 {
        return 0.0;
    }
    let mae = rows.map(|(x, y)| (y - model.predict(x)).abs()).sum::<f64>() / n as f64;
    mae * compensation_factor(n, model.n_params())
}

/// Least-squares model on `candidates` followed by greedy attribute dropping.
///
/// `x` holds one numeric row per training case, indexed by feature position.
/// Features are dropped one at a time, always the one whose removal gives the
/// lowest compensated error, while that error is strictly below the current
/// model's.
pub fn fit_linear_model(x: &[&[f64]], y: &[f64], candidates: &[usize]) -> LinearModel {
    let n = y.len();
    assert!(n > 0, "fit_linear_model on zero rows");
    let mean = y.iter().sum::<f64>() / n as f64;
    if y.iter().all(|&v| v == y[0]) {
        return LinearModel::constant(y[0], n);
    }
    let varying: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&f| x.iter().any(|r| r[f] != x[0][f]))
        .collect();

    let mut kept = varying;
    let mut model = fit_subset(x, y, &kept, mean);
    let mut err = error_on(&model, x, y);
    while !kept.is_empty() {
        let mut best: Option<(usize, LinearModel, f64)> = None;
        for drop in 0..kept.len() {
            let trial: Vec<usize> = kept
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != drop)
                .map(|(_, &f)| f)
                .collect();
            let m = fit_subset(x, y, &trial, mean);
            let e = error_on(&m, x, y);
            if best.as_ref().is_none_or(|(_, _, be)| e < *be) {
                best = Some((drop, m, e));
            }
        }
        let (drop, m, e) = best.expect("at least one candidate");
        if e < err {
            kept.remove(drop);
            model = m;
            err = e;
        } else {
            break;
        }
    }
    model
}

/// Fits the full least-squares model on `features` without attribute dropping.
pub fn fit_least_squares(x: &[&[f64]], y: &[f64], features: &[usize]) -> LinearModel {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    fit_subset(x, y, features, mean)
}

fn fit_subset(x: &[&[f64]], y: &[f64], features: &[usize], mean: f64) -> LinearModel {
    let n = y.len();
    let mut model = if features.is_empty() {
        LinearModel::constant(mean, n)
    } else {
        let rows: Vec<Vec<f64>> = x.iter().map(|r| features.iter().map(|&f| r[f]).collect()).collect();
        let cols: Vec<usize> = (0..features.len()).collect();
        let fit = least_squares(&rows, y, &cols);
        LinearModel {
            intercept: fit.intercept,
            terms: features
                .iter()
                .zip(fit.coefficients)
                .map(|(&feature, coef)| Term { feature, coef })
                .collect(),
            training_rmse: 0.0,
            n_train: n,
        }
    };
    let sse: f64 = x.iter().zip(y).map(|(r, yi)| (yi - model.predict(r)).powi(2)).sum();
    model.training_rmse = (sse / n as f64).sqrt();
    model
}

fn error_on(model: &LinearModel, x: &[&[f64]], y: &[f64]) -> f64 {
    compensated_error(model, x.iter().copied().zip(y.iter().copied()))
}
