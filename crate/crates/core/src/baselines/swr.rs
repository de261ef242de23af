use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::data::{Cell, Dataset, Imputer};
use crate::linalg::{least_squares, LsFit};

use super::{check_arity, BaselineError, Estimator};

/// A feature enters when its partial-F p-value is below this.
pub const SWR_ENTRY_P: f64 = 0.05;
/// A selected feature leaves when its partial-F p-value exceeds this.
pub const SWR_REMOVAL_P: f64 = 0.10;

/// Stepwise linear regression of `ln(effort + 1)` on `ln(x + 1)` of the
/// numeric features. Categorical features are not used.
#[derive(Debug, Clone)]
pub struct SwrModel {
    /// Selected feature positions, in order of entry.
    selected: Vec<usize>,
    fit: LsFit,
    imputer: Imputer,
    n_features: usize,
    names: Vec<String>,
}

impl SwrModel {
    pub fn fit(train: &Dataset) -> Result<Self, BaselineError> {
        if train.is_empty() {
            return Err(BaselineError::EmptyTrainingSet);
        }
        let imputer = Imputer::fit(train);
        let numeric = train.numeric_features();
        let x: Vec<Vec<f64>> = imputer
            .fill_all(train)
            .iter()
            .map(|r| (0..train.n_features()).map(|j| log_value(&r[j])).collect())
            .collect();
        let y: Vec<f64> = train.effort().iter().map(|v| v.ln_1p()).collect();
        let candidates: Vec<usize> = numeric
            .into_iter()
            .filter(|&j| x.iter().any(|r| r[j] != x[0][j]))
            .collect();

        let selected = stepwise(&x, &y, &candidates);
        let fit = least_squares(&x, &y, &selected);
        Ok(SwrModel {
            selected,
            fit,
            imputer,
            n_features: train.n_features(),
            names: train.feature_names().into_iter().map(String::from).collect(),
        })
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn selected_names(&self) -> Vec<&str> {
        self.selected.iter().map(|&j| self.names[j].as_str()).collect()
    }

    /// Intercept and per-selected-feature coefficients on the log scale.
    pub fn coefficients(&self) -> (f64, &[f64]) {
        (self.fit.intercept, &self.fit.coefficients)
    }
}

fn log_value(c: &Cell) -> f64 {
    match c {
        // Negative sizes are not meaningful; clamp so the log stays defined.
        Cell::Number(v) => v.max(0.0).ln_1p(),
        _ => 0.0,
    }
}

fn rss(x: &[Vec<f64>], y: &[f64], cols: &[usize]) -> f64 {
    let fit = least_squares(x, y, cols);
    x.iter()
        .zip(y)
        .map(|(r, yi)| {
            let row: Vec<f64> = cols.iter().map(|&c| r[c]).collect();
            (yi - fit.predict(&row)).powi(2)
        })
        .sum()
}

/// p-value of the partial F test comparing `small` against `big`, where
/// `big` has one more column. `None` when the residual df is not positive.
fn partial_f_p(x: &[Vec<f64>], y: &[f64], small: &[usize], big: &[usize]) -> Option<f64> {
    let n = y.len();
    let df = n.checked_sub(big.len() + 1).filter(|&d| d > 0)? as f64;
    let rss_big = rss(x, y, big);
    let rss_small = rss(x, y, small);
    if rss_big <= 0.0 {
        return Some(if rss_small > 0.0 { 0.0 } else { 1.0 });
    }
    let f = ((rss_small - rss_big).max(0.0) / (rss_big / df)).max(0.0);
    let dist = FisherSnedecor::new(1.0, df).ok()?;
    Some(1.0 - dist.cdf(f))
}

fn stepwise(x: &[Vec<f64>], y: &[f64], candidates: &[usize]) -> Vec<usize> {
    let mut model: Vec<usize> = Vec::new();
    // Each feature can enter at most a handful of times; the bound only
    // guards against numerical see-sawing.
    for _ in 0..4 * (candidates.len() + 1) {
        let mut entry: Option<(usize, f64)> = None;
        for &c in candidates.iter().filter(|c| !model.contains(c)) {
            let mut bigger = model.clone();
            bigger.push(c);
            if let Some(p) = partial_f_p(x, y, &model, &bigger) {
                if p < SWR_ENTRY_P && entry.is_none_or(|(_, bp)| p < bp) {
                    entry = Some((c, p));
                }
            }
        }
        let Some((c, _)) = entry else { break };
        model.push(c);

        loop {
            let mut removal: Option<(usize, f64)> = None;
            for (i, _) in model.iter().enumerate() {
                let smaller: Vec<usize> = model
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i)
                    .map(|(_, &f)| f)
                    .collect();
                let p = partial_f_p(x, y, &smaller, &model).unwrap_or(1.0);
                if p > SWR_REMOVAL_P && removal.is_none_or(|(_, bp)| p > bp) {
                    removal = Some((i, p));
                }
            }
            match removal {
                Some((i, _)) => {
                    model.remove(i);
                }
                None => break,
            }
        }
    }
    model
}

impl Estimator for SwrModel {
    fn predict(&self, record: &[Cell]) -> Result<f64, BaselineError> {
        check_arity(record, self.n_features)?;
        let filled = self.imputer.fill(record);
        let row: Vec<f64> = self.selected.iter().map(|&j| log_value(&filled[j])).collect();
        Ok(self.fit.predict(&row).exp() - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DatasetBuilder;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn power_law_selects_size_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let size: Vec<f64> = (0..60).map(|_| rng.gen_range(10.0..1000.0)).collect();
        let noise: Vec<f64> = (0..60).map(|_| rng.gen_range(1.0..100.0)).collect();
        let effort: Vec<f64> = size.iter().map(|s| s * s).collect();
        let d = DatasetBuilder::new("pow")
            .numeric("noise", noise)
            .numeric("size", size)
            .target("effort", effort)
            .build()
            .unwrap();
        let m = SwrModel::fit(&d).unwrap();
        assert_eq!(m.selected_names(), vec!["size"]);
        let (_, coef) = m.coefficients();
        // ln(s^2 + 1) against ln(s + 1) bends slightly away from slope 2 at small s.
        assert!((coef[0] - 2.0).abs() < 0.05, "{}", coef[0]);

        // Exhaustive subset oracle: among all subsets, {size} alone has the
        // lowest residual error per residual degree of freedom.
        let x: Vec<Vec<f64>> = (0..d.len())
            .map(|r| d.record(r).iter().map(log_value).collect())
            .collect();
        let y: Vec<f64> = d.effort().iter().map(|v| v.ln_1p()).collect();
        let score = |cols: &[usize]| rss(&x, &y, cols) / (60 - cols.len() - 1) as f64;
        let best = [vec![], vec![0], vec![1], vec![0, 1]]
            .into_iter()
            .min_by(|a, b| score(a).total_cmp(&score(b)))
            .unwrap();
        assert!(best == vec![1] || score(&[1]) <= score(&best) * 1.0001);
    }

    #[test]
    fn noise_features_rarely_enter() {
        let mut intercept_only = 0;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let col = |rng: &mut ChaCha8Rng| (0..200).map(|_| rng.gen_range(1.0..100.0)).collect::<Vec<f64>>();
            let (a, b, c) = (col(&mut rng), col(&mut rng), col(&mut rng));
            let y: Vec<f64> = (0..200).map(|_| rng.gen_range(100.0..1000.0)).collect();
            let d = DatasetBuilder::new("noise")
                .numeric("a", a)
                .numeric("b", b)
                .numeric("c", c)
                .target("y", y)
                .build()
                .unwrap();
            if SwrModel::fit(&d).unwrap().selected().is_empty() {
                intercept_only += 1;
            }
        }
        assert!(intercept_only >= 17, "{intercept_only}/20 intercept-only");
    }

    #[test]
    fn intercept_only_predicts_geometric_mean() {
        let d = DatasetBuilder::new("const")
            .numeric("flat", vec![5.0; 6])
            .target("y", vec![1.0, 3.0, 7.0, 15.0, 3.0, 7.0])
            .build()
            .unwrap();
        let m = SwrModel::fit(&d).unwrap();
        assert!(m.selected().is_empty());
        let mean_log = d.effort().iter().map(|v| v.ln_1p()).sum::<f64>() / 6.0;
        let p = m.predict(&[Cell::Number(5.0)]).unwrap();
        assert!((p - (mean_log.exp() - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn categoricals_and_flat_columns_never_selected() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let size: Vec<f64> = (0..30).map(|_| rng.gen_range(1.0..50.0)).collect();
        let kind: Vec<&str> = (0..30).map(|i| if i % 2 == 0 { "a" } else { "b" }).collect();
        let y: Vec<f64> = size
            .iter()
            .zip(&kind)
            .map(|(s, k)| s * if *k == "a" { 3.0 } else { 30.0 })
            .collect();
        let d = DatasetBuilder::new("mix")
            .categorical("kind", &kind)
            .numeric("flat", vec![2.0; 30])
            .numeric("size", size)
            .target("y", y)
            .build()
            .unwrap();
        let m = SwrModel::fit(&d).unwrap();
        assert_eq!(m.selected(), &[2]);
        let again = SwrModel::fit(&d).unwrap();
        assert_eq!(m.selected(), again.selected());
    }
}
