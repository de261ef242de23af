//! Repeated stratified cross-validation of every method on shared splits,
//! with metric aggregation, significance tests and CSV export.

mod report;

use std::fmt;
use std::str::FromStr;

use crate::baselines::{CbrModel, Estimator, MlpConfig, MlpModel, SwrModel};
use crate::bees::{tune_model_tree, BeesConfig, TraceRow};
use crate::data::{make_folds, Dataset, FoldAssignment};
use crate::metrics::PredictionSet;
use crate::tree::{build_tree, MTParams, ModelTree};

pub use report::{export_report, format_sig, summarize, SignificanceRow, SummaryRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Model tree tuned by the Bees Algorithm.
    Omt,
    /// Model tree with the untuned default parameters.
    MtDefault,
    Cbr,
    Swr,
    Mlp,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Omt, Method::MtDefault, Method::Cbr, Method::Swr, Method::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            Method::Omt => "OMT",
            Method::MtDefault => "MT",
            Method::Cbr => "CBR",
            Method::Swr => "SWR",
            Method::Mlp => "MLP",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "omt" => Ok(Method::Omt),
            "mt" | "mt-default" => Ok(Method::MtDefault),
            "cbr" => Ok(Method::Cbr),
            "swr" => Ok(Method::Swr),
            "mlp" => Ok(Method::Mlp),
            other => Err(format!("unknown method '{other}' (expected omt, mt, cbr, swr or mlp)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("dataset {name}: {source}")]
    Folds {
        name: String,
        source: crate::data::DataError,
    },
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("worker pool: {0}")]
    Workers(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub k: usize,
    pub repeats: usize,
    pub base_seed: u64,
    pub bees: BeesConfig,
    pub mlp: MlpConfig,
    pub mt_default: MTParams,
    pub alpha: f64,
    /// Parallel cells; results do not depend on it.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            methods: vec![Method::Omt, Method::Cbr, Method::Swr, Method::Mlp],
            k: 3,
            repeats: 10,
            base_seed: 1,
            bees: BeesConfig::default(),
            mlp: MlpConfig::default(),
            mt_default: MTParams::default(),
            alpha: 0.05,
            workers: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |m: String| Err(HarnessError::Config(m));
        if self.k < 2 {
            return err(format!("k must be at least 2, got {}", self.k));
        }
        if self.repeats == 0 {
            return err("repeats must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return err(format!("alpha must be in (0, 1), got {}", self.alpha));
        }
        self.bees.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.mt_default
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    /// Fold seed of repeat `r`.
    pub fn repeat_seed(&self, r: usize) -> u64 {
        self.base_seed.wrapping_add(r as u64)
    }
}

/// Seed for the stochastic parts (tuning, network weights) of one cell.
fn cell_seed(repeat_seed: u64, fold: usize) -> u64 {
    repeat_seed.wrapping_mul(1_000_003).wrapping_add(fold as u64)
}

/// Predictions of one method on one fold of one repeat.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPredictions {
    /// Dataset row of each test pair, in pair order.
    pub test_rows: Vec<usize>,
    pub test: PredictionSet,
    pub train: PredictionSet,
    /// Parameters the tuned tree ended up with.
    pub tuned: Option<MTParams>,
    /// Best-fitness trace of the tuning run.
    pub trace: Option<Vec<TraceRow>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub dataset: usize,
    pub method: Method,
    pub repeat: usize,
    pub fold: usize,
    pub outcome: Result<FoldPredictions, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub datasets: Vec<String>,
    pub rows: Vec<usize>,
    pub methods: Vec<Method>,
    pub k: usize,
    pub repeats: usize,
    pub alpha: f64,
    /// Ordered by dataset, repeat, fold, then method order in the config.
    pub cells: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
    pub significance: Vec<SignificanceRow>,
}

impl ExperimentReport {
    pub fn failures(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| c.outcome.is_err())
    }
}

/// Runs every configured method on every dataset.
pub fn run_experiment(datasets: &[Dataset], cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    run_experiment_with_progress(datasets, cfg, &|_| {})
}

/// As [`run_experiment`], calling `progress` after each finished cell.
pub fn run_experiment_with_progress(
    datasets: &[Dataset],
    cfg: &ExperimentConfig,
    progress: &(dyn Fn(&CellResult) + Sync),
) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let mut methods: Vec<Method> = Vec::new();
    for &m in &cfg.methods {
        if !methods.contains(&m) {
            methods.push(m);
        }
    }

    let mut folds: Vec<Vec<FoldAssignment>> = Vec::new();
    for d in datasets {
        let per_repeat = (0..cfg.repeats)
            .map(|r| make_folds(d, cfg.k, cfg.repeat_seed(r), cfg.k))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| HarnessError::Folds {
                name: d.name().to_string(),
                source,
            })?;
        folds.push(per_repeat);
    }

    let mut jobs = Vec::new();
    for (di, _) in datasets.iter().enumerate() {
        for r in 0..cfg.repeats {
            for f in 0..cfg.k {
                for &m in &methods {
                    jobs.push((di, r, f, m));
                }
            }
        }
    }
    let run = |&(di, r, f, m): &(usize, usize, usize, Method)| {
        let a = &folds[di][r];
        let outcome = run_cell(&datasets[di], a, f, m, cfg, cell_seed(cfg.repeat_seed(r), f));
        let cell = CellResult {
            dataset: di,
            method: m,
            repeat: r,
            fold: f,
            outcome,
        };
        progress(&cell);
        cell
    };
    let cells = run_jobs(&jobs, run, cfg.workers)?;

    let names: Vec<String> = datasets.iter().map(|d| d.name().to_string()).collect();
    let (summary, significance) = summarize(&names, &methods, &cells, cfg.alpha);
    Ok(ExperimentReport {
        datasets: names,
        rows: datasets.iter().map(Dataset::len).collect(),
        methods,
        k: cfg.k,
        repeats: cfg.repeats,
        alpha: cfg.alpha,
        cells,
        summary,
        significance,
    })
}

#[cfg(feature = "parallel")]
fn run_jobs<J: Sync, T: Send>(jobs: &[J], f: impl Fn(&J) -> T + Sync, workers: usize) -> Result<Vec<T>, HarnessError> {
    if workers <= 1 {
        return Ok(jobs.iter().map(f).collect());
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Workers(e.to_string()))?;
    Ok(pool.install(|| jobs.par_iter().map(&f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn run_jobs<J: Sync, T: Send>(jobs: &[J], f: impl Fn(&J) -> T + Sync, _workers: usize) -> Result<Vec<T>, HarnessError> {
    Ok(jobs.iter().map(f).collect())
}

fn run_cell(
    d: &Dataset,
    folds: &FoldAssignment,
    fold: usize,
    method: Method,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<FoldPredictions, String> {
    let train_rows = folds.train_rows(fold);
    let test_rows = folds.test_rows(fold);
    let train = d.subset(&train_rows);
    let mut tuned = None;
    let mut trace = None;
    let model: Box<dyn Fn(&[crate::data::Cell]) -> Result<f64, String>> = match method {
        Method::Omt => {
            let t = tune_model_tree(&train, &cfg.bees, seed, 1).map_err(|e| e.to_string())?;
            tuned = Some(t.params);
            trace = Some(t.trace);
            tree_predictor(t.tree)
        }
        Method::MtDefault => tree_predictor(build_tree(&train, cfg.mt_default).map_err(|e| e.to_string())?),
        Method::Cbr => estimator(CbrModel::fit(&train).map_err(|e| e.to_string())?),
        Method::Swr => estimator(SwrModel::fit(&train).map_err(|e| e.to_string())?),
        Method::Mlp => estimator(MlpModel::fit(&train, &cfg.mlp, seed).map_err(|e| e.to_string())?),
    };
    let pairs = |rows: &[usize]| -> Result<PredictionSet, String> {
        let mut pairs = Vec::with_capacity(rows.len());
        for &r in rows {
            let y = model(&d.record(r))?;
            if !y.is_finite() {
                return Err(format!("non-finite prediction for row {r}"));
            }
            pairs.push((d.effort()[r], y));
        }
        PredictionSet::new(pairs).map_err(|e| e.to_string())
    };
    Ok(FoldPredictions {
        test: pairs(&test_rows)?,
        train: pairs(&train_rows)?,
        test_rows,
        tuned,
        trace,
    })
}

type Predictor = Box<dyn Fn(&[crate::data::Cell]) -> Result<f64, String>>;

fn tree_predictor(tree: ModelTree) -> Predictor {
    Box::new(move |r| tree.predict(r).map_err(|e| e.to_string()))
}

fn estimator<E: Estimator + 'static>(m: E) -> Predictor {
    Box::new(move |r| m.predict(r).map_err(|e| e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DatasetBuilder;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn synthetic(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size: Vec<f64> = (0..n).map(|_| rng.gen_range(5.0..200.0)).collect();
        let team: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0f64..10.0).round()).collect();
        let lang: Vec<&str> = (0..n).map(|i| ["c", "java", "cobol"][i % 3]).collect();
        let effort: Vec<f64> = size
            .iter()
            .zip(&team)
            .zip(&lang)
            .map(|((s, t), l)| {
                let f = if *l == "cobol" { 1.8 } else { 1.0 };
                f * (3.0 * s + 10.0 * t) * rng.gen_range(0.8..1.25)
            })
            .collect();
        DatasetBuilder::new(format!("syn{n}"))
            .numeric("size", size)
            .numeric("team", team)
            .categorical("lang", &lang)
            .target("effort", effort)
            .build()
            .unwrap()
    }

    fn fast(methods: Vec<Method>) -> ExperimentConfig {
        ExperimentConfig {
            methods,
            repeats: 2,
            bees: BeesConfig {
                scouts: 6,
                selected: 4,
                elite: 2,
                elite_recruits: 3,
                other_recruits: 2,
                max_iterations: 3,
                ..Default::default()
            },
            mlp: MlpConfig {
                epochs: 200,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn nine_rows_one_method_partition() {
        let d = synthetic(9, 1);
        let cfg = ExperimentConfig {
            methods: vec![Method::Cbr],
            repeats: 1,
            ..Default::default()
        };
        let rep = run_experiment(&[d], &cfg).unwrap();
        let mut rows: Vec<usize> = rep
            .cells
            .iter()
            .flat_map(|c| c.outcome.as_ref().unwrap().test_rows.clone())
            .collect();
        assert_eq!(rows.len(), 9);
        rows.sort();
        assert_eq!(rows, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn reports_are_reproducible_and_worker_invariant() {
        let ds = [synthetic(30, 2), synthetic(24, 3)];
        let cfg = fast(Method::ALL.to_vec());
        let a = run_experiment(&ds, &cfg).unwrap();
        let b = run_experiment(
            &ds,
            &ExperimentConfig {
                workers: 4,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.failures().count(), 0);
    }

    #[test]
    fn methods_share_splits_and_are_isolated() {
        let ds = [synthetic(30, 4)];
        let all = run_experiment(&ds, &fast(vec![Method::Omt, Method::Cbr, Method::Swr])).unwrap();
        let only = run_experiment(&ds, &fast(vec![Method::Swr])).unwrap();
        let pick = |rep: &ExperimentReport, m: Method| -> Vec<CellResult> {
            rep.cells.iter().filter(|c| c.method == m).cloned().collect()
        };
        assert_eq!(pick(&all, Method::Swr), pick(&only, Method::Swr));
        for r in 0..2 {
            for f in 0..3 {
                let rows: Vec<&Vec<usize>> = all
                    .cells
                    .iter()
                    .filter(|c| c.repeat == r && c.fold == f)
                    .map(|c| &c.outcome.as_ref().unwrap().test_rows)
                    .collect();
                assert!(rows.windows(2).all(|w| w[0] == w[1]));
            }
        }
        let swr_summary: Vec<&SummaryRow> = all.summary.iter().filter(|s| s.method == Method::Swr).collect();
        let only_summary: Vec<&SummaryRow> = only.summary.iter().collect();
        assert_eq!(swr_summary, only_summary);
    }

    #[test]
    fn failing_cells_do_not_abort_others() {
        let ds = [synthetic(12, 5)];
        let cfg = ExperimentConfig {
            methods: vec![Method::Omt, Method::Cbr],
            repeats: 1,
            ..fast(vec![])
        };
        // Training folds of 8 rows are too small for inner 3-fold tuning.
        let rep = run_experiment(&ds, &cfg).unwrap();
        assert_eq!(rep.failures().count(), 3);
        assert!(rep.failures().all(|c| c.method == Method::Omt));
        assert!(rep
            .cells
            .iter()
            .filter(|c| c.method == Method::Cbr)
            .all(|c| c.outcome.is_ok()));
    }

    #[test]
    fn config_validation_and_method_names() {
        assert!(ExperimentConfig {
            k: 1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ExperimentConfig {
            repeats: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("knn".parse::<Method>().is_err());
    }
}
