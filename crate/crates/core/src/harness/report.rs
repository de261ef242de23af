use std::fs;
use std::io::Write;
use std::path::Path;

use crate::metrics::{abs_residuals, mdmre, mmre, pred, wilcoxon_rank_sum, PredictionSet};

use super::{CellResult, ExperimentReport, HarnessError, Method};

/// Accuracy of one method on one dataset, averaged over complete repeats.
///
/// The test figures of a repeat are computed on its pooled test predictions
/// (every row once); the train figures are the mean over its folds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub method: Method,
    pub split: &'static str,
    pub mmre: f64,
    pub mdmre: f64,
    pub pred: f64,
    /// Repeats with every fold available; the rest are left out.
    pub repeats_used: usize,
}

/// OMT against one other method, on absolute test residuals pooled over all
/// repeats and folds.
#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceRow {
    pub dataset: String,
    pub baseline: Method,
    pub statistic: f64,
    /// NaN when either side has fewer than 3 residuals.
    pub p_value: f64,
    pub significant: bool,
}

struct Triple([f64; 3]);

fn triple(p: &PredictionSet) -> Triple {
    Triple([
        mmre(p).unwrap_or(f64::NAN),
        mdmre(p).unwrap_or(f64::NAN),
        pred(p, 0.25).unwrap_or(f64::NAN),
    ])
}

fn mean_triples(ts: &[Triple]) -> [f64; 3] {
    if ts.is_empty() {
        return [f64::NAN; 3];
    }
    let mut out = [0.0; 3];
    for t in ts {
        for i in 0..3 {
            out[i] += t.0[i] / ts.len() as f64;
        }
    }
    out
}

/// Aggregates cell results into summary and significance rows.
pub fn summarize(
    datasets: &[String],
    methods: &[Method],
    cells: &[CellResult],
    alpha: f64,
) -> (Vec<SummaryRow>, Vec<SignificanceRow>) {
    let mut summary = Vec::new();
    let mut significance = Vec::new();
    for (di, name) in datasets.iter().enumerate() {
        for &m in methods {
            let mine: Vec<&CellResult> = cells.iter().filter(|c| c.dataset == di && c.method == m).collect();
            let repeats = mine.iter().map(|c| c.repeat + 1).max().unwrap_or(0);
            let (mut test, mut train) = (Vec::new(), Vec::new());
            for r in 0..repeats {
                let folds: Vec<&CellResult> = mine.iter().copied().filter(|c| c.repeat == r).collect();
                if folds.iter().any(|c| c.outcome.is_err()) {
                    continue;
                }
                let mut pooled = PredictionSet::new(vec![]).expect("empty set is valid");
                let mut fold_train = Vec::new();
                for c in folds {
                    let p = c.outcome.as_ref().expect("checked above");
                    pooled.extend(&p.test);
                    fold_train.push(triple(&p.train));
                }
                test.push(triple(&pooled));
                train.push(Triple(mean_triples(&fold_train)));
            }
            for (split, ts) in [("test", &test), ("train", &train)] {
                let [a, b, c] = mean_triples(ts);
                summary.push(SummaryRow {
                    dataset: name.clone(),
                    method: m,
                    split,
                    mmre: a,
                    mdmre: b,
                    pred: c,
                    repeats_used: ts.len(),
                });
            }
        }
        if !methods.contains(&Method::Omt) {
            continue;
        }
        let residuals = |m: Method| -> Vec<f64> {
            cells
                .iter()
                .filter(|c| c.dataset == di && c.method == m)
                .filter_map(|c| c.outcome.as_ref().ok())
                .flat_map(|p| abs_residuals(&p.test))
                .collect()
        };
        let omt = residuals(Method::Omt);
        for &b in methods.iter().filter(|&&m| m != Method::Omt) {
            let row = match wilcoxon_rank_sum(&omt, &residuals(b), alpha) {
                Ok(r) => SignificanceRow {
                    dataset: name.clone(),
                    baseline: b,
                    statistic: r.statistic,
                    p_value: r.p_value,
                    significant: r.significant,
                },
                Err(_) => SignificanceRow {
                    dataset: name.clone(),
                    baseline: b,
                    statistic: f64::NAN,
                    p_value: f64::NAN,
                    significant: false,
                },
            };
            significance.push(row);
        }
    }
    (summary, significance)
}

/// Renders `x` with 4 significant digits; `NA` for non-finite values.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return "NA".to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-4..9).contains(&magnitude) {
        return format!("{x:.3e}");
    }
    let decimals = (3 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new digit (9999.5 -> "10000"), which is fine.
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        let scale = 10f64.powi(magnitude - 3);
        format!("{}", (x / scale).round() * scale)
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<(), HarnessError> {
    let path = dir.join(name);
    let io = |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = fs::File::create(&path).map_err(io)?;
    f.write_all(body.as_bytes()).map_err(io)
}

/// Writes `summary.csv`, `significance.csv` and `residuals.csv` into `out_dir`,
/// creating it if needed.
pub fn export_report(rep: &ExperimentReport, out_dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(out_dir).map_err(|source| HarnessError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;

    let mut summary = String::from("dataset,method,split,MMRE,MdMRE,PRED\n");
    for r in &rep.summary {
        summary.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.dataset,
            r.method,
            r.split,
            format_sig(r.mmre),
            format_sig(r.mdmre),
            format_sig(r.pred)
        ));
    }
    write_file(out_dir, "summary.csv", &summary)?;

    let mut sig = String::from("dataset,baseline,p_value\n");
    for r in &rep.significance {
        sig.push_str(&format!("{},{},{}\n", r.dataset, r.baseline, format_sig(r.p_value)));
    }
    write_file(out_dir, "significance.csv", &sig)?;

    let mut res = String::from("dataset,method,repeat,fold,row_id,abs_residual\n");
    for c in &rep.cells {
        let Ok(p) = &c.outcome else { continue };
        for (row, r) in p.test_rows.iter().zip(abs_residuals(&p.test)) {
            res.push_str(&format!(
                "{},{},{},{},{},{}\n",
                rep.datasets[c.dataset],
                c.method,
                c.repeat,
                c.fold,
                row,
                format_sig(r)
            ));
        }
    }
    write_file(out_dir, "residuals.csv", &res)
}
