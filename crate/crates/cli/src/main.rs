//! `omt`: load effort datasets, fit or tune model trees, run benchmarks.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand};
use omt_core::bees::{tune_model_tree, write_trace, BeesConfig};
use omt_core::data::{import_arff, summary_stats, ArffOptions, Dataset};
use omt_core::harness::{export_report, format_sig, run_experiment_with_progress, ExperimentReport, Method};
use omt_core::metrics::{mdmre, mmre, pred, PredictionSet};
use omt_core::tree::{build_tree, MTParams, ModelTree};

use config::BenchmarkSettings;

#[derive(Parser)]
#[command(
    name = "omt",
    version,
    about = "Model trees tuned by the Bees Algorithm for effort estimation"
)]
struct Cli {
    /// Directory holding `<id>.csv` and `<id>.schema` files
    /// [default: $OMT_DATA_DIR, else ./data]
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Effort statistics (cases, min, max, mean, skewness) of datasets
    Stats {
        /// Dataset ids or paths to .csv files
        #[arg(required = true)]
        datasets: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Fit one model tree, with given or tuned parameters
    Fit(FitArgs),
    /// Cross-validated comparison of OMT against the baselines
    Benchmark(BenchArgs),
    /// Convert an ARFF file into a .csv/.schema pair
    ImportArff {
        input: PathBuf,
        /// Effort attribute
        #[arg(long)]
        target: String,
        /// Comma-separated attributes to leave out
        #[arg(long, value_delimiter = ',')]
        ignore: Vec<String>,
        /// Drop rows with a missing value in a used attribute
        #[arg(long)]
        drop_missing: bool,
        /// Output name [default: input file stem, lowercased]
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args, Default)]
struct BeesArgs {
    /// Scout bees (n)
    #[arg(long)]
    scouts: Option<usize>,
    /// Selected sites (s)
    #[arg(long)]
    selected: Option<usize>,
    /// Elite sites (e)
    #[arg(long)]
    elite: Option<usize>,
    /// Recruits per elite site
    #[arg(long)]
    nep: Option<usize>,
    /// Recruits per other selected site
    #[arg(long)]
    osp: Option<usize>,
    /// Initial patch size, as a fraction of each range
    #[arg(long)]
    ngh: Option<f64>,
    #[arg(long)]
    patch_decay: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
}

impl BeesArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        push("scouts", self.scouts.map(|v| v.to_string()));
        push("selected", self.selected.map(|v| v.to_string()));
        push("elite", self.elite.map(|v| v.to_string()));
        push("nep", self.nep.map(|v| v.to_string()));
        push("osp", self.osp.map(|v| v.to_string()));
        push("ngh", self.ngh.map(|v| v.to_string()));
        push("patch_decay", self.patch_decay.map(|v| v.to_string()));
        push("max_iterations", self.max_iterations.map(|v| v.to_string()));
        push("epsilon", self.epsilon.map(|v| v.to_string()));
        out
    }

    fn apply(&self, cfg: &mut BeesConfig) {
        let mut s = BenchmarkSettings::default();
        s.experiment.bees = *cfg;
        for (k, v) in self.overrides() {
            s.set(k, &v).expect("typed flag values always parse");
        }
        *cfg = s.experiment.bees;
    }
}

#[derive(Args)]
struct FitArgs {
    /// Dataset id or path to a .csv file
    dataset: String,
    /// Minimum cases per split branch (C)
    #[arg(long, default_value_t = 4)]
    c: usize,
    /// Prune the grown tree (P)
    #[arg(long, overrides_with = "no_prune")]
    prune: bool,
    #[arg(long)]
    no_prune: bool,
    /// Smoothing coefficient (K)
    #[arg(long, default_value_t = 15.0, allow_negative_numbers = true)]
    k: f64,
    /// Stop splitting below this fraction of the global sd (T)
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    t: f64,
    /// Choose C, P, K, T with the Bees Algorithm instead
    #[arg(long)]
    tune: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    bees: BeesArgs,
    /// Write the tuning trace as CSV
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Write the printed tree to a file
    #[arg(long)]
    tree_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// `key = value` settings file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated dataset ids or paths
    #[arg(long)]
    datasets: Option<String>,
    /// Comma-separated subset of omt, mt, cbr, swr, mlp
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for the exported CSV files
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    bees: BeesArgs,
}

/// Failure that ends the process with status 2.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let data_dir = cli
        .data_dir
        .clone()
        .or_else(|| std::env::var_os("OMT_DATA_DIR").map(PathBuf::from));
    let result = match cli.command {
        Command::Stats { datasets, json } => cmd_stats(&datasets, json, data_dir.as_deref()),
        Command::Fit(args) => cmd_fit(&args, data_dir.as_deref()),
        Command::Benchmark(args) => cmd_benchmark(&args, cli.data_dir.as_deref()),
        Command::ImportArff {
            input,
            target,
            ignore,
            drop_missing,
            name,
            out_dir,
        } => cmd_import(&input, target, ignore, drop_missing, name, &out_dir),
    };
    match result {
        Ok(code) => code,
        Err(Fatal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// `albrecht` means `<dir>/albrecht.csv`; anything with a path separator or a
/// `.csv` suffix is taken as a path. The schema sits beside the CSV.
fn resolve(id: &str, data_dir: Option<&Path>) -> (PathBuf, PathBuf) {
    let csv = if id.contains('/') || id.contains('\\') || id.ends_with(".csv") {
        PathBuf::from(id)
    } else {
        data_dir.unwrap_or(Path::new("data")).join(format!("{id}.csv"))
    };
    let schema = csv.with_extension("schema");
    (csv, schema)
}

fn load(id: &str, data_dir: Option<&Path>) -> Result<Dataset, Fatal> {
    let (csv, schema) = resolve(id, data_dir);
    Dataset::load(&csv, &schema).map_err(|e| Fatal(format!("{}: {e}", csv.display())))
}

fn cmd_stats(ids: &[String], json: bool, data_dir: Option<&Path>) -> Result<ExitCode, Fatal> {
    let mut rows = Vec::new();
    for id in ids {
        let d = load(id, data_dir)?;
        let s = summary_stats(&d)?;
        rows.push((d.name().to_string(), s));
    }
    if json {
        let v: Vec<_> = rows
            .iter()
            .map(|(name, s)| {
                serde_json::json!({
                    "dataset": name,
                    "cases": s.cases,
                    "min": s.min,
                    "max": s.max,
                    "mean": s.mean,
                    "skewness": s.skewness,
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        println!(
            "{:<14} {:>6} {:>12} {:>12} {:>12} {:>9}",
            "dataset", "cases", "min", "max", "mean", "skewness"
        );
        for (name, s) in &rows {
            println!(
                "{:<14} {:>6} {:>12.2} {:>12.2} {:>12.2} {:>9.2}",
                name, s.cases, s.min, s.max, s.mean, s.skewness
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn train_metrics(tree: &ModelTree, d: &Dataset) -> Result<String, Fatal> {
    let predicted = d
        .records()
        .iter()
        .map(|r| tree.predict(r))
        .collect::<Result<Vec<_>, _>>()?;
    let p = PredictionSet::from_slices(d.effort(), &predicted)?;
    Ok(format!(
        "train: MMRE={:.2}% MdMRE={:.2}% PRED(0.25)={:.2}%",
        mmre(&p)?,
        mdmre(&p)?,
        pred(&p, 0.25)?
    ))
}

fn cmd_fit(a: &FitArgs, data_dir: Option<&Path>) -> Result<ExitCode, Fatal> {
    let d = load(&a.dataset, data_dir)?;
    let mut out = format!("dataset: {} ({} rows)\n", d.name(), d.len());
    let tree = if a.tune {
        let mut cfg = BeesConfig::default();
        a.bees.apply(&mut cfg);
        let r = tune_model_tree(&d, &cfg, a.seed, a.workers)?;
        let _ = writeln!(out, "bees: {cfg} seed={}", a.seed);
        let first = r.trace.first().map_or(f64::NAN, |t| t.best_fitness);
        let _ = writeln!(
            out,
            "tuning: {} iterations, {} evaluations, inner-CV MMRE {:.2}% -> {:.2}%",
            r.trace.len(),
            r.evaluations,
            100.0 * first,
            100.0 * r.fitness
        );
        if let Some(path) = &a.trace_out {
            let f = fs::File::create(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
            write_trace(&r.trace, std::io::BufWriter::new(f))?;
        }
        r.tree
    } else {
        let params = MTParams {
            min_instances: a.c,
            prune: !a.no_prune,
            smoothing: a.k,
            split_threshold: a.t,
        };
        params.validate()?;
        build_tree(&d, params)?
    };
    let _ = writeln!(out, "params: {}", tree.params());
    let _ = writeln!(out, "leaves: {} depth: {}", tree.n_leaves(), tree.depth());
    let _ = write!(out, "{tree}");
    let _ = writeln!(out, "{}", train_metrics(&tree, &d)?);
    if let Some(path) = &a.tree_out {
        fs::write(path, tree.to_string()).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
    }
    print!("{out}");
    Ok(ExitCode::SUCCESS)
}

fn bench_settings(a: &BenchArgs, data_dir_flag: Option<&Path>) -> Result<BenchmarkSettings, Fatal> {
    let mut s = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
            BenchmarkSettings::parse(&text).map_err(|e| Fatal(format!("{}: {e}", path.display())))?
        }
        None => BenchmarkSettings::default(),
    };
    let mut overrides: Vec<(&str, String)> = Vec::new();
    if let Some(v) = &a.datasets {
        overrides.push(("datasets", v.clone()));
    }
    if let Some(v) = &a.methods {
        overrides.push(("methods", v.clone()));
    }
    let numbers = [
        ("folds", a.folds.map(|v| v.to_string())),
        ("repeats", a.repeats.map(|v| v.to_string())),
        ("seed", a.seed.map(|v| v.to_string())),
        ("workers", a.workers.map(|v| v.to_string())),
    ];
    overrides.extend(numbers.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))));
    overrides.extend(a.bees.overrides());
    for (k, v) in overrides {
        s.set(k, &v).map_err(Fatal)?;
    }
    if let Some(out) = &a.out {
        s.out = out.clone();
    }
    if let Some(dir) = data_dir_flag {
        s.data_dir = Some(dir.to_path_buf());
    }
    if s.data_dir.is_none() {
        s.data_dir = std::env::var_os("OMT_DATA_DIR").map(PathBuf::from);
    }
    if s.datasets.is_empty() {
        return Err(Fatal(
            "no datasets given (use --datasets or `datasets =` in --config)".into(),
        ));
    }
    s.experiment.validate()?;
    Ok(s)
}

fn grid(rep: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:<6} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "dataset", "method", "MMRE", "MdMRE", "PRED", "trMMRE", "trMdMRE", "trPRED"
    );
    for name in &rep.datasets {
        for &m in &rep.methods {
            let get = |split: &str| {
                rep.summary
                    .iter()
                    .find(|r| &r.dataset == name && r.method == m && r.split == split)
            };
            let cols = |r: Option<&omt_core::harness::SummaryRow>| match r {
                Some(r) if r.repeats_used > 0 => format!("{:>9.2} {:>9.2} {:>9.2}", r.mmre, r.mdmre, r.pred),
                _ => format!("{:>9} {:>9} {:>9}", "NA", "NA", "NA"),
            };
            let _ = writeln!(
                out,
                "{:<14} {:<6} {} {}",
                name,
                m,
                cols(get("test")),
                cols(get("train"))
            );
        }
    }
    out
}

fn significance_table(rep: &ExperimentReport) -> String {
    let mut out = format!(
        "OMT vs baseline, Wilcoxon rank-sum on absolute test residuals, alpha={}\n",
        rep.alpha
    );
    let _ = writeln!(
        out,
        "{:<14} {:<8} {:>10} {:>10}  {}",
        "dataset", "baseline", "W", "p", "significant"
    );
    for r in &rep.significance {
        let _ = writeln!(
            out,
            "{:<14} {:<8} {:>10} {:>10}  {}",
            r.dataset,
            r.baseline,
            format_sig(r.statistic),
            format_sig(r.p_value),
            if r.significant { "yes" } else { "no" }
        );
    }
    out
}

fn write_traces(rep: &ExperimentReport, out: &Path) -> Result<(), Fatal> {
    let dir = out.join("traces");
    let mut made = false;
    for c in &rep.cells {
        let Ok(p) = &c.outcome else { continue };
        let Some(trace) = &p.trace else { continue };
        if !made {
            fs::create_dir_all(&dir).map_err(|e| Fatal(format!("{}: {e}", dir.display())))?;
            made = true;
        }
        let path = dir.join(format!("{}_r{}_f{}.csv", rep.datasets[c.dataset], c.repeat, c.fold));
        let f = fs::File::create(&path).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
        write_trace(trace, std::io::BufWriter::new(f))?;
    }
    Ok(())
}

fn cmd_benchmark(a: &BenchArgs, data_dir_flag: Option<&Path>) -> Result<ExitCode, Fatal> {
    let s = bench_settings(a, data_dir_flag)?;
    let datasets = s
        .datasets
        .iter()
        .map(|id| load(id, s.data_dir.as_deref()))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = &s.experiment;
    let mut methods: Vec<Method> = Vec::new();
    for &m in &cfg.methods {
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let total = datasets.len() * cfg.repeats * cfg.k * methods.len();
    let done = AtomicUsize::new(0);
    let progress = |_: &omt_core::harness::CellResult| {
        let n = done.fetch_add(1, Ordering::Relaxed) + 1;
        if n == total || n % 10 == 0 {
            eprintln!("cells {n}/{total}");
        }
    };
    let rep = run_experiment_with_progress(&datasets, cfg, &progress)?;
    export_report(&rep, &s.out)?;
    write_traces(&rep, &s.out)?;

    print!("{}", grid(&rep));
    println!();
    print!("{}", significance_table(&rep));

    let failures: Vec<_> = rep.failures().collect();
    if failures.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    eprintln!("{} of {} cells failed:", failures.len(), rep.cells.len());
    for c in failures.iter().take(10) {
        let msg = c.outcome.as_ref().err().map_or("", String::as_str);
        eprintln!(
            "  {} {} repeat {} fold {}: {msg}",
            rep.datasets[c.dataset], c.method, c.repeat, c.fold
        );
    }
    Ok(ExitCode::from(1))
}

fn cmd_import(
    input: &Path,
    target: String,
    ignore: Vec<String>,
    drop_incomplete: bool,
    name: Option<String>,
    out_dir: &Path,
) -> Result<ExitCode, Fatal> {
    let text = fs::read_to_string(input).map_err(|e| Fatal(format!("{}: {e}", input.display())))?;
    let name = name.unwrap_or_else(|| {
        input
            .file_stem()
            .map(|s| s.to_string_lossy().to_lowercase())
            .unwrap_or_else(|| "dataset".into())
    });
    let opts = ArffOptions {
        target,
        ignore,
        drop_incomplete,
    };
    let d = import_arff(&name, &text, &opts).map_err(|e| Fatal(format!("{}: {e}", input.display())))?;
    fs::create_dir_all(out_dir).map_err(|e| Fatal(format!("{}: {e}", out_dir.display())))?;
    let csv = out_dir.join(format!("{name}.csv"));
    let schema = out_dir.join(format!("{name}.schema"));
    fs::write(&csv, d.to_csv_string()).map_err(|e| Fatal(format!("{}: {e}", csv.display())))?;
    fs::write(&schema, d.schema().to_string()).map_err(|e| Fatal(format!("{}: {e}", schema.display())))?;
    println!(
        "{}: {} rows, {} features -> {}",
        name,
        d.len(),
        d.n_features(),
        csv.display()
    );
    Ok(ExitCode::SUCCESS)
}
