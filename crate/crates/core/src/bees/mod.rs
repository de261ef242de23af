//! The Bees Algorithm over a box-bounded search space, and its use for
//! tuning model-tree parameters.

mod tune;

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use tune::{decode_params, encode_params, mt_search_space, tune_model_tree, TuneResult};

#[derive(Debug, Error)]
pub enum BeesError {
    #[error("invalid bees configuration: {0}")]
    Config(String),
    #[error("invalid search space: {0}")]
    Space(String),
    #[error("tuning needs at least {needed} training rows, got {rows}")]
    TooFewRows { rows: usize, needed: usize },
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error(transparent)]
    Tree(#[from] crate::tree::TreeError),
    #[error("worker pool: {0}")]
    Workers(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimKind {
    Continuous,
    Integer,
    /// Decoded as `true` when the coordinate is at least 0.5.
    Boolean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dim {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: DimKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    dims: Vec<Dim>,
}

impl SearchSpace {
    pub fn new(dims: Vec<Dim>) -> Result<Self, BeesError> {
        if dims.is_empty() {
            return Err(BeesError::Space("no dimensions".into()));
        }
        for d in &dims {
            if !(d.lower.is_finite() && d.upper.is_finite() && d.lower < d.upper) {
                return Err(BeesError::Space(format!(
                    "{}: need finite lower < upper, got [{}, {}]",
                    d.name, d.lower, d.upper
                )));
            }
        }
        Ok(SearchSpace { dims })
    }

    /// Continuous box `[lower, upper]^q`.
    pub fn cube(q: usize, lower: f64, upper: f64) -> Result<Self, BeesError> {
        Self::new(
            (0..q)
                .map(|i| Dim {
                    name: format!("x{i}"),
                    lower,
                    upper,
                    kind: DimKind::Continuous,
                })
                .collect(),
        )
    }

    pub fn dims(&self) -> &[Dim] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims.len() && self.dims.iter().zip(x).all(|(d, &v)| d.lower <= v && v <= d.upper)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (d, v) in self.dims.iter().zip(x.iter_mut()) {
            *v = v.clamp(d.lower, d.upper);
        }
    }

    fn random_position(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.dims
            .iter()
            .map(|d| d.lower + rng.gen::<f64>() * (d.upper - d.lower))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeesConfig {
    /// Scout bees (n).
    pub scouts: usize,
    /// Sites selected for neighbourhood search (s).
    pub selected: usize,
    /// Elite sites among the selected (e).
    pub elite: usize,
    /// Recruits per elite site (nep).
    pub elite_recruits: usize,
    /// Recruits per other selected site (osp).
    pub other_recruits: usize,
    /// Initial patch radius as a fraction of each dimension's range.
    pub ngh: f64,
    pub patch_decay: f64,
    pub max_iterations: usize,
    /// Stop once an iteration improves the best fitness by less than this.
    pub epsilon: f64,
}

impl Default for BeesConfig {
    fn default() -> Self {
        BeesConfig {
            scouts: 30,
            selected: 30,
            elite: 20,
            elite_recruits: 15,
            other_recruits: 20,
            ngh: 0.15,
            patch_decay: 0.95,
            max_iterations: 50,
            epsilon: 1e-4,
        }
    }
}

impl BeesConfig {
    pub fn validate(&self) -> Result<(), BeesError> {
        let err = |m: String| Err(BeesError::Config(m));
        if self.scouts == 0 {
            return err("n must be at least 1".into());
        }
        if self.elite > self.selected || self.selected > self.scouts {
            return err(format!(
                "need e <= s <= n, got e={} s={} n={}",
                self.elite, self.selected, self.scouts
            ));
        }
        if self.elite_recruits == 0 || self.other_recruits == 0 {
            return err("nep and osp must be at least 1".into());
        }
        if !(self.ngh > 0.0 && self.ngh <= 1.0) {
            return err(format!("ngh must be in (0, 1], got {}", self.ngh));
        }
        if !(self.patch_decay > 0.0 && self.patch_decay <= 1.0) {
            return err(format!("patch decay must be in (0, 1], got {}", self.patch_decay));
        }
        if self.max_iterations == 0 {
            return err("max iterations must be at least 1".into());
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return err(format!("epsilon must be finite and >= 0, got {}", self.epsilon));
        }
        Ok(())
    }

    /// Objective evaluations in one iteration after the first.
    pub fn evaluations_per_iteration(&self) -> usize {
        self.elite * self.elite_recruits
            + (self.selected - self.elite) * self.other_recruits
            + (self.scouts - self.selected)
    }
}

impl fmt::Display for BeesConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} s={} e={} nep={} osp={} ngh={} decay={} max_iter={} epsilon={}",
            self.scouts,
            self.selected,
            self.elite,
            self.elite_recruits,
            self.other_recruits,
            self.ngh,
            self.patch_decay,
            self.max_iterations,
            self.epsilon
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bee {
    pub position: Vec<f64>,
    /// Lower is better; non-finite objective values are stored as +inf.
    pub fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub best_fitness: f64,
    pub ngh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub best: Bee,
    pub trace: Vec<TraceRow>,
    pub evaluations: usize,
}

/// Writes the trace as `iteration,best_fitness,ngh` rows under a header.
pub fn write_trace<W: Write>(trace: &[TraceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "iteration,best_fitness,ngh")?;
    for r in trace {
        writeln!(out, "{},{},{}", r.iteration, r.best_fitness, r.ngh)?;
    }
    Ok(())
}

/// Perturbs every coordinate of `site` by a uniform draw in
/// `[-ngh, ngh]` times its dimension's range, then clamps to the bounds.
pub fn create_neighborhood_bee(site: &[f64], ngh: f64, space: &SearchSpace, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x: Vec<f64> = site
        .iter()
        .zip(space.dims())
        .map(|(&v, d)| v + (2.0 * rng.gen::<f64>() - 1.0) * ngh * (d.upper - d.lower))
        .collect();
    space.clamp(&mut x);
    x
}

/// Minimizes `objective` over `space`.
///
/// All random draws come from one ChaCha8 stream seeded with `seed` and are
/// made before each batch is evaluated, so the result does not depend on
/// `workers`. Each iteration evaluates the population, keeps the best bee of
/// every selected site's patch (the site itself included), refills the rest
/// with random scouts and shrinks the patch radius.
pub fn optimize<F>(
    objective: F,
    space: &SearchSpace,
    cfg: &BeesConfig,
    seed: u64,
    workers: usize,
) -> Result<Optimum, BeesError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let eval = Evaluator::new(&objective, workers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let initial: Vec<Vec<f64>> = (0..cfg.scouts).map(|_| space.random_position(&mut rng)).collect();
    let mut population = eval.batch(initial);
    let mut evaluations = population.len();
    let mut best = best_of(&population).clone();
    let mut ngh = cfg.ngh;
    let mut trace = vec![TraceRow {
        iteration: 1,
        best_fitness: best.fitness,
        ngh,
    }];

    for iteration in 2..=cfg.max_iterations {
        ngh *= cfg.patch_decay;
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&i, &j| population[i].fitness.total_cmp(&population[j].fitness).then(i.cmp(&j)));

        let mut candidates = Vec::with_capacity(cfg.evaluations_per_iteration());
        let mut patches = Vec::with_capacity(cfg.selected);
        for (rank, &site) in order.iter().take(cfg.selected).enumerate() {
            let recruits = if rank < cfg.elite {
                cfg.elite_recruits
            } else {
                cfg.other_recruits
            };
            let start = candidates.len();
            for _ in 0..recruits {
                candidates.push(create_neighborhood_bee(
                    &population[site].position,
                    ngh,
                    space,
                    &mut rng,
                ));
            }
            patches.push((site, start..candidates.len()));
        }
        let scouts_from = candidates.len();
        for _ in cfg.selected..cfg.scouts {
            candidates.push(space.random_position(&mut rng));
        }

        let evaluated = eval.batch(candidates);
        evaluations += evaluated.len();
        let mut next = Vec::with_capacity(cfg.scouts);
        for (site, range) in patches {
            let patch_best = best_of(&evaluated[range]);
            if patch_best.fitness < population[site].fitness {
                next.push(patch_best.clone());
            } else {
                next.push(population[site].clone());
            }
        }
        next.extend_from_slice(&evaluated[scouts_from..]);
        population = next;

        let previous = best.fitness;
        let candidate = best_of(&evaluated);
        if candidate.fitness < best.fitness {
            best = candidate.clone();
        }
        trace.push(TraceRow {
            iteration,
            best_fitness: best.fitness,
            ngh,
        });
        if improvement(previous, best.fitness) < cfg.epsilon {
            break;
        }
    }
    Ok(Optimum {
        best,
        trace,
        evaluations,
    })
}

fn improvement(previous: f64, current: f64) -> f64 {
    if previous == current {
        0.0
    } else {
        previous - current
    }
}

/// First bee with the lowest fitness.
fn best_of(bees: &[Bee]) -> &Bee {
    bees.iter()
        .reduce(|a, b| if b.fitness < a.fitness { b } else { a })
        .expect("non-empty population")
}

struct Evaluator<'a, F> {
    objective: &'a F,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl<'a, F: Fn(&[f64]) -> f64 + Sync> Evaluator<'a, F> {
    fn new(objective: &'a F, workers: usize) -> Result<Self, BeesError> {
        #[cfg(feature = "parallel")]
        {
            let pool = if workers > 1 {
                Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(workers)
                        .build()
                        .map_err(|e| BeesError::Workers(e.to_string()))?,
                )
            } else {
                None
            };
            Ok(Evaluator { objective, pool })
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = workers;
            Ok(Evaluator { objective })
        }
    }

    fn score(&self, x: &[f64]) -> f64 {
        let f = (self.objective)(x);
        if f.is_finite() {
            f
        } else {
            f64::INFINITY
        }
    }

    fn batch(&self, positions: Vec<Vec<f64>>) -> Vec<Bee> {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            let scores: Vec<f64> = pool.install(|| positions.par_iter().map(|x| self.score(x)).collect());
            return positions
                .into_iter()
                .zip(scores)
                .map(|(position, fitness)| Bee { position, fitness })
                .collect();
        }
        positions
            .into_iter()
            .map(|position| {
                let fitness = self.score(&position);
                Bee { position, fitness }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::sync::Mutex;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn table_defaults() {
        let c = BeesConfig::default();
        assert_eq!(
            (c.scouts, c.selected, c.elite, c.elite_recruits, c.other_recruits),
            (30, 30, 20, 15, 20)
        );
        assert_eq!(c.ngh, 0.15);
        assert_eq!(c.max_iterations, 50);
        assert!(c.validate().is_ok());
        assert_eq!(c.evaluations_per_iteration(), 20 * 15 + 10 * 20);
    }

    #[test]
    fn config_validation() {
        let bad = [
            BeesConfig {
                elite: 31,
                ..Default::default()
            },
            BeesConfig {
                selected: 31,
                ..Default::default()
            },
            BeesConfig {
                other_recruits: 0,
                ..Default::default()
            },
            BeesConfig {
                ngh: 0.0,
                ..Default::default()
            },
            BeesConfig {
                ngh: 1.5,
                ..Default::default()
            },
            BeesConfig {
                patch_decay: 0.0,
                ..Default::default()
            },
            BeesConfig {
                max_iterations: 0,
                ..Default::default()
            },
            BeesConfig {
                epsilon: -1.0,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c}");
        }
    }

    #[test]
    fn space_rejects_empty_interval() {
        assert!(SearchSpace::cube(2, 1.0, 1.0).is_err());
        assert!(SearchSpace::new(vec![]).is_err());
    }

    #[test]
    fn sphere_is_minimized() {
        let space = SearchSpace::cube(4, -5.0, 5.0).unwrap();
        let cfg = BeesConfig {
            epsilon: 0.0,
            ..Default::default()
        };
        let good = (0..20)
            .filter(|&seed| optimize(sphere, &space, &cfg, seed, 1).unwrap().best.fitness <= 1e-2)
            .count();
        assert!(good >= 19, "{good}/20 runs reached 1e-2");
    }

    #[test]
    fn constant_objective_has_flat_trace() {
        let space = SearchSpace::cube(3, 0.0, 1.0).unwrap();
        let r = optimize(|_| 7.5, &space, &BeesConfig::default(), 1, 1).unwrap();
        assert_eq!(r.trace[0].best_fitness, 7.5);
        assert!(r.trace.iter().all(|t| t.best_fitness == 7.5));
        assert_eq!(r.trace.len(), 2, "stops once an iteration brings no change");
    }

    #[test]
    fn non_finite_fitness_is_discarded() {
        let space = SearchSpace::cube(1, -1.0, 1.0).unwrap();
        let r = optimize(
            |x| if x[0] < 0.0 { f64::NAN } else { x[0] },
            &space,
            &BeesConfig {
                max_iterations: 5,
                ..Default::default()
            },
            3,
            1,
        )
        .unwrap();
        assert!(r.best.fitness.is_finite());
        assert!(r.best.position[0] >= 0.0);
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let space = SearchSpace::cube(4, -5.0, 5.0).unwrap();
        let cfg = BeesConfig {
            max_iterations: 10,
            ..Default::default()
        };
        let one = optimize(sphere, &space, &cfg, 42, 1).unwrap();
        let four = optimize(sphere, &space, &cfg, 42, 4).unwrap();
        assert_eq!(one, four);
        let other_seed = optimize(sphere, &space, &cfg, 43, 1).unwrap();
        assert_ne!(one.best, other_seed.best);
    }

    #[test]
    fn population_and_evaluation_counts() {
        let space = SearchSpace::cube(2, -1.0, 1.0).unwrap();
        let cfg = BeesConfig {
            scouts: 10,
            selected: 6,
            elite: 2,
            elite_recruits: 4,
            other_recruits: 2,
            max_iterations: 3,
            epsilon: 0.0,
            ..Default::default()
        };
        let calls = Mutex::new(0usize);
        let r = optimize(
            |x| {
                *calls.lock().unwrap() += 1;
                sphere(x)
            },
            &space,
            &cfg,
            0,
            1,
        )
        .unwrap();
        let per_iter = 2 * 4 + 4 * 2 + 4;
        assert_eq!(r.evaluations, 10 + 2 * per_iter);
        assert_eq!(*calls.lock().unwrap(), r.evaluations);
    }

    #[test]
    fn neighborhood_zero_radius_is_identity() {
        let space = SearchSpace::cube(3, 0.0, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let site = [1.0, 5.0, 9.0];
        assert_eq!(create_neighborhood_bee(&site, 0.0, &space, &mut rng), site.to_vec());
    }

    #[test]
    fn neighborhood_at_bound_is_clamped() {
        let space = SearchSpace::cube(2, 0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x = create_neighborhood_bee(&[1.0, 0.0], 0.5, &space, &mut rng);
            assert!(space.contains(&x));
        }
    }

    #[test]
    fn neighborhood_is_uniform_in_patch() {
        let space = SearchSpace::cube(2, 0.0, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let site = [5.0, 5.0];
        let bins = 10;
        let samples = 10_000;
        let mut counts = vec![vec![0usize; bins]; 2];
        for _ in 0..samples {
            let x = create_neighborhood_bee(&site, 0.1, &space, &mut rng);
            for (d, &v) in x.iter().enumerate() {
                let offset = (v - site[d]) / 10.0;
                assert!((-0.1..=0.1).contains(&offset));
                let b = (((offset + 0.1) / 0.2) * bins as f64).min(bins as f64 - 1.0) as usize;
                counts[d][b] += 1;
            }
        }
        let expected = samples as f64 / bins as f64;
        for c in &counts {
            let chi2: f64 = c.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
            // 9 degrees of freedom, 0.999 quantile.
            assert!(chi2 < 27.88, "chi-square {chi2}");
        }
    }

    #[test]
    fn trace_export_format() {
        let trace = [
            TraceRow {
                iteration: 1,
                best_fitness: 0.5,
                ngh: 0.15,
            },
            TraceRow {
                iteration: 2,
                best_fitness: 0.25,
                ngh: 0.1425,
            },
        ];
        let mut buf = Vec::new();
        write_trace(&trace, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iteration,best_fitness,ngh\n1,0.5,0.15\n2,0.25,0.1425\n"
        );
    }

    fn small_config() -> impl Strategy<Value = BeesConfig> {
        (
            1usize..12,
            0usize..=12,
            0usize..=12,
            1usize..5,
            1usize..5,
            0.01f64..1.0,
            0.5f64..1.0,
        )
            .prop_map(|(n, s, e, nep, osp, ngh, decay)| {
                let s = s.min(n);
                BeesConfig {
                    scouts: n,
                    selected: s,
                    elite: e.min(s),
                    elite_recruits: nep,
                    other_recruits: osp,
                    ngh,
                    patch_decay: decay,
                    max_iterations: 6,
                    epsilon: 0.0,
                }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn best_trace_is_monotone_and_in_bounds(cfg in small_config(), seed in any::<u64>()) {
            let space = SearchSpace::cube(3, -2.0, 3.0).unwrap();
            let seen = Mutex::new(Vec::new());
            let r = optimize(|x| { seen.lock().unwrap().push(x.to_vec()); sphere(x) }, &space, &cfg, seed, 1).unwrap();
            for w in r.trace.windows(2) {
                prop_assert!(w[1].best_fitness <= w[0].best_fitness);
            }
            for x in seen.lock().unwrap().iter() {
                prop_assert!(space.contains(x));
            }
            let min_seen = seen.lock().unwrap().iter().map(|x| sphere(x)).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(r.best.fitness, min_seen);
        }

        #[test]
        fn degenerate_selections_stay_monotone(n in 1usize..10, all_elite in any::<bool>(), seed in any::<u64>()) {
            let cfg = if all_elite {
                BeesConfig { scouts: n, selected: n, elite: n, elite_recruits: 2, other_recruits: 2, max_iterations: 5, epsilon: 0.0, ..Default::default() }
            } else {
                BeesConfig { scouts: n, selected: 0, elite: 0, max_iterations: 5, epsilon: 0.0, ..Default::default() }
            };
            let space = SearchSpace::cube(2, -1.0, 1.0).unwrap();
            let r = optimize(sphere, &space, &cfg, seed, 1).unwrap();
            for w in r.trace.windows(2) {
                prop_assert!(w[1].best_fitness <= w[0].best_fitness);
            }
        }
    }
}
