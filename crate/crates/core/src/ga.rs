//! Genetic search for behaviors that violate an LDI.
//!
//! An individual is a time-stamped behavior whose length lies in the premise
//! window `[A, B]`; its fitness is LF. A run stops as soon as some individual
//! has LF above the bound, or when the best fitness stops moving.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::automaton::{RealTimeAutomaton, StateId};
use crate::par::{map_range, Exec};
use crate::semantics::{reallocate, Gene, Objective, SemanticsError, TimeStampedBehavior, DEFAULT_TOLERANCE};
use crate::spec::Ldi;

/// Fitness changes below this do not count as progress.
pub const SETTLE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("the model has no transitions")]
    NoTransitions,
    #[error("no behavior with length in the premise window found after {attempts} attempts")]
    Infeasible { attempts: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub p_mutation: f64,
    pub p_cut_splice: f64,
    pub max_generations: usize,
    /// Stop after this many generations without improvement.
    pub settle_window: usize,
    pub seed: u64,
    pub max_genes: usize,
    /// Width added to the lower end of unbounded intervals when drawing
    /// dwells. `None` derives it from the premise window.
    pub time_cap: Option<f64>,
    pub runs: usize,
    /// Share of the next population taken from the best of the current one.
    pub elite_fraction: f64,
    pub tol: f64,
    /// Sampling attempts per start state before giving up on it.
    pub max_attempts: usize,
    pub exec: Exec,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 90,
            p_mutation: 0.2,
            p_cut_splice: 0.5,
            max_generations: 50,
            settle_window: 10,
            seed: 0,
            max_genes: 8,
            time_cap: None,
            runs: 10,
            elite_fraction: 0.1,
            tol: DEFAULT_TOLERANCE,
            max_attempts: 1000,
            exec: Exec::default(),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        let bad = |m: &str| Err(GaError::InvalidConfig(m.to_string()));
        if self.population_size < 2 {
            return bad("population size must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.p_mutation) || !(0.0..=1.0).contains(&self.p_cut_splice) {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.max_genes == 0 {
            return bad("max genes must be at least 1");
        }
        if self.settle_window == 0 {
            return bad("settle window must be at least 1");
        }
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction < 1.0) {
            return bad("elite fraction must lie in (0, 1)");
        }
        if let Some(c) = self.time_cap {
            if !(c > 0.0 && c.is_finite()) {
                return bad("time cap must be positive and finite");
            }
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return bad("tolerance must be nonnegative");
        }
        if self.max_attempts == 0 {
            return bad("max attempts must be at least 1");
        }
        Ok(())
    }

    /// Cap width for an unbounded interval starting at `lo`.
    pub fn time_cap_for(&self, lower: f64, upper: f64, lo: f64) -> f64 {
        self.time_cap.unwrap_or_else(|| {
            let b = if upper.is_finite() { upper } else { lower };
            b.max(lo) + 2.0 * lower.max(1.0)
        })
    }

    fn elite_count(&self) -> usize {
        ((self.elite_fraction * self.population_size as f64).ceil() as usize).clamp(1, self.population_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaVerdict {
    Violated,
    NoViolationFound,
}

impl GaVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            GaVerdict::Violated => "violated",
            GaVerdict::NoViolationFound => "no-violation-found",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub best_value: f64,
    pub generations_run: usize,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaReport {
    pub verdict: GaVerdict,
    pub best_value: f64,
    pub best_individual: TimeStampedBehavior,
    pub counterexamples: Vec<TimeStampedBehavior>,
    /// Generations summed over all runs.
    pub generations_run: usize,
    /// Best fitness per generation of the run that produced `best_value`.
    pub fitness_trace: Vec<f64>,
    pub runs: Vec<RunSummary>,
    pub seed: u64,
}

/// Draws initial and replacement individuals.
pub struct Sampler<'o, 'm> {
    obj: &'o Objective<'m>,
    max_genes: usize,
    max_attempts: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    starts: Vec<StateId>,
    dead: Vec<bool>,
    next: usize,
}

impl<'o, 'm> Sampler<'o, 'm> {
    pub fn new(obj: &'o Objective<'m>, cfg: &GaConfig) -> Result<Self, GaError> {
        let m = obj.model();
        if m.transitions().is_empty() {
            return Err(GaError::NoTransitions);
        }
        let (lo, hi) = capped_bounds(m, obj, cfg);
        let starts: Vec<StateId> = (0..m.states().len())
            .map(StateId)
            .filter(|&s| !m.successors(s).expect("declared state").is_empty())
            .collect();
        Ok(Sampler {
            obj,
            max_genes: cfg.max_genes,
            max_attempts: cfg.max_attempts,
            lo,
            hi,
            dead: vec![false; starts.len()],
            starts,
            next: 0,
        })
    }

    /// Sampling bounds of every transition's dwell.
    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    /// A behavior with length in `[A, B]`, starting from the next start
    /// state in round-robin order.
    pub fn sample<R: Rng>(&mut self, rng: &mut R) -> Result<TimeStampedBehavior, GaError> {
        let k = self.starts.len();
        for _ in 0..k {
            let slot = self.next % k;
            self.next = self.next.wrapping_add(1);
            if self.dead[slot] {
                continue;
            }
            for _ in 0..self.max_attempts {
                if let Some(b) = self.attempt(self.starts[slot], rng) {
                    return Ok(b);
                }
            }
            self.dead[slot] = true;
        }
        Err(GaError::Infeasible {
            attempts: self.max_attempts * k,
        })
    }

    fn attempt<R: Rng>(&self, start: StateId, rng: &mut R) -> Option<TimeStampedBehavior> {
        let m = self.obj.model();
        let len = rng.random_range(1..=self.max_genes);
        let mut seq = Vec::with_capacity(len);
        let mut at = start;
        for _ in 0..len {
            let out = m.successors(at).expect("declared state");
            let Some(&t) = out.get(rng.random_range(0..out.len().max(1))) else {
                break;
            };
            seq.push(t);
            at = m.transition(t).target;
        }
        let lo: Vec<f64> = seq.iter().map(|t| self.lo[t.0]).collect();
        let hi: Vec<f64> = seq.iter().map(|t| self.hi[t.0]).collect();
        let mut dwells: Vec<f64> = lo.iter().zip(&hi).map(|(&a, &b)| draw(rng, a, b)).collect();
        let mut order: Vec<usize> = (0..seq.len()).collect();
        order.shuffle(rng);
        if !reallocate(&mut dwells, &lo, &hi, &order, self.obj.lower(), self.obj.upper()) {
            return None;
        }
        let b = TimeStampedBehavior::from_parts(&seq, &dwells);
        self.obj.in_premise(b.length()).then_some(b)
    }
}

fn capped_bounds(m: &RealTimeAutomaton, obj: &Objective<'_>, cfg: &GaConfig) -> (Vec<f64>, Vec<f64>) {
    m.transitions()
        .iter()
        .map(|t| {
            let (lo, hi) = (t.interval.lo(), t.interval.hi());
            let hi = if hi.is_finite() {
                hi
            } else {
                lo + cfg.time_cap_for(obj.lower(), obj.upper(), lo)
            };
            (lo, hi)
        })
        .unzip()
}

fn draw<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo < hi {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Standalone sampling helper; creates a fresh sampler each call.
pub fn sample_behavior<R: Rng>(
    m: &RealTimeAutomaton,
    d: &Ldi,
    cfg: &GaConfig,
    rng: &mut R,
) -> Result<TimeStampedBehavior, GaError> {
    let obj = Objective::new(m, d)?.with_tolerance(cfg.tol);
    Sampler::new(&obj, cfg)?.sample(rng)
}

/// Redraws the dwells of a geometric(1/2) number of distinct genes.
/// `lo`/`hi` are per-transition sampling bounds.
pub fn mutate_with<R: Rng>(b: &TimeStampedBehavior, lo: &[f64], hi: &[f64], rng: &mut R) -> TimeStampedBehavior {
    let n = b.len();
    if n == 0 {
        return b.clone();
    }
    let mut k = 1;
    while k < n && rng.random_bool(0.5) {
        k += 1;
    }
    let mut out = b.clone();
    for i in index::sample(rng, n, k) {
        let t = out.genes[i].transition.0;
        out.genes[i].dwell = draw(rng, lo[t], hi[t]);
    }
    out
}

pub fn mutate<R: Rng>(b: &TimeStampedBehavior, m: &RealTimeAutomaton, d: &Ldi, cfg: &GaConfig, rng: &mut R) -> TimeStampedBehavior {
    let obj = Objective::new(m, d).expect("propositions checked by caller");
    let (lo, hi) = capped_bounds(m, &obj, cfg);
    mutate_with(b, &lo, &hi, rng)
}

/// Children `x[..=i] y[j+1..]` and `y[..=j] x[i+1..]`.
pub fn splice_at(x: &TimeStampedBehavior, y: &TimeStampedBehavior, i: usize, j: usize) -> (TimeStampedBehavior, TimeStampedBehavior) {
    debug_assert_eq!(x.genes[i].transition, y.genes[j].transition);
    let a: Vec<Gene> = x.genes[..=i].iter().chain(&y.genes[j + 1..]).copied().collect();
    let b: Vec<Gene> = y.genes[..=j].iter().chain(&x.genes[i + 1..]).copied().collect();
    (TimeStampedBehavior::new(a), TimeStampedBehavior::new(b))
}

/// Splices at a uniformly chosen pair of genes carrying the same transition.
/// `None` when the parents share no transition.
pub fn cut_and_splice<R: Rng>(
    x: &TimeStampedBehavior,
    y: &TimeStampedBehavior,
    rng: &mut R,
) -> Option<(TimeStampedBehavior, TimeStampedBehavior)> {
    let pairs: Vec<(usize, usize)> = x
        .genes
        .iter()
        .enumerate()
        .flat_map(|(i, g)| {
            y.genes
                .iter()
                .enumerate()
                .filter(move |(_, h)| h.transition == g.transition)
                .map(move |(j, _)| (i, j))
        })
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let (i, j) = pairs[rng.random_range(0..pairs.len())];
    Some(splice_at(x, y, i, j))
}

#[derive(Debug, Clone)]
struct Individual {
    b: TimeStampedBehavior,
    fitness: f64,
}

/// Fitter first; equal fitness falls back to the lexicographically smaller
/// behavior.
fn rank(a: &Individual, b: &Individual) -> std::cmp::Ordering {
    b.fitness.total_cmp(&a.fitness).then_with(|| a.b.lex_cmp(&b.b))
}

struct Run<'o, 'm> {
    obj: &'o Objective<'m>,
    cfg: &'o GaConfig,
    sampler: Sampler<'o, 'm>,
    rng: ChaCha8Rng,
}

struct RunOutcome {
    summary: RunSummary,
    best: Individual,
    trace: Vec<f64>,
    counterexamples: Vec<TimeStampedBehavior>,
}

impl Run<'_, '_> {
    fn individual(&self, b: TimeStampedBehavior) -> Individual {
        let fitness = self.obj.lf(&b);
        Individual { b, fitness }
    }

    fn fresh(&mut self) -> Result<Individual, GaError> {
        let b = self.sampler.sample(&mut self.rng)?;
        Ok(self.individual(b))
    }

    fn tournament(&mut self, pop: &[Individual]) -> usize {
        let a = self.rng.random_range(0..pop.len());
        let b = self.rng.random_range(0..pop.len());
        match rank(&pop[a], &pop[b]) {
            std::cmp::Ordering::Greater => b,
            _ => a,
        }
    }

    fn acceptable(&self, b: &TimeStampedBehavior) -> bool {
        b.len() <= self.cfg.max_genes && self.obj.in_premise(b.length())
    }

    /// With `harvest`, keeps going after the first violation and gathers
    /// every violating individual seen.
    fn go(mut self, seed: u64, harvest: bool) -> Result<RunOutcome, GaError> {
        let n = self.cfg.population_size;
        let mut pop = Vec::with_capacity(n);
        for _ in 0..n {
            pop.push(self.fresh()?);
        }
        let mut trace = Vec::new();
        let mut found = Vec::new();
        let mut seen = HashSet::new();
        let mut generations = 0;
        loop {
            generations += 1;
            for ind in &pop {
                if self.obj.exceeds_bound(ind.fitness) && seen.insert(key(&ind.b)) {
                    found.push(ind.b.clone());
                }
            }
            pop.sort_by(rank);
            trace.push(pop[0].fitness);
            if !found.is_empty() && !harvest {
                break;
            }
            if generations >= self.cfg.max_generations {
                break;
            }
            let w = self.cfg.settle_window;
            if trace.len() > w && (trace[trace.len() - 1] - trace[trace.len() - 1 - w]).abs() < SETTLE_EPSILON {
                break;
            }
            pop = self.next_generation(&pop)?;
        }
        let best = pop[0].clone();
        Ok(RunOutcome {
            summary: RunSummary {
                seed,
                best_value: best.fitness,
                generations_run: generations,
                violated: !found.is_empty(),
            },
            best,
            trace,
            counterexamples: found,
        })
    }

    /// Steps 2 to 4 on a population sorted fittest first.
    fn next_generation(&mut self, pop: &[Individual]) -> Result<Vec<Individual>, GaError> {
        let n = pop.len();
        let mut q: Vec<TimeStampedBehavior> = Vec::with_capacity(n + 1);
        while q.len() < n {
            let a = self.tournament(pop);
            let b = self.tournament(pop);
            let (x, y) = &(pop[a].b.clone(), pop[b].b.clone());
            let children = if self.rng.random_bool(self.cfg.p_cut_splice) {
                cut_and_splice(x, y, &mut self.rng)
            } else {
                None
            };
            let (c, d) = children.unwrap_or_else(|| (x.clone(), y.clone()));
            q.push(c);
            q.push(d);
        }
        q.truncate(n);
        let (lo, hi) = self.sampler.bounds();
        let (lo, hi) = (lo.to_vec(), hi.to_vec());
        for b in &mut q {
            if self.rng.random_bool(self.cfg.p_mutation) {
                *b = mutate_with(b, &lo, &hi, &mut self.rng);
            }
        }
        let mut next = Vec::with_capacity(n);
        for b in q {
            if self.acceptable(&b) {
                next.push(self.individual(b));
            } else {
                next.push(self.fresh()?);
            }
        }
        next.sort_by(rank);
        let e = self.cfg.elite_count();
        next.truncate(n - e);
        next.extend(pop[..e].iter().cloned());
        next.sort_by(rank);
        Ok(next)
    }
}

fn key(b: &TimeStampedBehavior) -> Vec<(usize, u64)> {
    b.genes.iter().map(|g| (g.transition.0, g.dwell.to_bits())).collect()
}

fn single_run(obj: &Objective<'_>, cfg: &GaConfig, seed: u64, harvest: bool) -> Result<RunOutcome, GaError> {
    let run = Run {
        obj,
        cfg,
        sampler: Sampler::new(obj, cfg)?,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    run.go(seed, harvest)
}

fn aggregate(cfg: &GaConfig, outcomes: Vec<RunOutcome>) -> GaReport {
    let mut best: Option<&RunOutcome> = None;
    for o in &outcomes {
        if best.is_none_or(|b| rank(&o.best, &b.best) == std::cmp::Ordering::Less) {
            best = Some(o);
        }
    }
    let best = best.expect("at least one run");
    let mut seen = HashSet::new();
    let counterexamples: Vec<TimeStampedBehavior> = outcomes
        .iter()
        .flat_map(|o| o.counterexamples.iter())
        .filter(|b| seen.insert(key(b)))
        .cloned()
        .collect();
    GaReport {
        verdict: if counterexamples.is_empty() {
            GaVerdict::NoViolationFound
        } else {
            GaVerdict::Violated
        },
        best_value: best.best.fitness,
        best_individual: best.best.b.clone(),
        generations_run: outcomes.iter().map(|o| o.summary.generations_run).sum(),
        fitness_trace: best.trace.clone(),
        runs: outcomes.iter().map(|o| o.summary.clone()).collect(),
        counterexamples,
        seed: cfg.seed,
    }
}

fn prepare<'m>(m: &'m RealTimeAutomaton, d: &Ldi, cfg: &GaConfig) -> Result<Objective<'m>, GaError> {
    cfg.validate()?;
    Ok(Objective::new(m, d)?.with_tolerance(cfg.tol))
}

/// One seeded run with `cfg.seed`.
pub fn run_ga(m: &RealTimeAutomaton, d: &Ldi, cfg: &GaConfig) -> Result<GaReport, GaError> {
    let obj = prepare(m, d, cfg)?;
    let outcome = single_run(&obj, cfg, cfg.seed, false)?;
    Ok(aggregate(cfg, vec![outcome]))
}

fn many_runs(m: &RealTimeAutomaton, d: &Ldi, cfg: &GaConfig, harvest: bool) -> Result<GaReport, GaError> {
    let obj = prepare(m, d, cfg)?;
    let outcomes = map_range(cfg.exec, cfg.runs, |r| single_run(&obj, cfg, cfg.seed.wrapping_add(r as u64), harvest));
    Ok(aggregate(cfg, outcomes.into_iter().collect::<Result<_, _>>()?))
}

/// `cfg.runs` independent runs with seeds `seed, seed + 1, ...`.
pub fn check_ldi(m: &RealTimeAutomaton, d: &Ldi, cfg: &GaConfig) -> Result<GaReport, GaError> {
    many_runs(m, d, cfg, false)
}

/// Like [`check_ldi`], but no run stops at its first violation; every
/// distinct violating individual is returned.
pub fn harvest_counterexamples(m: &RealTimeAutomaton, d: &Ldi, cfg: &GaConfig) -> Result<GaReport, GaError> {
    many_runs(m, d, cfg, true)
}
