//! Checking a probabilistic model against `[D] >= lambda`.
//!
//! Violating behaviors of the underlying plain automaton are harvested with
//! the genetic search, stripped of their time stamps into state sequences,
//! and reduced to a minimal pattern set `W`. The worst-case probability of
//! satisfying `D` from a state is then the probability of never running
//! through any pattern of `W`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::automaton::{ProbabilisticRealTimeAutomaton, RealTimeAutomaton, StateId, TransitionId};
use crate::ga::{harvest_counterexamples, GaConfig, GaError, GaReport};
use crate::markov::{avoidance_probability, build_chain, AvoidanceResult, MarkovError};
use crate::semantics::oracle::count_sequences;
use crate::semantics::{Objective, SemanticsError, SequenceOptimum, TimeStampedBehavior};
use crate::spec::{Ldi, Pldi};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PldiError {
    #[error("a path pattern needs at least two states")]
    ShortPattern,
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// Time-free state sequence `s_1 s_2 ... s_k`, `k >= 2`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathPattern {
    states: Vec<StateId>,
}

impl PathPattern {
    pub fn new(states: Vec<StateId>) -> Result<Self, PldiError> {
        if states.len() < 2 {
            return Err(PldiError::ShortPattern);
        }
        Ok(PathPattern { states })
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `other` occurs in `self` as a contiguous block.
    pub fn contains(&self, other: &PathPattern) -> bool {
        self.states.windows(other.len()).any(|w| w == other.states.as_slice())
    }

    pub fn render(&self, names: &[String]) -> String {
        let parts: Vec<&str> = self.states.iter().map(|s| names[s.0].as_str()).collect();
        parts.join(" ")
    }
}

/// Pattern set in which no member contains another.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PatternSet {
    patterns: Vec<PathPattern>,
}

impl PatternSet {
    pub fn patterns(&self) -> &[PathPattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

/// Harvests counterexamples of `d` on the stripped automaton, with behaviors
/// of at most `max_len` transitions. Returns the distinct violating behaviors
/// and the search report.
pub fn collect_counterexamples(
    m: &ProbabilisticRealTimeAutomaton,
    d: &Ldi,
    cfg: &GaConfig,
    max_len: usize,
) -> Result<(Vec<TimeStampedBehavior>, GaReport), PldiError> {
    let plain = m.strip_probabilities();
    let cfg = GaConfig {
        max_genes: max_len,
        ..cfg.clone()
    };
    let report = harvest_counterexamples(&plain, d, &cfg)?;
    Ok((report.counterexamples.clone(), report))
}

/// Visited-state sequence of every behavior, without duplicates.
pub fn strip_and_dedupe(m: &RealTimeAutomaton, ces: &[TimeStampedBehavior]) -> BTreeSet<PathPattern> {
    ces.iter()
        .filter_map(|b| PathPattern::new(b.visited_states(m)).ok())
        .collect()
}

/// Drops every pattern that contains another member.
pub fn minimize_patterns(w0: &BTreeSet<PathPattern>) -> PatternSet {
    // shorter patterns first, so containment only needs to look back
    let mut by_len: Vec<&PathPattern> = w0.iter().collect();
    by_len.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut kept: Vec<PathPattern> = Vec::new();
    for p in by_len {
        if !kept.iter().any(|k| p.contains(k)) {
            kept.push(p.clone());
        }
    }
    kept.sort();
    PatternSet { patterns: kept }
}

/// Longest block of at least two states occurring in every pattern.
/// Ties go to the lexicographically smallest block.
pub fn common_core(w: &PatternSet) -> Option<PathPattern> {
    let first = w.patterns.iter().min_by_key(|p| p.len())?;
    for len in (2..=first.len()).rev() {
        let mut found: Vec<&[StateId]> = first
            .states
            .windows(len)
            .filter(|block| w.patterns.iter().all(|p| p.states.windows(len).any(|x| x == *block)))
            .collect();
        found.sort();
        if let Some(block) = found.first() {
            return Some(PathPattern { states: block.to_vec() });
        }
    }
    None
}

/// Whether every transition sequence of exactly `len` steps that runs
/// through `core` has a window admitting a violating timing. `None` if
/// there are more than `limit` sequences to inspect.
pub fn core_forces_violation(obj: &Objective<'_>, core: &PathPattern, len: usize, limit: u64) -> Option<bool> {
    let m = obj.model();
    if count_sequences(m, len) > limit as u128 {
        return None;
    }
    let mut seq = Vec::with_capacity(len);
    let mut ok = true;
    for t in 0..m.transitions().len() {
        seq.push(TransitionId(t));
        walk(obj, core, len, &mut seq, &mut ok);
        seq.pop();
        if !ok {
            break;
        }
    }
    Some(ok)
}

fn walk(obj: &Objective<'_>, core: &PathPattern, len: usize, seq: &mut Vec<TransitionId>, ok: &mut bool) {
    let m = obj.model();
    if seq.len() == len {
        let b = TimeStampedBehavior::from_parts(seq, &vec![0.0; len]);
        let Ok(p) = PathPattern::new(b.visited_states(m)) else {
            return;
        };
        if p.contains(core) && !some_window_violates(obj, seq) {
            *ok = false;
        }
        return;
    }
    let target = m.transition(*seq.last().expect("nonempty")).target;
    for &t in m.successors(target).expect("declared state") {
        seq.push(t);
        walk(obj, core, len, seq, ok);
        seq.pop();
        if !*ok {
            return;
        }
    }
}

fn some_window_violates(obj: &Objective<'_>, seq: &[TransitionId]) -> bool {
    (0..seq.len()).any(|i| {
        (i..seq.len()).any(|j| match obj.optimize_unchecked(&seq[i..=j]) {
            SequenceOptimum::Infeasible => false,
            SequenceOptimum::Unbounded { .. } => true,
            SequenceOptimum::Finite { value, .. } => obj.exceeds_bound(value),
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PldiConfig {
    pub ga: GaConfig,
    pub max_len: usize,
    /// Try to replace `W` by a single shared core.
    pub generalize: bool,
    /// Largest number of sequences the core check may enumerate.
    pub generalize_limit: u64,
}

impl Default for PldiConfig {
    fn default() -> Self {
        PldiConfig {
            ga: GaConfig::default(),
            max_len: 8,
            generalize: true,
            generalize_limit: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PldiVerdict {
    SatisfiedApproximately,
    Violated,
}

impl PldiVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            PldiVerdict::SatisfiedApproximately => "satisfied-approximately",
            PldiVerdict::Violated => "violated",
        }
    }
}

impl fmt::Display for PldiVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of the core generalization attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum Generalization {
    Disabled,
    NoCore,
    Adopted(PathPattern),
    Rejected(PathPattern),
    /// The check would have enumerated too many sequences.
    Skipped(PathPattern),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PldiReport {
    pub verdict: PldiVerdict,
    pub per_state_probability: Vec<f64>,
    pub min_probability: f64,
    pub lambda: f64,
    /// Pattern set actually used for the probability computation.
    pub pattern_set: PatternSet,
    /// Distinct state sequences before minimization.
    pub raw_pattern_count: usize,
    pub minimized_pattern_count: usize,
    pub counterexample_count: usize,
    pub counterexamples: Vec<TimeStampedBehavior>,
    pub generalization: Generalization,
    pub avoidance: Option<AvoidanceResult>,
    pub ga: GaReport,
}

pub fn check_pldi(m: &ProbabilisticRealTimeAutomaton, p: &Pldi, cfg: &PldiConfig) -> Result<PldiReport, PldiError> {
    let (ces, ga) = collect_counterexamples(m, p.ldi(), &cfg.ga, cfg.max_len)?;
    let plain = m.strip_probabilities();
    let lambda = p.lambda();
    let tol = cfg.ga.tol;

    if ces.is_empty() {
        let per_state = vec![1.0; m.states().len()];
        return Ok(PldiReport {
            verdict: decide(1.0, lambda, tol),
            per_state_probability: per_state,
            min_probability: 1.0,
            lambda,
            pattern_set: PatternSet::default(),
            raw_pattern_count: 0,
            minimized_pattern_count: 0,
            counterexample_count: 0,
            counterexamples: ces,
            generalization: Generalization::Disabled,
            avoidance: None,
            ga,
        });
    }

    let raw = strip_and_dedupe(&plain, &ces);
    let minimized = minimize_patterns(&raw);
    let minimized_pattern_count = minimized.len();
    let (pattern_set, generalization) = if !cfg.generalize {
        (minimized, Generalization::Disabled)
    } else {
        match common_core(&minimized) {
            Some(core) if minimized.len() > 1 || minimized.patterns[0] != core => {
                let obj = Objective::new(&plain, p.ldi())?.with_tolerance(tol);
                match core_forces_violation(&obj, &core, cfg.max_len, cfg.generalize_limit) {
                    Some(true) => (
                        PatternSet {
                            patterns: vec![core.clone()],
                        },
                        Generalization::Adopted(core),
                    ),
                    Some(false) => (minimized, Generalization::Rejected(core)),
                    None => (minimized, Generalization::Skipped(core)),
                }
            }
            _ => (minimized, Generalization::NoCore),
        }
    };

    let avoidance = avoidance_probability(&build_chain(m), pattern_set.patterns())?;
    let min = avoidance.min_probability();
    Ok(PldiReport {
        verdict: decide(min, lambda, tol),
        per_state_probability: avoidance.per_state.clone(),
        min_probability: min,
        lambda,
        pattern_set,
        raw_pattern_count: raw.len(),
        minimized_pattern_count,
        counterexample_count: ces.len(),
        counterexamples: ces,
        generalization,
        avoidance: Some(avoidance),
        ga,
    })
}

fn decide(min: f64, lambda: f64, tol: f64) -> PldiVerdict {
    if min < lambda - tol {
        PldiVerdict::Violated
    } else {
        PldiVerdict::SatisfiedApproximately
    }
}

#[cfg(test)]
mod tests;
