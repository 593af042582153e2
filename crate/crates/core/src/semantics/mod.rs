//! Duration semantics of time-stamped behaviors.
//!
//! A time-stamped behavior is a chain of `(transition, dwell)` genes. Its
//! length is the sum of dwells, `int(P)` is the dwell spent in states labelled
//! `P` (the dwell of a gene counts towards its *source* state), and LF is the
//! linear term of an LDI evaluated on those durations.

mod lp;
pub mod oracle;

use std::cmp::Ordering;
use std::fmt::Write as _;

use thiserror::Error;

use crate::automaton::{ModelError, RealTimeAutomaton, StateId, TransitionId};
use crate::spec::Ldi;

pub use lp::SequenceOptimum;
pub(crate) use lp::{reallocate, total};
pub use oracle::{bounded_exact_check, OracleConfig, OracleResult, OracleVerdict, UnboundedCertificate};

/// Default absolute tolerance for `LF <= C`.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemanticsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("behaviors must contain at least one transition")]
    EmptyBehavior,
    #[error("transitions {0} and {1} are not adjacent")]
    NotABehavior(usize, usize),
    #[error("dwell {dwell} of gene {index} lies outside its interval")]
    DwellOutOfInterval { index: usize, dwell: f64 },
    #[error("proposition `{0}` is not used by the model")]
    UnknownProposition(String),
    #[error("bounded search would visit {count} sequences, more than the limit of {limit}")]
    ResourceLimit { count: u128, limit: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gene {
    pub transition: TransitionId,
    pub dwell: f64,
}

impl Gene {
    pub fn new(transition: TransitionId, dwell: f64) -> Self {
        Gene { transition, dwell }
    }
}

/// `(rho_1, t_1) ... (rho_m, t_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeStampedBehavior {
    pub genes: Vec<Gene>,
}

impl TimeStampedBehavior {
    pub fn new(genes: Vec<Gene>) -> Self {
        TimeStampedBehavior { genes }
    }

    pub fn from_parts(seq: &[TransitionId], dwells: &[f64]) -> Self {
        TimeStampedBehavior {
            genes: seq.iter().zip(dwells).map(|(&t, &d)| Gene::new(t, d)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn transitions(&self) -> Vec<TransitionId> {
        self.genes.iter().map(|g| g.transition).collect()
    }

    pub fn dwells(&self) -> Vec<f64> {
        self.genes.iter().map(|g| g.dwell).collect()
    }

    /// `L(b)`.
    pub fn length(&self) -> f64 {
        total(self.genes.iter().map(|g| g.dwell))
    }

    /// Sources of every gene followed by the final target.
    pub fn visited_states(&self, m: &RealTimeAutomaton) -> Vec<StateId> {
        let mut out: Vec<StateId> = self.genes.iter().map(|g| m.transition(g.transition).source).collect();
        if let Some(g) = self.genes.last() {
            out.push(m.transition(g.transition).target);
        }
        out
    }

    pub fn validate(&self, m: &RealTimeAutomaton) -> Result<(), SemanticsError> {
        if self.genes.is_empty() {
            return Err(SemanticsError::EmptyBehavior);
        }
        for (i, g) in self.genes.iter().enumerate() {
            if g.transition.0 >= m.transitions().len() {
                return Err(ModelError::TransitionOutOfRange(g.transition.0).into());
            }
            if !m.transition(g.transition).interval.contains(g.dwell) {
                return Err(SemanticsError::DwellOutOfInterval {
                    index: i,
                    dwell: g.dwell,
                });
            }
        }
        for (i, w) in self.genes.windows(2).enumerate() {
            if m.transition(w[0].transition).target != m.transition(w[1].transition).source {
                return Err(SemanticsError::NotABehavior(i, i + 1));
            }
        }
        Ok(())
    }

    /// Total order used for deterministic tie-breaking: transition ids first,
    /// then dwells.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.genes
            .iter()
            .map(|g| g.transition)
            .cmp(other.genes.iter().map(|g| g.transition))
            .then_with(|| {
                for (a, b) in self.genes.iter().zip(&other.genes) {
                    match a.dwell.total_cmp(&b.dwell) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                Ordering::Equal
            })
    }

    /// `(s1->s2, 30)(s2->s1, 1)`
    pub fn render(&self, m: &RealTimeAutomaton) -> String {
        let mut out = String::new();
        for g in &self.genes {
            let _ = write!(out, "({}, {})", m.transition_label(g.transition), g.dwell);
        }
        out
    }
}

/// `L(b)`.
pub fn behavior_length(b: &TimeStampedBehavior) -> f64 {
    b.length()
}

/// `int(P)(b)`.
pub fn duration(m: &RealTimeAutomaton, b: &TimeStampedBehavior, prop: &str) -> f64 {
    total(b.genes.iter().map(|g| {
        if m.state(m.transition(g.transition).source).labels.contains(prop) {
            g.dwell
        } else {
            0.0
        }
    }))
}

/// `sum c_i * int(P_i)(b)`, computed term by term from the durations.
pub fn lf_value(m: &RealTimeAutomaton, d: &Ldi, b: &TimeStampedBehavior) -> Result<f64, SemanticsError> {
    check_propositions(m, d)?;
    Ok(total(d.terms().iter().map(|t| t.coefficient * duration(m, b, &t.proposition))))
}

pub fn satisfies_ldi(m: &RealTimeAutomaton, d: &Ldi, b: &TimeStampedBehavior) -> Result<bool, SemanticsError> {
    Ok(Objective::new(m, d)?.satisfies(b))
}

pub fn satisfies_all_windows(
    m: &RealTimeAutomaton,
    d: &Ldi,
    b: &TimeStampedBehavior,
) -> Result<bool, SemanticsError> {
    Ok(Objective::new(m, d)?.satisfies_all_windows(b))
}

pub fn max_lf_for_sequence(
    m: &RealTimeAutomaton,
    d: &Ldi,
    seq: &[TransitionId],
) -> Result<SequenceOptimum, SemanticsError> {
    Objective::new(m, d)?.max_lf_for_sequence(seq)
}

fn check_propositions(m: &RealTimeAutomaton, d: &Ldi) -> Result<(), SemanticsError> {
    match d.terms().iter().find(|t| !m.propositions().contains(&t.proposition)) {
        Some(t) => Err(SemanticsError::UnknownProposition(t.proposition.clone())),
        None => Ok(()),
    }
}

/// An LDI bound to a model: every state carries the summed coefficient of
/// the propositions labelling it, so LF is a weighted sum of dwells.
#[derive(Debug, Clone)]
pub struct Objective<'m> {
    model: &'m RealTimeAutomaton,
    lower: f64,
    upper: f64,
    bound: f64,
    weights: Vec<f64>,
    tol: f64,
}

impl<'m> Objective<'m> {
    pub fn new(model: &'m RealTimeAutomaton, d: &Ldi) -> Result<Self, SemanticsError> {
        check_propositions(model, d)?;
        let weights = model
            .states()
            .iter()
            .map(|s| total(d.terms().iter().filter(|t| s.labels.contains(&t.proposition)).map(|t| t.coefficient)))
            .collect();
        Ok(Objective {
            model,
            lower: d.lower(),
            upper: d.upper(),
            bound: d.bound(),
            weights,
            tol: DEFAULT_TOLERANCE,
        })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn model(&self) -> &'m RealTimeAutomaton {
        self.model
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn state_weight(&self, s: StateId) -> f64 {
        self.weights[s.0]
    }

    pub fn gene_weight(&self, t: TransitionId) -> f64 {
        self.weights[self.model.transition(t).source.0]
    }

    pub fn lf(&self, b: &TimeStampedBehavior) -> f64 {
        total(b.genes.iter().map(|g| self.gene_weight(g.transition) * g.dwell))
    }

    pub fn in_premise(&self, length: f64) -> bool {
        self.lower <= length && length <= self.upper
    }

    pub fn exceeds_bound(&self, lf: f64) -> bool {
        lf > self.bound + self.tol
    }

    pub fn satisfies(&self, b: &TimeStampedBehavior) -> bool {
        !self.violates(b)
    }

    /// `A <= L(b) <= B` and `LF(b) > C`.
    pub fn violates(&self, b: &TimeStampedBehavior) -> bool {
        self.in_premise(b.length()) && self.exceeds_bound(self.lf(b))
    }

    /// Every contiguous window `genes[i..=j]` satisfies the invariant.
    pub fn satisfies_all_windows(&self, b: &TimeStampedBehavior) -> bool {
        for i in 0..b.genes.len() {
            let (mut len, mut lf) = (0.0, 0.0);
            for g in &b.genes[i..] {
                len += g.dwell;
                lf += self.gene_weight(g.transition) * g.dwell;
                if self.in_premise(len) && self.exceeds_bound(lf) {
                    return false;
                }
            }
        }
        true
    }

    /// Maximum of LF over all dwell assignments of `seq` whose length lies in
    /// `[A, B]`.
    pub fn max_lf_for_sequence(&self, seq: &[TransitionId]) -> Result<SequenceOptimum, SemanticsError> {
        if !self.model.is_behavior(seq)? {
            return Err(match seq.windows(2).position(|w| {
                self.model.transition(w[0]).target != self.model.transition(w[1]).source
            }) {
                Some(i) => SemanticsError::NotABehavior(i, i + 1),
                None => SemanticsError::EmptyBehavior,
            });
        }
        Ok(self.optimize_unchecked(seq))
    }

    pub(crate) fn optimize_unchecked(&self, seq: &[TransitionId]) -> SequenceOptimum {
        let mut w = Vec::with_capacity(seq.len());
        let mut lo = Vec::with_capacity(seq.len());
        let mut hi = Vec::with_capacity(seq.len());
        for &t in seq {
            let tr = self.model.transition(t);
            w.push(self.weights[tr.source.0]);
            lo.push(tr.interval.lo());
            hi.push(tr.interval.hi());
        }
        lp::maximize(&w, &lo, &hi, self.lower, self.upper)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::automaton::fixtures::gas_burner;
    use crate::automaton::{Interval, State, Transition};
    use crate::spec::parse_ldi;

    pub(crate) const GAS_LDI: &str = "ell >= 60 -> 19*int(Leak) - 1*int(NLeak) <= 0";
    const R1: TransitionId = TransitionId(0);
    const R2: TransitionId = TransitionId(1);

    fn tsb(genes: &[(TransitionId, f64)]) -> TimeStampedBehavior {
        TimeStampedBehavior::new(genes.iter().map(|&(t, d)| Gene::new(t, d)).collect())
    }

    fn three_step_model() -> RealTimeAutomaton {
        // a -P-> b -> c -P-> a
        let iv = Interval::at_least(0.0).unwrap();
        RealTimeAutomaton::new(
            vec![State::new("a", ["P"]), State::new("b", ["Q"]), State::new("c", ["P"])],
            vec![
                Transition { source: StateId(0), target: StateId(1), interval: iv },
                Transition { source: StateId(1), target: StateId(2), interval: iv },
                Transition { source: StateId(2), target: StateId(0), interval: iv },
            ],
        )
        .unwrap()
    }

    #[test]
    fn length_and_duration() {
        let m = three_step_model();
        let b = tsb(&[(TransitionId(0), 3.1), (TransitionId(1), 2.0), (TransitionId(2), 1.5)]);
        b.validate(&m).unwrap();
        assert_eq!(behavior_length(&b), 3.1 + 2.0 + 1.5);
        assert!((behavior_length(&b) - 6.6).abs() < 1e-12);
        assert_eq!(duration(&m, &b, "P"), 3.1 + 1.5);
        assert!((duration(&m, &b, "P") - 4.6).abs() < 1e-12);
        assert_eq!(duration(&m, &b, "Z"), 0.0);
    }

    #[test]
    fn gas_burner_lengths() {
        let m = gas_burner();
        assert_eq!(behavior_length(&tsb(&[(R2, 1.0), (R1, 30.0)])), 31.0);
        let zero = RealTimeAutomaton::new(
            vec![State::new("a", ["P"])],
            vec![Transition { source: StateId(0), target: StateId(0), interval: Interval::new(0.0, 2.0).unwrap() }],
        )
        .unwrap();
        let b = tsb(&[(TransitionId(0), 0.0)]);
        b.validate(&zero).unwrap();
        assert_eq!(b.length(), 0.0);
        assert_eq!(duration(&zero, &b, "P"), b.length());
        let full = tsb(&[(R2, 1.0), (R1, 30.0), (R2, 0.5)]);
        assert_eq!(duration(&m, &full, "Leak") + duration(&m, &full, "NLeak"), full.length());
    }

    #[test]
    fn lf_examples() {
        let m = gas_burner();
        let d = parse_ldi(GAS_LDI).unwrap();
        let best = tsb(&[(R2, 1.0), (R1, 30.0), (R2, 1.0), (R1, 30.0), (R2, 1.0)]);
        assert_eq!(lf_value(&m, &d, &best).unwrap(), -3.0);
        assert_eq!(Objective::new(&m, &d).unwrap().lf(&best), -3.0);
        let short = tsb(&[(R2, 1.0), (R1, 30.0)]);
        assert_eq!(lf_value(&m, &d, &short).unwrap(), -11.0);
        let zero = parse_ldi("ell >= 0 -> 0*int(Leak) + 0*int(NLeak) <= 0").unwrap();
        assert_eq!(lf_value(&m, &zero, &best).unwrap(), 0.0);
        let bad = parse_ldi("ell >= 0 -> int(Smoke) <= 0").unwrap();
        assert_eq!(lf_value(&m, &bad, &best), Err(SemanticsError::UnknownProposition("Smoke".into())));
    }

    #[test]
    fn satisfaction_examples() {
        let m = gas_burner();
        let d = parse_ldi(GAS_LDI).unwrap();
        let short = tsb(&[(R2, 1.0), (R1, 30.0)]);
        assert!(satisfies_ldi(&m, &d, &short).unwrap());
        assert!(satisfies_ldi(&m, &d.with_bound(-1000.0), &short).unwrap());
        let best = tsb(&[(R2, 1.0), (R1, 30.0), (R2, 1.0), (R1, 30.0), (R2, 1.0)]);
        assert_eq!(best.length(), 63.0);
        assert!(satisfies_ldi(&m, &d, &best).unwrap());
        assert!(!satisfies_ldi(&m, &d.with_bound(-4.0), &best).unwrap());
    }

    #[test]
    fn window_examples() {
        let m = gas_burner();
        let d = parse_ldi(GAS_LDI).unwrap();
        let best = tsb(&[(R2, 1.0), (R1, 30.0), (R2, 1.0), (R1, 30.0), (R2, 1.0)]);
        assert!(satisfies_all_windows(&m, &d, &best).unwrap());
        assert!(!satisfies_all_windows(&m, &d.with_bound(-4.0), &best).unwrap());
        // every window shorter than A
        let short = tsb(&[(R2, 1.0), (R1, 40.0), (R2, 1.0)]);
        assert!(satisfies_all_windows(&m, &d.with_bound(-1e9), &short).unwrap());
    }

    #[test]
    fn window_check_matches_enumeration() {
        let m = gas_burner();
        let d = parse_ldi(GAS_LDI).unwrap().with_bound(-20.0);
        let obj = Objective::new(&m, &d).unwrap();
        let b = tsb(&[(R1, 45.0), (R2, 1.0), (R1, 30.0), (R2, 1.0), (R1, 31.0), (R2, 0.25)]);
        let brute = (0..b.len()).all(|i| {
            (i..b.len()).all(|j| obj.satisfies(&TimeStampedBehavior::new(b.genes[i..=j].to_vec())))
        });
        assert_eq!(obj.satisfies_all_windows(&b), brute);
        assert!(!brute);
    }

    #[test]
    fn sequence_optimum_examples() {
        let m = gas_burner();
        let d = parse_ldi(GAS_LDI).unwrap();
        match max_lf_for_sequence(&m, &d, &[R2, R1, R2, R1, R2]).unwrap() {
            SequenceOptimum::Finite { value, dwells } => {
                assert_eq!(value, -3.0);
                assert_eq!(dwells, vec![1.0, 30.0, 1.0, 30.0, 1.0]);
            }
            other => panic!("{other:?}"),
        }
        match max_lf_for_sequence(&m, &d, &[R2, R1]).unwrap() {
            SequenceOptimum::Finite { value, dwells } => {
                assert_eq!(value, -40.0);
                assert_eq!(dwells, vec![1.0, 59.0]);
            }
            other => panic!("{other:?}"),
        }
        let zero = parse_ldi("ell >= 60 -> 0*int(Leak) <= 0").unwrap();
        assert_eq!(max_lf_for_sequence(&m, &zero, &[R1, R2]).unwrap().value(), Some(0.0));
        assert_eq!(max_lf_for_sequence(&m, &d, &[R2]).unwrap(), SequenceOptimum::Infeasible);
        assert_eq!(max_lf_for_sequence(&m, &d, &[R1, R1]), Err(SemanticsError::NotABehavior(0, 1)));
    }

    #[test]
    fn validate_rejects_bad_behaviors() {
        let m = gas_burner();
        assert_eq!(tsb(&[]).validate(&m), Err(SemanticsError::EmptyBehavior));
        assert_eq!(tsb(&[(R1, 31.0), (R1, 31.0)]).validate(&m), Err(SemanticsError::NotABehavior(0, 1)));
        assert!(matches!(
            tsb(&[(R1, 29.0)]).validate(&m),
            Err(SemanticsError::DwellOutOfInterval { index: 0, .. })
        ));
    }
}
