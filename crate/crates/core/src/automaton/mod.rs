//! Real-time automata and their probabilistic variant.
//!
//! A real-time automaton has a single clock that is reset by every
//! transition, so a transition is fully described by its endpoints and the
//! closed interval the dwell time must fall into. Every state is both
//! initial and accepting. The probabilistic variant attaches one dwell
//! interval and one finite distribution over successors to each state.

mod format;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

pub(crate) use format::parse_real;
pub use format::{parse_model, ParseError, ParseErrorKind};

/// Tolerance used for the sum-to-one check on per-state distributions.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionId(pub usize);

impl fmt::Display for TransitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("model has no states")]
    NoStates,
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("undeclared state `{0}`")]
    UnknownState(String),
    #[error("state index {0} out of range")]
    StateOutOfRange(usize),
    #[error("transition index {0} out of range")]
    TransitionOutOfRange(usize),
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("duplicate transition {source_state} -> {target_state} {interval}")]
    DuplicateTransition {
        source_state: String,
        target_state: String,
        interval: String,
    },
    #[error("probability {probability} on {source_state} -> {target_state} is outside (0, 1]")]
    InvalidProbability {
        source_state: String,
        target_state: String,
        probability: f64,
    },
    #[error("outgoing probabilities of `{state}` sum to {sum}, expected 1")]
    ProbabilitySum { state: String, sum: f64 },
    #[error("state `{0}` has no dwell interval")]
    MissingDwell(String),
}

/// Closed dwell-time interval `[lo, hi]`; `hi` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, ModelError> {
        let valid = lo.is_finite() && lo >= 0.0 && !hi.is_nan() && hi >= lo;
        if valid {
            Ok(Interval { lo, hi })
        } else {
            Err(ModelError::InvalidInterval { lo, hi })
        }
    }

    /// `[lo, inf)`.
    pub fn at_least(lo: f64) -> Result<Self, ModelError> {
        Interval::new(lo, f64::INFINITY)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.hi.is_finite()
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.hi.is_finite() {
            write!(f, "[{}, {}]", self.lo, self.hi)
        } else {
            write!(f, "[{}, inf]", self.lo)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub name: String,
    pub labels: BTreeSet<String>,
}

impl State {
    pub fn new<I, S>(name: impl Into<String>, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        State {
            name: name.into(),
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub source: StateId,
    pub target: StateId,
    pub interval: Interval,
}

pub(crate) fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_states(states: &[State]) -> Result<(HashMap<String, StateId>, BTreeSet<String>), ModelError> {
    if states.is_empty() {
        return Err(ModelError::NoStates);
    }
    let mut index = HashMap::with_capacity(states.len());
    let mut props = BTreeSet::new();
    for (i, st) in states.iter().enumerate() {
        if !is_identifier(&st.name) {
            return Err(ModelError::InvalidIdentifier(st.name.clone()));
        }
        if index.insert(st.name.clone(), StateId(i)).is_some() {
            return Err(ModelError::DuplicateState(st.name.clone()));
        }
        for label in &st.labels {
            if !is_identifier(label) {
                return Err(ModelError::InvalidIdentifier(label.clone()));
            }
            props.insert(label.clone());
        }
    }
    Ok((index, props))
}

/// A real-time automaton `(S, T, L)` with per-transition dwell intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTimeAutomaton {
    states: Vec<State>,
    transitions: Vec<Transition>,
    propositions: BTreeSet<String>,
    index: HashMap<String, StateId>,
    outgoing: Vec<Vec<TransitionId>>,
}

impl RealTimeAutomaton {
    pub fn new(states: Vec<State>, transitions: Vec<Transition>) -> Result<Self, ModelError> {
        let (index, propositions) = check_states(&states)?;
        let mut outgoing = vec![Vec::new(); states.len()];
        for (i, tr) in transitions.iter().enumerate() {
            for s in [tr.source, tr.target] {
                if s.0 >= states.len() {
                    return Err(ModelError::StateOutOfRange(s.0));
                }
            }
            // identity is (source, target, interval)
            let dup = transitions[..i].iter().any(|o| {
                o.source == tr.source && o.target == tr.target && o.interval == tr.interval
            });
            if dup {
                return Err(ModelError::DuplicateTransition {
                    source_state: states[tr.source.0].name.clone(),
                    target_state: states[tr.target.0].name.clone(),
                    interval: tr.interval.to_string(),
                });
            }
            outgoing[tr.source.0].push(TransitionId(i));
        }
        Ok(RealTimeAutomaton {
            states,
            transitions,
            propositions,
            index,
            outgoing,
        })
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn propositions(&self) -> &BTreeSet<String> {
        &self.propositions
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.index.get(name).copied()
    }

    pub fn state(&self, id: StateId) -> &State {
        &self.states[id.0]
    }

    pub fn transition(&self, id: TransitionId) -> &Transition {
        &self.transitions[id.0]
    }

    pub fn state_name(&self, id: StateId) -> &str {
        &self.states[id.0].name
    }

    /// Outgoing transitions of `s` in declaration order.
    pub fn successors(&self, s: StateId) -> Result<&[TransitionId], ModelError> {
        self.outgoing
            .get(s.0)
            .map(Vec::as_slice)
            .ok_or(ModelError::StateOutOfRange(s.0))
    }

    pub fn successors_of(&self, name: &str) -> Result<&[TransitionId], ModelError> {
        let id = self
            .state_id(name)
            .ok_or_else(|| ModelError::UnknownState(name.to_string()))?;
        self.successors(id)
    }

    /// Checks that consecutive transitions chain up (`target(i) == source(i+1)`).
    /// The empty sequence is not a behavior.
    pub fn is_behavior(&self, seq: &[TransitionId]) -> Result<bool, ModelError> {
        for t in seq {
            if t.0 >= self.transitions.len() {
                return Err(ModelError::TransitionOutOfRange(t.0));
            }
        }
        if seq.is_empty() {
            return Ok(false);
        }
        Ok(seq
            .windows(2)
            .all(|w| self.transitions[w[0].0].target == self.transitions[w[1].0].source))
    }

    /// Short human-readable name of a transition, e.g. `s1->s2`.
    pub fn transition_label(&self, id: TransitionId) -> String {
        let tr = &self.transitions[id.0];
        format!("{}->{}", self.state_name(tr.source), self.state_name(tr.target))
    }
}

/// A probabilistic real-time automaton `(S, D, L)`: each state owns one
/// dwell interval and a finite-support distribution over successor states.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilisticRealTimeAutomaton {
    states: Vec<State>,
    dwell: Vec<Interval>,
    distribution: Vec<Vec<(StateId, f64)>>,
    propositions: BTreeSet<String>,
    index: HashMap<String, StateId>,
}

impl ProbabilisticRealTimeAutomaton {
    pub fn new(
        states: Vec<State>,
        dwell: Vec<Interval>,
        distribution: Vec<Vec<(StateId, f64)>>,
    ) -> Result<Self, ModelError> {
        let (index, propositions) = check_states(&states)?;
        if dwell.len() != states.len() {
            let missing = states.get(dwell.len()).map(|s| s.name.clone()).unwrap_or_default();
            return Err(ModelError::MissingDwell(missing));
        }
        if distribution.len() != states.len() {
            return Err(ModelError::StateOutOfRange(distribution.len()));
        }
        for (s, row) in distribution.iter().enumerate() {
            let name = &states[s].name;
            let mut sum = 0.0;
            for (i, &(t, p)) in row.iter().enumerate() {
                if t.0 >= states.len() {
                    return Err(ModelError::StateOutOfRange(t.0));
                }
                if row[..i].iter().any(|(o, _)| *o == t) {
                    return Err(ModelError::DuplicateTransition {
                        source_state: name.clone(),
                        target_state: states[t.0].name.clone(),
                        interval: dwell[s].to_string(),
                    });
                }
                if !(p > 0.0 && p <= 1.0) {
                    return Err(ModelError::InvalidProbability {
                        source_state: name.clone(),
                        target_state: states[t.0].name.clone(),
                        probability: p,
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(ModelError::ProbabilitySum {
                    state: name.clone(),
                    sum,
                });
            }
        }
        Ok(ProbabilisticRealTimeAutomaton {
            states,
            dwell,
            distribution,
            propositions,
            index,
        })
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn propositions(&self) -> &BTreeSet<String> {
        &self.propositions
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.index.get(name).copied()
    }

    pub fn state_name(&self, id: StateId) -> &str {
        &self.states[id.0].name
    }

    pub fn dwell(&self, s: StateId) -> Interval {
        self.dwell[s.0]
    }

    /// The distribution `p_s` as `(successor, probability)` pairs in declaration order.
    pub fn distribution(&self, s: StateId) -> Result<&[(StateId, f64)], ModelError> {
        self.distribution
            .get(s.0)
            .map(Vec::as_slice)
            .ok_or(ModelError::StateOutOfRange(s.0))
    }

    pub fn probability(&self, from: StateId, to: StateId) -> f64 {
        self.distribution[from.0]
            .iter()
            .find(|(t, _)| *t == to)
            .map_or(0.0, |&(_, p)| p)
    }

    /// Drops the probabilities: one plain transition per positive-probability
    /// successor, carrying the source state's dwell interval.
    pub fn strip_probabilities(&self) -> RealTimeAutomaton {
        let transitions = self
            .distribution
            .iter()
            .enumerate()
            .flat_map(|(s, row)| {
                row.iter().filter(|(_, p)| *p > 0.0).map(move |&(t, _)| Transition {
                    source: StateId(s),
                    target: t,
                    interval: self.dwell[s],
                })
            })
            .collect();
        RealTimeAutomaton::new(self.states.clone(), transitions)
            .expect("stripping a valid probabilistic automaton yields a valid automaton")
    }
}

/// Either kind of model, as read from a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Plain(RealTimeAutomaton),
    Probabilistic(ProbabilisticRealTimeAutomaton),
}

impl Model {
    /// The plain automaton view; probabilistic models are stripped.
    pub fn to_plain(&self) -> RealTimeAutomaton {
        match self {
            Model::Plain(m) => m.clone(),
            Model::Probabilistic(m) => m.strip_probabilities(),
        }
    }

    pub fn is_probabilistic(&self) -> bool {
        matches!(self, Model::Probabilistic(_))
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn interval_rejects_inverted_bounds() {
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(-1.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
        assert!(Interval::at_least(30.0).unwrap().contains(1e9));
        assert!(Interval::new(5.0, 5.0).unwrap().contains(5.0));
    }

    #[test]
    fn gas_burner_successors() {
        let m = gas_burner();
        assert_eq!(m.states().len(), 2);
        assert_eq!(m.transitions().len(), 2);
        let s1 = m.successors_of("s1").unwrap();
        assert_eq!(s1, &[TransitionId(0)]);
        let rho1 = m.transition(s1[0]);
        assert_eq!(m.state_name(rho1.target), "s2");
        assert_eq!(rho1.interval, Interval::at_least(30.0).unwrap());
        assert!(matches!(m.successors_of("s9"), Err(ModelError::UnknownState(_))));
    }

    #[test]
    fn isolated_state_has_no_successors() {
        let m = RealTimeAutomaton::new(vec![State::new("a", ["P"])], vec![]).unwrap();
        assert!(m.successors(StateId(0)).unwrap().is_empty());
    }

    #[test]
    fn behavior_adjacency() {
        let m = gas_burner();
        let (r1, r2) = (TransitionId(0), TransitionId(1));
        assert!(m.is_behavior(&[r1, r2, r1]).unwrap());
        assert!(!m.is_behavior(&[r1, r1]).unwrap());
        assert!(m.is_behavior(&[r2]).unwrap());
        assert!(!m.is_behavior(&[]).unwrap());
        assert!(m.is_behavior(&[TransitionId(7)]).is_err());
    }

    #[test]
    fn strip_gas_burner() {
        let p = prob_gas_burner();
        let m = p.strip_probabilities();
        let expected = [
            ("s1", "s1", Interval::at_least(30.0).unwrap()),
            ("s1", "s2", Interval::at_least(30.0).unwrap()),
            ("s2", "s1", Interval::new(0.0, 1.0).unwrap()),
            ("s2", "s2", Interval::new(0.0, 1.0).unwrap()),
        ];
        assert_eq!(m.transitions().len(), 4);
        for (tr, (a, b, iv)) in m.transitions().iter().zip(expected) {
            assert_eq!(m.state_name(tr.source), a);
            assert_eq!(m.state_name(tr.target), b);
            assert_eq!(tr.interval, iv);
        }
        assert_eq!(m.successors_of("s2").unwrap().len(), 2);
        assert_eq!(m.states(), p.states());
    }

    #[test]
    fn strip_self_loop() {
        let p = ProbabilisticRealTimeAutomaton::new(
            vec![State::new("s", ["P"])],
            vec![Interval::new(1.0, 2.0).unwrap()],
            vec![vec![(StateId(0), 1.0)]],
        )
        .unwrap();
        let m = p.strip_probabilities();
        assert_eq!(m.transitions().len(), 1);
        assert_eq!(m.transitions()[0].source, m.transitions()[0].target);
    }

    #[test]
    fn strip_then_uniform_reannotation_keeps_skeleton() {
        let p = prob_gas_burner();
        let m = p.strip_probabilities();
        let mut rows = vec![Vec::new(); m.states().len()];
        for (s, row) in rows.iter_mut().enumerate() {
            let succ = m.successors(StateId(s)).unwrap();
            for t in succ {
                row.push((m.transition(*t).target, 1.0 / succ.len() as f64));
            }
        }
        let dwell = (0..m.states().len()).map(|s| p.dwell(StateId(s))).collect();
        let q = ProbabilisticRealTimeAutomaton::new(m.states().to_vec(), dwell, rows).unwrap();
        assert_eq!(q.strip_probabilities(), m);
    }

    #[test]
    fn distribution_must_sum_to_one() {
        let err = ProbabilisticRealTimeAutomaton::new(
            vec![State::new("a", ["P"]), State::new("b", ["Q"])],
            vec![Interval::new(0.0, 1.0).unwrap(); 2],
            vec![vec![(StateId(0), 0.5), (StateId(1), 0.4)], vec![(StateId(0), 1.0)]],
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::ProbabilitySum { .. }));
        // within tolerance
        ProbabilisticRealTimeAutomaton::new(
            vec![State::new("a", ["P"]), State::new("b", ["Q"])],
            vec![Interval::new(0.0, 1.0).unwrap(); 2],
            vec![vec![(StateId(0), 0.5), (StateId(1), 0.5 + 5e-10)], vec![(StateId(0), 1.0)]],
        )
        .unwrap();
    }

    #[test]
    fn duplicate_transition_identity() {
        let st = vec![State::new("a", ["P"]), State::new("b", ["Q"])];
        let iv = Interval::new(0.0, 1.0).unwrap();
        let tr = Transition {
            source: StateId(0),
            target: StateId(1),
            interval: iv,
        };
        let err = RealTimeAutomaton::new(st.clone(), vec![tr, tr]).unwrap_err();
        assert!(matches!(err, ModelError::DuplicateTransition { .. }));
        let other = Transition {
            interval: Interval::new(2.0, 3.0).unwrap(),
            ..tr
        };
        assert!(RealTimeAutomaton::new(st, vec![tr, other]).is_ok());
    }
}
