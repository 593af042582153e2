//! Exact check of an LDI over every behavior of bounded length.
//!
//! Each transition sequence of at most `max_len` steps is enumerated by DFS
//! and handed to the per-sequence LP. Work is split by first transition.

use std::cmp::Ordering;

use super::{Objective, SemanticsError, SequenceOptimum, TimeStampedBehavior};
use crate::automaton::{RealTimeAutomaton, TransitionId};
use crate::par::{map_range, Exec};
use crate::spec::Ldi;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub max_len: usize,
    /// Upper limit on the number of transition sequences to enumerate.
    pub max_sequences: u64,
    pub tol: f64,
    pub exec: Exec,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_len: 8,
            max_sequences: 20_000_000,
            tol: super::DEFAULT_TOLERANCE,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleVerdict {
    Satisfied,
    Violated,
    /// LF is unbounded above on some sequence with feasible length.
    Unbounded,
    /// No behavior within the length bound meets the premise.
    Vacuous,
}

impl OracleVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleVerdict::Satisfied => "satisfied",
            OracleVerdict::Violated => "violated",
            OracleVerdict::Unbounded => "unbounded",
            OracleVerdict::Vacuous => "vacuous",
        }
    }
}

/// A feasible sequence together with the gene whose dwell can grow forever
/// while LF grows with it.
#[derive(Debug, Clone, PartialEq)]
pub struct UnboundedCertificate {
    pub sequence: Vec<TransitionId>,
    pub gene: usize,
    pub base_dwells: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub verdict: OracleVerdict,
    /// `None` when vacuous, `+inf` when unbounded.
    pub worst_value: Option<f64>,
    /// For unbounded results this is a concrete behavior with LF above the bound.
    pub witness: Option<TimeStampedBehavior>,
    pub certificate: Option<UnboundedCertificate>,
    pub sequences_examined: u64,
    pub max_len: usize,
}

#[derive(Debug, Clone)]
struct Best {
    value: f64,
    seq: Vec<TransitionId>,
    dwells: Vec<f64>,
    gene: Option<usize>,
}

impl Best {
    /// Greater value first, then the lexicographically least witness.
    fn better_than(&self, other: &Best) -> bool {
        match self.value.total_cmp(&other.value) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => {
                let a = TimeStampedBehavior::from_parts(&self.seq, &self.dwells);
                let b = TimeStampedBehavior::from_parts(&other.seq, &other.dwells);
                a.lex_cmp(&b) == Ordering::Less
            }
        }
    }
}

fn merge(a: Option<Best>, b: Option<Best>) -> Option<Best> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(if b.better_than(&a) { b } else { a }),
    }
}

/// Number of transition sequences with `1..=max_len` steps.
pub fn count_sequences(m: &RealTimeAutomaton, max_len: usize) -> u128 {
    let n = m.transitions().len();
    let mut ending = vec![1u128; n];
    let mut sum: u128 = n as u128;
    for _ in 1..max_len {
        let mut next = vec![0u128; n];
        for (t, &c) in ending.iter().enumerate() {
            let target = m.transition(TransitionId(t)).target;
            for &u in m.successors(target).expect("target is a declared state") {
                next[u.0] = next[u.0].saturating_add(c);
            }
        }
        ending = next;
        sum = ending.iter().fold(sum, |acc, &c| acc.saturating_add(c));
    }
    sum
}

pub fn bounded_exact_check(
    m: &RealTimeAutomaton,
    d: &Ldi,
    cfg: &OracleConfig,
) -> Result<OracleResult, SemanticsError> {
    let obj = Objective::new(m, d)?.with_tolerance(cfg.tol);
    bounded_exact_check_objective(&obj, cfg)
}

pub(crate) fn bounded_exact_check_objective(
    obj: &Objective<'_>,
    cfg: &OracleConfig,
) -> Result<OracleResult, SemanticsError> {
    let m = obj.model();
    let count = count_sequences(m, cfg.max_len);
    if count > cfg.max_sequences as u128 {
        return Err(SemanticsError::ResourceLimit {
            count,
            limit: cfg.max_sequences,
        });
    }

    let parts = map_range(cfg.exec, m.transitions().len(), |t| {
        let mut seq = vec![TransitionId(t)];
        let mut best = None;
        let mut examined = 0u64;
        dfs(obj, cfg.max_len, &mut seq, &mut best, &mut examined);
        (best, examined)
    });
    let mut best = None;
    let mut examined = 0;
    for (b, n) in parts {
        best = merge(best, b);
        examined += n;
    }

    let Some(best) = best else {
        return Ok(OracleResult {
            verdict: OracleVerdict::Vacuous,
            worst_value: None,
            witness: None,
            certificate: None,
            sequences_examined: examined,
            max_len: cfg.max_len,
        });
    };
    if let Some(gene) = best.gene {
        let weight = obj.gene_weight(best.seq[gene]);
        let mut dwells = best.dwells.clone();
        let base = TimeStampedBehavior::from_parts(&best.seq, &dwells);
        let deficit = obj.bound() + 1.0 - obj.lf(&base);
        if deficit > 0.0 {
            dwells[gene] += deficit / weight + 1.0;
        }
        return Ok(OracleResult {
            verdict: OracleVerdict::Unbounded,
            worst_value: Some(f64::INFINITY),
            witness: Some(TimeStampedBehavior::from_parts(&best.seq, &dwells)),
            certificate: Some(UnboundedCertificate {
                sequence: best.seq.clone(),
                gene,
                base_dwells: best.dwells,
                weight,
            }),
            sequences_examined: examined,
            max_len: cfg.max_len,
        });
    }
    let verdict = if obj.exceeds_bound(best.value) {
        OracleVerdict::Violated
    } else {
        OracleVerdict::Satisfied
    };
    Ok(OracleResult {
        verdict,
        worst_value: Some(best.value),
        witness: Some(TimeStampedBehavior::from_parts(&best.seq, &best.dwells)),
        certificate: None,
        sequences_examined: examined,
        max_len: cfg.max_len,
    })
}

fn dfs(
    obj: &Objective<'_>,
    max_len: usize,
    seq: &mut Vec<TransitionId>,
    best: &mut Option<Best>,
    examined: &mut u64,
) {
    *examined += 1;
    let candidate = match obj.optimize_unchecked(seq) {
        SequenceOptimum::Infeasible => None,
        SequenceOptimum::Finite { value, dwells } => Some(Best {
            value,
            seq: seq.clone(),
            dwells,
            gene: None,
        }),
        SequenceOptimum::Unbounded { gene, dwells } => Some(Best {
            value: f64::INFINITY,
            seq: seq.clone(),
            dwells,
            gene: Some(gene),
        }),
    };
    *best = merge(best.take(), candidate);
    if seq.len() == max_len {
        return;
    }
    let m = obj.model();
    let target = m.transition(*seq.last().expect("nonempty")).target;
    for &next in m.successors(target).expect("target is a declared state") {
        seq.push(next);
        dfs(obj, max_len, seq, best, examined);
        seq.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::fixtures::{gas_burner, prob_gas_burner};
    use crate::automaton::{Interval, State, StateId, Transition};
    use crate::semantics::tests::GAS_LDI;
    use crate::spec::parse_ldi;

    fn cfg(max_len: usize) -> OracleConfig {
        OracleConfig {
            max_len,
            ..OracleConfig::default()
        }
    }

    #[test]
    fn gas_burner_optimum() {
        let m = gas_burner();
        let d = parse_ldi(GAS_LDI).unwrap();
        let r = bounded_exact_check(&m, &d, &cfg(9)).unwrap();
        assert_eq!(r.verdict, OracleVerdict::Satisfied);
        assert_eq!(r.worst_value, Some(-3.0));
        let w = r.witness.unwrap();
        assert_eq!(w.transitions(), vec![TransitionId(1), TransitionId(0), TransitionId(1), TransitionId(0), TransitionId(1)]);
        assert_eq!(w.dwells(), vec![1.0, 30.0, 1.0, 30.0, 1.0]);
        assert_eq!(r.sequences_examined, 18);
    }

    #[test]
    fn lowered_bound_is_violated() {
        let m = gas_burner();
        let d = parse_ldi(GAS_LDI).unwrap().with_bound(-4.0);
        let r = bounded_exact_check(&m, &d, &cfg(9)).unwrap();
        assert_eq!(r.verdict, OracleVerdict::Violated);
        let w = r.witness.unwrap();
        let obj = Objective::new(&m, &d).unwrap();
        assert!(obj.violates(&w));
        assert_eq!(obj.lf(&w), -3.0);
    }

    #[test]
    fn single_step_uses_long_rho1() {
        let m = gas_burner();
        let d = parse_ldi(GAS_LDI).unwrap();
        let r = bounded_exact_check(&m, &d, &cfg(1)).unwrap();
        assert_eq!(r.verdict, OracleVerdict::Satisfied);
        assert_eq!(r.worst_value, Some(-60.0));
    }

    #[test]
    fn unbounded_direction() {
        let m = RealTimeAutomaton::new(
            vec![State::new("a", ["P"])],
            vec![Transition {
                source: StateId(0),
                target: StateId(0),
                interval: Interval::at_least(1.0).unwrap(),
            }],
        )
        .unwrap();
        let d = parse_ldi("ell >= 0 -> 2*int(P) <= 100").unwrap();
        let r = bounded_exact_check(&m, &d, &cfg(3)).unwrap();
        assert_eq!(r.verdict, OracleVerdict::Unbounded);
        assert_eq!(r.worst_value, Some(f64::INFINITY));
        let cert = r.certificate.unwrap();
        assert_eq!(cert.sequence, vec![TransitionId(0)]);
        assert_eq!(cert.weight, 2.0);
        let obj = Objective::new(&m, &d).unwrap();
        let w = r.witness.unwrap();
        w.validate(&m).unwrap();
        assert!(obj.violates(&w));
    }

    #[test]
    fn vacuous_when_premise_unreachable() {
        let m = RealTimeAutomaton::new(
            vec![State::new("a", ["P"])],
            vec![Transition {
                source: StateId(0),
                target: StateId(0),
                interval: Interval::new(0.0, 1.0).unwrap(),
            }],
        )
        .unwrap();
        let d = parse_ldi("ell >= 10 -> int(P) <= 0").unwrap();
        let r = bounded_exact_check(&m, &d, &cfg(4)).unwrap();
        assert_eq!(r.verdict, OracleVerdict::Vacuous);
        assert_eq!(r.worst_value, None);
        assert_eq!(r.sequences_examined, 4);
    }

    #[test]
    fn worst_value_is_monotone_in_length() {
        let m = prob_gas_burner().strip_probabilities();
        let d = parse_ldi(GAS_LDI).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=8 {
            let v = bounded_exact_check(&m, &d, &cfg(k)).unwrap().worst_value.unwrap();
            assert!(v >= prev, "k={k}: {v} < {prev}");
            prev = v;
        }
        assert!(prev > 0.0);
    }

    #[test]
    fn sequence_count_and_limit() {
        let m = prob_gas_burner().strip_probabilities();
        // 4 transitions, each with 2 successors
        assert_eq!(count_sequences(&m, 3), 4 + 8 + 16);
        let d = parse_ldi(GAS_LDI).unwrap();
        let err = bounded_exact_check(
            &m,
            &d,
            &OracleConfig {
                max_len: 10,
                max_sequences: 100,
                ..OracleConfig::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, SemanticsError::ResourceLimit { limit: 100, .. }));
    }

    #[test]
    fn execution_mode_does_not_change_result() {
        let m = prob_gas_burner().strip_probabilities();
        let d = parse_ldi(GAS_LDI).unwrap();
        let seq = bounded_exact_check(&m, &d, &OracleConfig { exec: Exec::Sequential, ..cfg(8) }).unwrap();
        let par = bounded_exact_check(&m, &d, &OracleConfig { exec: Exec::Parallel, ..cfg(8) }).unwrap();
        assert_eq!(seq, par);
    }
}
