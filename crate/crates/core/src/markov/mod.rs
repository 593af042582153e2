//! Probability that a run of the embedded Markov chain never contains any
//! pattern of a finite set.
//!
//! The chain is multiplied with a failure-link pattern automaton. Product
//! states where a pattern has just completed are worth 0; states that can no
//! longer reach such a state are worth 1; the rest are solved as a linear
//! system and cross-checked by value iteration.

mod linear;
mod monte_carlo;
pub mod pattern;

use std::fmt;

use thiserror::Error;

use crate::automaton::{ProbabilisticRealTimeAutomaton, StateId, PROBABILITY_TOLERANCE};
use crate::pldi::PathPattern;

pub use linear::PIVOT_THRESHOLD;
pub use monte_carlo::{monte_carlo_avoidance, McEstimate};
pub use pattern::PatternAutomaton;

/// Value iteration stops once the estimated remaining change is below this.
pub const VALUE_ITERATION_TOLERANCE: f64 = 1e-12;
pub const VALUE_ITERATION_LIMIT: usize = 1_000_000;
/// Largest allowed gap between elimination and value iteration.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarkovError {
    #[error("a chain needs at least one state")]
    NoStates,
    #[error("row {row} has a bad entry for column {column}: {p}")]
    BadEntry { row: usize, column: usize, p: f64 },
    #[error("row {row} sums to {sum}")]
    RowSum { row: usize, sum: f64 },
    #[error("pattern {0} is shorter than two states")]
    ShortPattern(String),
    #[error("pattern refers to state index {0}, which the chain does not have")]
    StateOutOfRange(usize),
    #[error("singular system at column {column} (pivot {pivot:e})\n{dump}")]
    Singular { column: usize, pivot: f64, dump: String },
    #[error("elimination and value iteration differ by {difference:e}\n{dump}")]
    Disagreement { difference: f64, dump: String },
}

/// Finite discrete-time Markov chain with sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    names: Vec<String>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl MarkovChain {
    /// Zero entries are dropped; the rest must lie in `(0, 1]` and each row
    /// must sum to 1 within [`PROBABILITY_TOLERANCE`].
    pub fn new(names: Vec<String>, rows: Vec<Vec<(usize, f64)>>) -> Result<Self, MarkovError> {
        if names.is_empty() {
            return Err(MarkovError::NoStates);
        }
        let n = names.len();
        let mut clean = Vec::with_capacity(n);
        for (i, row) in rows.into_iter().enumerate() {
            let mut sum = 0.0;
            let mut kept = Vec::with_capacity(row.len());
            for (j, p) in row {
                if j >= n || !(0.0..=1.0).contains(&p) {
                    return Err(MarkovError::BadEntry { row: i, column: j, p });
                }
                if p > 0.0 {
                    sum += p;
                    kept.push((j, p));
                }
            }
            if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(MarkovError::RowSum { row: i, sum });
            }
            clean.push(kept);
        }
        if clean.len() != n {
            return Err(MarkovError::RowSum { row: clean.len().min(n), sum: 0.0 });
        }
        Ok(MarkovChain { names, rows: clean })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, s: usize) -> &[(usize, f64)] {
        &self.rows[s]
    }

    pub fn probability(&self, from: usize, to: usize) -> f64 {
        self.rows[from].iter().find(|&&(j, _)| j == to).map_or(0.0, |&(_, p)| p)
    }

    /// Dense matrix, rows in state order.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut r = vec![0.0; self.len()];
                for &(j, p) in row {
                    r[j] = p;
                }
                r
            })
            .collect()
    }
}

/// Drops dwell intervals; keeps states and distributions.
pub fn build_chain(m: &ProbabilisticRealTimeAutomaton) -> MarkovChain {
    let names = m.states().iter().map(|s| s.name.clone()).collect();
    let rows = (0..m.states().len())
        .map(|s| {
            m.distribution(StateId(s))
                .expect("state in range")
                .iter()
                .map(|&(t, p)| (t.0, p))
                .collect()
        })
        .collect();
    MarkovChain::new(names, rows).expect("validated model yields a valid chain")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    LinearSolve,
    ValueIteration,
}

/// One line `lhs = sum coef*var + constant` of a linear system.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub lhs: usize,
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

/// Equation system over named unknowns, kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub unknowns: Vec<String>,
    pub equations: Vec<Equation>,
    /// Unknowns whose value was fixed before solving.
    pub fixed: Vec<(usize, f64)>,
}

fn fmt_number(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

impl fmt::Display for LinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &(v, x) in &self.fixed {
            writeln!(f, "{} = {}", self.unknowns[v], fmt_number(x))?;
        }
        for eq in &self.equations {
            write!(f, "{} =", self.unknowns[eq.lhs])?;
            let mut first = true;
            for &(v, c) in &eq.terms {
                let sep = if first { " " } else { " + " };
                write!(f, "{sep}{}*{}", fmt_number(c), self.unknowns[v])?;
                first = false;
            }
            if eq.constant != 0.0 || first {
                let sep = if first { " " } else { " + " };
                write!(f, "{sep}{}", fmt_number(eq.constant))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AvoidanceResult {
    /// `P_W(s)` indexed by chain state.
    pub per_state: Vec<f64>,
    /// Unknowns left after classification.
    pub system_size: usize,
    pub product_size: usize,
    pub method: SolveMethod,
    pub value_iteration_steps: usize,
    pub max_difference: f64,
    /// Patterns that can never occur in the chain.
    pub dropped: Vec<PathPattern>,
    /// Full system over product states.
    pub system: LinearSystem,
    /// The same system reduced to one unknown `P(s)` per chain state.
    pub aggregated: LinearSystem,
}

impl AvoidanceResult {
    pub fn min_probability(&self) -> f64 {
        self.per_state.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Product of the chain with the pattern automaton, restricted to states
/// reachable from some `(s, step(root, s))`.
pub(crate) struct Product {
    pub states: Vec<(usize, usize)>,
    pub edges: Vec<Vec<(usize, f64)>>,
    pub matched: Vec<bool>,
    /// Product index of each chain state's start.
    pub starts: Vec<usize>,
}

pub(crate) fn product(chain: &MarkovChain, pa: &PatternAutomaton) -> Product {
    let nodes = pa.len();
    let mut index = vec![usize::MAX; chain.len() * nodes];
    let mut states = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    let mut intern = |s: usize, q: usize, states: &mut Vec<(usize, usize)>, queue: &mut std::collections::VecDeque<usize>| {
        let k = s * nodes + q;
        if index[k] == usize::MAX {
            index[k] = states.len();
            states.push((s, q));
            queue.push_back(index[k]);
        }
        index[k]
    };
    let starts: Vec<usize> = (0..chain.len())
        .map(|s| intern(s, pa.step(PatternAutomaton::ROOT, s), &mut states, &mut queue))
        .collect();
    let mut edges: Vec<Vec<(usize, f64)>> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let (s, q) = states[i];
        let mut out = Vec::new();
        if !pa.is_accepting(q) {
            for &(t, p) in chain.row(s) {
                out.push((intern(t, pa.step(q, t), &mut states, &mut queue), p));
            }
        }
        if edges.len() <= i {
            edges.resize(i + 1, Vec::new());
        }
        edges[i] = out;
    }
    edges.resize(states.len(), Vec::new());
    let matched = states.iter().map(|&(_, q)| pa.is_accepting(q)).collect();
    Product {
        states,
        edges,
        matched,
        starts,
    }
}

fn check_patterns(chain: &MarkovChain, w: &[PathPattern]) -> Result<(Vec<Vec<usize>>, Vec<PathPattern>), MarkovError> {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for p in w {
        let states: Vec<usize> = p.states().iter().map(|s| s.0).collect();
        if states.len() < 2 {
            return Err(MarkovError::ShortPattern(format!("{states:?}")));
        }
        if let Some(&bad) = states.iter().find(|&&s| s >= chain.len()) {
            return Err(MarkovError::StateOutOfRange(bad));
        }
        if states.windows(2).all(|e| chain.probability(e[0], e[1]) > 0.0) {
            kept.push(states);
        } else {
            dropped.push(p.clone());
        }
    }
    Ok((kept, dropped))
}

/// `P_W(s)` for every chain state `s`.
pub fn avoidance_probability(chain: &MarkovChain, w: &[PathPattern]) -> Result<AvoidanceResult, MarkovError> {
    let (patterns, dropped) = check_patterns(chain, w)?;
    let pa = PatternAutomaton::new(chain.len(), &patterns);
    let prod = product(chain, &pa);
    let n = prod.states.len();

    // states that can reach a matched state
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, out) in prod.edges.iter().enumerate() {
        for &(j, _) in out {
            reverse[j].push(i);
        }
    }
    let mut reaches = prod.matched.clone();
    let mut stack: Vec<usize> = (0..n).filter(|&i| reaches[i]).collect();
    while let Some(j) = stack.pop() {
        for &i in &reverse[j] {
            if !reaches[i] {
                reaches[i] = true;
                stack.push(i);
            }
        }
    }

    let mut value = vec![0.0; n];
    let mut unknown = vec![usize::MAX; n];
    let mut transient = Vec::new();
    for i in 0..n {
        if prod.matched[i] {
            value[i] = 0.0;
        } else if !reaches[i] {
            value[i] = 1.0;
        } else {
            unknown[i] = transient.len();
            transient.push(i);
        }
    }

    let labels: Vec<String> = prod
        .states
        .iter()
        .map(|&(s, q)| {
            let spelled: Vec<&str> = pa.spelling(q).iter().map(|&a| chain.name(a)).collect();
            format!("P({}, [{}])", chain.name(s), spelled.join(" "))
        })
        .collect();
    let system = LinearSystem {
        unknowns: labels,
        equations: transient
            .iter()
            .map(|&i| equation(&prod.edges[i], i, &unknown, &value))
            .collect(),
        fixed: (0..n).filter(|&i| unknown[i] == usize::MAX).map(|i| (i, value[i])).collect(),
    };

    let k = transient.len();
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for (r, eq) in system.equations.iter().enumerate() {
        a[r][r] = 1.0;
        for &(v, c) in &eq.terms {
            a[r][unknown[v]] -= c;
        }
        b[r] = eq.constant;
    }
    let x = linear::solve(a, b).map_err(|e| MarkovError::Singular {
        column: e.column,
        pivot: e.pivot,
        dump: system.to_string(),
    })?;
    for (r, &i) in transient.iter().enumerate() {
        // `+ 0.0` turns a negative zero into a positive one
        value[i] = x[r].clamp(0.0, 1.0) + 0.0;
    }

    let (vi, steps) = value_iteration(&prod);
    let max_difference = vi.iter().zip(&value).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if max_difference > CROSS_CHECK_TOLERANCE {
        return Err(MarkovError::Disagreement {
            difference: max_difference,
            dump: system.to_string(),
        });
    }

    let aggregated = aggregate(chain, &prod, &system, &unknown, &value)?;
    Ok(AvoidanceResult {
        per_state: prod.starts.iter().map(|&i| value[i]).collect(),
        system_size: k,
        product_size: n,
        method: SolveMethod::LinearSolve,
        value_iteration_steps: steps,
        max_difference,
        dropped,
        system,
        aggregated,
    })
}

/// Equation of product state `i` over unknown product states.
fn equation(out: &[(usize, f64)], i: usize, unknown: &[usize], value: &[f64]) -> Equation {
    let mut terms: Vec<(usize, f64)> = Vec::new();
    let mut constant = 0.0;
    for &(j, p) in out {
        if unknown[j] == usize::MAX {
            constant += p * value[j];
        } else if let Some(t) = terms.iter_mut().find(|t| t.0 == j) {
            t.1 += p;
        } else {
            terms.push((j, p));
        }
    }
    Equation { lhs: i, terms, constant }
}

/// Iterates `x <- M x` from `x = 1` (0 on matched states) until the
/// geometric tail estimate of the remaining change drops below tolerance.
pub(crate) fn value_iteration(prod: &Product) -> (Vec<f64>, usize) {
    let n = prod.states.len();
    let mut x: Vec<f64> = prod.matched.iter().map(|&m| if m { 0.0 } else { 1.0 }).collect();
    let mut next = x.clone();
    let mut prev_delta = f64::INFINITY;
    let mut calm = 0;
    for step in 1..=VALUE_ITERATION_LIMIT {
        let mut delta = 0.0f64;
        for i in 0..n {
            if prod.matched[i] {
                continue;
            }
            let v: f64 = prod.edges[i].iter().map(|&(j, p)| p * x[j]).sum();
            delta = delta.max((v - x[i]).abs());
            next[i] = v;
        }
        std::mem::swap(&mut x, &mut next);
        let ratio = delta / prev_delta;
        let tail = if ratio < 1.0 { delta * ratio / (1.0 - ratio) } else { f64::INFINITY };
        if delta == 0.0 || delta < 1e-15 || tail < VALUE_ITERATION_TOLERANCE {
            calm += 1;
            if calm == 2 || delta == 0.0 {
                return (x, step);
            }
        } else {
            calm = 0;
        }
        prev_delta = delta;
    }
    (x, VALUE_ITERATION_LIMIT)
}

/// Eliminates every unknown except the chain-state starts, giving
/// `P(s) = sum_t c_st P(t) + d_s`.
fn aggregate(
    chain: &MarkovChain,
    prod: &Product,
    system: &LinearSystem,
    unknown: &[usize],
    value: &[f64],
) -> Result<LinearSystem, MarkovError> {
    let names: Vec<String> = (0..chain.len()).map(|s| format!("P({})", chain.name(s))).collect();
    // chain state of each start that is still unknown
    let mut start_of = vec![usize::MAX; prod.states.len()];
    for (s, &i) in prod.starts.iter().enumerate() {
        start_of[i] = s;
    }
    let kept: Vec<usize> = prod.starts.iter().copied().filter(|&i| unknown[i] != usize::MAX).collect();
    let others: Vec<usize> = system
        .equations
        .iter()
        .map(|eq| eq.lhs)
        .filter(|&i| start_of[i] == usize::MAX)
        .collect();
    let mut pos_other = vec![usize::MAX; prod.states.len()];
    for (r, &i) in others.iter().enumerate() {
        pos_other[i] = r;
    }
    let pos_kept = |i: usize| kept.iter().position(|&k| k == i);
    let eq_of = |i: usize| &system.equations[unknown[i]];

    // (I - A_oo) Y = [A_ok | b_o]
    let m = others.len();
    let mut a = vec![vec![0.0; m]; m];
    let mut rhs = vec![vec![0.0; m]; kept.len() + 1];
    for (r, &i) in others.iter().enumerate() {
        a[r][r] += 1.0;
        let eq = eq_of(i);
        for &(v, c) in &eq.terms {
            if pos_other[v] != usize::MAX {
                a[r][pos_other[v]] -= c;
            } else {
                rhs[pos_kept(v).expect("unknown is a start")][r] += c;
            }
        }
        rhs[kept.len()][r] = eq.constant;
    }
    let y = linear::solve_many(a, rhs).map_err(|e| MarkovError::Singular {
        column: e.column,
        pivot: e.pivot,
        dump: system.to_string(),
    })?;

    let mut equations = Vec::new();
    for &i in &kept {
        let eq = eq_of(i);
        let mut coef = vec![0.0; kept.len()];
        let mut constant = eq.constant;
        for &(v, c) in &eq.terms {
            match pos_kept(v) {
                Some(k) if pos_other[v] == usize::MAX => coef[k] += c,
                _ => {
                    let r = pos_other[v];
                    for (k, col) in y[..kept.len()].iter().enumerate() {
                        coef[k] += c * col[r];
                    }
                    constant += c * y[kept.len()][r];
                }
            }
        }
        equations.push(Equation {
            lhs: start_of[i],
            terms: coef
                .iter()
                .enumerate()
                .filter(|&(_, &c)| c != 0.0)
                .map(|(k, &c)| (start_of[kept[k]], c))
                .collect(),
            constant,
        });
    }
    let fixed = prod
        .starts
        .iter()
        .enumerate()
        .filter(|&(_, &i)| unknown[i] == usize::MAX)
        .map(|(s, &i)| (s, value[i]))
        .collect();
    Ok(LinearSystem {
        unknowns: names,
        equations,
        fixed,
    })
}
