//! Line-oriented model file format.
//!
//! ```text
//! state <id> labels <prop>[,<prop>...]
//! trans <id> -> <id> [<lo>, <hi|inf>]      # plain models
//! trans <id> -> <id> prob <p>              # probabilistic models
//! dwell <id> [<lo>, <hi|inf>]              # probabilistic models only
//! ```
//!
//! `#` starts a comment. Declarations may appear in any order.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use super::{
    is_identifier, Interval, Model, ModelError, ProbabilisticRealTimeAutomaton, RealTimeAutomaton,
    State, StateId, Transition,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("file mixes probability-annotated and plain transitions")]
    MixedTransitions,
    #[error("dwell declarations are only valid in probabilistic models")]
    DwellInPlainModel,
    #[error("probabilistic transitions take their interval from `dwell`")]
    IntervalOnProbabilisticTransition,
    #[error("duplicate dwell declaration for `{0}`")]
    DuplicateDwell(String),
}

/// A parse failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub column: usize,
}

impl Pos {
    pub(crate) fn error(self, kind: impl Into<ParseErrorKind>) -> ParseError {
        ParseError {
            line: self.line,
            column: self.column,
            kind: kind.into(),
        }
    }

    fn syntax(self, msg: impl Into<String>) -> ParseError {
        self.error(ParseErrorKind::Syntax(msg.into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LBracket,
    RBracket,
    Comma,
    Arrow,
    Word(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Word(w) => write!(f, "`{w}`"),
        }
    }
}

fn tokenize(line: &str, line_no: usize) -> Vec<(Tok, Pos)> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos {
            line: line_no,
            column: i + 1,
        };
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            '[' => {
                out.push((Tok::LBracket, pos));
                i += 1;
            }
            ']' => {
                out.push((Tok::RBracket, pos));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, pos));
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Tok::Arrow, pos));
                i += 2;
            }
            _ => {
                let start = i;
                while i < chars.len() {
                    let c = chars[i];
                    let arrow = c == '-' && chars.get(i + 1) == Some(&'>');
                    if c.is_whitespace() || matches!(c, '[' | ']' | ',' | '#') || arrow {
                        break;
                    }
                    i += 1;
                }
                out.push((Tok::Word(chars[start..i].iter().collect()), pos));
            }
        }
    }
    out
}

/// Parses a finite real written in plain decimal or scientific notation.
/// Rejects `inf`, `nan` and friends, which `f64::from_str` would accept.
pub(crate) fn parse_real(word: &str) -> Option<f64> {
    let ok_chars = word
        .chars()
        .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'));
    let has_digit = word.chars().any(|c| c.is_ascii_digit());
    if !ok_chars || !has_digit {
        return None;
    }
    word.parse::<f64>().ok().filter(|v| v.is_finite())
}

struct Cursor {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    eol: Pos,
}

impl Cursor {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn next(&mut self, what: &str) -> Result<(Tok, Pos), ParseError> {
        match self.toks.get(self.at) {
            Some(t) => {
                self.at += 1;
                Ok(t.clone())
            }
            None => Err(self.eol.syntax(format!("expected {what}, found end of line"))),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, ParseError> {
        let (t, pos) = self.next(&tok.to_string())?;
        if t == tok {
            Ok(pos)
        } else {
            Err(pos.syntax(format!("expected {tok}, found {t}")))
        }
    }

    fn word(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        match self.next(what)? {
            (Tok::Word(w), pos) => Ok((w, pos)),
            (t, pos) => Err(pos.syntax(format!("expected {what}, found {t}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        let (w, pos) = self.word(what)?;
        if is_identifier(&w) {
            Ok((w, pos))
        } else {
            Err(pos.error(ModelError::InvalidIdentifier(w)))
        }
    }

    fn real(&mut self, what: &str) -> Result<(f64, Pos), ParseError> {
        let (w, pos) = self.word(what)?;
        parse_real(&w)
            .map(|v| (v, pos))
            .ok_or_else(|| pos.syntax(format!("expected {what}, found `{w}`")))
    }

    fn interval(&mut self) -> Result<Interval, ParseError> {
        let open = self.expect(Tok::LBracket)?;
        let (lo, _) = self.real("lower bound")?;
        self.expect(Tok::Comma)?;
        let (w, pos) = self.word("upper bound")?;
        let hi = if w == "inf" {
            f64::INFINITY
        } else {
            parse_real(&w).ok_or_else(|| pos.syntax(format!("expected upper bound, found `{w}`")))?
        };
        self.expect(Tok::RBracket)?;
        Interval::new(lo, hi).map_err(|e| open.error(e))
    }

    fn end(&self) -> Result<(), ParseError> {
        match self.toks.get(self.at) {
            None => Ok(()),
            Some((t, pos)) => Err(pos.syntax(format!("unexpected {t}"))),
        }
    }
}

struct TransDecl {
    source: (String, Pos),
    target: (String, Pos),
    interval: Option<Interval>,
    prob: Option<(f64, Pos)>,
    pos: Pos,
}

/// Parses a model file. The model kind follows from whether transitions carry
/// `prob` annotations.
pub fn parse_model(text: &str) -> Result<Model, ParseError> {
    let mut states: Vec<(State, Pos)> = Vec::new();
    let mut trans: Vec<TransDecl> = Vec::new();
    let mut dwells: Vec<(String, Pos, Interval)> = Vec::new();

    for (n, line) in text.lines().enumerate() {
        let toks = tokenize(line, n + 1);
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor {
            toks,
            at: 0,
            eol: Pos {
                line: n + 1,
                column: line.chars().count() + 1,
            },
        };
        let (kw, kw_pos) = cur.word("declaration")?;
        match kw.as_str() {
            "state" => {
                let (name, _) = cur.ident("state id")?;
                let mut labels = Vec::new();
                if cur.peek().is_some() {
                    let (w, pos) = cur.word("`labels`")?;
                    if w != "labels" {
                        return Err(pos.syntax(format!("expected `labels`, found `{w}`")));
                    }
                    if cur.peek().is_some() {
                        labels.push(cur.ident("proposition")?.0);
                        while cur.peek() == Some(&Tok::Comma) {
                            cur.at += 1;
                            labels.push(cur.ident("proposition")?.0);
                        }
                    }
                }
                cur.end()?;
                states.push((State::new(name, labels), kw_pos));
            }
            "trans" => {
                let source = cur.ident("source state")?;
                cur.expect(Tok::Arrow)?;
                let target = cur.ident("target state")?;
                let interval = if cur.peek() == Some(&Tok::LBracket) {
                    Some(cur.interval()?)
                } else {
                    None
                };
                let prob = if cur.peek().is_some() {
                    let (w, pos) = cur.word("`prob`")?;
                    if w != "prob" {
                        return Err(pos.syntax(format!("expected `prob`, found `{w}`")));
                    }
                    Some(cur.real("probability")?)
                } else {
                    None
                };
                cur.end()?;
                if interval.is_none() && prob.is_none() {
                    return Err(cur.eol.syntax("expected interval or `prob`"));
                }
                trans.push(TransDecl {
                    source,
                    target,
                    interval,
                    prob,
                    pos: kw_pos,
                });
            }
            "dwell" => {
                let (name, pos) = cur.ident("state id")?;
                let iv = cur.interval()?;
                cur.end()?;
                dwells.push((name, pos, iv));
            }
            other => return Err(kw_pos.syntax(format!("unknown declaration `{other}`"))),
        }
    }

    let first_pos = Pos { line: 1, column: 1 };
    if states.is_empty() {
        return Err(first_pos.error(ModelError::NoStates));
    }
    let mut index: HashMap<&str, StateId> = HashMap::new();
    for (i, (st, pos)) in states.iter().enumerate() {
        if index.insert(st.name.as_str(), StateId(i)).is_some() {
            return Err(pos.error(ModelError::DuplicateState(st.name.clone())));
        }
    }
    let resolve = |(name, pos): &(String, Pos)| {
        index
            .get(name.as_str())
            .copied()
            .ok_or_else(|| pos.error(ModelError::UnknownState(name.clone())))
    };

    let probabilistic = trans.iter().any(|t| t.prob.is_some());
    if let Some(t) = trans.iter().find(|t| t.prob.is_some() != probabilistic) {
        return Err(t.pos.error(ParseErrorKind::MixedTransitions));
    }
    let state_list: Vec<State> = states.iter().map(|(s, _)| s.clone()).collect();

    if !probabilistic {
        if let Some((_, pos, _)) = dwells.first() {
            return Err(pos.error(ParseErrorKind::DwellInPlainModel));
        }
        let mut transitions = Vec::with_capacity(trans.len());
        for (i, t) in trans.iter().enumerate() {
            let tr = Transition {
                source: resolve(&t.source)?,
                target: resolve(&t.target)?,
                interval: t.interval.expect("plain transitions carry an interval"),
            };
            if transitions[..i].contains(&tr) {
                return Err(t.pos.error(ModelError::DuplicateTransition {
                    source_state: t.source.0.clone(),
                    target_state: t.target.0.clone(),
                    interval: tr.interval.to_string(),
                }));
            }
            transitions.push(tr);
        }
        return RealTimeAutomaton::new(state_list, transitions)
            .map(Model::Plain)
            .map_err(|e| first_pos.error(e));
    }

    let mut dwell: Vec<Option<Interval>> = vec![None; states.len()];
    for d in &dwells {
        let s = resolve(&(d.0.clone(), d.1))?;
        if dwell[s.0].replace(d.2).is_some() {
            return Err(d.1.error(ParseErrorKind::DuplicateDwell(d.0.clone())));
        }
    }
    let mut rows: Vec<Vec<(StateId, f64)>> = vec![Vec::new(); states.len()];
    for t in &trans {
        if t.interval.is_some() {
            return Err(t.pos.error(ParseErrorKind::IntervalOnProbabilisticTransition));
        }
        let (s, d) = (resolve(&t.source)?, resolve(&t.target)?);
        let (p, ppos) = t.prob.expect("probabilistic transitions carry `prob`");
        if rows[s.0].iter().any(|(o, _)| *o == d) {
            return Err(t.pos.error(ModelError::DuplicateTransition {
                source_state: t.source.0.clone(),
                target_state: t.target.0.clone(),
                interval: String::from("(dwell)"),
            }));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(ppos.error(ModelError::InvalidProbability {
                source_state: t.source.0.clone(),
                target_state: t.target.0.clone(),
                probability: p,
            }));
        }
        rows[s.0].push((d, p));
    }
    let mut dwell_list = Vec::with_capacity(states.len());
    for (i, d) in dwell.into_iter().enumerate() {
        match d {
            Some(iv) => dwell_list.push(iv),
            None => {
                return Err(states[i].1.error(ModelError::MissingDwell(states[i].0.name.clone())))
            }
        }
    }
    for (i, row) in rows.iter().enumerate() {
        let sum: f64 = row.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > super::PROBABILITY_TOLERANCE {
            return Err(states[i].1.error(ModelError::ProbabilitySum {
                state: states[i].0.name.clone(),
                sum,
            }));
        }
    }
    ProbabilisticRealTimeAutomaton::new(state_list, dwell_list, rows)
        .map(Model::Probabilistic)
        .map_err(|e| first_pos.error(e))
}

fn write_state(f: &mut fmt::Formatter<'_>, st: &State) -> fmt::Result {
    write!(f, "state {}", st.name)?;
    if !st.labels.is_empty() {
        let labels: Vec<&str> = st.labels.iter().map(String::as_str).collect();
        write!(f, " labels {}", labels.join(","))?;
    }
    writeln!(f)
}

impl fmt::Display for RealTimeAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for st in self.states() {
            write_state(f, st)?;
        }
        for tr in self.transitions() {
            writeln!(
                f,
                "trans {} -> {} {}",
                self.state_name(tr.source),
                self.state_name(tr.target),
                tr.interval
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for ProbabilisticRealTimeAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for st in self.states() {
            write_state(f, st)?;
        }
        for (i, st) in self.states().iter().enumerate() {
            writeln!(f, "dwell {} {}", st.name, self.dwell(StateId(i)))?;
        }
        for (i, st) in self.states().iter().enumerate() {
            for &(t, p) in self.distribution(StateId(i)).expect("index in range") {
                writeln!(f, "trans {} -> {} prob {}", st.name, self.state_name(t), p)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Plain(m) => m.fmt(f),
            Model::Probabilistic(m) => m.fmt(f),
        }
    }
}
