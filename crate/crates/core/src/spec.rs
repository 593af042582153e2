//! Linear duration invariants and their probabilistic form.
//!
//! Concrete syntax:
//!
//! ```text
//! ell >= 60 -> 19*int(Leak) - 1*int(NLeak) <= 0
//! 30 <= ell <= 60 -> 2*int(P) + 3*int(Q) <= 10
//! [ ell >= 60 -> 19*int(Leak) - int(NLeak) <= 0 ] >= 0.95
//! ```

use std::fmt;

use thiserror::Error;

use crate::automaton::is_identifier;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("proposition `{0}` appears more than once")]
    RepeatedProposition(String),
    #[error("lower length bound {0} is negative")]
    NegativeLowerBound(f64),
    #[error("lower length bound {lower} exceeds upper bound {upper}")]
    InvertedBounds { lower: f64, upper: f64 },
    #[error("probability threshold {0} is outside [0, 1]")]
    ThresholdOutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub proposition: String,
}

/// `A <= ell <= B -> sum c_i * int(P_i) <= C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ldi {
    lower: f64,
    upper: f64,
    terms: Vec<Term>,
    bound: f64,
}

impl Ldi {
    pub fn new(lower: f64, upper: f64, terms: Vec<Term>, bound: f64) -> Result<Self, SpecError> {
        if lower.is_nan() || lower < 0.0 {
            return Err(SpecError::NegativeLowerBound(lower));
        }
        if upper.is_nan() || upper < lower {
            return Err(SpecError::InvertedBounds { lower, upper });
        }
        for (i, t) in terms.iter().enumerate() {
            if terms[..i].iter().any(|o| o.proposition == t.proposition) {
                return Err(SpecError::RepeatedProposition(t.proposition.clone()));
            }
        }
        Ok(Ldi {
            lower,
            upper,
            terms,
            bound,
        })
    }

    /// `A`, the minimum observation length the invariant applies to.
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// `B`, possibly `+inf`.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// `C`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn with_bound(&self, bound: f64) -> Ldi {
        Ldi {
            bound,
            ..self.clone()
        }
    }

    pub fn coefficient(&self, prop: &str) -> f64 {
        self.terms
            .iter()
            .find(|t| t.proposition == prop)
            .map_or(0.0, |t| t.coefficient)
    }
}

/// `[D] >= lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pldi {
    ldi: Ldi,
    lambda: f64,
}

impl Pldi {
    pub fn new(ldi: Ldi, lambda: f64) -> Result<Self, SpecError> {
        if (0.0..=1.0).contains(&lambda) {
            Ok(Pldi { ldi, lambda })
        } else {
            Err(SpecError::ThresholdOutOfRange(lambda))
        }
    }

    pub fn ldi(&self) -> &Ldi {
        &self.ldi
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

fn fmt_real(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v.is_infinite() {
        f.write_str("inf")
    } else {
        write!(f, "{v}")
    }
}

impl fmt::Display for Ldi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.upper.is_infinite() {
            write!(f, "ell >= {}", self.lower)?;
        } else {
            write!(f, "{} <= ell <= ", self.lower)?;
            fmt_real(f, self.upper)?;
        }
        f.write_str(" ->")?;
        for (i, t) in self.terms.iter().enumerate() {
            let c = t.coefficient;
            if i == 0 {
                write!(f, " {c}*int({})", t.proposition)?;
            } else if c.is_sign_negative() {
                write!(f, " - {}*int({})", -c, t.proposition)?;
            } else {
                write!(f, " + {c}*int({})", t.proposition)?;
            }
        }
        write!(f, " <= {}", self.bound)
    }
}

impl fmt::Display for Pldi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[ {} ] >= {}", self.ldi, self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Le,
    Ge,
    Arrow,
    Star,
    Plus,
    Minus,
    LParen,
    RParen,
    LBracket,
    RBracket,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Le => f.write_str("`<=`"),
            Tok::Ge => f.write_str("`>=`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
        }
    }
}

fn syntax(column: usize, message: impl Into<String>) -> SpecError {
    SpecError::Syntax {
        column,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, SpecError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let two = chars.get(i + 1).copied();
        let tok = match (c, two) {
            (c, _) if c.is_whitespace() => {
                i += 1;
                continue;
            }
            ('<', Some('=')) => Tok::Le,
            ('>', Some('=')) => Tok::Ge,
            ('-', Some('>')) => Tok::Arrow,
            ('*', _) => Tok::Star,
            ('+', _) => Tok::Plus,
            ('-', _) => Tok::Minus,
            ('(', _) => Tok::LParen,
            (')', _) => Tok::RParen,
            ('[', _) => Tok::LBracket,
            (']', _) => Tok::RBracket,
            (c, _) if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() {
                    let c = chars[i];
                    let exp_sign = matches!(c, '+' | '-') && matches!(chars[i - 1], 'e' | 'E');
                    if c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E') || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let word: String = chars[start..i].iter().collect();
                let v = crate::automaton::parse_real(&word)
                    .ok_or_else(|| syntax(col, format!("malformed number `{word}`")))?;
                out.push((Tok::Num(v), col));
                continue;
            }
            (c, _) if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
                continue;
            }
            (c, _) => return Err(syntax(col, format!("unexpected character `{c}`"))),
        };
        let width = match tok {
            Tok::Le | Tok::Ge | Tok::Arrow => 2,
            _ => 1,
        };
        out.push((tok, col));
        i += width;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.at).map_or(self.end_col, |(_, c)| *c)
    }

    fn next(&mut self, what: &str) -> Result<(Tok, usize), SpecError> {
        match self.toks.get(self.at) {
            Some(t) => {
                self.at += 1;
                Ok(t.clone())
            }
            None => Err(syntax(self.end_col, format!("expected {what}, found end of input"))),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SpecError> {
        let (t, col) = self.next(&tok.to_string())?;
        if t == tok {
            Ok(())
        } else {
            Err(syntax(col, format!("expected {tok}, found {t}")))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), SpecError> {
        match self.next(&format!("`{kw}`"))? {
            (Tok::Ident(s), _) if s == kw => Ok(()),
            (t, col) => Err(syntax(col, format!("expected `{kw}`, found {t}"))),
        }
    }

    /// Optionally signed real number.
    fn real(&mut self) -> Result<f64, SpecError> {
        let negate = if self.peek() == Some(&Tok::Minus) {
            self.at += 1;
            true
        } else {
            false
        };
        match self.next("number")? {
            (Tok::Num(v), _) => Ok(if negate { -v } else { v }),
            (t, col) => Err(syntax(col, format!("expected number, found {t}"))),
        }
    }

    fn real_or_inf(&mut self) -> Result<f64, SpecError> {
        if let Some(Tok::Ident(s)) = self.peek() {
            if s == "inf" {
                self.at += 1;
                return Ok(f64::INFINITY);
            }
        }
        self.real()
    }

    fn length_bounds(&mut self) -> Result<(f64, f64), SpecError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == "ell" => {
                self.at += 1;
                match self.next("`>=` or `<=`")? {
                    (Tok::Ge, _) => Ok((self.real()?, f64::INFINITY)),
                    (Tok::Le, _) => Ok((0.0, self.real_or_inf()?)),
                    (t, col) => Err(syntax(col, format!("expected `>=` or `<=`, found {t}"))),
                }
            }
            _ => {
                let lower = self.real()?;
                self.expect(Tok::Le)?;
                self.keyword("ell")?;
                self.expect(Tok::Le)?;
                Ok((lower, self.real_or_inf()?))
            }
        }
    }

    fn duration(&mut self) -> Result<String, SpecError> {
        self.keyword("int")?;
        self.expect(Tok::LParen)?;
        let name = match self.next("proposition")? {
            (Tok::Ident(s), _) if is_identifier(&s) => s,
            (t, col) => return Err(syntax(col, format!("expected proposition, found {t}"))),
        };
        self.expect(Tok::RParen)?;
        Ok(name)
    }

    /// `[sign] (real "*" "int(" P ")" | "int(" P ")")`
    fn term(&mut self, sign: f64) -> Result<Term, SpecError> {
        let mut sign = sign;
        if self.peek() == Some(&Tok::Minus) {
            self.at += 1;
            sign = -sign;
        }
        let coefficient = match self.peek() {
            Some(Tok::Num(_)) => {
                let c = self.real()?;
                self.expect(Tok::Star)?;
                c
            }
            _ => 1.0,
        };
        let proposition = self.duration()?;
        Ok(Term {
            coefficient: sign * coefficient,
            proposition,
        })
    }

    fn ldi(&mut self) -> Result<Ldi, SpecError> {
        let (lower, upper) = self.length_bounds()?;
        self.expect(Tok::Arrow)?;
        let mut terms = vec![self.term(1.0)?];
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.at += 1;
                    terms.push(self.term(1.0)?);
                }
                Some(Tok::Minus) => {
                    self.at += 1;
                    terms.push(self.term(-1.0)?);
                }
                _ => break,
            }
        }
        self.expect(Tok::Le)?;
        let bound = self.real()?;
        Ldi::new(lower, upper, terms, bound)
    }

    fn finish(&self) -> Result<(), SpecError> {
        match self.toks.get(self.at) {
            None => Ok(()),
            Some((t, col)) => Err(syntax(*col, format!("unexpected {t}"))),
        }
    }
}

fn parser(text: &str) -> Result<Parser, SpecError> {
    Ok(Parser {
        toks: tokenize(text)?,
        at: 0,
        end_col: text.chars().count() + 1,
    })
}

/// Strips `#` comments and joins lines so a spec file may span several lines.
fn strip_comments(text: &str) -> String {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn parse_ldi(text: &str) -> Result<Ldi, SpecError> {
    let mut p = parser(&strip_comments(text))?;
    let ldi = p.ldi()?;
    p.finish()?;
    Ok(ldi)
}

pub fn parse_pldi(text: &str) -> Result<Pldi, SpecError> {
    let mut p = parser(&strip_comments(text))?;
    p.expect(Tok::LBracket)?;
    let ldi = p.ldi()?;
    p.expect(Tok::RBracket)?;
    p.expect(Tok::Ge)?;
    let col = p.col();
    let lambda = p.real().map_err(|_| syntax(col, "expected probability threshold"))?;
    p.finish()?;
    Pldi::new(ldi, lambda)
}
