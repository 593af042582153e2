//! Command-line front-end: argument parsing, command execution and reports.
//!
//! Every command produces a [`Report`]. The exit code is a function of the
//! report verdict alone; errors that prevent a report map to the sysexits
//! codes 64 (usage), 65 (bad input data), 66 (missing input) and 70
//! (internal failure).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ldicheck::ga::Sampler;
use ldicheck::markov::MarkovError;
use ldicheck::pldi::Generalization;
use ldicheck::semantics::satisfies_ldi;
use ldicheck::{
    bounded_exact_check, check_ldi, check_pldi, parse_ldi, parse_model, parse_pldi, Exec, GaConfig, GaError, Ldi,
    Model, Objective, OracleConfig, OracleVerdict, ParseError, PldiConfig, PldiError, RealTimeAutomaton,
    SemanticsError, SpecError, TimeStampedBehavior,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATA: u8 = 65;
pub const EXIT_NO_INPUT: u8 = 66;
pub const EXIT_SOFTWARE: u8 = 70;

pub const TOOL_VERSION: &str = concat!("ldicheck ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Spec { path: PathBuf, source: SpecError },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Read { .. } => EXIT_NO_INPUT,
            CliError::Model { .. } | CliError::Spec { .. } | CliError::Data(_) => EXIT_DATA,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Write { .. } | CliError::Internal(_) => EXIT_SOFTWARE,
        }
    }
}

impl From<SemanticsError> for CliError {
    fn from(e: SemanticsError) -> Self {
        match e {
            SemanticsError::UnknownProposition(_) => CliError::Data(e.to_string()),
            e => CliError::Internal(e.to_string()),
        }
    }
}

impl From<GaError> for CliError {
    fn from(e: GaError) -> Self {
        match e {
            GaError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            GaError::Semantics(e) => e.into(),
            GaError::NoTransitions => CliError::Data(e.to_string()),
            e => CliError::Internal(e.to_string()),
        }
    }
}

impl From<PldiError> for CliError {
    fn from(e: PldiError) -> Self {
        match e {
            PldiError::Ga(e) => e.into(),
            PldiError::Semantics(e) => e.into(),
            PldiError::Markov(e @ MarkovError::Singular { .. }) | PldiError::Markov(e @ MarkovError::Disagreement { .. }) => {
                CliError::Internal(e.to_string())
            }
            e => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ldicheck", version, about = "Check real-time automata against linear duration invariants")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a violation of an LDI with the genetic algorithm
    CheckLdi {
        model: PathBuf,
        spec: PathBuf,
        #[command(flatten)]
        ga: GaFlags,
        #[command(flatten)]
        out: OutputFlags,
    },
    /// Exhaustive worst case over all behaviors up to --max-len transitions
    Oracle {
        model: PathBuf,
        spec: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Refuse to enumerate more transition sequences than this
        #[arg(long, default_value_t = 20_000_000)]
        max_sequences: u64,
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        out: OutputFlags,
    },
    /// Worst-case probability that a probabilistic model satisfies an LDI
    CheckPldi {
        model: PathBuf,
        spec: PathBuf,
        #[command(flatten)]
        ga: GaFlags,
        /// Keep the minimized pattern set even when a common core exists
        #[arg(long)]
        no_generalize: bool,
        #[command(flatten)]
        out: OutputFlags,
    },
    /// Print random behaviors drawn by the GA initializer
    Sample {
        model: PathBuf,
        /// LDI whose premise the samples must meet; defaults to any length
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[command(flatten)]
        ga: GaFlags,
        #[command(flatten)]
        out: OutputFlags,
    },
}

#[derive(Debug, Clone, Args)]
pub struct GaFlags {
    #[arg(long, default_value_t = 90)]
    pub pop: usize,
    #[arg(long, default_value_t = 0.2)]
    pub pm: f64,
    #[arg(long, default_value_t = 0.5)]
    pub pd: f64,
    #[arg(long, default_value_t = 50)]
    pub gens: usize,
    /// Stop a run once its best fitness is unchanged for this many generations
    #[arg(long, default_value_t = 10)]
    pub settle: usize,
    #[arg(long, default_value_t = 0.1)]
    pub elite: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Longest behavior, in transitions
    #[arg(long, default_value_t = 8)]
    pub max_len: usize,
    /// Width used in place of an unbounded dwell interval when sampling
    #[arg(long)]
    pub time_cap: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Run everything on the calling thread
    #[arg(long)]
    pub sequential: bool,
}

impl Default for GaFlags {
    fn default() -> Self {
        GaFlags {
            pop: 90,
            pm: 0.2,
            pd: 0.5,
            gens: 50,
            settle: 10,
            elite: 0.1,
            seed: 0,
            runs: 10,
            max_len: 8,
            time_cap: None,
            tol: 1e-9,
            sequential: false,
        }
    }
}

impl GaFlags {
    pub fn config(&self) -> GaConfig {
        GaConfig {
            population_size: self.pop,
            p_mutation: self.pm,
            p_cut_splice: self.pd,
            max_generations: self.gens,
            settle_window: self.settle,
            seed: self.seed,
            max_genes: self.max_len,
            time_cap: self.time_cap,
            runs: self.runs,
            elite_fraction: self.elite,
            tol: self.tol,
            exec: exec(self.sequential),
            ..GaConfig::default()
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputFlags {
    /// Write the JSON report here (`-` for standard output)
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Replace the bound C of the LDI
    #[arg(long = "override-C", allow_negative_numbers = true)]
    pub override_c: Option<f64>,
}

fn exec(sequential: bool) -> Exec {
    if sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

/// Machine-readable outcome of one command. Field names are stable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool_version: String,
    pub command: Vec<String>,
    /// `sha256:` followed by the hex digest of the model file.
    pub model_digest: String,
    pub spec: Option<String>,
    pub seed: Option<u64>,
    pub verdict: String,
    pub exit_code: u8,
    pub numbers: Numbers,
    /// Behaviors violating the LDI; each one is re-checked before emission.
    pub counterexamples: Vec<Behavior>,
    /// Oracle worst-case behavior, violating or not.
    pub witness: Option<Behavior>,
    pub certificate: Option<Certificate>,
    pub patterns: Vec<String>,
    pub linear_system: Option<String>,
    pub aggregated_system: Option<String>,
    pub samples: Vec<Behavior>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Numbers {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_worst: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequences_examined: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generations_run: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<RunNumbers>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub probabilities: Vec<StateProbability>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_pattern_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minimized_pattern_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generalization: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunNumbers {
    pub seed: u64,
    pub best_value: f64,
    pub generations: usize,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateProbability {
    pub state: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Behavior {
    pub transitions: Vec<String>,
    pub dwells: Vec<f64>,
    pub length: f64,
    pub lf: f64,
}

impl Behavior {
    fn new(m: &RealTimeAutomaton, obj: &Objective<'_>, b: &TimeStampedBehavior) -> Self {
        Behavior {
            transitions: b.genes.iter().map(|g| m.transition_label(g.transition)).collect(),
            dwells: b.dwells(),
            length: b.length(),
            lf: obj.lf(b),
        }
    }

    fn render(&self) -> String {
        let parts: Vec<String> = self
            .transitions
            .iter()
            .zip(&self.dwells)
            .map(|(t, d)| format!("({t}, {d})"))
            .collect();
        format!("{}  length {} lf {}", parts.join(" "), self.length, self.lf)
    }
}

/// Proof that the LF is unbounded: stretching one dwell without limit keeps
/// the behavior inside the premise while the LF grows at `weight` per unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub transitions: Vec<String>,
    pub stretched_gene: usize,
    pub base_dwells: Vec<f64>,
    pub weight: f64,
}

/// A report together with the wall-clock time it took. Timing is kept out of
/// the JSON so identical command lines give identical reports.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub seconds: f64,
}

pub fn exit_code_for(verdict: &str) -> u8 {
    match verdict {
        "violated" | "unbounded" => 1,
        "vacuous" | "infeasible" => 2,
        _ => 0,
    }
}

struct Input {
    model: Model,
    digest: String,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn load_model(path: &Path) -> Result<Input, CliError> {
    let text = read(path)?;
    let model = parse_model(&text).map_err(|source| CliError::Model {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Input {
        model,
        digest: format!("sha256:{:x}", Sha256::digest(text.as_bytes())),
    })
}

fn load_ldi(path: &Path, override_c: Option<f64>) -> Result<Ldi, CliError> {
    let text = read(path)?;
    let d = parse_ldi(&text).map_err(|source| CliError::Spec {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(match override_c {
        Some(c) => d.with_bound(c),
        None => d,
    })
}

fn report(input: &Input, spec: Option<String>, seed: Option<u64>, verdict: &str) -> Report {
    Report {
        tool_version: TOOL_VERSION.to_string(),
        command: Vec::new(),
        model_digest: input.digest.clone(),
        spec,
        seed,
        verdict: verdict.to_string(),
        exit_code: exit_code_for(verdict),
        numbers: Numbers::default(),
        counterexamples: Vec::new(),
        witness: None,
        certificate: None,
        patterns: Vec::new(),
        linear_system: None,
        aggregated_system: None,
        samples: Vec::new(),
    }
}

/// Renders counterexamples after confirming that each is a behavior of `m`
/// that violates `d`.
fn verified(m: &RealTimeAutomaton, d: &Ldi, ces: &[TimeStampedBehavior]) -> Result<Vec<Behavior>, CliError> {
    let obj = Objective::new(m, d)?;
    ces.iter()
        .map(|b| {
            b.validate(m)?;
            if satisfies_ldi(m, d, b)? {
                return Err(CliError::Internal(format!(
                    "counterexample {} does not re-verify",
                    b.render(m)
                )));
            }
            Ok(Behavior::new(m, &obj, b))
        })
        .collect()
}

fn timed(f: impl FnOnce() -> Result<Report, CliError>) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let report = f()?;
    Ok(Outcome {
        report,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn cmd_check_ldi(model: &Path, spec: &Path, ga: &GaFlags, override_c: Option<f64>) -> Result<Outcome, CliError> {
    timed(|| {
        let input = load_model(model)?;
        let d = load_ldi(spec, override_c)?;
        let m = input.model.to_plain();
        let cfg = ga.config();
        let r = match check_ldi(&m, &d, &cfg) {
            Ok(r) => r,
            Err(GaError::Infeasible { .. }) => {
                let mut rep = report(&input, Some(d.to_string()), Some(cfg.seed), "infeasible");
                rep.numbers.bound = Some(d.bound());
                return Ok(rep);
            }
            Err(e) => return Err(e.into()),
        };
        let mut rep = report(&input, Some(d.to_string()), Some(r.seed), r.verdict.as_str());
        rep.numbers = Numbers {
            bound: Some(d.bound()),
            best_value: Some(r.best_value),
            max_len: Some(cfg.max_genes),
            generations_run: Some(r.generations_run),
            runs: r
                .runs
                .iter()
                .map(|s| RunNumbers {
                    seed: s.seed,
                    best_value: s.best_value,
                    generations: s.generations_run,
                    violated: s.violated,
                })
                .collect(),
            ..Numbers::default()
        };
        rep.counterexamples = verified(&m, &d, &r.counterexamples)?;
        Ok(rep)
    })
}

pub struct OracleFlags {
    pub max_len: usize,
    pub tol: f64,
    pub max_sequences: u64,
    pub sequential: bool,
}

impl Default for OracleFlags {
    fn default() -> Self {
        OracleFlags {
            max_len: 8,
            tol: 1e-9,
            max_sequences: OracleConfig::default().max_sequences,
            sequential: false,
        }
    }
}

pub fn cmd_oracle(model: &Path, spec: &Path, flags: &OracleFlags, override_c: Option<f64>) -> Result<Outcome, CliError> {
    timed(|| {
        let input = load_model(model)?;
        let d = load_ldi(spec, override_c)?;
        let m = input.model.to_plain();
        let cfg = OracleConfig {
            max_len: flags.max_len,
            max_sequences: flags.max_sequences,
            tol: flags.tol,
            exec: exec(flags.sequential),
        };
        let r = bounded_exact_check(&m, &d, &cfg).map_err(|e| match e {
            SemanticsError::ResourceLimit { .. } => CliError::Usage(e.to_string()),
            e => e.into(),
        })?;
        let obj = Objective::new(&m, &d)?;
        let mut rep = report(&input, Some(d.to_string()), None, r.verdict.as_str());
        rep.numbers = Numbers {
            bound: Some(d.bound()),
            oracle_worst: r.worst_value,
            max_len: Some(r.max_len),
            sequences_examined: Some(r.sequences_examined),
            ..Numbers::default()
        };
        if let Some(w) = &r.witness {
            w.validate(&m)?;
            rep.witness = Some(Behavior::new(&m, &obj, w));
            if matches!(r.verdict, OracleVerdict::Violated | OracleVerdict::Unbounded) {
                rep.counterexamples = verified(&m, &d, std::slice::from_ref(w))?;
            }
        }
        rep.certificate = r.certificate.as_ref().map(|c| Certificate {
            transitions: c.sequence.iter().map(|&t| m.transition_label(t)).collect(),
            stretched_gene: c.gene,
            base_dwells: c.base_dwells.clone(),
            weight: c.weight,
        });
        Ok(rep)
    })
}

pub fn cmd_check_pldi(
    model: &Path,
    spec: &Path,
    ga: &GaFlags,
    generalize: bool,
    override_c: Option<f64>,
) -> Result<Outcome, CliError> {
    timed(|| {
        let input = load_model(model)?;
        let Model::Probabilistic(pm) = &input.model else {
            return Err(CliError::Data(format!(
                "{}: check-pldi needs a probabilistic model (with `prob` transitions)",
                model.display()
            )));
        };
        let text = read(spec)?;
        let mut p = parse_pldi(&text).map_err(|source| CliError::Spec {
            path: spec.to_path_buf(),
            source,
        })?;
        if let Some(c) = override_c {
            p = ldicheck::Pldi::new(p.ldi().with_bound(c), p.lambda()).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        let cfg = PldiConfig {
            ga: ga.config(),
            max_len: ga.max_len,
            generalize,
            ..PldiConfig::default()
        };
        let r = match check_pldi(pm, &p, &cfg) {
            Ok(r) => r,
            Err(PldiError::Ga(GaError::Infeasible { .. })) => {
                return Ok(report(&input, Some(p.to_string()), Some(cfg.ga.seed), "infeasible"));
            }
            Err(e) => return Err(e.into()),
        };
        let plain = pm.strip_probabilities();
        let names: Vec<String> = pm.states().iter().map(|s| s.name.clone()).collect();
        let mut rep = report(&input, Some(p.to_string()), Some(r.ga.seed), r.verdict.as_str());
        rep.numbers = Numbers {
            bound: Some(p.ldi().bound()),
            best_value: Some(r.ga.best_value),
            max_len: Some(cfg.max_len),
            generations_run: Some(r.ga.generations_run),
            probabilities: names
                .iter()
                .zip(&r.per_state_probability)
                .map(|(n, &probability)| StateProbability {
                    state: n.clone(),
                    probability,
                })
                .collect(),
            min_probability: Some(r.min_probability),
            lambda: Some(r.lambda),
            counterexample_count: Some(r.counterexample_count),
            raw_pattern_count: Some(r.raw_pattern_count),
            minimized_pattern_count: Some(r.minimized_pattern_count),
            generalization: Some(match &r.generalization {
                Generalization::Disabled => "disabled".to_string(),
                Generalization::NoCore => "no-core".to_string(),
                Generalization::Adopted(c) => format!("adopted {}", c.render(&names)),
                Generalization::Rejected(c) => format!("rejected {}", c.render(&names)),
                Generalization::Skipped(c) => format!("skipped {}", c.render(&names)),
            }),
            solver_difference: r.avoidance.as_ref().map(|a| a.max_difference),
            ..Numbers::default()
        };
        rep.patterns = r.pattern_set.patterns().iter().map(|w| w.render(&names)).collect();
        rep.linear_system = r.avoidance.as_ref().map(|a| a.system.to_string());
        rep.aggregated_system = r.avoidance.as_ref().map(|a| a.aggregated.to_string());
        rep.counterexamples = verified(&plain, p.ldi(), &r.counterexamples)?;
        Ok(rep)
    })
}

pub fn cmd_sample(model: &Path, spec: Option<&Path>, count: usize, ga: &GaFlags) -> Result<Outcome, CliError> {
    timed(|| {
        let input = load_model(model)?;
        let m = input.model.to_plain();
        let d = match spec {
            Some(path) => load_ldi(path, None)?,
            None => Ldi::new(0.0, f64::INFINITY, Vec::new(), 0.0).map_err(|e| CliError::Internal(e.to_string()))?,
        };
        let cfg = ga.config();
        cfg.validate()?;
        let obj = Objective::new(&m, &d)?.with_tolerance(cfg.tol);
        let mut sampler = Sampler::new(&obj, &cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut samples = Vec::with_capacity(count);
        for _ in 0..count {
            match sampler.sample(&mut rng) {
                Ok(b) => samples.push(Behavior::new(&m, &obj, &b)),
                Err(GaError::Infeasible { .. }) => {
                    let mut rep = report(&input, Some(d.to_string()), Some(cfg.seed), "infeasible");
                    rep.samples = samples;
                    return Ok(rep);
                }
                Err(e) => return Err(e.into()),
            }
        }
        let mut rep = report(&input, Some(d.to_string()), Some(cfg.seed), "sampled");
        rep.numbers.max_len = Some(cfg.max_genes);
        rep.samples = samples;
        Ok(rep)
    })
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-readable rendering of the same numbers as the JSON.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let n = &self.numbers;
        let _ = writeln!(out, "verdict: {}", self.verdict);
        if let Some(s) = &self.spec {
            let _ = writeln!(out, "spec: {s}");
        }
        let _ = writeln!(out, "model: {}", self.model_digest);
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed: {seed}");
        }
        let line = |out: &mut String, k: &str, v: Option<String>| {
            if let Some(v) = v {
                let _ = writeln!(out, "{k}: {v}");
            }
        };
        line(&mut out, "bound", n.bound.map(|v| v.to_string()));
        line(&mut out, "best value", n.best_value.map(|v| v.to_string()));
        line(&mut out, "oracle worst", n.oracle_worst.map(|v| v.to_string()));
        line(&mut out, "max len", n.max_len.map(|v| v.to_string()));
        line(&mut out, "sequences examined", n.sequences_examined.map(|v| v.to_string()));
        line(&mut out, "generations", n.generations_run.map(|v| v.to_string()));
        for r in &n.runs {
            let _ = writeln!(
                out,
                "  run seed {}: best {} after {} generations{}",
                r.seed,
                r.best_value,
                r.generations,
                if r.violated { " (violated)" } else { "" }
            );
        }
        for p in &n.probabilities {
            let _ = writeln!(out, "P({}) = {}", p.state, p.probability);
        }
        line(&mut out, "min probability", n.min_probability.map(|v| v.to_string()));
        line(&mut out, "lambda", n.lambda.map(|v| v.to_string()));
        line(&mut out, "counterexamples harvested", n.counterexample_count.map(|v| v.to_string()));
        line(&mut out, "distinct state sequences", n.raw_pattern_count.map(|v| v.to_string()));
        line(&mut out, "after minimization", n.minimized_pattern_count.map(|v| v.to_string()));
        line(&mut out, "generalization", n.generalization.clone());
        line(&mut out, "solver difference", n.solver_difference.map(|v| v.to_string()));
        if !self.patterns.is_empty() {
            let _ = writeln!(out, "patterns:");
            for p in &self.patterns {
                let _ = writeln!(out, "  {p}");
            }
        }
        if let Some(s) = &self.aggregated_system {
            let _ = writeln!(out, "system over model states:");
            for l in s.lines() {
                let _ = writeln!(out, "  {l}");
            }
        }
        if let Some(w) = &self.witness {
            let _ = writeln!(out, "witness: {}", w.render());
        }
        if let Some(c) = &self.certificate {
            let _ = writeln!(
                out,
                "unbounded: stretching gene {} of {} raises LF by {} per time unit",
                c.stretched_gene,
                c.transitions.join(" "),
                c.weight
            );
        }
        if !self.counterexamples.is_empty() {
            let _ = writeln!(out, "counterexamples: {}", self.counterexamples.len());
            for b in self.counterexamples.iter().take(10) {
                let _ = writeln!(out, "  {}", b.render());
            }
            if self.counterexamples.len() > 10 {
                let _ = writeln!(out, "  ... ({} more in the JSON report)", self.counterexamples.len() - 10);
            }
        }
        for b in &self.samples {
            let _ = writeln!(out, "{}", b.render());
        }
        out
    }
}

/// Parses `args` (including the program name), runs the command, prints the
/// report and returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let (outcome, json) = match execute(cli.command) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("ldicheck: {e}");
            return e.exit_code();
        }
    };
    let mut report = outcome.report;
    report.command = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match json.as_deref() {
        Some(p) if p == Path::new("-") => print!("{}", report.to_json()),
        other => {
            print!("{}", report.to_text());
            println!("time: {:.3} s", outcome.seconds);
            if let Some(p) = other {
                if let Err(source) = fs::write(p, report.to_json()) {
                    let e = CliError::Write {
                        path: p.to_path_buf(),
                        source,
                    };
                    eprintln!("ldicheck: {e}");
                    return e.exit_code();
                }
            }
        }
    }
    report.exit_code
}

fn execute(command: Command) -> Result<(Outcome, Option<PathBuf>), CliError> {
    match command {
        Command::CheckLdi { model, spec, ga, out } => {
            Ok((cmd_check_ldi(&model, &spec, &ga, out.override_c)?, out.json))
        }
        Command::Oracle {
            model,
            spec,
            max_len,
            tol,
            max_sequences,
            sequential,
            out,
        } => {
            let flags = OracleFlags {
                max_len,
                tol,
                max_sequences,
                sequential,
            };
            Ok((cmd_oracle(&model, &spec, &flags, out.override_c)?, out.json))
        }
        Command::CheckPldi {
            model,
            spec,
            ga,
            no_generalize,
            out,
        } => Ok((
            cmd_check_pldi(&model, &spec, &ga, !no_generalize, out.override_c)?,
            out.json,
        )),
        Command::Sample {
            model,
            spec,
            count,
            ga,
            out,
        } => {
            if out.override_c.is_some() {
                return Err(CliError::Usage("sample does not take --override-C".into()));
            }
            Ok((cmd_sample(&model, spec.as_deref(), count, &ga)?, out.json))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_follows_verdict() {
        for (v, c) in [
            ("satisfied", 0),
            ("no-violation-found", 0),
            ("satisfied-approximately", 0),
            ("sampled", 0),
            ("violated", 1),
            ("unbounded", 1),
            ("vacuous", 2),
            ("infeasible", 2),
        ] {
            assert_eq!(exit_code_for(v), c, "{v}");
        }
    }

    #[test]
    fn flags_map_onto_config() {
        let cfg = GaFlags {
            pop: 100,
            max_len: 5,
            sequential: true,
            ..GaFlags::default()
        }
        .config();
        assert_eq!(cfg.population_size, 100);
        assert_eq!(cfg.max_genes, 5);
        assert_eq!(cfg.exec, Exec::Sequential);
        let d = GaFlags::default().config();
        assert_eq!((d.population_size, d.p_mutation, d.p_cut_splice), (90, 0.2, 0.5));
        assert_eq!((d.max_generations, d.runs, d.max_genes), (50, 10, 8));
    }

    #[test]
    fn defaults_agree_with_clap() {
        let cli = Cli::try_parse_from(["ldicheck", "check-ldi", "m", "s"]).unwrap();
        let Command::CheckLdi { ga, .. } = cli.command else {
            panic!("wrong subcommand");
        };
        assert_eq!(ga.config(), GaFlags::default().config());
    }

    #[test]
    fn negative_override_parses() {
        let cli = Cli::try_parse_from(["ldicheck", "oracle", "m", "s", "--override-C", "-4"]).unwrap();
        let Command::Oracle { out, .. } = cli.command else {
            panic!("wrong subcommand");
        };
        assert_eq!(out.override_c, Some(-4.0));
    }
}
