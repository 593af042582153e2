//! Approximate model checking of real-time automata against linear duration
//! invariants (LDIs), and of probabilistic real-time automata against
//! probabilistic LDIs.
//!
//! * [`automaton`] holds the models and their text format.
//! * [`spec`] parses LDI and PLDI formulas.
//! * [`semantics`] evaluates durations and runs the bounded exact oracle.
//! * [`ga`] searches for violating behaviors with a genetic algorithm.
//! * [`pldi`] and [`markov`] turn harvested counterexamples into a worst-case
//!   satisfaction probability.

pub mod automaton;
pub mod ga;
pub mod markov;
pub mod par;
pub mod pldi;
pub mod semantics;
pub mod spec;

pub use automaton::{
    parse_model, Interval, Model, ModelError, ParseError, ProbabilisticRealTimeAutomaton, RealTimeAutomaton, State,
    StateId, Transition, TransitionId,
};
pub use ga::{check_ldi, run_ga, GaConfig, GaError, GaReport, GaVerdict};
pub use markov::{avoidance_probability, build_chain, AvoidanceResult, MarkovChain, MarkovError};
pub use par::Exec;
pub use pldi::{check_pldi, PathPattern, PatternSet, PldiConfig, PldiError, PldiReport, PldiVerdict};
pub use semantics::oracle::{bounded_exact_check, OracleConfig, OracleResult, OracleVerdict};
pub use semantics::{Gene, Objective, SemanticsError, TimeStampedBehavior};
pub use spec::{parse_ldi, parse_pldi, Ldi, Pldi, SpecError, Term};
