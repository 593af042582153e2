use super::*;
use crate::automaton::fixtures::{gas_burner, prob_gas_burner};
use crate::semantics::tests::GAS_LDI;
use crate::spec::{parse_ldi, parse_pldi};

fn pat(states: &[usize]) -> PathPattern {
    PathPattern::new(states.iter().map(|&s| StateId(s)).collect()).unwrap()
}

fn set(ps: &[&[usize]]) -> BTreeSet<PathPattern> {
    ps.iter().map(|p| pat(p)).collect()
}

const S1: usize = 0;
const S2: usize = 1;

#[test]
fn patterns_need_two_states() {
    assert_eq!(PathPattern::new(vec![StateId(0)]), Err(PldiError::ShortPattern));
    assert!(pat(&[S1, S2, S2, S2, S1]).contains(&pat(&[S2, S2, S2])));
    assert!(!pat(&[S2, S2, S1, S2]).contains(&pat(&[S2, S2, S2])));
}

#[test]
fn minimization_examples() {
    let w = minimize_patterns(&set(&[&[S1, S2, S2, S2, S1], &[S2, S2, S2]]));
    assert_eq!(w.patterns(), &[pat(&[S2, S2, S2])]);

    let four: &[&[usize]] = &[
        &[S2, S2, S2, S1, S1],
        &[S2, S2, S2, S1, S2],
        &[S1, S2, S2, S2, S1],
        &[S1, S2, S2, S2, S2],
    ];
    assert_eq!(minimize_patterns(&set(four)).len(), 4);
    assert_eq!(minimize_patterns(&set(&[&[S1, S2]])).patterns(), &[pat(&[S1, S2])]);
    assert!(minimize_patterns(&BTreeSet::new()).is_empty());
}

#[test]
fn minimized_sets_are_antichains() {
    let w0 = set(&[&[0, 1], &[0, 1, 2], &[2, 0, 1, 1], &[1, 2, 1], &[2, 1], &[1, 2, 1, 0], &[2, 2]]);
    let w = minimize_patterns(&w0);
    for a in w.patterns() {
        for b in w.patterns() {
            assert!(a == b || !a.contains(b), "{a:?} contains {b:?}");
        }
    }
    assert_eq!(w.patterns(), &[pat(&[0, 1]), pat(&[2, 1]), pat(&[2, 2])]);
}

#[test]
fn stripping_forgets_time() {
    let m = gas_burner();
    let a = TimeStampedBehavior::from_parts(&[TransitionId(1), TransitionId(0)], &[1.0, 59.0]);
    let b = TimeStampedBehavior::from_parts(&[TransitionId(1), TransitionId(0)], &[0.5, 70.0]);
    let w = strip_and_dedupe(&m, &[a, b]);
    assert_eq!(w.into_iter().collect::<Vec<_>>(), vec![pat(&[S2, S1, S2])]);
    assert!(strip_and_dedupe(&m, &[]).is_empty());
}

#[test]
fn core_of_the_four_paths() {
    let four: &[&[usize]] = &[
        &[S2, S2, S2, S1, S1],
        &[S2, S2, S2, S1, S2],
        &[S1, S2, S2, S2, S1],
        &[S1, S2, S2, S2, S2],
    ];
    let w = minimize_patterns(&set(four));
    let core = common_core(&w).unwrap();
    assert_eq!(core, pat(&[S2, S2, S2]));
    assert_eq!(common_core(&minimize_patterns(&set(&[&[S1, S2], &[S2, S2]]))), None);
}

#[test]
fn core_check() {
    let m = prob_gas_burner().strip_probabilities();
    let d = parse_ldi(GAS_LDI).unwrap();
    let obj = Objective::new(&m, &d).unwrap();
    // three leaks then a long stretch without leak balance out exactly
    assert_eq!(core_forces_violation(&obj, &pat(&[S2, S2, S2]), 8, 1_000_000), Some(false));
    let strict = d.with_bound(-100.0);
    let obj = Objective::new(&m, &strict).unwrap();
    assert_eq!(core_forces_violation(&obj, &pat(&[S1, S2]), 8, 1_000_000), Some(true));
    assert_eq!(core_forces_violation(&obj, &pat(&[S1, S2]), 8, 10), None);
}

fn pldi_cfg() -> PldiConfig {
    PldiConfig {
        ga: GaConfig {
            runs: 5,
            seed: 3,
            ..GaConfig::default()
        },
        max_len: 8,
        ..PldiConfig::default()
    }
}

#[test]
fn gas_burner_dependability_is_zero() {
    let m = prob_gas_burner();
    let p = parse_pldi(&format!("[ {GAS_LDI} ] >= 0.95")).unwrap();
    let r = check_pldi(&m, &p, &pldi_cfg()).unwrap();
    assert_eq!(r.verdict, PldiVerdict::Violated);
    assert!(r.min_probability.abs() < 1e-9);
    assert!(r.per_state_probability.iter().all(|v| v.abs() < 1e-9));
    assert!(r.counterexample_count > 0);
    assert!(r.raw_pattern_count >= r.minimized_pattern_count);

    let plain = m.strip_probabilities();
    let obj = Objective::new(&plain, p.ldi()).unwrap();
    for b in &r.counterexamples {
        b.validate(&plain).unwrap();
        assert!(obj.violates(b));
    }
    if !matches!(r.generalization, Generalization::Adopted(_)) {
        for w in r.pattern_set.patterns() {
            assert!(r.counterexamples.iter().any(|b| b.visited_states(&plain) == w.states()));
        }
    }
}

#[test]
fn zero_threshold_is_met() {
    let m = prob_gas_burner();
    let p = parse_pldi(&format!("[ {GAS_LDI} ] >= 0")).unwrap();
    let r = check_pldi(&m, &p, &pldi_cfg()).unwrap();
    assert_eq!(r.verdict, PldiVerdict::SatisfiedApproximately);
    assert!(r.min_probability.abs() < 1e-9);
}

#[test]
fn harmless_requirement() {
    let m = prob_gas_burner();
    let p = parse_pldi("[ ell >= 60 -> 19*int(Leak) - 1*int(NLeak) <= 1000000 ] >= 1").unwrap();
    let r = check_pldi(&m, &p, &pldi_cfg()).unwrap();
    assert_eq!(r.verdict, PldiVerdict::SatisfiedApproximately);
    assert_eq!(r.per_state_probability, vec![1.0, 1.0]);
    assert_eq!(r.counterexample_count, 0);
    assert!(r.pattern_set.is_empty());
}

#[test]
fn harvest_is_deterministic() {
    let m = prob_gas_burner();
    let d = parse_ldi(GAS_LDI).unwrap();
    let cfg = GaConfig { runs: 2, ..GaConfig::default() };
    let (a, _) = collect_counterexamples(&m, &d, &cfg, 8).unwrap();
    let (b, _) = collect_counterexamples(&m, &d, &cfg, 8).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|b| b.len() <= 8));
    let (none, _) = collect_counterexamples(&m, &d.with_bound(1e6), &cfg, 8).unwrap();
    assert!(none.is_empty());
}
