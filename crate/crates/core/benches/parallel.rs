//! Sequential versus parallel execution of the data-parallel kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ldicheck::markov::monte_carlo_avoidance;
use ldicheck::{
    bounded_exact_check, build_chain, check_ldi, parse_ldi, parse_model, Exec, GaConfig, Model, OracleConfig,
    PathPattern, ProbabilisticRealTimeAutomaton, StateId,
};

const MODEL: &str = "\
state s1 labels NLeak
state s2 labels Leak
dwell s1 [30, inf]
dwell s2 [0, 1]
trans s1 -> s1 prob 0.9
trans s1 -> s2 prob 0.1
trans s2 -> s1 prob 0.8
trans s2 -> s2 prob 0.2
";
const LDI: &str = "ell >= 60 -> 19*int(Leak) - 1*int(NLeak) <= 0";

fn model() -> ProbabilisticRealTimeAutomaton {
    match parse_model(MODEL).unwrap() {
        Model::Probabilistic(m) => m,
        Model::Plain(_) => unreachable!(),
    }
}

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn oracle(c: &mut Criterion) {
    let m = model().strip_probabilities();
    let d = parse_ldi(LDI).unwrap();
    let mut g = c.benchmark_group("oracle");
    for (name, exec) in MODES {
        let cfg = OracleConfig {
            max_len: 12,
            exec,
            ..OracleConfig::default()
        };
        g.bench_with_input(BenchmarkId::new(name, 12), &cfg, |b, cfg| {
            b.iter(|| black_box(bounded_exact_check(&m, &d, cfg).unwrap()))
        });
    }
    g.finish();
}

fn ga_runs(c: &mut Criterion) {
    let m = model().strip_probabilities();
    let d = parse_ldi(LDI).unwrap().with_bound(1e6);
    let mut g = c.benchmark_group("check_ldi");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = GaConfig {
            runs: 10,
            seed: 1,
            settle_window: 50,
            exec,
            ..GaConfig::default()
        };
        g.bench_with_input(BenchmarkId::new(name, 10), &cfg, |b, cfg| {
            b.iter(|| black_box(check_ldi(&m, &d, cfg).unwrap()))
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let chain = build_chain(&model());
    let w = [PathPattern::new(vec![StateId(1); 3]).unwrap()];
    let mut g = c.benchmark_group("monte_carlo");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, 10_000), |b| {
            b.iter(|| black_box(monte_carlo_avoidance(&chain, &w, 10_000, 10_000, 3, exec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, oracle, ga_runs, monte_carlo);
criterion_main!(benches);
