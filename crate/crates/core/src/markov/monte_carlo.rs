//! Simulation estimate of avoidance probabilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_patterns, product, MarkovChain, MarkovError, PatternAutomaton};
use crate::par::{map_range, Exec};
use crate::pldi::PathPattern;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    /// Fraction of runs avoiding every pattern within the horizon.
    pub estimate: f64,
    /// `3 * sqrt(p (1 - p) / samples)`.
    pub half_width: f64,
}

/// Simulates `samples` runs of `horizon` steps from each state. Each state
/// draws from its own ChaCha stream of `seed`, so results do not depend on
/// the execution mode. The estimate is biased upwards by the finite horizon.
pub fn monte_carlo_avoidance(
    chain: &MarkovChain,
    w: &[PathPattern],
    samples: u64,
    horizon: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<McEstimate>, MarkovError> {
    let (patterns, _) = check_patterns(chain, w)?;
    let pa = PatternAutomaton::new(chain.len(), &patterns);
    let prod = product(chain, &pa);

    // Once a run enters a product state with no path to a match it avoids
    // forever; compute that set by fixed point rather than reusing the
    // solver's classification.
    let n = prod.states.len();
    let mut live = prod.matched.clone();
    loop {
        let mut changed = false;
        for i in 0..n {
            if !live[i] && prod.edges[i].iter().any(|&(j, _)| live[j]) {
                live[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    Ok(map_range(exec, chain.len(), |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64);
        let mut avoided = 0u64;
        for _ in 0..samples {
            let mut i = prod.starts[s];
            let mut ok = true;
            for _ in 0..horizon {
                if prod.matched[i] {
                    ok = false;
                    break;
                }
                if !live[i] {
                    break;
                }
                let u: f64 = rng.random();
                let out = &prod.edges[i];
                let mut acc = 0.0;
                let mut next = out[out.len() - 1].0;
                for &(j, p) in out {
                    acc += p;
                    if u < acc {
                        next = j;
                        break;
                    }
                }
                i = next;
            }
            if ok && prod.matched[i] {
                ok = false;
            }
            if ok {
                avoided += 1;
            }
        }
        let p = avoided as f64 / samples as f64;
        McEstimate {
            estimate: p,
            half_width: 3.0 * (p * (1.0 - p) / samples as f64).sqrt(),
        }
    }))
}
