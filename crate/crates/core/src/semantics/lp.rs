//! Box-constrained linear program with a single coupling constraint:
//!
//! maximize `sum w_j t_j` subject to `lo_j <= t_j <= hi_j` and
//! `lower <= sum t_j <= upper`.
//!
//! Some optimum has at most one coordinate strictly inside its box, so a
//! greedy pass over coordinates sorted by weight finds it.

/// Sequential left-to-right sum. Every length computation in the crate uses
/// this order so that boundary comparisons agree bit for bit.
pub(crate) fn total(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, |acc, x| acc + x)
}

fn ulp(x: f64) -> f64 {
    let x = x.abs();
    x.next_up() - x
}

/// Result of maximizing LF over the dwell times of one transition sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceOptimum {
    /// No dwell assignment puts the total length in `[lower, upper]`.
    Infeasible,
    Finite { value: f64, dwells: Vec<f64> },
    /// `dwells` is feasible and LF grows without bound as `dwells[gene]` grows.
    Unbounded { gene: usize, dwells: Vec<f64> },
}

impl SequenceOptimum {
    pub fn value(&self) -> Option<f64> {
        match self {
            SequenceOptimum::Infeasible => None,
            SequenceOptimum::Finite { value, .. } => Some(*value),
            SequenceOptimum::Unbounded { .. } => Some(f64::INFINITY),
        }
    }
}

/// Raises coordinates in `order` until the sum reaches `target`.
/// Returns false if the boxes cannot reach it.
fn raise_to(t: &mut [f64], hi: &[f64], order: &[usize], target: f64) -> bool {
    let mut last = None;
    for &j in order {
        let sum = total(t.iter().copied());
        if sum >= target {
            break;
        }
        let step = (target - sum).min(hi[j] - t[j]);
        if step > 0.0 {
            t[j] += step;
            last = Some(j);
        }
    }
    // rounding can leave the sum a few ulps short of the target
    if let Some(j) = last {
        for _ in 0..16 {
            let sum = total(t.iter().copied());
            if sum >= target || t[j] >= hi[j] {
                break;
            }
            t[j] = (t[j] + (target - sum).max(ulp(target))).min(hi[j]);
        }
    }
    total(t.iter().copied()) >= target
}

/// Lowers coordinates in `order` until the sum drops to `target`.
fn lower_to(t: &mut [f64], lo: &[f64], order: &[usize], target: f64) -> bool {
    let mut last = None;
    for &j in order {
        let sum = total(t.iter().copied());
        if sum <= target {
            break;
        }
        let step = (sum - target).min(t[j] - lo[j]);
        if step > 0.0 {
            t[j] -= step;
            last = Some(j);
        }
    }
    if let Some(j) = last {
        for _ in 0..16 {
            let sum = total(t.iter().copied());
            if sum <= target || t[j] <= lo[j] {
                break;
            }
            t[j] = (t[j] - (sum - target).max(ulp(target))).max(lo[j]);
        }
    }
    total(t.iter().copied()) <= target
}

/// Moves the total of `t` into `[lower, upper]`, touching coordinates in
/// `order`. Used by the sampler with a random order.
pub(crate) fn reallocate(
    t: &mut [f64],
    lo: &[f64],
    hi: &[f64],
    order: &[usize],
    lower: f64,
    upper: f64,
) -> bool {
    let sum = total(t.iter().copied());
    if sum < lower {
        raise_to(t, hi, order, lower) && total(t.iter().copied()) <= upper
    } else if sum > upper {
        lower_to(t, lo, order, upper) && total(t.iter().copied()) >= lower
    } else {
        true
    }
}

/// Greedy optimum of the single-coupling LP.
pub(crate) fn maximize(w: &[f64], lo: &[f64], hi: &[f64], lower: f64, upper: f64) -> SequenceOptimum {
    debug_assert!(w.len() == lo.len() && lo.len() == hi.len());
    if total(lo.iter().copied()) > upper || total(hi.iter().copied()) < lower {
        return SequenceOptimum::Infeasible;
    }
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));

    let mut t = lo.to_vec();
    if !raise_to(&mut t, hi, &order, lower) {
        return SequenceOptimum::Infeasible;
    }
    if upper.is_infinite() {
        if let Some(&gene) = order.iter().find(|&&j| w[j] > 0.0 && hi[j].is_infinite()) {
            return SequenceOptimum::Unbounded { gene, dwells: t };
        }
    }
    let mut last = None;
    for &j in order.iter().filter(|&&j| w[j] > 0.0) {
        let slack = upper - total(t.iter().copied());
        if slack <= 0.0 {
            break;
        }
        let room = (hi[j] - t[j]).min(slack);
        if room <= 0.0 {
            continue;
        }
        t[j] += room;
        last = Some(j);
    }
    if let Some(j) = last {
        for _ in 0..16 {
            let sum = total(t.iter().copied());
            if sum <= upper {
                break;
            }
            t[j] = (t[j] - (sum - upper).max(ulp(upper))).max(lo[j]);
        }
    }
    let value = total(w.iter().zip(&t).map(|(w, t)| w * t));
    SequenceOptimum::Finite { value, dwells: t }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn gas_burner_alternating_sequence() {
        // rho2 rho1 rho2 rho1 rho2: Leak weight 19 on [0,1], NLeak weight -1 on [30,inf]
        let w = [19.0, -1.0, 19.0, -1.0, 19.0];
        let lo = [0.0, 30.0, 0.0, 30.0, 0.0];
        let hi = [1.0, INF, 1.0, INF, 1.0];
        match maximize(&w, &lo, &hi, 60.0, INF) {
            SequenceOptimum::Finite { value, dwells } => {
                assert_eq!(value, -3.0);
                assert_eq!(dwells, vec![1.0, 30.0, 1.0, 30.0, 1.0]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn length_constraint_forces_negative_weight() {
        let w = [19.0, -1.0];
        let lo = [0.0, 30.0];
        let hi = [1.0, INF];
        match maximize(&w, &lo, &hi, 60.0, INF) {
            SequenceOptimum::Finite { value, dwells } => {
                assert_eq!(dwells, vec![1.0, 59.0]);
                assert_eq!(value, -40.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_weights() {
        let r = maximize(&[0.0, 0.0], &[1.0, 2.0], &[3.0, 4.0], 0.0, 100.0);
        assert_eq!(r.value(), Some(0.0));
    }

    #[test]
    fn infeasible_and_unbounded() {
        assert_eq!(maximize(&[1.0], &[0.0], &[1.0], 60.0, INF), SequenceOptimum::Infeasible);
        assert_eq!(maximize(&[1.0], &[5.0], &[6.0], 0.0, 4.0), SequenceOptimum::Infeasible);
        match maximize(&[2.0, -1.0], &[1.0, 0.0], &[INF, 1.0], 0.0, INF) {
            SequenceOptimum::Unbounded { gene, .. } => assert_eq!(gene, 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn finite_upper_bound_caps_positive_weights() {
        // total must stay <= 10: raise the heavier coordinate first
        match maximize(&[1.0, 3.0], &[0.0, 0.0], &[8.0, 8.0], 0.0, 10.0) {
            SequenceOptimum::Finite { value, dwells } => {
                assert_eq!(dwells, vec![2.0, 8.0]);
                assert_eq!(value, 26.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rounding_never_leaves_total_short() {
        let lo = [0.1, 0.2, 0.7];
        let hi = [10.0, 10.0, 10.0];
        for target in [1.3, 2.9, 3.3, 7.7, 19.1] {
            match maximize(&[-1.0, -2.0, -3.0], &lo, &hi, target, INF) {
                SequenceOptimum::Finite { dwells, .. } => {
                    assert!(total(dwells.iter().copied()) >= target)
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn reallocate_both_directions() {
        let lo = [0.0, 0.0];
        let hi = [5.0, 5.0];
        let mut t = [1.0, 1.0];
        assert!(reallocate(&mut t, &lo, &hi, &[1, 0], 7.0, 8.0));
        assert_eq!(t, [2.0, 5.0]);
        let mut t = [5.0, 5.0];
        assert!(reallocate(&mut t, &lo, &hi, &[0, 1], 0.0, 3.0));
        assert_eq!(t, [0.0, 3.0]);
        let mut t = [1.0, 1.0];
        assert!(!reallocate(&mut t, &lo, &hi, &[0, 1], 11.0, 12.0));
    }
}
