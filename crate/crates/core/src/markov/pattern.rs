//! Multi-pattern matcher over chain-state sequences with failure links.
//!
//! The trie is compiled into a full transition table so that stepping is a
//! single lookup. Node 0 is the root.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct PatternAutomaton {
    alphabet: usize,
    delta: Vec<usize>,
    accepting: Vec<bool>,
    /// Symbols spelled from the root to each node.
    spelling: Vec<Vec<usize>>,
}

impl PatternAutomaton {
    pub const ROOT: usize = 0;

    pub fn new(alphabet: usize, patterns: &[Vec<usize>]) -> Self {
        let mut children: Vec<Vec<Option<usize>>> = vec![vec![None; alphabet]];
        let mut accepting = vec![false];
        let mut spelling = vec![Vec::new()];
        for p in patterns {
            let mut q = 0;
            for &a in p {
                q = match children[q][a] {
                    Some(c) => c,
                    None => {
                        let c = children.len();
                        children.push(vec![None; alphabet]);
                        accepting.push(false);
                        let mut s = spelling[q].clone();
                        s.push(a);
                        spelling.push(s);
                        children[q][a] = Some(c);
                        c
                    }
                };
            }
            accepting[q] = true;
        }

        let n = children.len();
        let mut delta = vec![0usize; n * alphabet];
        let mut fail = vec![0usize; n];
        let mut queue = VecDeque::new();
        for a in 0..alphabet {
            if let Some(c) = children[0][a] {
                delta[a] = c;
                queue.push_back(c);
            }
        }
        while let Some(q) = queue.pop_front() {
            accepting[q] |= accepting[fail[q]];
            for a in 0..alphabet {
                match children[q][a] {
                    Some(c) => {
                        fail[c] = delta[fail[q] * alphabet + a];
                        delta[q * alphabet + a] = c;
                        queue.push_back(c);
                    }
                    None => delta[q * alphabet + a] = delta[fail[q] * alphabet + a],
                }
            }
        }
        PatternAutomaton {
            alphabet,
            delta,
            accepting,
            spelling,
        }
    }

    pub fn len(&self) -> usize {
        self.accepting.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepting.is_empty()
    }

    pub fn step(&self, q: usize, symbol: usize) -> usize {
        self.delta[q * self.alphabet + symbol]
    }

    /// Some pattern ends at the last symbol read.
    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn spelling(&self, q: usize) -> &[usize] {
        &self.spelling[q]
    }

    /// Whether any pattern occurs in `word`.
    pub fn matches(&self, word: &[usize]) -> bool {
        let mut q = Self::ROOT;
        word.iter().any(|&a| {
            q = self.step(q, a);
            self.is_accepting(q)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(patterns: &[Vec<usize>], word: &[usize]) -> bool {
        patterns.iter().any(|p| word.windows(p.len()).any(|w| w == p.as_slice()))
    }

    #[test]
    fn overlapping_patterns() {
        let a = PatternAutomaton::new(2, &[vec![1, 1, 1], vec![0, 1, 0]]);
        assert!(a.matches(&[0, 1, 1, 1]));
        assert!(a.matches(&[1, 0, 1, 0]));
        assert!(!a.matches(&[1, 1, 0, 1, 1, 0, 0]));
        // the failure link from "11" must fall back to "1", not the root
        assert!(a.matches(&[0, 1, 1, 0, 1, 0]));
    }

    #[test]
    fn nested_pattern_marks_outer_node() {
        let a = PatternAutomaton::new(3, &[vec![0, 1, 2, 0], vec![1, 2]]);
        let q = [0, 1, 2].iter().fold(PatternAutomaton::ROOT, |q, &s| a.step(q, s));
        assert!(a.is_accepting(q));
        assert_eq!(a.spelling(q), &[0, 1, 2]);
    }

    #[test]
    fn empty_pattern_set_never_matches() {
        let a = PatternAutomaton::new(2, &[]);
        assert_eq!(a.len(), 1);
        assert!(!a.matches(&[0, 1, 0, 1, 1]));
    }

    proptest! {
        #[test]
        fn agrees_with_naive_search(
            patterns in prop::collection::vec(prop::collection::vec(0usize..3, 1..5), 0..5),
            word in prop::collection::vec(0usize..3, 0..30),
        ) {
            let a = PatternAutomaton::new(3, &patterns);
            prop_assert_eq!(a.matches(&word), naive(&patterns, &word));
        }
    }
}
