//! Exact eventually periodic one-sided sequences.

use serde::{Deserialize, Serialize};
use std::fmt;

/// An eventually periodic sequence `prefix · cycle · cycle · …`.
///
/// The representation is canonical: the cycle is primitive and the prefix
/// never ends with a symbol that could be absorbed into the cycle, so two
/// words denote the same sequence exactly when they compare equal.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word {
    prefix: Vec<u8>,
    cycle: Vec<u8>,
}

impl Word {
    /// Builds `prefix · cycle^∞`. Panics if `cycle` is empty.
    pub fn new(prefix: Vec<u8>, cycle: Vec<u8>) -> Self {
        assert!(!cycle.is_empty(), "a word needs a non-empty periodic tail");
        let mut w = Word { prefix, cycle };
        w.canonicalize();
        w
    }

    pub fn periodic(cycle: Vec<u8>) -> Self {
        Word::new(Vec::new(), cycle)
    }

    pub fn constant(symbol: u8) -> Self {
        Word::new(Vec::new(), vec![symbol])
    }

    pub fn prefix(&self) -> &[u8] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[u8] {
        &self.cycle
    }

    /// Symbol at 0-based position `i`.
    pub fn symbol(&self, i: usize) -> u8 {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// The first `n` symbols.
    pub fn head(&self, n: usize) -> Vec<u8> {
        (0..n).map(|i| self.symbol(i)).collect()
    }

    /// The left shift.
    pub fn shift(&self) -> Word {
        if self.prefix.is_empty() {
            let mut cycle = self.cycle[1..].to_vec();
            cycle.push(self.cycle[0]);
            Word {
                prefix: Vec::new(),
                cycle,
            }
        } else {
            Word {
                prefix: self.prefix[1..].to_vec(),
                cycle: self.cycle.clone(),
            }
        }
    }

    /// `s · self`.
    pub fn prepend(&self, s: u8) -> Word {
        let mut prefix = Vec::with_capacity(self.prefix.len() + 1);
        prefix.push(s);
        prefix.extend_from_slice(&self.prefix);
        Word::new(prefix, self.cycle.clone())
    }

    /// `u · self` for a finite word `u`.
    pub fn prepend_all(&self, u: &[u8]) -> Word {
        let mut prefix = u.to_vec();
        prefix.extend_from_slice(&self.prefix);
        Word::new(prefix, self.cycle.clone())
    }

    /// Length after which every symbol lies in the periodic part.
    pub fn preperiod(&self) -> usize {
        self.prefix.len()
    }

    pub fn period(&self) -> usize {
        self.cycle.len()
    }

    /// Number of positions that determine every pairwise comparison with `other`.
    fn horizon(&self, other: &Word) -> usize {
        self.prefix.len().max(other.prefix.len()) + lcm(self.cycle.len(), other.cycle.len())
    }

    /// 0-based index of the first disagreeing symbol, `None` for equal words.
    pub fn first_difference(&self, other: &Word) -> Option<usize> {
        if self == other {
            return None;
        }
        (0..self.horizon(other)).find(|&i| self.symbol(i) != other.symbol(i))
    }

    fn canonicalize(&mut self) {
        let c = self.cycle.len();
        let root = (1..=c)
            .find(|&p| c % p == 0 && (p..c).all(|i| self.cycle[i] == self.cycle[i - p]))
            .unwrap_or(c);
        self.cycle.truncate(root);
        while let Some(&last) = self.prefix.last() {
            if last != *self.cycle.last().unwrap() {
                break;
            }
            self.prefix.pop();
            self.cycle.rotate_right(1);
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.prefix {
            write!(f, "{s}")?;
        }
        write!(f, "(")?;
        for s in &self.cycle {
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms_coincide() {
        let a = Word::new(vec![0, 1], vec![0, 1, 0, 1]);
        let b = Word::periodic(vec![0, 1]);
        assert_eq!(a, b);
        let c = Word::new(vec![1, 0, 0], vec![0]);
        assert_eq!(c.prefix(), &[1]);
        assert_eq!(c.cycle(), &[0]);
    }

    #[test]
    fn shift_of_periodic_word_rotates() {
        let w = Word::periodic(vec![0, 1, 1]);
        assert_eq!(w.shift(), Word::periodic(vec![1, 1, 0]));
        assert_eq!(w.shift().shift().shift(), w);
        let t = Word::new(vec![1, 1], vec![0]);
        assert_eq!(t.shift().shift(), Word::constant(0));
    }

    #[test]
    fn first_difference_on_tails() {
        let a = Word::periodic(vec![0, 1]);
        let b = Word::new(vec![0, 1, 0, 1], vec![1]);
        assert_eq!(a.first_difference(&b), Some(4));
        assert_eq!(a.first_difference(&a.clone()), None);
    }

    #[test]
    fn prepend_then_shift_round_trips() {
        let w = Word::new(vec![2, 0], vec![1]);
        assert_eq!(w.prepend(1).shift(), w);
        assert_eq!(w.prepend_all(&[0, 0, 1]).head(5), vec![0, 0, 1, 2, 0]);
    }
}
