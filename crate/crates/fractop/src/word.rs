//! Symbolic words over `Σ = {1, …, N}`.
//!
//! Symbols are 1-based everywhere, in memory and in files.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = u16;

/// A finite word `I ∈ Σ*`.
pub type Word = Vec<Symbol>;

/// An eventually periodic infinite word `pre · per^∞` kept in normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawWord", into = "RawWord")]
pub struct EvPeriodicWord {
    pre: Word,
    per: Word,
}

#[derive(Serialize, Deserialize)]
struct RawWord {
    pre: Word,
    per: Word,
}

impl TryFrom<RawWord> for EvPeriodicWord {
    type Error = Error;
    fn try_from(r: RawWord) -> Result<Self> {
        EvPeriodicWord::new(r.pre, r.per)
    }
}

impl From<EvPeriodicWord> for RawWord {
    fn from(w: EvPeriodicWord) -> Self {
        RawWord { pre: w.pre, per: w.per }
    }
}

impl EvPeriodicWord {
    pub fn new(pre: Word, per: Word) -> Result<Self> {
        if per.is_empty() {
            return Err(Error::InvalidWord("empty period".into()));
        }
        if pre.iter().chain(per.iter()).any(|&s| s == 0) {
            return Err(Error::InvalidWord("symbols are 1-based".into()));
        }
        let mut w = EvPeriodicWord { pre, per };
        w.normalize();
        Ok(w)
    }

    /// `s^∞`.
    pub fn constant(s: Symbol) -> Self {
        EvPeriodicWord { pre: vec![], per: vec![s] }
    }

    fn normalize(&mut self) {
        let n = self.per.len();
        for d in 1..=n {
            if n % d == 0 && (d..n).all(|k| self.per[k] == self.per[k - d]) {
                self.per.truncate(d);
                break;
            }
        }
        while let Some(&last) = self.pre.last() {
            if last != *self.per.last().unwrap() {
                break;
            }
            self.pre.pop();
            self.per.rotate_right(1);
        }
    }

    pub fn pre(&self) -> &[Symbol] {
        &self.pre
    }

    pub fn per(&self) -> &[Symbol] {
        &self.per
    }

    /// Number of distinct suffixes, `|pre| + |per|`.
    pub fn len(&self) -> usize {
        self.pre.len() + self.per.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Symbol at 0-based position `k`.
    pub fn at(&self, k: usize) -> Symbol {
        if k < self.pre.len() {
            self.pre[k]
        } else {
            self.per[(k - self.pre.len()) % self.per.len()]
        }
    }

    pub fn first(&self) -> Symbol {
        self.at(0)
    }

    pub fn prefix(&self, n: usize) -> Word {
        (0..n).map(|k| self.at(k)).collect()
    }

    pub fn has_prefix(&self, w: &[Symbol]) -> bool {
        w.iter().enumerate().all(|(k, &s)| self.at(k) == s)
    }

    /// `σ^n(w)`.
    pub fn shift_n(&self, n: usize) -> Self {
        if n <= self.pre.len() {
            return EvPeriodicWord { pre: self.pre[n..].to_vec(), per: self.per.clone() };
        }
        let r = (n - self.pre.len()) % self.per.len();
        let mut per = self.per.clone();
        per.rotate_left(r);
        EvPeriodicWord { pre: vec![], per }
    }

    pub fn shift(&self) -> Self {
        self.shift_n(1)
    }

    /// `I · w`.
    pub fn prepend(&self, prefix: &[Symbol]) -> Self {
        let mut pre = prefix.to_vec();
        pre.extend_from_slice(&self.pre);
        let mut w = EvPeriodicWord { pre, per: self.per.clone() };
        w.normalize();
        w
    }

    pub fn max_symbol(&self) -> Symbol {
        self.pre.iter().chain(self.per.iter()).copied().max().unwrap_or(0)
    }

    pub fn check_alphabet(&self, n: usize) -> Result<()> {
        if self.max_symbol() as usize > n {
            return Err(Error::InvalidWord(format!("{self} uses a symbol outside 1..={n}")));
        }
        Ok(())
    }

    /// Length of the longest common prefix, `None` when the words are equal.
    pub fn common_prefix_len(&self, other: &Self) -> Option<usize> {
        let bound = self.pre.len().max(other.pre.len()) + lcm(self.per.len(), other.per.len());
        (0..bound).find(|&k| self.at(k) != other.at(k))
    }

    /// Rewrites the word over the alphabet of `F^m`, one block of `m` symbols per letter.
    pub fn blocks(&self, m: usize, n: usize) -> EvPeriodicWord {
        let pre_len = self.pre.len().div_ceil(m) * m;
        let per_len = lcm(self.per.len(), m);
        let enc = |k: usize| -> Symbol {
            let mut code = 0usize;
            for t in 0..m {
                code = code * n + (self.at(k + t) as usize - 1);
            }
            (code + 1) as Symbol
        };
        let pre = (0..pre_len / m).map(|b| enc(b * m)).collect();
        let per = (0..per_len / m).map(|b| enc(pre_len + b * m)).collect();
        EvPeriodicWord::new(pre, per).expect("block encoding keeps a nonempty period")
    }
}

impl Ord for EvPeriodicWord {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.common_prefix_len(other) {
            None => Ordering::Equal,
            Some(k) => self.at(k).cmp(&other.at(k)),
        }
    }
}

impl PartialOrd for EvPeriodicWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn fmt_syms(s: &[Symbol]) -> String {
    if s.iter().all(|&x| x < 10) {
        s.iter().map(|x| x.to_string()).collect()
    } else {
        s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Display for EvPeriodicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", fmt_syms(&self.pre), fmt_syms(&self.per))
    }
}

/// Decodes a block symbol of `F^m` back into `m` symbols of `F`.
pub fn decode_block(b: Symbol, m: usize, n: usize) -> Word {
    let mut code = b as usize - 1;
    let mut out = vec![0; m];
    for t in (0..m).rev() {
        out[t] = (code % n + 1) as Symbol;
        code /= n;
    }
    out
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// All words of length `n` in lexicographic order.
pub fn all_words(n_symbols: usize, len: usize) -> Vec<Word> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * n_symbols);
        for w in &out {
            for s in 1..=n_symbols as Symbol {
                let mut v = w.clone();
                v.push(s);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(pre: &[Symbol], per: &[Symbol]) -> EvPeriodicWord {
        EvPeriodicWord::new(pre.to_vec(), per.to_vec()).unwrap()
    }

    #[test]
    fn normal_form() {
        let a = w(&[1, 2, 2], &[2, 2]);
        assert_eq!(a.pre(), &[1]);
        assert_eq!(a.per(), &[2]);
        let b = w(&[3, 1, 2], &[1, 2]);
        assert_eq!(b.pre(), &[3]);
        assert_eq!(b.per(), &[1, 2]);
        let c = w(&[2], &[1, 2]);
        assert_eq!(c.pre(), &[] as &[Symbol]);
        assert_eq!(c.per(), &[2, 1]);
    }

    #[test]
    fn ordering_is_lexicographic() {
        assert!(w(&[1], &[2]) < w(&[2], &[1]));
        assert!(w(&[], &[1]) < w(&[1], &[2]));
        assert_eq!(w(&[1, 2], &[1, 2]).cmp(&w(&[], &[1, 2])), Ordering::Equal);
    }

    #[test]
    fn shift_and_prepend() {
        let a = w(&[3], &[1, 2]);
        assert_eq!(a.shift(), w(&[], &[1, 2]));
        assert_eq!(a.shift_n(2), w(&[], &[2, 1]));
        assert_eq!(a.shift().prepend(&[3]), a);
    }

    #[test]
    fn blocks_roundtrip() {
        let a = w(&[3], &[1, 2]);
        let b = a.blocks(2, 3);
        let mut seq = vec![];
        for k in 0..6 {
            seq.extend(decode_block(b.at(k), 2, 3));
        }
        assert_eq!(seq, a.prefix(12));
    }

    #[test]
    fn rejects_bad_words() {
        assert!(EvPeriodicWord::new(vec![1], vec![]).is_err());
        assert!(EvPeriodicWord::new(vec![0], vec![1]).is_err());
    }
}
