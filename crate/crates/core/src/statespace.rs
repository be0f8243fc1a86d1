//! The composition lattice: all `d`-tuples of nonnegative counts summing to `N`.
//!
//! States are enumerated in colexicographic order of the first `d - 1`
//! coordinates (the first coordinate varies fastest), which gives a closed
//! form ranking through the hockey-stick identity. The partial order used by
//! every chain in this crate is coordinatewise domination on those same
//! `d - 1` coordinates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default limit on the number of states a lattice may have before
/// enumeration is refused.
pub const DEFAULT_STATE_CAP: u64 = 200_000;

/// A population or urn configuration: `d` counts summing to `N`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Composition {
    counts: Vec<u32>,
}

impl Composition {
    /// Builds a composition and checks that its counts sum to `n`.
    pub fn new(counts: Vec<u32>, n: u32) -> Result<Self> {
        let c = Self::from_counts(counts)?;
        if c.total() != n {
            return Err(Error::Validation(format!(
                "composition {c} sums to {} but N = {n}",
                c.total()
            )));
        }
        Ok(c)
    }

    /// Builds a composition from raw counts; `N` is their sum.
    pub fn from_counts(counts: Vec<u32>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::Validation(format!(
                "a composition needs at least 2 parts, got {}",
                counts.len()
            )));
        }
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        if total > u32::MAX as u64 {
            return Err(Error::Validation("composition total overflows u32".into()));
        }
        Ok(Self { counts })
    }

    pub(crate) fn from_counts_unchecked(counts: Vec<u32>) -> Self {
        debug_assert!(counts.len() >= 2);
        Self { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn get(&self, i: usize) -> u32 {
        self.counts[i]
    }

    /// Number of parts `d`.
    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    /// The total `N`.
    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Sum of the first `d - 1` counts.
    pub fn head_sum(&self) -> u32 {
        self.counts[..self.counts.len() - 1].iter().sum()
    }

    /// Returns a copy with one unit moved from part `from` to part `to`.
    pub fn moved(&self, from: usize, to: usize) -> Self {
        let mut counts = self.counts.clone();
        counts[from] -= 1;
        counts[to] += 1;
        Self { counts }
    }

    pub(crate) fn counts_mut(&mut self) -> &mut [u32] {
        &mut self.counts
    }

    /// Parses a comma-separated list of counts such as `"0,10,0,10,80"`.
    pub fn parse_csv(s: &str) -> Result<Self> {
        let counts = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|e| Error::Validation(format!("bad count {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_counts(counts)
    }

    /// Counts joined with `sep`.
    pub fn join(&self, sep: &str) -> String {
        self.counts
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(sep)
    }
}

impl TryFrom<Vec<u32>> for Composition {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        Self::from_counts(v)
    }
}

impl From<Composition> for Vec<u32> {
    fn from(c: Composition) -> Self {
        c.counts
    }
}

impl fmt::Debug for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.join(","))
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.join(","))
    }
}

/// Position of a composition in the enumeration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateIndex(pub usize);

/// Exact binomial coefficient, `None` on overflow of `u128`.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Exact number of states `C(N + d - 1, N)`, `None` on overflow.
pub fn state_count(n: u32, d: usize) -> Option<u128> {
    binomial(n as u64 + d as u64 - 1, n as u64)
}

/// The lattice `X_N^d` together with its enumeration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSpace {
    n: u32,
    d: usize,
    size: usize,
}

impl StateSpace {
    /// Builds the lattice, refusing it if it has more than [`DEFAULT_STATE_CAP`] states.
    pub fn new(n: u32, d: usize) -> Result<Self> {
        Self::with_cap(n, d, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(n: u32, d: usize, cap: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Validation(format!("d must be at least 2, got {d}")));
        }
        let size = match state_count(n, d) {
            Some(s) if s <= cap as u128 => s as usize,
            Some(s) => {
                return Err(Error::StateSpaceTooLarge {
                    size: s.to_string(),
                    cap,
                })
            }
            None => {
                return Err(Error::StateSpaceTooLarge {
                    size: format!("C({}, {})", n as u64 + d as u64 - 1, n),
                    cap,
                })
            }
        };
        Ok(Self { n, d, size })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Iterates over every state in colexicographic order.
    pub fn iter(&self) -> StateIter {
        let mut first = vec![0u32; self.d];
        first[self.d - 1] = self.n;
        StateIter {
            n: self.n,
            next: Some(first),
        }
    }

    pub fn enumerate(&self) -> Vec<Composition> {
        self.iter().collect()
    }

    fn check(&self, x: &Composition) -> Result<()> {
        if x.dim() != self.d || x.total() != self.n {
            return Err(Error::Validation(format!(
                "composition {x} does not belong to X_{}^{}",
                self.n, self.d
            )));
        }
        Ok(())
    }

    /// Rank of `x` in the enumeration order.
    pub fn rank(&self, x: &Composition) -> Result<StateIndex> {
        self.check(x)?;
        Ok(StateIndex(self.rank_unchecked(x)))
    }

    pub(crate) fn rank_unchecked(&self, x: &Composition) -> usize {
        let mut remaining = self.n as u64;
        let mut idx: u128 = 0;
        for j in (0..self.d - 1).rev() {
            let v = x.get(j) as u64;
            let j = j as u64;
            idx += binom_small(remaining + j + 1, j + 1) - binom_small(remaining - v + j + 1, j + 1);
            remaining -= v;
        }
        idx as usize
    }

    /// Inverse of [`StateSpace::rank`].
    pub fn unrank(&self, i: StateIndex) -> Result<Composition> {
        if i.0 >= self.size {
            return Err(Error::Validation(format!(
                "state index {} out of range for {} states",
                i.0, self.size
            )));
        }
        let mut rem = i.0 as u128;
        let mut remaining = self.n as u64;
        let mut counts = vec![0u32; self.d];
        for j in (0..self.d - 1).rev() {
            let jj = j as u64;
            let all = binom_small(remaining + jj + 1, jj + 1);
            let mut v = 0u64;
            // largest v with (#tuples whose coordinate j is below v) <= rem
            while v < remaining {
                let below_next = all - binom_small(remaining - (v + 1) + jj + 1, jj + 1);
                if below_next > rem {
                    break;
                }
                v += 1;
            }
            rem -= all - binom_small(remaining - v + jj + 1, jj + 1);
            counts[j] = v as u32;
            remaining -= v;
        }
        counts[self.d - 1] = remaining as u32;
        Ok(Composition::from_counts_unchecked(counts))
    }

    /// The minimal element `(0, ..., 0, N)`.
    pub fn minimal_element(&self) -> Composition {
        minimal_element(self.n, self.d)
    }
}

// Only called with arguments bounded by an already-sized lattice.
fn binom_small(n: u64, k: u64) -> u128 {
    binomial(n, k).expect("binomial within a capped lattice overflowed")
}

/// Odometer over compositions, first coordinate fastest.
pub struct StateIter {
    n: u32,
    next: Option<Vec<u32>>,
}

impl Iterator for StateIter {
    type Item = Composition;

    fn next(&mut self) -> Option<Composition> {
        let cur = self.next.take()?;
        let d = cur.len();
        let mut nxt = cur.clone();
        let mut head: u32 = nxt[..d - 1].iter().sum();
        let mut advanced = false;
        for j in 0..d - 1 {
            if head < self.n {
                nxt[j] += 1;
                head += 1;
                advanced = true;
                break;
            }
            head -= nxt[j];
            nxt[j] = 0;
        }
        if advanced {
            nxt[d - 1] = self.n - head;
            self.next = Some(nxt);
        }
        Some(Composition::from_counts_unchecked(cur))
    }
}

/// All states of `X_N^d` in colexicographic order, subject to the default cap.
pub fn enumerate_states(n: u32, d: usize) -> Result<Vec<Composition>> {
    Ok(StateSpace::new(n, d)?.enumerate())
}

/// `x ⪯ y`: `x_i <= y_i` for every `i < d`.
pub fn partial_leq(x: &Composition, y: &Composition) -> Result<bool> {
    if x.dim() != y.dim() || x.total() != y.total() {
        return Err(Error::Validation(format!(
            "cannot compare {x} and {y}: different N or d"
        )));
    }
    Ok(leq_unchecked(x, y))
}

pub(crate) fn leq_unchecked(x: &Composition, y: &Composition) -> bool {
    let d = x.dim();
    x.counts[..d - 1]
        .iter()
        .zip(&y.counts[..d - 1])
        .all(|(a, b)| a <= b)
}

/// `(0, ..., 0, N)`, dominated by every state.
pub fn minimal_element(n: u32, d: usize) -> Composition {
    let mut counts = vec![0u32; d.max(2)];
    let last = counts.len() - 1;
    counts[last] = n;
    Composition::from_counts_unchecked(counts)
}
