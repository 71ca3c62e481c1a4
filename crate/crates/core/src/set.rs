//! Finite universes, truncated reals and binary words.

use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The initial segment `[0, N)` standing in for ω.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Universe(usize);

impl Universe {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyUniverse);
        }
        Ok(Universe(size))
    }

    pub fn size(self) -> usize {
        self.0
    }

    pub fn check(self, point: usize) -> Result<()> {
        if point < self.0 {
            Ok(())
        } else {
            Err(Error::OutOfUniverse { point, size: self.0 })
        }
    }

    pub fn same_as(self, other: Universe) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::UniverseMismatch {
                left: self.0,
                right: other.0,
            })
        }
    }
}

impl<'de> Deserialize<'de> for Universe {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let n = usize::deserialize(d)?;
        Universe::new(n).map_err(serde::de::Error::custom)
    }
}

/// A subset of the universe, stored as its characteristic bit-vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RealSet {
    universe: Universe,
    bits: FixedBitSet,
}

impl RealSet {
    pub fn empty(universe: Universe) -> Self {
        RealSet {
            universe,
            bits: FixedBitSet::with_capacity(universe.size()),
        }
    }

    pub fn full(universe: Universe) -> Self {
        let mut bits = FixedBitSet::with_capacity(universe.size());
        bits.insert_range(..);
        RealSet { universe, bits }
    }

    pub fn from_members<I: IntoIterator<Item = usize>>(universe: Universe, members: I) -> Result<Self> {
        let mut set = Self::empty(universe);
        for m in members {
            set.insert(m)?;
        }
        Ok(set)
    }

    /// Builds a set from its characteristic function.
    pub fn from_fn(universe: Universe, mut chi: impl FnMut(usize) -> bool) -> Self {
        let mut set = Self::empty(universe);
        for p in 0..universe.size() {
            if chi(p) {
                set.bits.insert(p);
            }
        }
        set
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn contains(&self, point: usize) -> Result<bool> {
        self.universe.check(point)?;
        Ok(self.bits.contains(point))
    }

    /// Membership for points already known to lie in the universe.
    pub(crate) fn has(&self, point: usize) -> bool {
        self.bits.contains(point)
    }

    pub fn insert(&mut self, point: usize) -> Result<()> {
        self.universe.check(point)?;
        self.bits.insert(point);
        Ok(())
    }

    pub fn remove(&mut self, point: usize) -> Result<()> {
        self.universe.check(point)?;
        self.bits.set(point, false);
        Ok(())
    }

    pub fn set(&mut self, point: usize, value: bool) -> Result<()> {
        self.universe.check(point)?;
        self.bits.set(point, value);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.members().collect()
    }

    pub fn complement(&self) -> RealSet {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        RealSet {
            universe: self.universe,
            bits,
        }
    }

    pub fn intersection(&self, other: &RealSet) -> Result<RealSet> {
        self.universe.same_as(other.universe)?;
        let mut bits = self.bits.clone();
        bits.intersect_with(&other.bits);
        Ok(RealSet {
            universe: self.universe,
            bits,
        })
    }

    pub fn union(&self, other: &RealSet) -> Result<RealSet> {
        self.universe.same_as(other.universe)?;
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        Ok(RealSet {
            universe: self.universe,
            bits,
        })
    }

    pub fn difference(&self, other: &RealSet) -> Result<RealSet> {
        self.universe.same_as(other.universe)?;
        let mut bits = self.bits.clone();
        bits.difference_with(&other.bits);
        Ok(RealSet {
            universe: self.universe,
            bits,
        })
    }

    pub fn is_subset(&self, other: &RealSet) -> Result<bool> {
        self.universe.same_as(other.universe)?;
        Ok(self.bits.is_subset(&other.bits))
    }

    /// `χ_X` restricted to `[start, end)` as a word.
    pub fn restrict(&self, start: usize, end: usize) -> Result<Word> {
        if end > self.universe.size() {
            return Err(Error::OutOfUniverse {
                point: end.saturating_sub(1),
                size: self.universe.size(),
            });
        }
        Ok(Word((start..end).map(|p| self.bits.contains(p)).collect()))
    }

    /// `χ_X ↾ len`, the initial segment of length `len`.
    pub fn prefix(&self, len: usize) -> Result<Word> {
        self.restrict(0, len)
    }
}

impl fmt::Debug for RealSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RealSet(n={}, ", self.universe.size())?;
        f.debug_set().entries(self.members()).finish()?;
        write!(f, ")")
    }
}

#[derive(Serialize, Deserialize)]
struct RealSetWire {
    n: usize,
    members: Vec<usize>,
}

impl Serialize for RealSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RealSetWire {
            n: self.universe.size(),
            members: self.to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RealSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = RealSetWire::deserialize(d)?;
        let universe = Universe::new(wire.n).map_err(serde::de::Error::custom)?;
        RealSet::from_members(universe, wire.members).map_err(serde::de::Error::custom)
    }
}

/// A finite binary word; serialized as a string of `0`/`1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<bool>);

impl Word {
    pub fn zeros(len: usize) -> Self {
        Word(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        Word(vec![true; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn concat(&self, tail: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&tail.0);
        Word(v)
    }

    pub fn push(&mut self, b: bool) {
        self.0.push(b);
    }

    /// The word read as a little-endian integer (bit `i` has weight `2^i`).
    pub fn as_index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &b)| acc | ((b as usize) << i))
    }

    /// All words of length `len` in lexicographic order (`0 < 1`).
    pub fn all(len: usize) -> impl Iterator<Item = Word> {
        assert!(len < usize::BITS as usize, "word length {len} too large to enumerate");
        (0..(1usize << len)).map(move |code| Word((0..len).map(|i| (code >> (len - 1 - i)) & 1 == 1).collect()))
    }

    pub fn contains_subword(&self, pattern: &Word) -> bool {
        if pattern.is_empty() {
            return true;
        }
        self.0.windows(pattern.len()).any(|w| w == pattern.bits())
    }
}

impl std::str::FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidWord(format!("{s:?}: unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
