use std::fmt;

use serde::{Deserialize, Serialize};

/// Largest piece count representable by [`PieceSet`].
pub const MAX_PIECES: usize = 64;

/// A subset of the piece indices `0..k`, stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PieceSet(u64);

impl PieceSet {
    pub const EMPTY: PieceSet = PieceSet(0);

    pub fn full(k: usize) -> PieceSet {
        debug_assert!(k <= MAX_PIECES);
        if k == MAX_PIECES {
            PieceSet(u64::MAX)
        } else {
            PieceSet((1u64 << k) - 1)
        }
    }

    pub fn singleton(j: usize) -> PieceSet {
        PieceSet(1u64 << j)
    }

    pub fn from_bits(bits: u64) -> PieceSet {
        PieceSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, j: usize) -> bool {
        j < MAX_PIECES && self.0 & (1u64 << j) != 0
    }

    pub fn insert(&mut self, j: usize) {
        self.0 |= 1u64 << j;
    }

    pub fn remove(&mut self, j: usize) {
        self.0 &= !(1u64 << j);
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, other: PieceSet) -> PieceSet {
        PieceSet(self.0 | other.0)
    }

    pub fn intersection(self, other: PieceSet) -> PieceSet {
        PieceSet(self.0 & other.0)
    }

    pub fn is_subset(self, other: PieceSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Rotates indices down by `shift` modulo `k`: piece `j` of the result is
    /// set iff piece `(j + shift) % k` of `self` is set.
    pub fn rotate_down(self, shift: usize, k: usize) -> PieceSet {
        let mut out = PieceSet::EMPTY;
        for j in 0..k {
            if self.contains((j + shift) % k) {
                out.insert(j);
            }
        }
        out
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..MAX_PIECES).filter(move |&j| bits & (1u64 << j) != 0)
    }
}

impl FromIterator<usize> for PieceSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = PieceSet::EMPTY;
        for j in iter {
            s.insert(j);
        }
        s
    }
}

impl fmt::Debug for PieceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for PieceSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<usize> = self.iter().collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PieceSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        if let Some(&bad) = v.iter().find(|&&j| j >= MAX_PIECES) {
            return Err(serde::de::Error::custom(format!(
                "piece index {bad} exceeds the supported maximum of {}",
                MAX_PIECES - 1
            )));
        }
        Ok(v.into_iter().collect())
    }
}
