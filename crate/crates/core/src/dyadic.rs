//! Dyadic intervals, the finite tree of depth `N`, interval sets and exact
//! Carleson constants.

use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::DyadicRational;

/// Depth of the ambient tree. Capped at 60 so that every ordinal
/// (`< 2^{N+1}`) fits a `u64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Depth(u32);

pub const MAX_DEPTH: u32 = 60;

/// Interval sets store one bit per node, so they are only materializable at
/// moderate depth.
pub const MAX_SET_DEPTH: u32 = 28;

impl Depth {
    pub fn new(n: u32) -> Result<Self> {
        if n > MAX_DEPTH {
            return Err(Error::DepthTooLarge(n as u64));
        }
        Ok(Depth(n))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// `2^{N+1} - 1`, the number of intervals in the tree.
    pub fn node_count(self) -> u64 {
        (1u64 << (self.0 + 1)) - 1
    }

    /// Number of leaf intervals, `2^N`.
    pub fn leaf_count(self) -> u64 {
        1u64 << self.0
    }

    pub fn root(self) -> DyadicInterval {
        DyadicInterval { level: 0, pos: 0 }
    }
}

/// The half-open interval `[pos/2^level, (pos+1)/2^level)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicInterval {
    level: u32,
    pos: u64,
}

impl DyadicInterval {
    pub fn new(level: u32, pos: u64, depth: Depth) -> Result<Self> {
        if level > depth.get() {
            return Err(Error::LevelOutOfRange {
                level,
                depth: depth.get(),
            });
        }
        if pos >= 1u64 << level {
            return Err(Error::PosOutOfRange { pos, level });
        }
        Ok(DyadicInterval { level, pos })
    }

    pub fn level(self) -> u32 {
        self.level
    }

    pub fn pos(self) -> u64 {
        self.pos
    }

    /// `|I| = 2^{-level}`.
    pub fn length(self) -> DyadicRational {
        DyadicRational::pow2_neg(self.level)
    }

    pub fn left_endpoint(self) -> DyadicRational {
        DyadicRational::ratio(self.pos, self.level)
    }

    pub fn right_endpoint(self) -> DyadicRational {
        DyadicRational::ratio(self.pos + 1, self.level)
    }

    pub fn is_leaf(self, depth: Depth) -> bool {
        self.level == depth.get()
    }

    pub fn children(self, depth: Depth) -> Result<(DyadicInterval, DyadicInterval)> {
        if self.level >= depth.get() {
            return Err(Error::LeafHasNoChildren);
        }
        Ok((
            DyadicInterval {
                level: self.level + 1,
                pos: 2 * self.pos,
            },
            DyadicInterval {
                level: self.level + 1,
                pos: 2 * self.pos + 1,
            },
        ))
    }

    pub fn parent(self) -> Result<DyadicInterval> {
        if self.level == 0 {
            return Err(Error::RootHasNoParent);
        }
        Ok(DyadicInterval {
            level: self.level - 1,
            pos: self.pos / 2,
        })
    }

    /// Whether `self` is the left half of its parent.
    pub fn is_left_child(self) -> bool {
        self.pos.is_multiple_of(2)
    }

    /// `true` iff `other ⊆ self` as sets of reals.
    pub fn contains(self, other: DyadicInterval) -> bool {
        other.level >= self.level && (other.pos >> (other.level - self.level)) == self.pos
    }

    pub fn is_disjoint_from(self, other: DyadicInterval) -> bool {
        !self.contains(other) && !other.contains(self)
    }

    /// Array index used throughout the crate: the lexicographic ordinal
    /// `2^level + pos` minus one.
    pub fn lex_index(self) -> u64 {
        (1u64 << self.level) + self.pos - 1
    }

    pub fn from_lex_index(index: u64, depth: Depth) -> Result<Self> {
        let n = index + 1;
        if n == 0 || n > depth.node_count() {
            return Err(Error::OrdinalOutOfRange {
                ordinal: n,
                max: depth.node_count(),
            });
        }
        let level = 63 - n.leading_zeros();
        Ok(DyadicInterval {
            level,
            pos: n - (1u64 << level),
        })
    }
}

impl Serialize for DyadicInterval {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        (self.level, self.pos).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DyadicInterval {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let (level, pos) = <(u32, u64)>::deserialize(deserializer)?;
        if pos >= 1u64 << level.min(63) {
            return Err(D::Error::custom(Error::PosOutOfRange { pos, level }));
        }
        Ok(DyadicInterval { level, pos })
    }
}

/// All intervals of the depth-`N` tree in lexicographic order.
pub fn enumerate(depth: Depth) -> Vec<DyadicInterval> {
    let mut out = Vec::with_capacity(depth.node_count() as usize);
    for level in 0..=depth.get() {
        for pos in 0..1u64 << level {
            out.push(DyadicInterval { level, pos });
        }
    }
    out
}

/// A finite subset of the depth-`N` tree, stored as a membership bitmap
/// indexed by `lex_index`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalSet {
    depth: Depth,
    bits: Vec<u64>,
    len: usize,
}

impl IntervalSet {
    pub fn empty(depth: Depth) -> Result<Self> {
        if depth.get() > MAX_SET_DEPTH {
            return Err(Error::SetTooLarge(depth.get()));
        }
        let words = (depth.node_count() as usize).div_ceil(64);
        Ok(IntervalSet {
            depth,
            bits: vec![0; words],
            len: 0,
        })
    }

    pub fn full(depth: Depth) -> Result<Self> {
        let mut s = Self::empty(depth)?;
        let n = depth.node_count() as usize;
        for w in 0..s.bits.len() {
            s.bits[w] = !0;
        }
        // clear the tail bits past the node count
        let tail = n % 64;
        if tail != 0 {
            *s.bits.last_mut().unwrap() &= (1u64 << tail) - 1;
        }
        s.len = n;
        Ok(s)
    }

    pub fn from_intervals(
        depth: Depth,
        intervals: impl IntoIterator<Item = DyadicInterval>,
    ) -> Result<Self> {
        let mut s = Self::empty(depth)?;
        for i in intervals {
            if i.level() > depth.get() {
                return Err(Error::LevelOutOfRange {
                    level: i.level(),
                    depth: depth.get(),
                });
            }
            s.insert(i);
        }
        Ok(s)
    }

    pub fn depth(&self) -> Depth {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, interval: DyadicInterval) {
        let idx = interval.lex_index() as usize;
        let mask = 1u64 << (idx % 64);
        if self.bits[idx / 64] & mask == 0 {
            self.bits[idx / 64] |= mask;
            self.len += 1;
        }
    }

    pub fn remove(&mut self, interval: DyadicInterval) {
        let idx = interval.lex_index() as usize;
        let mask = 1u64 << (idx % 64);
        if self.bits[idx / 64] & mask != 0 {
            self.bits[idx / 64] &= !mask;
            self.len -= 1;
        }
    }

    pub fn contains(&self, interval: DyadicInterval) -> bool {
        if interval.level() > self.depth.get() {
            return false;
        }
        let idx = interval.lex_index() as usize;
        self.bits[idx / 64] & (1u64 << (idx % 64)) != 0
    }

    fn merge(&self, other: &IntervalSet, op: impl Fn(u64, u64) -> u64) -> Result<IntervalSet> {
        if self.depth != other.depth {
            return Err(Error::DepthMismatch);
        }
        let bits: Vec<u64> = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| op(a, b))
            .collect();
        let len = bits.iter().map(|w| w.count_ones() as usize).sum();
        Ok(IntervalSet {
            depth: self.depth,
            bits,
            len,
        })
    }

    pub fn union(&self, other: &IntervalSet) -> Result<IntervalSet> {
        self.merge(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &IntervalSet) -> Result<IntervalSet> {
        self.merge(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &IntervalSet) -> Result<IntervalSet> {
        self.merge(other, |a, b| a & !b)
    }

    pub fn is_subset_of(&self, other: &IntervalSet) -> bool {
        self.bits
            .iter()
            .zip(&other.bits)
            .all(|(&a, &b)| a & !b == 0)
    }

    /// Members in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = DyadicInterval> + '_ {
        let depth = self.depth;
        (0..self.depth.node_count())
            .filter(move |&idx| {
                self.bits[(idx / 64) as usize] & (1u64 << (idx % 64)) != 0
            })
            .map(move |idx| DyadicInterval::from_lex_index(idx, depth).unwrap())
    }

    /// Whether the members are pairwise disjoint intervals.
    pub fn is_antichain(&self) -> bool {
        // a containment pair exists iff some member has a member ancestor
        for i in self.iter() {
            let mut cur = i;
            while let Ok(p) = cur.parent() {
                if self.contains(p) {
                    return false;
                }
                cur = p;
            }
        }
        true
    }
}

/// The complete dyadic subtree rooted at `I_{level,pos}`: all members of the
/// tree contained in it.
pub fn subtree(root: DyadicInterval, depth: Depth) -> Result<IntervalSet> {
    let mut s = IntervalSet::empty(depth)?;
    for m in root.level()..=depth.get() {
        let shift = m - root.level();
        for pos in (root.pos() << shift)..((root.pos() + 1) << shift) {
            s.insert(DyadicInterval { level: m, pos });
        }
    }
    Ok(s)
}

/// The leaf intervals of the tree below `I_{level,pos}`.
pub fn lowermost_level(root: DyadicInterval, depth: Depth) -> Result<IntervalSet> {
    let mut s = IntervalSet::empty(depth)?;
    let n = depth.get();
    let shift = n - root.level();
    for pos in (root.pos() << shift)..((root.pos() + 1) << shift) {
        s.insert(DyadicInterval { level: n, pos });
    }
    Ok(s)
}

/// Result of an exact Carleson-constant evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CarlesonResult {
    pub value: DyadicRational,
    /// Interval attaining the supremum; ties broken lexicographically.
    /// `None` only for the empty set.
    pub argsup: Option<DyadicInterval>,
}

/// The Carleson constant `sup_{I in C} (1/|I|) sum_{J ⊆ I, J in C} |J|`,
/// computed exactly by one bottom-up pass. Empty sets evaluate to 0.
pub fn carleson(set: &IntervalSet) -> CarlesonResult {
    if set.is_empty() {
        return CarlesonResult {
            value: DyadicRational::zero(),
            argsup: None,
        };
    }
    let depth = set.depth();
    let n = depth.get();
    let count = depth.node_count() as usize;
    // subtree sums in units of 2^{-N}; bounded by (N+1) * 2^N
    let mut sums = vec![0u64; count];
    for idx in (0..count).rev() {
        let interval = DyadicInterval::from_lex_index(idx as u64, depth).unwrap();
        let mut s = 0u64;
        if set.contains(interval) {
            s += 1u64 << (n - interval.level());
        }
        if interval.level() < n {
            let (l, r) = interval.children(depth).unwrap();
            s += sums[l.lex_index() as usize] + sums[r.lex_index() as usize];
        }
        sums[idx] = s;
    }
    // sup over members of s_I / 2^{N - level(I)}; lexicographically first
    // member wins ties, so scan in index order with a strict comparison
    let mut best: Option<(u128, u32, DyadicInterval)> = None;
    for i in set.iter() {
        let s = sums[i.lex_index() as usize];
        let level = i.level();
        let better = match &best {
            None => true,
            Some((bs, blevel, _)) => {
                // compare s / 2^{N-level} with bs / 2^{N-blevel}
                (s as u128) << level > (*bs) << *blevel
            }
        };
        if better {
            best = Some((s as u128, level, i));
        }
    }
    let (s, level, argsup) = best.unwrap();
    CarlesonResult {
        value: DyadicRational::new(s as u64, n - level),
        argsup: Some(argsup),
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let intervals: Vec<(u32, u64)> = self.iter().map(|i| (i.level(), i.pos())).collect();
        let mut s = serializer.serialize_struct("IntervalSet", 2)?;
        s.serialize_field("N", &self.depth.get())?;
        s.serialize_field("intervals", &intervals)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            #[serde(rename = "N")]
            n: u32,
            intervals: Vec<(u32, u64)>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let depth = Depth::new(raw.n).map_err(D::Error::custom)?;
        let mut out = IntervalSet::empty(depth).map_err(D::Error::custom)?;
        for (level, pos) in raw.intervals {
            let i = DyadicInterval::new(level, pos, depth).map_err(D::Error::custom)?;
            out.insert(i);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(level: u32, pos: u64) -> DyadicInterval {
        DyadicInterval {
            level,
            pos,
        }
    }

    #[test]
    fn enumerate_counts() {
        assert_eq!(enumerate(Depth::new(0).unwrap()), vec![iv(0, 0)]);
        let d2 = enumerate(Depth::new(2).unwrap());
        assert_eq!(
            d2,
            vec![iv(0, 0), iv(1, 0), iv(1, 1), iv(2, 0), iv(2, 1), iv(2, 2), iv(2, 3)]
        );
        assert_eq!(enumerate(Depth::new(4).unwrap()).len(), 31);
    }

    #[test]
    fn children_and_parent() {
        let d = Depth::new(4).unwrap();
        assert_eq!(iv(0, 0).children(d).unwrap(), (iv(1, 0), iv(1, 1)));
        assert_eq!(iv(1, 1).children(d).unwrap(), (iv(2, 2), iv(2, 3)));
        assert_eq!(iv(4, 0).children(d), Err(Error::LeafHasNoChildren));
        assert_eq!(iv(2, 3).parent().unwrap(), iv(1, 1));
        assert_eq!(iv(1, 0).parent().unwrap(), iv(0, 0));
        assert_eq!(iv(0, 0).parent(), Err(Error::RootHasNoParent));
    }

    #[test]
    fn containment() {
        assert!(iv(1, 0).contains(iv(3, 2)));
        assert!(!iv(1, 0).contains(iv(1, 1)));
        assert!(iv(2, 3).contains(iv(2, 3)));
    }

    #[test]
    fn contains_is_partial_order() {
        // exhaustive reflexivity / antisymmetry / transitivity at small depth
        let d = Depth::new(4).unwrap();
        let all = enumerate(d);
        for &a in &all {
            assert!(a.contains(a));
            for &b in &all {
                if a.contains(b) && b.contains(a) {
                    assert_eq!(a, b);
                }
                for &c in &all {
                    if a.contains(b) && b.contains(c) {
                        assert!(a.contains(c));
                    }
                }
            }
        }
    }

    #[test]
    fn subtree_examples() {
        let d2 = Depth::new(2).unwrap();
        let t = subtree(iv(1, 1), d2).unwrap();
        let members: Vec<_> = t.iter().collect();
        assert_eq!(members, vec![iv(1, 1), iv(2, 2), iv(2, 3)]);
        assert_eq!(subtree(iv(2, 0), d2).unwrap().len(), 1);
        assert_eq!(subtree(iv(0, 0), d2).unwrap(), IntervalSet::full(d2).unwrap());
    }

    #[test]
    fn lowermost_level_examples() {
        let d2 = Depth::new(2).unwrap();
        let e = lowermost_level(iv(0, 0), d2).unwrap();
        assert_eq!(
            e.iter().collect::<Vec<_>>(),
            vec![iv(2, 0), iv(2, 1), iv(2, 2), iv(2, 3)]
        );
        let d4 = Depth::new(4).unwrap();
        let e = lowermost_level(iv(3, 5), d4).unwrap();
        assert_eq!(e.iter().collect::<Vec<_>>(), vec![iv(4, 10), iv(4, 11)]);
        assert_eq!(lowermost_level(iv(4, 7), d4).unwrap().len(), 1);
    }

    #[test]
    fn carleson_full_tree_and_subtrees() {
        for n in 0..=10u32 {
            let d = Depth::new(n).unwrap();
            let full = IntervalSet::full(d).unwrap();
            assert_eq!(carleson(&full).value, DyadicRational::from_integer(n + 1));
            for i in enumerate(d) {
                let t = subtree(i, d).unwrap();
                assert_eq!(
                    carleson(&t).value,
                    DyadicRational::from_integer(n - i.level() + 1),
                    "subtree at {:?} in depth {}",
                    i,
                    n
                );
            }
        }
    }

    #[test]
    fn carleson_empty_and_antichain() {
        let d = Depth::new(3).unwrap();
        let empty = IntervalSet::empty(d).unwrap();
        assert_eq!(carleson(&empty).value, DyadicRational::zero());
        assert_eq!(carleson(&empty).argsup, None);
        let leaves = lowermost_level(iv(0, 0), d).unwrap();
        assert!(leaves.is_antichain());
        assert_eq!(carleson(&leaves).value, DyadicRational::one());
    }

    #[test]
    fn carleson_argsup_tie_break() {
        // two disjoint intervals: both attain 1, the lexicographically
        // first must be reported
        let d = Depth::new(2).unwrap();
        let s = IntervalSet::from_intervals(d, [iv(2, 3), iv(1, 0)]).unwrap();
        assert_eq!(carleson(&s).argsup, Some(iv(1, 0)));
    }

    #[test]
    fn set_algebra() {
        let d = Depth::new(3).unwrap();
        let a = subtree(iv(1, 0), d).unwrap();
        let b = lowermost_level(iv(0, 0), d).unwrap();
        let u = a.union(&b).unwrap();
        let i = a.intersection(&b).unwrap();
        let diff = a.difference(&b).unwrap();
        assert_eq!(u.len() + i.len(), a.len() + b.len());
        assert_eq!(diff.len(), a.len() - i.len());
        assert!(i.is_subset_of(&a) && i.is_subset_of(&b));
    }

    #[test]
    fn set_json_round_trip() {
        let d = Depth::new(2).unwrap();
        let s = IntervalSet::from_intervals(d, [iv(2, 1), iv(0, 0)]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"N":2,"intervals":[[0,0],[2,1]]}"#);
        let back: IntervalSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn depth_cap() {
        assert!(Depth::new(60).is_ok());
        assert_eq!(Depth::new(61), Err(Error::DepthTooLarge(61)));
    }
}
