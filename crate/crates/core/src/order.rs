//! Postorder and lexicographic ordinal assignments, their closed forms, the
//! postorder rearrangement and its inverse, and order intervals.
//!
//! Two independent routes to the postorder ordinal exist side by side: the
//! literal left/right/node traversal and the closed form
//! `a(k) = (k+1)(2^{N-l+1} - 1) + sum_{j<=k} m(j)`. The verification suites
//! compare them exhaustively.

use serde::{Deserialize, Serialize};

use crate::dyadic::{enumerate, Depth, DyadicInterval, IntervalSet};
use crate::error::{Error, Result};

/// The 2-adic valuation `m(j)`: the number of trailing zero bits of `j`.
pub fn two_adic_valuation(j: u64) -> Result<u32> {
    if j == 0 {
        return Err(Error::ValuationOfZero);
    }
    Ok(j.trailing_zeros())
}

/// `sum_{j=1}^{k} m(j) = k - popcount(k)`.
pub fn valuation_prefix_sum(k: u64) -> u64 {
    k - k.count_ones() as u64
}

/// Lexicographic ordinal `2^level + pos`.
pub fn lex_ordinal(interval: DyadicInterval) -> u64 {
    interval.lex_index() + 1
}

/// Interval with the given lexicographic ordinal.
pub fn lex_interval(ordinal: u64, depth: Depth) -> Result<DyadicInterval> {
    if ordinal == 0 {
        return Err(Error::OrdinalOutOfRange {
            ordinal,
            max: depth.node_count(),
        });
    }
    DyadicInterval::from_lex_index(ordinal - 1, depth)
}

fn check_in_tree(interval: DyadicInterval, depth: Depth) -> Result<()> {
    if interval.level() > depth.get() {
        return Err(Error::LevelOutOfRange {
            level: interval.level(),
            depth: depth.get(),
        });
    }
    Ok(())
}

/// All intervals of the depth-`N` tree in postorder (left child, right
/// child, node). This is the brute-force route.
pub fn postorder_enumeration(depth: Depth) -> Vec<DyadicInterval> {
    fn visit(node: DyadicInterval, depth: Depth, out: &mut Vec<DyadicInterval>) {
        if let Ok((l, r)) = node.children(depth) {
            visit(l, depth, out);
            visit(r, depth, out);
        }
        out.push(node);
    }
    let mut out = Vec::with_capacity(depth.node_count() as usize);
    visit(depth.root(), depth, &mut out);
    out
}

/// 1-based position of the interval in the postorder traversal, obtained by
/// walking down from the root.
pub fn post_ordinal_traversal(interval: DyadicInterval, depth: Depth) -> Result<u64> {
    check_in_tree(interval, depth)?;
    let n = depth.get();
    // descend from the root; entering the right child skips the left
    // subtree, finishing at a node adds its whole subtree
    let mut ordinal = 0u64;
    for level in 0..interval.level() {
        let went_right = (interval.pos() >> (interval.level() - level - 1)) & 1 == 1;
        if went_right {
            // the left sibling subtree was visited completely
            ordinal += (1u64 << (n - level)) - 1;
        }
    }
    Ok(ordinal + (1u64 << (n - interval.level() + 1)) - 1)
}

/// Closed-form postorder ordinal (the traversal-free route).
pub fn post_ordinal_closed(interval: DyadicInterval, depth: Depth) -> Result<u64> {
    check_in_tree(interval, depth)?;
    let n = depth.get();
    let level = interval.level();
    let k = interval.pos();
    Ok((k + 1) * ((1u64 << (n - level + 1)) - 1) + valuation_prefix_sum(k))
}

fn ceil_log2(x: u64) -> u32 {
    debug_assert!(x >= 1);
    64 - (x - 1).leading_zeros().min(64)
}

/// Level of the image interval: `ceil(log2(k+1)) + N - level`.
pub fn level_of(interval: DyadicInterval, depth: Depth) -> Result<u32> {
    check_in_tree(interval, depth)?;
    Ok(ceil_log2(interval.pos() + 1) + depth.get() - interval.level())
}

/// Position of the image interval, from the closed form that involves only
/// `(level, pos)` of the source interval.
pub fn pos_of(interval: DyadicInterval, depth: Depth) -> Result<u64> {
    check_in_tree(interval, depth)?;
    let n = depth.get() as i128;
    let level = interval.level() as i128;
    let k = interval.pos();
    if k == 0 {
        return Ok((1u64 << (n - level)) - 1);
    }
    let big_l = level_of(interval, depth)? as i128;
    // lower summation limit 2^{L - N + level - 1}
    let lower = 1u64 << (big_l - n + level - 1);
    let sum = valuation_prefix_sum(k) - valuation_prefix_sum(lower);
    let value = (k as i128 + 1) * ((1i128 << (n - level + 1)) - 1) + lower as i128
        - (1i128 << big_l)
        - 1
        + sum as i128;
    Ok(value as u64)
}

/// The postorder rearrangement: the n-th interval in postorder goes to the
/// n-th interval in lexicographic order.
pub fn tau(interval: DyadicInterval, depth: Depth) -> Result<DyadicInterval> {
    let level = level_of(interval, depth)?;
    let pos = pos_of(interval, depth)?;
    DyadicInterval::new(level, pos, depth)
}

/// Interval with the given postorder ordinal, found by descending the tree.
pub fn post_interval(ordinal: u64, depth: Depth) -> Result<DyadicInterval> {
    let max = depth.node_count();
    if ordinal == 0 || ordinal > max {
        return Err(Error::OrdinalOutOfRange { ordinal, max });
    }
    let mut level = 0u32;
    let mut pos = 0u64;
    let mut n = ordinal;
    loop {
        let subtree_size = (1u64 << (depth.get() - level + 1)) - 1;
        if n == subtree_size {
            return DyadicInterval::new(level, pos, depth);
        }
        let child_size = (subtree_size - 1) / 2;
        if n <= child_size {
            level += 1;
            pos *= 2;
        } else {
            n -= child_size;
            level += 1;
            pos = 2 * pos + 1;
        }
    }
}

/// The inverse of `tau`.
pub fn sigma(interval: DyadicInterval, depth: Depth) -> Result<DyadicInterval> {
    check_in_tree(interval, depth)?;
    post_interval(lex_ordinal(interval), depth)
}

/// `a ⪯ b` in the postorder, decided through ordinals.
pub fn postorder_precedes(a: DyadicInterval, b: DyadicInterval, depth: Depth) -> Result<bool> {
    Ok(post_ordinal_closed(a, depth)? <= post_ordinal_closed(b, depth)?)
}

/// The geometric definition of the postorder: `a` and `b` disjoint with `a`
/// to the left, or `a` contained in `b`. Kept as an oracle for the ordinal
/// route.
pub fn geometric_precedes(a: DyadicInterval, b: DyadicInterval) -> bool {
    if b.contains(a) {
        return true;
    }
    if a.is_disjoint_from(b) {
        return a.right_endpoint() <= b.left_endpoint();
    }
    false
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RearrangementKind {
    Postorder,
    InversePostorder,
}

/// A bijection on the depth-`N` tree with precomputed forward and inverse
/// tables, indexed by `lex_index`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rearrangement {
    depth: Depth,
    forward: Vec<u64>,
    inverse: Vec<u64>,
}

impl Rearrangement {
    pub fn identity(depth: Depth) -> Result<Self> {
        let table: Vec<u64> = (0..depth.node_count()).collect();
        Self::from_table(depth, table)
    }

    pub fn postorder(depth: Depth) -> Result<Self> {
        let table: Result<Vec<u64>> = enumerate(depth)
            .into_iter()
            .map(|i| Ok(tau(i, depth)?.lex_index()))
            .collect();
        Self::from_table(depth, table?)
    }

    pub fn inverse_postorder(depth: Depth) -> Result<Self> {
        Ok(Self::postorder(depth)?.inverted())
    }

    pub fn build(depth: Depth, kind: RearrangementKind) -> Result<Self> {
        match kind {
            RearrangementKind::Postorder => Self::postorder(depth),
            RearrangementKind::InversePostorder => Self::inverse_postorder(depth),
        }
    }

    /// Explicit table: entry `i` is the lex index of the image of the
    /// interval with lex index `i`. Rejected unless bijective.
    pub fn from_table(depth: Depth, forward: Vec<u64>) -> Result<Self> {
        let count = depth.node_count();
        if count > (1u64 << 29) {
            return Err(Error::SetTooLarge(depth.get()));
        }
        if forward.len() as u64 != count {
            return Err(Error::NotAPermutation);
        }
        let mut inverse = vec![u64::MAX; count as usize];
        for (src, &dst) in forward.iter().enumerate() {
            if dst >= count || inverse[dst as usize] != u64::MAX {
                return Err(Error::NotAPermutation);
            }
            inverse[dst as usize] = src as u64;
        }
        Ok(Rearrangement {
            depth,
            forward,
            inverse,
        })
    }

    pub fn from_pairs(
        depth: Depth,
        pairs: impl IntoIterator<Item = (DyadicInterval, DyadicInterval)>,
    ) -> Result<Self> {
        let count = depth.node_count() as usize;
        let mut forward = vec![u64::MAX; count];
        for (src, dst) in pairs {
            check_in_tree(src, depth)?;
            check_in_tree(dst, depth)?;
            let i = src.lex_index() as usize;
            if forward[i] != u64::MAX {
                return Err(Error::NotAPermutation);
            }
            forward[i] = dst.lex_index();
        }
        if forward.contains(&u64::MAX) {
            return Err(Error::NotAPermutation);
        }
        Self::from_table(depth, forward)
    }

    pub fn depth(&self) -> Depth {
        self.depth
    }

    pub fn inverted(&self) -> Rearrangement {
        Rearrangement {
            depth: self.depth,
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    pub fn apply(&self, interval: DyadicInterval) -> Result<DyadicInterval> {
        check_in_tree(interval, self.depth)?;
        DyadicInterval::from_lex_index(self.forward[interval.lex_index() as usize], self.depth)
    }

    pub fn apply_inverse(&self, interval: DyadicInterval) -> Result<DyadicInterval> {
        check_in_tree(interval, self.depth)?;
        DyadicInterval::from_lex_index(self.inverse[interval.lex_index() as usize], self.depth)
    }

    pub fn map_set(&self, set: &IntervalSet) -> Result<IntervalSet> {
        if set.depth() != self.depth {
            return Err(Error::DepthMismatch);
        }
        let mut out = IntervalSet::empty(self.depth)?;
        for i in set.iter() {
            out.insert(self.apply(i)?);
        }
        Ok(out)
    }

    pub fn iter_pairs(&self) -> impl Iterator<Item = (DyadicInterval, DyadicInterval)> + '_ {
        let depth = self.depth;
        self.forward.iter().enumerate().map(move |(src, &dst)| {
            (
                DyadicInterval::from_lex_index(src as u64, depth).unwrap(),
                DyadicInterval::from_lex_index(dst, depth).unwrap(),
            )
        })
    }
}

/// All intervals between `j1` and `j2` in the postorder.
pub fn post_order_interval(
    j1: DyadicInterval,
    j2: DyadicInterval,
    depth: Depth,
) -> Result<IntervalSet> {
    let a1 = post_ordinal_closed(j1, depth)?;
    let a2 = post_ordinal_closed(j2, depth)?;
    if a1 > a2 {
        return Err(Error::NotPostorderOrdered);
    }
    let mut out = IntervalSet::empty(depth)?;
    for n in a1..=a2 {
        out.insert(post_interval(n, depth)?);
    }
    Ok(out)
}

/// All intervals between `e1` and `e2` in the lexicographic order.
pub fn lex_order_interval(
    e1: DyadicInterval,
    e2: DyadicInterval,
    depth: Depth,
) -> Result<IntervalSet> {
    check_in_tree(e1, depth)?;
    check_in_tree(e2, depth)?;
    let b1 = lex_ordinal(e1);
    let b2 = lex_ordinal(e2);
    if b1 > b2 {
        return Err(Error::NotLexOrdered);
    }
    let mut out = IntervalSet::empty(depth)?;
    for n in b1..=b2 {
        out.insert(lex_interval(n, depth)?);
    }
    Ok(out)
}
