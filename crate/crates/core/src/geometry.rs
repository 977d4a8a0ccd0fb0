//! Cones, right fill-ups, maximal-interval decompositions of postorder
//! order intervals, and the Carleson bounds they satisfy.

use serde::Serialize;

use crate::dyadic::{carleson, subtree, Depth, DyadicInterval, IntervalSet};
use crate::error::{Error, Result};
use crate::order::post_order_interval;
use crate::rational::DyadicRational;

/// The ancestor chain `C_1 = I ⊂ C_2 ⊂ ... ⊂ C_n = J`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cone {
    pub chain: Vec<DyadicInterval>,
}

impl Cone {
    pub fn steps(&self) -> usize {
        self.chain.len()
    }

    pub fn as_set(&self, depth: Depth) -> Result<IntervalSet> {
        IntervalSet::from_intervals(depth, self.chain.iter().copied())
    }
}

/// One block `U_{i+1}` per cone step. A block is empty exactly when the cone
/// passes through a right child at that step; otherwise it is the complete
/// subtree filling `C_{i+1} \ C_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RightFillUp {
    pub blocks: Vec<IntervalSet>,
}

impl RightFillUp {
    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|b| b.is_empty())
    }

    pub fn as_set(&self, depth: Depth) -> Result<IntervalSet> {
        let mut out = IntervalSet::empty(depth)?;
        for b in &self.blocks {
            out = out.union(b)?;
        }
        Ok(out)
    }
}

/// The unique ancestor chain from `inner` up to `outer`.
pub fn cone(inner: DyadicInterval, outer: DyadicInterval, depth: Depth) -> Result<Cone> {
    if inner.level() > depth.get() || outer.level() > depth.get() {
        return Err(Error::LevelOutOfRange {
            level: inner.level().max(outer.level()),
            depth: depth.get(),
        });
    }
    if !outer.contains(inner) {
        return Err(Error::NotNested);
    }
    let mut chain = vec![inner];
    let mut cur = inner;
    while cur != outer {
        cur = cur.parent()?;
        chain.push(cur);
    }
    Ok(Cone { chain })
}

/// The right fill-up of `cone(inner, outer)`.
pub fn right_fill_up(
    inner: DyadicInterval,
    outer: DyadicInterval,
    depth: Depth,
) -> Result<RightFillUp> {
    let cone = cone(inner, outer, depth)?;
    let mut blocks = Vec::with_capacity(cone.steps().saturating_sub(1));
    for window in cone.chain.windows(2) {
        let (lower, upper) = (window[0], window[1]);
        if lower.is_left_child() {
            // C_{i+1} \ C_i is the right child of C_{i+1}
            let (_, sibling) = upper.children(depth)?;
            blocks.push(subtree(sibling, depth)?);
        } else {
            blocks.push(IntervalSet::empty(depth)?);
        }
    }
    Ok(RightFillUp { blocks })
}

/// Geometric representation of a postorder order interval: its maximal
/// intervals `L_1..L_m`, the cone and right fill-up toward `L_1`, and the
/// complete subtrees below `L_2..L_m`.
#[derive(Clone, Debug, Serialize)]
pub struct MaximalDecomposition {
    pub j1: DyadicInterval,
    pub j2: DyadicInterval,
    pub maximal: Vec<DyadicInterval>,
    pub cone: Cone,
    pub fillup: RightFillUp,
    pub subtrees: Vec<IntervalSet>,
}

pub fn maximal_decomposition(
    j1: DyadicInterval,
    j2: DyadicInterval,
    depth: Depth,
) -> Result<MaximalDecomposition> {
    let order_interval = post_order_interval(j1, j2, depth)?;
    // inclusion-maximal members, left to right
    let mut maximal: Vec<DyadicInterval> = order_interval
        .iter()
        .filter(|&i| {
            let mut cur = i;
            while let Ok(p) = cur.parent() {
                if order_interval.contains(p) {
                    return false;
                }
                cur = p;
            }
            true
        })
        .collect();
    maximal.sort_by_key(|i| i.pos() << (depth.get() - i.level()));

    let l1 = maximal[0];
    let cone = cone(j1, l1, depth)?;
    let fillup = right_fill_up(j1, l1, depth)?;
    let subtrees: Result<Vec<IntervalSet>> = maximal[1..]
        .iter()
        .map(|&l| subtree(l, depth))
        .collect();
    let subtrees = subtrees?;

    let decomposition = MaximalDecomposition {
        j1,
        j2,
        maximal,
        cone,
        fillup,
        subtrees,
    };
    let rebuilt = decomposition.reconstruct(depth)?;
    assert_eq!(
        rebuilt, order_interval,
        "decomposition must reproduce the ordinal-range order interval"
    );
    Ok(decomposition)
}

impl MaximalDecomposition {
    /// Union of cone, fill-up and subtree pieces.
    pub fn reconstruct(&self, depth: Depth) -> Result<IntervalSet> {
        let mut out = self.cone.as_set(depth)?;
        out = out.union(&self.fillup.as_set(depth)?)?;
        for t in &self.subtrees {
            out = out.union(t)?;
        }
        Ok(out)
    }

    /// Check the four structural properties of the decomposition as stated:
    /// strict size decrease in the middle, weak decrease at the end,
    /// left-to-right adjacency of closures, and the endpoint conditions.
    /// Returns human-readable descriptions of any violations.
    pub fn violations(&self, depth: Depth) -> Vec<String> {
        let mut out = Vec::new();
        let m = self.maximal.len();
        for i in 1..m {
            let prev = self.maximal[i - 1];
            let cur = self.maximal[i];
            if !prev.is_disjoint_from(cur) {
                out.push(format!("maximal intervals {prev:?} and {cur:?} are not disjoint"));
            }
            if i < m - 1 && cur.level() <= prev.level() {
                out.push(format!(
                    "|L_{}| must be strictly smaller than |L_{}|",
                    i + 1,
                    i
                ));
            }
            if i == m - 1 && cur.level() < prev.level() {
                out.push(format!("|L_m| must be at most |L_{{m-1}}| (m = {m})"));
            }
            if prev.right_endpoint() != cur.left_endpoint() {
                out.push(format!(
                    "closures of L_{} and L_{} must share exactly the left endpoint of L_{}",
                    i,
                    i + 1,
                    i + 1
                ));
            }
        }
        if !self.maximal[0].contains(self.j1) {
            out.push("J1 must be contained in L_1".to_string());
        }
        if self.maximal[m - 1] != self.j2 {
            out.push("J2 must equal L_m".to_string());
        }
        // disjointness of the pieces
        match self.piecewise_disjoint(depth) {
            Ok(true) => {}
            Ok(false) => out.push("cone, fill-up and subtrees must be pairwise disjoint".to_string()),
            Err(e) => out.push(format!("piece check failed: {e}")),
        }
        out
    }

    fn piecewise_disjoint(&self, depth: Depth) -> Result<bool> {
        let mut pieces: Vec<IntervalSet> = vec![self.cone.as_set(depth)?];
        for b in &self.fillup.blocks {
            pieces.push(b.clone());
        }
        pieces.extend(self.subtrees.iter().cloned());
        let mut seen = IntervalSet::empty(depth)?;
        for p in &pieces {
            if !seen.intersection(p)?.is_empty() {
                return Ok(false);
            }
            seen = seen.union(p)?;
        }
        Ok(true)
    }
}

/// Integer bounds around an exact Carleson value, with the exactly evaluated
/// comparison. `asserted` is false when the theorem's hypothesis does not
/// apply (then `satisfied` only reflects the upper bound).
#[derive(Clone, Debug, Serialize)]
pub struct CarlesonBoundReport {
    pub value: DyadicRational,
    pub argsup: Option<DyadicInterval>,
    pub lower: i64,
    pub upper: i64,
    pub lower_asserted: bool,
    pub satisfied: bool,
}

/// Exact Carleson constant of `cone ∪ fill-up`, with the two-sided bound
/// `N - level(I) + 1 <= value <= N - level(J) + 2` whenever the fill-up is
/// non-empty.
pub fn carleson_cone_fillup(
    inner: DyadicInterval,
    outer: DyadicInterval,
    depth: Depth,
) -> Result<CarlesonBoundReport> {
    let cone = cone(inner, outer, depth)?;
    let fillup = right_fill_up(inner, outer, depth)?;
    let set = cone.as_set(depth)?.union(&fillup.as_set(depth)?)?;
    let result = carleson(&set);
    let n = depth.get() as i64;
    let lower = n - inner.level() as i64 + 1;
    let upper = n - outer.level() as i64 + 2;
    let lower_asserted = !fillup.is_empty();
    let lower_rational = DyadicRational::from_integer(lower);
    let upper_rational = DyadicRational::from_integer(upper);
    let satisfied = result.value <= upper_rational
        && (!lower_asserted || result.value >= lower_rational);
    Ok(CarlesonBoundReport {
        value: result.value,
        argsup: result.argsup,
        lower,
        upper,
        lower_asserted,
        satisfied,
    })
}

/// Exact Carleson constant of a postorder order interval, with the bounds
/// `N - level(J1) + 1 <= value <= N - level(L1) + 2`. The lower bound is
/// asserted only when the right fill-up toward `L_1` is non-empty; that is
/// the hypothesis its proof rests on, and e.g. singleton order intervals
/// show it is necessary.
pub fn carleson_order_interval(
    j1: DyadicInterval,
    j2: DyadicInterval,
    depth: Depth,
) -> Result<(MaximalDecomposition, CarlesonBoundReport)> {
    let decomposition = maximal_decomposition(j1, j2, depth)?;
    let set = post_order_interval(j1, j2, depth)?;
    let result = carleson(&set);
    let n = depth.get() as i64;
    let l1 = decomposition.maximal[0];
    let lower = n - j1.level() as i64 + 1;
    let upper = n - l1.level() as i64 + 2;
    let lower_asserted = !decomposition.fillup.is_empty();
    let satisfied = result.value <= DyadicRational::from_integer(upper)
        && (!lower_asserted || result.value >= DyadicRational::from_integer(lower));
    let report = CarlesonBoundReport {
        value: result.value,
        argsup: result.argsup,
        lower,
        upper,
        lower_asserted,
        satisfied,
    };
    Ok((decomposition, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::enumerate;
    use crate::order::postorder_precedes;

    fn iv(level: u32, pos: u64, depth: Depth) -> DyadicInterval {
        DyadicInterval::new(level, pos, depth).unwrap()
    }

    #[test]
    fn cone_examples() {
        let d4 = Depth::new(4).unwrap();
        let c = cone(iv(4, 4, d4), iv(1, 0, d4), d4).unwrap();
        assert_eq!(
            c.chain,
            vec![iv(4, 4, d4), iv(3, 2, d4), iv(2, 1, d4), iv(1, 0, d4)]
        );
        let single = cone(iv(2, 1, d4), iv(2, 1, d4), d4).unwrap();
        assert_eq!(single.steps(), 1);
        let d2 = Depth::new(2).unwrap();
        let c = cone(iv(2, 3, d2), iv(0, 0, d2), d2).unwrap();
        assert_eq!(c.chain, vec![iv(2, 3, d2), iv(1, 1, d2), iv(0, 0, d2)]);
        assert_eq!(cone(iv(1, 0, d2), iv(1, 1, d2), d2), Err(Error::NotNested));
    }

    #[test]
    fn fill_up_examples() {
        let d4 = Depth::new(4).unwrap();
        let f = right_fill_up(iv(4, 4, d4), iv(1, 0, d4), d4).unwrap();
        assert_eq!(f.blocks.len(), 3);
        assert_eq!(f.blocks[0].iter().collect::<Vec<_>>(), vec![iv(4, 5, d4)]);
        assert_eq!(
            f.blocks[1].iter().collect::<Vec<_>>(),
            vec![iv(3, 3, d4), iv(4, 6, d4), iv(4, 7, d4)]
        );
        assert!(f.blocks[2].is_empty());
        assert_eq!(f.as_set(d4).unwrap().len(), 4);

        let d2 = Depth::new(2).unwrap();
        let f = right_fill_up(iv(2, 3, d2), iv(0, 0, d2), d2).unwrap();
        assert!(f.is_empty());

        let same = right_fill_up(iv(1, 0, d2), iv(1, 0, d2), d2).unwrap();
        assert!(same.blocks.is_empty());
    }

    #[test]
    fn decomposition_examples() {
        let d2 = Depth::new(2).unwrap();
        let dec = maximal_decomposition(iv(2, 1, d2), iv(2, 2, d2), d2).unwrap();
        assert_eq!(dec.maximal, vec![iv(1, 0, d2), iv(2, 2, d2)]);
        assert!(dec.violations(d2).is_empty());

        let full = maximal_decomposition(iv(2, 0, d2), iv(0, 0, d2), d2).unwrap();
        assert_eq!(full.maximal, vec![iv(0, 0, d2)]);
        assert_eq!(full.reconstruct(d2).unwrap().len(), 7);

        // nested endpoints: single maximal interval equal to J2
        let d4 = Depth::new(4).unwrap();
        let nested = maximal_decomposition(iv(4, 4, d4), iv(1, 0, d4), d4).unwrap();
        assert_eq!(nested.maximal, vec![iv(1, 0, d4)]);
        assert!(nested.violations(d4).is_empty());
    }

    #[test]
    fn decomposition_exhaustive_small() {
        for n in 0..=4u32 {
            let d = Depth::new(n).unwrap();
            let all = enumerate(d);
            for &j1 in &all {
                for &j2 in &all {
                    if !postorder_precedes(j1, j2, d).unwrap() {
                        continue;
                    }
                    let dec = maximal_decomposition(j1, j2, d).unwrap();
                    let violations = dec.violations(d);
                    assert!(
                        violations.is_empty(),
                        "N={n} J1={j1:?} J2={j2:?}: {violations:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn cone_carleson_at_most_two() {
        for n in 0..=6u32 {
            let d = Depth::new(n).unwrap();
            let all = enumerate(d);
            for &i in &all {
                for &j in &all {
                    if !j.contains(i) {
                        continue;
                    }
                    let c = cone(i, j, d).unwrap().as_set(d).unwrap();
                    assert!(carleson(&c).value <= DyadicRational::from_integer(2));
                }
            }
        }
    }

    #[test]
    fn cone_fillup_bounds() {
        let d4 = Depth::new(4).unwrap();
        let report = carleson_cone_fillup(iv(4, 4, d4), iv(1, 0, d4), d4).unwrap();
        assert!(report.lower_asserted);
        assert_eq!((report.lower, report.upper), (1, 5));
        assert!(report.satisfied);

        // leaf-on-itself: no fill-up, value 1
        let leaf = carleson_cone_fillup(iv(4, 0, d4), iv(4, 0, d4), d4).unwrap();
        assert!(!leaf.lower_asserted);
        assert_eq!(leaf.value, DyadicRational::one());
    }

    #[test]
    fn fillup_block_value_identity() {
        // each non-empty block U_{i+1} has Carleson constant N + i - level(I)
        for n in 0..=6u32 {
            let d = Depth::new(n).unwrap();
            let all = enumerate(d);
            for &i in &all {
                for &j in &all {
                    if !j.contains(i) {
                        continue;
                    }
                    let f = right_fill_up(i, j, d).unwrap();
                    for (step, block) in f.blocks.iter().enumerate() {
                        if block.is_empty() {
                            continue;
                        }
                        let expected = n as i64 + (step as i64 + 1) - i.level() as i64;
                        assert_eq!(
                            carleson(block).value,
                            DyadicRational::from_integer(expected)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn order_interval_bounds_example() {
        let d2 = Depth::new(2).unwrap();
        let (dec, report) = carleson_order_interval(iv(2, 1, d2), iv(2, 2, d2), d2).unwrap();
        assert_eq!(dec.maximal[0], iv(1, 0, d2));
        assert_eq!(report.value, DyadicRational::ratio(3, 1));
        assert_eq!((report.lower, report.upper), (1, 3));
        assert!(report.satisfied);

        let (_, full) = carleson_order_interval(iv(2, 0, d2), iv(0, 0, d2), d2).unwrap();
        assert_eq!(full.value, DyadicRational::from_integer(3));
        assert!(full.satisfied);

        let (_, single) = carleson_order_interval(iv(1, 1, d2), iv(1, 1, d2), d2).unwrap();
        assert_eq!(single.value, DyadicRational::one());
        assert!(!single.lower_asserted);
        assert!(single.satisfied);
    }
}
