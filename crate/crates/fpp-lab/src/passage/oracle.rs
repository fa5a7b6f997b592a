//! Exhaustive simple-path enumeration on tiny regions.
//!
//! This is the independent reference for the search engines: it never
//! touches the priority-queue code path. Costs are forward sums in path
//! order (the same accumulation discipline the engines report), and ties
//! are resolved by the same comparator the engine's predecessor rule
//! induces: among minimum-cost paths, the one whose vertex sequence read
//! from the target end is lexicographically smallest.
//!
//! Only call this on regions with a handful of vertices; enumeration is
//! exponential by design.

use crate::geom::Region;
use crate::hashing::CoordSet;
use crate::weight_field::{EdgeWeights, LatticePoint};

use super::edge_weight_between;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteResult {
    pub time: f64,
    pub path: Vec<LatticePoint>,
}

/// `true` when `a` precedes `b` in the reversed-lexicographic path order.
fn reversed_lex_less(a: &[LatticePoint], b: &[LatticePoint]) -> bool {
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        match x.cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    a.len() < b.len()
}

struct Dfs<'a> {
    field: &'a dyn EdgeWeights,
    region: &'a Region,
    dst: &'a LatticePoint,
    visited: CoordSet<LatticePoint>,
    stack: Vec<LatticePoint>,
    best: Option<BruteResult>,
}

impl Dfs<'_> {
    fn explore(&mut self, at: LatticePoint, cost: f64) {
        if let Some(best) = &self.best {
            // Positive weights: any strict extension only grows the sum.
            if cost > best.time || (cost == best.time && &at != self.dst) {
                return;
            }
        }
        if &at == self.dst {
            let candidate = BruteResult { time: cost, path: self.stack.clone() };
            let replace = match &self.best {
                None => true,
                Some(best) => {
                    cost < best.time
                        || (cost == best.time && reversed_lex_less(&candidate.path, &best.path))
                }
            };
            if replace {
                self.best = Some(candidate);
            }
            return;
        }
        for axis in 0..at.dimension() {
            for delta in [1i64, -1] {
                let n = at.step(axis, delta);
                if !self.region.contains_lattice(&n) || self.visited.contains(&n) {
                    continue;
                }
                let w = edge_weight_between(self.field, &at, &n);
                self.visited.insert(n.clone());
                self.stack.push(n.clone());
                self.explore(n.clone(), cost + w);
                self.stack.pop();
                self.visited.remove(&n);
            }
        }
    }
}

/// Minimum passage time and tie-broken geodesic by exhaustive enumeration
/// of simple paths inside the region. `None` when no path exists.
pub fn brute_force_passage(
    field: &dyn EdgeWeights,
    region: &Region,
    src: &LatticePoint,
    dst: &LatticePoint,
) -> Option<BruteResult> {
    if !region.contains_lattice(src) || !region.contains_lattice(dst) {
        return None;
    }
    let mut dfs = Dfs {
        field,
        region,
        dst,
        visited: Default::default(),
        stack: vec![src.clone()],
        best: None,
    };
    dfs.visited.insert(src.clone());
    dfs.explore(src.clone(), 0.0);
    dfs.best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Region;
    use crate::passage::{passage_time, QuerySpec, TargetSet};
    use crate::weight_field::{DistributionSpec, WeightField};

    fn lp(x: i64, y: i64) -> LatticePoint {
        LatticePoint::new(vec![x, y])
    }

    fn boxr(x: f64, y: f64) -> Region {
        Region::Box { lo: vec![0.0, 0.0], hi: vec![x, y] }
    }

    #[test]
    fn engine_equals_enumeration_on_small_boxes() {
        for seed in 0..50u64 {
            let f = WeightField::new(
                seed,
                2,
                DistributionSpec::TwoPoint { w0: 0.02, w1: 0.05, p: 0.5 },
            )
            .unwrap();
            for (bx, by) in [(2.0, 1.0), (2.0, 2.0), (3.0, 2.0)] {
                let region = boxr(bx, by);
                let src = lp(0, 0);
                let dst = lp(bx as i64, by as i64);
                let brute = brute_force_passage(&f, &region, &src, &dst).unwrap();
                let q = QuerySpec::new(
                    &f,
                    region.clone(),
                    vec![src.clone()],
                    TargetSet::single(dst.clone()),
                );
                let r = passage_time(&q).unwrap();
                assert_eq!(r.time.to_bits(), brute.time.to_bits(), "seed {seed} box {bx}x{by}");
                assert_eq!(r.path.vertices, brute.path, "seed {seed} box {bx}x{by}");
            }
        }
    }

    #[test]
    fn tie_break_matches_on_heavily_tied_instances() {
        // Constant-ish two-point with equal atoms: every monotone path
        // ties, exercising the reversed-lex comparator everywhere.
        let f = WeightField::new(
            9,
            2,
            DistributionSpec::TwoPoint { w0: 0.03, w1: 0.03, p: 0.5 },
        )
        .unwrap();
        let region = boxr(3.0, 3.0);
        let brute = brute_force_passage(&f, &region, &lp(0, 0), &lp(3, 3)).unwrap();
        let q = QuerySpec::new(&f, region, vec![lp(0, 0)], TargetSet::single(lp(3, 3)));
        let r = passage_time(&q).unwrap();
        assert_eq!(r.time.to_bits(), brute.time.to_bits());
        assert_eq!(r.path.vertices, brute.path);
    }

    #[test]
    fn disconnected_region_gives_none() {
        let f = WeightField::new(1, 2, DistributionSpec::Constant { c: 0.05 }).unwrap();
        let region = boxr(1.0, 0.0);
        assert!(brute_force_passage(&f, &region, &lp(0, 0), &lp(5, 5)).is_none());
    }
}
