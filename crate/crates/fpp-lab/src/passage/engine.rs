//! General multi-source best-first search over the implicit lattice.
//!
//! Visited and tentative state live in hash maps keyed by coordinates, so
//! cylinders at large scales with sublinear height never get materialized
//! densely. Non-negative weights make the search exact.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geom::Region;
use crate::hashing::CoordMap;
use crate::weight_field::{EdgeWeights, LatticePoint};

use super::{PassageError, PassageResult, Path, QuerySpec, TargetSet};

struct Slot {
    time: f64,
    pred: Option<LatticePoint>,
    settled: bool,
}

/// Frontier entry; `BinaryHeap` is a max-heap, so the ordering is reversed
/// to pop the smallest `(time, lexicographic vertex)` first.
struct Entry {
    time: f64,
    point: LatticePoint,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.point == other.point
    }
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.point.cmp(&self.point))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

enum TargetTest {
    Points(crate::hashing::CoordSet<LatticePoint>),
    Face(FaceTest),
}

/// Membership in the floor image of a hyperplane: `x` is hit iff the
/// plane `{ y : y . n = c }` meets the half-open cell `x + [0,1)^d`.
pub(crate) struct FaceTest {
    normal: Vec<f64>,
    offset: f64,
    neg_sum: f64,
    pos_sum: f64,
    has_neg: bool,
    has_pos: bool,
}

impl FaceTest {
    pub(crate) fn new(normal: &[f64], offset: f64) -> Self {
        FaceTest {
            normal: normal.to_vec(),
            offset,
            neg_sum: normal.iter().map(|&c| c.min(0.0)).sum(),
            pos_sum: normal.iter().map(|&c| c.max(0.0)).sum(),
            has_neg: normal.iter().any(|&c| c < 0.0),
            has_pos: normal.iter().any(|&c| c > 0.0),
        }
    }

    #[inline]
    pub(crate) fn hit(&self, p: &LatticePoint) -> bool {
        let base: f64 = p.coords.iter().zip(&self.normal).map(|(&c, &n)| c as f64 * n).sum();
        let lo = base + self.neg_sum;
        let hi = base + self.pos_sum;
        // Half-open cells: the infimum is attained only without negative
        // components, the supremum only without positive ones.
        let above = self.offset > lo || (self.offset == lo && !self.has_neg);
        let below = self.offset < hi || (self.offset == hi && !self.has_pos);
        above && below
    }
}

impl TargetTest {
    fn new(target: &TargetSet, region: &Region) -> Result<Self, PassageError> {
        match target {
            TargetSet::Points(pts) => {
                if pts.is_empty() {
                    return Err(PassageError::TargetOutsideRegion);
                }
                let set: crate::hashing::CoordSet<LatticePoint> =
                    pts.iter().filter(|p| region.contains_lattice(p)).cloned().collect();
                if set.is_empty() {
                    return Err(PassageError::TargetOutsideRegion);
                }
                Ok(TargetTest::Points(set))
            }
            TargetSet::Face { normal, offset } => {
                Ok(TargetTest::Face(FaceTest::new(normal, *offset)))
            }
        }
    }

    #[inline]
    fn hit(&self, p: &LatticePoint) -> bool {
        match self {
            TargetTest::Points(set) => set.contains(p),
            TargetTest::Face(face) => face.hit(p),
        }
    }
}

struct Search {
    dist: CoordMap<LatticePoint, Slot>,
    heap: BinaryHeap<Entry>,
    pops: u64,
}

impl Search {
    fn init(region: &Region, source: &[LatticePoint], d: usize) -> Result<Self, PassageError> {
        let mut search =
            Search { dist: Default::default(), heap: BinaryHeap::new(), pops: 0 };
        let mut any = false;
        for s in source {
            if s.dimension() != d {
                return Err(PassageError::Weight(
                    crate::weight_field::WeightError::DimensionMismatch {
                        expected: d,
                        got: s.dimension(),
                    },
                ));
            }
            if !region.contains_lattice(s) {
                continue;
            }
            any = true;
            search
                .dist
                .entry(s.clone())
                .or_insert(Slot { time: 0.0, pred: None, settled: false });
            search.heap.push(Entry { time: 0.0, point: s.clone() });
        }
        if !any {
            return Err(PassageError::SourceOutsideRegion);
        }
        Ok(search)
    }

    /// Settle the next vertex, relaxing its neighbors. Returns the settled
    /// point and its final time, or `None` when the frontier is exhausted.
    fn step(
        &mut self,
        field: &dyn EdgeWeights,
        region: &Region,
        budget: Option<u64>,
        expansions: &mut Option<Vec<(LatticePoint, f64)>>,
    ) -> Result<Option<(LatticePoint, f64)>, PassageError> {
        loop {
            let Some(Entry { time, point }) = self.heap.pop() else {
                return Ok(None);
            };
            {
                let slot = self.dist.get_mut(&point).expect("heap entry has a slot");
                if slot.settled || time > slot.time {
                    continue;
                }
                slot.settled = true;
            }
            self.pops += 1;
            if let Some(b) = budget {
                if self.pops > b {
                    return Err(PassageError::BudgetExhausted { expanded: self.pops });
                }
            }
            if let Some(log) = expansions {
                log.push((point.clone(), time));
            }
            let d = point.dimension();
            for axis in 0..d {
                for delta in [1i64, -1] {
                    let n = point.step(axis, delta);
                    if !region.contains_lattice(&n) {
                        continue;
                    }
                    let w = if delta == 1 {
                        field.weight_from(&point.coords, axis)
                    } else {
                        field.weight_from(&n.coords, axis)
                    };
                    debug_assert!(w > 0.0, "edge weights must be positive");
                    let nd = time + w;
                    match self.dist.entry(n) {
                        std::collections::hash_map::Entry::Vacant(v) => {
                            let key = v.key().clone();
                            v.insert(Slot { time: nd, pred: Some(point.clone()), settled: false });
                            self.heap.push(Entry { time: nd, point: key });
                        }
                        std::collections::hash_map::Entry::Occupied(mut o) => {
                            let slot = o.get_mut();
                            if slot.settled {
                                continue;
                            }
                            if nd < slot.time {
                                slot.time = nd;
                                slot.pred = Some(point.clone());
                                self.heap.push(Entry { time: nd, point: o.key().clone() });
                            } else if nd == slot.time {
                                // Exact tie: lexicographically smaller
                                // predecessor wins.
                                if slot.pred.as_ref().map_or(true, |p| point < *p) {
                                    slot.pred = Some(point.clone());
                                }
                            }
                        }
                    }
                }
            }
            return Ok(Some((point, time)));
        }
    }

    fn extract_path(&self, end: &LatticePoint) -> Path {
        let mut vertices = vec![end.clone()];
        let mut cur = end;
        while let Some(pred) = self.dist.get(cur).and_then(|s| s.pred.as_ref()) {
            vertices.push(pred.clone());
            cur = pred;
        }
        vertices.reverse();
        Path { vertices }
    }
}

/// First-settled-target query.
pub(super) fn run(q: &QuerySpec) -> Result<PassageResult, PassageError> {
    let d = q.field.dimension();
    let target = TargetTest::new(&q.target, &q.region)?;
    let mut search = Search::init(&q.region, &q.source, d)?;
    let mut expansions = if q.record_expansions { Some(Vec::new()) } else { None };
    while let Some((point, time)) =
        search.step(q.field, &q.region, q.budget, &mut expansions)?
    {
        if target.hit(&point) {
            let path = search.extract_path(&point);
            let src_hit = path.vertices.first().expect("path is nonempty").clone();
            debug_assert!(
                path.resum(q.field).to_bits() == time.to_bits(),
                "path audit failed"
            );
            return Ok(PassageResult {
                time,
                nodes_expanded: search.pops,
                src_hit,
                dst_hit: point,
                path,
                expansions,
            });
        }
    }
    Err(PassageError::Disconnected)
}

/// Multi-source distances to every `wanted` point (exhaustive until all
/// settled or the component is drained).
pub(super) fn run_to_all(
    field: &dyn EdgeWeights,
    region: &Region,
    source: &[LatticePoint],
    wanted: &[LatticePoint],
    budget: Option<u64>,
) -> Result<CoordMap<LatticePoint, f64>, PassageError> {
    let mut search = Search::init(region, source, field.dimension())?;
    let mut remaining: crate::hashing::CoordSet<LatticePoint> =
        wanted.iter().filter(|p| region.contains_lattice(p)).cloned().collect();
    let mut out: CoordMap<LatticePoint, f64> = Default::default();
    let mut expansions = None;
    if remaining.is_empty() {
        return Ok(out);
    }
    while let Some((point, time)) = search.step(field, region, budget, &mut expansions)? {
        if remaining.remove(&point) {
            out.insert(point, time);
            if remaining.is_empty() {
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::geom::{AxialInterval, Cylinder, Frame, Region};
    use crate::weight_field::{DistributionSpec, WeightField};

    fn lp(x: i64, y: i64) -> LatticePoint {
        LatticePoint::new(vec![x, y])
    }

    fn constant_field(c: f64) -> WeightField {
        WeightField::new(1, 2, DistributionSpec::Constant { c }).unwrap()
    }

    #[test]
    fn constant_axis_query() {
        let f = constant_field(0.05);
        let q = QuerySpec::new(
            &f,
            Region::Everything,
            vec![lp(0, 0)],
            TargetSet::single(lp(10, 0)),
        );
        let r = passage_time(&q).unwrap();
        // 10 edges at 0.05, accumulated left to right.
        let mut want = 0.0f64;
        for _ in 0..10 {
            want += 0.05;
        }
        assert_eq!(r.time.to_bits(), want.to_bits());
        assert!(r.audit(&f, &Region::Everything));
    }

    #[test]
    fn identity_query() {
        let f = constant_field(0.05);
        let q = QuerySpec::new(&f, Region::Everything, vec![lp(3, 4)], TargetSet::single(lp(3, 4)));
        let r = passage_time(&q).unwrap();
        assert_eq!(r.time, 0.0);
        assert_eq!(r.path.vertices, vec![lp(3, 4)]);
    }

    #[test]
    fn constant_geodesic_is_straight_by_tie_break() {
        let f = constant_field(0.05);
        let q = QuerySpec::new(
            &f,
            Region::Everything,
            vec![lp(0, 0)],
            TargetSet::single(lp(3, 0)),
        );
        let path = geodesic(&q).unwrap();
        assert_eq!(path.vertices, vec![lp(0, 0), lp(1, 0), lp(2, 0), lp(3, 0)]);
    }

    #[test]
    fn slab_of_height_zero_forces_straight_path() {
        let f = WeightField::new(5, 2, DistributionSpec::Uniform { lo: 0.0, hi: 0.0625 }).unwrap();
        let region = Region::Box { lo: vec![-0.5, 0.0], hi: vec![10.5, 0.0] };
        let q = QuerySpec::new(&f, region.clone(), vec![lp(0, 0)], TargetSet::single(lp(10, 0)));
        let r = passage_time(&q).unwrap();
        let straight: Vec<LatticePoint> = (0..=10).map(|x| lp(x, 0)).collect();
        assert_eq!(r.path.vertices, straight);
        assert!(r.audit(&f, &region));
    }

    #[test]
    fn target_outside_region_is_rejected() {
        let f = constant_field(0.05);
        let frame = Frame::standard(2);
        let cyl = Cylinder::new(
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            frame,
            AxialInterval::Range { lo: 0.0, hi: 0.4 },
            0.4,
        )
        .unwrap();
        let q = QuerySpec::new(
            &f,
            Region::Cylinder(cyl),
            vec![lp(0, 0)],
            TargetSet::single(lp(5, 0)),
        );
        assert!(matches!(passage_time(&q), Err(PassageError::TargetOutsideRegion)));
    }

    #[test]
    fn thin_diagonal_cylinder_disconnects() {
        let f = constant_field(0.05);
        let frame = Frame::standard(2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // Lattice points on the diagonal are inside, but none of their
        // neighbors are, so the region is lattice-disconnected.
        let cyl = Cylinder::new(
            vec![0.0, 0.0],
            vec![s, s],
            frame,
            AxialInterval::Range { lo: -1.0, hi: 10.0 },
            0.3,
        )
        .unwrap();
        let region = Region::Cylinder(cyl);
        assert!(region.contains_lattice(&lp(0, 0)));
        assert!(region.contains_lattice(&lp(5, 5)));
        let q = QuerySpec::new(&f, region, vec![lp(0, 0)], TargetSet::single(lp(5, 5)));
        assert!(matches!(passage_time(&q), Err(PassageError::Disconnected)));
    }

    #[test]
    fn budget_exhaustion_is_distinct() {
        let f = constant_field(0.05);
        let q = QuerySpec::new(
            &f,
            Region::Everything,
            vec![lp(0, 0)],
            TargetSet::single(lp(50, 50)),
        )
        .with_budget(10);
        assert!(matches!(
            passage_time(&q),
            Err(PassageError::BudgetExhausted { .. })
        ));
    }

    #[test]
    fn face_target_stops_at_hyperplane() {
        let f = constant_field(0.05);
        let q = QuerySpec::new(
            &f,
            Region::Everything,
            vec![lp(0, 0)],
            TargetSet::Face { normal: vec![1.0, 0.0], offset: 4.0 },
        );
        let r = passage_time(&q).unwrap();
        assert_eq!(r.dst_hit.coords[0], 4);
        let mut want = 0.0f64;
        for _ in 0..4 {
            want += 0.05;
        }
        assert_eq!(r.time.to_bits(), want.to_bits());
    }
}
