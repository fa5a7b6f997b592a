//! Region-restricted first-passage times and geodesics.
//!
//! The workhorse is a best-first search with a min-priority frontier over
//! the implicit weighted lattice (weights are sampled on demand, nothing is
//! materialized). Set-to-set queries initialize multiple sources; the
//! search exits at the first settled target. Ties are broken
//! deterministically: the frontier orders by `(time, lexicographic
//! vertex)`, and on exact time equality the lexicographically smaller
//! predecessor wins, so the returned geodesic is reproducible and matches
//! the brute-force enumerator's comparator.
//!
//! Point-to-point queries over the unrestricted lattice in d = 2 take a
//! separate dense bidirectional path ([`point_passage_value`]) that returns
//! the value only; it computes the same minimum over the same path sums.

mod dense;
mod engine;
pub mod oracle;

use serde::{Deserialize, Serialize};

use crate::geom::{enumerate_face, floor_point, FaceSpacing, Frame, GeomError, RealPoint, Region};
use crate::hashing::CoordMap;
use crate::weight_field::{EdgeWeights, LatticePoint, WeightError};

pub use oracle::{brute_force_passage, BruteResult};

/// A lattice path: consecutive vertices are nearest neighbors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub vertices: Vec<LatticePoint>,
}

impl Path {
    pub fn len_edges(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    /// Replays the search's addition order along the path.
    pub fn resum<W: EdgeWeights + ?Sized>(&self, field: &W) -> f64 {
        let mut sum = 0.0;
        for w in self.vertices.windows(2) {
            sum += edge_weight_between(field, &w[0], &w[1]);
        }
        sum
    }

    /// Structural validity: nonempty, consecutive neighbors, inside region.
    pub fn validate(&self, region: &Region) -> bool {
        if self.vertices.is_empty() {
            return false;
        }
        for w in self.vertices.windows(2) {
            let diff: i64 = w[0]
                .coords
                .iter()
                .zip(&w[1].coords)
                .map(|(a, b)| (a - b).abs())
                .sum();
            if diff != 1 {
                return false;
            }
        }
        self.vertices.iter().all(|v| region.contains_lattice(v))
    }
}

/// Weight of the edge between two adjacent vertices.
pub(crate) fn edge_weight_between<W: EdgeWeights + ?Sized>(
    field: &W,
    a: &LatticePoint,
    b: &LatticePoint,
) -> f64 {
    for i in 0..a.dimension() {
        let d = b.coords[i] - a.coords[i];
        if d == 1 {
            return field.weight_from(&a.coords, i);
        }
        if d == -1 {
            return field.weight_from(&b.coords, i);
        }
    }
    panic!("edge_weight_between called on non-adjacent vertices");
}

/// Target of a query: an explicit point set or a floored face.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSet {
    Points(Vec<LatticePoint>),
    /// All lattice cells `x + [0,1)^d` crossed by the hyperplane
    /// `{ y : y . normal = offset }`.
    Face { normal: Vec<f64>, offset: f64 },
}

impl TargetSet {
    pub fn single(p: LatticePoint) -> Self {
        TargetSet::Points(vec![p])
    }
}

/// One region-restricted set-to-set query.
pub struct QuerySpec<'a> {
    pub field: &'a dyn EdgeWeights,
    pub region: Region,
    pub source: Vec<LatticePoint>,
    pub target: TargetSet,
    /// Cap on settled nodes. Exhaustion is a distinct outcome, never
    /// silently treated as disconnection.
    pub budget: Option<u64>,
    /// Record the settle order (point, time) for profiling.
    pub record_expansions: bool,
}

impl<'a> QuerySpec<'a> {
    pub fn new(
        field: &'a dyn EdgeWeights,
        region: Region,
        source: Vec<LatticePoint>,
        target: TargetSet,
    ) -> Self {
        Self { field, region, source, target, budget: None, record_expansions: false }
    }

    /// Point-to-point query; real endpoints are floored first.
    pub fn between(
        field: &'a dyn EdgeWeights,
        region: Region,
        from: &RealPoint,
        to: &RealPoint,
    ) -> Self {
        Self::new(
            field,
            region,
            vec![floor_point(from)],
            TargetSet::single(floor_point(to)),
        )
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }
}

/// Result of a passage query. `time` equals the sum of the path's edge
/// weights in the search's own accumulation order, bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageResult {
    pub time: f64,
    pub path: Path,
    pub nodes_expanded: u64,
    pub src_hit: LatticePoint,
    pub dst_hit: LatticePoint,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expansions: Option<Vec<(LatticePoint, f64)>>,
}

impl PassageResult {
    /// Re-sum the path and check it reproduces the reported time exactly
    /// and stays inside the region.
    pub fn audit<W: EdgeWeights + ?Sized>(&self, field: &W, region: &Region) -> bool {
        self.path.validate(region)
            && self.path.resum(field).to_bits() == self.time.to_bits()
            && self.path.vertices.first() == Some(&self.src_hit)
            && self.path.vertices.last() == Some(&self.dst_hit)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PassageError {
    #[error("no admissible path inside the region")]
    Disconnected,
    #[error("expansion budget exhausted after {expanded} settled nodes; result unknown")]
    BudgetExhausted { expanded: u64 },
    #[error("source set is empty or does not intersect the region")]
    SourceOutsideRegion,
    #[error("target set is empty or does not intersect the region")]
    TargetOutsideRegion,
    #[error("query window must be bounded")]
    WindowUnbounded,
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Minimal passage time with the tie-broken geodesic attaining it.
pub fn passage_time(q: &QuerySpec) -> Result<PassageResult, PassageError> {
    engine::run(q)
}

/// The unique tie-broken geodesic of a query.
pub fn geodesic(q: &QuerySpec) -> Result<Path, PassageError> {
    Ok(engine::run(q)?.path)
}

/// Passage times from a source set to every requested point (multi-source,
/// exhaustive). Unreachable points are absent from the map.
pub fn passage_times_to_all(
    field: &dyn EdgeWeights,
    region: &Region,
    source: &[LatticePoint],
    wanted: &[LatticePoint],
    budget: Option<u64>,
) -> Result<CoordMap<LatticePoint, f64>, PassageError> {
    engine::run_to_all(field, region, source, wanted, budget)
}

/// Value-only point-to-point passage time over the unrestricted lattice.
///
/// Dispatches to a dense bidirectional search in d = 2 (the Monte Carlo
/// hot path); other dimensions fall back to the general engine. Computes
/// the same minimum over path sums as [`passage_time`].
pub fn point_passage_value<W: EdgeWeights + ?Sized>(
    field: &W,
    from: &LatticePoint,
    to: &LatticePoint,
    budget: Option<u64>,
) -> Result<f64, PassageError> {
    if field.dimension() == 2 {
        return dense::point_value_d2(
            field,
            [from.coords[0], from.coords[1]],
            [to.coords[0], to.coords[1]],
            budget,
        );
    }
    let by_ref = ByRef(field);
    let q = QuerySpec {
        field: &by_ref,
        region: Region::Everything,
        source: vec![from.clone()],
        target: TargetSet::single(to.clone()),
        budget,
        record_expansions: false,
    };
    Ok(engine::run(&q)?.time)
}

struct ByRef<'a, W: ?Sized>(&'a W);

impl<W: EdgeWeights + ?Sized> EdgeWeights for ByRef<'_, W> {
    fn dimension(&self) -> usize {
        self.0.dimension()
    }

    fn weight_from(&self, a: &[i64], axis: usize) -> f64 {
        self.0.weight_from(a, axis)
    }
}

/// Maximal Euclidean distance from the path's vertices to the line
/// `anchor + R * direction`.
pub fn max_transversal_deviation(path: &Path, anchor: &[f64], direction: &[f64]) -> f64 {
    let n = crate::geom::norm(direction);
    assert!(n > 0.0, "direction must be nonzero");
    let unit: Vec<f64> = direction.iter().map(|c| c / n).collect();
    let mut best = 0.0f64;
    for v in &path.vertices {
        let rel: Vec<f64> = v
            .coords
            .iter()
            .zip(anchor)
            .map(|(&c, &a)| c as f64 - a)
            .collect();
        let along = crate::geom::dot(&rel, &unit);
        let mut perp2 = 0.0;
        for (r, u) in rel.iter().zip(&unit) {
            let p = r - along * u;
            perp2 += p * p;
        }
        best = best.max(perp2.sqrt());
    }
    best
}

/// Passage time between consecutive faces `i` and `i+1` of spacing `k`
/// along the frame direction, restricted to a bounded window.
pub fn face_to_face_time(
    field: &dyn EdgeWeights,
    frame: &Frame,
    i: i64,
    k: f64,
    window: &Region,
) -> Result<PassageResult, PassageError> {
    if k <= 0.0 {
        return Err(PassageError::Geom(GeomError::BadInterval { lo: 0.0, hi: k }));
    }
    let (lo, hi) = window.bounding_box().ok_or(PassageError::WindowUnbounded)?;
    let diameter = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt();
    let source_all = enumerate_face(
        frame,
        &frame.u,
        i as f64 * k,
        diameter.max(1.0),
        FaceSpacing::Continuum,
        crate::geom::DEFAULT_FACE_CAP,
    )?;
    let source: Vec<LatticePoint> =
        source_all.into_iter().filter(|p| window.contains_lattice(p)).collect();
    let offset = (i + 1) as f64 * k * frame.tangent_offset;
    let q = QuerySpec {
        field,
        region: window.clone(),
        source,
        target: TargetSet::Face { normal: frame.normal().to_vec(), offset },
        budget: None,
        record_expansions: false,
    };
    engine::run(&q)
}

/// Graph distance (unit weights) between two points inside a region.
/// Returns `None` when disconnected within `node_cap` settled nodes.
pub fn graph_distance(
    region: &Region,
    from: &LatticePoint,
    to: &LatticePoint,
    node_cap: usize,
) -> Option<u64> {
    use std::collections::VecDeque;
    if !region.contains_lattice(from) || !region.contains_lattice(to) {
        return None;
    }
    let mut seen: crate::hashing::CoordSet<LatticePoint> = Default::default();
    let mut queue = VecDeque::new();
    seen.insert(from.clone());
    queue.push_back((from.clone(), 0u64));
    while let Some((p, dist)) = queue.pop_front() {
        if &p == to {
            return Some(dist);
        }
        if seen.len() > node_cap {
            return None;
        }
        for axis in 0..p.dimension() {
            for delta in [1i64, -1] {
                let n = p.step(axis, delta);
                if region.contains_lattice(&n) && seen.insert(n.clone()) {
                    queue.push_back((n, dist + 1));
                }
            }
        }
    }
    None
}
