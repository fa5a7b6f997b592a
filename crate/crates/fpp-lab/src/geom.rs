//! Directions, tangent frames, tilted cylinders, floor maps, and
//! discretization grids.
//!
//! A `Frame` packages a unit direction `u` with an orthonormal basis whose
//! tail vectors span the model tangent hyperplane at `u`; tilted cylinders
//! and faces are built from those tangent vectors. All constructions are
//! deterministic: ties in tangent-plane selection are broken by maximizing
//! alignment with `u` and then lexicographically, and every sign is fixed
//! by the first-nonzero-positive rule.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::hashing::CoordSet;
use crate::weight_field::LatticePoint;

/// Default cap on enumerated face cardinality.
pub const DEFAULT_FACE_CAP: usize = 10_000_000;

const EPS_ORTHO: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("direction is not a unit vector (|u| = {norm})")]
    NotUnit { norm: f64 },
    #[error("axis lies in the tangent span; cylinder coordinates are singular")]
    SingularFrame,
    #[error("tangent data is degenerate (rank below d-1)")]
    DegenerateTangent,
    #[error("face enumeration produced {count} points, above the cap {cap}")]
    FaceTooLarge { count: usize, cap: usize },
    #[error("invalid interval [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },
}

/// A point of `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealPoint {
    pub coords: Vec<f64>,
}

impl RealPoint {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Self { coords: coords.into() }
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }
}

impl From<&LatticePoint> for RealPoint {
    fn from(p: &LatticePoint) -> Self {
        Self { coords: p.to_real() }
    }
}

/// `⌊x⌋`: the unique lattice point with `x ∈ ⌊x⌋ + [0,1)^d`.
pub fn floor_point(x: &RealPoint) -> LatticePoint {
    LatticePoint {
        coords: x.coords.iter().map(|&c| c.floor() as i64).collect::<SmallVec<[i64; 4]>>(),
    }
}

// Small dense vector helpers. Dimensions are tiny (2-4 in practice), so
// plain loops beat any linear-algebra dependency.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Invert a d*d row-major matrix by Gauss-Jordan with partial pivoting.
fn invert(mat: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut a = mat.to_vec();
    let mut inv = vec![0.0; d * d];
    for i in 0..d {
        inv[i * d + i] = 1.0;
    }
    for col in 0..d {
        let pivot = (col..d).max_by(|&r, &s| {
            a[r * d + col].abs().partial_cmp(&a[s * d + col].abs()).unwrap()
        })?;
        if a[pivot * d + col].abs() < 1e-12 {
            return None;
        }
        if pivot != col {
            for k in 0..d {
                a.swap(col * d + k, pivot * d + k);
                inv.swap(col * d + k, pivot * d + k);
            }
        }
        let p = a[col * d + col];
        for k in 0..d {
            a[col * d + k] /= p;
            inv[col * d + k] /= p;
        }
        for r in 0..d {
            if r == col {
                continue;
            }
            let f = a[r * d + col];
            if f != 0.0 {
                for k in 0..d {
                    a[r * d + k] -= f * a[col * d + k];
                    inv[r * d + k] -= f * inv[col * d + k];
                }
            }
        }
    }
    Some(inv)
}

/// Which convex body supplies the tangent hyperplane at `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeModel {
    /// The l1 unit ball: exact limit shape for constant weights.
    L1Ball,
    /// The Euclidean ball: tangent plane orthogonal to `u`.
    EuclideanBall,
    /// Externally estimated tangent directions at `u` (d-1 vectors).
    Empirical { tangents: Vec<Vec<f64>> },
}

/// Unit direction with an orthonormal basis `u~_1..u~_d`; the tail vectors
/// span the tangent hyperplane `H_u` and `u~_1 · u > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub u: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
    /// `H_u = { x : x · u~_1 = tangent_offset }`.
    pub tangent_offset: f64,
}

impl Frame {
    pub fn dimension(&self) -> usize {
        self.u.len()
    }

    /// The normal of the tangent hyperplane.
    pub fn normal(&self) -> &[f64] {
        &self.basis[0]
    }

    /// Tangent basis vectors `u~_2..u~_d`.
    pub fn tangent(&self) -> &[Vec<f64>] {
        &self.basis[1..]
    }

    /// Standard frame along `e_1` (the paper's convention `u~_i = e_i`).
    pub fn standard(d: usize) -> Self {
        let mut u = vec![0.0; d];
        u[0] = 1.0;
        let basis = (0..d)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                e
            })
            .collect();
        Frame { u, basis, tangent_offset: 1.0 }
    }

    fn orthonormality_defect(&self) -> f64 {
        let d = self.dimension();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&self.basis[i], &self.basis[j]) - want).abs());
            }
        }
        worst
    }
}

/// Canonical sign: flip so the first coordinate with |c| > tol is positive.
fn canonical_sign(v: &mut [f64]) {
    for &c in v.iter() {
        if c.abs() > 1e-12 {
            if c < 0.0 {
                for x in v.iter_mut() {
                    *x = -*x;
                }
            }
            return;
        }
    }
}

/// Complete `accepted` to a full orthonormal set using standard basis
/// vectors in index order.
fn complete_basis(accepted: &mut Vec<Vec<f64>>, d: usize) {
    for i in 0..d {
        if accepted.len() == d {
            break;
        }
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        for b in accepted.iter() {
            let p = dot(&e, b);
            axpy(&mut e, -p, b);
        }
        let n = norm(&e);
        if n > EPS_ORTHO {
            let mut v = scale(&e, 1.0 / n);
            canonical_sign(&mut v);
            accepted.push(v);
        }
    }
}

/// Build the tangent frame at a unit direction `u`.
///
/// For `u = e_1` the standard basis is returned exactly. Otherwise the
/// model supplies the tangent-plane normal (or tangent vectors), the basis
/// is completed deterministically from the standard basis, and each tail
/// vector gets the first-nonzero-positive sign.
pub fn make_frame(u: &[f64], model: &ShapeModel) -> Result<Frame, GeomError> {
    let d = u.len();
    if d < 2 {
        return Err(GeomError::DimensionMismatch { expected: 2, got: d });
    }
    let n = norm(u);
    if (n - 1.0).abs() > 1e-9 {
        return Err(GeomError::NotUnit { norm: n });
    }
    if u[0] == 1.0 && u[1..].iter().all(|&c| c == 0.0) {
        return Ok(Frame::standard(d));
    }

    let normal: Vec<f64> = match model {
        ShapeModel::EuclideanBall => u.to_vec(),
        ShapeModel::L1Ball => {
            // Facet normal sign(u); zero components stay zero, which is the
            // alignment-maximizing admissible normal at edges and corners.
            let raw: Vec<f64> =
                u.iter().map(|&c| if c.abs() < 1e-12 { 0.0 } else { c.signum() }).collect();
            let n = norm(&raw);
            scale(&raw, 1.0 / n)
        }
        ShapeModel::Empirical { tangents } => {
            if tangents.len() != d - 1 {
                return Err(GeomError::DegenerateTangent);
            }
            let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(d);
            for t in tangents {
                if t.len() != d {
                    return Err(GeomError::DimensionMismatch { expected: d, got: t.len() });
                }
                let mut v = t.clone();
                for b in accepted.iter() {
                    let p = dot(&v, b);
                    axpy(&mut v, -p, b);
                }
                let nv = norm(&v);
                if nv < EPS_ORTHO {
                    return Err(GeomError::DegenerateTangent);
                }
                accepted.push(scale(&v, 1.0 / nv));
            }
            complete_basis(&mut accepted, d);
            if accepted.len() != d {
                return Err(GeomError::DegenerateTangent);
            }
            let mut nvec = accepted.pop().expect("completed basis has d vectors");
            let align = dot(&nvec, u);
            if align.abs() < 1e-9 {
                return Err(GeomError::DegenerateTangent);
            }
            if align < 0.0 {
                for x in nvec.iter_mut() {
                    *x = -*x;
                }
            }
            nvec
        }
    };

    let mut normal = normal;
    if dot(&normal, u) < 0.0 {
        for x in normal.iter_mut() {
            *x = -*x;
        }
    }
    let mut basis = vec![normal];
    complete_basis(&mut basis, d);
    if basis.len() != d {
        return Err(GeomError::DegenerateTangent);
    }
    let tangent_offset = dot(u, &basis[0]);
    let frame = Frame { u: u.to_vec(), basis, tangent_offset };
    debug_assert!(frame.orthonormality_defect() < 1e-10);
    Ok(frame)
}

/// Axial extent of a cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxialInterval {
    All,
    Range { lo: f64, hi: f64 },
}

/// Tilted cylinder `base + { y_1 v + Σ_{i>=2} y_i u~_i : y_1 ∈ I, |y_i| <= h }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CylinderDef", into = "CylinderDef")]
pub struct Cylinder {
    pub base: Vec<f64>,
    pub axis: Vec<f64>,
    pub frame: Frame,
    pub interval: AxialInterval,
    pub height: f64,
    inv: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CylinderDef {
    base: Vec<f64>,
    axis: Vec<f64>,
    frame: Frame,
    interval: AxialInterval,
    height: f64,
}

impl TryFrom<CylinderDef> for Cylinder {
    type Error = GeomError;

    fn try_from(d: CylinderDef) -> Result<Self, GeomError> {
        Cylinder::new(d.base, d.axis, d.frame, d.interval, d.height)
    }
}

impl From<Cylinder> for CylinderDef {
    fn from(c: Cylinder) -> Self {
        CylinderDef { base: c.base, axis: c.axis, frame: c.frame, interval: c.interval, height: c.height }
    }
}

impl Cylinder {
    pub fn new(
        base: Vec<f64>,
        axis: Vec<f64>,
        frame: Frame,
        interval: AxialInterval,
        height: f64,
    ) -> Result<Self, GeomError> {
        let d = frame.dimension();
        if base.len() != d || axis.len() != d {
            return Err(GeomError::DimensionMismatch { expected: d, got: base.len().max(axis.len()) });
        }
        if height <= 0.0 {
            return Err(GeomError::BadInterval { lo: 0.0, hi: height });
        }
        if let AxialInterval::Range { lo, hi } = interval {
            if lo > hi {
                return Err(GeomError::BadInterval { lo, hi });
            }
        }
        // Columns: axis, then the tangent vectors.
        let mut mat = vec![0.0; d * d];
        for r in 0..d {
            mat[r * d] = axis[r];
            for (j, t) in frame.tangent().iter().enumerate() {
                mat[r * d + j + 1] = t[r];
            }
        }
        let inv = invert(&mat, d).ok_or(GeomError::SingularFrame)?;
        Ok(Self { base, axis, frame, interval, height, inv })
    }

    /// Cylinder coordinates `(y_1, y_2..y_d)` of a point.
    pub fn coordinates(&self, x: &[f64]) -> Vec<f64> {
        let d = self.base.len();
        let rel = sub(x, &self.base);
        let mut y = vec![0.0; d];
        for r in 0..d {
            y[r] = dot(&self.inv[r * d..(r + 1) * d], &rel);
        }
        y
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let y = self.coordinates(x);
        let axial_ok = match self.interval {
            AxialInterval::All => true,
            AxialInterval::Range { lo, hi } => y[0] >= lo && y[0] <= hi,
        };
        axial_ok && y[1..].iter().all(|&c| c.abs() <= self.height)
    }

    /// A finite bounding box when the axial interval is bounded.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let (lo, hi) = match self.interval {
            AxialInterval::All => return None,
            AxialInterval::Range { lo, hi } => (lo, hi),
        };
        let d = self.base.len();
        let mut bmin = vec![0.0; d];
        let mut bmax = vec![0.0; d];
        for k in 0..d {
            let a1 = lo * self.axis[k];
            let a2 = hi * self.axis[k];
            let mut spread = 0.0;
            for t in self.frame.tangent() {
                spread += self.height * t[k].abs();
            }
            bmin[k] = self.base[k] + a1.min(a2) - spread;
            bmax[k] = self.base[k] + a1.max(a2) + spread;
        }
        Some((bmin, bmax))
    }
}

/// Geometric predicate restricting admissible paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Everything,
    /// Axis-aligned box, inclusive bounds.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Cylinder(Cylinder),
    /// `{ x : lo <= x · n <= hi }` where `n` is the frame normal.
    Slab { frame: Frame, lo: f64, hi: f64 },
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Everything => true,
            Region::Box { lo, hi } => {
                x.iter().zip(lo.iter().zip(hi)).all(|(&c, (&l, &h))| c >= l && c <= h)
            }
            Region::Cylinder(cyl) => cyl.contains(x),
            Region::Slab { frame, lo, hi } => {
                let a = dot(x, frame.normal());
                a >= *lo && a <= *hi
            }
        }
    }

    pub fn contains_lattice(&self, p: &LatticePoint) -> bool {
        match self {
            Region::Everything => true,
            Region::Box { lo, hi } => p
                .coords
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&c, (&l, &h))| (c as f64) >= l && (c as f64) <= h),
            _ => {
                let coords: Vec<f64> = p.coords.iter().map(|&c| c as f64).collect();
                self.contains(&coords)
            }
        }
    }

    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Region::Everything | Region::Slab { .. } => None,
            Region::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            Region::Cylinder(cyl) => cyl.bounding_box(),
        }
    }
}

/// Membership test, spec-level entry point.
pub fn region_contains(r: &Region, x: &RealPoint) -> bool {
    r.contains(&x.coords)
}

/// An exact rational `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Interior grid `[a + 1/L, b - 1/L] ∩ (1/L) Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub a: f64,
    pub b: f64,
    pub l: u32,
}

/// The multiples of `1/L` lying in `[a + 1/L, b - 1/L]`, ascending.
/// An empty result is legal.
pub fn grid_points(g: &GridSpec) -> Result<Vec<Rational>, GeomError> {
    if !(g.a < g.b) {
        return Err(GeomError::BadInterval { lo: g.a, hi: g.b });
    }
    let l = g.l as i64;
    let lo = (g.a * l as f64 + 1.0).ceil() as i64;
    let hi = (g.b * l as f64 - 1.0).floor() as i64;
    Ok((lo..=hi).map(|num| Rational { num, den: l }).collect())
}

/// Spacing rule for face enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceSpacing {
    /// Every lattice cell the face passes through (cell centers within
    /// half-cell tolerance at the rim).
    Continuum,
    /// Tangent coordinates on `spacing * Z`.
    Step(f64),
}

/// Floor images of the face `{ axial*axis + Σ y_i u~_i : |y_i| <= radius }`,
/// deduplicated and sorted.
pub fn enumerate_face(
    frame: &Frame,
    axis: &[f64],
    axial: f64,
    radius: f64,
    spacing: FaceSpacing,
    cap: usize,
) -> Result<Vec<LatticePoint>, GeomError> {
    let d = frame.dimension();
    if axis.len() != d {
        return Err(GeomError::DimensionMismatch { expected: d, got: axis.len() });
    }
    if radius <= 0.0 {
        return Err(GeomError::BadInterval { lo: 0.0, hi: radius });
    }
    let center = scale(axis, axial);
    match spacing {
        FaceSpacing::Step(s) => {
            if s <= 0.0 {
                return Err(GeomError::BadInterval { lo: 0.0, hi: s });
            }
            let per_axis = (radius / s).floor() as i64;
            let count = (2 * per_axis + 1).pow((d - 1) as u32) as usize;
            if count > cap {
                return Err(GeomError::FaceTooLarge { count, cap });
            }
            let mut out: CoordSet<LatticePoint> = Default::default();
            let mut idx = vec![-per_axis; d - 1];
            loop {
                let mut p = center.clone();
                for (j, t) in frame.tangent().iter().enumerate() {
                    axpy(&mut p, idx[j] as f64 * s, t);
                }
                out.insert(floor_point(&RealPoint::new(p)));
                // Odometer increment over the tangent grid.
                let mut k = 0;
                loop {
                    if k == d - 1 {
                        let mut sorted: Vec<LatticePoint> = out.into_iter().collect();
                        sorted.sort();
                        return Ok(sorted);
                    }
                    idx[k] += 1;
                    if idx[k] <= per_axis {
                        break;
                    }
                    idx[k] = -per_axis;
                    k += 1;
                }
            }
        }
        FaceSpacing::Continuum => {
            let n = frame.normal();
            let offset = dot(&center, n);
            // The patch is flat along the normal, so the bounding box is
            // thin there: tangent spread only, plus one cell of margin.
            let mut lo = vec![0i64; d];
            let mut hi = vec![0i64; d];
            for k in 0..d {
                let mut spread = 0.0;
                for t in frame.tangent() {
                    spread += radius * t[k].abs();
                }
                lo[k] = (center[k] - spread).floor() as i64 - 1;
                hi[k] = (center[k] + spread).ceil() as i64 + 1;
            }
            let neg_sum: f64 = (0..d).map(|k| n[k].min(0.0)).sum();
            let pos_sum: f64 = (0..d).map(|k| n[k].max(0.0)).sum();
            let has_neg = n.iter().any(|&c| c < 0.0);
            let has_pos = n.iter().any(|&c| c > 0.0);
            let mut cells = Vec::new();
            let mut cur = lo.clone();
            let margin = radius + 0.5 * (d as f64).sqrt();
            'outer: loop {
                // Does the hyperplane cross the half-open cell? The floor
                // convention excludes the far boundary.
                let base: f64 = (0..d).map(|k| n[k] * cur[k] as f64).sum();
                let mn = base + neg_sum;
                let mx = base + pos_sum;
                let above = offset > mn || (offset == mn && !has_neg);
                let below = offset < mx || (offset == mx && !has_pos);
                if above && below {
                    let cc: Vec<f64> = cur.iter().map(|&c| c as f64 + 0.5).collect();
                    let rel = sub(&cc, &center);
                    let within = frame.tangent().iter().all(|t| dot(&rel, t).abs() <= margin);
                    if within {
                        cells.push(LatticePoint {
                            coords: cur.iter().copied().collect::<SmallVec<[i64; 4]>>(),
                        });
                        if cells.len() > cap {
                            return Err(GeomError::FaceTooLarge { count: cells.len(), cap });
                        }
                    }
                }
                let mut k = 0;
                loop {
                    if k == d {
                        break 'outer;
                    }
                    cur[k] += 1;
                    if cur[k] <= hi[k] {
                        break;
                    }
                    cur[k] = lo[k];
                    k += 1;
                }
            }
            cells.sort();
            cells.dedup();
            Ok(cells)
        }
    }
}
