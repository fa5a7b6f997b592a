//! Seeded i.i.d. edge weights on the nearest-neighbor lattice.
//!
//! Weights are a pure function of `(seed, replica, canonical edge)`: a keyed
//! avalanche mix of the edge coordinates feeds an inverse-CDF transform.
//! Nothing is stored, so arbitrarily large regions cost no memory and a
//! query's result does not depend on what was explored before it.
//!
//! All weights are bounded by `w_max = 1/(4 d^2)` and the shipped
//! distributions never produce an exact zero. Continuous variants and the
//! two-point atoms are additionally snapped down to the dyadic grid
//! `2^-30 Z`, which makes every path sum of fewer than ~8 million edges an
//! exact double — passage-time identities (symmetry, triangle inequality,
//! monotonicity) then hold with no tolerance. The `constant` variant is
//! exempt from snapping so that a constant environment reproduces the given
//! value verbatim.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::hashing::{fold, mix64, unit_open};

/// Dyadic quantization grid for sampled weights.
pub const WEIGHT_GRID: f64 = 1.0 / (1u64 << 30) as f64;

/// Upper bound `1/(4 d^2)` for edge weights in dimension `d`.
pub fn w_max(d: usize) -> f64 {
    1.0 / (4.0 * (d as f64) * (d as f64))
}

/// A vertex of `Z^d`. Coordinates are stored inline for dimensions up to 4.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub coords: SmallVec<[i64; 4]>,
}

impl LatticePoint {
    pub fn new(coords: impl Into<SmallVec<[i64; 4]>>) -> Self {
        Self { coords: coords.into() }
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }

    pub fn origin(d: usize) -> Self {
        Self { coords: SmallVec::from_elem(0, d) }
    }

    /// The point as a real vector.
    pub fn to_real(&self) -> Vec<f64> {
        self.coords.iter().map(|&c| c as f64).collect()
    }

    /// Neighbor shifted by `delta` (+1 or -1) along `axis`.
    pub fn step(&self, axis: usize, delta: i64) -> Self {
        let mut c = self.coords.clone();
        c[axis] += delta;
        Self { coords: c }
    }
}

impl std::fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A nearest-neighbor edge in canonical orientation: `a` is the
/// lexicographically smaller endpoint and `b = a + e_axis`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub a: LatticePoint,
    pub b: LatticePoint,
}

impl Edge {
    /// Builds the canonical edge between two endpoints, swapping them if
    /// needed. Fails unless the endpoints differ by exactly 1 in exactly
    /// one coordinate.
    pub fn new(x: LatticePoint, y: LatticePoint) -> Result<Self, WeightError> {
        if x.dimension() != y.dimension() {
            return Err(WeightError::DimensionMismatch { expected: x.dimension(), got: y.dimension() });
        }
        let mut diff_axis = None;
        for i in 0..x.dimension() {
            let delta = (x.coords[i] - y.coords[i]).abs();
            if delta == 1 {
                if diff_axis.is_some() {
                    return Err(WeightError::NotAdjacent);
                }
                diff_axis = Some(i);
            } else if delta != 0 {
                return Err(WeightError::NotAdjacent);
            }
        }
        let axis = diff_axis.ok_or(WeightError::NotAdjacent)?;
        if x.coords[axis] < y.coords[axis] {
            Ok(Self { a: x, b: y })
        } else {
            Ok(Self { a: y, b: x })
        }
    }

    /// The coordinate axis along which the edge runs.
    pub fn axis(&self) -> usize {
        (0..self.a.dimension())
            .find(|&i| self.a.coords[i] != self.b.coords[i])
            .expect("canonical edge has a differing axis")
    }
}

/// Edge-weight distribution. Support must lie in `(0, w_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    /// Degenerate distribution at `c`.
    Constant { c: f64 },
    /// Uniform on `(lo, hi)`, snapped to the dyadic grid.
    Uniform { lo: f64, hi: f64 },
    /// `w1` with probability `p`, else `w0`. Atoms snapped to the grid.
    TwoPoint { w0: f64, w1: f64, p: f64 },
    /// `min(cap, Exp(rate))`, snapped to the dyadic grid.
    TruncatedExponential { rate: f64, cap: f64 },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightError {
    #[error("dimension mismatch: field has d={expected}, argument has d={got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("endpoints are not nearest neighbors")]
    NotAdjacent,
    #[error("support cap {value} exceeds w_max = {max} (weights must satisfy tau <= 1/(4 d^2))")]
    CapExceedsMax { value: f64, max: f64 },
    #[error("zero atom present: shipped distributions require P(tau = 0) = 0")]
    ZeroAtom,
    #[error("empty interval: lo = {lo} > hi = {hi}")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("probability {p} outside (0, 1)")]
    ProbabilityOutOfRange { p: f64 },
    #[error("rate {rate} must be positive")]
    NonPositiveRate { rate: f64 },
    #[error("negative support value {value}")]
    NegativeValue { value: f64 },
}

fn quantize_down(x: f64) -> f64 {
    let q = (x / WEIGHT_GRID).floor() * WEIGHT_GRID;
    if q < WEIGHT_GRID {
        WEIGHT_GRID
    } else {
        q
    }
}

impl DistributionSpec {
    /// Accepts iff the support is contained in `[0, w_max]` with no atom
    /// at zero. Errors name the violated bound.
    pub fn validate(&self, d: usize) -> Result<(), WeightError> {
        let max = w_max(d);
        let check_cap = |v: f64| {
            if v < 0.0 {
                Err(WeightError::NegativeValue { value: v })
            } else if v > max {
                Err(WeightError::CapExceedsMax { value: v, max })
            } else {
                Ok(())
            }
        };
        match *self {
            DistributionSpec::Constant { c } => {
                check_cap(c)?;
                if c == 0.0 {
                    return Err(WeightError::ZeroAtom);
                }
            }
            DistributionSpec::Uniform { lo, hi } => {
                check_cap(lo)?;
                check_cap(hi)?;
                if lo > hi || lo == hi {
                    return Err(WeightError::EmptyInterval { lo, hi });
                }
            }
            DistributionSpec::TwoPoint { w0, w1, p } => {
                check_cap(w0)?;
                check_cap(w1)?;
                if w0 == 0.0 || w1 == 0.0 {
                    return Err(WeightError::ZeroAtom);
                }
                if !(p > 0.0 && p < 1.0) {
                    return Err(WeightError::ProbabilityOutOfRange { p });
                }
            }
            DistributionSpec::TruncatedExponential { rate, cap } => {
                if rate <= 0.0 {
                    return Err(WeightError::NonPositiveRate { rate });
                }
                check_cap(cap)?;
                if cap == 0.0 {
                    return Err(WeightError::ZeroAtom);
                }
            }
        }
        Ok(())
    }

    /// Normalized form used for sampling: atoms snapped to the dyadic grid.
    fn normalized(&self) -> Self {
        match *self {
            DistributionSpec::Constant { c } => DistributionSpec::Constant { c },
            DistributionSpec::Uniform { lo, hi } => DistributionSpec::Uniform { lo, hi },
            DistributionSpec::TwoPoint { w0, w1, p } => DistributionSpec::TwoPoint {
                w0: quantize_down(w0),
                w1: quantize_down(w1),
                p,
            },
            DistributionSpec::TruncatedExponential { rate, cap } => {
                DistributionSpec::TruncatedExponential { rate, cap }
            }
        }
    }

    #[inline]
    fn inv_cdf(&self, h: u64) -> f64 {
        match *self {
            DistributionSpec::Constant { c } => c,
            DistributionSpec::Uniform { lo, hi } => {
                let u = unit_open(h);
                quantize_down(lo + (hi - lo) * u)
            }
            DistributionSpec::TwoPoint { w0, w1, p } => {
                if unit_open(h) < p {
                    w1
                } else {
                    w0
                }
            }
            DistributionSpec::TruncatedExponential { rate, cap } => {
                let x = -unit_open(h).ln() / rate;
                quantize_down(x.min(cap))
            }
        }
    }

    /// Analytic mean (pre-quantization for the continuous variants; the
    /// snapping bias is below `2^-30` and irrelevant at test tolerances).
    pub fn mean(&self) -> f64 {
        match *self {
            DistributionSpec::Constant { c } => c,
            DistributionSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
            DistributionSpec::TwoPoint { w0, w1, p } => (1.0 - p) * w0 + p * w1,
            DistributionSpec::TruncatedExponential { rate, cap } => {
                (1.0 - (-rate * cap).exp()) / rate
            }
        }
    }

    /// Analytic variance, same caveats as [`DistributionSpec::mean`].
    pub fn variance(&self) -> f64 {
        match *self {
            DistributionSpec::Constant { .. } => 0.0,
            DistributionSpec::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            DistributionSpec::TwoPoint { w0, w1, p } => {
                let m = self.mean();
                (1.0 - p) * (w0 - m) * (w0 - m) + p * (w1 - m) * (w1 - m)
            }
            DistributionSpec::TruncatedExponential { rate, cap } => {
                // E[X^2] = 2/r^2 (1 - e^{-rc}) - 2c/r e^{-rc} for X = min(c, Exp(r)).
                let e = (-rate * cap).exp();
                let m = self.mean();
                let m2 = 2.0 / (rate * rate) * (1.0 - e) - 2.0 * cap / rate * e;
                m2 - m * m
            }
        }
    }

    /// Smallest value the sampler can produce.
    pub fn support_min(&self) -> f64 {
        match *self {
            DistributionSpec::Constant { c } => c,
            DistributionSpec::Uniform { lo, .. } => lo.max(WEIGHT_GRID),
            DistributionSpec::TwoPoint { w0, w1, .. } => quantize_down(w0.min(w1)),
            DistributionSpec::TruncatedExponential { .. } => WEIGHT_GRID,
        }
    }

    /// Largest value the sampler can produce.
    pub fn support_max(&self) -> f64 {
        match *self {
            DistributionSpec::Constant { c } => c,
            DistributionSpec::Uniform { hi, .. } => hi,
            DistributionSpec::TwoPoint { w0, w1, .. } => quantize_down(w0.max(w1)),
            DistributionSpec::TruncatedExponential { cap, .. } => cap,
        }
    }
}

/// Access to the random environment by raw coordinates. Implemented by
/// [`WeightField`] and by [`OverlayField`] (planted fixtures).
pub trait EdgeWeights: Sync {
    fn dimension(&self) -> usize;

    /// Weight of the canonical edge from `a` in direction `+e_axis`.
    fn weight_from(&self, a: &[i64], axis: usize) -> f64;
}

/// The random environment: i.i.d. bounded weights keyed by
/// `(seed, replica, edge)`.
///
/// The edge key is an odd-multiplier linear combine of the coordinates and
/// axis fed through the SplitMix64 avalanche finalizer; this is the
/// shortest-path inner loop, so the mix is one finalizer round rather than
/// a chained fold.
#[derive(Debug, Clone)]
pub struct WeightField {
    pub seed: u64,
    pub d: usize,
    pub dist: DistributionSpec,
    pub replica: u64,
    stream: u64,
    mults: SmallVec<[u64; 4]>,
}

impl WeightField {
    pub fn new(seed: u64, d: usize, dist: DistributionSpec) -> Result<Self, WeightError> {
        if d < 2 {
            return Err(WeightError::DimensionMismatch { expected: 2, got: d });
        }
        dist.validate(d)?;
        let mut field = Self {
            seed,
            d,
            dist: dist.normalized(),
            replica: 0,
            stream: 0,
            mults: SmallVec::new(),
        };
        field.derive_streams();
        Ok(field)
    }

    fn derive_streams(&mut self) {
        // Tag separates the edge-weight stream from other derived streams.
        self.stream = fold(fold(mix64(self.seed), 0x6564_6765_7461_u64), self.replica);
        self.mults = (0..=self.d)
            .map(|i| mix64(self.stream ^ (0x9e37_79b9_7f4a_7c15u64).wrapping_mul(i as u64 + 1)) | 1)
            .collect();
    }

    /// Same environment family, independent substream `replica`. The index
    /// is absolute: `reseed(reseed(f, 1), 2)` equals `reseed(f, 2)`.
    pub fn reseed(&self, replica: u64) -> Self {
        let mut f = self.clone();
        f.replica = replica;
        f.derive_streams();
        f
    }

    pub fn w_max(&self) -> f64 {
        w_max(self.d)
    }
}

impl EdgeWeights for WeightField {
    #[inline]
    fn dimension(&self) -> usize {
        self.d
    }

    #[inline]
    fn weight_from(&self, a: &[i64], axis: usize) -> f64 {
        debug_assert_eq!(a.len(), self.d);
        let mut k = self.stream ^ self.mults[self.d].wrapping_mul(axis as u64 + 1);
        for (i, &c) in a.iter().enumerate() {
            k ^= self.mults[i].wrapping_mul(c as u64).rotate_left(21 * i as u32 + 7);
        }
        self.dist.inv_cdf(mix64(k))
    }
}

/// Sample the weight of a canonical edge.
pub fn sample_weight(field: &WeightField, e: &Edge) -> Result<f64, WeightError> {
    if e.a.dimension() != field.d {
        return Err(WeightError::DimensionMismatch { expected: field.d, got: e.a.dimension() });
    }
    Ok(field.weight_from(&e.a.coords, e.axis()))
}

/// Validate a distribution against the dimension's weight cap.
pub fn validate_distribution(spec: &DistributionSpec, d: usize) -> Result<(), WeightError> {
    spec.validate(d)
}

/// A base field with finitely many overridden edges. Used to plant walls
/// and cheap channels in certificate fixtures, and for single-edge
/// perturbation checks.
pub struct OverlayField<'a> {
    pub base: &'a dyn EdgeWeights,
    pub overrides: crate::hashing::CoordMap<(SmallVec<[i64; 4]>, usize), f64>,
}

impl<'a> OverlayField<'a> {
    pub fn new(base: &'a dyn EdgeWeights) -> Self {
        Self { base, overrides: Default::default() }
    }

    pub fn set(&mut self, from: &[i64], axis: usize, w: f64) {
        self.overrides.insert((SmallVec::from_slice(from), axis), w);
    }

    pub fn set_edge(&mut self, e: &Edge, w: f64) {
        self.set(&e.a.coords, e.axis(), w);
    }
}

impl EdgeWeights for OverlayField<'_> {
    fn dimension(&self) -> usize {
        self.base.dimension()
    }

    #[inline]
    fn weight_from(&self, a: &[i64], axis: usize) -> f64 {
        if !self.overrides.is_empty() {
            if let Some(&w) = self.overrides.get(&(SmallVec::from_slice(a), axis)) {
                return w;
            }
        }
        self.base.weight_from(a, axis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: i64, y: i64) -> LatticePoint {
        LatticePoint::new(vec![x, y])
    }

    #[test]
    fn constant_distribution_passes_value_through() {
        let f = WeightField::new(1, 2, DistributionSpec::Constant { c: 0.05 }).unwrap();
        let e = Edge::new(pt(3, -7), pt(4, -7)).unwrap();
        assert_eq!(sample_weight(&f, &e).unwrap(), 0.05);
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = WeightField::new(99, 2, DistributionSpec::Uniform { lo: 0.0, hi: 0.0625 }).unwrap();
        let e = Edge::new(pt(12, 5), pt(12, 6)).unwrap();
        let w1 = sample_weight(&f, &e).unwrap();
        let w2 = sample_weight(&f, &e).unwrap();
        assert_eq!(w1.to_bits(), w2.to_bits());
    }

    #[test]
    fn canonicalization_is_order_invariant() {
        let f = WeightField::new(5, 2, DistributionSpec::Uniform { lo: 0.0, hi: 0.0625 }).unwrap();
        let e1 = Edge::new(pt(0, 0), pt(1, 0)).unwrap();
        let e2 = Edge::new(pt(1, 0), pt(0, 0)).unwrap();
        assert_eq!(e1, e2);
        assert_eq!(
            sample_weight(&f, &e1).unwrap().to_bits(),
            sample_weight(&f, &e2).unwrap().to_bits()
        );
    }

    #[test]
    fn edge_rejects_non_neighbors() {
        assert!(Edge::new(pt(0, 0), pt(1, 1)).is_err());
        assert!(Edge::new(pt(0, 0), pt(0, 0)).is_err());
        assert!(Edge::new(pt(0, 0), pt(2, 0)).is_err());
    }

    #[test]
    fn validation_table() {
        // Boundary of the cap in d = 2.
        assert!(DistributionSpec::Uniform { lo: 0.0, hi: 0.0625 }.validate(2).is_ok());
        assert!(matches!(
            DistributionSpec::Constant { c: 0.2 }.validate(2),
            Err(WeightError::CapExceedsMax { .. })
        ));
        assert!(matches!(
            DistributionSpec::TwoPoint { w0: 0.0, w1: 0.01, p: 0.3 }.validate(3),
            Err(WeightError::ZeroAtom)
        ));
        assert!(matches!(
            DistributionSpec::Uniform { lo: 0.03, hi: 0.01 }.validate(2),
            Err(WeightError::EmptyInterval { .. })
        ));
        assert!(matches!(
            DistributionSpec::TwoPoint { w0: 0.01, w1: 0.02, p: 1.0 }.validate(2),
            Err(WeightError::ProbabilityOutOfRange { .. })
        ));
    }

    #[test]
    fn reseed_semantics() {
        let f = WeightField::new(77, 2, DistributionSpec::Uniform { lo: 0.0, hi: 0.0625 }).unwrap();
        let f0 = f.reseed(0);
        let f1 = f.reseed(1);
        let f2 = f.reseed(2);
        assert_eq!(f.reseed(1).reseed(1).replica, 1);
        let mut diff01 = 0;
        let mut diff12 = 0;
        for i in 0..100 {
            let e = Edge::new(pt(i, 0), pt(i + 1, 0)).unwrap();
            let w = sample_weight(&f, &e).unwrap();
            assert_eq!(w.to_bits(), sample_weight(&f0, &e).unwrap().to_bits());
            if sample_weight(&f1, &e).unwrap() != sample_weight(&f0, &e).unwrap() {
                diff01 += 1;
            }
            if sample_weight(&f1, &e).unwrap() != sample_weight(&f2, &e).unwrap() {
                diff12 += 1;
            }
        }
        assert!(diff01 > 0);
        assert!(diff12 > 0);
    }

    #[test]
    fn two_point_empirical_mean_within_clt_band() {
        let f = WeightField::new(
            2024,
            2,
            DistributionSpec::TwoPoint { w0: 0.02, w1: 0.05, p: 0.5 },
        )
        .unwrap();
        let n = 1_000_000i64;
        let mut sum = 0.0;
        for i in 0..n {
            let e = Edge::new(pt(i, 0), pt(i, 1)).unwrap();
            sum += sample_weight(&f, &e).unwrap();
        }
        let mean = sum / n as f64;
        // sd = 0.015, so 3 sd / sqrt(n) = 4.5e-5.
        assert!((mean - 0.035).abs() < 3.0 * 0.015 / 1000.0, "mean = {mean}");
    }

    #[test]
    fn bounds_hold_and_no_zero_atom() {
        let specs = [
            DistributionSpec::Constant { c: 0.05 },
            DistributionSpec::Uniform { lo: 0.0, hi: 0.0625 },
            DistributionSpec::TwoPoint { w0: 0.02, w1: 0.05, p: 0.5 },
            DistributionSpec::TruncatedExponential { rate: 64.0, cap: 0.0625 },
        ];
        for spec in specs {
            let f = WeightField::new(31, 2, spec).unwrap();
            for i in 0..100_000i64 {
                let e = Edge::new(pt(i % 1000, i / 1000), pt(i % 1000 + 1, i / 1000)).unwrap();
                let w = sample_weight(&f, &e).unwrap();
                assert!(w > 0.0, "zero weight from {:?}", f.dist);
                assert!(w <= f.w_max() + 1e-15, "w = {w} above cap for {:?}", f.dist);
            }
        }
    }

    #[test]
    fn empirical_moments_match_analytic() {
        let specs = [
            DistributionSpec::Uniform { lo: 0.0, hi: 0.0625 },
            DistributionSpec::TwoPoint { w0: 0.02, w1: 0.05, p: 0.25 },
            DistributionSpec::TruncatedExponential { rate: 64.0, cap: 0.0625 },
        ];
        for spec in specs {
            let f = WeightField::new(7, 2, spec.clone()).unwrap();
            let n = 200_000i64;
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for i in 0..n {
                let e = Edge::new(pt(i, -3), pt(i + 1, -3)).unwrap();
                let w = sample_weight(&f, &e).unwrap();
                sum += w;
                sumsq += w * w;
            }
            let mean = sum / n as f64;
            let var = sumsq / n as f64 - mean * mean;
            let se_mean = (spec.variance() / n as f64).sqrt();
            assert!(
                (mean - spec.mean()).abs() < 4.0 * se_mean,
                "{spec:?}: mean {mean} vs {}",
                spec.mean()
            );
            // Crude SE for the variance: var * sqrt(2/n) underestimates for
            // skewed laws, use 6 sigma.
            let se_var = spec.variance() * (2.0 / n as f64).sqrt();
            assert!(
                (var - spec.variance()).abs() < 6.0 * se_var,
                "{spec:?}: var {var} vs {}",
                spec.variance()
            );
        }
    }

    #[test]
    fn overlay_overrides_single_edge() {
        let f = WeightField::new(3, 2, DistributionSpec::Uniform { lo: 0.0, hi: 0.0625 }).unwrap();
        let mut ov = OverlayField::new(&f);
        ov.set(&[2, 3], 0, 0.011);
        assert_eq!(ov.weight_from(&[2, 3], 0), 0.011);
        assert_eq!(ov.weight_from(&[2, 3], 1), f.weight_from(&[2, 3], 1));
    }
}
