//! Dense bidirectional point-to-point search for d = 2.
//!
//! Tail and exponent estimators sample `T(0, N u)` millions of times, so
//! this path trades generality for speed:
//!
//! - both directions' tentative distances live in one flat array of
//!   16-byte cells over an adaptive bounding box, so the this-side update
//!   and the other-side meet check share a cache line;
//! - touched cells are recorded and reset afterwards, so buffers are
//!   reused with no per-query clearing;
//! - the frontier is a monotone radix heap keyed on the raw f64 bits
//!   (order-isomorphic to the float order for non-negative values).
//!
//! Only the value is produced; the general engine owns geodesics and
//! tie-breaking. The value is the same minimum over forward path sums as
//! the general engine computes: if the explored ball touches the current
//! box the search restarts on a doubled box, so clipping never biases the
//! result.

use std::cell::RefCell;

use crate::weight_field::EdgeWeights;

use super::PassageError;

const UNSET: u64 = u64::MAX;

/// Monotone priority queue over u64 keys (radix heap). Pops are
/// nondecreasing; pushes must be >= the last popped key, which Dijkstra
/// guarantees with non-negative weights.
struct RadixHeap {
    buckets: Vec<Vec<(u64, u32)>>,
    last: u64,
    len: usize,
}

impl RadixHeap {
    fn new() -> Self {
        RadixHeap { buckets: (0..65).map(|_| Vec::new()).collect(), last: 0, len: 0 }
    }

    fn clear(&mut self) {
        for b in self.buckets.iter_mut() {
            b.clear();
        }
        self.last = 0;
        self.len = 0;
    }

    #[inline]
    fn bucket_of(key: u64, last: u64) -> usize {
        (64 - (key ^ last).leading_zeros()) as usize
    }

    #[inline]
    fn push(&mut self, key: u64, value: u32) {
        debug_assert!(key >= self.last);
        self.buckets[Self::bucket_of(key, self.last)].push((key, value));
        self.len += 1;
    }

    #[inline]
    fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Smallest key currently stored (the next pop). Linear in the bucket
    /// count, constant-ish in practice.
    fn peek_key(&mut self) -> Option<u64> {
        if self.len == 0 {
            return None;
        }
        if !self.buckets[0].is_empty() {
            return Some(self.last);
        }
        self.refill();
        Some(self.last)
    }

    fn pop(&mut self) -> Option<(u64, u32)> {
        if self.len == 0 {
            return None;
        }
        if self.buckets[0].is_empty() {
            self.refill();
        }
        self.len -= 1;
        self.buckets[0].pop()
    }

    /// Move the contents of the first nonempty bucket down, re-bucketing
    /// relative to its minimum key.
    fn refill(&mut self) {
        let i = self
            .buckets
            .iter()
            .position(|b| !b.is_empty())
            .expect("len > 0 implies a nonempty bucket");
        let min = self.buckets[i].iter().map(|&(k, _)| k).min().expect("nonempty");
        self.last = min;
        let drained = std::mem::take(&mut self.buckets[i]);
        for (k, v) in drained {
            self.buckets[Self::bucket_of(k, min)].push((k, v));
        }
    }
}

/// Distances of both search directions for one cell.
#[derive(Clone, Copy)]
struct Cell {
    dist: [u64; 2],
}

const EMPTY_CELL: Cell = Cell { dist: [UNSET, UNSET] };

struct Scratch {
    cells: Vec<Cell>,
    touched: Vec<u32>,
    heaps: [RadixHeap; 2],
}

impl Scratch {
    fn new() -> Self {
        Scratch {
            cells: Vec::new(),
            touched: Vec::new(),
            heaps: [RadixHeap::new(), RadixHeap::new()],
        }
    }

    /// Restore the all-UNSET invariant.
    fn reset_touched(&mut self) {
        for &idx in &self.touched {
            self.cells[idx as usize] = EMPTY_CELL;
        }
        self.touched.clear();
    }
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch::new());
}

pub(super) fn point_value_d2<W: EdgeWeights + ?Sized>(
    field: &W,
    src: [i64; 2],
    dst: [i64; 2],
    budget: Option<u64>,
) -> Result<f64, PassageError> {
    if src == dst {
        return Ok(0.0);
    }
    SCRATCH.with(|s| {
        let mut scratch = s.borrow_mut();
        let span = (src[0] - dst[0]).abs().max((src[1] - dst[1]).abs()).max(8);
        let mut pad = span * 3 / 4 + 8;
        let mut pops_total = 0u64;
        loop {
            let out = attempt(field, src, dst, pad, budget, &mut scratch, &mut pops_total);
            scratch.reset_touched();
            match out? {
                Some(value) => return Ok(value),
                None => {
                    pad *= 2;
                    if pad > span * 512 {
                        // The metric ball cannot be this eccentric with
                        // weights bounded below by the dyadic grid.
                        return Err(PassageError::Disconnected);
                    }
                }
            }
        }
    })
}

/// One bidirectional run on a fixed box. Returns `Ok(None)` when the
/// explored ball touched the box boundary and the box must grow.
fn attempt<W: EdgeWeights + ?Sized>(
    field: &W,
    src: [i64; 2],
    dst: [i64; 2],
    pad: i64,
    budget: Option<u64>,
    scratch: &mut Scratch,
    pops_total: &mut u64,
) -> Result<Option<f64>, PassageError> {
    let lo = [src[0].min(dst[0]) - pad, src[1].min(dst[1]) - pad];
    let hi = [src[0].max(dst[0]) + pad, src[1].max(dst[1]) + pad];
    let w = (hi[0] - lo[0] + 1) as usize;
    let h = (hi[1] - lo[1] + 1) as usize;
    let cells = w * h;

    if scratch.cells.len() < cells {
        scratch.cells.resize(cells, EMPTY_CELL);
    }
    for heap in scratch.heaps.iter_mut() {
        heap.clear();
    }

    let index = |p: [i64; 2]| -> usize { (p[1] - lo[1]) as usize * w + (p[0] - lo[0]) as usize };

    let si = index(src);
    let di = index(dst);
    scratch.cells[si].dist[0] = 0;
    scratch.touched.push(si as u32);
    scratch.cells[di].dist[1] = 0;
    scratch.touched.push(di as u32);
    scratch.heaps[0].push(0, si as u32);
    scratch.heaps[1].push(0, di as u32);

    let mut best = f64::INFINITY;

    loop {
        let top0 = scratch.heaps[0].peek_key();
        let top1 = scratch.heaps[1].peek_key();
        let side = match (top0, top1) {
            (None, None) => break,
            (Some(a), None) => {
                if best.is_finite() && f64::from_bits(a) >= best {
                    return Ok(Some(best));
                }
                0usize
            }
            (None, Some(b)) => {
                if best.is_finite() && f64::from_bits(b) >= best {
                    return Ok(Some(best));
                }
                1
            }
            (Some(a), Some(b)) => {
                if best.is_finite() && f64::from_bits(a) + f64::from_bits(b) >= best {
                    return Ok(Some(best));
                }
                usize::from(b < a)
            }
        };

        let (bits, idx32) = scratch.heaps[side].pop().expect("peeked entry");
        let idx = idx32 as usize;
        if scratch.cells[idx].dist[side] != bits {
            continue; // stale entry
        }
        *pops_total += 1;
        if let Some(b) = budget {
            if *pops_total > b {
                return Err(PassageError::BudgetExhausted { expanded: *pops_total });
            }
        }
        let px = lo[0] + (idx % w) as i64;
        let py = lo[1] + (idx / w) as i64;
        // Ball touched the box: result could be clipped, grow and retry.
        if px == lo[0] || px == hi[0] || py == lo[1] || py == hi[1] {
            return Ok(None);
        }
        let time = f64::from_bits(bits);
        let other = 1 - side;
        for (axis, delta, nidx) in [
            (0usize, 1i64, idx + 1),
            (0, -1, idx - 1),
            (1, 1, idx + w),
            (1, -1, idx - w),
        ] {
            let weight = if delta == 1 {
                field.weight_from(&[px, py], axis)
            } else if axis == 0 {
                field.weight_from(&[px - 1, py], axis)
            } else {
                field.weight_from(&[px, py - 1], axis)
            };
            let nd = time + weight;
            let nbits = nd.to_bits();
            let cell = &mut scratch.cells[nidx];
            if nbits < cell.dist[side] {
                if cell.dist == EMPTY_CELL.dist {
                    scratch.touched.push(nidx as u32);
                }
                cell.dist[side] = nbits;
                scratch.heaps[side].push(nbits, nidx as u32);
                let o = cell.dist[other];
                if o != UNSET {
                    let cand = nd + f64::from_bits(o);
                    if cand < best {
                        best = cand;
                    }
                }
            }
        }
    }

    if best.is_finite() {
        Ok(Some(best))
    } else {
        Err(PassageError::Disconnected)
    }
}

#[cfg(test)]
mod tests {
    use crate::geom::Region;
    use crate::passage::{passage_time, point_passage_value, QuerySpec, TargetSet};
    use crate::weight_field::{DistributionSpec, LatticePoint, WeightField};

    fn lp(x: i64, y: i64) -> LatticePoint {
        LatticePoint::new(vec![x, y])
    }

    #[test]
    fn dense_matches_general_engine_bit_for_bit() {
        // Dyadic weights make every path sum exact, so the two engines
        // must agree exactly.
        for seed in 0..30u64 {
            let f = WeightField::new(seed, 2, DistributionSpec::Uniform { lo: 0.0, hi: 0.0625 })
                .unwrap();
            let targets = [lp(17, 0), lp(9, 13), lp(-12, 4), lp(0, -21)];
            for t in &targets {
                let fast = point_passage_value(&f, &lp(0, 0), t, None).unwrap();
                let q = QuerySpec::new(
                    &f,
                    Region::Everything,
                    vec![lp(0, 0)],
                    TargetSet::single(t.clone()),
                );
                let slow = passage_time(&q).unwrap().time;
                assert_eq!(fast.to_bits(), slow.to_bits(), "seed {seed} target {t}");
            }
        }
    }

    #[test]
    fn dense_two_point_matches_too() {
        for seed in 100..120u64 {
            let f = WeightField::new(
                seed,
                2,
                DistributionSpec::TwoPoint { w0: 0.02, w1: 0.05, p: 0.5 },
            )
            .unwrap();
            let t = lp(25, -7);
            let fast = point_passage_value(&f, &lp(0, 0), &t, None).unwrap();
            let q = QuerySpec::new(
                &f,
                Region::Everything,
                vec![lp(0, 0)],
                TargetSet::single(t.clone()),
            );
            let slow = passage_time(&q).unwrap().time;
            assert_eq!(fast.to_bits(), slow.to_bits(), "seed {seed}");
        }
    }

    #[test]
    fn dense_identity_and_budget() {
        let f =
            WeightField::new(3, 2, DistributionSpec::Uniform { lo: 0.0, hi: 0.0625 }).unwrap();
        assert_eq!(point_passage_value(&f, &lp(4, 4), &lp(4, 4), None).unwrap(), 0.0);
        let r = point_passage_value(&f, &lp(0, 0), &lp(400, 0), Some(5));
        assert!(matches!(r, Err(crate::passage::PassageError::BudgetExhausted { .. })));
    }

    #[test]
    fn dense_reuses_scratch_across_many_queries() {
        let f =
            WeightField::new(8, 2, DistributionSpec::Uniform { lo: 0.0, hi: 0.0625 }).unwrap();
        // Interleave sizes to exercise reset and regrowth.
        let mut acc = 0.0;
        for i in 0..50i64 {
            acc += point_passage_value(&f, &lp(0, 0), &lp(10 + (i % 7), i % 5), None).unwrap();
            acc += point_passage_value(&f, &lp(-3, 2), &lp(40, -1), None).unwrap();
        }
        assert!(acc > 0.0);
        // Same query twice gives identical bits after heavy reuse.
        let a = point_passage_value(&f, &lp(0, 0), &lp(33, 9), None).unwrap();
        let b = point_passage_value(&f, &lp(0, 0), &lp(33, 9), None).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
