//! Integer mixing primitives shared by the weight field and the derived
//! Monte Carlo substreams.
//!
//! Everything downstream (edge weights, bootstrap resamples, replica
//! scheduling) is keyed off these mixers, so results are reproducible
//! bit-for-bit across runs and platforms and independent of exploration
//! order.

/// SplitMix64 finalizer. Full-avalanche: every input bit affects every
/// output bit with probability close to 1/2.
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds one more key word into a running hash state.
#[inline(always)]
pub fn fold(state: u64, key: u64) -> u64 {
    mix64(state ^ key.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// A value in `[0, 1)` built from the 53 high bits of `h`. Exact on every
/// platform: the product is a dyadic rational below 1.
#[inline(always)]
pub fn unit_open(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Small deterministic counter stream for bootstrap resampling and other
/// utility draws. Not used for edge weights (those are keyed directly).
#[derive(Debug, Clone)]
pub struct CounterRng {
    state: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { state: mix64(seed ^ 0x5bf0_3635_16f1_57d1), counter: 0 }
    }

    /// Derive an independent stream labelled by `tag`.
    pub fn derive(&self, tag: u64) -> Self {
        Self { state: fold(self.state, tag), counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        fold(self.state, self.counter)
    }

    /// Uniform index in `[0, n)`.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }
}

/// Hasher for lattice coordinates. The standard SipHash is safe but slow
/// for the shortest-path inner loop; map keys here are small integer
/// tuples, so a multiply-xor fold is enough.
#[derive(Default, Clone)]
pub struct CoordHasher {
    state: u64,
}

impl std::hash::Hasher for CoordHasher {
    #[inline]
    fn finish(&self) -> u64 {
        mix64(self.state)
    }

    #[inline]
    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            self.state = fold(self.state, u64::from_le_bytes(buf));
        }
    }

    #[inline]
    fn write_u64(&mut self, v: u64) {
        self.state = self
            .state
            .rotate_left(23)
            .wrapping_add(v)
            .wrapping_mul(0x9e37_79b9_7f4a_7c15);
    }

    #[inline]
    fn write_i64(&mut self, v: i64) {
        self.write_u64(v as u64);
    }

    #[inline]
    fn write_usize(&mut self, v: usize) {
        self.write_u64(v as u64);
    }

    #[inline]
    fn write_u8(&mut self, v: u8) {
        self.write_u64(v as u64);
    }
}

/// `BuildHasher` for [`CoordHasher`].
#[derive(Default, Clone)]
pub struct CoordHashBuilder;

impl std::hash::BuildHasher for CoordHashBuilder {
    type Hasher = CoordHasher;

    #[inline]
    fn build_hasher(&self) -> CoordHasher {
        CoordHasher::default()
    }
}

/// HashMap keyed by lattice data with the fast coordinate hasher.
pub type CoordMap<K, V> = std::collections::HashMap<K, V, CoordHashBuilder>;
/// HashSet counterpart of [`CoordMap`].
pub type CoordSet<K> = std::collections::HashSet<K, CoordHashBuilder>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_is_deterministic_and_spreads() {
        assert_eq!(mix64(42), mix64(42));
        let a = mix64(1);
        let b = mix64(2);
        assert_ne!(a, b);
        assert!((a ^ b).count_ones() > 10);
    }

    #[test]
    fn unit_open_is_in_unit_interval() {
        for h in [0u64, 1, u64::MAX, 0x8000_0000_0000_0000] {
            let u = unit_open(h);
            assert!((0.0..1.0).contains(&u), "u = {u}");
        }
        assert_eq!(unit_open(0), 0.0);
        assert!(unit_open(u64::MAX) < 1.0);
    }

    #[test]
    fn counter_streams_diverge() {
        let base = CounterRng::new(7);
        let mut a = base.derive(1);
        let mut b = base.derive(2);
        let same = (0..100).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }
}
