//! Seeded randomness and the deterministic fan-out used by every Monte
//! Carlo routine.
//!
//! Reproducibility contract: a run is a pure function of (inputs, seed).
//! Work is cut into fixed-size chunks; chunk `i` draws from a source derived
//! by seed splitting (base seed + chunk index) and results are concatenated
//! in chunk order. The output is therefore bit-identical whether the chunks
//! run on one thread or many, and whether the `parallel` feature is on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Number of realizations handled by one chunk of Monte Carlo work.
pub const CHUNK: usize = 1 << 14;

/// A seeded source of uniform variates. `Copy` on purpose: passing a source
/// around never advances anyone else's stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource { seed }
    }

    /// Derive the source for worker/chunk `index` (seed + index, wrapping).
    pub fn split(&self, index: u64) -> Self {
        RandomSource {
            seed: self.seed.wrapping_add(index),
        }
    }

    /// Fresh generator positioned at the start of this source's stream.
    pub fn rng(&self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.seed)
    }
}

/// Draw a uniform variate in the open interval (0, 1).
///
/// `random::<f64>()` yields [0, 1); zero is remapped to the smallest
/// positive normal so quantile transforms never see an endpoint.
pub fn uniform_open01(rng: &mut ChaCha12Rng) -> f64 {
    let u: f64 = rng.random();
    if u == 0.0 {
        f64::MIN_POSITIVE
    } else {
        u
    }
}

/// Run `fill(chunk_rng, start, len)` for every fixed-size chunk covering
/// `total` items and concatenate the outputs in chunk order.
///
/// This is the sequential engine; it is always compiled so benchmarks can
/// compare it against the parallel one.
pub fn chunked_collect_serial<T, F>(total: usize, src: RandomSource, fill: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha12Rng, usize, usize) -> Vec<T> + Sync,
{
    let mut out = Vec::with_capacity(total);
    for (idx, start) in (0..total).step_by(CHUNK.max(1)).enumerate() {
        let len = CHUNK.min(total - start);
        let mut rng = src.split(idx as u64).rng();
        out.extend(fill(&mut rng, start, len));
    }
    out
}

/// Parallel twin of [`chunked_collect_serial`]; identical output by
/// construction (same chunk boundaries, same per-chunk seeds, merge in
/// chunk order).
#[cfg(feature = "parallel")]
pub fn chunked_collect_parallel<T, F>(total: usize, src: RandomSource, fill: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha12Rng, usize, usize) -> Vec<T> + Sync,
{
    use rayon::prelude::*;

    let starts: Vec<(usize, usize)> = (0..total)
        .step_by(CHUNK.max(1))
        .enumerate()
        .collect();
    let chunks: Vec<Vec<T>> = starts
        .par_iter()
        .map(|&(idx, start)| {
            let len = CHUNK.min(total - start);
            let mut rng = src.split(idx as u64).rng();
            fill(&mut rng, start, len)
        })
        .collect();
    let mut out = Vec::with_capacity(total);
    for c in chunks {
        out.extend(c);
    }
    out
}

/// Dispatch to the parallel engine when the feature is on, otherwise to the
/// sequential fallback. Output does not depend on the choice.
pub fn chunked_collect<T, F>(total: usize, src: RandomSource, fill: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha12Rng, usize, usize) -> Vec<T> + Sync,
{
    #[cfg(feature = "parallel")]
    {
        chunked_collect_parallel(total, src, fill)
    }
    #[cfg(not(feature = "parallel"))]
    {
        chunked_collect_serial(total, src, fill)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<f64> = (0..32).map(|_| 0.0).collect();
        let _ = a;
        let src = RandomSource::new(7);
        let mut r1 = src.rng();
        let mut r2 = src.rng();
        for _ in 0..64 {
            assert_eq!(r1.random::<u64>(), r2.random::<u64>());
        }
    }

    #[test]
    fn split_changes_stream() {
        let src = RandomSource::new(7);
        let mut base = src.rng();
        let mut split = src.split(1).rng();
        let same = (0..16).all(|_| base.random::<u64>() == split.random::<u64>());
        assert!(!same, "split source must not replay the base stream");
    }

    #[test]
    fn serial_engine_is_deterministic_and_chunk_seeded() {
        let src = RandomSource::new(42);
        let n = CHUNK + 123;
        let gen = |rng: &mut ChaCha12Rng, _start: usize, len: usize| -> Vec<f64> {
            (0..len).map(|_| uniform_open01(rng)).collect()
        };
        let a = chunked_collect_serial(n, src, gen);
        let b = chunked_collect_serial(n, src, gen);
        assert_eq!(a, b);
        assert_eq!(a.len(), n);
        // Second chunk must match a fresh run of the split source.
        let mut rng = src.split(1).rng();
        assert_eq!(a[CHUNK], uniform_open01(&mut rng));
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_serial_bitwise() {
        let src = RandomSource::new(3);
        let n = 3 * CHUNK + 17;
        let gen = |rng: &mut ChaCha12Rng, _start: usize, len: usize| -> Vec<f64> {
            (0..len).map(|_| uniform_open01(rng)).collect()
        };
        let s = chunked_collect_serial(n, src, gen);
        let p = chunked_collect_parallel(n, src, gen);
        assert_eq!(s, p);
    }

    #[test]
    fn uniform_stays_inside_open_interval() {
        let mut rng = RandomSource::new(11).rng();
        for _ in 0..10_000 {
            let u = uniform_open01(&mut rng);
            assert!(u > 0.0 && u < 1.0);
        }
    }
}
