//! Seeded, partition-independent Monte Carlo sampling.
//!
//! Samples are grouped in fixed blocks of [`BLOCK`] draws. Block `b` draws
//! from its own ChaCha stream keyed by `(seed, tag, b)`, and block results are
//! merged in block order, so an estimate depends only on `(seed, samples)`:
//! the number of worker threads changes the wall time, never the bits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domains::BoundingBox;

pub const BLOCK: u64 = 8192;

/// Separates the random streams of independent estimates drawn from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Volume = 1,
    DomainMean = 2,
    Region = 3,
    SphereNodes = 4,
    Certificate = 5,
    Walk = 6,
    Sweep = 7,
}

/// The ChaCha stream for `(seed, tag, index)`.
pub fn stream(seed: u64, tag: StreamTag, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << 48);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tag as u64) << 48) | index);
    rng
}

/// Welford accumulator with Chan's pairwise merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (0 below two samples).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Draws `samples` uniform points in `bbox`. For each point `f` fills one
/// value per output and returns whether the point is accepted; statistics
/// cover accepted points only.
pub fn sample_box<F>(
    bbox: &BoundingBox,
    seed: u64,
    tag: StreamTag,
    samples: u64,
    outputs: usize,
    f: F,
) -> Vec<RunningStats>
where
    F: Fn(&[f64], &mut [f64]) -> bool + Sync,
{
    let blocks = samples.div_ceil(BLOCK);
    let m = bbox.dim();
    let per_block: Vec<Vec<RunningStats>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, tag, b);
            let count = BLOCK.min(samples - b * BLOCK);
            let mut stats = vec![RunningStats::default(); outputs];
            let mut p = vec![0.0; m];
            let mut out = vec![0.0; outputs];
            for _ in 0..count {
                for (i, x) in p.iter_mut().enumerate() {
                    *x = bbox.lo[i] + (bbox.hi[i] - bbox.lo[i]) * rng.random::<f64>();
                }
                if f(&p, &mut out) {
                    for (s, v) in stats.iter_mut().zip(&out) {
                        s.push(*v);
                    }
                }
            }
            stats
        })
        .collect();
    let mut total = vec![RunningStats::default(); outputs];
    for block in &per_block {
        for (t, s) in total.iter_mut().zip(block) {
            t.merge(s);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest};

    proptest! {
        #[test]
        fn merge_matches_sequential(xs in prop::collection::vec(-1e3..1e3f64, 2..200), split in 0usize..200) {
            let split = split.min(xs.len());
            let mut all = RunningStats::default();
            xs.iter().for_each(|&x| all.push(x));
            let (mut a, mut b) = (RunningStats::default(), RunningStats::default());
            xs[..split].iter().for_each(|&x| a.push(x));
            xs[split..].iter().for_each(|&x| b.push(x));
            a.merge(&b);
            prop_assert_eq!(a.count(), all.count());
            prop_assert!((a.mean() - all.mean()).abs() <= 1e-9 * (1.0 + all.mean().abs()));
            prop_assert!((a.variance() - all.variance()).abs() <= 1e-7 * (1.0 + all.variance()));
        }
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: u64 = stream(1, StreamTag::Region, 0).random();
        let b: u64 = stream(1, StreamTag::Region, 1).random();
        let c: u64 = stream(1, StreamTag::Volume, 0).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, stream(1, StreamTag::Region, 0).random::<u64>());
    }

    #[test]
    fn independent_of_thread_count() {
        let bbox = BoundingBox { lo: vec![0.0, 0.0], hi: vec![1.0, 2.0] };
        let run = || sample_box(&bbox, 3, StreamTag::Region, 50_000, 1, |p, out| {
            out[0] = p[0] * p[1];
            true
        });
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
        let multi = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(run);
        assert_eq!(single, multi);
        assert_eq!(single[0].count(), 50_000);
    }
}
