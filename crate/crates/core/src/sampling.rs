//! Seeded, sharded sampling.
//!
//! Samples are grouped into fixed-size shards. Shard `s` of stream `t` draws
//! from a ChaCha8 generator seeded with `seed` on stream `(t << 32) | s`, so
//! the drawn values depend only on `(seed, stream, shard)` and never on the
//! number of worker threads. Partial results merge through an associative,
//! commutative reduction.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub const SHARD_SIZE: usize = 64;

/// Stream tags keep the checks' random sequences disjoint.
pub mod stream {
    pub const AXIOMS: u64 = 1;
    pub const BI_INVARIANCE: u64 = 2;
    pub const WELL_DEFINED: u64 = 3;
    pub const INVARIANCE_LEFT: u64 = 4;
    pub const INVARIANCE_RIGHT: u64 = 5;
    pub const RIEMANN: u64 = 6;
    pub const PULLBACK: u64 = 7;
}

pub fn shard_rng(seed: u64, stream: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream << 32) | (shard & 0xffff_ffff));
    rng
}

pub fn uniform_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(lo..=hi))
}

pub fn unit_sphere<R: Rng + ?Sized>(rng: &mut R, len: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// Runs `map` on sample indices `0..samples`, shard by shard, and folds the
/// results with `merge`. `merge` must be associative and commutative with
/// `identity` as its neutral element.
pub fn sharded_reduce<T, M, R>(
    samples: usize,
    seed: u64,
    stream: u64,
    identity: T,
    map: M,
    merge: R,
) -> T
where
    T: Clone + Send + Sync,
    M: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
    R: Fn(T, T) -> T + Sync,
{
    let shards = samples.div_ceil(SHARD_SIZE);
    (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = shard_rng(seed, stream, shard as u64);
            let start = shard * SHARD_SIZE;
            let end = (start + SHARD_SIZE).min(samples);
            (start..end).fold(identity.clone(), |acc, i| merge(acc, map(&mut rng, i)))
        })
        .reduce(|| identity.clone(), &merge)
}

/// Raw sampled inputs of one sample, keyed by role (`z`, `h`, `g`, `mu`, ...).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Witness {
    pub index: usize,
    pub inputs: BTreeMap<String, Vec<f64>>,
}

impl Witness {
    pub fn new(index: usize) -> Self {
        Self {
            index,
            inputs: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, values: &DVector<f64>) -> Self {
        self.inputs
            .insert(key.to_string(), values.iter().copied().collect());
        self
    }
}

/// Outcome of one sampled comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub deviation: f64,
    pub witness: Witness,
}

/// Max-deviation summary over a sampled check.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub samples_run: usize,
    pub max_deviation: f64,
    /// The sample attaining `max_deviation` (lowest index on ties).
    pub worst: Option<Witness>,
}

impl DeviationReport {
    pub fn empty() -> Self {
        Self {
            samples_run: 0,
            max_deviation: 0.0,
            worst: None,
        }
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_deviation <= tolerance
    }

    pub fn merge(self, other: Self) -> Self {
        let samples_run = self.samples_run + other.samples_run;
        let self_wins = match (&self.worst, &other.worst) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => {
                self.max_deviation > other.max_deviation
                    || (self.max_deviation == other.max_deviation && a.index < b.index)
            }
        };
        let winner = if self_wins { self } else { other };
        Self {
            samples_run,
            ..winner
        }
    }
}

impl From<Sample> for DeviationReport {
    fn from(s: Sample) -> Self {
        let deviation = if s.deviation.is_nan() {
            f64::INFINITY
        } else {
            s.deviation
        };
        Self {
            samples_run: 1,
            max_deviation: deviation,
            worst: Some(s.witness),
        }
    }
}

/// Sharded max-reduction of per-sample deviations.
pub fn max_deviation<F>(samples: usize, seed: u64, stream: u64, sample: F) -> DeviationReport
where
    F: Fn(&mut ChaCha8Rng, usize) -> Sample + Sync,
{
    sharded_reduce(
        samples,
        seed,
        stream,
        DeviationReport::empty(),
        |rng, i| DeviationReport::from(sample(rng, i)),
        DeviationReport::merge,
    )
}

/// Symmetric relative difference; zero when both values vanish.
pub fn relative_deviation(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
