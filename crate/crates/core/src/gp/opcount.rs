use std::time::{Duration, Instant};

use nalgebra::{Cholesky, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{kernel, GpError, HyperParams};
use crate::geometry::Point;

/// Cubic operation-count model for predicting `m` test points from `n`
/// training points: one joint factorization of size `n + m` against `m`
/// factorizations of size `n + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCount {
    pub batch: u128,
    pub sequential: u128,
}

impl OpCount {
    /// How many times cheaper the batch is.
    pub fn ratio(&self) -> f64 {
        self.sequential as f64 / self.batch as f64
    }
}

pub fn op_count(n: u64, m: u64) -> OpCount {
    let (n, m) = (n as u128, m as u128);
    OpCount {
        batch: (n + m).pow(3),
        sequential: m * (n + 1).pow(3),
    }
}

/// Wall time of the two strategies the count model compares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchTiming {
    pub batch: Duration,
    pub sequential: Duration,
}

impl BenchTiming {
    pub fn ratio(&self) -> f64 {
        self.sequential.as_secs_f64() / self.batch.as_secs_f64()
    }
}

/// Times one dense Cholesky of order `n + m` against `m` of order `n + 1`
/// on random inputs, keeping the fastest of `reps` repetitions of each.
pub fn time_factorizations(
    n: usize,
    m: usize,
    reps: usize,
    seed: u64,
) -> Result<BenchTiming, GpError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Point> = (0..n + m)
        .map(|_| Point::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)))
        .collect();
    let h = HyperParams::new(1.0, 0.01, 10.0)?;
    let gram = |idx: &[usize]| {
        DMatrix::from_fn(idx.len(), idx.len(), |i, j| {
            kernel(pts[idx[i]], pts[idx[j]], &h) + if i == j { h.sigma_n2 } else { 0.0 }
        })
    };
    let chol = |k: DMatrix<f64>| {
        Cholesky::new(k)
            .ok_or(GpError::NotPositiveDefinite {
                pivot: 0,
                value: f64::NAN,
            })
            .map(std::hint::black_box)
    };

    let all: Vec<usize> = (0..n + m).collect();
    let joint = gram(&all);
    let singles: Vec<DMatrix<f64>> = (0..m)
        .map(|j| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.push(n + j);
            gram(&idx)
        })
        .collect();

    let mut batch = Duration::MAX;
    let mut sequential = Duration::MAX;
    for _ in 0..reps.max(1) {
        let t = Instant::now();
        chol(joint.clone())?;
        batch = batch.min(t.elapsed());
        let t = Instant::now();
        for k in &singles {
            chol(k.clone())?;
        }
        sequential = sequential.min(t.elapsed());
    }
    Ok(BenchTiming { batch, sequential })
}
