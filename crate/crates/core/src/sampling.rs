//! Stratified Monte Carlo access to the Bell expression at large d.
//!
//! Uniform sampling of label pairs is useless here: the coefficient alpha
//! vanishes outside an exponentially small set of pairs. The estimator
//! therefore samples only the two supported strata, equal labels and labels
//! at Hamming distance d/2, and recombines them with their exact counts
//! 2^d and 2^d C(d, d/2) in the normalized domain:
//!
//!   I / 2^d  =  E_A[ 1(a = b != 0) ]  -  C(d, d/2) E_B[ 1(a = b != 0) ].
//!
//! Each trial simulates the detector clicks and the same-outcome event with
//! their exact laws: both detectors click independently with probability eta,
//! and conditioned on both clicking the outcomes agree with probability
//! ((d - 2 wt(z)) / d)^2, the only statistic of the outcome pair the Bell sum
//! consumes. That keeps the per-sample cost at O(d) even at d = 4096, where
//! materializing per-outcome tables is impossible.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::numeric::{derive_seed, log2_choose};
use crate::scenario::{EfficiencyModel, Scenario};

/// Number of logical shards the trial budget is split into. Fixed so the
/// estimate depends only on (seed, samples), never on how many worker
/// threads execute the shards.
pub const DEFAULT_SHARDS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Default, Clone, Copy)]
struct StratumCounts {
    n: u64,
    hits: u64,
}

impl StratumCounts {
    fn merge(&mut self, other: &StratumCounts) {
        self.n += other.n;
        self.hits += other.hits;
    }

    fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.hits as f64 / self.n as f64
        }
    }

    /// Unbiased variance of the 0/1 indicator.
    fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let m = self.mean();
        m * (1.0 - m) * n / (n - 1.0)
    }
}

/// Probability that the two outcomes agree, conditioned on both detectors
/// clicking, for labels with x xor y of the given weight.
fn same_outcome_prob(d: usize, z_weight: u32) -> f64 {
    let delta = d as f64 - 2.0 * z_weight as f64;
    (delta / d as f64) * (delta / d as f64)
}

fn shard_quota(total: u64, shards: u32, shard: u32) -> u64 {
    let base = total / shards as u64;
    let rem = total % shards as u64;
    base + u64::from((shard as u64) < rem)
}

fn run_shard(d: usize, eta: f64, n_same: u64, n_far: u64, seed: u64) -> (StratumCounts, StratumCounts) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut same = StratumCounts::default();
    let mut far = StratumCounts::default();
    let mut positions: Vec<usize> = (0..d).collect();

    let trial = |rng: &mut ChaCha8Rng, z_weight: u32| -> bool {
        let click_a = rng.gen::<f64>() < eta;
        let click_b = rng.gen::<f64>() < eta;
        if !(click_a && click_b) {
            return false;
        }
        let p = same_outcome_prob(d, z_weight);
        if p >= 1.0 {
            true
        } else if p <= 0.0 {
            false
        } else {
            rng.gen::<f64>() < p
        }
    };

    for _ in 0..n_same {
        // Stratum A: y = x. The conditional law depends on the labels only
        // through x xor y, but x is still drawn to follow the declared
        // sampling scheme.
        let _x = BitString::random(d, &mut rng);
        same.n += 1;
        same.hits += u64::from(trial(&mut rng, 0));
    }
    for _ in 0..n_far {
        // Stratum B: x uniform, y = x with a uniform d/2-subset flipped.
        let _x = BitString::random(d, &mut rng);
        let half = d / 2;
        for i in 0..half {
            let j = rng.gen_range(i..d);
            positions.swap(i, j);
        }
        far.n += 1;
        far.hits += u64::from(trial(&mut rng, half as u32));
    }
    (same, far)
}

/// Stratified estimate of the normalized Bell value with an explicit shard
/// count. The result is a pure function of (seed, samples, shards); shards
/// execute in parallel on the ambient thread pool.
pub fn estimate_bell_sampled_sharded(
    s: &Scenario,
    em: EfficiencyModel,
    samples: u64,
    seed: u64,
    shards: u32,
) -> Result<SampleEstimate> {
    if !s.is_implicit() {
        return Err(Error::invalid(
            "the stratified sampler needs the implicit bit-string family",
        ));
    }
    if samples == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    if shards == 0 {
        return Err(Error::invalid("shard count must be positive"));
    }
    let d = s.d();
    if d % 2 != 0 {
        return Err(Error::invalid("stratum at distance d/2 needs even d"));
    }
    let eta = em.eta();
    let n_same_total = samples.div_ceil(2);
    let n_far_total = samples / 2;

    let per_shard: Vec<(StratumCounts, StratumCounts)> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            run_shard(
                d,
                eta,
                shard_quota(n_same_total, shards, shard),
                shard_quota(n_far_total, shards, shard),
                derive_seed(seed, shard as u64),
            )
        })
        .collect();

    let mut same = StratumCounts::default();
    let mut far = StratumCounts::default();
    for (s_c, f_c) in &per_shard {
        same.merge(s_c);
        far.merge(f_c);
    }

    // Combine in the normalized domain: the far stratum carries the exact
    // C(d, d/2) class count, applied in log2 space so 2^d never appears.
    let log2_half_count = log2_choose(d as u64, d as u64 / 2);
    let far_term = scaled(log2_half_count, far.mean());
    let far_var_term = if far.n == 0 {
        0.0
    } else {
        scaled(2.0 * log2_half_count, far.variance() / far.n as f64)
    };
    let mean = same.mean() - far_term;
    let stderr = (same.variance() / same.n.max(1) as f64 + far_var_term).sqrt();
    Ok(SampleEstimate {
        mean,
        stderr,
        samples,
        seed,
    })
}

/// `exp2(log2_scale) * value`, with the exact zero preserved so that an
/// astronomically large class count never multiplies an empty stratum.
fn scaled(log2_scale: f64, value: f64) -> f64 {
    if value == 0.0 {
        0.0
    } else {
        (log2_scale + value.log2()).exp2()
    }
}

/// Stratified estimate with the default shard count.
pub fn estimate_bell_sampled(
    s: &Scenario,
    em: EfficiencyModel,
    samples: u64,
    seed: u64,
) -> Result<SampleEstimate> {
    estimate_bell_sampled_sharded(s, em, samples, seed, DEFAULT_SHARDS)
}
