//! The rejection protocol: a local model with inefficient detectors replayed
//! as a communication protocol with perfect detectors.
//!
//! Both parties walk a shared i.i.d. stream of hidden variables. Each round
//! they announce one bit each (click or no click) and stop at the first
//! round where both clicked, outputting that round's outcomes. The round
//! count is geometric with success probability eta^2, so the conversation
//! costs 2/eta^2 bits on average while reproducing the double-click
//! correlations exactly.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::lhv::LhvModel;
use crate::numeric::derive_seed;
use crate::scenario::{EfficiencyModel, OutcomeIndex, Scenario};

pub const DEFAULT_ITERATION_CAP: u64 = 1_000_000;
pub const DEFAULT_STAT_SHARDS: u32 = 64;

/// A local model with a nominal click rate, packaged for repeated sampling:
/// the hidden variable is the strategy-pair index drawn from the mixture
/// weights.
pub struct SampledLvModel {
    model: LhvModel,
    eta: f64,
    cumulative: Vec<f64>,
}

impl SampledLvModel {
    pub fn from_model(model: LhvModel, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid(format!(
                "nominal efficiency must lie in (0, 1], got {eta}"
            )));
        }
        let mut cumulative = Vec::with_capacity(model.strategies.len());
        let mut acc = 0.0;
        for (w, _) in &model.strategies {
            acc += w;
            cumulative.push(acc);
        }
        Ok(SampledLvModel {
            model,
            eta,
            cumulative,
        })
    }

    /// The quadruple model for the given scenario and labels; clicks at rate
    /// 1/M per side, independently.
    pub fn from_popescu(
        s: &Scenario,
        labels_a: &[BitString],
        labels_b: &[BitString],
    ) -> Result<Self> {
        let (model, eta) = crate::lhv::popescu_model(labels_a, labels_b, s)?;
        Self::from_model(model, eta)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn model(&self) -> &LhvModel {
        &self.model
    }

    pub fn label_index(&self, x: &BitString, y: &BitString) -> Result<(usize, usize)> {
        let xi = self
            .model
            .labels_a()
            .iter()
            .position(|l| l == x)
            .ok_or_else(|| Error::invalid(format!("unknown alice label {x}")))?;
        let yi = self
            .model
            .labels_b()
            .iter()
            .position(|l| l == y)
            .ok_or_else(|| Error::invalid(format!("unknown bob label {y}")))?;
        Ok((xi, yi))
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&u).expect("weights are finite"))
        {
            Ok(i) | Err(i) => i.min(self.cumulative.len() - 1),
        }
    }

    fn outputs(&self, lambda: usize, xi: usize, yi: usize) -> (OutcomeIndex, OutcomeIndex) {
        let pair = &self.model.strategies[lambda].1;
        (pair.f[xi], pair.g[yi])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AliceToBob,
    BobToAlice,
}

/// The ordered bits exchanged during one protocol run.
#[derive(Debug, Clone, Default)]
pub struct Transcript {
    pub bits: Vec<(Direction, bool)>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

fn rejection_rounds(
    model: &SampledLvModel,
    xi: usize,
    yi: usize,
    rng: &mut ChaCha8Rng,
    cap: u64,
    mut transcript: Option<&mut Transcript>,
) -> Result<(OutcomeIndex, OutcomeIndex, u64)> {
    for k in 1..=cap {
        let lambda = model.draw(rng);
        let (a, b) = model.outputs(lambda, xi, yi);
        if let Some(t) = transcript.as_deref_mut() {
            t.bits.push((Direction::AliceToBob, a.is_click()));
            t.bits.push((Direction::BobToAlice, b.is_click()));
        }
        if a.is_click() && b.is_click() {
            return Ok((a, b, k));
        }
    }
    Err(Error::IterationCapExceeded { cap })
}

/// One run of the rejection protocol for a fixed label pair. Outputs are
/// always clicks, and the transcript holds two bits per round.
pub fn simulate_rejection_protocol(
    model: &SampledLvModel,
    x: &BitString,
    y: &BitString,
    seed: u64,
    cap: u64,
) -> Result<(OutcomeIndex, OutcomeIndex, Transcript)> {
    let (xi, yi) = model.label_index(x, y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transcript = Transcript::default();
    let (a, b, _) = rejection_rounds(model, xi, yi, &mut rng, cap, Some(&mut transcript))?;
    Ok((a, b, transcript))
}

/// Double-click outcome counts per label pair.
#[derive(Debug, Clone)]
pub struct OutcomeHistogram {
    pub d: usize,
    pub n_pairs: usize,
    counts: Vec<u64>,
}

impl OutcomeHistogram {
    fn new(d: usize, n_pairs: usize) -> Self {
        OutcomeHistogram {
            d,
            n_pairs,
            counts: vec![0; n_pairs * (d + 1) * (d + 1)],
        }
    }

    fn record(&mut self, pair: usize, a: OutcomeIndex, b: OutcomeIndex) {
        let side = self.d + 1;
        self.counts[pair * side * side + a.value() as usize * side + b.value() as usize] += 1;
    }

    pub fn count(&self, pair: usize, a: usize, b: usize) -> u64 {
        let side = self.d + 1;
        self.counts[pair * side * side + a * side + b]
    }

    pub fn pair_total(&self, pair: usize) -> u64 {
        let side = (self.d + 1) * (self.d + 1);
        self.counts[pair * side..(pair + 1) * side].iter().sum()
    }

    fn merge(&mut self, other: &OutcomeHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone)]
pub struct TranscriptStats {
    pub eta: f64,
    pub trials: u64,
    pub mean_bits: f64,
    pub mean_iterations: f64,
    pub histogram: OutcomeHistogram,
}

/// Runs the rejection protocol `trials` times, cycling through the given
/// label pairs, and aggregates communication cost and outcome counts.
/// Trials are split into fixed logical shards with derived seeds, so the
/// result depends only on (seed, trials), not on the worker count.
pub fn average_communication_stats(
    model: &SampledLvModel,
    pairs: &[(BitString, BitString)],
    trials: u64,
    seed: u64,
    cap: u64,
) -> Result<TranscriptStats> {
    if trials == 0 {
        return Err(Error::invalid("trial count must be positive"));
    }
    if pairs.is_empty() {
        return Err(Error::invalid("need at least one label pair"));
    }
    let indexed: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(x, y)| model.label_index(x, y))
        .collect::<Result<_>>()?;
    let d = model.model().labels_a()[0].len();
    let shards = DEFAULT_STAT_SHARDS.min(trials.max(1) as u32);

    let shard_results: Vec<Result<(OutcomeHistogram, u64)>> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let base = trials / shards as u64;
            let rem = trials % shards as u64;
            let start = shard as u64 * base + (shard as u64).min(rem);
            let count = base + u64::from((shard as u64) < rem);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, shard as u64));
            let mut hist = OutcomeHistogram::new(d, indexed.len());
            let mut iterations = 0u64;
            for t in start..start + count {
                let pair = (t % indexed.len() as u64) as usize;
                let (xi, yi) = indexed[pair];
                let (a, b, k) = rejection_rounds(model, xi, yi, &mut rng, cap, None)?;
                hist.record(pair, a, b);
                iterations += k;
            }
            Ok((hist, iterations))
        })
        .collect();

    let mut histogram = OutcomeHistogram::new(d, indexed.len());
    let mut total_iterations = 0u64;
    for r in shard_results {
        let (hist, iters) = r?;
        histogram.merge(&hist);
        total_iterations += iters;
    }
    let mean_iterations = total_iterations as f64 / trials as f64;
    Ok(TranscriptStats {
        eta: model.eta(),
        trials,
        mean_bits: 2.0 * mean_iterations,
        mean_iterations,
        histogram,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ChiSquare {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Chi-square test of the double-click outcome histogram against the
/// detector model's conditional distribution (the eta = 1 table), per label
/// pair. Observed counts on zero-probability cells give p = 0 outright.
pub fn chi_square_conditional(
    stats: &TranscriptStats,
    s: &Scenario,
    pairs: &[(BitString, BitString)],
) -> Result<ChiSquare> {
    if pairs.len() != stats.histogram.n_pairs {
        return Err(Error::invalid("histogram and pair list disagree"));
    }
    let d = s.d();
    let perfect = EfficiencyModel::new(1.0)?;
    let mut statistic = 0.0;
    let mut df = 0usize;
    for (pi, (x, y)) in pairs.iter().enumerate() {
        let table = s.outcome_table(x, y, perfect)?;
        let n = stats.histogram.pair_total(pi) as f64;
        let mut support = 0usize;
        for a in 1..=d {
            for b in 1..=d {
                let p = table.get(a, b);
                let observed = stats.histogram.count(pi, a, b) as f64;
                if p == 0.0 {
                    if observed > 0.0 {
                        return Ok(ChiSquare {
                            statistic: f64::INFINITY,
                            degrees_of_freedom: df.max(1),
                            p_value: 0.0,
                        });
                    }
                    continue;
                }
                support += 1;
                let expected = n * p;
                statistic += (observed - expected) * (observed - expected) / expected;
            }
        }
        df += support.saturating_sub(1);
    }
    let df = df.max(1);
    let dist = ChiSquared::new(df as f64)
        .map_err(|e| Error::invalid(format!("chi-square setup: {e}")))?;
    Ok(ChiSquare {
        statistic,
        degrees_of_freedom: df,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bct_labels(m: u64, d: usize) -> Vec<BitString> {
        (0..m).map(|v| BitString::from_index(v, d)).collect()
    }

    fn all_pairs(labels: &[BitString]) -> Vec<(BitString, BitString)> {
        let mut pairs = Vec::new();
        for x in labels {
            for y in labels {
                pairs.push((x.clone(), y.clone()));
            }
        }
        pairs
    }

    #[test]
    fn perfect_detectors_take_one_round() {
        let s = Scenario::bct(2).unwrap();
        let labels = bct_labels(1, 4);
        let model = SampledLvModel::from_popescu(&s, &labels, &labels).unwrap();
        assert_eq!(model.eta(), 1.0);
        let (a, b, transcript) =
            simulate_rejection_protocol(&model, &labels[0], &labels[0], 3, 100).unwrap();
        assert_eq!(transcript.len(), 2);
        assert!(a.is_click() && b.is_click());
        assert_eq!(a, b); // equal labels force equal outcomes
    }

    #[test]
    fn outputs_are_never_silent() {
        let s = Scenario::bct(2).unwrap();
        let labels = bct_labels(2, 4);
        let model = SampledLvModel::from_popescu(&s, &labels, &labels).unwrap();
        for seed in 0..50 {
            let (a, b, t) =
                simulate_rejection_protocol(&model, &labels[0], &labels[1], seed, 10_000).unwrap();
            assert!(a.is_click() && b.is_click());
            assert_eq!(t.len() % 2, 0);
        }
    }

    #[test]
    fn iteration_cap_is_reported() {
        let s = Scenario::bct(2).unwrap();
        let labels = bct_labels(4, 4);
        let model = SampledLvModel::from_popescu(&s, &labels, &labels).unwrap();
        // eta = 1/4, so 2 rounds fail often; find a seed that exceeds it.
        let mut saw_cap = false;
        for seed in 0..50 {
            match simulate_rejection_protocol(&model, &labels[0], &labels[1], seed, 1) {
                Err(Error::IterationCapExceeded { cap: 1 }) => {
                    saw_cap = true;
                    break;
                }
                Ok(_) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        assert!(saw_cap);
    }

    #[test]
    fn mean_bits_tracks_two_over_eta_squared() {
        let s = Scenario::bct(2).unwrap();
        let labels = bct_labels(2, 4);
        let model = SampledLvModel::from_popescu(&s, &labels, &labels).unwrap();
        assert_eq!(model.eta(), 0.5);
        let pairs = all_pairs(&labels);
        let stats =
            average_communication_stats(&model, &pairs, 200_000, 11, DEFAULT_ITERATION_CAP)
                .unwrap();
        assert_eq!(stats.mean_bits, 2.0 * stats.mean_iterations);
        assert!(
            (stats.mean_bits - 8.0).abs() < 0.08,
            "mean bits {}",
            stats.mean_bits
        );
    }

    /// Exact geometric moments computed by direct series summation; the
    /// empirical mean and variance must match within three standard errors.
    #[test]
    fn iteration_count_is_geometric() {
        let s = Scenario::bct(2).unwrap();
        let labels = bct_labels(2, 4);
        let model = SampledLvModel::from_popescu(&s, &labels, &labels).unwrap();
        let p = model.eta() * model.eta();

        let mut mean = 0.0;
        let mut m2 = 0.0;
        let mut m4 = 0.0;
        let mut k = 1.0f64;
        let mut weight = p;
        while weight > 1e-18 {
            mean += k * weight;
            m2 += k * k * weight;
            m4 += k * k * k * k * weight;
            weight *= 1.0 - p;
            k += 1.0;
        }
        let variance = m2 - mean * mean;
        // Central fourth moment from raw moments is messy; bound the
        // variance estimator instead with mu4 of the shifted variable.
        let mut mu4 = 0.0;
        let mut k = 1.0f64;
        let mut weight = p;
        while weight > 1e-18 {
            mu4 += (k - mean).powi(4) * weight;
            weight *= 1.0 - p;
            k += 1.0;
        }
        let _ = m4;

        let trials: u64 = 300_000;
        let pairs = all_pairs(&labels);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let model_ref = &model;
        let indexed: Vec<(usize, usize)> = pairs
            .iter()
            .map(|(x, y)| model_ref.label_index(x, y).unwrap())
            .collect();
        for t in 0..trials {
            let (xi, yi) = indexed[(t % indexed.len() as u64) as usize];
            let (_, _, k) =
                rejection_rounds(model_ref, xi, yi, &mut rng, DEFAULT_ITERATION_CAP, None)
                    .unwrap();
            sum += k as f64;
            sumsq += (k as f64) * (k as f64);
        }
        let n = trials as f64;
        let sample_mean = sum / n;
        let sample_var = (sumsq - n * sample_mean * sample_mean) / (n - 1.0);
        let se_mean = (variance / n).sqrt();
        assert!(
            (sample_mean - mean).abs() <= 3.0 * se_mean,
            "mean {sample_mean} vs {mean}"
        );
        let se_var = ((mu4 - variance * variance) / n).sqrt();
        assert!(
            (sample_var - variance).abs() <= 3.0 * se_var,
            "variance {sample_var} vs {variance}"
        );
    }

    #[test]
    fn conditional_histogram_passes_chi_square() {
        let s = Scenario::bct(2).unwrap();
        let labels = bct_labels(2, 4);
        let model = SampledLvModel::from_popescu(&s, &labels, &labels).unwrap();
        let pairs = all_pairs(&labels);
        let stats =
            average_communication_stats(&model, &pairs, 100_000, 5, DEFAULT_ITERATION_CAP)
                .unwrap();
        let chi = chi_square_conditional(&stats, &s, &pairs).unwrap();
        assert!(chi.p_value > 0.001, "p = {}", chi.p_value);
        assert!(chi.statistic.is_finite());
    }

    /// The model's click indicators run at the nominal rate on each side and
    /// factorize, for every label pair.
    #[test]
    fn click_rates_match_eta_and_are_independent() {
        let s = Scenario::bct(2).unwrap();
        let labels = bct_labels(2, 4);
        let model = SampledLvModel::from_popescu(&s, &labels, &labels).unwrap();
        let eta = model.eta();
        let trials = 100_000u64;
        for (xi, yi) in [(0usize, 0usize), (0, 1), (1, 0)] {
            let mut rng = ChaCha8Rng::seed_from_u64(31 + xi as u64 * 7 + yi as u64);
            let (mut n_a, mut n_b, mut n_ab) = (0u64, 0u64, 0u64);
            for _ in 0..trials {
                let lambda = model.draw(&mut rng);
                let (a, b) = model.outputs(lambda, xi, yi);
                n_a += u64::from(a.is_click());
                n_b += u64::from(b.is_click());
                n_ab += u64::from(a.is_click() && b.is_click());
            }
            let n = trials as f64;
            let (pa, pb, pab) = (n_a as f64 / n, n_b as f64 / n, n_ab as f64 / n);
            let se = (eta * (1.0 - eta) / n).sqrt();
            assert!((pa - eta).abs() <= 4.0 * se, "alice rate {pa}");
            assert!((pb - eta).abs() <= 4.0 * se, "bob rate {pb}");
            let se_joint = (eta * eta * (1.0 - eta * eta) / n).sqrt();
            assert!(
                (pab - eta * eta).abs() <= 4.0 * se_joint,
                "joint rate {pab} vs {}",
                eta * eta
            );
        }
    }

    #[test]
    fn stats_are_worker_independent() {
        let s = Scenario::bct(2).unwrap();
        let labels = bct_labels(2, 4);
        let model = SampledLvModel::from_popescu(&s, &labels, &labels).unwrap();
        let pairs = all_pairs(&labels);
        let run = || {
            average_communication_stats(&model, &pairs, 10_000, 9, DEFAULT_ITERATION_CAP).unwrap()
        };
        let a = run();
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool1.install(run);
        let pool3 = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool3.install(run);
        assert_eq!(a.mean_bits, b.mean_bits);
        assert_eq!(a.mean_bits, c.mean_bits);
        assert_eq!(a.histogram.counts, b.histogram.counts);
        assert_eq!(a.histogram.counts, c.histogram.counts);
    }
}
