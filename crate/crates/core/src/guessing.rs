//! The conversation-guessing bridge: a fixed-length communication protocol
//! with perfect detectors replayed as a local model with inefficient
//! detectors.
//!
//! Alongside the shared variable of the protocol, both parties share a tape
//! of i.i.d. random bits. Each party checks that the tape's slice for its own
//! messages matches what it would actually send, assuming the other side's
//! messages are the ones written on the tape; a mismatch becomes a
//! non-detection. The tape equals the true conversation with probability
//! 2^-C, so joint clicks are exact replays of the protocol. The single-click
//! marginals carry no such guarantee; this module measures their deviation
//! and reports it as data. Every output of this construction is labeled a
//! heuristic bridge.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::scenario::{EfficiencyModel, OutcomeIndex, Scenario};

/// Output label attached to every record this construction produces, echoing
/// that the single-click marginals are not certified.
pub const BRIDGE_LABEL: &str = "heuristic bridge";

/// Maximum total conversation length for the exact tape enumeration.
pub const MAX_ENUMERATION_BITS: usize = 20;

/// A seeded stream of i.i.d. uniform bits.
pub struct GuessTape {
    rng: ChaCha8Rng,
}

impl GuessTape {
    pub fn new(seed: u64) -> Self {
        GuessTape {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_bit(&mut self) -> bool {
        self.rng.gen::<bool>()
    }

    pub fn take(&mut self, count: usize) -> Vec<bool> {
        (0..count).map(|_| self.next_bit()).collect()
    }
}

/// One weighted joint behavior of the two parties for fixed inputs and a
/// fixed tape: the bits each side would send (reading the other side's bits
/// from the tape) and the outputs each side would give if the tape were the
/// real conversation.
#[derive(Debug, Clone)]
pub struct Behavior {
    pub alice_bits: Vec<bool>,
    pub alice_output: OutcomeIndex,
    pub bob_bits: Vec<bool>,
    pub bob_output: OutcomeIndex,
}

/// A deterministic-per-hidden-variable protocol with fixed per-side bit
/// counts. Implementations expose the weighted behaviors for exact
/// enumeration rather than a single sampled run.
pub trait FixedLengthProtocol: Sync {
    fn d(&self) -> usize;
    fn c_alice(&self) -> usize;
    fn c_bob(&self) -> usize;
    fn label_counts(&self) -> (usize, usize);
    /// Weighted behaviors for inputs (xi, yi) given the tape content.
    fn behaviors(&self, xi: usize, yi: usize, mu_alice: &[bool], mu_bob: &[bool])
        -> Vec<(f64, Behavior)>;
    /// The protocol's own output distribution when run honestly.
    fn honest_outputs(&self, xi: usize, yi: usize) -> Vec<(f64, (OutcomeIndex, OutcomeIndex))>;
}

fn index_bits(value: usize, count: usize) -> Vec<bool> {
    (0..count).map(|t| value >> t & 1 == 1).collect()
}

fn bits_index(bits: &[bool]) -> usize {
    bits.iter()
        .enumerate()
        .map(|(t, &b)| usize::from(b) << t)
        .sum()
}

// ---------------------------------------------------------------------------
// Fixture protocol
// ---------------------------------------------------------------------------

/// The index-exchange protocol: the shared variable pre-samples an outcome
/// pair for every label pair from the perfect-detector distribution; Alice
/// sends her label index, Bob replies with Alice's outcome index and outputs
/// his own recorded outcome. Fixed length ceil(log2 M) + ceil(log2 d), and
/// the honest run reproduces the perfect-detector statistics exactly.
pub struct FixtureProtocol {
    d: usize,
    n_labels_a: usize,
    n_labels_b: usize,
    c_alice: usize,
    c_bob: usize,
    /// Double-click distribution per (alice label, bob label), d*d cells.
    tables: Vec<Vec<f64>>,
}

pub fn fixture_protocol(
    s: &Scenario,
    labels_a: &[BitString],
    labels_b: &[BitString],
) -> Result<FixtureProtocol> {
    if labels_a.is_empty() || labels_b.is_empty() {
        return Err(Error::invalid("need at least one label per party"));
    }
    let d = s.d();
    let perfect = EfficiencyModel::new(1.0)?;
    let mut tables = Vec::with_capacity(labels_a.len() * labels_b.len());
    for x in labels_a {
        for y in labels_b {
            let t = s.outcome_table(x, y, perfect)?;
            let mut cells = vec![0.0; d * d];
            for a in 1..=d {
                for b in 1..=d {
                    cells[(a - 1) * d + (b - 1)] = t.get(a, b);
                }
            }
            tables.push(cells);
        }
    }
    Ok(FixtureProtocol {
        d,
        n_labels_a: labels_a.len(),
        n_labels_b: labels_b.len(),
        c_alice: labels_a.len().next_power_of_two().trailing_zeros() as usize,
        c_bob: d.next_power_of_two().trailing_zeros() as usize,
        tables,
    })
}

impl FixedLengthProtocol for FixtureProtocol {
    fn d(&self) -> usize {
        self.d
    }

    fn c_alice(&self) -> usize {
        self.c_alice
    }

    fn c_bob(&self) -> usize {
        self.c_bob
    }

    fn label_counts(&self) -> (usize, usize) {
        (self.n_labels_a, self.n_labels_b)
    }

    fn behaviors(
        &self,
        xi: usize,
        yi: usize,
        mu_alice: &[bool],
        mu_bob: &[bool],
    ) -> Vec<(f64, Behavior)> {
        let alice_bits = index_bits(xi, self.c_alice);
        // Alice trusts the tape for Bob's reply; out-of-range decodes wrap,
        // keeping the protocol total.
        let alice_output = OutcomeIndex((bits_index(mu_bob) % self.d) as u16 + 1);
        // Bob reads Alice's label off the tape; only that column of the
        // shared table matters for his behavior.
        let x_hat = bits_index(mu_alice) % self.n_labels_a;
        let table = &self.tables[x_hat * self.n_labels_b + yi];
        let mut result = Vec::new();
        for a in 1..=self.d {
            for b in 1..=self.d {
                let p = table[(a - 1) * self.d + (b - 1)];
                if p == 0.0 {
                    continue;
                }
                result.push((
                    p,
                    Behavior {
                        alice_bits: alice_bits.clone(),
                        alice_output,
                        bob_bits: index_bits(a - 1, self.c_bob),
                        bob_output: OutcomeIndex(b as u16),
                    },
                ));
            }
        }
        result
    }

    fn honest_outputs(&self, xi: usize, yi: usize) -> Vec<(f64, (OutcomeIndex, OutcomeIndex))> {
        let table = &self.tables[xi * self.n_labels_b + yi];
        let mut result = Vec::new();
        for a in 1..=self.d {
            for b in 1..=self.d {
                let p = table[(a - 1) * self.d + (b - 1)];
                if p > 0.0 {
                    result.push((p, (OutcomeIndex(a as u16), OutcomeIndex(b as u16))));
                }
            }
        }
        result
    }
}

/// Pads the shorter side's messages with constant zero bits so both sides
/// send max(C_A, C_B). The padding is deterministic, so exactly one padded
/// tape slice still matches per original match: conditional outputs are
/// untouched while both click rates drop to 2^-max(C_A, C_B), giving the
/// constructed model a single efficiency.
pub struct EqualizedProtocol<P> {
    inner: P,
    width: usize,
}

impl<P: FixedLengthProtocol> EqualizedProtocol<P> {
    pub fn new(inner: P) -> Self {
        let width = inner.c_alice().max(inner.c_bob());
        EqualizedProtocol { inner, width }
    }
}

fn pad_bits(mut bits: Vec<bool>, width: usize) -> Vec<bool> {
    bits.resize(width, false);
    bits
}

impl<P: FixedLengthProtocol> FixedLengthProtocol for EqualizedProtocol<P> {
    fn d(&self) -> usize {
        self.inner.d()
    }

    fn c_alice(&self) -> usize {
        self.width
    }

    fn c_bob(&self) -> usize {
        self.width
    }

    fn label_counts(&self) -> (usize, usize) {
        self.inner.label_counts()
    }

    fn behaviors(
        &self,
        xi: usize,
        yi: usize,
        mu_alice: &[bool],
        mu_bob: &[bool],
    ) -> Vec<(f64, Behavior)> {
        // The inner protocol only reads its own message widths off the tape.
        let inner_alice = &mu_alice[..self.inner.c_alice()];
        let inner_bob = &mu_bob[..self.inner.c_bob()];
        self.inner
            .behaviors(xi, yi, inner_alice, inner_bob)
            .into_iter()
            .map(|(w, b)| {
                (
                    w,
                    Behavior {
                        alice_bits: pad_bits(b.alice_bits, self.width),
                        bob_bits: pad_bits(b.bob_bits, self.width),
                        ..b
                    },
                )
            })
            .collect()
    }

    fn honest_outputs(&self, xi: usize, yi: usize) -> Vec<(f64, (OutcomeIndex, OutcomeIndex))> {
        self.inner.honest_outputs(xi, yi)
    }
}

// ---------------------------------------------------------------------------
// Exact analysis
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MuAnalysis {
    pub c_alice: usize,
    pub c_bob: usize,
    /// Nominal click rates of the constructed model: 2^-C per side.
    pub eta_alice: f64,
    pub eta_bob: f64,
    /// Per-side click rates from the enumeration. Exactly 2^-C_A and
    /// 2^-C_B: for any fixed hidden state and fixed other-side tape slice,
    /// exactly one own-side slice matches.
    pub alice_click_rate: f64,
    pub bob_click_rate: f64,
    /// Joint click rate from enumeration (equals 2^-(C_A+C_B), the product
    /// of the sides: the click events are uncorrelated).
    pub joint_click_rate: f64,
    /// Max deviation of the per-pair joint click rate from 2^-C.
    pub joint_rate_deviation: f64,
    /// Max cell deviation of the conditioned-on-both-clicks distribution
    /// from the honest protocol output distribution. Exactly zero by
    /// construction; certified here by enumeration.
    pub conditional_deviation: f64,
    /// Max cell deviation of the non-double-click cells from the
    /// independent-detector reference built on the honest marginals.
    /// Reported as data, never certified.
    pub marginal_deviation: f64,
    pub bridge_label: &'static str,
}

/// Enumerates every tape prefix and hidden-variable behavior to compute the
/// constructed model's joint distribution exactly, per label pair.
pub fn analyze_mu_construction(protocol: &dyn FixedLengthProtocol) -> Result<MuAnalysis> {
    let ca = protocol.c_alice();
    let cb = protocol.c_bob();
    let c = ca + cb;
    if c > MAX_ENUMERATION_BITS {
        return Err(Error::CapExceeded {
            actual: c as u128,
            cap: MAX_ENUMERATION_BITS as u128,
        });
    }
    let d = protocol.d();
    let (na, nb) = protocol.label_counts();
    let tape_weight = (-(c as f64)).exp2();
    let eta_alice = (-(ca as f64)).exp2();
    let eta_bob = (-(cb as f64)).exp2();

    let mut joint_rate_deviation = 0.0f64;
    let mut conditional_deviation = 0.0f64;
    let mut marginal_deviation = 0.0f64;
    let mut joint_click_rate = 0.0f64;
    let mut alice_click_rate = 0.0f64;
    let mut bob_click_rate = 0.0f64;

    for xi in 0..na {
        for yi in 0..nb {
            let mut dist = vec![0.0f64; (d + 1) * (d + 1)];
            for mu in 0..1usize << c {
                let mu_alice = index_bits(mu & ((1 << ca) - 1), ca);
                let mu_bob = index_bits(mu >> ca, cb);
                for (w, behavior) in protocol.behaviors(xi, yi, &mu_alice, &mu_bob) {
                    if behavior.alice_bits.len() != ca || behavior.bob_bits.len() != cb {
                        return Err(Error::invalid(
                            "variable-length protocol: pad every side to its fixed bit count first",
                        ));
                    }
                    let a_click = behavior.alice_bits == mu_alice;
                    let b_click = behavior.bob_bits == mu_bob;
                    let a = if a_click {
                        behavior.alice_output.value() as usize
                    } else {
                        0
                    };
                    let b = if b_click {
                        behavior.bob_output.value() as usize
                    } else {
                        0
                    };
                    dist[a * (d + 1) + b] += w * tape_weight;
                }
            }

            let joint: f64 = (1..=d)
                .flat_map(|a| (1..=d).map(move |b| (a, b)))
                .map(|(a, b)| dist[a * (d + 1) + b])
                .sum();
            joint_rate_deviation = joint_rate_deviation.max((joint - tape_weight).abs());
            joint_click_rate = joint; // equal across pairs up to the deviation
            alice_click_rate = (1..=d)
                .map(|a| (0..=d).map(|b| dist[a * (d + 1) + b]).sum::<f64>())
                .sum();
            bob_click_rate = (1..=d)
                .map(|b| (0..=d).map(|a| dist[a * (d + 1) + b]).sum::<f64>())
                .sum();

            // Conditioned on both clicks, the tape was the true
            // conversation, so the outputs must follow the honest run.
            let honest = protocol.honest_outputs(xi, yi);
            let mut honest_cells = vec![0.0f64; (d + 1) * (d + 1)];
            for (w, (a, b)) in &honest {
                honest_cells[a.value() as usize * (d + 1) + b.value() as usize] += w;
            }
            for a in 1..=d {
                for b in 1..=d {
                    let conditional = dist[a * (d + 1) + b] / joint;
                    let expect = honest_cells[a * (d + 1) + b];
                    conditional_deviation =
                        conditional_deviation.max((conditional - expect).abs());
                }
            }

            // Reference for the unconditioned cells: independent detectors at
            // (eta_alice, eta_bob) over the honest marginals.
            let q_a: Vec<f64> = (1..=d)
                .map(|a| (1..=d).map(|b| honest_cells[a * (d + 1) + b]).sum())
                .collect();
            let q_b: Vec<f64> = (1..=d)
                .map(|b| (1..=d).map(|a| honest_cells[a * (d + 1) + b]).sum())
                .collect();
            let ref_cell = |a: usize, b: usize| -> f64 {
                match (a, b) {
                    (0, 0) => (1.0 - eta_alice) * (1.0 - eta_bob),
                    (a, 0) => eta_alice * (1.0 - eta_bob) * q_a[a - 1],
                    (0, b) => (1.0 - eta_alice) * eta_bob * q_b[b - 1],
                    _ => unreachable!(),
                }
            };
            for a in 0..=d {
                marginal_deviation =
                    marginal_deviation.max((dist[a * (d + 1)] - ref_cell(a, 0)).abs());
            }
            for b in 1..=d {
                marginal_deviation = marginal_deviation.max((dist[b] - ref_cell(0, b)).abs());
            }
        }
    }

    Ok(MuAnalysis {
        c_alice: ca,
        c_bob: cb,
        eta_alice,
        eta_bob,
        alice_click_rate,
        bob_click_rate,
        joint_click_rate,
        joint_rate_deviation,
        conditional_deviation,
        marginal_deviation,
        bridge_label: BRIDGE_LABEL,
    })
}

// ---------------------------------------------------------------------------
// Sampled model
// ---------------------------------------------------------------------------

/// The constructed local model, samplable one trial at a time with a seeded
/// guess tape.
pub struct GuessedLvModel<'a> {
    protocol: &'a dyn FixedLengthProtocol,
}

#[derive(Debug, Clone, Copy)]
pub struct GuessedTrial {
    pub alice: OutcomeIndex,
    pub bob: OutcomeIndex,
}

impl<'a> GuessedLvModel<'a> {
    pub fn new(protocol: &'a dyn FixedLengthProtocol) -> Self {
        GuessedLvModel { protocol }
    }

    /// One trial: draw the tape, draw the shared behavior, convert message
    /// mismatches into non-detections.
    pub fn trial(&self, xi: usize, yi: usize, tape: &mut GuessTape, rng: &mut ChaCha8Rng) -> GuessedTrial {
        let mu_alice = tape.take(self.protocol.c_alice());
        let mu_bob = tape.take(self.protocol.c_bob());
        let behaviors = self.protocol.behaviors(xi, yi, &mu_alice, &mu_bob);
        if behaviors.is_empty() {
            return GuessedTrial {
                alice: OutcomeIndex::NO_CLICK,
                bob: OutcomeIndex::NO_CLICK,
            };
        }
        let total: f64 = behaviors.iter().map(|(w, _)| w).sum();
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = &behaviors[behaviors.len() - 1].1;
        for (w, b) in &behaviors {
            pick -= w;
            if pick <= 0.0 {
                chosen = b;
                break;
            }
        }
        let alice = if chosen.alice_bits == mu_alice {
            chosen.alice_output
        } else {
            OutcomeIndex::NO_CLICK
        };
        let bob = if chosen.bob_bits == mu_bob {
            chosen.bob_output
        } else {
            OutcomeIndex::NO_CLICK
        };
        GuessedTrial { alice, bob }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MuSample {
    pub trials: u64,
    pub click_a_rate: f64,
    pub click_b_rate: f64,
    pub joint_rate: f64,
    /// Pearson correlation of the two click indicators.
    pub correlation: f64,
}

/// Samples the constructed model and summarizes the click statistics.
pub fn sample_mu_construction(
    protocol: &dyn FixedLengthProtocol,
    xi: usize,
    yi: usize,
    trials: u64,
    seed: u64,
) -> Result<MuSample> {
    if trials == 0 {
        return Err(Error::invalid("trial count must be positive"));
    }
    let model = GuessedLvModel::new(protocol);
    let mut tape = GuessTape::new(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5eed));
    let mut n_a = 0u64;
    let mut n_b = 0u64;
    let mut n_ab = 0u64;
    for _ in 0..trials {
        let t = model.trial(xi, yi, &mut tape, &mut rng);
        n_a += u64::from(t.alice.is_click());
        n_b += u64::from(t.bob.is_click());
        n_ab += u64::from(t.alice.is_click() && t.bob.is_click());
    }
    let n = trials as f64;
    let pa = n_a as f64 / n;
    let pb = n_b as f64 / n;
    let pab = n_ab as f64 / n;
    let denom = (pa * (1.0 - pa) * pb * (1.0 - pb)).sqrt();
    let correlation = if denom == 0.0 {
        0.0
    } else {
        (pab - pa * pb) / denom
    };
    Ok(MuSample {
        trials,
        click_a_rate: pa,
        click_b_rate: pb,
        joint_rate: pab,
        correlation,
    })
}
