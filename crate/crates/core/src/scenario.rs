//! Measurement scenarios and joint-outcome probabilities with inefficient
//! detectors.
//!
//! A scenario couples the maximally entangled state of dimension `d` with a
//! measurement family per party. The families are either the implicit
//! Deutsch-Jozsa-style family (measurements labeled by d-bit strings, never
//! materialized) or explicit orthonormal bases loaded from a file.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Detector efficiency: the probability that a party's detector clicks,
/// independent across parties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyModel {
    eta: f64,
}

impl EfficiencyModel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid(format!(
                "efficiency must lie in [0, 1], got {eta}"
            )));
        }
        Ok(EfficiencyModel { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// A measurement outcome: `0` means the detector did not click, `1..=d` is a
/// basis-vector index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OutcomeIndex(pub u16);

impl OutcomeIndex {
    pub const NO_CLICK: OutcomeIndex = OutcomeIndex(0);

    pub fn value(self) -> u16 {
        self.0
    }

    pub fn is_click(self) -> bool {
        self.0 != 0
    }
}

/// One orthonormal basis of C^d, stored as `d` vectors of `d` components.
#[derive(Debug, Clone)]
pub struct Basis {
    pub vectors: Vec<Vec<Complex64>>,
}

pub const ORTHONORMALITY_TOL: f64 = 1e-9;

impl Basis {
    /// Checks |<v_i|v_j> - delta_ij| <= tol for all i, j.
    pub fn check_orthonormal(&self, d: usize, tol: f64) -> Result<()> {
        if self.vectors.len() != d {
            return Err(Error::validation(format!(
                "basis has {} vectors, expected {d}",
                self.vectors.len()
            )));
        }
        for v in &self.vectors {
            if v.len() != d {
                return Err(Error::validation(format!(
                    "basis vector has {} components, expected {d}",
                    v.len()
                )));
            }
        }
        for i in 0..d {
            for j in i..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += self.vectors[i][k].conj() * self.vectors[j][k];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                if (acc - target).norm() > tol {
                    return Err(Error::validation(format!(
                        "vectors {i} and {j} violate orthonormality: <v{i}|v{j}> = {acc}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum MeasurementFamily {
    /// Measurements labeled by all of {0,1}^d; the basis for label x is
    /// |x_a> = d^{-1/2} sum_k (-1)^{x_k} (-1)^{parity((a-1) & k)} |k>.
    ImplicitBct { n: u32 },
    /// Explicit orthonormal bases per party; a label of length d selects a
    /// basis by its numeric value.
    Explicit {
        alice_bases: Vec<Basis>,
        bob_bases: Vec<Basis>,
    },
}

/// A bipartite measurement scenario on the maximally entangled state
/// psi = sum_k |k>|k> / sqrt(d).
#[derive(Debug, Clone)]
pub struct Scenario {
    d: usize,
    family: MeasurementFamily,
}

impl Scenario {
    /// The implicit scenario of dimension d = 2^n, n >= 2.
    pub fn bct(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!(
                "the bit-string family needs n >= 2, got n = {n}"
            )));
        }
        if n > 16 {
            return Err(Error::invalid(format!(
                "dimension 2^{n} is beyond any supported analysis"
            )));
        }
        Ok(Scenario {
            d: 1usize << n,
            family: MeasurementFamily::ImplicitBct { n },
        })
    }

    /// An explicit scenario from validated bases.
    pub fn explicit(d: usize, alice_bases: Vec<Basis>, bob_bases: Vec<Basis>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if alice_bases.is_empty() || bob_bases.is_empty() {
            return Err(Error::validation("each party needs at least one basis"));
        }
        for (party, bases) in [("alice", &alice_bases), ("bob", &bob_bases)] {
            for (idx, basis) in bases.iter().enumerate() {
                basis.check_orthonormal(d, ORTHONORMALITY_TOL).map_err(|e| {
                    Error::validation(format!("{party} basis {idx}: {e}"))
                })?;
            }
        }
        Ok(Scenario {
            d,
            family: MeasurementFamily::Explicit {
                alice_bases,
                bob_bases,
            },
        })
    }

    /// The implicit family materialized as explicit bases for the given
    /// labels. Useful for cross-checking the popcount evaluation path.
    pub fn explicit_bct(n: u32, labels: &[BitString]) -> Result<Self> {
        let d = 1usize << n;
        let bases: Vec<Basis> = labels
            .iter()
            .map(|x| {
                if x.len() != d {
                    return Err(Error::invalid(format!(
                        "label length {} does not match d = {d}",
                        x.len()
                    )));
                }
                Ok(Basis {
                    vectors: (0..d).map(|a| bct_vector(x, a)).collect(),
                })
            })
            .collect::<Result<_>>()?;
        Scenario::explicit(d, bases.clone(), bases)
    }

    /// The d = 2 scenario at the measurement angles that maximize the CHSH
    /// combination on the maximally entangled state: Alice {0, pi/4},
    /// Bob {pi/8, -pi/8}.
    pub fn chsh() -> Self {
        let basis_at = |theta: f64| {
            let (s, c) = theta.sin_cos();
            Basis {
                vectors: vec![
                    vec![Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
                    vec![Complex64::new(-s, 0.0), Complex64::new(c, 0.0)],
                ],
            }
        };
        let alice = vec![basis_at(0.0), basis_at(std::f64::consts::FRAC_PI_4)];
        let bob = vec![
            basis_at(std::f64::consts::FRAC_PI_8),
            basis_at(-std::f64::consts::FRAC_PI_8),
        ];
        Scenario::explicit(2, alice, bob).expect("CHSH bases are orthonormal")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn family(&self) -> &MeasurementFamily {
        &self.family
    }

    pub fn is_implicit(&self) -> bool {
        matches!(self.family, MeasurementFamily::ImplicitBct { .. })
    }

    /// Number of measurement labels per party. Implicit families have 2^d
    /// labels, which overflows for d >= 64; `log2_num_measurements` is always
    /// exact.
    pub fn num_measurements(&self) -> (Option<u64>, Option<u64>) {
        match &self.family {
            MeasurementFamily::ImplicitBct { .. } => {
                let count = if self.d < 64 {
                    Some(1u64 << self.d)
                } else {
                    None
                };
                (count, count)
            }
            MeasurementFamily::Explicit {
                alice_bases,
                bob_bases,
            } => (
                Some(alice_bases.len() as u64),
                Some(bob_bases.len() as u64),
            ),
        }
    }

    pub fn log2_num_measurements(&self) -> f64 {
        match &self.family {
            MeasurementFamily::ImplicitBct { .. } => self.d as f64,
            MeasurementFamily::Explicit { alice_bases, .. } => (alice_bases.len() as f64).log2(),
        }
    }

    fn check_label(&self, label: &BitString, party: &str) -> Result<()> {
        if label.len() != self.d {
            return Err(Error::invalid(format!(
                "{party} label length {} does not match d = {}",
                label.len(),
                self.d
            )));
        }
        Ok(())
    }

    fn explicit_index(&self, label: &BitString, count: usize, party: &str) -> Result<usize> {
        let idx = label.index().ok_or_else(|| {
            Error::invalid(format!("{party} label does not fit in a basis index"))
        })?;
        if idx as usize >= count {
            return Err(Error::invalid(format!(
                "{party} label {idx} out of range: scenario has {count} bases"
            )));
        }
        Ok(idx as usize)
    }

    fn check_click_outcome(&self, o: OutcomeIndex, who: &str) -> Result<usize> {
        if !o.is_click() {
            return Err(Error::invalid(format!(
                "{who} outcome must be a click (1..=d) for the amplitude"
            )));
        }
        let v = o.value() as usize;
        if v > self.d {
            return Err(Error::invalid(format!(
                "{who} outcome {v} exceeds d = {}",
                self.d
            )));
        }
        Ok(v)
    }

    /// The transition amplitude <psi| x_a> |y_b> for click outcomes a, b.
    ///
    /// Since psi has real uniform coefficients, the contraction uses the
    /// component transpose of the basis vectors, not the conjugate transpose:
    /// <psi|x_a>|y_b> = d^{-1/2} sum_k <k|x_a> <k|y_b>.
    pub fn joint_amplitude(
        &self,
        x: &BitString,
        y: &BitString,
        a: OutcomeIndex,
        b: OutcomeIndex,
    ) -> Result<Complex64> {
        self.check_label(x, "alice")?;
        self.check_label(y, "bob")?;
        let a = self.check_click_outcome(a, "alice")?;
        let b = self.check_click_outcome(b, "bob")?;
        match &self.family {
            MeasurementFamily::ImplicitBct { .. } => {
                let z = x.xor(y)?;
                let c = (a - 1) ^ (b - 1);
                Ok(Complex64::new(bct_amplitude(self.d, &z, c), 0.0))
            }
            MeasurementFamily::Explicit {
                alice_bases,
                bob_bases,
            } => {
                let xi = self.explicit_index(x, alice_bases.len(), "alice")?;
                let yi = self.explicit_index(y, bob_bases.len(), "bob")?;
                let va = &alice_bases[xi].vectors[a - 1];
                let vb = &bob_bases[yi].vectors[b - 1];
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..self.d {
                    acc += va[k] * vb[k];
                }
                Ok(acc / (self.d as f64).sqrt())
            }
        }
    }

    /// Probability that Alice's detector clicks on outcome `a` given label
    /// `x`, regardless of Bob. The reduced state of psi is maximally mixed,
    /// so this is 1/d for the implicit family; for explicit bases it is
    /// computed as the trace ||x_a||^2 / d.
    fn click_marginal_alice(&self, x: &BitString, a: usize) -> Result<f64> {
        match &self.family {
            MeasurementFamily::ImplicitBct { .. } => Ok(1.0 / self.d as f64),
            MeasurementFamily::Explicit { alice_bases, .. } => {
                let xi = self.explicit_index(x, alice_bases.len(), "alice")?;
                let v = &alice_bases[xi].vectors[a - 1];
                Ok(v.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.d as f64)
            }
        }
    }

    fn click_marginal_bob(&self, y: &BitString, b: usize) -> Result<f64> {
        match &self.family {
            MeasurementFamily::ImplicitBct { .. } => Ok(1.0 / self.d as f64),
            MeasurementFamily::Explicit { bob_bases, .. } => {
                let yi = self.explicit_index(y, bob_bases.len(), "bob")?;
                let v = &bob_bases[yi].vectors[b - 1];
                Ok(v.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.d as f64)
            }
        }
    }

    /// The joint outcome probability with detector efficiency `em`:
    /// (1-eta)^2 for a double non-detection, eta(1-eta) times the click
    /// marginal for a single click, and eta^2 |amplitude|^2 when both click.
    pub fn joint_prob(
        &self,
        x: &BitString,
        y: &BitString,
        a: OutcomeIndex,
        b: OutcomeIndex,
        em: EfficiencyModel,
    ) -> Result<f64> {
        self.check_label(x, "alice")?;
        self.check_label(y, "bob")?;
        let eta = em.eta();
        match (a.is_click(), b.is_click()) {
            (false, false) => Ok((1.0 - eta) * (1.0 - eta)),
            (true, false) => {
                let a = self.check_click_outcome(a, "alice")?;
                Ok(eta * (1.0 - eta) * self.click_marginal_alice(x, a)?)
            }
            (false, true) => {
                let b = self.check_click_outcome(b, "bob")?;
                Ok(eta * (1.0 - eta) * self.click_marginal_bob(y, b)?)
            }
            (true, true) => {
                let amp = self.joint_amplitude(x, y, a, b)?;
                Ok(eta * eta * amp.norm_sqr())
            }
        }
    }

    /// The full (d+1) x (d+1) outcome table for one label pair.
    pub fn outcome_table(
        &self,
        x: &BitString,
        y: &BitString,
        em: EfficiencyModel,
    ) -> Result<JointTable> {
        self.check_label(x, "alice")?;
        self.check_label(y, "bob")?;
        let d = self.d;
        let eta = em.eta();
        let mut table = JointTable::zeroed(d, Some(eta));
        *table.cell_mut(0, 0) = (1.0 - eta) * (1.0 - eta);
        for a in 1..=d {
            *table.cell_mut(a, 0) = eta * (1.0 - eta) * self.click_marginal_alice(x, a)?;
        }
        for b in 1..=d {
            *table.cell_mut(0, b) = eta * (1.0 - eta) * self.click_marginal_bob(y, b)?;
        }
        match &self.family {
            MeasurementFamily::ImplicitBct { .. } => {
                // |amplitude|^2 depends only on c = (a-1) xor (b-1).
                let z = x.xor(y)?;
                let probs: Vec<f64> = (0..d)
                    .map(|c| {
                        let amp = bct_amplitude(d, &z, c);
                        eta * eta * amp * amp
                    })
                    .collect();
                for a in 1..=d {
                    for b in 1..=d {
                        *table.cell_mut(a, b) = probs[(a - 1) ^ (b - 1)];
                    }
                }
            }
            MeasurementFamily::Explicit { .. } => {
                for a in 1..=d {
                    for b in 1..=d {
                        let amp =
                            self.joint_amplitude(x, y, OutcomeIndex(a as u16), OutcomeIndex(b as u16))?;
                        *table.cell_mut(a, b) = eta * eta * amp.norm_sqr();
                    }
                }
            }
        }
        Ok(table)
    }
}

/// Component k of the implicit-family basis vector |x_a> (a in 0..d here).
fn bct_component(x: &BitString, a: usize, k: usize, d: usize) -> f64 {
    let sign = x.get(k) ^ (((a & k).count_ones() & 1) == 1);
    let inv_sqrt_d = 1.0 / (d as f64).sqrt();
    if sign {
        -inv_sqrt_d
    } else {
        inv_sqrt_d
    }
}

/// The implicit-family basis vector for label `x` and outcome slot `a`
/// (0-based), as an explicit real vector.
pub fn bct_vector(x: &BitString, a: usize) -> Vec<Complex64> {
    let d = x.len();
    (0..d)
        .map(|k| Complex64::new(bct_component(x, a, k, d), 0.0))
        .collect()
}

/// <psi|x_a>|y_b> for the implicit family reduces to
/// d^{-3/2} sum_k (-1)^{z_k xor parity(c & k)} with z = x xor y and
/// c = (a-1) xor (b-1). O(d) per evaluation.
fn bct_amplitude(d: usize, z: &BitString, c: usize) -> f64 {
    let mut acc: i64 = 0;
    for k in 0..d {
        let sign = z.get(k) ^ (((c & k).count_ones() & 1) == 1);
        acc += if sign { -1 } else { 1 };
    }
    acc as f64 / (d as f64 * (d as f64).sqrt())
}

/// Joint outcome probabilities for one fixed label pair.
#[derive(Debug, Clone)]
pub struct JointTable {
    d: usize,
    /// Efficiency the table was built with, when it came from the
    /// detector model; mixtures of unrelated tables carry `None`.
    eta: Option<f64>,
    cells: Vec<f64>,
}

pub const TABLE_TOL: f64 = 1e-12;

impl JointTable {
    pub fn zeroed(d: usize, eta: Option<f64>) -> Self {
        JointTable {
            d,
            eta,
            cells: vec![0.0; (d + 1) * (d + 1)],
        }
    }

    pub fn from_cells(d: usize, eta: Option<f64>, cells: Vec<f64>) -> Result<Self> {
        if cells.len() != (d + 1) * (d + 1) {
            return Err(Error::invalid(format!(
                "expected {} cells, got {}",
                (d + 1) * (d + 1),
                cells.len()
            )));
        }
        Ok(JointTable { d, eta, cells })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.cells[a * (self.d + 1) + b]
    }

    pub fn cell_mut(&mut self, a: usize, b: usize) -> &mut f64 {
        &mut self.cells[a * (self.d + 1) + b]
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// P(a = b and a != 0): the same-outcome double-click mass.
    pub fn same_click_prob(&self) -> f64 {
        (1..=self.d).map(|k| self.get(k, k)).sum()
    }

    /// Nonnegativity, normalization, and (when the efficiency is known) the
    /// independent-non-detection cell.
    pub fn validate(&self) -> Result<()> {
        let mut sum = 0.0;
        for &p in &self.cells {
            if p < -TABLE_TOL {
                return Err(Error::validation(format!("negative probability {p}")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > TABLE_TOL {
            return Err(Error::validation(format!(
                "table sums to {sum}, expected 1"
            )));
        }
        if let Some(eta) = self.eta {
            let expect = (1.0 - eta) * (1.0 - eta);
            if (self.get(0, 0) - expect).abs() > TABLE_TOL {
                return Err(Error::validation(format!(
                    "double non-detection cell {} differs from (1-eta)^2 = {expect}",
                    self.get(0, 0)
                )));
            }
        }
        Ok(())
    }

    /// Entrywise convex mixture of two tables of equal shape.
    pub fn mix(&self, other: &JointTable, weight: f64) -> Result<JointTable> {
        if self.d != other.d {
            return Err(Error::invalid("table dimension mismatch"));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::invalid("mixture weight must lie in [0, 1]"));
        }
        let eta = match (self.eta, other.eta) {
            (Some(a), Some(b)) if (a - b).abs() < TABLE_TOL => Some(a),
            _ => None,
        };
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| weight * a + (1.0 - weight) * b)
            .collect();
        Ok(JointTable {
            d: self.d,
            eta,
            cells,
        })
    }
}

// ---------------------------------------------------------------------------
// Scenario file format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ScenarioDoc {
    d: usize,
    state: String,
    alice_bases: Vec<Vec<Vec<[f64; 2]>>>,
    bob_bases: Vec<Vec<Vec<[f64; 2]>>>,
}

fn doc_bases(raw: Vec<Vec<Vec<[f64; 2]>>>) -> Vec<Basis> {
    raw.into_iter()
        .map(|basis| Basis {
            vectors: basis
                .into_iter()
                .map(|v| v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
                .collect(),
        })
        .collect()
}

/// Parses and validates an explicit scenario document.
pub fn scenario_from_json(json: &str) -> Result<Scenario> {
    let doc: ScenarioDoc = serde_json::from_str(json)?;
    if doc.state != "maximally_entangled" {
        return Err(Error::validation(format!(
            "unsupported state {:?}; only \"maximally_entangled\" is defined",
            doc.state
        )));
    }
    Scenario::explicit(doc.d, doc_bases(doc.alice_bases), doc_bases(doc.bob_bases))
}

/// Loads an explicit scenario from a JSON file.
pub fn load_explicit_scenario(path: &Path) -> Result<Scenario> {
    let file = File::open(path)?;
    let doc: ScenarioDoc = serde_json::from_reader(BufReader::new(file))?;
    if doc.state != "maximally_entangled" {
        return Err(Error::validation(format!(
            "unsupported state {:?}; only \"maximally_entangled\" is defined",
            doc.state
        )));
    }
    Scenario::explicit(doc.d, doc_bases(doc.alice_bases), doc_bases(doc.bob_bases))
}

/// Serializes an explicit scenario back to the document format.
pub fn scenario_to_json(s: &Scenario) -> Result<String> {
    let (alice_bases, bob_bases) = match s.family() {
        MeasurementFamily::Explicit {
            alice_bases,
            bob_bases,
        } => (alice_bases, bob_bases),
        MeasurementFamily::ImplicitBct { .. } => {
            return Err(Error::invalid(
                "implicit scenarios have no explicit basis document",
            ))
        }
    };
    let dump = |bases: &[Basis]| {
        bases
            .iter()
            .map(|b| {
                b.vectors
                    .iter()
                    .map(|v| v.iter().map(|c| [c.re, c.im]).collect())
                    .collect()
            })
            .collect()
    };
    let doc = ScenarioDoc {
        d: s.d(),
        state: "maximally_entangled".to_string(),
        alice_bases: dump(alice_bases),
        bob_bases: dump(bob_bases),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::hamming;
    use approx::assert_abs_diff_eq;

    fn label(v: u64, d: usize) -> BitString {
        BitString::from_index(v, d)
    }

    fn eta(e: f64) -> EfficiencyModel {
        EfficiencyModel::new(e).unwrap()
    }

    #[test]
    fn bct_requires_n_at_least_two() {
        assert!(matches!(Scenario::bct(1), Err(Error::InvalidArgument(_))));
        let s = Scenario::bct(2).unwrap();
        assert_eq!(s.d(), 4);
        assert_eq!(s.num_measurements(), (Some(16), Some(16)));
        let s3 = Scenario::bct(3).unwrap();
        assert_eq!(s3.d(), 8);
        assert_eq!(s3.num_measurements(), (Some(256), Some(256)));
    }

    #[test]
    fn amplitude_examples_d4() {
        let s = Scenario::bct(2).unwrap();
        let x = label(0b0110, 4);
        // Same labels, same outcomes: amplitude 1/sqrt(d) = 0.5.
        for a in 1..=4u16 {
            let amp = s
                .joint_amplitude(&x, &x, OutcomeIndex(a), OutcomeIndex(a))
                .unwrap();
            assert_abs_diff_eq!(amp.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(amp.im, 0.0, epsilon = 1e-15);
        }
        // Same labels, different outcomes: amplitude 0.
        let amp = s
            .joint_amplitude(&x, &x, OutcomeIndex(1), OutcomeIndex(3))
            .unwrap();
        assert_abs_diff_eq!(amp.re, 0.0, epsilon = 1e-15);
        // Labels at distance d/2: equal outcomes never occur.
        let y = label(0b0101, 4);
        assert_eq!(hamming(&x, &y).unwrap(), 2);
        for a in 1..=4u16 {
            let amp = s
                .joint_amplitude(&x, &y, OutcomeIndex(a), OutcomeIndex(a))
                .unwrap();
            assert_abs_diff_eq!(amp.re, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn amplitude_rejects_no_click() {
        let s = Scenario::bct(2).unwrap();
        let x = label(0, 4);
        assert!(s
            .joint_amplitude(&x, &x, OutcomeIndex::NO_CLICK, OutcomeIndex(1))
            .is_err());
    }

    /// The popcount path must agree with a direct basis construction and
    /// inner product over the materialized vectors.
    #[test]
    fn implicit_matches_explicit_construction_d4() {
        let labels: Vec<BitString> = (0..16).map(|v| label(v, 4)).collect();
        let implicit = Scenario::bct(2).unwrap();
        let explicit = Scenario::explicit_bct(2, &labels).unwrap();
        for x in &labels {
            for y in &labels {
                let xi = label(x.index().unwrap(), 4);
                let yi = label(y.index().unwrap(), 4);
                for a in 1..=4u16 {
                    for b in 1..=4u16 {
                        let ai = s_amp(&implicit, x, y, a, b);
                        // Explicit labels select bases by numeric value; the
                        // bases were built in label order.
                        let ae = s_amp(&explicit, &xi, &yi, a, b);
                        assert_abs_diff_eq!(ai, ae, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    fn s_amp(s: &Scenario, x: &BitString, y: &BitString, a: u16, b: u16) -> f64 {
        s.joint_amplitude(x, y, OutcomeIndex(a), OutcomeIndex(b))
            .unwrap()
            .re
    }

    #[test]
    fn joint_prob_examples() {
        let s = Scenario::bct(2).unwrap();
        let x = label(3, 4);
        let y = label(9, 4);
        // Dead detectors never click.
        let p = s
            .joint_prob(&x, &y, OutcomeIndex(0), OutcomeIndex(0), eta(0.0))
            .unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-15);
        // Perfect detectors, equal labels, equal outcomes: 1/d.
        let p = s
            .joint_prob(&x, &x, OutcomeIndex(1), OutcomeIndex(1), eta(1.0))
            .unwrap();
        assert_abs_diff_eq!(p, 0.25, epsilon = 1e-15);
        // Single click at eta = 0.5 carries the maximally mixed marginal 1/d.
        let p = s
            .joint_prob(&x, &y, OutcomeIndex(1), OutcomeIndex(0), eta(0.5))
            .unwrap();
        assert_abs_diff_eq!(p, 0.0625, epsilon = 1e-15);
    }

    /// Single-click probabilities must match an explicit partial trace of
    /// the projected state, computed from materialized vectors.
    #[test]
    fn single_click_matches_partial_trace_oracle() {
        let d = 4usize;
        let labels: Vec<BitString> = (0..16).map(|v| label(v, d)).collect();
        let s = Scenario::bct(2).unwrap();
        let x = &labels[7];
        // rho_A[k][l] = sum_m psi[k][m] conj(psi[l][m]) with psi = I/sqrt(d).
        // For each outcome a: P(a|x) = <x_a| rho_A |x_a>.
        for a in 1..=d {
            let v = bct_vector(x, a - 1);
            let mut p = 0.0;
            for k in 0..d {
                for l in 0..d {
                    let rho = if k == l { 1.0 / d as f64 } else { 0.0 };
                    p += (v[k].conj() * rho * v[l]).re;
                }
            }
            let got = s
                .joint_prob(
                    x,
                    &labels[3],
                    OutcomeIndex(a as u16),
                    OutcomeIndex(0),
                    eta(0.5),
                )
                .unwrap();
            assert_abs_diff_eq!(got, 0.5 * 0.5 * p, epsilon = 1e-15);
        }
    }

    #[test]
    fn table_invariants_d4() {
        let s = Scenario::bct(2).unwrap();
        let labels: Vec<BitString> = (0..16).map(|v| label(v, 4)).collect();
        for e in [0.0, 0.3, 1.0] {
            for x in &labels {
                for y in &labels {
                    let t = s.outcome_table(x, y, eta(e)).unwrap();
                    t.validate().unwrap();
                    let sum: f64 = t.cells().iter().sum();
                    assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
                }
            }
        }
        // Perfect detectors: the no-click row and column vanish.
        let t = s.outcome_table(&labels[2], &labels[5], eta(1.0)).unwrap();
        for k in 0..=4 {
            assert_eq!(t.get(0, k), 0.0);
            assert_eq!(t.get(k, 0), 0.0);
        }
        // Equal labels with perfect detectors: uniform diagonal.
        let t = s.outcome_table(&labels[6], &labels[6], eta(1.0)).unwrap();
        for a in 1..=4 {
            for b in 1..=4 {
                let expect = if a == b { 0.25 } else { 0.0 };
                assert_abs_diff_eq!(t.get(a, b), expect, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn no_signalling_exhaustive_d4() {
        let s = Scenario::bct(2).unwrap();
        let labels: Vec<BitString> = (0..16).map(|v| label(v, 4)).collect();
        let em = eta(0.7);
        for x in &labels {
            let reference: Vec<f64> = {
                let t = s.outcome_table(x, &labels[0], em).unwrap();
                (0..=4).map(|a| (0..=4).map(|b| t.get(a, b)).sum()).collect()
            };
            for y in &labels {
                let t = s.outcome_table(x, y, em).unwrap();
                for a in 0..=4 {
                    let marg: f64 = (0..=4).map(|b| t.get(a, b)).sum();
                    assert_abs_diff_eq!(marg, reference[a], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn independent_non_detection_d4() {
        let s = Scenario::bct(2).unwrap();
        let labels: Vec<BitString> = (0..16).map(|v| label(v, 4)).collect();
        let e = 0.37;
        let em = eta(e);
        for x in &labels {
            for y in &labels {
                let t = s.outcome_table(x, y, em).unwrap();
                assert_abs_diff_eq!(t.get(0, 0), (1.0 - e) * (1.0 - e), epsilon = 1e-12);
                let p_a0: f64 = (0..=4).map(|b| t.get(0, b)).sum();
                assert_abs_diff_eq!(p_a0, 1.0 - e, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn translation_symmetry_exhaustive_d4() {
        let s = Scenario::bct(2).unwrap();
        let labels: Vec<BitString> = (0..16).map(|v| label(v, 4)).collect();
        let em = eta(0.6);
        for x in &labels[..4] {
            for y in &labels {
                let t = s.outcome_table(x, y, em).unwrap();
                for z in &labels {
                    let xs = x.xor(z).unwrap();
                    let ys = y.xor(z).unwrap();
                    let ts = s.outcome_table(&xs, &ys, em).unwrap();
                    for (a, b) in t.cells().iter().zip(ts.cells()) {
                        assert_abs_diff_eq!(a, b, epsilon = 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn scenario_document_roundtrip_and_errors() {
        // A valid d = 2 computational-basis scenario.
        let json = r#"{
            "d": 2,
            "state": "maximally_entangled",
            "alice_bases": [[[[1,0],[0,0]],[[0,0],[1,0]]]],
            "bob_bases": [[[[1,0],[0,0]],[[0,0],[1,0]]]]
        }"#;
        let s = scenario_from_json(json).unwrap();
        assert_eq!(s.d(), 2);

        // Duplicated vector: orthogonality violated, offending index named.
        let bad = r#"{
            "d": 2,
            "state": "maximally_entangled",
            "alice_bases": [[[[1,0],[0,0]],[[1,0],[0,0]]]],
            "bob_bases": [[[[1,0],[0,0]],[[0,0],[1,0]]]]
        }"#;
        let err = scenario_from_json(bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("alice basis 0"), "message was: {msg}");

        // Dimension mismatch.
        let short = r#"{
            "d": 3,
            "state": "maximally_entangled",
            "alice_bases": [[[[1,0],[0,0]],[[0,0],[1,0]]]],
            "bob_bases": [[[[1,0],[0,0]],[[0,0],[1,0]]]]
        }"#;
        assert!(scenario_from_json(short).is_err());

        let s = Scenario::chsh();
        let dumped = scenario_to_json(&s).unwrap();
        let back = scenario_from_json(&dumped).unwrap();
        assert_eq!(back.d(), 2);
    }

    #[test]
    fn chsh_scenario_is_orthonormal() {
        let s = Scenario::chsh();
        assert_eq!(s.d(), 2);
        assert_eq!(s.num_measurements(), (Some(2), Some(2)));
    }

    proptest::proptest! {
        /// Tables stay normalized off the exhaustively tested dimension.
        #[test]
        fn tables_normalized_at_d8(
            x in 0u64..256,
            y in 0u64..256,
            e in 0.0f64..=1.0,
        ) {
            let s = Scenario::bct(3).unwrap();
            let t = s
                .outcome_table(&label(x, 8), &label(y, 8), eta(e))
                .unwrap();
            proptest::prop_assert!(t.validate().is_ok());
        }
    }
}
