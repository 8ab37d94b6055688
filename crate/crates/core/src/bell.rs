//! The Bell expression I = sum_{x,y} P(a = b and a != 0 | x, y) alpha(x, y),
//! evaluated in closed form, from outcome tables, and under white noise.

use crate::bits::{hamming, BitString};
use crate::error::{Error, Result};
use crate::numeric::{choose_exact, choose_f64};
use crate::scenario::{EfficiencyModel, JointTable, Scenario};

/// The coefficient alpha(x, y): +1 when x = y, -1 when the labels sit at
/// Hamming distance d/2, 0 otherwise.
pub fn alpha(x: &BitString, y: &BitString) -> Result<i8> {
    let dist = hamming(x, y)?;
    if dist == 0 {
        Ok(1)
    } else if x.len() % 2 == 0 && dist as usize == x.len() / 2 {
        Ok(-1)
    } else {
        Ok(0)
    }
}

/// A Bell-expression value. All large-d reporting happens in the normalized
/// domain I / 2^d; the raw value is attached only when 2^d fits an f64
/// exponent comfortably (d <= 64).
#[derive(Debug, Clone, Copy)]
pub struct BellValue {
    pub d: usize,
    /// Detector efficiency of the provider, when it has one.
    pub eta: Option<f64>,
    /// I / 2^d.
    pub normalized: f64,
    /// I itself, reported only when d <= 64.
    pub raw: Option<f64>,
}

fn bell_value(d: usize, eta: Option<f64>, normalized: f64) -> BellValue {
    let raw = (d <= 64).then(|| normalized * (d as f64).exp2());
    BellValue {
        d,
        eta,
        normalized,
        raw,
    }
}

fn check_power_of_two_dim(d: usize) -> Result<()> {
    if d < 4 || !d.is_power_of_two() {
        return Err(Error::invalid(format!(
            "dimension must be a power of two >= 4, got {d}"
        )));
    }
    Ok(())
}

/// The quantum prediction I = eta^2 2^d for the implicit-family scenario.
///
/// Besides the closed form, this evaluates the translation-symmetric
/// reduction I = 2^d [S(0) - C(d, d/2) S(z_half)] with
/// S(z) = P(a = b, a != 0 | x, x xor z), and insists that the distance-d/2
/// term vanishes, the property that makes the closed form exact.
pub fn bell_value_quantum(d: usize, em: EfficiencyModel) -> Result<BellValue> {
    check_power_of_two_dim(d)?;
    let n = d.trailing_zeros();
    let scenario = Scenario::bct(n)?;
    let x0 = BitString::zeros(d);
    let mut z_half = BitString::zeros(d);
    for i in 0..d / 2 {
        z_half.set(i, true);
    }
    // S(z) = P(a = b, a != 0 | x, x xor z). Every diagonal cell shares
    // (a-1) xor (b-1) = 0, so d times one cell gives the whole mass in O(d)
    // even when the full table would not fit in memory.
    let one = crate::scenario::OutcomeIndex(1);
    let s0 = d as f64 * scenario.joint_prob(&x0, &x0, one, one, em)?;
    let s_half = d as f64 * scenario.joint_prob(&x0, &z_half, one, one, em)?;
    if s_half.abs() > 1e-15 {
        return Err(Error::validation(format!(
            "distance-d/2 same-outcome mass should vanish, got {s_half}"
        )));
    }
    let eta = em.eta();
    let closed = eta * eta;
    let reduced = s0 - choose_f64(d as u64, d as u64 / 2) * s_half;
    if (closed - reduced).abs() > 1e-12 {
        return Err(Error::validation(format!(
            "closed form {closed} disagrees with symmetry reduction {reduced}"
        )));
    }
    Ok(bell_value(d, Some(eta), closed))
}

/// Supplies the joint outcome table for any label pair. The Bell engine only
/// needs this surface, so quantum, noisy, and local-model sources all plug in
/// here.
pub trait TableProvider {
    fn d(&self) -> usize;
    /// Efficiency behind the table, when the provider has a single one.
    fn eta(&self) -> Option<f64>;
    fn table(&self, x: &BitString, y: &BitString) -> Result<JointTable>;
    /// True when table(x, y) depends on the labels only through x xor y.
    fn translation_symmetric(&self) -> bool {
        false
    }
}

/// Eq.-style quantum tables for a scenario.
pub struct QuantumProvider<'a> {
    pub scenario: &'a Scenario,
    pub em: EfficiencyModel,
}

impl TableProvider for QuantumProvider<'_> {
    fn d(&self) -> usize {
        self.scenario.d()
    }

    fn eta(&self) -> Option<f64> {
        Some(self.em.eta())
    }

    fn table(&self, x: &BitString, y: &BitString) -> Result<JointTable> {
        self.scenario.outcome_table(x, y, self.em)
    }

    fn translation_symmetric(&self) -> bool {
        self.scenario.is_implicit()
    }
}

/// Tables for the state (1-w) psi + w I/d^2 measured by the implicit family.
/// The white-noise part leaves the click marginals maximally mixed and adds
/// w/d^2 to every double-click cell.
pub struct NoisyProvider {
    d: usize,
    em: EfficiencyModel,
    w: f64,
    scenario: Scenario,
}

impl NoisyProvider {
    pub fn new(d: usize, em: EfficiencyModel, w: f64) -> Result<Self> {
        check_power_of_two_dim(d)?;
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::invalid(format!(
                "noise weight must lie in [0, 1], got {w}"
            )));
        }
        Ok(NoisyProvider {
            d,
            em,
            w,
            scenario: Scenario::bct(d.trailing_zeros())?,
        })
    }
}

impl TableProvider for NoisyProvider {
    fn d(&self) -> usize {
        self.d
    }

    fn eta(&self) -> Option<f64> {
        Some(self.em.eta())
    }

    fn table(&self, x: &BitString, y: &BitString) -> Result<JointTable> {
        let mut t = self.scenario.outcome_table(x, y, self.em)?;
        let eta = self.em.eta();
        let uniform = self.w * eta * eta / (self.d * self.d) as f64;
        for a in 1..=self.d {
            for b in 1..=self.d {
                let pure = t.get(a, b);
                *t.cell_mut(a, b) = (1.0 - self.w) * pure + uniform;
            }
        }
        Ok(t)
    }

    fn translation_symmetric(&self) -> bool {
        true
    }
}

/// Evaluates the Bell expression from outcome tables.
///
/// For d <= 4 this is the literal double sum over all 4^d label pairs. For
/// translation-symmetric providers up to d = 64 the sum collapses onto the
/// weight classes of z = x xor y, where only z = 0 and the C(d, d/2) strings
/// of weight d/2 carry alpha != 0.
pub fn bell_value_from_table(provider: &dyn TableProvider) -> Result<BellValue> {
    let d = provider.d();
    if d <= 4 {
        let labels: Vec<BitString> = (0..1u64 << d).map(|v| BitString::from_index(v, d)).collect();
        let alphas: Vec<Vec<i8>> = labels
            .iter()
            .map(|x| labels.iter().map(|y| alpha(x, y).unwrap()).collect())
            .collect();
        let mut total = 0.0;
        for (xi, x) in labels.iter().enumerate() {
            for (yi, y) in labels.iter().enumerate() {
                let coeff = alphas[xi][yi];
                if coeff == 0 {
                    continue;
                }
                let t = provider.table(x, y)?;
                t.validate()?;
                total += f64::from(coeff) * t.same_click_prob();
            }
        }
        return Ok(bell_value(d, provider.eta(), total / (d as f64).exp2()));
    }
    if !provider.translation_symmetric() {
        return Err(Error::invalid(
            "full table summation is capped at d = 4; larger d needs a translation-symmetric provider",
        ));
    }
    if d > 64 || d % 2 != 0 {
        return Err(Error::invalid(
            "translation-reduced summation is supported for even d <= 64",
        ));
    }
    let x0 = BitString::zeros(d);
    let mut z_half = BitString::zeros(d);
    for i in 0..d / 2 {
        z_half.set(i, true);
    }
    let t0 = provider.table(&x0, &x0)?;
    t0.validate()?;
    let t_half = provider.table(&x0, &z_half)?;
    t_half.validate()?;
    let half_count = choose_exact(d as u64, d as u64 / 2).expect("d <= 64") as f64;
    let normalized = t0.same_click_prob() - half_count * t_half.same_click_prob();
    Ok(bell_value(d, provider.eta(), normalized))
}

/// Closed-form Bell value for the white-noise state
/// (1-w) |psi><psi| + w I/d^2:
/// I = eta^2 2^d [(1-w) + w/d - C(d, d/2) w/d].
///
/// The distance-d/2 classes pick up the uniform double-click mass w/d with
/// the C(d, d/2) multiplicity and a minus sign, which is what makes the
/// expression collapse so quickly under noise.
pub fn bell_value_noisy(d: usize, em: EfficiencyModel, w: f64) -> Result<BellValue> {
    check_power_of_two_dim(d)?;
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::invalid(format!(
            "noise weight must lie in [0, 1], got {w}"
        )));
    }
    let eta = em.eta();
    let df = d as f64;
    let half_count = choose_f64(d as u64, d as u64 / 2);
    let normalized = eta * eta * ((1.0 - w) + w / df - half_count * w / df);
    if !normalized.is_finite() {
        return Err(Error::invalid(format!(
            "white-noise value is not representable at d = {d}; evaluate at smaller d"
        )));
    }
    Ok(bell_value(d, Some(eta), normalized))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use crate::scenario::bct_vector;

    fn em(eta: f64) -> EfficiencyModel {
        EfficiencyModel::new(eta).unwrap()
    }

    fn label(v: u64, d: usize) -> BitString {
        BitString::from_index(v, d)
    }

    #[test]
    fn alpha_examples() {
        let x = label(0b1010, 4);
        assert_eq!(alpha(&x, &x).unwrap(), 1);
        assert_eq!(alpha(&x, &label(0b1001, 4)).unwrap(), -1); // distance 2
        assert_eq!(alpha(&x, &label(0b1011, 4)).unwrap(), 0); // distance 1
        assert!(alpha(&x, &label(0, 8)).is_err());
    }

    #[test]
    fn alpha_symmetric_exhaustive_d4() {
        let labels: Vec<BitString> = (0..16).map(|v| label(v, 4)).collect();
        for x in &labels {
            for y in &labels {
                assert_eq!(alpha(x, y).unwrap(), alpha(y, x).unwrap());
            }
        }
    }

    #[test]
    fn quantum_closed_form() {
        let v = bell_value_quantum(4, em(1.0)).unwrap();
        assert_abs_diff_eq!(v.normalized, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.raw.unwrap(), 16.0, epsilon = 1e-12);
        let v = bell_value_quantum(4, em(0.5)).unwrap();
        assert_abs_diff_eq!(v.raw.unwrap(), 4.0, epsilon = 1e-12);
        let v = bell_value_quantum(16, em(0.0)).unwrap();
        assert_eq!(v.normalized, 0.0);
        assert!(bell_value_quantum(6, em(1.0)).is_err());
        // Large d stays in normalized domain; the cross-check is O(d).
        let v = bell_value_quantum(65536, em(0.25)).unwrap();
        assert_abs_diff_eq!(v.normalized, 0.0625, epsilon = 1e-15);
        assert!(v.raw.is_none());
    }

    #[test]
    fn table_sum_matches_closed_form_d4() {
        let s = Scenario::bct(2).unwrap();
        for eta in [0.0, 0.25, 0.5, 1.0] {
            let p = QuantumProvider {
                scenario: &s,
                em: em(eta),
            };
            let v = bell_value_from_table(&p).unwrap();
            assert_abs_diff_eq!(v.raw.unwrap(), eta * eta * 16.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn reduced_sum_matches_closed_form_d16() {
        let s = Scenario::bct(4).unwrap();
        let p = QuantumProvider {
            scenario: &s,
            em: em(0.3),
        };
        let v = bell_value_from_table(&p).unwrap();
        assert_abs_diff_eq!(v.normalized, 0.09, epsilon = 1e-12);
    }

    /// A provider with all probability on the double non-detection cell
    /// contributes nothing.
    #[test]
    fn dead_provider_scores_zero() {
        struct Dead;
        impl TableProvider for Dead {
            fn d(&self) -> usize {
                4
            }
            fn eta(&self) -> Option<f64> {
                Some(0.0)
            }
            fn table(&self, _: &BitString, _: &BitString) -> Result<JointTable> {
                let mut t = JointTable::zeroed(4, Some(0.0));
                *t.cell_mut(0, 0) = 1.0;
                Ok(t)
            }
        }
        let v = bell_value_from_table(&Dead).unwrap();
        assert_eq!(v.raw.unwrap(), 0.0);
    }

    #[test]
    fn invalid_tables_are_rejected() {
        struct Broken;
        impl TableProvider for Broken {
            fn d(&self) -> usize {
                4
            }
            fn eta(&self) -> Option<f64> {
                None
            }
            fn table(&self, _: &BitString, _: &BitString) -> Result<JointTable> {
                let mut t = JointTable::zeroed(4, None);
                *t.cell_mut(0, 0) = 0.5; // sums to 0.5
                Ok(t)
            }
        }
        assert!(matches!(
            bell_value_from_table(&Broken),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn noisy_closed_form_examples() {
        let v = bell_value_noisy(4, em(1.0), 0.0).unwrap();
        assert_abs_diff_eq!(v.raw.unwrap(), 16.0, epsilon = 1e-12);
        let v = bell_value_noisy(4, em(1.0), 1.0).unwrap();
        assert_abs_diff_eq!(v.raw.unwrap(), -20.0, epsilon = 1e-12);
        let v = bell_value_noisy(4, em(1.0), 0.5).unwrap();
        assert_abs_diff_eq!(v.raw.unwrap(), -2.0, epsilon = 1e-12);
        assert!(bell_value_noisy(4, em(1.0), 1.5).is_err());
    }

    #[test]
    fn noisy_matches_table_sum_d4() {
        for w in [0.0, 0.25, 0.5, 1.0] {
            let closed = bell_value_noisy(4, em(0.8), w).unwrap();
            let provider = NoisyProvider::new(4, em(0.8), w).unwrap();
            let summed = bell_value_from_table(&provider).unwrap();
            assert_abs_diff_eq!(closed.raw.unwrap(), summed.raw.unwrap(), epsilon = 1e-10);
        }
    }

    /// At d = 8 the engine switches to the weight-class reduction; it must
    /// still match the closed form, including the nonzero distance-d/2 term.
    #[test]
    fn noisy_matches_reduced_sum_d8() {
        for w in [0.0, 0.3, 1.0] {
            let closed = bell_value_noisy(8, em(0.6), w).unwrap();
            let provider = NoisyProvider::new(8, em(0.6), w).unwrap();
            let summed = bell_value_from_table(&provider).unwrap();
            assert_abs_diff_eq!(
                closed.normalized,
                summed.normalized,
                epsilon = 1e-12
            );
        }
    }

    /// Independent oracle: materialize the 16-dimensional density matrix
    /// (1-w)|psi><psi| + w I/16 and the explicit product basis vectors, then
    /// run the literal double sum of the Bell expression.
    #[test]
    fn noisy_matches_density_matrix_oracle() {
        let d = 4usize;
        let dim = d * d;
        let labels: Vec<BitString> = (0..16).map(|v| label(v, d)).collect();
        let psi: Vec<f64> = {
            let mut v = vec![0.0; dim];
            for k in 0..d {
                v[k * d + k] = 1.0 / (d as f64).sqrt();
            }
            v
        };
        for w in [0.0, 0.5, 1.0] {
            let mut total = 0.0;
            for x in &labels {
                for y in &labels {
                    let coeff = alpha(x, y).unwrap();
                    if coeff == 0 {
                        continue;
                    }
                    let mut same = 0.0;
                    for a in 0..d {
                        let va = bct_vector(x, a);
                        let vb = bct_vector(y, a);
                        // <v_a x v_b| rho |v_a x v_b> with rho the noisy state.
                        let mut overlap = Complex64::new(0.0, 0.0);
                        for k in 0..d {
                            for l in 0..d {
                                overlap += va[k].conj() * vb[l].conj() * psi[k * d + l];
                            }
                        }
                        same += (1.0 - w) * overlap.norm_sqr() + w / dim as f64;
                    }
                    total += f64::from(coeff) * same;
                }
            }
            let got = bell_value_noisy(d, em(1.0), w).unwrap().raw.unwrap();
            assert_abs_diff_eq!(got, total, epsilon = 1e-10);
        }
    }

    #[test]
    fn noisy_strictly_decreasing_in_w() {
        for d in [4usize, 8, 16] {
            let mut prev = f64::INFINITY;
            for i in 0..=10 {
                let w = i as f64 / 10.0;
                let v = bell_value_noisy(d, em(0.9), w).unwrap().normalized;
                assert!(v < prev, "not decreasing at d = {d}, w = {w}");
                prev = v;
            }
        }
    }

    #[test]
    fn mixture_linearity_d4() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        struct Mix<'a> {
            a: &'a dyn TableProvider,
            b: &'a dyn TableProvider,
            w: f64,
        }
        impl TableProvider for Mix<'_> {
            fn d(&self) -> usize {
                self.a.d()
            }
            fn eta(&self) -> Option<f64> {
                self.a.eta()
            }
            fn table(&self, x: &BitString, y: &BitString) -> Result<JointTable> {
                self.a.table(x, y)?.mix(&self.b.table(x, y)?, self.w)
            }
        }
        let s = Scenario::bct(2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..8 {
            let w: f64 = rng.gen();
            let quantum = QuantumProvider {
                scenario: &s,
                em: em(0.7),
            };
            let noisy = NoisyProvider::new(4, em(0.7), 1.0).unwrap();
            let mixed = Mix {
                a: &quantum,
                b: &noisy,
                w,
            };
            let va = bell_value_from_table(&quantum).unwrap().normalized;
            let vb = bell_value_from_table(&noisy).unwrap().normalized;
            let vm = bell_value_from_table(&mixed).unwrap().normalized;
            assert_abs_diff_eq!(vm, w * va + (1.0 - w) * vb, epsilon = 1e-10);
        }
    }
}
