//! Local-variable models: deterministic strategy pairs, their Bell values,
//! the selection-set bound machinery, and the 1/M quadruple model.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::avoidance::{max_avoidance_subset, AvoidanceSet};
use crate::bell::{alpha, TableProvider};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::scenario::{EfficiencyModel, JointTable, OutcomeIndex, Scenario};

/// One deterministic strategy pair: output functions f and g, total on an
/// explicit list of measurement labels per party, with outcomes in 0..=d
/// (0 = instruct the detector not to click).
#[derive(Debug, Clone)]
pub struct StrategyPair {
    pub labels_a: Arc<[BitString]>,
    pub labels_b: Arc<[BitString]>,
    pub f: Vec<OutcomeIndex>,
    pub g: Vec<OutcomeIndex>,
}

impl StrategyPair {
    pub fn new(
        labels_a: Arc<[BitString]>,
        labels_b: Arc<[BitString]>,
        f: Vec<OutcomeIndex>,
        g: Vec<OutcomeIndex>,
    ) -> Result<Self> {
        if f.len() != labels_a.len() || g.len() != labels_b.len() {
            return Err(Error::invalid(
                "strategy tables must cover every measurement label",
            ));
        }
        Ok(StrategyPair {
            labels_a,
            labels_b,
            f,
            g,
        })
    }

    pub fn constant(
        labels_a: Arc<[BitString]>,
        labels_b: Arc<[BitString]>,
        outcome: u16,
    ) -> Self {
        let f = vec![OutcomeIndex(outcome); labels_a.len()];
        let g = vec![OutcomeIndex(outcome); labels_b.len()];
        StrategyPair {
            labels_a,
            labels_b,
            f,
            g,
        }
    }
}

/// A weighted mixture of deterministic strategy pairs over a shared label
/// domain.
#[derive(Debug, Clone)]
pub struct LhvModel {
    pub strategies: Vec<(f64, StrategyPair)>,
}

pub const WEIGHT_TOL: f64 = 1e-12;

impl LhvModel {
    pub fn new(strategies: Vec<(f64, StrategyPair)>) -> Result<Self> {
        if strategies.is_empty() {
            return Err(Error::invalid("a model needs at least one strategy"));
        }
        let mut sum = 0.0;
        for (w, pair) in &strategies {
            if *w < 0.0 {
                return Err(Error::validation(format!("negative weight {w}")));
            }
            if pair.labels_a != strategies[0].1.labels_a
                || pair.labels_b != strategies[0].1.labels_b
            {
                return Err(Error::invalid(
                    "all strategies in a model must share the label domain",
                ));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::validation(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(LhvModel { strategies })
    }

    pub fn labels_a(&self) -> &Arc<[BitString]> {
        &self.strategies[0].1.labels_a
    }

    pub fn labels_b(&self) -> &Arc<[BitString]> {
        &self.strategies[0].1.labels_b
    }

    /// The model's joint outcome table for one label pair (by index).
    pub fn table_by_index(&self, xi: usize, yi: usize, d: usize) -> JointTable {
        let mut t = JointTable::zeroed(d, None);
        for (w, pair) in &self.strategies {
            let a = pair.f[xi].value() as usize;
            let b = pair.g[yi].value() as usize;
            *t.cell_mut(a, b) += w;
        }
        t
    }
}

/// All 2^d measurement labels, for exhaustive work at small d.
pub fn full_domain(d: usize) -> Result<Arc<[BitString]>> {
    if d > 4 {
        return Err(Error::invalid(
            "the exhaustive label domain is capped at d = 4",
        ));
    }
    Ok((0..1u64 << d)
        .map(|v| BitString::from_index(v, d))
        .collect::<Vec<_>>()
        .into())
}

/// The Bell value of one deterministic strategy pair:
/// sum over label pairs with f(x) = g(y) != 0 of alpha(x, y).
pub fn lv_bell_value(pair: &StrategyPair) -> Result<f64> {
    let mut total: i64 = 0;
    for (xi, x) in pair.labels_a.iter().enumerate() {
        let fx = pair.f[xi];
        if !fx.is_click() {
            continue;
        }
        for (yi, y) in pair.labels_b.iter().enumerate() {
            if pair.g[yi] == fx {
                total += i64::from(alpha(x, y)?);
            }
        }
    }
    Ok(total as f64)
}

/// Bell value of a mixture: the weighted sum of its deterministic values.
pub fn model_bell_value(model: &LhvModel) -> Result<f64> {
    let mut total = 0.0;
    for (w, pair) in &model.strategies {
        total += w * lv_bell_value(pair)?;
    }
    Ok(total)
}

/// Presents an LHV model over the full label cube as a table provider, so the
/// generic Bell-expression engine can evaluate it.
pub struct ModelTableProvider<'a> {
    model: &'a LhvModel,
    d: usize,
    index_a: HashMap<BitString, usize>,
    index_b: HashMap<BitString, usize>,
}

impl<'a> ModelTableProvider<'a> {
    pub fn new(model: &'a LhvModel) -> Result<Self> {
        let d = model.labels_a()[0].len();
        let index = |labels: &Arc<[BitString]>| {
            labels
                .iter()
                .enumerate()
                .map(|(i, l)| (l.clone(), i))
                .collect::<HashMap<_, _>>()
        };
        Ok(ModelTableProvider {
            model,
            d,
            index_a: index(model.labels_a()),
            index_b: index(model.labels_b()),
        })
    }
}

impl TableProvider for ModelTableProvider<'_> {
    fn d(&self) -> usize {
        self.d
    }

    fn eta(&self) -> Option<f64> {
        None
    }

    fn table(&self, x: &BitString, y: &BitString) -> Result<JointTable> {
        let xi = *self
            .index_a
            .get(x)
            .ok_or_else(|| Error::invalid(format!("model not defined on label {x}")))?;
        let yi = *self
            .index_b
            .get(y)
            .ok_or_else(|| Error::invalid(format!("model not defined on label {y}")))?;
        Ok(self.model.table_by_index(xi, yi, self.d))
    }
}

// ---------------------------------------------------------------------------
// Alternating maximization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BestResponseOutcome {
    pub pair: StrategyPair,
    pub value: f64,
    /// Bell value after every half-step, for monotonicity checks.
    pub half_step_values: Vec<f64>,
}

/// Alternating per-label maximization of the deterministic Bell value on the
/// full d <= 4 domain, from a seeded random start.
///
/// Each half-step fixes one side and sets the other side's output per label
/// to the outcome with the largest inner alpha-sum; no-click is chosen only
/// when every outcome's sum is non-positive, and ties break toward the
/// smallest outcome index. The value is non-decreasing by construction.
pub fn best_response_maximize(d: usize, seed: u64, iterations: u32) -> Result<BestResponseOutcome> {
    let labels = full_domain(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = labels.len();
    let f: Vec<OutcomeIndex> = (0..n)
        .map(|_| OutcomeIndex(rng.gen_range(0..=d as u16)))
        .collect();
    let g: Vec<OutcomeIndex> = (0..n)
        .map(|_| OutcomeIndex(rng.gen_range(0..=d as u16)))
        .collect();
    best_response_from(labels, f, g, iterations)
}

/// Alternating maximization from an explicit starting pair.
pub fn best_response_from(
    labels: Arc<[BitString]>,
    mut f: Vec<OutcomeIndex>,
    mut g: Vec<OutcomeIndex>,
    iterations: u32,
) -> Result<BestResponseOutcome> {
    let d = labels[0].len();
    let n = labels.len();
    if f.len() != n || g.len() != n {
        return Err(Error::invalid("strategy tables must cover the domain"));
    }
    let alphas: Vec<Vec<i64>> = labels
        .iter()
        .map(|x| {
            labels
                .iter()
                .map(|y| i64::from(alpha(x, y).unwrap()))
                .collect()
        })
        .collect();

    let value_of = |f: &[OutcomeIndex], g: &[OutcomeIndex]| -> i64 {
        let mut total = 0;
        for xi in 0..n {
            if !f[xi].is_click() {
                continue;
            }
            for yi in 0..n {
                if g[yi] == f[xi] {
                    total += alphas[xi][yi];
                }
            }
        }
        total
    };

    // argmax over outcomes of the inner alpha-sum for one label, given the
    // other side's class assignment.
    let respond = |label: usize, other: &[OutcomeIndex], transpose: bool| -> OutcomeIndex {
        let mut best_k = 0u16;
        let mut best_sum = i64::MIN;
        for k in 1..=d as u16 {
            let mut sum = 0;
            for (oi, &o) in other.iter().enumerate() {
                if o == OutcomeIndex(k) {
                    sum += if transpose {
                        alphas[oi][label]
                    } else {
                        alphas[label][oi]
                    };
                }
            }
            if sum > best_sum {
                best_sum = sum;
                best_k = k;
            }
        }
        if best_sum <= 0 {
            OutcomeIndex::NO_CLICK
        } else {
            OutcomeIndex(best_k)
        }
    };

    let mut trace = vec![value_of(&f, &g) as f64];
    for _ in 0..iterations {
        for xi in 0..n {
            f[xi] = respond(xi, &g, false);
        }
        trace.push(value_of(&f, &g) as f64);
        for yi in 0..n {
            g[yi] = respond(yi, &f, true);
        }
        trace.push(value_of(&f, &g) as f64);
        let len = trace.len();
        if len >= 3 && trace[len - 1] == trace[len - 3] {
            break;
        }
    }
    let value = *trace.last().unwrap();
    Ok(BestResponseOutcome {
        pair: StrategyPair::new(labels.clone(), labels, f, g)?,
        value,
        half_step_values: trace,
    })
}

// ---------------------------------------------------------------------------
// Beta-sum lemma
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BetaLemma {
    pub beta: i64,
    pub lemma_holds: bool,
}

/// beta(x) = sum over y in Y of alpha(x, y), with the certified claims that
/// beta <= 1 always, and beta <= 0 whenever x falls outside a maximum
/// avoidance subset of Y united with {x}.
///
/// When beta <= 0 the implication is vacuous, so the exact search only runs
/// for beta = 1, where a maximum subset excluding x would be a
/// counterexample.
pub fn beta_lemma_check(x: &BitString, ys: &[BitString], budget: u64) -> Result<BetaLemma> {
    let d = x.len();
    if d % 2 != 0 {
        return Err(Error::invalid("the beta-sum lemma needs even d"));
    }
    let unique: Vec<BitString> = {
        let mut seen = HashSet::new();
        ys.iter()
            .filter(|y| seen.insert((*y).clone()))
            .cloned()
            .collect()
    };
    let mut beta: i64 = 0;
    for y in &unique {
        beta += i64::from(alpha(x, y)?);
    }
    let mut lemma_holds = beta <= 1;
    if lemma_holds && beta == 1 {
        let mut ground = unique;
        if !ground.contains(x) {
            ground.push(x.clone());
        }
        let max_subset = max_avoidance_subset(&ground, d, budget)?;
        if !max_subset.members.contains(x) {
            lemma_holds = false;
        }
    }
    Ok(BetaLemma { beta, lemma_holds })
}

// ---------------------------------------------------------------------------
// Selection sets
// ---------------------------------------------------------------------------

/// For one strategy pair and outcome k: the labels mapped to k by each side,
/// and a certified maximum avoidance subset of their intersection. The sum of
/// |Z_k| over k dominates the pair's Bell value.
#[derive(Debug, Clone)]
pub struct SelectionSets {
    pub outcome: OutcomeIndex,
    pub x_set: Vec<BitString>,
    pub y_set: Vec<BitString>,
    pub z_set: AvoidanceSet,
}

pub fn selection_sets(pair: &StrategyPair, k: OutcomeIndex, budget: u64) -> Result<SelectionSets> {
    if !k.is_click() {
        return Err(Error::invalid("selection sets are defined for click outcomes"));
    }
    let d = pair.labels_a[0].len();
    let x_set: Vec<BitString> = pair
        .labels_a
        .iter()
        .zip(&pair.f)
        .filter(|(_, &o)| o == k)
        .map(|(l, _)| l.clone())
        .collect();
    let y_set: Vec<BitString> = pair
        .labels_b
        .iter()
        .zip(&pair.g)
        .filter(|(_, &o)| o == k)
        .map(|(l, _)| l.clone())
        .collect();
    let y_index: HashSet<&BitString> = y_set.iter().collect();
    let ground: Vec<BitString> = x_set
        .iter()
        .filter(|x| y_index.contains(x))
        .cloned()
        .collect();
    let z_set = max_avoidance_subset(&ground, d, budget)?;
    Ok(SelectionSets {
        outcome: k,
        x_set,
        y_set,
        z_set,
    })
}

// ---------------------------------------------------------------------------
// The 1/M quadruple model
// ---------------------------------------------------------------------------

/// The local model whose hidden variable is a quadruple (x, i, y, j) drawn
/// with probability P(i, j | x, y) / M^2: each party clicks exactly when its
/// actual label matches the quadruple, and then outputs the recorded outcome.
/// Reproduces the detector-model distribution exactly at eta = 1/M.
pub fn popescu_model(
    labels_a: &[BitString],
    labels_b: &[BitString],
    s: &Scenario,
) -> Result<(LhvModel, f64)> {
    let m = labels_a.len();
    if m == 0 {
        return Err(Error::invalid("need at least one measurement label"));
    }
    if labels_b.len() != m {
        return Err(Error::invalid(
            "the quadruple model needs equally many labels per party",
        ));
    }
    let d = s.d();
    let perfect = EfficiencyModel::new(1.0)?;
    let arc_a: Arc<[BitString]> = labels_a.to_vec().into();
    let arc_b: Arc<[BitString]> = labels_b.to_vec().into();
    let mut strategies = Vec::new();
    let base_weight = 1.0 / (m * m) as f64;
    for (xi, x) in labels_a.iter().enumerate() {
        for (yi, y) in labels_b.iter().enumerate() {
            let table = s.outcome_table(x, y, perfect)?;
            for i in 1..=d {
                for j in 1..=d {
                    let p = table.get(i, j);
                    if p == 0.0 {
                        continue;
                    }
                    let mut f = vec![OutcomeIndex::NO_CLICK; m];
                    let mut g = vec![OutcomeIndex::NO_CLICK; m];
                    f[xi] = OutcomeIndex(i as u16);
                    g[yi] = OutcomeIndex(j as u16);
                    strategies.push((
                        base_weight * p,
                        StrategyPair::new(arc_a.clone(), arc_b.clone(), f, g)?,
                    ));
                }
            }
        }
    }
    Ok((LhvModel::new(strategies)?, 1.0 / m as f64))
}

/// Max deviation between the model's joint probabilities and the detector
/// model's, over every label pair and outcome pair.
pub fn verify_model_reproduces(
    model: &LhvModel,
    s: &Scenario,
    em: EfficiencyModel,
) -> Result<f64> {
    let d = s.d();
    let mut worst = 0.0f64;
    for (xi, x) in model.labels_a().iter().enumerate() {
        for (yi, y) in model.labels_b().iter().enumerate() {
            let target = s.outcome_table(x, y, em)?;
            let got = model.table_by_index(xi, yi, d);
            for (a, b) in got.cells().iter().zip(target.cells()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::avoidance::{max_z_exact, ExactSearchConfig};
    use crate::bell::bell_value_from_table;
    use approx::assert_abs_diff_eq;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn lv_value_examples() {
        let labels = full_domain(4).unwrap();
        let never = StrategyPair::constant(labels.clone(), labels.clone(), 0);
        assert_eq!(lv_bell_value(&never).unwrap(), 0.0);

        // Always outcome 1: every x has one partner at distance 0 and
        // C(4,2) = 6 partners at distance 2, so the value is 16 (1 - 6).
        let always = StrategyPair::constant(labels.clone(), labels.clone(), 1);
        assert_eq!(lv_bell_value(&always).unwrap(), -80.0);

        // Outcome 1 exactly on an avoidance set: only its diagonal remains.
        let z = max_z_exact(4, &ExactSearchConfig::default()).unwrap();
        let f: Vec<OutcomeIndex> = labels
            .iter()
            .map(|l| {
                if z.members.contains(l) {
                    OutcomeIndex(1)
                } else {
                    OutcomeIndex::NO_CLICK
                }
            })
            .collect();
        let pair = StrategyPair::new(labels.clone(), labels.clone(), f.clone(), f).unwrap();
        assert_eq!(lv_bell_value(&pair).unwrap(), z.size() as f64);
    }

    /// Independent route: group labels by outcome (the selection sets) and
    /// sum alpha over the class products, as the decomposition prescribes.
    #[test]
    fn lv_value_matches_class_decomposition() {
        let labels = full_domain(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let f: Vec<OutcomeIndex> =
                (0..16).map(|_| OutcomeIndex(rng.gen_range(0..=4))).collect();
            let g: Vec<OutcomeIndex> =
                (0..16).map(|_| OutcomeIndex(rng.gen_range(0..=4))).collect();
            let pair =
                StrategyPair::new(labels.clone(), labels.clone(), f.clone(), g.clone()).unwrap();
            let mut by_class = 0i64;
            for k in 1..=4u16 {
                for (xi, x) in labels.iter().enumerate() {
                    if f[xi] != OutcomeIndex(k) {
                        continue;
                    }
                    for (yi, y) in labels.iter().enumerate() {
                        if g[yi] == OutcomeIndex(k) {
                            by_class += i64::from(alpha(x, y).unwrap());
                        }
                    }
                }
            }
            assert_eq!(lv_bell_value(&pair).unwrap(), by_class as f64);
        }
    }

    #[test]
    fn best_response_is_monotone_and_bounded() {
        let z = max_z_exact(4, &ExactSearchConfig::default()).unwrap();
        let bound = 4.0 * z.size() as f64;
        for seed in 0..20 {
            let out = best_response_maximize(4, seed, 30).unwrap();
            for w in out.half_step_values.windows(2) {
                assert!(w[1] >= w[0], "value decreased: {:?}", out.half_step_values);
            }
            assert!(out.value <= bound);
            assert_eq!(out.value, *out.half_step_values.last().unwrap());
        }
    }

    #[test]
    fn best_response_from_constant_one() {
        let labels = full_domain(4).unwrap();
        let f = vec![OutcomeIndex(1); 16];
        let out = best_response_from(labels, f.clone(), f, 10).unwrap();
        assert_eq!(out.half_step_values[0], -80.0);
        assert!(out.half_step_values[1] >= -80.0);
        assert!(out.value <= 16.0);
    }

    #[test]
    fn beta_examples() {
        let x = bs("0110");
        let r = beta_lemma_check(&x, std::slice::from_ref(&x), 1 << 20).unwrap();
        assert_eq!(r.beta, 1);
        assert!(r.lemma_holds);

        // All six labels at distance 2 from x.
        let ring: Vec<BitString> = (0..16u64)
            .map(|v| BitString::from_index(v, 4))
            .filter(|y| crate::bits::hamming(&x, y).unwrap() == 2)
            .collect();
        assert_eq!(ring.len(), 6);
        let r = beta_lemma_check(&x, &ring, 1 << 20).unwrap();
        assert_eq!(r.beta, -6);
        assert!(r.lemma_holds);
    }

    #[test]
    fn beta_lemma_random_instances() {
        let labels = full_domain(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x = labels[rng.gen_range(0..16)].clone();
            let size = rng.gen_range(0..=10);
            let ys: Vec<BitString> = (0..size)
                .map(|_| labels[rng.gen_range(0..16)].clone())
                .collect();
            let r = beta_lemma_check(&x, &ys, 1 << 20).unwrap();
            assert!(r.lemma_holds, "x = {x}, ys = {ys:?}");
        }
    }

    #[test]
    fn selection_sets_dominate_value() {
        let labels = full_domain(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..30 {
            let f: Vec<OutcomeIndex> =
                (0..16).map(|_| OutcomeIndex(rng.gen_range(0..=4))).collect();
            let g: Vec<OutcomeIndex> =
                (0..16).map(|_| OutcomeIndex(rng.gen_range(0..=4))).collect();
            let pair = StrategyPair::new(labels.clone(), labels.clone(), f, g).unwrap();
            let mut z_total = 0usize;
            for k in 1..=4u16 {
                let sel = selection_sets(&pair, OutcomeIndex(k), 1 << 22).unwrap();
                assert!(crate::avoidance::verify_avoidance(&sel.z_set));
                z_total += sel.z_set.size();
            }
            assert!(lv_bell_value(&pair).unwrap() <= z_total as f64);
        }
    }

    #[test]
    fn quadruple_model_reproduces_detector_statistics() {
        let s = Scenario::bct(2).unwrap();
        let labels: Vec<BitString> = (0..4).map(|v| BitString::from_index(v, 4)).collect();
        let (model, eta) = popescu_model(&labels, &labels, &s).unwrap();
        assert_eq!(eta, 0.25);
        // Double non-detection cell is (1 - 1/M)^2.
        let t = model.table_by_index(0, 0, 4);
        assert_abs_diff_eq!(t.get(0, 0), 0.5625, epsilon = 1e-15);
        let dev =
            verify_model_reproduces(&model, &s, EfficiencyModel::new(eta).unwrap()).unwrap();
        assert!(dev <= 1e-12, "deviation {dev}");
        // Checking against the wrong efficiency must fail loudly.
        let wrong =
            verify_model_reproduces(&model, &s, EfficiencyModel::new(1.0).unwrap()).unwrap();
        assert!(wrong >= 0.5625 - 1e-12);
    }

    #[test]
    fn quadruple_model_single_setting() {
        let s = Scenario::bct(2).unwrap();
        let labels = vec![BitString::from_index(9, 4)];
        let (model, eta) = popescu_model(&labels, &labels, &s).unwrap();
        assert_eq!(eta, 1.0);
        let dev = verify_model_reproduces(&model, &s, EfficiencyModel::new(1.0).unwrap()).unwrap();
        assert!(dev <= 1e-12);
        assert!(popescu_model(&[], &[], &s).is_err());
    }

    #[test]
    fn no_click_model_matches_dead_detectors() {
        let labels = full_domain(4).unwrap();
        let pair = StrategyPair::constant(labels.clone(), labels, 0);
        let model = LhvModel::new(vec![(1.0, pair)]).unwrap();
        let s = Scenario::bct(2).unwrap();
        let dev = verify_model_reproduces(&model, &s, EfficiencyModel::new(0.0).unwrap()).unwrap();
        assert_eq!(dev, 0.0);
    }

    /// The mixture value equals the weighted sum of deterministic values, and
    /// both agree with the table-based engine.
    #[test]
    fn mixture_value_equivalence() {
        let labels = full_domain(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let mut strategies = Vec::new();
            let k = rng.gen_range(2..6);
            let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            for w in raw {
                let f: Vec<OutcomeIndex> =
                    (0..16).map(|_| OutcomeIndex(rng.gen_range(0..=4))).collect();
                let g: Vec<OutcomeIndex> =
                    (0..16).map(|_| OutcomeIndex(rng.gen_range(0..=4))).collect();
                strategies.push((
                    w / total,
                    StrategyPair::new(labels.clone(), labels.clone(), f, g).unwrap(),
                ));
            }
            let model = LhvModel::new(strategies).unwrap();
            let direct = model_bell_value(&model).unwrap();
            let weighted: f64 = model
                .strategies
                .iter()
                .map(|(w, p)| w * lv_bell_value(p).unwrap())
                .sum();
            assert_abs_diff_eq!(direct, weighted, epsilon = 1e-10);
            let provider = ModelTableProvider::new(&model).unwrap();
            let via_tables = bell_value_from_table(&provider).unwrap().raw.unwrap();
            assert_abs_diff_eq!(direct, via_tables, epsilon = 1e-10);
        }
    }

    #[test]
    fn model_validation_rejects_bad_weights() {
        let labels = full_domain(2).unwrap();
        let pair = StrategyPair::constant(labels.clone(), labels, 1);
        assert!(LhvModel::new(vec![(0.5, pair.clone())]).is_err());
        assert!(LhvModel::new(vec![(-0.25, pair.clone()), (1.25, pair)]).is_err());
    }
}
