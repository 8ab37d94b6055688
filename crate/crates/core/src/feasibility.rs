//! Classical simulability as a linear program: is the detector-model
//! distribution a convex mixture of deterministic strategy pairs?
//!
//! The LP has one column per strategy pair (f, g) and one equality row per
//! (label pair, outcome pair) cell. Columns are never materialized; they are
//! decoded from the pair index on demand. Two exact preprocessing steps keep
//! the instances small: rows whose target probability is zero force every
//! column touching them to zero (coefficients are 0/1 and weights are
//! nonnegative), so those columns are dropped and the zero rows removed.

use std::sync::Arc;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::lhv::{LhvModel, StrategyPair};
use crate::scenario::{EfficiencyModel, OutcomeIndex, Scenario};
use crate::simplex::{phase_one_feasibility, ColumnSource, SimplexConfig};

#[derive(Debug, Clone)]
pub struct FeasibilityConfig {
    /// Cap on the number of strategy pairs (LP columns before filtering).
    pub strategy_cap: u128,
    pub simplex: SimplexConfig,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        FeasibilityConfig {
            strategy_cap: 1_000_000,
            simplex: SimplexConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityResult {
    pub eta: f64,
    pub feasible: bool,
    /// Max deviation of the certificate from the target distribution when
    /// feasible; the leftover artificial mass when infeasible.
    pub residual: f64,
    /// Total number of enumerated strategy pairs.
    pub strategy_count: u128,
    pub certificate: Option<LhvModel>,
}

struct Instance<'a> {
    d: usize,
    labels_a: &'a [BitString],
    labels_b: &'a [BitString],
    /// Outcome digits per f index (row-major: f_idx * nA + label position).
    f_digits: Vec<u16>,
    g_digits: Vec<u16>,
    g_count: usize,
    /// Surviving pair indices, ascending.
    survivors: Vec<usize>,
    /// Full row id -> compact row id for rows with positive rhs.
    row_map: Vec<Option<usize>>,
    rhs: Vec<f64>,
}

impl Instance<'_> {
    fn full_row(&self, xi: usize, yi: usize, a: usize, b: usize) -> usize {
        ((xi * self.labels_b.len() + yi) * (self.d + 1) + a) * (self.d + 1) + b
    }
}

impl ColumnSource for Instance<'_> {
    fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    fn num_cols(&self) -> usize {
        self.survivors.len()
    }

    fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    fn column(&self, j: usize, out: &mut Vec<(usize, f64)>) {
        let pair = self.survivors[j];
        let (fi, gi) = (pair / self.g_count, pair % self.g_count);
        let na = self.labels_a.len();
        let nb = self.labels_b.len();
        for xi in 0..na {
            let a = self.f_digits[fi * na + xi] as usize;
            for yi in 0..nb {
                let b = self.g_digits[gi * nb + yi] as usize;
                let row = self.row_map[self.full_row(xi, yi, a, b)]
                    .expect("surviving columns never touch dropped rows");
                out.push((row, 1.0));
            }
        }
    }
}

/// All outcome assignments over `labels`, enumerated with the first label as
/// the most significant digit so index order is lexicographic in
/// (f(label_0), f(label_1), ...) with outcomes 0..=d.
fn enumerate_digits(count: usize, n_labels: usize, base: usize) -> Vec<u16> {
    let mut digits = vec![0u16; count * n_labels];
    for idx in 0..count {
        let mut rest = idx;
        for pos in (0..n_labels).rev() {
            digits[idx * n_labels + pos] = (rest % base) as u16;
            rest /= base;
        }
    }
    digits
}

fn build_instance<'a>(
    s: &Scenario,
    labels_a: &'a [BitString],
    labels_b: &'a [BitString],
    em: EfficiencyModel,
    cfg: &FeasibilityConfig,
) -> Result<(Instance<'a>, u128)> {
    if labels_a.is_empty() || labels_b.is_empty() {
        return Err(Error::invalid("need at least one label per party"));
    }
    let d = s.d();
    let base = (d + 1) as u128;
    let f_count = base.checked_pow(labels_a.len() as u32);
    let g_count = base.checked_pow(labels_b.len() as u32);
    let total = f_count
        .zip(g_count)
        .and_then(|(f, g)| f.checked_mul(g))
        .ok_or(Error::CapExceeded {
            actual: u128::MAX,
            cap: cfg.strategy_cap,
        })?;
    if total > cfg.strategy_cap {
        return Err(Error::CapExceeded {
            actual: total,
            cap: cfg.strategy_cap,
        });
    }
    let f_count = f_count.unwrap() as usize;
    let g_count = g_count.unwrap() as usize;

    let na = labels_a.len();
    let nb = labels_b.len();
    let full_rows = na * nb * (d + 1) * (d + 1);
    let mut rhs_full = vec![0.0; full_rows];
    for (xi, x) in labels_a.iter().enumerate() {
        for (yi, y) in labels_b.iter().enumerate() {
            let t = s.outcome_table(x, y, em)?;
            t.validate()?;
            for a in 0..=d {
                for b in 0..=d {
                    let row = ((xi * nb + yi) * (d + 1) + a) * (d + 1) + b;
                    rhs_full[row] = t.get(a, b);
                }
            }
        }
    }

    let f_digits = enumerate_digits(f_count, na, d + 1);
    let g_digits = enumerate_digits(g_count, nb, d + 1);

    // A pair survives only if every cell it produces has positive target
    // probability; otherwise any feasible solution gives it weight zero.
    let mut survivors = Vec::new();
    'pairs: for pair in 0..f_count * g_count {
        let (fi, gi) = (pair / g_count, pair % g_count);
        for xi in 0..na {
            let a = f_digits[fi * na + xi] as usize;
            for yi in 0..nb {
                let b = g_digits[gi * nb + yi] as usize;
                let row = ((xi * nb + yi) * (d + 1) + a) * (d + 1) + b;
                if rhs_full[row] == 0.0 {
                    continue 'pairs;
                }
            }
        }
        survivors.push(pair);
    }

    let mut row_map = vec![None; full_rows];
    let mut rhs = Vec::new();
    for (row, &v) in rhs_full.iter().enumerate() {
        if v > 0.0 {
            row_map[row] = Some(rhs.len());
            rhs.push(v);
        }
    }

    Ok((
        Instance {
            d,
            labels_a,
            labels_b,
            f_digits,
            g_digits,
            g_count,
            survivors,
            row_map,
            rhs,
        },
        total,
    ))
}

/// LP feasibility of the detector-model distribution over deterministic
/// strategy pairs. Feasible results carry a certificate model, re-verified
/// against the target distribution cell by cell.
pub fn local_feasibility_lp(
    s: &Scenario,
    labels_a: &[BitString],
    labels_b: &[BitString],
    em: EfficiencyModel,
    cfg: &FeasibilityConfig,
) -> Result<FeasibilityResult> {
    let (instance, strategy_count) = build_instance(s, labels_a, labels_b, em, cfg)?;
    let solution = phase_one_feasibility(&instance, &cfg.simplex)?;
    if !solution.feasible {
        return Ok(FeasibilityResult {
            eta: em.eta(),
            feasible: false,
            residual: solution.objective,
            strategy_count,
            certificate: None,
        });
    }

    let arc_a: Arc<[BitString]> = labels_a.to_vec().into();
    let arc_b: Arc<[BitString]> = labels_b.to_vec().into();
    let na = labels_a.len();
    let nb = labels_b.len();
    let total_weight: f64 = solution.weights.iter().map(|(_, w)| w).sum();
    if total_weight <= 0.0 {
        return Err(Error::SolverFailure {
            message: "feasible solution with zero total weight".into(),
            residual: solution.objective,
        });
    }
    let mut strategies = Vec::with_capacity(solution.weights.len());
    for &(col, w) in &solution.weights {
        if w < 1e-12 {
            continue; // numerically zero basic variable
        }
        let pair = instance.survivors[col];
        let (fi, gi) = (pair / instance.g_count, pair % instance.g_count);
        let f: Vec<OutcomeIndex> = (0..na)
            .map(|xi| OutcomeIndex(instance.f_digits[fi * na + xi]))
            .collect();
        let g: Vec<OutcomeIndex> = (0..nb)
            .map(|yi| OutcomeIndex(instance.g_digits[gi * nb + yi]))
            .collect();
        strategies.push((
            w / total_weight,
            StrategyPair::new(arc_a.clone(), arc_b.clone(), f, g)?,
        ));
    }
    let certificate = LhvModel::new(strategies)?;
    let residual = crate::lhv::verify_model_reproduces(&certificate, s, em)?;
    if residual > cfg.simplex.feas_tol {
        return Err(Error::SolverFailure {
            message: "certificate fails re-verification".into(),
            residual,
        });
    }
    Ok(FeasibilityResult {
        eta: em.eta(),
        feasible: true,
        residual,
        strategy_count,
        certificate: Some(certificate),
    })
}

#[derive(Debug, Clone)]
pub struct EtaStarResult {
    /// Midpoint of the final bracket.
    pub eta_star: f64,
    /// True when the distribution is classically simulable even at eta = 1,
    /// so there is no violation at any efficiency.
    pub no_violation: bool,
    pub lp_calls: u32,
}

/// Bisects the critical efficiency: the LP is feasible below eta* and
/// infeasible above. Downward monotonicity holds because each party can
/// independently blur clicks into non-detections to lower its rate.
pub fn eta_star_bisection(
    s: &Scenario,
    labels_a: &[BitString],
    labels_b: &[BitString],
    tol: f64,
    cfg: &FeasibilityConfig,
) -> Result<EtaStarResult> {
    if tol <= 0.0 {
        return Err(Error::invalid("bisection tolerance must be positive"));
    }
    let mut lp_calls = 1u32;
    let at_one = local_feasibility_lp(s, labels_a, labels_b, EfficiencyModel::new(1.0)?, cfg)?;
    if at_one.feasible {
        return Ok(EtaStarResult {
            eta_star: 1.0,
            no_violation: true,
            lp_calls,
        });
    }
    // eta = 0 is always simulable: both sides answer "no click".
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        lp_calls += 1;
        let r = local_feasibility_lp(s, labels_a, labels_b, EfficiencyModel::new(mid)?, cfg)?;
        if r.feasible {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EtaStarResult {
        eta_star: 0.5 * (lo + hi),
        no_violation: false,
        lp_calls,
    })
}
