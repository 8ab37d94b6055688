//! Subsets of {0,1}^d with no pair at Hamming distance d/2, and the detector
//! efficiency thresholds they imply.
//!
//! The size of the largest such set bounds what any local-variable model can
//! score on the Bell expression, so this module is the combinatorial half of
//! the threshold analysis: an exact branch-and-bound maximizer for small d, a
//! randomized greedy for witnesses at large d, and closed-form threshold
//! curves consuming the 2^{0.993 d} bound.

use std::collections::HashSet;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{hamming, BitString};
use crate::error::{Error, Result};
use crate::numeric::derive_seed;

/// A set of d-bit strings with no two members at Hamming distance d/2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AvoidanceSet {
    pub d: usize,
    pub members: Vec<BitString>,
    /// True when the set is a certified exact maximum for its ground set,
    /// false for heuristic witnesses.
    pub certified: bool,
}

impl AvoidanceSet {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Checks every invariant: even positive d, members of length d, all
/// distinct, and no pair at distance d/2. This is the oracle the search
/// routines are tested against.
pub fn verify_avoidance(set: &AvoidanceSet) -> bool {
    if set.d == 0 || set.d % 2 != 0 {
        return false;
    }
    if set.members.iter().any(|m| m.len() != set.d) {
        return false;
    }
    let distinct: HashSet<&BitString> = set.members.iter().collect();
    if distinct.len() != set.members.len() {
        return false;
    }
    let forbidden = (set.d / 2) as u32;
    for (i, a) in set.members.iter().enumerate() {
        for b in &set.members[i + 1..] {
            if hamming(a, b).expect("equal lengths") == forbidden {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone)]
pub struct ExactSearchConfig {
    /// Largest d for which the full-cube exact search may run.
    pub d_cap: usize,
    /// Node-expansion budget for the branch and bound.
    pub budget: u64,
    /// Fix 0^d into the set before searching the full cube. Sound because the
    /// conflict graph is invariant under XOR translation, so some maximum set
    /// contains 0^d. Off by default; the oracle tests run without it.
    pub assume_zero_member: bool,
}

impl Default for ExactSearchConfig {
    fn default() -> Self {
        ExactSearchConfig {
            d_cap: 12,
            budget: 50_000_000,
            assume_zero_member: false,
        }
    }
}

/// Exact maximum avoidance subset of the full cube {0,1}^d.
///
/// For d <= 4 the result is additionally cross-checked against full subset
/// enumeration before it is returned.
pub fn max_z_exact(d: usize, cfg: &ExactSearchConfig) -> Result<AvoidanceSet> {
    check_even(d)?;
    if d > cfg.d_cap {
        return Err(Error::invalid(format!(
            "exact search is capped at d = {} (asked for d = {d})",
            cfg.d_cap
        )));
    }
    let ground: Vec<BitString> = (0..1u64 << d).map(|v| BitString::from_index(v, d)).collect();
    let force = cfg.assume_zero_member.then_some(0);
    let set = exact_on_ground(&ground, d, cfg.budget, force)?;
    if d <= 4 {
        let oracle = brute_force_max_avoidance(d)?;
        if oracle.size() != set.size() {
            return Err(Error::validation(format!(
                "branch-and-bound size {} disagrees with subset enumeration {}",
                set.size(),
                oracle.size()
            )));
        }
    }
    Ok(set)
}

/// Exact maximum avoidance subset of an arbitrary ground set (all strings of
/// length d). Used by the selection-set machinery and the beta-sum lemma.
pub fn max_avoidance_subset(ground: &[BitString], d: usize, budget: u64) -> Result<AvoidanceSet> {
    check_even(d)?;
    for g in ground {
        if g.len() != d {
            return Err(Error::invalid("ground member length mismatch"));
        }
    }
    exact_on_ground(ground, d, budget, None)
}

fn check_even(d: usize) -> Result<()> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::invalid(format!(
            "the forbidden distance d/2 needs even d, got {d}"
        )));
    }
    Ok(())
}

/// Reference maximizer by enumeration of all subsets; only feasible for
/// d <= 4 (2^16 subsets).
pub fn brute_force_max_avoidance(d: usize) -> Result<AvoidanceSet> {
    check_even(d)?;
    if d > 4 {
        return Err(Error::invalid(
            "subset enumeration is only feasible for d <= 4",
        ));
    }
    let n = 1usize << d;
    let forbidden = (d / 2) as u32;
    let conflict: Vec<u32> = (0..n)
        .map(|v| {
            let mut mask = 0u32;
            for u in 0..n {
                if u != v && ((u ^ v) as u32).count_ones() == forbidden {
                    mask |= 1 << u;
                }
            }
            mask
        })
        .collect();
    let mut best_mask = 0u32;
    let mut best_size = 0;
    let total: u64 = 1u64 << n;
    for mask in 0..total {
        let mask = mask as u32;
        if (mask.count_ones() as usize) <= best_size {
            continue;
        }
        let mut ok = true;
        let mut rest = mask;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if mask & conflict[v] != 0 {
                ok = false;
                break;
            }
        }
        if ok {
            best_size = mask.count_ones() as usize;
            best_mask = mask;
        }
    }
    let members = (0..n)
        .filter(|v| best_mask >> v & 1 == 1)
        .map(|v| BitString::from_index(v as u64, d))
        .collect();
    Ok(AvoidanceSet {
        d,
        members,
        certified: true,
    })
}

// ---------------------------------------------------------------------------
// Branch and bound
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct VertexSet {
    words: Vec<u64>,
}

impl VertexSet {
    fn empty(n: usize) -> Self {
        VertexSet {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for i in 0..n {
            s.insert(i);
        }
        s
    }

    fn insert(&mut self, v: usize) {
        self.words[v / 64] |= 1 << (v % 64);
    }

    fn remove(&mut self, v: usize) {
        self.words[v / 64] &= !(1 << (v % 64));
    }

    fn contains(&self, v: usize) -> bool {
        self.words[v / 64] >> (v % 64) & 1 == 1
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn and_not(&self, other: &VertexSet) -> VertexSet {
        VertexSet {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & !b)
                .collect(),
        }
    }

    fn intersect_with(&mut self, other: &VertexSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }
}

struct Searcher<'a> {
    conflict: &'a [VertexSet],
    budget: u64,
    nodes: u64,
    best: Vec<usize>,
}

impl Searcher<'_> {
    /// Extends `cur` by vertices from `cand`, maintaining the incumbent.
    /// Returns Err(()) when the node budget runs out.
    fn expand(&mut self, cur: &mut Vec<usize>, cand: &VertexSet) -> std::result::Result<(), ()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(());
        }
        if cand.is_empty() {
            if cur.len() > self.best.len() {
                self.best = cur.clone();
            }
            return Ok(());
        }

        // Clique-cover bound: partition the candidates into classes whose
        // members pairwise conflict; an avoidance set takes at most one
        // vertex per class. color[v] = index of v's class + 1, so any
        // extension through v adds at most color[v] vertices.
        let mut class_common: Vec<VertexSet> = Vec::new();
        let mut ordered: Vec<(usize, usize)> = Vec::new(); // (vertex, color)
        for v in cand.iter() {
            let mut placed = false;
            for (ci, common) in class_common.iter_mut().enumerate() {
                if common.contains(v) {
                    common.intersect_with(&self.conflict[v]);
                    ordered.push((v, ci + 1));
                    placed = true;
                    break;
                }
            }
            if !placed {
                class_common.push(self.conflict[v].clone());
                ordered.push((v, class_common.len()));
            }
        }
        ordered.sort_by_key(|&(_, color)| color);

        let mut live = cand.clone();
        for &(v, color) in ordered.iter().rev() {
            if cur.len() + color <= self.best.len() {
                return Ok(());
            }
            cur.push(v);
            let mut child = live.and_not(&self.conflict[v]);
            child.remove(v);
            self.expand(cur, &child)?;
            cur.pop();
            live.remove(v);
        }
        Ok(())
    }
}

fn exact_on_ground(
    ground: &[BitString],
    d: usize,
    budget: u64,
    force_include: Option<usize>,
) -> Result<AvoidanceSet> {
    let n = ground.len();
    if n == 0 {
        return Ok(AvoidanceSet {
            d,
            members: vec![],
            certified: true,
        });
    }
    let forbidden = (d / 2) as u32;

    // Conflict adjacency and degrees on the original ids.
    let mut degree = vec![0usize; n];
    let mut conflicts: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if hamming(&ground[i], &ground[j]).expect("checked") == forbidden {
                conflicts[i].push(j);
                conflicts[j].push(i);
                degree[i] += 1;
                degree[j] += 1;
            }
        }
    }

    // Static order: descending conflict degree (most constrained first).
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| degree[b].cmp(&degree[a]).then(a.cmp(&b)));
    let mut position = vec![0usize; n];
    for (pos, &orig) in order.iter().enumerate() {
        position[orig] = pos;
    }
    let mut conflict_sets: Vec<VertexSet> = vec![VertexSet::empty(n); n];
    for (orig, adj) in conflicts.iter().enumerate() {
        for &other in adj {
            conflict_sets[position[orig]].insert(position[other]);
        }
    }

    // First incumbent from the randomized greedy (fixed seed, a few
    // restarts), expressed in reordered ids.
    let greedy_members = greedy_on_ground(ground, d, 0, 8);
    let mut searcher = Searcher {
        conflict: &conflict_sets,
        budget,
        nodes: 0,
        best: greedy_members.iter().map(|&v| position[v]).collect(),
    };

    let mut cur = Vec::new();
    let mut cand = VertexSet::full(n);
    if let Some(orig) = force_include {
        let v = position[orig];
        cur.push(v);
        cand = cand.and_not(&conflict_sets[v]);
        cand.remove(v);
    }
    let exhausted = searcher.expand(&mut cur, &cand).is_err();

    let members: Vec<BitString> = searcher
        .best
        .iter()
        .map(|&pos| ground[order[pos]].clone())
        .collect();
    let set = AvoidanceSet {
        d,
        members,
        certified: !exhausted,
    };
    debug_assert!(verify_avoidance(&set));
    if exhausted {
        return Err(Error::BudgetExhausted {
            nodes: searcher.nodes,
            best: set,
        });
    }
    Ok(set)
}

// ---------------------------------------------------------------------------
// Randomized greedy
// ---------------------------------------------------------------------------

fn greedy_pass(ground: &[BitString], d: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let forbidden = (d / 2) as u32;
    let mut order: Vec<usize> = (0..ground.len()).collect();
    order.shuffle(rng);
    let mut chosen: Vec<usize> = Vec::new();
    'outer: for v in order {
        for &u in &chosen {
            let dist = hamming(&ground[v], &ground[u]).expect("equal lengths");
            if dist == forbidden || dist == 0 {
                continue 'outer;
            }
        }
        chosen.push(v);
    }
    chosen
}

fn greedy_on_ground(ground: &[BitString], d: usize, seed: u64, restarts: u64) -> Vec<usize> {
    let restarts = restarts.max(1);
    let mut best: Vec<usize> = Vec::new();
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r));
        let found = greedy_pass(ground, d, &mut rng);
        if found.len() > best.len() {
            best = found;
        }
    }
    best
}

/// Heuristic avoidance set on the full cube. Enumerates and shuffles the
/// cube for d <= 16; samples random strings above that. Restart r uses the
/// seed derived from (seed, r), so more restarts can only improve the best.
pub fn z_greedy(d: usize, seed: u64, restarts: u64) -> Result<AvoidanceSet> {
    check_even(d)?;
    let restarts = restarts.max(1);
    if d <= 16 {
        let ground: Vec<BitString> =
            (0..1u64 << d).map(|v| BitString::from_index(v, d)).collect();
        let chosen = greedy_on_ground(&ground, d, seed, restarts);
        let set = AvoidanceSet {
            d,
            members: chosen.into_iter().map(|v| ground[v].clone()).collect(),
            certified: false,
        };
        debug_assert!(verify_avoidance(&set));
        return Ok(set);
    }
    const ATTEMPTS: u64 = 20_000;
    let forbidden = (d / 2) as u32;
    let mut best: Vec<BitString> = Vec::new();
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r));
        let mut chosen: Vec<BitString> = Vec::new();
        'attempt: for _ in 0..ATTEMPTS {
            let cand = BitString::random(d, &mut rng);
            for u in &chosen {
                let dist = hamming(&cand, u).expect("equal lengths");
                if dist == forbidden || dist == 0 {
                    continue 'attempt;
                }
            }
            chosen.push(cand);
        }
        if chosen.len() > best.len() {
            best = chosen;
        }
    }
    let set = AvoidanceSet {
        d,
        members: best,
        certified: false,
    };
    debug_assert!(verify_avoidance(&set));
    Ok(set)
}

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

/// Where the |Z| value feeding a threshold came from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZSizeUsed {
    Exact(u64),
    Greedy(u64),
    /// log2 |Z| from the 2^{0.993 d} combinatorial bound.
    FrBoundLog2(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub d: usize,
    pub z_size: ZSizeUsed,
    /// sqrt(d |Z| / 2^d) for the chosen |Z| source, in log domain for large d.
    pub eta_exact_bound: f64,
    /// sqrt(d) 2^{-0.0035 d}.
    pub eta_paper_bound: f64,
    /// 0.993 d.
    pub fr_bound_log2: f64,
    /// Whether the chosen source's bound lies strictly below 1. For a greedy
    /// source this is only a necessary indication, since the witness lower-
    /// bounds |Z|.
    pub closes_loophole: bool,
}

#[derive(Debug, Clone)]
pub enum ZSource {
    Exact(ExactSearchConfig),
    Greedy { seed: u64, restarts: u64 },
    FrBound,
}

/// sqrt(d) 2^{-0.0035 d}: the closed-form efficiency threshold.
pub fn eta_paper_bound(d: usize) -> f64 {
    (0.5 * (d as f64).log2() - 0.0035 * d as f64).exp2()
}

/// sqrt(d |Z| / 2^d) evaluated from log2 |Z|, staying in log domain so that
/// 2^d never materializes.
pub fn eta_bound_from_log2_z(d: usize, log2_z: f64) -> f64 {
    (0.5 * ((d as f64).log2() + log2_z - d as f64)).exp2()
}

/// Smallest even d at which the closed-form threshold drops below 1.
pub fn first_closure_d() -> usize {
    let mut d = 4;
    while eta_paper_bound(d) >= 1.0 {
        d += 2;
        assert!(d < 1_000_000, "threshold curve never crossed 1");
    }
    d
}

pub fn threshold_report(d: usize, source: &ZSource) -> Result<ThresholdReport> {
    check_even(d)?;
    if d < 4 {
        return Err(Error::invalid("threshold analysis needs d >= 4"));
    }
    let (z_size, log2_z) = match source {
        ZSource::Exact(cfg) => {
            let set = max_z_exact(d, cfg)?;
            (
                ZSizeUsed::Exact(set.size() as u64),
                (set.size() as f64).log2(),
            )
        }
        ZSource::Greedy { seed, restarts } => {
            let set = z_greedy(d, *seed, *restarts)?;
            (
                ZSizeUsed::Greedy(set.size() as u64),
                (set.size().max(1) as f64).log2(),
            )
        }
        ZSource::FrBound => {
            let log2_z = 0.993 * d as f64;
            (ZSizeUsed::FrBoundLog2(log2_z), log2_z)
        }
    };
    let eta_exact_bound = eta_bound_from_log2_z(d, log2_z);
    Ok(ThresholdReport {
        d,
        z_size,
        eta_exact_bound,
        eta_paper_bound: eta_paper_bound(d),
        fr_bound_log2: 0.993 * d as f64,
        closes_loophole: eta_exact_bound < 1.0,
    })
}
