//! Naive exhaustive solvers used as ground truth and as stand-in LLP oracles.
//!
//! Every search is capped at a candidate budget and fails with
//! `BudgetExceeded` instead of truncating.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bounds::hoeffding_sample_size;
use crate::error::{LlpError, Result};
use crate::hypothesis::{class_size, distinct_labelings, encode, enumerate_class, BitString, ClassDescriptor, ClassId, Hypothesis};
use crate::learners::Best;
use crate::model::Sample;
use crate::rational::{self, Rational};
use crate::reductions::{ConsistencyInstance, EpscInstance, LlpOracle, OracleResponse, X3cInstance};

/// Largest family or item list searched by subset enumeration.
pub const MAX_SUBSET_ITEMS: usize = 24;

/// What the oracle does when the claimed proportion is not achievable exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Return the nearest hypothesis anyway.
    #[default]
    Arbitrary,
    Reject,
}

impl fmt::Display for OracleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleMode::Arbitrary => "arbitrary",
            OracleMode::Reject => "reject",
        })
    }
}

impl std::str::FromStr for OracleMode {
    type Err = LlpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arbitrary" => Ok(OracleMode::Arbitrary),
            "reject" => Ok(OracleMode::Reject),
            _ => Err(LlpError::InvalidParams(format!("unknown oracle mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    Hypothesis(Hypothesis),
    /// Indices into the instance's subsets or items, ascending.
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BruteForceReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub decision: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub optimum: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Witness>,
    pub search_space_size: u64,
}

/// Exhaustive proportion matching: the hypothesis minimizing
/// `|p̂_h − claimed|` under the global tie-break.
pub fn brute_llp_oracle(
    desc: &ClassDescriptor,
    sample: &Sample,
    claimed: &Rational,
    mode: OracleMode,
    budget: u64,
) -> Result<OracleResponse> {
    let target = claimed * Rational::from_integer(sample.m().into());
    let mut best = Best::new();
    for l in distinct_labelings(desc, sample, budget)? {
        let count = l.weighted_count(sample);
        let distance = rational::abs_diff(&Rational::from_integer(count.into()), &target);
        best.offer(distance, count, l.witness);
    }
    let (distance, _, h) = best.into_inner().ok_or_else(|| LlpError::InvalidParams("class is empty".into()))?;
    if mode == OracleMode::Reject && distance != rational::zero() {
        return Ok(OracleResponse::Reject);
    }
    Ok(OracleResponse::Hypothesis(h))
}

/// Sample size at which exact proportion matching succeeds for a finite
/// class: Hoeffding at `ε/2` for every hypothesis at once, by a union bound,
/// so `m = ⌈2·ln(2|H|/δ)/ε²⌉`.
pub fn brute_sample_size(desc: &ClassDescriptor, epsilon: f64, delta: f64) -> Result<u64> {
    let size = class_size(desc)? as f64;
    hoeffding_sample_size(epsilon / 2.0, delta / size)
}

/// [`brute_llp_oracle`] packaged behind the oracle interface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BruteLlpOracle {
    pub class: ClassDescriptor,
    pub mode: OracleMode,
    pub budget: u64,
}

impl BruteLlpOracle {
    pub fn new(class: ClassDescriptor, mode: OracleMode) -> Self {
        BruteLlpOracle { class, mode, budget: crate::hypothesis::DEFAULT_BUDGET }
    }
}

impl LlpOracle for BruteLlpOracle {
    fn class(&self) -> &ClassDescriptor {
        &self.class
    }

    fn sample_size(&self, epsilon: f64, delta: f64) -> Result<u64> {
        brute_sample_size(&self.class, epsilon, delta)
    }

    fn query(&self, sample: &Sample, claimed: &Rational, _epsilon: f64, _delta: f64) -> Result<OracleResponse> {
        brute_llp_oracle(&self.class, sample, claimed, self.mode, self.budget)
    }
}

/// Is there a hypothesis whose positive multiplicity is exactly `k`? The
/// witness is the smallest encoding among those that hit.
pub fn brute_consistency(inst: &ConsistencyInstance, budget: u64) -> Result<BruteForceReport> {
    let mut class = inst.class().clone();
    if matches!(class.class_id, ClassId::FiniteSubset | ClassId::Window) && class.ground_set.is_none() {
        class.ground_set = Some(inst.points().iter().filter_map(|p| p.as_nat()).collect());
    }
    let mut examined = 0u64;
    let mut best: Option<(BitString, Hypothesis)> = None;
    for h in enumerate_class(&class, budget)? {
        examined += 1;
        if inst.positive_mass(&h)? == inst.k() {
            let code = encode(&h);
            if best.as_ref().is_none_or(|(c, _)| code < *c) {
                best = Some((code, h));
            }
        }
    }
    Ok(BruteForceReport {
        decision: Some(best.is_some()),
        optimum: None,
        witness: best.map(|(_, h)| Witness::Hypothesis(h)),
        search_space_size: examined,
    })
}

/// Whether index list `a` sorts before `b` lexicographically, with both
/// given as bit masks.
fn mask_lex_less(a: u64, b: u64) -> bool {
    if a == b {
        return false;
    }
    let d = (a ^ b).trailing_zeros();
    let above = |m: u64| d < 63 && m >> (d + 1) != 0;
    if a >> d & 1 == 1 {
        above(b)
    } else {
        !above(a)
    }
}

fn mask_indices(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

fn check_items(len: usize) -> Result<()> {
    if len > MAX_SUBSET_ITEMS {
        Err(LlpError::BudgetExceeded { budget: 1 << MAX_SUBSET_ITEMS })
    } else {
        Ok(())
    }
}

/// Universe elements as bit positions, subsets as bitsets over them.
fn bitsets(universe: &[u64], subsets: &[Vec<u64>]) -> (usize, Vec<Vec<u64>>) {
    let index: HashMap<u64, usize> = universe.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let words = universe.len().div_ceil(64).max(1);
    let sets = subsets
        .iter()
        .map(|s| {
            let mut w = vec![0u64; words];
            for x in s {
                let i = index[x];
                w[i / 64] |= 1 << (i % 64);
            }
            w
        })
        .collect();
    (words, sets)
}

fn union_size(words: usize, sets: &[Vec<u64>], mask: u64) -> u32 {
    let mut acc = vec![0u64; words];
    for (j, s) in sets.iter().enumerate() {
        if mask >> j & 1 == 1 {
            for (a, b) in acc.iter_mut().zip(s) {
                *a |= b;
            }
        }
    }
    acc.iter().map(|w| w.count_ones()).sum()
}

/// Every subfamily; yes iff some union has exactly `k` elements. The
/// witness is the lexicographically smallest index list.
pub fn brute_epsc(inst: &EpscInstance) -> Result<BruteForceReport> {
    check_items(inst.subsets().len())?;
    let (words, sets) = bitsets(inst.universe(), inst.subsets());
    let total = 1u64 << sets.len();
    let mut best: Option<u64> = None;
    for mask in 0..total {
        if union_size(words, &sets, mask) as usize == inst.k() && best.is_none_or(|b| mask_lex_less(mask, b)) {
            best = Some(mask);
        }
    }
    Ok(BruteForceReport {
        decision: Some(best.is_some()),
        optimum: None,
        witness: best.map(|m| Witness::Indices(mask_indices(m))),
        search_space_size: total,
    })
}

fn binomial(n: u64, k: u64) -> u128 {
    (0..k.min(n)).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Every size-`t` subcollection in lexicographic order; the first exact
/// cover found is the witness.
pub fn brute_x3c(inst: &X3cInstance, budget: u64) -> Result<BruteForceReport> {
    let t = inst.t();
    let s = inst.triples().len();
    if binomial(s as u64, t as u64) > budget as u128 {
        return Err(LlpError::BudgetExceeded { budget });
    }
    let (words, sets) = bitsets(inst.universe(), inst.triples());
    let full = inst.universe().len() as u32;
    let mut examined = 0u64;
    if t > s {
        return Ok(BruteForceReport { decision: Some(false), optimum: None, witness: None, search_space_size: 0 });
    }
    let mut combo: Vec<usize> = (0..t).collect();
    loop {
        examined += 1;
        let mut acc = vec![0u64; words];
        for &j in &combo {
            for (a, b) in acc.iter_mut().zip(&sets[j]) {
                *a |= b;
            }
        }
        if acc.iter().map(|w| w.count_ones()).sum::<u32>() == full {
            return Ok(BruteForceReport {
                decision: Some(true),
                optimum: None,
                witness: Some(Witness::Indices(combo)),
                search_space_size: examined,
            });
        }
        // Advance to the next combination in lexicographic order.
        let Some(i) = (0..t).rev().find(|&i| combo[i] < s - t + i) else { break };
        combo[i] += 1;
        for j in i + 1..t {
            combo[j] = combo[j - 1] + 1;
        }
    }
    Ok(BruteForceReport { decision: Some(false), optimum: None, witness: None, search_space_size: examined })
}

/// Every subset of `counts`; minimizes `|sum − t|`, then the sum, then the
/// index list lexicographically.
pub fn brute_subset_sum(counts: &[u64], t: u64) -> Result<BruteForceReport> {
    check_items(counts.len())?;
    let total = 1u64 << counts.len();
    let mut best: Option<(u64, u64, u64)> = None;
    for mask in 0..total {
        let sum: u64 = counts.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, c)| c).sum();
        let key = (sum.abs_diff(t), sum);
        let better = match best {
            None => true,
            Some((d, s, m)) => key < (d, s) || (key == (d, s) && mask_lex_less(mask, m)),
        };
        if better {
            best = Some((key.0, key.1, mask));
        }
    }
    let (optimum, _, mask) = best.expect("the empty subset always exists");
    Ok(BruteForceReport {
        decision: None,
        optimum: Some(optimum),
        witness: Some(Witness::Indices(mask_indices(mask))),
        search_space_size: total,
    })
}
