//! Sample-size formulas and the uniform-convergence bound.
//!
//! The learners' guarantees are stated with explicit constants:
//!
//! ```text
//! Hoeffding:            m = ⌈ ln(2/δ) / (2ε²) ⌉
//! known distribution:   m = Hoeffding(β/2, δ)
//! uniform convergence:  ||p_h − p_c| − |p̂_h − p̂_c|| ≤ √(8d·ln(em/d)/m) + √(2·ln(4/δ)/m)
//! ```
//!
//! These are evaluated in `f64`; they only choose sample sizes, never decide
//! correctness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LlpError, Result};
use crate::hypothesis::{enumerate_class, vc_dimension, ClassDescriptor, Hypothesis, DEFAULT_BUDGET};
use crate::model::{draw_sample, positive_count, true_proportion, FiniteDistribution};
use crate::rational::{self, Rational};
use crate::rng::derive_seed;

/// Relative slack absorbed before rounding up, so `ln(e²) = 2.0000000000000004`
/// does not push an exact integer to the next one.
const CEIL_TOLERANCE: f64 = 1e-12;

fn ceil_tolerant(x: f64) -> u64 {
    (x - x.abs() * CEIL_TOLERANCE).ceil().max(0.0) as u64
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(LlpError::InvalidParams(format!("{name} = {v} must lie in (0,1)")))
    }
}

/// Smallest `m` with `2·exp(−2mε²) ≤ δ`.
pub fn hoeffding_sample_size(epsilon: f64, delta: f64) -> Result<u64> {
    check_unit("epsilon", epsilon)?;
    check_unit("delta", delta)?;
    Ok(ceil_tolerant((2.0 / delta).ln() / (2.0 * epsilon * epsilon)))
}

/// Sample size that puts `p̂` within `β/2` of `p_c` with probability `1 − δ`.
pub fn gap_sample_size(beta: f64, delta: f64) -> Result<u64> {
    if beta == 0.0 {
        return Err(LlpError::ZeroGap);
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(LlpError::InvalidParams(format!("beta = {beta} must lie in (0,1]")));
    }
    hoeffding_sample_size(beta / 2.0, delta)
}

/// Additive slack of the uniform-convergence bound for VC dimension `d`.
pub fn uniform_convergence_bound(d: u64, m: u64, delta: f64) -> Result<f64> {
    check_unit("delta", delta)?;
    if d == 0 {
        return Err(LlpError::InvalidParams("d must be at least 1".into()));
    }
    if m < d {
        return Err(LlpError::InvalidParams(format!("m = {m} < d = {d}")));
    }
    let (d, m) = (d as f64, m as f64);
    let capacity = (8.0 * d * (std::f64::consts::E * m / d).ln() / m).sqrt();
    let confidence = (2.0 * (4.0 / delta).ln() / m).sqrt();
    Ok(capacity + confidence)
}

/// Smallest `m ≥ 3d` whose bound is at most `ε − erm_slack`.
pub fn uniform_convergence_sample_size(d: u64, epsilon: f64, delta: f64, erm_slack: f64) -> Result<u64> {
    check_unit("epsilon", epsilon)?;
    if !(erm_slack >= 0.0 && erm_slack < epsilon) {
        return Err(LlpError::InvalidParams(format!(
            "erm slack {erm_slack} must lie in [0, epsilon = {epsilon})"
        )));
    }
    let target = epsilon - erm_slack;
    let floor = 3 * d.max(1);
    if uniform_convergence_bound(d, floor, delta)? <= target {
        return Ok(floor);
    }
    let mut lo = floor;
    let mut hi = floor * 2;
    while uniform_convergence_bound(d, hi, delta)? > target {
        lo = hi;
        hi = hi.checked_mul(2).filter(|&h| h < 1 << 53).ok_or_else(|| {
            LlpError::InvalidParams(format!("no m below 2^53 reaches epsilon = {epsilon}"))
        })?;
    }
    // Invariant: bound(lo) > target ≥ bound(hi).
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if uniform_convergence_bound(d, mid, delta)? <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Distinct achievable proportions and the smallest gap between them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapParameters {
    #[serde(with = "rational::serde_string")]
    pub beta: Rational,
    pub achievable_values: Vec<String>,
    #[serde(skip)]
    values: Vec<Rational>,
}

impl GapParameters {
    /// `β` is the minimum adjacent difference of the sorted distinct values;
    /// it is zero when fewer than two distinct values exist.
    pub fn from_values(values: impl IntoIterator<Item = Rational>) -> Self {
        let mut values: Vec<Rational> = values.into_iter().collect();
        values.sort();
        values.dedup();
        let beta = values
            .windows(2)
            .map(|w| &w[1] - &w[0])
            .min()
            .unwrap_or_else(rational::zero);
        GapParameters {
            beta,
            achievable_values: values.iter().map(ToString::to_string).collect(),
            values,
        }
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn sample_size(&self, delta: f64) -> Result<u64> {
        gap_sample_size(rational::to_f64(&self.beta), delta)
    }
}

/// One audited trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub trial: u64,
    pub d: u64,
    pub m: u64,
    pub delta: f64,
    pub bound_value: f64,
    #[serde(with = "rational::serde_string")]
    pub observed_gap: Rational,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub rows: Vec<BoundReport>,
    pub satisfied: u64,
    pub trials: u64,
    pub satisfied_fraction: f64,
}

impl AuditSummary {
    /// One CSV row per trial: `trial,G,bound,satisfied`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,G,bound,satisfied\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.trial,
                rational::to_f64(&r.observed_gap),
                r.bound_value,
                r.satisfied as u8
            ));
        }
        out
    }
}

/// Per trial, the largest deviation over the class between true and empirical
/// proportion gaps to the target, checked against the bound.
pub fn empirical_generalization_audit(
    desc: &ClassDescriptor,
    dist: &FiniteDistribution,
    target: &Hypothesis,
    m: u64,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<AuditSummary> {
    let d = vc_dimension(desc)
        .finite()
        .ok_or_else(|| LlpError::InvalidParams("audit needs a finite VC dimension".into()))?;
    let bound_value = uniform_convergence_bound(d.max(1), m.max(d.max(1)), delta)?;
    let class: Vec<Hypothesis> = enumerate_class(desc, DEFAULT_BUDGET)?.collect();
    let p_c = true_proportion(target, dist)?;
    let true_gaps: Vec<Rational> = class
        .iter()
        .map(|h| true_proportion(h, dist).map(|p| rational::abs_diff(&p, &p_c)))
        .collect::<Result<_>>()?;
    let bound_exact = rational::from_f64_decimal(bound_value)?;
    let rows = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let sample = draw_sample(dist, m as usize, derive_seed(seed, trial), target)?;
            let c_count = sample.positives() as i64;
            let mut worst = rational::zero();
            for (h, true_gap) in class.iter().zip(&true_gaps) {
                let h_count = positive_count(h, &sample)? as i64;
                let empirical_gap = rational::from_count((h_count - c_count).unsigned_abs(), m);
                let g = rational::abs_diff(true_gap, &empirical_gap);
                if g > worst {
                    worst = g;
                }
            }
            Ok(BoundReport {
                trial,
                d,
                m,
                delta,
                bound_value,
                satisfied: worst <= bound_exact,
                observed_gap: worst,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let satisfied = rows.iter().filter(|r| r.satisfied).count() as u64;
    Ok(AuditSummary {
        satisfied,
        trials,
        satisfied_fraction: if trials == 0 { 1.0 } else { satisfied as f64 / trials as f64 },
        rows,
    })
}
