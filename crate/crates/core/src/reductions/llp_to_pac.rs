use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{LlpOracle, OracleCall, OracleResponse};
use crate::error::{LlpError, Result};
use crate::hypothesis::Hypothesis;
use crate::model::{FiniteDistribution, Point, Sample};
use crate::rational::{self, Rational};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlpToPacOutcome {
    pub hypothesis: Hypothesis,
    /// Unique points `m` and positives `k` of the deduplicated sample.
    pub unique_points: u64,
    pub positives: u64,
    #[serde(with = "rational::serde_string")]
    pub positive_weight: Rational,
    #[serde(with = "rational::serde_string")]
    pub negative_weight: Rational,
    /// `m′` points drawn from `D′`.
    pub drawn: u64,
    pub transcript: Vec<OracleCall>,
}

/// Masses of `D′`: `m/(km+m−k)` per positive and `1/(km+m−k)` per negative.
pub fn d_prime_weights(m: u64, k: u64) -> Result<(Rational, Rational)> {
    if m == 0 {
        return Err(LlpError::DegenerateSample);
    }
    if k > m {
        return Err(LlpError::InvalidParams(format!("k = {k} exceeds m = {m}")));
    }
    let denom = k * m + m - k;
    Ok((rational::from_count(m, denom), rational::from_count(1, denom)))
}

fn dedup(labeled: &[(Point, bool)]) -> Result<BTreeMap<Point, bool>> {
    let mut unique = BTreeMap::new();
    for (x, l) in labeled {
        if let Some(prev) = unique.insert(*x, *l) {
            if prev != *l {
                return Err(LlpError::InvalidInstance(format!("{x} carries both labels")));
            }
        }
    }
    Ok(unique)
}

/// The reweighted distribution over the unique points of a labeled sample.
pub fn d_prime(labeled: &[(Point, bool)]) -> Result<FiniteDistribution> {
    let unique = dedup(labeled)?;
    let k = unique.values().filter(|l| **l).count() as u64;
    let (pos, neg) = d_prime_weights(unique.len() as u64, k)?;
    FiniteDistribution::explicit(
        unique.into_iter().map(|(x, l)| (x, if l { pos.clone() } else { neg.clone() })).collect(),
    )
}

/// Points the hypothesis labels differently from the sample.
pub fn empirical_errors(h: &Hypothesis, labeled: &[(Point, bool)]) -> Result<u64> {
    let mut errors = 0;
    for (x, l) in labeled {
        if h.evaluate(x)? != *l {
            errors += 1;
        }
    }
    Ok(errors)
}

/// PAC learning through an LLP oracle. Under `D′` every unique point has
/// mass at least `1/m²`, so a hypothesis within `ε′ = 1/(2m²)` of the
/// target's proportion can misplace no positive point and hence, with the
/// positive mass pinned, no point at all.
pub fn llp_to_pac(labeled: &[(Point, bool)], oracle: &dyn LlpOracle, delta: f64, seed: u64) -> Result<LlpToPacOutcome> {
    let unique = dedup(labeled)?;
    let m = unique.len() as u64;
    let k = unique.values().filter(|l| **l).count() as u64;
    let (positive_weight, negative_weight) = d_prime_weights(m, k)?;
    let dist = d_prime(labeled)?;
    let epsilon = 1.0 / (2.0 * (m * m) as f64);
    let drawn = oracle.sample_size(epsilon, delta)?;
    let mut rng = rng_from_seed(seed);
    let mut positives = 0u64;
    let points: Vec<Point> = (0..drawn)
        .map(|_| {
            let x = dist.draw_point(&mut rng);
            if unique[&x] {
                positives += 1;
            }
            x
        })
        .collect();
    let sample = Sample::with_count(points, positives)?;
    let claimed = sample.p_hat();
    let response = oracle.query(&sample, &claimed, epsilon, delta)?;
    let call = OracleCall {
        index: 0,
        claimed,
        sample_size: drawn,
        accepted: matches!(response, OracleResponse::Hypothesis(_)),
        response: response.clone(),
    };
    match response {
        OracleResponse::Reject => Err(LlpError::OracleReject),
        OracleResponse::Hypothesis(hypothesis) => Ok(LlpToPacOutcome {
            hypothesis,
            unique_points: m,
            positives: k,
            positive_weight,
            negative_weight,
            drawn,
            transcript: vec![call],
        }),
    }
}
