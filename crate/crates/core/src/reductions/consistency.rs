use serde::{Deserialize, Serialize};

use super::{ConsistencyInstance, LlpOracle, OracleCall, OracleResponse};
use crate::error::Result;
use crate::hypothesis::Hypothesis;
use crate::model::{FiniteDistribution, Point, Sample};
use crate::rational;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyOutcome {
    pub accepted: bool,
    pub witness: Option<Hypothesis>,
    pub sample_size: u64,
    pub invocations: u64,
    pub transcript: Vec<OracleCall>,
}

/// Decides consistency with an LLP oracle. Draws from `D(x_i) = a_i/|X|`,
/// then tries every proportion `j/m` in ascending order and accepts the
/// first returned hypothesis whose positive multiplicity is exactly `k`.
/// Acceptance is always checked directly, so it is never wrong.
pub fn consistency_via_llp(
    inst: &ConsistencyInstance,
    oracle: &dyn LlpOracle,
    delta: f64,
    seed: u64,
) -> Result<ConsistencyOutcome> {
    let total = inst.total();
    let (sample, epsilon) = if total == 0 {
        (Sample::with_count(Vec::new(), 0)?, 0.5)
    } else {
        let dist = FiniteDistribution::normalized(
            inst.points().iter().zip(inst.mult()).map(|(x, a)| (*x, rational::from_count(*a, 1))).collect(),
        )?;
        let epsilon = 1.0 / (2.0 * total as f64);
        let m = oracle.sample_size(epsilon, delta)?;
        let mut rng = rng_from_seed(seed);
        let points: Vec<Point> = (0..m).map(|_| dist.draw_point(&mut rng)).collect();
        (Sample::with_count(points, 0)?, epsilon)
    };
    let m = sample.m();
    let mut transcript = Vec::new();
    for j in 0..=m {
        let claimed = if m == 0 { rational::zero() } else { rational::from_count(j, m) };
        let labeled = sample.with_positives(j)?;
        let response = oracle.query(&labeled, &claimed, epsilon, delta)?;
        let hit = match &response {
            OracleResponse::Hypothesis(h) if inst.positive_mass(h)? == inst.k() => Some(h.clone()),
            _ => None,
        };
        transcript.push(OracleCall { index: j, claimed, sample_size: m, response, accepted: hit.is_some() });
        if hit.is_some() {
            return Ok(ConsistencyOutcome {
                accepted: true,
                witness: hit,
                sample_size: m,
                invocations: j + 1,
                transcript,
            });
        }
    }
    Ok(ConsistencyOutcome { accepted: false, witness: None, sample_size: m, invocations: m + 1, transcript })
}
