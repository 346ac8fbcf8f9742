use num_bigint::{BigInt, BigUint};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{LearnerOutcome, WorkCounters};
use crate::error::{LlpError, Result};
use crate::hypothesis::Hypothesis;
use crate::model::{Domain, Sample};
use crate::rational::Rational;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfspaceParams {
    pub retries: u32,
    /// Bits per normal coordinate; `None` means `8n`.
    pub precision_bits: Option<u32>,
}

impl Default for HalfspaceParams {
    fn default() -> Self {
        HalfspaceParams { retries: 3, precision_bits: None }
    }
}

enum Failure {
    Collision,
    Duplicate,
}

/// Uniform integer in `[−2^{B−1}, 2^{B−1})`.
fn random_coordinate(rng: &mut impl RngCore, bits: u32) -> BigInt {
    let mut bytes = vec![0u8; bits.div_ceil(8) as usize];
    rng.fill_bytes(&mut bytes);
    let excess = bytes.len() as u32 * 8 - bits;
    if let Some(last) = bytes.last_mut() {
        *last &= 0xff >> excess;
    }
    BigInt::from(BigUint::from_bytes_le(&bytes)) - (BigInt::from(1) << (bits - 1))
}

/// Random direction, then a threshold sweep along it. Normal coordinates are
/// `v_i / 2^{B−1}`; the threshold is the midpoint between the last positive
/// and first negative projection, or an extreme when `t` is `0` or `m`.
pub fn halfspace_sweep_learner(sample: &Sample, seed: u64, params: HalfspaceParams) -> Result<LearnerOutcome> {
    let n = match sample.domain() {
        Some(Domain::Cube(n)) => n,
        Some(other) => return Err(LlpError::DomainMismatch(format!("halfspaces need a cube, found {other}"))),
        None => return Err(LlpError::InvalidParams("empty sample has no dimension".into())),
    };
    let bits = params.precision_bits.unwrap_or(8 * n as u32).max(2);
    let scale = BigInt::from(1) << (bits - 1);
    let unique = sample.unique_counts();
    let t = sample.positives();
    let mut rng = rng_from_seed(seed);
    let mut last = Failure::Collision;
    for attempt in 0..=params.retries {
        let v: Vec<BigInt> = (0..n).map(|_| random_coordinate(&mut rng, bits)).collect();
        let mut projected: Vec<(BigInt, usize)> = unique
            .iter()
            .enumerate()
            .map(|(i, (p, _))| {
                let x = p.as_bits().expect("cube domain");
                (x.ones().map(|c| &v[c - 1]).sum::<BigInt>(), i)
            })
            .collect();
        projected.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let work = WorkCounters { candidates: projected.len() as u64, retries: attempt as u64, ..Default::default() };
        let threshold = if t == 0 {
            Some(projected[0].0.clone() * 2)
        } else {
            let mut cum = 0u64;
            let mut found = None;
            let mut g = 0;
            while g < projected.len() {
                let mut end = g;
                while end < projected.len() && projected[end].0 == projected[g].0 {
                    cum += unique[projected[end].1].1;
                    end += 1;
                }
                if cum == t {
                    found = Some(match projected.get(end) {
                        Some(next) => &projected[g].0 + &next.0,
                        None => (&projected[g].0 - 1) * 2,
                    });
                    break;
                }
                if cum > t {
                    last = if end - g > 1 { Failure::Collision } else { Failure::Duplicate };
                    break;
                }
                g = end;
            }
            found
        };
        if let Some(twice) = threshold {
            let normal = v.into_iter().map(|c| Rational::new(c, scale.clone())).collect();
            let h = Hypothesis::halfspace(normal, Rational::new(twice, &scale * 2))?;
            return LearnerOutcome::on_sample(h, sample, work);
        }
    }
    Err(match last {
        Failure::Collision => LlpError::CollisionPersistent { attempts: params.retries + 1 },
        Failure::Duplicate => LlpError::UnreachableCount { target: t, attempts: params.retries + 1 },
    })
}
