use serde::{Deserialize, Serialize};

use super::{LlpOracle, OracleCall, OracleResponse};
use crate::error::{LlpError, Result};
use crate::hypothesis::{bernoulli, Hypothesis};
use crate::learners::noisy_parity_threshold;
use crate::model::{BitVector, FiniteDistribution, Point, Sample, MAX_ENUMERATION_DIMENSION};
use crate::rational::{self, Rational};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoisyParitySetup {
    pub n: usize,
    /// The target is supported on the first `k_bits` coordinates.
    pub k_bits: usize,
    #[serde(with = "rational::serde_string")]
    pub eta: Rational,
    #[serde(with = "rational::serde_string")]
    pub eta_prime: Rational,
    pub target: Hypothesis,
}

impl NoisyParitySetup {
    pub fn validate(&self) -> Result<()> {
        noisy_parity_threshold(&self.eta_prime)?;
        if self.eta < rational::zero() || self.eta > self.eta_prime {
            return Err(LlpError::InvalidNoiseBound(format!("need 0 ≤ η = {} ≤ η′ = {}", self.eta, self.eta_prime)));
        }
        match &self.target {
            Hypothesis::Parity { mask } if mask.len() == self.n && mask.ones().all(|j| j <= self.k_bits) => Ok(()),
            other => Err(LlpError::MalformedHypothesis(format!(
                "{other} is not a parity on the first {} of {} bits",
                self.k_bits, self.n
            ))),
        }
    }

    fn mask(&self) -> &BitVector {
        match &self.target {
            Hypothesis::Parity { mask } => mask,
            _ => unreachable!("validated"),
        }
    }
}

/// Examples needed by the reduction: the oracle gets at least `f` filtered
/// examples, `M ≤ 3m/4`, and every disagreement test succeeds, each except
/// with probability `δ/3`:
///
/// ```text
/// m ≥ 4f,   m ≥ 8·ln(6/δ),   (3m/4 + 1) · 2·exp(−m(1/2 − η′)²/2) ≤ δ/3
/// ```
pub fn noisy_parity_sample_size(oracle_size: u64, eta_prime: &Rational, delta: f64) -> Result<u64> {
    noisy_parity_threshold(eta_prime)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(LlpError::InvalidParams(format!("delta = {delta} must lie in (0,1)")));
    }
    let gap = 0.5 - rational::to_f64(eta_prime);
    let tests_fail = |m: u64| (0.75 * m as f64 + 1.0) * 2.0 * (-(m as f64) * gap * gap / 2.0).exp();
    let mut m = (4 * oracle_size).max((8.0 * (6.0 / delta).ln()).ceil() as u64);
    while tests_fail(m) > delta / 3.0 {
        m += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoisyParityOutcome {
    pub parity: Hypothesis,
    pub m: u64,
    /// Examples with noisy label 1.
    pub filtered: u64,
    pub invocations: u64,
    pub transcript: Vec<OracleCall>,
}

fn noisy_example(setup: &NoisyParitySetup, rng: &mut crate::rng::LabRng) -> Result<(BitVector, bool)> {
    let x = BitVector::random(setup.n, rng)?;
    let flip = bernoulli(&setup.eta, rng);
    Ok((x, x.parity_with(setup.mask()) ^ flip))
}

/// Noisy parity learning through an LLP oracle over `D_c`: the examples
/// with noisy label 1 are an i.i.d. sample from `D_c`, and the oracle is
/// tried at every proportion `j/M` until a returned parity disagrees with
/// fewer than a `(η′ + 1/2)/2` fraction of all `m` noisy labels.
pub fn noisy_parity_via_llp(
    setup: &NoisyParitySetup,
    m: u64,
    oracle: &dyn LlpOracle,
    delta: f64,
    seed: u64,
) -> Result<NoisyParityOutcome> {
    setup.validate()?;
    let mut rng = rng_from_seed(seed);
    let examples: Vec<(BitVector, bool)> = (0..m).map(|_| noisy_example(setup, &mut rng)).collect::<Result<_>>()?;
    let filtered: Vec<Point> = examples.iter().filter(|(_, l)| *l).map(|(x, _)| Point::Bits(*x)).collect();
    let big_m = filtered.len() as u64;
    let sample = Sample::with_count(filtered, 0)?;
    let epsilon = rational::to_f64(&((rational::ratio(1, 2) - &setup.eta_prime) / rational::from_count(2, 1)));
    let threshold = noisy_parity_threshold(&setup.eta_prime)?;
    // Disagreement counts per unique noisy example, tallied once.
    let mut tally: std::collections::BTreeMap<(BitVector, bool), u64> = Default::default();
    for e in &examples {
        *tally.entry(*e).or_default() += 1;
    }
    let mut transcript = Vec::new();
    for j in 0..=big_m {
        let claimed = if big_m == 0 { rational::zero() } else { rational::from_count(j, big_m) };
        let response = oracle.query(&sample.with_positives(j)?, &claimed, epsilon, delta / 3.0)?;
        let accepted = match &response {
            OracleResponse::Hypothesis(Hypothesis::Parity { mask }) => {
                let disagree: u64 =
                    tally.iter().filter(|((x, l), _)| x.parity_with(mask) != *l).map(|(_, c)| c).sum();
                rational::from_count(disagree, m.max(1)) < threshold
            }
            _ => false,
        };
        transcript.push(OracleCall { index: j, claimed, sample_size: big_m, response: response.clone(), accepted });
        if accepted {
            let OracleResponse::Hypothesis(parity) = response else { unreachable!() };
            return Ok(NoisyParityOutcome { parity, m, filtered: big_m, invocations: j + 1, transcript });
        }
    }
    Err(LlpError::NoCandidateAccepted)
}

/// `D_c`: mass `(1−η)/2^{n−1}` on each point the target labels 1 and
/// `η/2^{n−1}` on each point it labels 0. Requires a nontrivial target.
pub fn filtered_distribution(target: &Hypothesis, eta: &Rational, n: usize) -> Result<FiniteDistribution> {
    let Hypothesis::Parity { mask } = target else {
        return Err(LlpError::MalformedHypothesis(format!("{target} is not a parity")));
    };
    if mask.count_ones() == 0 {
        return Err(LlpError::InvalidParams("the trivial parity has no D_c".into()));
    }
    if n > MAX_ENUMERATION_DIMENSION {
        return Err(LlpError::IntractableExactProportion(format!("D_c over 2^{n} points")));
    }
    let half = rational::from_count(1, 1 << (n - 1));
    let pos = (rational::one() - eta) * &half;
    let neg = eta * &half;
    let atoms = BitVector::all(n)?
        .map(|x| (Point::Bits(x), if x.parity_with(mask) { pos.clone() } else { neg.clone() }))
        .filter(|(_, w)| *w > rational::zero())
        .collect();
    FiniteDistribution::explicit(atoms)
}

/// `count` examples with noisy label 1, drawn as in the reduction.
pub fn draw_filtered_examples(setup: &NoisyParitySetup, count: usize, seed: u64) -> Result<Vec<BitVector>> {
    setup.validate()?;
    if setup.mask().count_ones() == 0 && setup.eta == rational::zero() {
        return Err(LlpError::InvalidParams("no example ever has noisy label 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let (x, l) = noisy_example(setup, &mut rng)?;
        if l {
            out.push(x);
        }
    }
    Ok(out)
}
