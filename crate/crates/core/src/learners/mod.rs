//! LLP learners.
//!
//! Every sample-based learner matches proportions, not labels: it returns a
//! hypothesis whose positive count on the sample (with multiplicity) is as
//! close as its algorithm allows to the revealed count `t = p̂·m`.
//!
//! Ties are broken globally by smaller residual, then smaller positive
//! count, then the lexicographically smallest canonical encoding. The
//! brute-force oracles use the same rule, so witnesses compare exactly.

mod halfspace;
mod subset_sum;
mod window;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bounds::GapParameters;
use crate::error::{LlpError, Result};
use crate::hypothesis::{distinct_labelings, encode, enumerate_class, BitString, ClassDescriptor, ClassId, Hypothesis};
use crate::model::{empirical_proportion, true_proportion, BitVector, Domain, FiniteDistribution, Sample};
use crate::rational::{self, Rational};

pub use halfspace::{halfspace_sweep_learner, HalfspaceParams};
pub use subset_sum::{subset_sum_learner, subset_sum_nearest, SubsetSumSolution};
pub use window::window_learner;

/// Effort spent by a learner.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkCounters {
    pub labelings: u64,
    pub dp_cells: u64,
    pub candidates: u64,
    pub retries: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerOutcome {
    pub hypothesis: Hypothesis,
    #[serde(with = "rational::serde_string")]
    pub achieved_empirical: Rational,
    #[serde(with = "rational::serde_string")]
    pub residual: Rational,
    pub proper: bool,
    pub work: WorkCounters,
}

impl LearnerOutcome {
    fn on_sample(hypothesis: Hypothesis, sample: &Sample, work: WorkCounters) -> Result<Self> {
        let achieved_empirical = empirical_proportion(&hypothesis, sample)?;
        let residual = rational::abs_diff(&achieved_empirical, &sample.p_hat());
        Ok(LearnerOutcome { proper: hypothesis.is_proper(), hypothesis, achieved_empirical, residual, work })
    }
}

/// Learner names accepted by configs and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerId {
    Improper,
    Gap,
    Erm,
    SubsetSum,
    Window,
    Halfspace,
    NoisyParity,
}

impl fmt::Display for LearnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

impl std::str::FromStr for LearnerId {
    type Err = LlpError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
            .map_err(|_| LlpError::InvalidParams(format!("unknown learner {s:?}")))
    }
}

/// Running minimum under the global tie-break. `D` is the residual type.
pub(crate) struct Best<D> {
    current: Option<(D, u64, BitString, Hypothesis)>,
}

impl<D: Ord> Best<D> {
    pub(crate) fn new() -> Self {
        Best { current: None }
    }

    pub(crate) fn offer(&mut self, distance: D, count: u64, h: Hypothesis) {
        if let Some((d, c, code, _)) = &self.current {
            match (&distance, count).cmp(&(d, *c)) {
                std::cmp::Ordering::Greater => return,
                std::cmp::Ordering::Equal => {
                    let new_code = encode(&h);
                    if new_code >= *code {
                        return;
                    }
                    self.current = Some((distance, count, new_code, h));
                    return;
                }
                std::cmp::Ordering::Less => {}
            }
        }
        let code = encode(&h);
        self.current = Some((distance, count, code, h));
    }

    pub(crate) fn into_inner(self) -> Option<(D, u64, Hypothesis)> {
        self.current.map(|(d, c, _, h)| (d, c, h))
    }
}

/// Returns `constant_random(p̂)`: its expected proportion is exactly `p̂`
/// under any distribution.
pub fn improper_learner(sample: &Sample) -> LearnerOutcome {
    let p_hat = sample.p_hat();
    LearnerOutcome {
        hypothesis: Hypothesis::ConstantRandom { p: p_hat.clone() },
        achieved_empirical: p_hat,
        residual: rational::zero(),
        proper: false,
        work: WorkCounters::default(),
    }
}

/// Class over ℕ without a ground set: fall back to the distribution's support.
fn ground_from_distribution(desc: &ClassDescriptor, dist: &FiniteDistribution) -> ClassDescriptor {
    match desc.class_id {
        ClassId::FiniteSubset | ClassId::Window if desc.ground_set.is_none() => match dist.atoms() {
            Some(atoms) => desc.with_ground_set(atoms.iter().filter_map(|(p, _)| p.as_nat()).collect()),
            None => desc.clone(),
        },
        _ => desc.clone(),
    }
}

/// The achievable true proportions of a class under a known distribution,
/// each with its smallest-encoding realizer.
#[derive(Debug, Clone)]
pub struct AchievableProportions {
    by_value: BTreeMap<Rational, (BitString, Hypothesis)>,
    pub examined: u64,
}

impl AchievableProportions {
    pub fn compute(desc: &ClassDescriptor, dist: &FiniteDistribution, budget: u64) -> Result<Self> {
        let desc = ground_from_distribution(desc, dist);
        let mut by_value: BTreeMap<Rational, (BitString, Hypothesis)> = BTreeMap::new();
        let mut examined = 0;
        for h in enumerate_class(&desc, budget)? {
            examined += 1;
            let p = true_proportion(&h, dist)?;
            let code = encode(&h);
            match by_value.get(&p) {
                Some((existing, _)) if *existing <= code => {}
                _ => {
                    by_value.insert(p, (code, h));
                }
            }
        }
        Ok(AchievableProportions { by_value, examined })
    }

    pub fn gap(&self) -> GapParameters {
        GapParameters::from_values(self.by_value.keys().cloned())
    }

    /// The value nearest `p̂` (ties toward the smaller value) and its realizer.
    pub fn nearest(&self, p_hat: &Rational) -> Option<(&Rational, &Hypothesis)> {
        self.by_value
            .iter()
            .min_by(|(a, _), (b, _)| {
                rational::abs_diff(a, p_hat).cmp(&rational::abs_diff(b, p_hat)).then(a.cmp(b))
            })
            .map(|(v, (_, h))| (v, h))
    }
}

/// Known-distribution learner: picks the achievable true proportion nearest
/// the sample's `p̂` and returns a hypothesis realizing it.
pub fn gap_learner(
    desc: &ClassDescriptor,
    dist: &FiniteDistribution,
    sample: &Sample,
    budget: u64,
) -> Result<LearnerOutcome> {
    gap_learner_with(&AchievableProportions::compute(desc, dist, budget)?, sample)
}

/// [`gap_learner`] against a precomputed table.
pub fn gap_learner_with(table: &AchievableProportions, sample: &Sample) -> Result<LearnerOutcome> {
    let (_, h) = table
        .nearest(&sample.p_hat())
        .ok_or_else(|| LlpError::InvalidParams("class is empty".into()))?;
    let work = WorkCounters { candidates: table.examined, ..Default::default() };
    LearnerOutcome::on_sample(h.clone(), sample, work)
}

/// Exact proportion matching over every labeling the class achieves on the sample.
pub fn erm_proportion_matcher(desc: &ClassDescriptor, sample: &Sample, budget: u64) -> Result<LearnerOutcome> {
    let labelings = distinct_labelings(desc, sample, budget)?;
    let t = sample.positives();
    let mut best = Best::new();
    for l in &labelings {
        let count = l.weighted_count(sample);
        best.offer(count.abs_diff(t), count, l.witness.clone());
    }
    let (_, _, h) = best.into_inner().ok_or_else(|| LlpError::InvalidParams("class is empty".into()))?;
    let work = WorkCounters { labelings: labelings.len() as u64, ..Default::default() };
    LearnerOutcome::on_sample(h, sample, work)
}

fn check_noise_bound(eta_prime: &Rational) -> Result<()> {
    if *eta_prime < rational::zero() || *eta_prime >= rational::ratio(1, 2) {
        return Err(LlpError::InvalidNoiseBound(format!("eta' = {eta_prime} must lie in [0, 1/2)")));
    }
    Ok(())
}

/// Threshold `(η′ + 1/2)/2` separating noisy proportion `η ≤ η′` from `1/2`.
pub fn noisy_parity_threshold(eta_prime: &Rational) -> Result<Rational> {
    check_noise_bound(eta_prime)?;
    Ok((eta_prime + rational::ratio(1, 2)) / rational::from_count(2, 1))
}

/// Trivial parity below the threshold, else the parity on coordinate 1.
pub fn noisy_parity_decision(p_noisy: &Rational, eta_prime: &Rational, n: usize) -> Result<Hypothesis> {
    let threshold = noisy_parity_threshold(eta_prime)?;
    if *p_noisy < threshold {
        Hypothesis::trivial_parity(n)
    } else if n == 0 {
        Err(LlpError::InvalidParams("no nontrivial parity on zero bits".into()))
    } else {
        Ok(Hypothesis::Parity { mask: BitVector::from_coordinates(n, [1])? })
    }
}

/// Parities under the uniform cube with white-label noise. The sample's
/// revealed proportion is the noisy one.
pub fn noisy_parity_uniform_learner(sample: &Sample, eta_prime: &Rational, n: usize) -> Result<LearnerOutcome> {
    if let Some(d) = sample.domain() {
        crate::model::check_domain(Domain::Cube(n), d)?;
    }
    let h = noisy_parity_decision(&sample.p_hat(), eta_prime, n)?;
    LearnerOutcome::on_sample(h, sample, WorkCounters { candidates: 1, ..Default::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::{class_size, DEFAULT_BUDGET};
    use crate::model::{draw_sample, make_distribution, positive_count, Point};
    use crate::rational::ratio;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn bits(points: &[&str], positives: u64) -> Sample {
        Sample::with_count(points.iter().map(|s| Point::bits(s).unwrap()).collect(), positives).unwrap()
    }

    fn two_point_dist() -> FiniteDistribution {
        make_distribution(vec![(Point::Nat(1), ratio(3, 10)), (Point::Nat(2), ratio(7, 10))]).unwrap()
    }

    #[test]
    fn improper_returns_constant_at_p_hat() {
        let s = Sample::with_count(vec![Point::Nat(1); 7], 3).unwrap();
        let out = improper_learner(&s);
        assert_eq!(out.hypothesis, Hypothesis::constant_random(ratio(3, 7)).unwrap());
        assert!(!out.proper);
        assert_eq!(true_proportion(&out.hypothesis, &two_point_dist()).unwrap(), ratio(3, 7));
        let zero = improper_learner(&Sample::with_count(vec![Point::Nat(1)], 0).unwrap());
        assert_eq!(zero.hypothesis, Hypothesis::constant_random(ratio(0, 1)).unwrap());
    }

    #[test]
    fn gap_picks_nearest_value_ties_below() {
        let desc = ClassDescriptor::finite_subsets(Some(vec![1, 2]));
        let table = AchievableProportions::compute(&desc, &two_point_dist(), DEFAULT_BUDGET).unwrap();
        assert_eq!(table.gap().beta, ratio(3, 10));
        let pick = |p| table.nearest(&p).unwrap().1.clone();
        assert_eq!(pick(ratio(6, 10)), Hypothesis::finite_subset([2]));
        assert_eq!(pick(ratio(0, 1)), Hypothesis::finite_subset([]));
        assert_eq!(pick(ratio(1, 2)), Hypothesis::finite_subset([1]));
        let s = Sample::with_count(vec![Point::Nat(2); 10], 6).unwrap();
        let out = gap_learner(&desc, &two_point_dist(), &s, DEFAULT_BUDGET).unwrap();
        assert_eq!(out.hypothesis, Hypothesis::finite_subset([2]));
        assert_eq!(out.achieved_empirical, ratio(1, 1));
        assert_eq!(out.residual, ratio(2, 5));
    }

    #[test]
    fn gap_learner_uses_distribution_support_without_ground_set() {
        let desc = ClassDescriptor::finite_subsets(None);
        let table = AchievableProportions::compute(&desc, &two_point_dist(), DEFAULT_BUDGET).unwrap();
        assert_eq!(table.examined, 4);
    }

    #[test]
    fn erm_examples() {
        let s = bits(&["00", "01", "10", "11"], 2);
        let out = erm_proportion_matcher(&ClassDescriptor::parities(2), &s, DEFAULT_BUDGET).unwrap();
        assert_eq!(out.residual, ratio(0, 1));
        // Smallest nontrivial mask under the tie-break.
        assert_eq!(out.hypothesis, Hypothesis::parity("01").unwrap());

        let s = bits(&["00", "00"], 1);
        let out = erm_proportion_matcher(&ClassDescriptor::disjunctions(2), &s, DEFAULT_BUDGET).unwrap();
        assert_eq!(out.residual, ratio(1, 2));
        assert_eq!(out.achieved_empirical, ratio(0, 1));
        assert_eq!(out.hypothesis, Hypothesis::disjunction(2, []).unwrap());
    }

    fn random_class(rng: &mut impl Rng, n: usize) -> ClassDescriptor {
        match rng.gen_range(0..4) {
            0 => ClassDescriptor::parities(n),
            1 => ClassDescriptor::disjunctions(n),
            2 => ClassDescriptor::conjunctions(n),
            _ => ClassDescriptor::parities_on_first(n, rng.gen_range(0..=n)),
        }
    }

    #[test]
    fn erm_matches_full_enumeration_and_realizable_target() {
        let mut rng = rng_from_seed(11);
        for case in 0..150u64 {
            let n = rng.gen_range(1..=4);
            let desc = random_class(&mut rng, n);
            let targets: Vec<Hypothesis> = enumerate_class(&desc, DEFAULT_BUDGET).unwrap().collect();
            assert_eq!(targets.len() as u128, class_size(&desc).unwrap());
            let target = &targets[rng.gen_range(0..targets.len())];
            let m = rng.gen_range(1..=12);
            let s = draw_sample(&FiniteDistribution::uniform_cube(n).unwrap(), m, case, target).unwrap();
            let out = erm_proportion_matcher(&desc, &s, DEFAULT_BUDGET).unwrap();
            assert_eq!(out.residual, ratio(0, 1), "realizable case {case}");
            let mut brute = Best::new();
            for h in &targets {
                let c = positive_count(h, &s).unwrap();
                brute.offer(c.abs_diff(s.positives()), c, h.clone());
            }
            assert_eq!(brute.into_inner().unwrap().2, out.hypothesis);
            assert_eq!(empirical_proportion(&out.hypothesis, &s).unwrap(), out.achieved_empirical);
        }
    }

    #[test]
    fn noisy_parity_examples() {
        let h = noisy_parity_decision(&ratio(12, 100), &ratio(1, 5), 4).unwrap();
        assert_eq!(h, Hypothesis::trivial_parity(4).unwrap());
        assert_eq!(noisy_parity_threshold(&ratio(1, 5)).unwrap(), ratio(7, 20));
        for eta in [ratio(0, 1), ratio(1, 5), ratio(49, 100)] {
            assert_eq!(noisy_parity_decision(&ratio(1, 2), &eta, 3).unwrap(), Hypothesis::parity("100").unwrap());
        }
        assert_eq!(noisy_parity_decision(&ratio(0, 1), &ratio(0, 1), 2).unwrap(), Hypothesis::parity("00").unwrap());
        assert!(matches!(noisy_parity_decision(&ratio(0, 1), &ratio(1, 2), 2), Err(LlpError::InvalidNoiseBound(_))));
        let s = bits(&["10", "01", "11", "00"], 2);
        let out = noisy_parity_uniform_learner(&s, &ratio(1, 5), 2).unwrap();
        assert_eq!(out.hypothesis, Hypothesis::parity("10").unwrap());
        assert_eq!(out.achieved_empirical, ratio(1, 2));
    }

    #[test]
    fn learner_ids_round_trip() {
        for id in ["improper", "gap", "erm", "subset_sum", "window", "halfspace", "noisy_parity"] {
            let parsed: LearnerId = id.parse().unwrap();
            assert_eq!(parsed.to_string(), id);
        }
        assert_eq!("subset-sum".parse::<LearnerId>().unwrap(), LearnerId::SubsetSum);
        assert!("svm".parse::<LearnerId>().is_err());
    }
}
