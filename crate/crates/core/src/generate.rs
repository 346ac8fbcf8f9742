//! Seeded random instances, targets and distributions.

use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{LlpError, Result};
use crate::hypothesis::{ClassDescriptor, ClassId, Hypothesis};
use crate::model::{BitVector, FiniteDistribution, Point};
use crate::rational::{self, Rational};
use crate::reductions::{ConsistencyInstance, EpscInstance, X3cInstance};
use crate::rng::{rng_from_seed, LabRng};

/// Universe `{1..u}`. Half of the seeds plant an exact cover (when there
/// are enough triples); the rest of the triples are uniform 3-subsets.
pub fn random_x3c(universe_size: usize, triples: usize, seed: u64) -> Result<X3cInstance> {
    if !universe_size.is_multiple_of(3) {
        return Err(LlpError::InvalidParams(format!("universe size {universe_size} is not divisible by 3")));
    }
    if universe_size < 3 && triples > 0 {
        return Err(LlpError::InvalidParams("triples need at least 3 elements".into()));
    }
    let mut rng = rng_from_seed(seed);
    let universe: Vec<u64> = (1..=universe_size as u64).collect();
    let t = universe_size / 3;
    let mut family: Vec<Vec<u64>> = Vec::with_capacity(triples);
    if t <= triples && rng.gen_bool(0.5) {
        let mut shuffled = universe.clone();
        shuffled.shuffle(&mut rng);
        family.extend(shuffled.chunks(3).map(<[u64]>::to_vec));
    }
    while family.len() < triples {
        family.push(index::sample(&mut rng, universe_size, 3).into_iter().map(|i| i as u64 + 1).collect());
    }
    family.shuffle(&mut rng);
    for s in &mut family {
        s.sort_unstable();
    }
    X3cInstance::new(universe, family)
}

/// Universe `{1..u}`, each subset taking each element with probability 1/2,
/// and `k` uniform in `0..=u`.
pub fn random_epsc(universe_size: usize, subsets: usize, seed: u64) -> Result<EpscInstance> {
    let mut rng = rng_from_seed(seed);
    let universe: Vec<u64> = (1..=universe_size as u64).collect();
    let family = (0..subsets)
        .map(|_| universe.iter().copied().filter(|_| rng.gen_bool(0.5)).collect())
        .collect();
    let k = rng.gen_range(0..=universe_size);
    EpscInstance::new(universe, family, k)
}

fn distinct_points(desc: &ClassDescriptor, count: usize, rng: &mut LabRng) -> Result<Vec<Point>> {
    let mut seen = BTreeSet::new();
    match desc.class_id {
        ClassId::FiniteSubset | ClassId::Window => {
            while seen.len() < count {
                seen.insert(Point::Nat(rng.gen_range(1..=(4 * count as u64).max(8))));
            }
        }
        _ => {
            let cap = if desc.n >= 63 { u64::MAX } else { 1u64 << desc.n };
            if count as u64 > cap {
                return Err(LlpError::InvalidParams(format!("only {cap} points exist in dimension {}", desc.n)));
            }
            while seen.len() < count {
                seen.insert(Point::Bits(BitVector::random(desc.n, rng)?));
            }
        }
    }
    Ok(seen.into_iter().collect())
}

/// Random distinct points with multiplicities summing to at most
/// `max_total`, and `k` uniform in `0..=|X|`.
pub fn random_consistency(desc: &ClassDescriptor, max_total: u64, seed: u64) -> Result<ConsistencyInstance> {
    desc.validate()?;
    if max_total == 0 {
        return Err(LlpError::InvalidParams("max_total must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let room = match desc.class_id {
        ClassId::FiniteSubset | ClassId::Window => max_total,
        _ if desc.n < 63 => max_total.min(1 << desc.n),
        _ => max_total,
    };
    let unique = rng.gen_range(1..=room) as usize;
    let points = distinct_points(desc, unique, &mut rng)?;
    let total = rng.gen_range(unique as u64..=max_total);
    let mut mult = vec![1u64; unique];
    for _ in unique as u64..total {
        mult[rng.gen_range(0..unique)] += 1;
    }
    let k = rng.gen_range(0..=total);
    ConsistencyInstance::new(points, mult, k, desc.clone())
}

fn random_subset<T: Copy>(items: &[T], rng: &mut LabRng) -> Vec<T> {
    items.iter().copied().filter(|_| rng.gen_bool(0.5)).collect()
}

/// A uniformly random member of an enumerable class (each coordinate or
/// element independently); halfspaces get small integer weights.
pub fn random_target(desc: &ClassDescriptor, seed: u64) -> Result<Hypothesis> {
    desc.validate()?;
    let mut rng = rng_from_seed(seed);
    let vars: Vec<usize> = (1..=desc.n).collect();
    match desc.class_id {
        ClassId::Parity => {
            let support: Vec<usize> = (1..=desc.restriction.unwrap_or(desc.n)).collect();
            Ok(Hypothesis::Parity { mask: BitVector::from_coordinates(desc.n, random_subset(&support, &mut rng))? })
        }
        ClassId::MonotoneDisjunction => Hypothesis::disjunction(desc.n, random_subset(&vars, &mut rng)),
        ClassId::MonotoneConjunction => Hypothesis::conjunction(desc.n, random_subset(&vars, &mut rng)),
        ClassId::FiniteSubset => {
            let ground = desc.ground_set.as_ref().ok_or_else(|| {
                LlpError::InfiniteClass("a random finite subset needs a ground set".into())
            })?;
            Ok(Hypothesis::finite_subset(random_subset(ground, &mut rng)))
        }
        ClassId::Window => {
            let mut ground = desc.ground_set.clone().ok_or_else(|| {
                LlpError::InfiniteClass("a random window needs a ground set".into())
            })?;
            ground.sort_unstable();
            ground.dedup();
            let k = desc.k.unwrap_or(0);
            if ground.is_empty() || rng.gen_bool(0.1) {
                return Hypothesis::window(k, []);
            }
            let start = ground[rng.gen_range(0..ground.len())];
            let rest: Vec<u64> = ground.iter().copied().filter(|&v| v > start && v - start <= k).collect();
            Hypothesis::window(k, std::iter::once(start).chain(random_subset(&rest, &mut rng)))
        }
        ClassId::Halfspace => {
            let normal: Vec<Rational> = (0..desc.n).map(|_| rational::ratio(rng.gen_range(-8..=8), 1)).collect();
            let threshold = rational::ratio(rng.gen_range(-8..=8), 2);
            Hypothesis::halfspace(normal, threshold)
        }
    }
}

/// Distinct naturals in `1..=8·support` with integer weights in `1..=10`, normalized.
pub fn random_nat_distribution(support: usize, seed: u64) -> Result<FiniteDistribution> {
    if support == 0 {
        return Err(LlpError::EmptySupport);
    }
    let mut rng = rng_from_seed(seed);
    let values = index::sample(&mut rng, 8 * support, support);
    let mut values: Vec<u64> = values.into_iter().map(|v| v as u64 + 1).collect();
    values.sort_unstable();
    let entries = values
        .into_iter()
        .map(|v| (Point::Nat(v), rational::ratio(rng.gen_range(1..=10), 1)))
        .collect();
    FiniteDistribution::normalized(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::{enumerate_class, DEFAULT_BUDGET};

    #[test]
    fn x3c_is_seeded_and_valid() {
        let a = random_x3c(6, 4, 7).unwrap();
        assert_eq!(a, random_x3c(6, 4, 7).unwrap());
        assert_eq!(a.triples().len(), 4);
        assert!(random_x3c(5, 2, 1).is_err());
        let planted = (0..40).filter(|&s| {
            let inst = random_x3c(9, 5, s).unwrap();
            crate::oracles::brute_x3c(&inst, DEFAULT_BUDGET).unwrap().decision == Some(true)
        });
        assert!(planted.count() >= 10);
    }

    #[test]
    fn consistency_respects_bounds() {
        for seed in 0..100 {
            let desc = if seed % 2 == 0 { ClassDescriptor::disjunctions(3) } else { ClassDescriptor::conjunctions(2) };
            let inst = random_consistency(&desc, 10, seed).unwrap();
            assert!(inst.total() <= 10 && inst.k() <= inst.total());
            assert!(inst.points().len() <= 1 << desc.n);
        }
    }

    #[test]
    fn targets_belong_to_their_class() {
        let classes = [
            ClassDescriptor::parities_on_first(6, 3),
            ClassDescriptor::disjunctions(4),
            ClassDescriptor::conjunctions(4),
            ClassDescriptor::finite_subsets(Some(vec![2, 5, 9])),
            ClassDescriptor::windows(3, Some(vec![1, 2, 4, 8, 9])),
            ClassDescriptor::halfspaces(3),
        ];
        for desc in &classes {
            for seed in 0..30 {
                let h = random_target(desc, seed).unwrap();
                assert!(desc.contains(&h), "{h} not in {desc:?}");
            }
        }
        let all: Vec<Hypothesis> = enumerate_class(&classes[0], DEFAULT_BUDGET).unwrap().collect();
        let hit: BTreeSet<String> = (0..200).map(|s| random_target(&classes[0], s).unwrap().to_string()).collect();
        assert_eq!(hit.len(), all.len());
    }

    #[test]
    fn nat_distribution_sums_to_one() {
        let d = random_nat_distribution(8, 3).unwrap();
        assert_eq!(d.support_size(), Some(8));
        let total: Rational = d.atoms().unwrap().iter().map(|(_, w)| w.clone()).sum();
        assert_eq!(total, rational::one());
    }
}
