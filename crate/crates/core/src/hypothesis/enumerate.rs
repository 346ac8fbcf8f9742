use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::gf2::ParityLabelings;
use super::{encode, BitString, ClassDescriptor, ClassId, Hypothesis, WindowSet};
use crate::error::{LlpError, Result};
use crate::model::{check_domain, BitVector, Point, Sample};

/// A labeling of a sample's unique points (canonical order) together with a
/// hypothesis realizing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    pub labels: Vec<bool>,
    pub witness: Hypothesis,
}

impl Labeling {
    /// Positives counted with the sample's multiplicities.
    pub fn weighted_count(&self, sample: &Sample) -> u64 {
        self.labels
            .iter()
            .zip(sample.unique_counts())
            .filter(|(l, _)| **l)
            .map(|(_, (_, a))| a)
            .sum()
    }
}

fn sorted_ground(desc: &ClassDescriptor) -> Result<Vec<u64>> {
    let mut g = desc.ground_set.clone().ok_or_else(|| {
        LlpError::InfiniteClass(format!("{:?} over ℕ needs a ground set to enumerate", desc.class_id))
    })?;
    g.sort_unstable();
    g.dedup();
    Ok(g)
}

/// Exact number of hypotheses `enumerate_class` would produce.
pub fn class_size(desc: &ClassDescriptor) -> Result<u128> {
    desc.validate()?;
    let pow2 = |k: usize| -> Result<u128> {
        if k >= 127 {
            Err(LlpError::BudgetExceeded { budget: u64::MAX })
        } else {
            Ok(1u128 << k)
        }
    };
    match desc.class_id {
        ClassId::Parity => pow2(desc.parity_support()),
        ClassId::MonotoneDisjunction | ClassId::MonotoneConjunction => pow2(desc.n),
        ClassId::FiniteSubset => pow2(sorted_ground(desc)?.len()),
        ClassId::Window => {
            let g = sorted_ground(desc)?;
            let k = desc.k.unwrap_or(0);
            let mut total = 1u128;
            for (i, &v) in g.iter().enumerate() {
                let later = g[i + 1..].iter().take_while(|&&w| w - v <= k).count();
                total = total.saturating_add(pow2(later)?);
            }
            Ok(total)
        }
        ClassId::Halfspace => Err(LlpError::InfiniteClass(
            "halfspaces with rational coefficients are not enumerable".into(),
        )),
    }
}

/// Exhaustive, duplicate-free listing of the class.
///
/// Order: parities, disjunctions and conjunctions by mask word; finite
/// subsets by bitmask over the sorted ground set; windows as the empty set
/// followed by, per leftmost element, every subset of its window.
pub fn enumerate_class(
    desc: &ClassDescriptor,
    budget: u64,
) -> Result<Box<dyn Iterator<Item = Hypothesis>>> {
    let size = class_size(desc)?;
    if size > budget as u128 {
        return Err(LlpError::BudgetExceeded { budget });
    }
    let n = desc.n;
    Ok(match desc.class_id {
        ClassId::Parity => {
            let support = desc.parity_support();
            Box::new((0u64..1 << support).map(move |a| Hypothesis::Parity {
                mask: BitVector::from_word(n, a << (n - support)).expect("mask fits"),
            }))
        }
        ClassId::MonotoneDisjunction | ClassId::MonotoneConjunction => {
            let disjunction = desc.class_id == ClassId::MonotoneDisjunction;
            Box::new((0u64..1 << n).map(move |a| {
                let vars = BitVector::from_word(n, a).expect("mask fits").ones().collect();
                if disjunction {
                    Hypothesis::MonotoneDisjunction { n, vars }
                } else {
                    Hypothesis::MonotoneConjunction { n, vars }
                }
            }))
        }
        ClassId::FiniteSubset => {
            let g = sorted_ground(desc)?;
            Box::new((0u64..1 << g.len()).map(move |bits| {
                Hypothesis::finite_subset(
                    g.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, &v)| v),
                )
            }))
        }
        ClassId::Window => {
            let g = sorted_ground(desc)?;
            let k = desc.k.unwrap_or(0);
            let mut out = vec![Hypothesis::Window(WindowSet::new(k, []).expect("empty window"))];
            for (i, &v) in g.iter().enumerate() {
                let later: Vec<u64> = g[i + 1..].iter().copied().take_while(|&w| w - v <= k).collect();
                for bits in 0u64..1 << later.len() {
                    let elems = std::iter::once(v).chain(
                        later.iter().enumerate().filter(|(j, _)| bits >> j & 1 == 1).map(|(_, &w)| w),
                    );
                    out.push(Hypothesis::Window(WindowSet::new(k, elems).expect("span ≤ k")));
                }
            }
            Box::new(out.into_iter())
        }
        ClassId::Halfspace => unreachable!("class_size rejects halfspaces"),
    })
}

/// `Σ_{i≤d} C(u, i)`, the Sauer–Shelah bound on labelings of `u` points.
pub fn sauer_bound(u: u64, d: u64) -> u128 {
    let mut total = 0u128;
    let mut binom = 1u128;
    for i in 0..=d.min(u) {
        total = total.saturating_add(binom);
        binom = binom.saturating_mul((u - i) as u128) / (i as u128 + 1);
    }
    total
}

/// For classes over ℕ without a ground set, the sample's distinct values.
pub(crate) fn resolve_ground_set(desc: &ClassDescriptor, sample: &Sample) -> ClassDescriptor {
    match desc.class_id {
        ClassId::FiniteSubset | ClassId::Window if desc.ground_set.is_none() => desc.with_ground_set(
            sample.unique_counts().iter().filter_map(|(p, _)| p.as_nat()).collect(),
        ),
        _ => desc.clone(),
    }
}

/// Every distinct labeling the class achieves on the sample's unique points,
/// each with its smallest-encoding witness, sorted by labeling.
pub fn distinct_labelings(desc: &ClassDescriptor, sample: &Sample, budget: u64) -> Result<Vec<Labeling>> {
    desc.validate()?;
    if let Some(d) = sample.domain() {
        check_domain(desc.domain(), d)?;
    }
    let unique: Vec<Point> = sample.unique_counts().iter().map(|(p, _)| *p).collect();
    if desc.class_id == ClassId::Parity {
        let points: Vec<BitVector> = unique.iter().map(|p| *p.as_bits().expect("cube domain")).collect();
        let pl = ParityLabelings::new(&points, desc.n, desc.parity_support());
        if pl.rank() >= 64 || 1u64 << pl.rank() > budget {
            return Err(LlpError::BudgetExceeded { budget });
        }
        let mut out: Vec<Labeling> = pl
            .enumerate()
            .into_iter()
            .map(|(labels, word)| Labeling {
                labels,
                witness: Hypothesis::Parity { mask: BitVector::from_word(desc.n, word).expect("mask fits") },
            })
            .collect();
        out.sort_by(|a, b| a.labels.cmp(&b.labels));
        return Ok(out);
    }
    let desc = resolve_ground_set(desc, sample);
    let mut best: BTreeMap<Vec<bool>, (BitString, Hypothesis)> = BTreeMap::new();
    for h in enumerate_class(&desc, budget)? {
        let labels = unique.iter().map(|x| h.evaluate(x)).collect::<Result<Vec<_>>>()?;
        let code = encode(&h);
        match best.get(&labels) {
            Some((existing, _)) if existing <= &code => {}
            _ => {
                best.insert(labels, (code, h));
            }
        }
    }
    Ok(best
        .into_iter()
        .map(|(labels, (_, witness))| Labeling { labels, witness })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::{vc_dimension, DEFAULT_BUDGET};
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use std::collections::BTreeSet;

    fn bits_sample(points: &[&str]) -> Sample {
        Sample::with_count(points.iter().map(|s| Point::bits(s).unwrap()).collect(), 0).unwrap()
    }

    #[test]
    fn enumerate_examples() {
        let parities: Vec<_> = enumerate_class(&ClassDescriptor::parities(2), DEFAULT_BUDGET).unwrap().collect();
        let masks: Vec<String> = parities
            .iter()
            .map(|h| match h {
                Hypothesis::Parity { mask } => mask.to_string(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(masks, ["00", "01", "10", "11"]);
        assert_eq!(enumerate_class(&ClassDescriptor::disjunctions(3), DEFAULT_BUDGET).unwrap().count(), 8);
        let subsets: BTreeSet<_> = enumerate_class(&ClassDescriptor::finite_subsets(Some(vec![1, 2, 3])), DEFAULT_BUDGET)
            .unwrap()
            .collect::<Vec<_>>()
            .into_iter()
            .map(|h| encode(&h))
            .collect();
        assert_eq!(subsets.len(), 8);
    }

    #[test]
    fn enumerate_errors() {
        assert_eq!(
            enumerate_class(&ClassDescriptor::parities(10), 1000).err(),
            Some(LlpError::BudgetExceeded { budget: 1000 })
        );
        assert!(matches!(
            enumerate_class(&ClassDescriptor::finite_subsets(None), 10).err(),
            Some(LlpError::InfiniteClass(_))
        ));
        assert!(matches!(
            enumerate_class(&ClassDescriptor::halfspaces(2), 10).err(),
            Some(LlpError::InfiniteClass(_))
        ));
    }

    #[test]
    fn restricted_parities_use_leading_coordinates() {
        let hs: Vec<_> = enumerate_class(&ClassDescriptor::parities_on_first(5, 2), 100).unwrap().collect();
        assert_eq!(hs.len(), 4);
        let desc = ClassDescriptor::parities_on_first(5, 2);
        assert!(hs.iter().all(|h| desc.contains(h)));
        assert!(hs.contains(&Hypothesis::parity("11000").unwrap()));
    }

    #[test]
    fn window_enumeration_is_span_feasible_and_complete() {
        let ground = vec![1, 2, 4, 7, 8];
        for k in 0..5 {
            let desc = ClassDescriptor::windows(k, Some(ground.clone()));
            let listed: Vec<_> = enumerate_class(&desc, DEFAULT_BUDGET).unwrap().collect();
            assert_eq!(listed.len() as u128, class_size(&desc).unwrap());
            let listed_sets: BTreeSet<Vec<u64>> = listed
                .iter()
                .map(|h| match h {
                    Hypothesis::Window(w) => w.elems().iter().copied().collect(),
                    _ => unreachable!(),
                })
                .collect();
            assert_eq!(listed_sets.len(), listed.len());
            let brute: BTreeSet<Vec<u64>> = (0u32..1 << ground.len())
                .map(|b| ground.iter().enumerate().filter(|(i, _)| b >> i & 1 == 1).map(|(_, &v)| v).collect::<Vec<_>>())
                .filter(|s| s.is_empty() || s[s.len() - 1] - s[0] <= k)
                .collect();
            assert_eq!(listed_sets, brute, "k = {k}");
        }
    }

    #[test]
    fn distinct_labelings_examples() {
        let s = bits_sample(&["00", "11"]);
        let ls = distinct_labelings(&ClassDescriptor::parities(2), &s, DEFAULT_BUDGET).unwrap();
        let labels: Vec<_> = ls.iter().map(|l| l.labels.clone()).collect();
        assert_eq!(labels, vec![vec![false, false], vec![false, true]]);
        assert_eq!(ls[0].witness, Hypothesis::parity("00").unwrap());

        let s = bits_sample(&["0", "1"]);
        let ls = distinct_labelings(&ClassDescriptor::disjunctions(1), &s, DEFAULT_BUDGET).unwrap();
        assert_eq!(
            ls,
            vec![
                Labeling { labels: vec![false, false], witness: Hypothesis::disjunction(1, []).unwrap() },
                Labeling { labels: vec![false, true], witness: Hypothesis::disjunction(1, [1]).unwrap() },
            ]
        );

        let empty = Sample::with_count(vec![], 0).unwrap();
        for desc in [ClassDescriptor::parities(3), ClassDescriptor::conjunctions(2)] {
            let ls = distinct_labelings(&desc, &empty, DEFAULT_BUDGET).unwrap();
            assert_eq!(ls.len(), 1);
            assert!(ls[0].labels.is_empty());
        }
    }

    /// Brute-force twin of the GF(2) path: every mask, dedupe, min word.
    fn parity_brute(desc: &ClassDescriptor, sample: &Sample) -> Vec<Labeling> {
        let mut best: BTreeMap<Vec<bool>, u64> = BTreeMap::new();
        let n = desc.n;
        let support = desc.parity_support();
        for a in 0u64..1 << support {
            let mask = BitVector::from_word(n, a << (n - support)).unwrap();
            let labels: Vec<bool> =
                sample.unique_counts().iter().map(|(p, _)| mask.parity_with(p.as_bits().unwrap())).collect();
            let e = best.entry(labels).or_insert(mask.word());
            *e = (*e).min(mask.word());
        }
        best.into_iter()
            .map(|(labels, w)| Labeling { labels, witness: Hypothesis::Parity { mask: BitVector::from_word(n, w).unwrap() } })
            .collect()
    }

    #[test]
    fn gf2_path_matches_brute_force_enumeration() {
        let mut rng = rng_from_seed(17);
        for _ in 0..300 {
            let n = rng.gen_range(1..=8);
            let support = rng.gen_range(0..=n);
            let m = rng.gen_range(0..=14);
            let points = (0..m).map(|_| Point::Bits(BitVector::random(n, &mut rng).unwrap())).collect();
            let sample = Sample::with_count(points, 0).unwrap();
            let desc = ClassDescriptor::parities_on_first(n, support);
            assert_eq!(distinct_labelings(&desc, &sample, DEFAULT_BUDGET).unwrap(), parity_brute(&desc, &sample));
        }
    }

    #[test]
    fn sauer_bound_values() {
        assert_eq!(sauer_bound(5, 0), 1);
        assert_eq!(sauer_bound(5, 2), 1 + 5 + 10);
        assert_eq!(sauer_bound(3, 7), 8);
        assert_eq!(vc_dimension(&ClassDescriptor::parities(3)).finite(), Some(3));
    }
}
