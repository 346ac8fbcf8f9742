use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ConsistencyInstance, EpscInstance, X3cInstance};
use crate::error::{LlpError, Result};
use crate::hypothesis::ClassDescriptor;
use crate::model::{BitVector, Point, MAX_BITS};
use crate::oracles::{brute_consistency, brute_epsc, brute_x3c};

/// Pads each triple `s_i` with `ℓ` private elements `z_{i,1..ℓ}`. With
/// `ℓ > |U|`, a union of size `|U| + ℓt` must use exactly `t` triples that
/// cover `U`.
pub fn x3c_to_epsc(inst: &X3cInstance, ell: Option<usize>) -> Result<EpscInstance> {
    let u = inst.universe().len();
    let ell = ell.unwrap_or(u + 1);
    if ell <= u {
        return Err(LlpError::InvalidEll { ell, universe: u });
    }
    let base = inst.universe().iter().max().map_or(0, |m| m + 1);
    let aux = |i: usize, j: usize| -> Result<u64> {
        ((i * ell + j) as u64)
            .checked_add(base)
            .ok_or_else(|| LlpError::InvalidInstance("auxiliary elements overflow u64".into()))
    };
    let mut universe = inst.universe().to_vec();
    let mut subsets = Vec::with_capacity(inst.triples().len());
    for (i, s) in inst.triples().iter().enumerate() {
        let padding = (0..ell).map(|j| aux(i, j)).collect::<Result<Vec<_>>>()?;
        universe.extend(&padding);
        subsets.push(s.iter().copied().chain(padding).collect());
    }
    // With fewer than t triples, k exceeds the padded universe; elements in
    // no subset restore k ≤ |universe| without changing any union.
    let k = u + ell * inst.t();
    let mut r = inst.triples().len() * ell;
    while universe.len() < k {
        universe.push(aux(r, 0)?);
        r += 1;
    }
    EpscInstance::new(universe, subsets, k)
}

/// Bit `j` of element `i`'s point is `member(i ∈ s_j)`; equal points merge
/// into one with their multiplicity.
fn incidence_points(inst: &EpscInstance, member: bool) -> Result<Vec<(Point, u64)>> {
    let n = inst.subsets().len();
    if n > MAX_BITS {
        return Err(LlpError::InvalidInstance(format!("{n} subsets exceed {MAX_BITS} bits")));
    }
    let mut universe = inst.universe().to_vec();
    universe.sort_unstable();
    let mut merged: BTreeMap<Point, u64> = BTreeMap::new();
    for x in &universe {
        let mut bits = BitVector::zeros(n)?;
        for (j, s) in inst.subsets().iter().enumerate() {
            bits.set(j, s.contains(x) == member);
        }
        *merged.entry(Point::Bits(bits)).or_default() += 1;
    }
    Ok(merged.into_iter().collect())
}

fn consistency(points: Vec<(Point, u64)>, k: u64, class: ClassDescriptor) -> Result<ConsistencyInstance> {
    let (points, mult) = points.into_iter().unzip();
    ConsistencyInstance::new(points, mult, k, class)
}

/// Element `i` becomes a point whose bit `j` says `i ∈ s_j`; the disjunction
/// over `J` labels exactly the elements of `∪_{j∈J} s_j`.
pub fn epsc_to_disjunction_consistency(inst: &EpscInstance) -> Result<ConsistencyInstance> {
    let points = incidence_points(inst, true)?;
    consistency(points, inst.k() as u64, ClassDescriptor::disjunctions(inst.subsets().len()))
}

/// Complemented incidence: the conjunction over `J` labels exactly the
/// elements outside `∪_{j∈J} s_j`, so the target becomes `|U| − k`.
pub fn epsc_to_conjunction_consistency(inst: &EpscInstance) -> Result<ConsistencyInstance> {
    let points = incidence_points(inst, false)?;
    let k = (inst.universe().len() - inst.k()) as u64;
    consistency(points, k, ClassDescriptor::conjunctions(inst.subsets().len()))
}

/// Brute-force decisions along X3C → EPSC → consistency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainReport {
    pub x3c: bool,
    pub epsc: bool,
    pub disjunction: bool,
    pub conjunction: bool,
    pub agree: bool,
}

pub fn chain_check(inst: &X3cInstance, ell: Option<usize>, budget: u64) -> Result<ChainReport> {
    let decide = |d: Option<bool>| d.expect("decision problems report a decision");
    let x3c = decide(brute_x3c(inst, budget)?.decision);
    let epsc_inst = x3c_to_epsc(inst, ell)?;
    let epsc = decide(brute_epsc(&epsc_inst)?.decision);
    let disjunction = decide(brute_consistency(&epsc_to_disjunction_consistency(&epsc_inst)?, budget)?.decision);
    let conjunction = decide(brute_consistency(&epsc_to_conjunction_consistency(&epsc_inst)?, budget)?.decision);
    Ok(ChainReport { x3c, epsc, disjunction, conjunction, agree: x3c == epsc && epsc == disjunction && disjunction == conjunction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::{Hypothesis, DEFAULT_BUDGET};

    fn x3c(universe: Vec<u64>, triples: Vec<Vec<u64>>) -> X3cInstance {
        X3cInstance::new(universe, triples).unwrap()
    }

    #[test]
    fn padding_examples() {
        let one = x3c(vec![1, 2, 3], vec![vec![1, 2, 3]]);
        let e = x3c_to_epsc(&one, Some(4)).unwrap();
        assert_eq!((e.universe().len(), e.subsets()[0].len(), e.k()), (7, 7, 7));
        assert_eq!(brute_epsc(&e).unwrap().decision, Some(true));

        let dup = x3c(vec![1, 2, 3], vec![vec![1, 2, 3], vec![1, 2, 3]]);
        let e = x3c_to_epsc(&dup, Some(4)).unwrap();
        assert_eq!(e.k(), 7);
        assert_eq!(brute_epsc(&e).unwrap().decision, Some(true));

        let short = x3c((1..=6).collect(), vec![vec![1, 2, 3]]);
        let e = x3c_to_epsc(&short, Some(7)).unwrap();
        assert_eq!(e.k(), 20);
        assert_eq!(e.subsets()[0].len(), 10);
        assert_eq!(e.universe().len(), 20);
        assert_eq!(brute_epsc(&e).unwrap().decision, Some(false));
        assert_eq!(brute_x3c(&short, DEFAULT_BUDGET).unwrap().decision, Some(false));

        assert_eq!(x3c_to_epsc(&one, Some(3)), Err(LlpError::InvalidEll { ell: 3, universe: 3 }));
        assert_eq!(x3c_to_epsc(&one, None).unwrap().universe().len(), 7);
    }

    fn epsc(k: usize) -> EpscInstance {
        EpscInstance::new(vec![1, 2, 3], vec![vec![1, 2], vec![3]], k).unwrap()
    }

    #[test]
    fn disjunction_encoding() {
        let c = epsc_to_disjunction_consistency(&epsc(3)).unwrap();
        // x1 = x2 = 10 merge; x3 = 01.
        assert_eq!(c.points(), &[Point::bits("01").unwrap(), Point::bits("10").unwrap()]);
        assert_eq!(c.mult(), &[1, 2]);
        assert_eq!(c.positive_mass(&Hypothesis::disjunction(2, [1, 2]).unwrap()).unwrap(), 3);
        let c = epsc_to_disjunction_consistency(&epsc(1)).unwrap();
        assert_eq!(c.positive_mass(&Hypothesis::disjunction(2, [2]).unwrap()).unwrap(), 1);
        let empty = EpscInstance::new(vec![1, 2], vec![], 0).unwrap();
        let c = epsc_to_disjunction_consistency(&empty).unwrap();
        assert_eq!(c.positive_mass(&Hypothesis::disjunction(0, []).unwrap()).unwrap(), 0);
        assert_eq!(brute_consistency(&c, DEFAULT_BUDGET).unwrap().decision, Some(true));
    }

    #[test]
    fn conjunction_encoding() {
        let c = epsc_to_conjunction_consistency(&epsc(3)).unwrap();
        assert_eq!(c.k(), 0);
        assert_eq!(c.positive_mass(&Hypothesis::conjunction(2, [1, 2]).unwrap()).unwrap(), 0);
        let c = epsc_to_conjunction_consistency(&epsc(2)).unwrap();
        assert_eq!(c.k(), 1);
        assert_eq!(c.positive_mass(&Hypothesis::conjunction(2, [1]).unwrap()).unwrap(), 1);
        assert_eq!(c.positive_mass(&Hypothesis::conjunction(2, []).unwrap()).unwrap(), 3);
    }

    #[test]
    fn chain_agrees_on_small_cases() {
        let six: Vec<u64> = (1..=6).collect();
        for triples in [vec![vec![1, 2, 3], vec![4, 5, 6]], vec![vec![1, 2, 3], vec![3, 4, 5]], vec![]] {
            let r = chain_check(&x3c(six.clone(), triples), None, DEFAULT_BUDGET).unwrap();
            assert!(r.agree, "{r:?}");
        }
    }
}
