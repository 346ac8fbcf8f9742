use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{LlpError, Result};
use crate::hypothesis::{ClassDescriptor, Hypothesis};
use crate::model::{check_domain, Point};

fn distinct(values: &[u64], what: &str) -> Result<BTreeSet<u64>> {
    let set: BTreeSet<u64> = values.iter().copied().collect();
    if set.len() != values.len() {
        return Err(LlpError::InvalidInstance(format!("{what} repeats an element")));
    }
    Ok(set)
}

fn check_subsets(universe: &BTreeSet<u64>, subsets: &[Vec<u64>]) -> Result<()> {
    for (i, s) in subsets.iter().enumerate() {
        distinct(s, &format!("subset {i}"))?;
        if let Some(x) = s.iter().find(|x| !universe.contains(x)) {
            return Err(LlpError::InvalidInstance(format!("subset {i} has {x} outside the universe")));
        }
    }
    Ok(())
}

/// Exact cover by 3-sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawX3c")]
pub struct X3cInstance {
    universe: Vec<u64>,
    #[serde(rename = "subsets")]
    triples: Vec<Vec<u64>>,
}

#[derive(Deserialize)]
struct RawX3c {
    universe: Vec<u64>,
    #[serde(alias = "triples")]
    subsets: Vec<Vec<u64>>,
}

impl TryFrom<RawX3c> for X3cInstance {
    type Error = LlpError;

    fn try_from(raw: RawX3c) -> Result<Self> {
        X3cInstance::new(raw.universe, raw.subsets)
    }
}

impl X3cInstance {
    pub fn new(universe: Vec<u64>, triples: Vec<Vec<u64>>) -> Result<Self> {
        let u = distinct(&universe, "universe")?;
        if !universe.len().is_multiple_of(3) {
            return Err(LlpError::InvalidInstance(format!("|U| = {} is not divisible by 3", universe.len())));
        }
        if let Some(i) = triples.iter().position(|s| s.len() != 3) {
            return Err(LlpError::InvalidInstance(format!("subset {i} is not a triple")));
        }
        check_subsets(&u, &triples)?;
        Ok(X3cInstance { universe, triples })
    }

    pub fn universe(&self) -> &[u64] {
        &self.universe
    }

    pub fn triples(&self) -> &[Vec<u64>] {
        &self.triples
    }

    /// Cover size `t = |U|/3`.
    pub fn t(&self) -> usize {
        self.universe.len() / 3
    }
}

/// Exact partial set cover: is there a subfamily whose union has exactly `k` elements?
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawEpsc")]
pub struct EpscInstance {
    universe: Vec<u64>,
    subsets: Vec<Vec<u64>>,
    k: usize,
}

#[derive(Deserialize)]
struct RawEpsc {
    universe: Vec<u64>,
    subsets: Vec<Vec<u64>>,
    k: usize,
}

impl TryFrom<RawEpsc> for EpscInstance {
    type Error = LlpError;

    fn try_from(raw: RawEpsc) -> Result<Self> {
        EpscInstance::new(raw.universe, raw.subsets, raw.k)
    }
}

impl EpscInstance {
    pub fn new(universe: Vec<u64>, subsets: Vec<Vec<u64>>, k: usize) -> Result<Self> {
        let u = distinct(&universe, "universe")?;
        if k > universe.len() {
            return Err(LlpError::InvalidInstance(format!("k = {k} exceeds |U| = {}", universe.len())));
        }
        check_subsets(&u, &subsets)?;
        Ok(EpscInstance { universe, subsets, k })
    }

    pub fn universe(&self) -> &[u64] {
        &self.universe
    }

    pub fn subsets(&self) -> &[Vec<u64>] {
        &self.subsets
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Does some hypothesis of `class` label a sub-multiset of total
/// multiplicity exactly `k` positive?
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawConsistency")]
pub struct ConsistencyInstance {
    points: Vec<Point>,
    mult: Vec<u64>,
    k: u64,
    class: ClassDescriptor,
}

#[derive(Deserialize)]
struct RawConsistency {
    points: Vec<Point>,
    mult: Vec<u64>,
    k: u64,
    class: ClassDescriptor,
}

impl TryFrom<RawConsistency> for ConsistencyInstance {
    type Error = LlpError;

    fn try_from(raw: RawConsistency) -> Result<Self> {
        ConsistencyInstance::new(raw.points, raw.mult, raw.k, raw.class)
    }
}

impl ConsistencyInstance {
    pub fn new(points: Vec<Point>, mult: Vec<u64>, k: u64, class: ClassDescriptor) -> Result<Self> {
        class.validate()?;
        if points.len() != mult.len() {
            return Err(LlpError::InvalidInstance(format!(
                "{} points but {} multiplicities",
                points.len(),
                mult.len()
            )));
        }
        if mult.contains(&0) {
            return Err(LlpError::InvalidInstance("multiplicities must be at least 1".into()));
        }
        let unique: BTreeSet<&Point> = points.iter().collect();
        if unique.len() != points.len() {
            return Err(LlpError::InvalidInstance("points must be distinct".into()));
        }
        for p in &points {
            check_domain(class.domain(), p.domain())?;
        }
        let total: u64 = mult.iter().sum();
        if k > total {
            return Err(LlpError::InvalidInstance(format!("k = {k} exceeds |X| = {total}")));
        }
        Ok(ConsistencyInstance { points, mult, k, class })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn mult(&self) -> &[u64] {
        &self.mult
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn class(&self) -> &ClassDescriptor {
        &self.class
    }

    /// `|X| = Σ a_i`.
    pub fn total(&self) -> u64 {
        self.mult.iter().sum()
    }

    /// Positive multiplicity of `h`.
    pub fn positive_mass(&self, h: &Hypothesis) -> Result<u64> {
        let mut sum = 0;
        for (x, a) in self.points.iter().zip(&self.mult) {
            if h.evaluate(x)? {
                sum += a;
            }
        }
        Ok(sum)
    }
}
