//! Concrete hypothesis classes.

mod encoding;
mod enumerate;
mod gf2;

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LlpError, Result};
use crate::model::{check_domain, BitVector, Domain, Point};
use crate::rational::{Rational, RationalParam};

pub use encoding::{decode, encode, BitString};
pub use enumerate::{class_size, distinct_labelings, enumerate_class, sauer_bound, Labeling};

/// Default cap on the number of candidates any exhaustive search may touch.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

/// Positive set of an `H_k` hypothesis: naturals whose pairwise distance is
/// at most `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WindowSet {
    k: u64,
    elems: BTreeSet<u64>,
}

impl WindowSet {
    pub fn new(k: u64, elems: impl IntoIterator<Item = u64>) -> Result<Self> {
        let elems: BTreeSet<u64> = elems.into_iter().collect();
        if let (Some(lo), Some(hi)) = (elems.first(), elems.last()) {
            if hi - lo > k {
                return Err(LlpError::MalformedHypothesis(format!(
                    "window elements span {} > k = {k}",
                    hi - lo
                )));
            }
        }
        Ok(WindowSet { k, elems })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn elems(&self) -> &BTreeSet<u64> {
        &self.elems
    }
}

/// A hypothesis of one of the concrete classes, or the improper randomized
/// constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// `x ↦ a·x mod 2`.
    Parity { mask: BitVector },
    /// `⋁_{j∈vars} x^j`, 1-based variables.
    MonotoneDisjunction { n: usize, vars: BTreeSet<usize> },
    /// `⋀_{j∈vars} x^j`, 1-based variables.
    MonotoneConjunction { n: usize, vars: BTreeSet<usize> },
    FiniteSubset { elems: BTreeSet<u64> },
    Window(WindowSet),
    /// `x ↦ [normal·x > threshold]`.
    Halfspace { normal: Vec<Rational>, threshold: Rational },
    /// Emits 1 with probability `p`, independently of the input. Improper.
    ConstantRandom { p: Rational },
}

impl Hypothesis {
    pub fn parity(mask: &str) -> Result<Self> {
        Ok(Hypothesis::Parity { mask: mask.parse()? })
    }

    pub fn trivial_parity(n: usize) -> Result<Self> {
        Ok(Hypothesis::Parity { mask: BitVector::zeros(n)? })
    }

    pub fn disjunction(n: usize, vars: impl IntoIterator<Item = usize>) -> Result<Self> {
        let vars = checked_vars(n, vars)?;
        Ok(Hypothesis::MonotoneDisjunction { n, vars })
    }

    pub fn conjunction(n: usize, vars: impl IntoIterator<Item = usize>) -> Result<Self> {
        let vars = checked_vars(n, vars)?;
        Ok(Hypothesis::MonotoneConjunction { n, vars })
    }

    pub fn finite_subset(elems: impl IntoIterator<Item = u64>) -> Self {
        Hypothesis::FiniteSubset { elems: elems.into_iter().collect() }
    }

    pub fn window(k: u64, elems: impl IntoIterator<Item = u64>) -> Result<Self> {
        Ok(Hypothesis::Window(WindowSet::new(k, elems)?))
    }

    pub fn halfspace(normal: Vec<Rational>, threshold: Rational) -> Result<Self> {
        BitVector::zeros(normal.len())?;
        Ok(Hypothesis::Halfspace { normal, threshold })
    }

    pub fn constant_random(p: Rational) -> Result<Self> {
        if p.is_negative() || p > Rational::one() {
            return Err(LlpError::MalformedHypothesis(format!("probability {p} outside [0,1]")));
        }
        Ok(Hypothesis::ConstantRandom { p })
    }

    /// Re-checks every construction invariant.
    pub fn validate(&self) -> Result<()> {
        match self {
            Hypothesis::MonotoneDisjunction { n, vars } | Hypothesis::MonotoneConjunction { n, vars } => {
                checked_vars(*n, vars.iter().copied()).map(|_| ())
            }
            Hypothesis::Window(w) => WindowSet::new(w.k, w.elems.iter().copied()).map(|_| ()),
            Hypothesis::Halfspace { normal, .. } => BitVector::zeros(normal.len()).map(|_| ()),
            Hypothesis::ConstantRandom { p } => Hypothesis::constant_random(p.clone()).map(|_| ()),
            Hypothesis::Parity { .. } | Hypothesis::FiniteSubset { .. } => Ok(()),
        }
    }

    /// `None` for the randomized constant, which accepts any domain.
    pub fn domain(&self) -> Option<Domain> {
        match self {
            Hypothesis::Parity { mask } => Some(Domain::Cube(mask.len())),
            Hypothesis::MonotoneDisjunction { n, .. } | Hypothesis::MonotoneConjunction { n, .. } => {
                Some(Domain::Cube(*n))
            }
            Hypothesis::Halfspace { normal, .. } => Some(Domain::Cube(normal.len())),
            Hypothesis::FiniteSubset { .. } | Hypothesis::Window(_) => Some(Domain::Naturals),
            Hypothesis::ConstantRandom { .. } => None,
        }
    }

    pub fn check_domain(&self, domain: Domain) -> Result<()> {
        match self.domain() {
            Some(own) => check_domain(own, domain),
            None => Ok(()),
        }
    }

    pub fn is_proper(&self) -> bool {
        !matches!(self, Hypothesis::ConstantRandom { .. })
    }

    /// Deterministic label. The randomized constant needs
    /// [`Hypothesis::evaluate_with_rng`].
    pub fn evaluate(&self, x: &Point) -> Result<bool> {
        self.check_domain(x.domain())?;
        Ok(match (self, x) {
            (Hypothesis::Parity { mask }, Point::Bits(b)) => mask.parity_with(b),
            (Hypothesis::MonotoneDisjunction { vars, .. }, Point::Bits(b)) => {
                vars.iter().any(|&j| b.get(j - 1))
            }
            (Hypothesis::MonotoneConjunction { vars, .. }, Point::Bits(b)) => {
                vars.iter().all(|&j| b.get(j - 1))
            }
            (Hypothesis::FiniteSubset { elems }, Point::Nat(v)) => elems.contains(v),
            (Hypothesis::Window(w), Point::Nat(v)) => w.elems.contains(v),
            (Hypothesis::Halfspace { normal, threshold }, Point::Bits(b)) => {
                let mut dot = Rational::zero();
                for (i, w) in normal.iter().enumerate() {
                    if b.get(i) {
                        dot += w;
                    }
                }
                &dot > threshold
            }
            (Hypothesis::ConstantRandom { .. }, _) => {
                return Err(LlpError::InvalidParams(
                    "the randomized constant hypothesis needs an RNG to evaluate".into(),
                ))
            }
            _ => unreachable!("domain checked above"),
        })
    }

    /// Label using `rng` for the randomized constant; identical to
    /// [`Hypothesis::evaluate`] for every proper class.
    pub fn evaluate_with_rng<R: RngCore + ?Sized>(&self, x: &Point, rng: &mut R) -> Result<bool> {
        match self {
            Hypothesis::ConstantRandom { p } => Ok(bernoulli(p, rng)),
            _ => self.evaluate(x),
        }
    }

    pub fn evaluate_seeded(&self, x: &Point, seed: u64) -> Result<bool> {
        self.evaluate_with_rng(x, &mut crate::rng::rng_from_seed(seed))
    }
}

fn checked_vars(n: usize, vars: impl IntoIterator<Item = usize>) -> Result<BTreeSet<usize>> {
    BitVector::zeros(n)?;
    let vars: BTreeSet<usize> = vars.into_iter().collect();
    if let Some(&bad) = vars.iter().find(|&&j| j == 0 || j > n) {
        return Err(LlpError::MalformedHypothesis(format!("variable {bad} outside 1..={n}")));
    }
    Ok(vars)
}

/// Exact Bernoulli(p) draw for rational `p`.
pub(crate) fn bernoulli<R: RngCore + ?Sized>(p: &Rational, rng: &mut R) -> bool {
    if p.is_zero() {
        return false;
    }
    if p.is_one() {
        return true;
    }
    match (p.numer().to_u64(), p.denom().to_u64()) {
        (Some(num), Some(den)) => rng.gen_range(0..den) < num,
        _ => {
            // Compare a uniform binary expansion against p digit by digit.
            let mut r = p.clone();
            loop {
                r *= BigInt::from(2);
                let bit = rng.gen::<bool>();
                let digit = r >= Rational::one();
                if digit {
                    r -= Rational::one();
                }
                if bit != digit {
                    return !bit;
                }
            }
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |xs: Vec<String>| xs.join(",");
        match self {
            Hypothesis::Parity { mask } => write!(f, "parity[{mask}]"),
            Hypothesis::MonotoneDisjunction { vars, .. } => {
                write!(f, "or{{{}}}", list(vars.iter().map(ToString::to_string).collect()))
            }
            Hypothesis::MonotoneConjunction { vars, .. } => {
                write!(f, "and{{{}}}", list(vars.iter().map(ToString::to_string).collect()))
            }
            Hypothesis::FiniteSubset { elems } => {
                write!(f, "subset{{{}}}", list(elems.iter().map(ToString::to_string).collect()))
            }
            Hypothesis::Window(w) => write!(
                f,
                "window[k={}]{{{}}}",
                w.k,
                list(w.elems.iter().map(ToString::to_string).collect())
            ),
            Hypothesis::Halfspace { normal, threshold } => write!(
                f,
                "halfspace[({}) > {threshold}]",
                list(normal.iter().map(ToString::to_string).collect())
            ),
            Hypothesis::ConstantRandom { p } => write!(f, "bernoulli[{p}]"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum HypothesisJson {
    Parity { mask: BitVector },
    MonotoneDisjunction { n: usize, vars: Vec<usize> },
    MonotoneConjunction { n: usize, vars: Vec<usize> },
    FiniteSubset { elems: Vec<u64> },
    Window { k: u64, elems: Vec<u64> },
    Halfspace { normal: Vec<RationalParam>, threshold: RationalParam },
    ConstantRandom { p: RationalParam },
}

impl Serialize for Hypothesis {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let json = match self.clone() {
            Hypothesis::Parity { mask } => HypothesisJson::Parity { mask },
            Hypothesis::MonotoneDisjunction { n, vars } => {
                HypothesisJson::MonotoneDisjunction { n, vars: vars.into_iter().collect() }
            }
            Hypothesis::MonotoneConjunction { n, vars } => {
                HypothesisJson::MonotoneConjunction { n, vars: vars.into_iter().collect() }
            }
            Hypothesis::FiniteSubset { elems } => {
                HypothesisJson::FiniteSubset { elems: elems.into_iter().collect() }
            }
            Hypothesis::Window(w) => {
                HypothesisJson::Window { k: w.k, elems: w.elems.into_iter().collect() }
            }
            Hypothesis::Halfspace { normal, threshold } => HypothesisJson::Halfspace {
                normal: normal.into_iter().map(RationalParam).collect(),
                threshold: RationalParam(threshold),
            },
            Hypothesis::ConstantRandom { p } => HypothesisJson::ConstantRandom { p: RationalParam(p) },
        };
        json.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Hypothesis {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let built = match HypothesisJson::deserialize(d)? {
            HypothesisJson::Parity { mask } => Ok(Hypothesis::Parity { mask }),
            HypothesisJson::MonotoneDisjunction { n, vars } => Hypothesis::disjunction(n, vars),
            HypothesisJson::MonotoneConjunction { n, vars } => Hypothesis::conjunction(n, vars),
            HypothesisJson::FiniteSubset { elems } => Ok(Hypothesis::finite_subset(elems)),
            HypothesisJson::Window { k, elems } => Hypothesis::window(k, elems),
            HypothesisJson::Halfspace { normal, threshold } => {
                Hypothesis::halfspace(normal.into_iter().map(|r| r.0).collect(), threshold.0)
            }
            HypothesisJson::ConstantRandom { p } => Hypothesis::constant_random(p.0),
        };
        built.map_err(serde::de::Error::custom)
    }
}

/// Identifier of a concrete hypothesis class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassId {
    Parity,
    MonotoneDisjunction,
    MonotoneConjunction,
    FiniteSubset,
    Window,
    Halfspace,
}

/// A hypothesis class together with its size parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDescriptor {
    pub class_id: ClassId,
    /// Ambient dimension for cube classes; ignored for classes over ℕ.
    #[serde(default)]
    pub n: usize,
    /// Parities supported on the first `restriction` coordinates only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restriction: Option<usize>,
    /// Span bound of the window class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    /// Elements enumerated for classes over ℕ. When absent, sample-driven
    /// searches use the sample's distinct values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_set: Option<Vec<u64>>,
}

/// VC dimension, possibly unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VcDimension {
    Finite(u64),
    Infinite,
}

impl VcDimension {
    pub fn finite(self) -> Option<u64> {
        match self {
            VcDimension::Finite(d) => Some(d),
            VcDimension::Infinite => None,
        }
    }
}

impl ClassDescriptor {
    fn plain(class_id: ClassId, n: usize) -> Self {
        ClassDescriptor { class_id, n, restriction: None, k: None, ground_set: None }
    }

    pub fn parities(n: usize) -> Self {
        Self::plain(ClassId::Parity, n)
    }

    pub fn parities_on_first(n: usize, k: usize) -> Self {
        ClassDescriptor { restriction: Some(k), ..Self::plain(ClassId::Parity, n) }
    }

    pub fn disjunctions(n: usize) -> Self {
        Self::plain(ClassId::MonotoneDisjunction, n)
    }

    pub fn conjunctions(n: usize) -> Self {
        Self::plain(ClassId::MonotoneConjunction, n)
    }

    pub fn finite_subsets(ground_set: Option<Vec<u64>>) -> Self {
        ClassDescriptor { ground_set, ..Self::plain(ClassId::FiniteSubset, 0) }
    }

    pub fn windows(k: u64, ground_set: Option<Vec<u64>>) -> Self {
        ClassDescriptor { k: Some(k), ground_set, ..Self::plain(ClassId::Window, 0) }
    }

    pub fn halfspaces(n: usize) -> Self {
        Self::plain(ClassId::Halfspace, n)
    }

    pub fn with_ground_set(&self, ground_set: Vec<u64>) -> Self {
        ClassDescriptor { ground_set: Some(ground_set), ..self.clone() }
    }

    pub fn domain(&self) -> Domain {
        match self.class_id {
            ClassId::FiniteSubset | ClassId::Window => Domain::Naturals,
            _ => Domain::Cube(self.n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.domain() != Domain::Naturals {
            BitVector::zeros(self.n)?;
        }
        if let Some(r) = self.restriction {
            if self.class_id != ClassId::Parity {
                return Err(LlpError::InvalidParams("restriction applies to parities only".into()));
            }
            if r > self.n {
                return Err(LlpError::InvalidParams(format!("restriction {r} exceeds n = {}", self.n)));
            }
        }
        if self.class_id == ClassId::Window && self.k.is_none() {
            return Err(LlpError::InvalidParams("window class needs k".into()));
        }
        Ok(())
    }

    /// Number of parity coordinates that may be set.
    pub(crate) fn parity_support(&self) -> usize {
        self.restriction.unwrap_or(self.n)
    }

    /// Whether `h` belongs to this class.
    pub fn contains(&self, h: &Hypothesis) -> bool {
        match (self.class_id, h) {
            (ClassId::Parity, Hypothesis::Parity { mask }) => {
                mask.len() == self.n && mask.ones().all(|j| j <= self.parity_support())
            }
            (ClassId::MonotoneDisjunction, Hypothesis::MonotoneDisjunction { n, .. })
            | (ClassId::MonotoneConjunction, Hypothesis::MonotoneConjunction { n, .. }) => *n == self.n,
            (ClassId::Halfspace, Hypothesis::Halfspace { normal, .. }) => normal.len() == self.n,
            (ClassId::FiniteSubset, Hypothesis::FiniteSubset { elems }) => match &self.ground_set {
                Some(g) => elems.iter().all(|e| g.contains(e)),
                None => true,
            },
            (ClassId::Window, Hypothesis::Window(w)) => {
                Some(w.k) == self.k
                    && match &self.ground_set {
                        Some(g) => w.elems.iter().all(|e| g.contains(e)),
                        None => true,
                    }
            }
            _ => false,
        }
    }
}

/// VC dimension of the described class.
///
/// Windows of span `k` shatter any `k + 1` consecutive naturals, so their
/// dimension is `k + 1`.
pub fn vc_dimension(desc: &ClassDescriptor) -> VcDimension {
    match desc.class_id {
        ClassId::Parity => VcDimension::Finite(desc.parity_support() as u64),
        ClassId::MonotoneDisjunction | ClassId::MonotoneConjunction => VcDimension::Finite(desc.n as u64),
        ClassId::Window => VcDimension::Finite(desc.k.unwrap_or(0) + 1),
        ClassId::Halfspace => VcDimension::Finite(desc.n as u64 + 1),
        ClassId::FiniteSubset => VcDimension::Infinite,
    }
}
