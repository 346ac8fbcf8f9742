//! Input spaces, finitely supported distributions, samples, and the
//! proportion-matching success predicate.
//!
//! A learner sees only an unlabeled [`Sample`] and its revealed positive
//! proportion `p̂`. It succeeds on a task when the distributional positive
//! proportion of its output is within `ε` of the target's:
//!
//! ```text
//! |p_c − p_h| ≤ ε,   p_h = P_{x∼D}[h(x) = 1]
//! ```
//!
//! Every quantity on that path is an exact rational.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LlpError, Result};
use crate::hypothesis::{ClassDescriptor, Hypothesis};
use crate::rational::{self, JsonInt, Rational};
use crate::rng::rng_from_seed;

/// Largest cube dimension for which exact proportions are found by
/// enumerating all `2^n` points.
pub const MAX_ENUMERATION_DIMENSION: usize = 20;

/// Largest supported bit-vector length.
pub const MAX_BITS: usize = 64;

/// A point of `{0,1}^n`, `n ≤ 64`.
///
/// Coordinate `1` is the first character of the textual form and the most
/// significant of the `len` low bits of `word`, so numeric order on equal
/// lengths is lexicographic order on the strings.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    len: u8,
    word: u64,
}

impl BitVector {
    pub fn zeros(len: usize) -> Result<Self> {
        if len > MAX_BITS {
            return Err(LlpError::InvalidParams(format!(
                "bit vectors are limited to {MAX_BITS} coordinates, got {len}"
            )));
        }
        Ok(BitVector { len: len as u8, word: 0 })
    }

    /// Builds from the raw word; bits above `len` must be clear.
    pub fn from_word(len: usize, word: u64) -> Result<Self> {
        let v = Self::zeros(len)?;
        if len < 64 && word >> len != 0 {
            return Err(LlpError::InvalidParams(format!(
                "word {word:#x} has bits beyond length {len}"
            )));
        }
        Ok(BitVector { word, ..v })
    }

    /// Vector with exactly the given 1-based coordinates set.
    pub fn from_coordinates(len: usize, coords: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v = Self::zeros(len)?;
        for c in coords {
            if c == 0 || c > len {
                return Err(LlpError::InvalidParams(format!(
                    "coordinate {c} outside 1..={len}"
                )));
            }
            v.set(c - 1, true);
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn word(&self) -> u64 {
        self.word
    }

    fn mask_bit(&self, i: usize) -> u64 {
        1u64 << (self.len as usize - 1 - i)
    }

    /// 0-based coordinate access.
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len(), "coordinate {i} out of range");
        self.word & self.mask_bit(i) != 0
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len(), "coordinate {i} out of range");
        let b = self.mask_bit(i);
        if value {
            self.word |= b;
        } else {
            self.word &= !b;
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.word.count_ones()
    }

    /// `a · x mod 2`.
    pub fn parity_with(&self, other: &BitVector) -> bool {
        (self.word & other.word).count_ones() % 2 == 1
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        debug_assert_eq!(self.len, other.len);
        BitVector { len: self.len, word: self.word ^ other.word }
    }

    /// 1-based indices of the set coordinates, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.get(i)).map(|i| i + 1)
    }

    /// Every vector of length `len`, in ascending order.
    pub fn all(len: usize) -> Result<impl Iterator<Item = BitVector>> {
        if len > 32 {
            return Err(LlpError::InvalidParams(format!(
                "refusing to enumerate 2^{len} vectors"
            )));
        }
        Ok((0..1u64 << len).map(move |word| BitVector { len: len as u8, word }))
    }

    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Result<Self> {
        let v = Self::zeros(len)?;
        let word = if len == 0 {
            0
        } else if len == 64 {
            rng.next_u64()
        } else {
            rng.next_u64() & ((1u64 << len) - 1)
        };
        Ok(BitVector { word, ..v })
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = LlpError;

    fn from_str(s: &str) -> Result<Self> {
        let mut v = Self::zeros(s.len())?;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => {
                    return Err(LlpError::InvalidParams(format!("invalid bit string {s:?}")));
                }
            }
        }
        Ok(v)
    }
}

impl Serialize for BitVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An element of an input space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Point {
    Bits(BitVector),
    Nat(u64),
}

impl Point {
    pub fn bits(s: &str) -> Result<Point> {
        Ok(Point::Bits(s.parse()?))
    }

    pub fn domain(&self) -> Domain {
        match self {
            Point::Bits(b) => Domain::Cube(b.len()),
            Point::Nat(_) => Domain::Naturals,
        }
    }

    pub fn as_bits(&self) -> Option<&BitVector> {
        match self {
            Point::Bits(b) => Some(b),
            Point::Nat(_) => None,
        }
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self {
            Point::Nat(v) => Some(*v),
            Point::Bits(_) => None,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Bits(b) => write!(f, "{b}"),
            Point::Nat(v) => write!(f, "{v}"),
        }
    }
}

/// The input space a point, hypothesis, or distribution lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Cube(usize),
    Naturals,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Cube(n) => write!(f, "{{0,1}}^{n}"),
            Domain::Naturals => f.write_str("N"),
        }
    }
}

pub(crate) fn check_domain(expected: Domain, found: Domain) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(LlpError::DomainMismatch(format!("expected {expected}, found {found}")))
    }
}

/// Inverse-CDF sampler over integer weights sharing one denominator.
#[derive(Debug, Clone)]
enum AtomSampler {
    Small { cumulative: Vec<u64>, total: u64 },
    Big { cumulative: Vec<BigUint>, total: BigUint },
}

impl AtomSampler {
    fn new(weights: &[Rational]) -> Self {
        let denom = weights
            .iter()
            .fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
        let scaled: Vec<BigUint> = weights
            .iter()
            .map(|w| (w.numer() * (&denom / w.denom())).to_biguint().expect("positive weight"))
            .collect();
        let total = denom.to_biguint().expect("positive denominator");
        if let Some(t) = total.to_u64() {
            let mut acc = 0u64;
            let cumulative = scaled
                .iter()
                .map(|s| {
                    acc += s.to_u64().expect("atom weight bounded by total");
                    acc
                })
                .collect();
            AtomSampler::Small { cumulative, total: t }
        } else {
            let mut acc = BigUint::zero();
            let cumulative = scaled
                .into_iter()
                .map(|s| {
                    acc += s;
                    acc.clone()
                })
                .collect();
            AtomSampler::Big { cumulative, total }
        }
    }

    fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            AtomSampler::Small { cumulative, total } => {
                let u = rng.gen_range(0..*total);
                cumulative.partition_point(|&c| c <= u)
            }
            AtomSampler::Big { cumulative, total } => {
                let u = uniform_biguint_below(total, rng);
                cumulative.partition_point(|c| *c <= u)
            }
        }
    }
}

fn uniform_biguint_below<R: RngCore + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    let bits = bound.bits();
    let words = bits.div_ceil(32) as usize;
    let top_mask = if bits.is_multiple_of(32) { u32::MAX } else { (1u32 << (bits % 32)) - 1 };
    loop {
        let mut digits: Vec<u32> = (0..words).map(|_| rng.next_u32()).collect();
        if let Some(last) = digits.last_mut() {
            *last &= top_mask;
        }
        let candidate = BigUint::new(digits);
        if &candidate < bound {
            return candidate;
        }
    }
}

#[derive(Debug, Clone)]
struct ExplicitDistribution {
    atoms: Vec<(Point, Rational)>,
    domain: Domain,
    sampler: AtomSampler,
}

/// A finitely supported distribution with exact weights.
#[derive(Debug, Clone)]
pub struct FiniteDistribution {
    inner: DistributionKind,
}

#[derive(Debug, Clone)]
enum DistributionKind {
    Explicit(ExplicitDistribution),
    UniformCube(usize),
}

impl PartialEq for FiniteDistribution {
    fn eq(&self, other: &Self) -> bool {
        match (&self.inner, &other.inner) {
            (DistributionKind::Explicit(a), DistributionKind::Explicit(b)) => a.atoms == b.atoms,
            (DistributionKind::UniformCube(a), DistributionKind::UniformCube(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for FiniteDistribution {}

/// Builds an explicit distribution. Weights must already sum to exactly 1.
pub fn make_distribution(entries: Vec<(Point, Rational)>) -> Result<FiniteDistribution> {
    FiniteDistribution::explicit(entries)
}

impl FiniteDistribution {
    pub fn explicit(entries: Vec<(Point, Rational)>) -> Result<Self> {
        let first = entries.first().ok_or(LlpError::EmptySupport)?;
        let domain = first.0.domain();
        let mut seen = BTreeSet::new();
        let mut total = Rational::zero();
        for (p, w) in &entries {
            check_domain(domain, p.domain())?;
            if !w.is_positive() {
                return Err(LlpError::NonPositiveWeight(w.to_string()));
            }
            if !seen.insert(*p) {
                return Err(LlpError::DuplicateSupportPoint(p.to_string()));
            }
            total += w;
        }
        if !total.is_one() {
            return Err(LlpError::WeightsDoNotSumToOne(total.to_string()));
        }
        let weights: Vec<Rational> = entries.iter().map(|(_, w)| w.clone()).collect();
        Ok(FiniteDistribution {
            inner: DistributionKind::Explicit(ExplicitDistribution {
                sampler: AtomSampler::new(&weights),
                atoms: entries,
                domain,
            }),
        })
    }

    /// Explicit normalization for callers holding unnormalized positive weights.
    pub fn normalized(entries: Vec<(Point, Rational)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(LlpError::EmptySupport);
        }
        if let Some((_, w)) = entries.iter().find(|(_, w)| !w.is_positive()) {
            return Err(LlpError::NonPositiveWeight(w.to_string()));
        }
        let total: Rational = entries.iter().map(|(_, w)| w.clone()).sum();
        Self::explicit(entries.into_iter().map(|(p, w)| (p, w / &total)).collect())
    }

    pub fn uniform_cube(n: usize) -> Result<Self> {
        BitVector::zeros(n)?;
        Ok(FiniteDistribution { inner: DistributionKind::UniformCube(n) })
    }

    pub fn domain(&self) -> Domain {
        match &self.inner {
            DistributionKind::Explicit(e) => e.domain,
            DistributionKind::UniformCube(n) => Domain::Cube(*n),
        }
    }

    /// Support with weights, `None` for the implicit uniform cube.
    pub fn atoms(&self) -> Option<&[(Point, Rational)]> {
        match &self.inner {
            DistributionKind::Explicit(e) => Some(&e.atoms),
            DistributionKind::UniformCube(_) => None,
        }
    }

    pub fn is_uniform_cube(&self) -> bool {
        matches!(self.inner, DistributionKind::UniformCube(_))
    }

    pub fn support_size(&self) -> Option<usize> {
        self.atoms().map(<[_]>::len)
    }

    pub fn mass(&self, x: &Point) -> Result<Rational> {
        check_domain(self.domain(), x.domain())?;
        Ok(match &self.inner {
            DistributionKind::Explicit(e) => e
                .atoms
                .iter()
                .find(|(p, _)| p == x)
                .map(|(_, w)| w.clone())
                .unwrap_or_else(Rational::zero),
            DistributionKind::UniformCube(n) => {
                Rational::new(BigInt::one(), BigInt::one() << *n)
            }
        })
    }

    pub fn draw_point<R: RngCore + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.inner {
            DistributionKind::Explicit(e) => e.atoms[e.sampler.draw(rng)].0,
            DistributionKind::UniformCube(n) => {
                Point::Bits(BitVector::random(*n, rng).expect("dimension validated"))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    point: Point,
    num: JsonInt,
    den: JsonInt,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum DistributionJson {
    Explicit { atoms: Vec<AtomJson> },
    UniformCube { n: usize },
}

impl Serialize for FiniteDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let json = match &self.inner {
            DistributionKind::Explicit(e) => DistributionJson::Explicit {
                atoms: e
                    .atoms
                    .iter()
                    .map(|(p, w)| AtomJson {
                        point: *p,
                        num: JsonInt(w.numer().clone()),
                        den: JsonInt(w.denom().clone()),
                    })
                    .collect(),
            },
            DistributionKind::UniformCube(n) => DistributionJson::UniformCube { n: *n },
        };
        json.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteDistribution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let built = match DistributionJson::deserialize(d)? {
            DistributionJson::Explicit { atoms } => atoms
                .into_iter()
                .map(|a| {
                    if a.den.0.is_zero() {
                        Err(LlpError::NonPositiveWeight(format!("{}/0", a.num.0)))
                    } else {
                        Ok((a.point, Rational::new(a.num.0, a.den.0)))
                    }
                })
                .collect::<Result<Vec<_>>>()
                .and_then(FiniteDistribution::explicit),
            DistributionJson::UniformCube { n } => FiniteDistribution::uniform_cube(n),
        };
        built.map_err(serde::de::Error::custom)
    }
}

/// Unlabeled points plus the revealed number of positives.
#[derive(Debug, Clone)]
pub struct Sample {
    points: Arc<[Point]>,
    positives: u64,
    unique: Arc<OnceLock<Vec<(Point, u64)>>>,
}

impl PartialEq for Sample {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.positives == other.positives
    }
}

impl Eq for Sample {}

impl Sample {
    /// `positives` is the revealed count `p̂·m`.
    pub fn with_count(points: Vec<Point>, positives: u64) -> Result<Self> {
        if positives > points.len() as u64 {
            return Err(LlpError::MalformedSample(format!(
                "{positives} positives among {} points",
                points.len()
            )));
        }
        if let Some(first) = points.first() {
            let domain = first.domain();
            if let Some(p) = points.iter().find(|p| p.domain() != domain) {
                return Err(LlpError::MalformedSample(format!(
                    "point {p} is not in {domain}"
                )));
            }
        }
        Ok(Sample { points: points.into(), positives, unique: Arc::default() })
    }

    /// Rejects `p̂` whose product with `m` is not an integer in `0..=m`.
    pub fn new(points: Vec<Point>, p_hat: &Rational) -> Result<Self> {
        let m = BigInt::from(points.len());
        let count = p_hat * Rational::from_integer(m);
        if !count.is_integer() {
            return Err(LlpError::MalformedSample(format!(
                "p̂ = {p_hat} is not a multiple of 1/{}",
                points.len()
            )));
        }
        let count = count
            .to_integer()
            .to_u64()
            .ok_or_else(|| LlpError::MalformedSample(format!("p̂ = {p_hat} is negative")))?;
        Self::with_count(points, count)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn m(&self) -> u64 {
        self.points.len() as u64
    }

    pub fn positives(&self) -> u64 {
        self.positives
    }

    pub fn p_hat(&self) -> Rational {
        if self.points.is_empty() {
            Rational::zero()
        } else {
            rational::from_count(self.positives, self.m())
        }
    }

    pub fn domain(&self) -> Option<Domain> {
        self.points.first().map(Point::domain)
    }

    /// Distinct points in canonical order with their multiplicities.
    pub fn unique_counts(&self) -> &[(Point, u64)] {
        self.unique.get_or_init(|| {
            let mut counts: BTreeMap<Point, u64> = BTreeMap::new();
            for p in self.points.iter() {
                *counts.entry(*p).or_default() += 1;
            }
            counts.into_iter().collect()
        })
    }

    /// Same points, different revealed count. Shares the point storage.
    pub fn with_positives(&self, positives: u64) -> Result<Self> {
        if positives > self.m() {
            return Err(LlpError::MalformedSample(format!("{positives} positives among {} points", self.m())));
        }
        Ok(Sample { points: Arc::clone(&self.points), positives, unique: Arc::clone(&self.unique) })
    }
}

#[derive(Serialize, Deserialize)]
struct SampleJson {
    points: Vec<Point>,
    p_hat_num: u64,
    p_hat_den: u64,
}

impl Serialize for Sample {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SampleJson { points: self.points.to_vec(), p_hat_num: self.positives, p_hat_den: self.m() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Sample {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = SampleJson::deserialize(d)?;
        let built = if j.points.is_empty() {
            if j.p_hat_num == 0 {
                Sample::with_count(j.points, 0)
            } else {
                Err(LlpError::MalformedSample("empty sample with positives".into()))
            }
        } else if j.p_hat_den == 0 {
            Err(LlpError::MalformedSample("zero p̂ denominator".into()))
        } else {
            Sample::new(j.points, &rational::from_count(j.p_hat_num, j.p_hat_den))
        };
        built.map_err(serde::de::Error::custom)
    }
}

/// One learning problem: class, accuracy and confidence, optional known
/// distribution, and the revealed sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlpTask {
    pub class: ClassDescriptor,
    #[serde(with = "rational::serde_string")]
    pub epsilon: Rational,
    #[serde(with = "rational::serde_string")]
    pub delta: Rational,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<FiniteDistribution>,
    pub sample: Sample,
}

impl LlpTask {
    pub fn new(
        class: ClassDescriptor,
        epsilon: Rational,
        delta: Rational,
        distribution: Option<FiniteDistribution>,
        sample: Sample,
    ) -> Result<Self> {
        let task = LlpTask { class, epsilon, delta, distribution, sample };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: &Rational| {
            if v.is_positive() && v < &Rational::one() {
                Ok(())
            } else {
                Err(LlpError::InvalidParams(format!("{name} = {v} must lie in (0,1)")))
            }
        };
        unit("epsilon", &self.epsilon)?;
        unit("delta", &self.delta)?;
        let domain = self.class.domain();
        if let Some(d) = self.sample.domain() {
            check_domain(domain, d)?;
        }
        if let Some(dist) = &self.distribution {
            check_domain(domain, dist.domain())?;
        }
        Ok(())
    }
}

/// Draws `m` i.i.d. points and reveals the fraction `target` labels 1.
pub fn draw_sample(
    dist: &FiniteDistribution,
    m: usize,
    seed: u64,
    target: &Hypothesis,
) -> Result<Sample> {
    target.check_domain(dist.domain())?;
    let mut rng = rng_from_seed(seed);
    let points: Vec<Point> = (0..m).map(|_| dist.draw_point(&mut rng)).collect();
    let mut positives = 0u64;
    for x in &points {
        if target.evaluate_with_rng(x, &mut rng)? {
            positives += 1;
        }
    }
    Sample::with_count(points, positives)
}

/// Exact `P_{x∼D}[h(x) = 1]`.
pub fn true_proportion(h: &Hypothesis, dist: &FiniteDistribution) -> Result<Rational> {
    h.check_domain(dist.domain())?;
    if let Hypothesis::ConstantRandom { p } = h {
        return Ok(p.clone());
    }
    match &dist.inner {
        DistributionKind::Explicit(e) => {
            let mut total = Rational::zero();
            for (x, w) in &e.atoms {
                if h.evaluate(x)? {
                    total += w;
                }
            }
            Ok(total)
        }
        DistributionKind::UniformCube(n) => {
            if let Some(p) = uniform_closed_form(h) {
                return Ok(p);
            }
            if *n > MAX_ENUMERATION_DIMENSION {
                return Err(LlpError::IntractableExactProportion(format!(
                    "no closed form for this hypothesis and n = {n} > {MAX_ENUMERATION_DIMENSION}"
                )));
            }
            true_proportion_by_enumeration(h, *n)
        }
    }
}

fn pow2_inverse(k: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k)
}

fn uniform_closed_form(h: &Hypothesis) -> Option<Rational> {
    match h {
        Hypothesis::Parity { mask } => Some(if mask.count_ones() == 0 {
            Rational::zero()
        } else {
            rational::ratio(1, 2)
        }),
        Hypothesis::MonotoneDisjunction { vars, .. } => Some(Rational::one() - pow2_inverse(vars.len())),
        Hypothesis::MonotoneConjunction { vars, .. } => Some(pow2_inverse(vars.len())),
        Hypothesis::ConstantRandom { p } => Some(p.clone()),
        _ => None,
    }
}

/// Counts the positives of `h` over all of `{0,1}^n`.
pub fn true_proportion_by_enumeration(h: &Hypothesis, n: usize) -> Result<Rational> {
    h.check_domain(Domain::Cube(n))?;
    if n > MAX_ENUMERATION_DIMENSION {
        return Err(LlpError::IntractableExactProportion(format!(
            "n = {n} exceeds the enumeration cap {MAX_ENUMERATION_DIMENSION}"
        )));
    }
    let mut positives = 0u64;
    for x in BitVector::all(n)? {
        if h.evaluate(&Point::Bits(x))? {
            positives += 1;
        }
    }
    Ok(Rational::new(BigInt::from(positives), BigInt::one() << n))
}

/// Number of sample points (with multiplicity) that `h` labels 1.
pub fn positive_count(h: &Hypothesis, sample: &Sample) -> Result<u64> {
    let mut count = 0;
    for (x, a) in sample.unique_counts() {
        if h.evaluate(x)? {
            count += a;
        }
    }
    Ok(count)
}

/// `p̂_h`. For the randomized constant this is its expectation `p`.
pub fn empirical_proportion(h: &Hypothesis, sample: &Sample) -> Result<Rational> {
    if let Some(d) = sample.domain() {
        h.check_domain(d)?;
    }
    if let Hypothesis::ConstantRandom { p } = h {
        return Ok(p.clone());
    }
    if sample.m() == 0 {
        return Ok(Rational::zero());
    }
    Ok(rational::from_count(positive_count(h, sample)?, sample.m()))
}

/// `|p_c − p_h| ≤ ε` in exact arithmetic.
pub fn llp_success(
    h: &Hypothesis,
    c: &Hypothesis,
    dist: &FiniteDistribution,
    epsilon: &Rational,
) -> Result<bool> {
    let pc = true_proportion(c, dist)?;
    let ph = true_proportion(h, dist)?;
    Ok(&rational::abs_diff(&pc, &ph) <= epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn nat(v: u64) -> Point {
        Point::Nat(v)
    }

    fn subset(elems: &[u64]) -> Hypothesis {
        Hypothesis::finite_subset(elems.iter().copied())
    }

    fn two_atoms() -> FiniteDistribution {
        make_distribution(vec![(nat(1), ratio(3, 10)), (nat(2), ratio(7, 10))]).unwrap()
    }

    #[test]
    fn bitvector_text_order_matches_word_order() {
        let a: BitVector = "0101".parse().unwrap();
        assert_eq!(a.word(), 5);
        assert!(a.get(1) && a.get(3) && !a.get(0));
        assert_eq!(a.to_string(), "0101");
        let b: BitVector = "1000".parse().unwrap();
        assert!(a < b);
        assert_eq!(a.ones().collect::<Vec<_>>(), vec![2, 4]);
        assert!("01a".parse::<BitVector>().is_err());
    }

    #[test]
    fn make_distribution_examples() {
        let single = make_distribution(vec![(nat(1), ratio(1, 1))]).unwrap();
        assert_eq!(single.atoms().unwrap().len(), 1);
        assert_eq!(two_atoms().support_size(), Some(2));
        assert_eq!(
            make_distribution(vec![(nat(1), ratio(1, 2)), (nat(2), ratio(1, 3))]),
            Err(LlpError::WeightsDoNotSumToOne("5/6".into()))
        );
        assert_eq!(make_distribution(vec![]), Err(LlpError::EmptySupport));
        assert!(matches!(
            make_distribution(vec![(nat(1), ratio(0, 1)), (nat(2), ratio(1, 1))]),
            Err(LlpError::NonPositiveWeight(_))
        ));
        assert!(matches!(
            make_distribution(vec![(nat(1), ratio(1, 2)), (nat(1), ratio(1, 2))]),
            Err(LlpError::DuplicateSupportPoint(_))
        ));
        assert!(matches!(
            make_distribution(vec![(nat(1), ratio(1, 2)), (Point::bits("01").unwrap(), ratio(1, 2))]),
            Err(LlpError::DomainMismatch(_))
        ));
    }

    #[test]
    fn normalization_is_explicit() {
        let d = FiniteDistribution::normalized(vec![(nat(1), ratio(1, 1)), (nat(2), ratio(3, 1))]).unwrap();
        assert_eq!(d.mass(&nat(2)).unwrap(), ratio(3, 4));
    }

    #[test]
    fn draw_sample_examples() {
        let cube = FiniteDistribution::uniform_cube(3).unwrap();
        let zero = Hypothesis::Parity { mask: BitVector::zeros(3).unwrap() };
        let s = draw_sample(&cube, 5, 11, &zero).unwrap();
        assert_eq!(s.p_hat(), Rational::zero());
        assert_eq!(s.m(), 5);

        let atom = make_distribution(vec![(nat(1), ratio(1, 1))]).unwrap();
        let s = draw_sample(&atom, 4, 3, &subset(&[1])).unwrap();
        assert_eq!(s.points(), &[nat(1); 4]);
        assert_eq!(s.p_hat(), Rational::one());

        assert!(matches!(
            draw_sample(&atom, 4, 3, &zero),
            Err(LlpError::DomainMismatch(_))
        ));
    }

    #[test]
    fn draw_sample_parity_replays_with_same_seed() {
        let cube = FiniteDistribution::uniform_cube(8).unwrap();
        let target = Hypothesis::Parity { mask: "00000001".parse().unwrap() };
        let s = draw_sample(&cube, 1000, 99, &target).unwrap();
        // Replay oracle: regenerate the point stream independently.
        let mut rng = rng_from_seed(99);
        let mut positives = 0;
        for x in s.points() {
            let replayed = cube.draw_point(&mut rng);
            assert_eq!(&replayed, x);
            if x.as_bits().unwrap().get(7) {
                positives += 1;
            }
        }
        assert_eq!(s.positives(), positives);
        let p = rational::to_f64(&s.p_hat());
        assert!((p - 0.5).abs() < 0.06, "p̂ = {p}");
        assert_eq!(s, draw_sample(&cube, 1000, 99, &target).unwrap());
    }

    #[test]
    fn true_proportion_examples() {
        let cube = FiniteDistribution::uniform_cube(8).unwrap();
        let parity = Hypothesis::Parity { mask: "01100000".parse().unwrap() };
        assert_eq!(true_proportion(&parity, &cube).unwrap(), ratio(1, 2));
        assert_eq!(true_proportion(&subset(&[]), &two_atoms()).unwrap(), Rational::zero());
        assert_eq!(true_proportion(&subset(&[2]), &two_atoms()).unwrap(), ratio(7, 10));
        let trivial = Hypothesis::Parity { mask: BitVector::zeros(8).unwrap() };
        assert_eq!(true_proportion(&trivial, &cube).unwrap(), Rational::zero());
    }

    #[test]
    fn true_proportion_refuses_large_cubes_without_closed_form() {
        let cube = FiniteDistribution::uniform_cube(30).unwrap();
        let h = Hypothesis::halfspace(vec![ratio(1, 1); 30], ratio(0, 1)).unwrap();
        assert!(matches!(
            true_proportion(&h, &cube),
            Err(LlpError::IntractableExactProportion(_))
        ));
        let parity = Hypothesis::Parity { mask: BitVector::from_coordinates(30, [4]).unwrap() };
        assert_eq!(true_proportion(&parity, &cube).unwrap(), ratio(1, 2));
    }

    #[test]
    fn closed_forms_match_enumeration_for_all_parities_up_to_12() {
        for n in 0..=12usize {
            let cube = FiniteDistribution::uniform_cube(n).unwrap();
            for mask in BitVector::all(n).unwrap() {
                let h = Hypothesis::Parity { mask };
                assert_eq!(
                    true_proportion(&h, &cube).unwrap(),
                    true_proportion_by_enumeration(&h, n).unwrap(),
                    "mask {mask}"
                );
            }
        }
    }

    #[test]
    fn closed_forms_match_enumeration_for_monotone_formulas() {
        let n = 5;
        let cube = FiniteDistribution::uniform_cube(n).unwrap();
        for mask in BitVector::all(n).unwrap() {
            let vars: BTreeSet<usize> = mask.ones().collect();
            for h in [
                Hypothesis::MonotoneDisjunction { n, vars: vars.clone() },
                Hypothesis::MonotoneConjunction { n, vars: vars.clone() },
            ] {
                assert_eq!(
                    true_proportion(&h, &cube).unwrap(),
                    true_proportion_by_enumeration(&h, n).unwrap()
                );
            }
        }
    }

    #[test]
    fn empirical_proportion_examples() {
        let points: Vec<Point> = [5, 5, 9, 9, 9, 12, 12, 12, 12, 12].map(nat).to_vec();
        let s = Sample::with_count(points, 3).unwrap();
        assert_eq!(empirical_proportion(&subset(&[5, 9]), &s).unwrap(), ratio(1, 2));
        let zero = Hypothesis::finite_subset([]);
        assert_eq!(empirical_proportion(&zero, &s).unwrap(), Rational::zero());
        assert_eq!(
            s.unique_counts(),
            &[(nat(5), 2), (nat(9), 3), (nat(12), 5)]
        );
        let atoms = two_atoms();
        let drawn = draw_sample(&atoms, 40, 5, &subset(&[2])).unwrap();
        assert_eq!(empirical_proportion(&subset(&[2]), &drawn).unwrap(), drawn.p_hat());
    }

    #[test]
    fn llp_success_examples() {
        let cube = FiniteDistribution::uniform_cube(4).unwrap();
        let trivial = Hypothesis::Parity { mask: BitVector::zeros(4).unwrap() };
        let nontrivial = Hypothesis::Parity { mask: "0010".parse().unwrap() };
        assert!(llp_success(&nontrivial, &nontrivial, &cube, &ratio(1, 100)).unwrap());
        assert!(!llp_success(&trivial, &nontrivial, &cube, &ratio(1, 4)).unwrap());
        assert!(llp_success(&subset(&[2]), &subset(&[1]), &two_atoms(), &ratio(1, 2)).unwrap());
        assert!(!llp_success(&subset(&[2]), &subset(&[1]), &two_atoms(), &ratio(39, 100)).unwrap());
    }

    #[test]
    fn sample_rejects_non_integer_counts() {
        let pts = vec![nat(1), nat(2), nat(3)];
        assert!(matches!(Sample::new(pts.clone(), &ratio(1, 2)), Err(LlpError::MalformedSample(_))));
        assert_eq!(Sample::new(pts.clone(), &ratio(2, 3)).unwrap().positives(), 2);
        assert!(Sample::with_count(pts, 4).is_err());
        assert!(Sample::with_count(vec![nat(1), Point::bits("1").unwrap()], 0).is_err());
    }

    #[test]
    fn json_shapes() {
        let d = two_atoms();
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(
            text,
            r#"{"kind":"explicit","atoms":[{"point":{"nat":1},"num":3,"den":10},{"point":{"nat":2},"num":7,"den":10}]}"#
        );
        assert_eq!(serde_json::from_str::<FiniteDistribution>(&text).unwrap(), d);
        let cube = FiniteDistribution::uniform_cube(3).unwrap();
        assert_eq!(serde_json::to_string(&cube).unwrap(), r#"{"kind":"uniform_cube","n":3}"#);
        let bad = r#"{"kind":"explicit","atoms":[{"point":{"nat":1},"num":1,"den":2}]}"#;
        assert!(serde_json::from_str::<FiniteDistribution>(bad).is_err());

        let s = Sample::with_count(vec![Point::bits("0101").unwrap(), Point::bits("1100").unwrap()], 1).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(
            text,
            r#"{"points":[{"bits":"0101"},{"bits":"1100"}],"p_hat_num":1,"p_hat_den":2}"#
        );
        assert_eq!(serde_json::from_str::<Sample>(&text).unwrap(), s);
    }

    #[test]
    fn big_denominators_still_sample() {
        let third = Rational::new(BigInt::one(), BigInt::from(3u8) * (BigInt::one() << 70));
        let rest = Rational::one() - &third;
        let d = make_distribution(vec![(nat(1), third), (nat(2), rest)]).unwrap();
        let mut rng = rng_from_seed(1);
        let draws: Vec<Point> = (0..100).map(|_| d.draw_point(&mut rng)).collect();
        assert!(draws.iter().all(|p| *p == nat(2)));
    }
}
