//! Prefix-free binary encoding of hypotheses.
//!
//! The encoding length is the `size(c)` used by sample-size formulas, and
//! lexicographic order on encodings is the final tie-break between equally
//! good hypotheses. Naturals use an order-preserving code (unary length,
//! then binary digits) so that for finite subsets and windows the encoding
//! order equals lexicographic order on the sorted element lists.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};

use super::{Hypothesis, WindowSet};
use crate::error::{LlpError, Result};
use crate::model::BitVector;
use crate::rational::Rational;

const TAG_BITS: usize = 3;
const TAG_PARITY: u8 = 0;
const TAG_DISJUNCTION: u8 = 1;
const TAG_CONJUNCTION: u8 = 2;
const TAG_FINITE_SUBSET: u8 = 3;
const TAG_WINDOW: u8 = 4;
const TAG_HALFSPACE: u8 = 5;
const TAG_CONSTANT: u8 = 6;

/// A string of bits, ordered lexicographically (a proper prefix sorts first).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    fn push_uint(&mut self, value: u64, width: usize) {
        for i in (0..width).rev() {
            self.push(value >> i & 1 == 1);
        }
    }

    fn push_nat(&mut self, value: &BigUint) {
        let w = value + 1u32;
        let len = w.bits() as usize;
        for _ in 1..len {
            self.push(true);
        }
        self.push(false);
        for i in (0..len - 1).rev() {
            self.push(w.bit(i as u64));
        }
    }

    fn push_small(&mut self, value: u64) {
        self.push_nat(&BigUint::from(value));
    }

    fn push_list(&mut self, elems: impl Iterator<Item = u64>) {
        for e in elems {
            self.push(true);
            self.push_small(e);
        }
        self.push(false);
    }

    fn push_rational(&mut self, r: &Rational) {
        self.push(r.numer().sign() == Sign::Minus);
        self.push_nat(r.numer().magnitude());
        self.push_nat(&(r.denom().magnitude() - 1u32));
    }

    /// Lexicographic comparison.
    pub fn compare(&self, other: &BitString) -> Ordering {
        self.cmp(other)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = LlpError;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(LlpError::MalformedEncoding(format!("invalid character {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

/// Encodes `h` as tag, parameters, then body.
pub fn encode(h: &Hypothesis) -> BitString {
    let mut out = BitString::default();
    match h {
        Hypothesis::Parity { mask } => {
            out.push_uint(TAG_PARITY as u64, TAG_BITS);
            out.push_small(mask.len() as u64);
            for i in 0..mask.len() {
                out.push(mask.get(i));
            }
        }
        Hypothesis::MonotoneDisjunction { n, vars } | Hypothesis::MonotoneConjunction { n, vars } => {
            let tag = if matches!(h, Hypothesis::MonotoneDisjunction { .. }) {
                TAG_DISJUNCTION
            } else {
                TAG_CONJUNCTION
            };
            out.push_uint(tag as u64, TAG_BITS);
            out.push_small(*n as u64);
            for j in 1..=*n {
                out.push(vars.contains(&j));
            }
        }
        Hypothesis::FiniteSubset { elems } => {
            out.push_uint(TAG_FINITE_SUBSET as u64, TAG_BITS);
            out.push_list(elems.iter().copied());
        }
        Hypothesis::Window(w) => {
            out.push_uint(TAG_WINDOW as u64, TAG_BITS);
            out.push_small(w.k());
            out.push_list(w.elems().iter().copied());
        }
        Hypothesis::Halfspace { normal, threshold } => {
            out.push_uint(TAG_HALFSPACE as u64, TAG_BITS);
            out.push_small(normal.len() as u64);
            for w in normal {
                out.push_rational(w);
            }
            out.push_rational(threshold);
        }
        Hypothesis::ConstantRandom { p } => {
            out.push_uint(TAG_CONSTANT as u64, TAG_BITS);
            out.push_nat(p.numer().magnitude());
            out.push_nat(&(p.denom().magnitude() - 1u32));
        }
    }
    out
}

struct Reader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl Reader<'_> {
    fn bit(&mut self) -> Result<bool> {
        let b = *self
            .bits
            .get(self.pos)
            .ok_or_else(|| LlpError::MalformedEncoding(format!("truncated at bit {}", self.pos)))?;
        self.pos += 1;
        Ok(b)
    }

    fn uint(&mut self, width: usize) -> Result<u64> {
        let mut v = 0;
        for _ in 0..width {
            v = v << 1 | self.bit()? as u64;
        }
        Ok(v)
    }

    fn nat(&mut self) -> Result<BigUint> {
        let mut len = 1usize;
        while self.bit()? {
            len += 1;
            if len > 4096 {
                return Err(LlpError::MalformedEncoding("natural number too long".into()));
            }
        }
        let mut w = BigUint::one();
        for _ in 1..len {
            w = (w << 1u32) + BigUint::from(self.bit()? as u8);
        }
        Ok(w - 1u32)
    }

    fn small(&mut self) -> Result<u64> {
        let v = self.nat()?;
        u64::try_from(&v).map_err(|_| LlpError::MalformedEncoding(format!("{v} exceeds 64 bits")))
    }

    fn list(&mut self) -> Result<Vec<u64>> {
        let mut out: Vec<u64> = Vec::new();
        while self.bit()? {
            let e = self.small()?;
            if out.last().is_some_and(|&last| last >= e) {
                return Err(LlpError::MalformedEncoding("element list not strictly increasing".into()));
            }
            out.push(e);
        }
        Ok(out)
    }

    fn rational(&mut self) -> Result<Rational> {
        let negative = self.bit()?;
        let magnitude = self.nat()?;
        let den = self.nat()? + 1u32;
        if negative && magnitude.is_zero() {
            return Err(LlpError::MalformedEncoding("negative zero".into()));
        }
        let sign = if negative { Sign::Minus } else { Sign::Plus };
        let r = Rational::new(BigInt::from_biguint(sign, magnitude.clone()), BigInt::from(den.clone()));
        // Only reduced fractions are canonical.
        if r.denom().magnitude() != &den {
            return Err(LlpError::MalformedEncoding("fraction not in lowest terms".into()));
        }
        Ok(r)
    }

    fn dimension(&mut self) -> Result<usize> {
        let n = self.small()? as usize;
        BitVector::zeros(n).map_err(|e| LlpError::MalformedEncoding(e.to_string()))?;
        Ok(n)
    }
}

/// Inverse of [`encode`]; rejects truncated, padded, or non-canonical input.
pub fn decode(bits: &BitString) -> Result<Hypothesis> {
    let mut r = Reader { bits: &bits.0, pos: 0 };
    let malformed = |e: LlpError| LlpError::MalformedEncoding(e.to_string());
    let h = match r.uint(TAG_BITS)? as u8 {
        TAG_PARITY => {
            let n = r.dimension()?;
            let mut mask = BitVector::zeros(n)?;
            for i in 0..n {
                mask.set(i, r.bit()?);
            }
            Hypothesis::Parity { mask }
        }
        tag @ (TAG_DISJUNCTION | TAG_CONJUNCTION) => {
            let n = r.dimension()?;
            let mut vars = Vec::new();
            for j in 1..=n {
                if r.bit()? {
                    vars.push(j);
                }
            }
            if tag == TAG_DISJUNCTION {
                Hypothesis::disjunction(n, vars)?
            } else {
                Hypothesis::conjunction(n, vars)?
            }
        }
        TAG_FINITE_SUBSET => Hypothesis::finite_subset(r.list()?),
        TAG_WINDOW => {
            let k = r.small()?;
            Hypothesis::Window(WindowSet::new(k, r.list()?).map_err(malformed)?)
        }
        TAG_HALFSPACE => {
            let n = r.dimension()?;
            let normal = (0..n).map(|_| r.rational()).collect::<Result<Vec<_>>>()?;
            let threshold = r.rational()?;
            Hypothesis::halfspace(normal, threshold)?
        }
        TAG_CONSTANT => {
            let num = r.nat()?;
            let den = r.nat()? + 1u32;
            let p = Rational::new(BigInt::from(num), BigInt::from(den.clone()));
            if p.denom().magnitude() != &den {
                return Err(LlpError::MalformedEncoding("fraction not in lowest terms".into()));
            }
            Hypothesis::constant_random(p).map_err(malformed)?
        }
        tag => return Err(LlpError::MalformedEncoding(format!("unknown tag {tag}"))),
    };
    if r.pos != bits.len() {
        return Err(LlpError::MalformedEncoding(format!(
            "{} trailing bits",
            bits.len() - r.pos
        )));
    }
    Ok(h)
}
