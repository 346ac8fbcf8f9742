//! Learning from label proportions.
//!
//! A learner receives an unlabeled i.i.d. sample together with the fraction
//! of it the hidden target labels positive, and must return a hypothesis of
//! the same class whose distributional positive proportion is close to the
//! target's. This crate provides the hypothesis classes, the learners, the
//! sample-size formulas, brute-force oracles, the hardness reductions as
//! executable transforms, and a seeded Monte Carlo trial harness.

pub mod bounds;
pub mod error;
pub mod generate;
pub mod harness;
pub mod hypothesis;
pub mod learners;
pub mod model;
pub mod oracles;
pub mod rational;
pub mod reductions;
pub mod rng;

pub use error::{LlpError, Result};
pub use hypothesis::{ClassDescriptor, ClassId, Hypothesis, VcDimension};
pub use model::{BitVector, Domain, FiniteDistribution, LlpTask, Point, Sample};
pub use rational::Rational;
