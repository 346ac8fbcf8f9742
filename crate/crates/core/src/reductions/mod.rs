//! Reductions to LLP, parameterized by an oracle.
//!
//! Each driver takes an explicit seed and records every oracle call it makes
//! in a transcript.

mod consistency;
mod instances;
mod llp_to_pac;
mod noisy_parity;
mod set_cover;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hypothesis::{ClassDescriptor, Hypothesis};
use crate::model::Sample;
use crate::rational::{self, Rational};

pub use consistency::{consistency_via_llp, ConsistencyOutcome};
pub use instances::{ConsistencyInstance, EpscInstance, X3cInstance};
pub use llp_to_pac::{d_prime, d_prime_weights, empirical_errors, llp_to_pac, LlpToPacOutcome};
pub use noisy_parity::{
    draw_filtered_examples, filtered_distribution, noisy_parity_sample_size, noisy_parity_via_llp, NoisyParityOutcome,
    NoisyParitySetup,
};
pub use set_cover::{
    chain_check, epsc_to_conjunction_consistency, epsc_to_disjunction_consistency, x3c_to_epsc, ChainReport,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleResponse {
    Hypothesis(Hypothesis),
    Reject,
}

/// An LLP learner for a fixed class, as the reductions see it.
pub trait LlpOracle: Sync {
    fn class(&self) -> &ClassDescriptor;

    /// Samples the oracle needs for accuracy `ε` and confidence `δ`.
    fn sample_size(&self, epsilon: f64, delta: f64) -> Result<u64>;

    /// May return anything, or reject, when `claimed` is not the sample's
    /// true proportion.
    fn query(&self, sample: &Sample, claimed: &Rational, epsilon: f64, delta: f64) -> Result<OracleResponse>;
}

/// One oracle invocation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCall {
    pub index: u64,
    #[serde(with = "rational::serde_string")]
    pub claimed: Rational,
    pub sample_size: u64,
    pub response: OracleResponse,
    pub accepted: bool,
}

/// One JSON object per line.
pub fn transcript_json_lines(calls: &[OracleCall]) -> String {
    calls
        .iter()
        .map(|c| serde_json::to_string(c).expect("oracle calls serialize") + "\n")
        .collect()
}
