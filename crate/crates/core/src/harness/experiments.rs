//! Seeded experiments that pit learners against brute-force oracles and run
//! the reductions end to end. Each run is independent and derives its seeds
//! from `(seed, run)`.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{random_points, with_pool, SampleSizeSpec};
use crate::bounds::{empirical_generalization_audit, uniform_convergence_sample_size};
use crate::error::{LlpError, Result};
use crate::generate::{random_consistency, random_target, random_x3c};
use crate::hypothesis::{encode, enumerate_class, vc_dimension, ClassDescriptor, ClassId, Hypothesis, DEFAULT_BUDGET};
use crate::learners::{
    erm_proportion_matcher, halfspace_sweep_learner, subset_sum_nearest, window_learner, HalfspaceParams,
};
use crate::model::{positive_count, BitVector, FiniteDistribution, Point, Sample};
use crate::oracles::{brute_consistency, brute_subset_sum, BruteLlpOracle, OracleMode};
use crate::rational::{self, Rational};
use crate::reductions::{
    chain_check, consistency_via_llp, d_prime, draw_filtered_examples, empirical_errors, filtered_distribution,
    llp_to_pac, noisy_parity_sample_size, noisy_parity_via_llp, LlpOracle, NoisyParitySetup, OracleCall,
};
use crate::rng::{derive_seed, rng_from_seed};

fn default_span() -> u64 {
    40
}

fn default_retries() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentKind {
    /// The ERM matcher against exhaustive enumeration of the whole class.
    ErmVsBrute { classes: Vec<ClassId>, n_max: usize, m_max: u64, tasks: u64, seed: u64 },
    /// The subset-sum DP against exhaustive subset search.
    SubsetSumVsBrute { samples: u64, max_unique: u64, m_max: u64, seed: u64 },
    /// The window learner against enumeration of every span-feasible set.
    WindowVsBrute {
        k_max: u64,
        m_max: u64,
        tasks: u64,
        #[serde(default = "default_span")]
        span: u64,
        seed: u64,
    },
    /// The halfspace sweep on uniform cube samples with `t = m/2`.
    HalfspaceSweep {
        n: usize,
        m: u64,
        seeds: u64,
        #[serde(default = "default_retries")]
        retries: u32,
        seed: u64,
    },
    /// Generalization gaps against the uniform-convergence bound.
    Audit {
        class: ClassDescriptor,
        distribution: FiniteDistribution,
        target: Hypothesis,
        /// Explicit, or "from-bounds" for the uniform-convergence size at `epsilon`.
        m: SampleSizeSpec,
        epsilon: f64,
        delta: f64,
        trials: u64,
        seed: u64,
    },
    LlpToPac {
        class: ClassDescriptor,
        /// Labeled draws from the uniform cube before deduplication.
        labeled: u64,
        delta: f64,
        runs: u64,
        seed: u64,
        #[serde(default)]
        mode: OracleMode,
    },
    Consistency {
        n_max: usize,
        max_total: u64,
        instances: u64,
        delta: f64,
        seed: u64,
        #[serde(default)]
        mode: OracleMode,
    },
    NoisyParity {
        n: usize,
        k_bits: usize,
        #[serde(with = "rational::serde_string")]
        eta: Rational,
        #[serde(with = "rational::serde_string")]
        eta_prime: Rational,
        delta: f64,
        runs: u64,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<u64>,
        #[serde(default)]
        mode: OracleMode,
    },
    /// Filtered noisy examples against the masses of `D_c`, one row per point.
    FilteredFrequency {
        target: Hypothesis,
        #[serde(with = "rational::serde_string")]
        eta: Rational,
        draws: u64,
        seed: u64,
    },
    Chain {
        instances: u64,
        universe_sizes: Vec<usize>,
        max_triples: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ell: Option<usize>,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub kind: ExperimentKind,
    /// Successes needed for `--check`; every run when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_successes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub run: u64,
    pub seed: u64,
    pub success: bool,
    /// Structural invariants of the run (counter bounds, mass sums, verified
    /// witnesses). These must hold on every run.
    pub invariant_ok: bool,
    pub detail: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub runs: u64,
    pub successes: u64,
    pub invariant_failures: u64,
    pub errors: u64,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentReport {
    pub fn required_successes(&self) -> u64 {
        self.config.min_successes.unwrap_or(self.runs)
    }

    pub fn passed(&self) -> bool {
        self.successes >= self.required_successes() && self.invariant_failures == 0
    }
}

/// One oracle call, tagged with the run that made it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub run: u64,
    #[serde(flatten)]
    pub call: OracleCall,
}

pub fn transcript_lines(entries: &[TranscriptEntry]) -> String {
    entries.iter().map(|e| serde_json::to_string(e).expect("transcript serializes") + "\n").collect()
}

struct RunOutput {
    success: bool,
    invariant_ok: bool,
    detail: Value,
    transcript: Vec<OracleCall>,
}

impl RunOutput {
    fn plain(success: bool, invariant_ok: bool, detail: Value) -> Self {
        RunOutput { success, invariant_ok, detail, transcript: Vec::new() }
    }
}

fn run_count(kind: &ExperimentKind) -> u64 {
    match kind {
        ExperimentKind::ErmVsBrute { classes, tasks, .. } => classes.len() as u64 * tasks,
        ExperimentKind::SubsetSumVsBrute { samples, .. } => *samples,
        ExperimentKind::WindowVsBrute { tasks, .. } => *tasks,
        ExperimentKind::HalfspaceSweep { seeds, .. } => *seeds,
        ExperimentKind::Audit { .. } => 1,
        ExperimentKind::LlpToPac { runs, .. } | ExperimentKind::NoisyParity { runs, .. } => *runs,
        ExperimentKind::Consistency { instances, .. } | ExperimentKind::Chain { instances, .. } => *instances,
        ExperimentKind::FilteredFrequency { .. } => 1,
    }
}

fn master_seed(kind: &ExperimentKind) -> u64 {
    match kind {
        ExperimentKind::ErmVsBrute { seed, .. }
        | ExperimentKind::SubsetSumVsBrute { seed, .. }
        | ExperimentKind::WindowVsBrute { seed, .. }
        | ExperimentKind::HalfspaceSweep { seed, .. }
        | ExperimentKind::Audit { seed, .. }
        | ExperimentKind::LlpToPac { seed, .. }
        | ExperimentKind::Consistency { seed, .. }
        | ExperimentKind::NoisyParity { seed, .. }
        | ExperimentKind::FilteredFrequency { seed, .. }
        | ExperimentKind::Chain { seed, .. } => *seed,
    }
}

/// The whole-class minimizer of `(|count − t|, count, encoding)`.
fn brute_enumeration(desc: &ClassDescriptor, sample: &Sample) -> Result<(u64, Hypothesis)> {
    let t = sample.positives();
    let mut best: Option<((u64, u64, crate::hypothesis::BitString), Hypothesis)> = None;
    for h in enumerate_class(desc, DEFAULT_BUDGET)? {
        let count = positive_count(&h, sample)?;
        let key = (count.abs_diff(t), count, encode(&h));
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, h));
        }
    }
    let ((residual, _, _), h) = best.ok_or_else(|| LlpError::InvalidParams("class is empty".into()))?;
    Ok((residual, h))
}

fn sample_values(sample: &Sample) -> Vec<u64> {
    sample.unique_counts().iter().filter_map(|(p, _)| p.as_nat()).collect()
}

fn erm_vs_brute(classes: &[ClassId], n_max: usize, m_max: u64, tasks: u64, run: u64, seed: u64) -> Result<RunOutput> {
    let class_id = classes[(run / tasks) as usize];
    let mut rng = rng_from_seed(seed);
    let n = rng.gen_range(1..=n_max);
    let desc = match class_id {
        ClassId::Parity => ClassDescriptor::parities(n),
        ClassId::MonotoneDisjunction => ClassDescriptor::disjunctions(n),
        ClassId::MonotoneConjunction => ClassDescriptor::conjunctions(n),
        ClassId::FiniteSubset => ClassDescriptor::finite_subsets(None),
        other => return Err(LlpError::InvalidParams(format!("erm_vs_brute does not cover {other:?}"))),
    };
    let m = rng.gen_range(1..=m_max);
    let points = random_points(&desc, m, 1 << n, &mut rng)?;
    let unlabeled = Sample::with_count(points, 0)?;
    let brute_class = match class_id {
        ClassId::FiniteSubset => desc.with_ground_set(sample_values(&unlabeled)),
        _ => desc.clone(),
    };
    // Half the tasks reveal a realizable count, half an arbitrary one.
    let t = if rng.gen_bool(0.5) {
        positive_count(&random_target(&brute_class, rng.gen())?, &unlabeled)?
    } else {
        rng.gen_range(0..=m)
    };
    let sample = unlabeled.with_positives(t)?;
    let erm = erm_proportion_matcher(&desc, &sample, DEFAULT_BUDGET)?;
    let erm_residual = positive_count(&erm.hypothesis, &sample)?.abs_diff(t);
    let (brute_residual, brute_h) = brute_enumeration(&brute_class, &sample)?;
    Ok(RunOutput::plain(
        erm_residual == brute_residual && erm.hypothesis == brute_h,
        erm.residual == rational::from_count(erm_residual, m),
        json!({
            "class": class_id, "n": n, "m": m, "t": t,
            "erm_residual": erm_residual, "brute_residual": brute_residual,
            "erm": erm.hypothesis.to_string(), "brute": brute_h.to_string(),
        }),
    ))
}

fn subset_sum_vs_brute(max_unique: u64, m_max: u64, seed: u64) -> Result<RunOutput> {
    let mut rng = rng_from_seed(seed);
    let u = rng.gen_range(1..=max_unique);
    let m = rng.gen_range(u..=m_max.max(u));
    let mut counts = vec![1u64; u as usize];
    for _ in u..m {
        counts[rng.gen_range(0..u as usize)] += 1;
    }
    let t = rng.gen_range(0..=m);
    let dp = subset_sum_nearest(&counts, t);
    let brute = brute_subset_sum(&counts, t)?;
    let dp_residual = dp.sum.abs_diff(t);
    let optimum = brute.optimum.expect("subset sum reports an optimum");
    Ok(RunOutput::plain(
        dp_residual == optimum,
        dp.cells <= (m + 1) * u,
        json!({ "u": u, "m": m, "t": t, "dp_residual": dp_residual, "optimum": optimum, "cells": dp.cells }),
    ))
}

fn window_vs_brute(k_max: u64, m_max: u64, span: u64, seed: u64) -> Result<RunOutput> {
    let mut rng = rng_from_seed(seed);
    let k = rng.gen_range(0..=k_max);
    let m = rng.gen_range(1..=m_max);
    let desc = ClassDescriptor::windows(k, None);
    let unlabeled = Sample::with_count(random_points(&desc, m, span, &mut rng)?, 0)?;
    let ground = ClassDescriptor::windows(k, Some(sample_values(&unlabeled)));
    let t = if rng.gen_bool(0.5) {
        positive_count(&random_target(&ground, rng.gen())?, &unlabeled)?
    } else {
        rng.gen_range(0..=m)
    };
    let sample = unlabeled.with_positives(t)?;
    let out = window_learner(&sample, k)?;
    let residual = positive_count(&out.hypothesis, &sample)?.abs_diff(t);
    let (brute_residual, brute_h) = brute_enumeration(&ground, &sample)?;
    let u = sample.unique_counts().len() as u64;
    let cap = 1 + u * (1u64 << k);
    Ok(RunOutput::plain(
        residual == brute_residual && out.hypothesis == brute_h,
        out.work.candidates <= cap,
        json!({
            "k": k, "m": m, "t": t, "unique": u, "residual": residual, "brute_residual": brute_residual,
            "candidates": out.work.candidates, "candidate_cap": cap,
        }),
    ))
}

fn halfspace_sweep(n: usize, m: u64, retries: u32, seed: u64) -> Result<RunOutput> {
    let mut rng = rng_from_seed(seed);
    let points = (0..m).map(|_| BitVector::random(n, &mut rng).map(Point::Bits)).collect::<Result<Vec<_>>>()?;
    let sample = Sample::with_count(points, m / 2)?;
    let params = HalfspaceParams { retries, precision_bits: None };
    let out = halfspace_sweep_learner(&sample, derive_seed(seed, 1), params)?;
    let recount = positive_count(&out.hypothesis, &sample)?;
    Ok(RunOutput::plain(
        out.residual == rational::zero(),
        rational::from_count(recount.abs_diff(m / 2), m) == out.residual && out.proper,
        json!({ "retries_used": out.work.retries, "recount": recount, "t": m / 2 }),
    ))
}

fn llp_to_pac_run(class: &ClassDescriptor, labeled: u64, delta: f64, mode: OracleMode, seed: u64) -> Result<RunOutput> {
    let target = random_target(class, derive_seed(seed, 1))?;
    let mut rng = rng_from_seed(seed);
    let examples = (0..labeled)
        .map(|_| {
            let x = Point::Bits(BitVector::random(class.n, &mut rng)?);
            Ok((x, target.evaluate(&x)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let dist = d_prime(&examples)?;
    let atoms = dist.atoms().expect("D′ is explicit");
    let m = atoms.len() as u64;
    let total: Rational = atoms.iter().map(|(_, w)| w.clone()).sum();
    let floor = rational::from_count(1, m * m);
    let invariant_ok = total == rational::one() && atoms.iter().all(|(_, w)| *w >= floor);
    let oracle = BruteLlpOracle::new(class.clone(), mode);
    let out = llp_to_pac(&examples, &oracle, delta, derive_seed(seed, 2))?;
    let errors = empirical_errors(&out.hypothesis, &examples)?;
    Ok(RunOutput {
        success: errors == 0,
        invariant_ok,
        detail: json!({
            "target": target.to_string(), "hypothesis": out.hypothesis.to_string(),
            "unique_points": out.unique_points, "positives": out.positives, "drawn": out.drawn, "errors": errors,
        }),
        transcript: out.transcript,
    })
}

fn consistency_run(n_max: usize, max_total: u64, delta: f64, mode: OracleMode, run: u64, seed: u64) -> Result<RunOutput> {
    let n = rng_from_seed(seed).gen_range(1..=n_max);
    let desc = if run.is_multiple_of(2) { ClassDescriptor::disjunctions(n) } else { ClassDescriptor::conjunctions(n) };
    let inst = random_consistency(&desc, max_total, derive_seed(seed, 1))?;
    let brute = brute_consistency(&inst, DEFAULT_BUDGET)?.decision.expect("consistency is a decision problem");
    let oracle = BruteLlpOracle::new(desc.clone(), mode);
    let out = consistency_via_llp(&inst, &oracle, delta, derive_seed(seed, 2))?;
    let verified = match &out.witness {
        Some(h) => inst.positive_mass(h)? == inst.k() && desc.contains(h),
        None => !out.accepted,
    };
    Ok(RunOutput {
        success: out.accepted == brute,
        invariant_ok: verified,
        detail: json!({
            "class": desc.class_id, "n": n, "total": inst.total(), "k": inst.k(),
            "brute": brute, "llp": out.accepted, "sample_size": out.sample_size, "invocations": out.invocations,
            "witness": out.witness.as_ref().map(ToString::to_string),
        }),
        transcript: out.transcript,
    })
}

#[allow(clippy::too_many_arguments)]
fn noisy_parity_run(
    n: usize,
    k_bits: usize,
    eta: &Rational,
    eta_prime: &Rational,
    delta: f64,
    m: Option<u64>,
    mode: OracleMode,
    seed: u64,
) -> Result<RunOutput> {
    let class = ClassDescriptor::parities_on_first(n, k_bits);
    let target = random_target(&class, derive_seed(seed, 1))?;
    let setup = NoisyParitySetup { n, k_bits, eta: eta.clone(), eta_prime: eta_prime.clone(), target };
    let oracle = BruteLlpOracle::new(class, mode);
    let m = match m {
        Some(m) => m,
        None => {
            let eps = (0.5 - rational::to_f64(eta_prime)) / 2.0;
            noisy_parity_sample_size(oracle.sample_size(eps, delta / 3.0)?, eta_prime, delta)?
        }
    };
    match noisy_parity_via_llp(&setup, m, &oracle, delta, derive_seed(seed, 2)) {
        Ok(out) => Ok(RunOutput {
            success: out.parity == setup.target,
            invariant_ok: true,
            detail: json!({
                "target": setup.target.to_string(), "parity": out.parity.to_string(),
                "m": m, "filtered": out.filtered, "invocations": out.invocations,
            }),
            transcript: out.transcript,
        }),
        Err(LlpError::NoCandidateAccepted) => Ok(RunOutput::plain(
            false,
            true,
            json!({ "target": setup.target.to_string(), "m": m, "parity": null }),
        )),
        Err(e) => Err(e),
    }
}

/// One row per point of the cube: `|count − N·p| ≤ 3·√(N·p·(1−p))`.
fn filtered_frequency(target: &Hypothesis, eta: &Rational, draws: u64, seed: u64) -> Result<Vec<ExperimentRow>> {
    let Hypothesis::Parity { mask } = target else {
        return Err(LlpError::MalformedHypothesis(format!("{target} is not a parity")));
    };
    let n = mask.len();
    let setup =
        NoisyParitySetup { n, k_bits: n, eta: eta.clone(), eta_prime: eta.clone(), target: target.clone() };
    let dist = filtered_distribution(target, eta, n)?;
    let mut counts: BTreeMap<BitVector, u64> = BTreeMap::new();
    for x in draw_filtered_examples(&setup, draws as usize, seed)? {
        *counts.entry(x).or_default() += 1;
    }
    let total = draws as f64;
    BitVector::all(n)?
        .enumerate()
        .map(|(i, x)| {
            let p = rational::to_f64(&dist.mass(&Point::Bits(x)).unwrap_or_else(|_| rational::zero()));
            let observed = counts.get(&x).copied().unwrap_or(0);
            let expected = total * p;
            let sigma = (total * p * (1.0 - p)).sqrt();
            let z = if sigma > 0.0 { (observed as f64 - expected) / sigma } else { 0.0 };
            let within = if sigma > 0.0 { z.abs() <= 3.0 } else { observed as f64 == expected };
            Ok(ExperimentRow {
                run: i as u64,
                seed,
                success: within,
                invariant_ok: true,
                detail: json!({ "point": x.to_string(), "observed": observed, "expected": expected, "z": z }),
                error: None,
            })
        })
        .collect()
}

fn chain_run(universe_sizes: &[usize], max_triples: usize, ell: Option<usize>, seed: u64) -> Result<RunOutput> {
    let mut rng = rng_from_seed(seed);
    let u = universe_sizes[rng.gen_range(0..universe_sizes.len())];
    let triples = rng.gen_range(0..=max_triples);
    let inst = random_x3c(u, triples, derive_seed(seed, 1))?;
    let r = chain_check(&inst, ell, DEFAULT_BUDGET)?;
    Ok(RunOutput::plain(r.agree, true, json!({ "universe": u, "triples": triples, "report": r })))
}

#[allow(clippy::too_many_arguments)]
fn audit(
    class: &ClassDescriptor,
    dist: &FiniteDistribution,
    target: &Hypothesis,
    m: SampleSizeSpec,
    epsilon: f64,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<ExperimentRow>> {
    let m = match m {
        SampleSizeSpec::Explicit(m) => m,
        SampleSizeSpec::Rule(_) => {
            let d = vc_dimension(class)
                .finite()
                .ok_or_else(|| LlpError::InfiniteClass("audit needs a finite VC dimension".into()))?;
            uniform_convergence_sample_size(d.max(1), epsilon, delta, 0.0)?
        }
    };
    let summary = empirical_generalization_audit(class, dist, target, m, delta, trials, seed)?;
    Ok(summary
        .rows
        .into_iter()
        .map(|r| ExperimentRow {
            run: r.trial,
            seed: derive_seed(seed, r.trial),
            success: r.satisfied,
            invariant_ok: r.bound_value >= 0.0,
            detail: json!({ "m": r.m, "d": r.d, "G": r.observed_gap.to_string(), "bound": r.bound_value }),
            error: None,
        })
        .collect())
}

fn run_single(kind: &ExperimentKind, run: u64, seed: u64) -> Result<RunOutput> {
    match kind {
        ExperimentKind::ErmVsBrute { classes, n_max, m_max, tasks, .. } => {
            erm_vs_brute(classes, *n_max, *m_max, *tasks, run, seed)
        }
        ExperimentKind::SubsetSumVsBrute { max_unique, m_max, .. } => subset_sum_vs_brute(*max_unique, *m_max, seed),
        ExperimentKind::WindowVsBrute { k_max, m_max, span, .. } => window_vs_brute(*k_max, *m_max, *span, seed),
        ExperimentKind::HalfspaceSweep { n, m, retries, .. } => halfspace_sweep(*n, *m, *retries, seed),
        ExperimentKind::LlpToPac { class, labeled, delta, mode, .. } => {
            llp_to_pac_run(class, *labeled, *delta, *mode, seed)
        }
        ExperimentKind::Consistency { n_max, max_total, delta, mode, .. } => {
            consistency_run(*n_max, *max_total, *delta, *mode, run, seed)
        }
        ExperimentKind::NoisyParity { n, k_bits, eta, eta_prime, delta, m, mode, .. } => {
            noisy_parity_run(*n, *k_bits, eta, eta_prime, *delta, *m, *mode, seed)
        }
        ExperimentKind::Chain { universe_sizes, max_triples, ell, .. } => {
            chain_run(universe_sizes, *max_triples, *ell, seed)
        }
        ExperimentKind::Audit { .. } | ExperimentKind::FilteredFrequency { .. } => {
            unreachable!("whole-experiment kinds are not split into runs")
        }
    }
}

fn validate(kind: &ExperimentKind) -> Result<()> {
    let bad = |msg: &str| Err(LlpError::InvalidParams(msg.into()));
    match kind {
        ExperimentKind::ErmVsBrute { classes, n_max, m_max, tasks, .. } => {
            if classes.is_empty() || *n_max == 0 || *m_max == 0 || *tasks == 0 {
                return bad("erm_vs_brute needs classes, n_max, m_max and tasks ≥ 1");
            }
        }
        ExperimentKind::SubsetSumVsBrute { max_unique, m_max, .. } => {
            if *max_unique == 0 || *m_max == 0 {
                return bad("subset_sum_vs_brute needs max_unique and m_max ≥ 1");
            }
        }
        ExperimentKind::WindowVsBrute { m_max, span, k_max, .. } => {
            if *m_max == 0 || *span == 0 || *k_max >= 63 {
                return bad("window_vs_brute needs m_max, span ≥ 1 and k_max < 63");
            }
        }
        ExperimentKind::Consistency { n_max, max_total, .. } => {
            if *n_max == 0 || *max_total == 0 {
                return bad("consistency needs n_max and max_total ≥ 1");
            }
        }
        ExperimentKind::Chain { universe_sizes, .. }
            if universe_sizes.is_empty() => {
                return bad("chain needs at least one universe size");
            }
        _ => {}
    }
    Ok(())
}

/// Runs an experiment. Oracle transcripts are collected only when `keep_transcripts`.
pub fn run_experiment(
    config: &ExperimentConfig,
    keep_transcripts: bool,
) -> Result<(ExperimentReport, Vec<TranscriptEntry>)> {
    let kind = &config.kind;
    validate(kind)?;
    let seed = master_seed(kind);
    let (rows, transcript) = match kind {
        ExperimentKind::Audit { class, distribution, target, m, epsilon, delta, trials, .. } => {
            (audit(class, distribution, target, *m, *epsilon, *delta, *trials, seed)?, Vec::new())
        }
        ExperimentKind::FilteredFrequency { target, eta, draws, .. } => {
            (filtered_frequency(target, eta, *draws, seed)?, Vec::new())
        }
        _ => {
            let outputs: Vec<(ExperimentRow, Vec<OracleCall>)> = with_pool(|| {
                (0..run_count(kind))
                    .into_par_iter()
                    .map(|run| {
                        let run_seed = derive_seed(seed, run);
                        match run_single(kind, run, run_seed) {
                            Ok(out) => (
                                ExperimentRow {
                                    run,
                                    seed: run_seed,
                                    success: out.success,
                                    invariant_ok: out.invariant_ok,
                                    detail: out.detail,
                                    error: None,
                                },
                                if keep_transcripts { out.transcript } else { Vec::new() },
                            ),
                            Err(e) => (
                                ExperimentRow {
                                    run,
                                    seed: run_seed,
                                    success: false,
                                    invariant_ok: true,
                                    detail: Value::Null,
                                    error: Some(format!("{}: {e}", e.kind())),
                                },
                                Vec::new(),
                            ),
                        }
                    })
                    .collect()
            })?;
            let mut rows = Vec::with_capacity(outputs.len());
            let mut transcript = Vec::new();
            for (row, calls) in outputs {
                transcript.extend(calls.into_iter().map(|call| TranscriptEntry { run: row.run, call }));
                rows.push(row);
            }
            (rows, transcript)
        }
    };
    let report = ExperimentReport {
        config: config.clone(),
        runs: rows.len() as u64,
        successes: rows.iter().filter(|r| r.success).count() as u64,
        invariant_failures: rows.iter().filter(|r| !r.invariant_ok).count() as u64,
        errors: rows.iter().filter(|r| r.error.is_some()).count() as u64,
        rows,
    };
    Ok((report, transcript))
}

pub fn experiment_json(report: &ExperimentReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig { kind, min_successes: None }
    }

    #[test]
    fn small_experiments_pass() {
        let kinds = [
            ExperimentKind::ErmVsBrute {
                classes: vec![ClassId::Parity, ClassId::MonotoneConjunction, ClassId::FiniteSubset],
                n_max: 3,
                m_max: 8,
                tasks: 10,
                seed: 1,
            },
            ExperimentKind::SubsetSumVsBrute { samples: 20, max_unique: 8, m_max: 20, seed: 2 },
            ExperimentKind::WindowVsBrute { k_max: 4, m_max: 12, tasks: 20, span: 20, seed: 3 },
            ExperimentKind::Chain { instances: 10, universe_sizes: vec![3, 6], max_triples: 4, ell: None, seed: 4 },
            ExperimentKind::Consistency {
                n_max: 2,
                max_total: 5,
                instances: 6,
                delta: 0.1,
                seed: 5,
                mode: OracleMode::Reject,
            },
        ];
        for kind in kinds {
            let (report, _) = run_experiment(&config(kind), false).unwrap();
            assert!(report.passed(), "{}", experiment_json(&report).unwrap());
        }
    }

    #[test]
    fn transcripts_follow_runs() {
        let kind = ExperimentKind::Consistency {
            n_max: 2,
            max_total: 4,
            instances: 4,
            delta: 0.1,
            seed: 9,
            mode: OracleMode::Arbitrary,
        };
        let (report, transcript) = run_experiment(&config(kind.clone()), true).unwrap();
        let calls: u64 = report.rows.iter().map(|r| r.detail["invocations"].as_u64().unwrap()).sum();
        assert_eq!(transcript.len() as u64, calls);
        assert!(transcript.windows(2).all(|w| w[0].run <= w[1].run));
        assert!(run_experiment(&config(kind), false).unwrap().1.is_empty());
        let line = transcript_lines(&transcript[..1]);
        assert!(line.starts_with("{\"run\":0,") && line.ends_with("}\n"));
    }

    #[test]
    fn config_json_is_flat() {
        let text = r#"{"experiment":"chain","instances":3,"universe_sizes":[3],"max_triples":2,"seed":1,"min_successes":3}"#;
        let c: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.min_successes, Some(3));
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&serde_json::to_string(&c).unwrap()).unwrap(), c);
    }
}
