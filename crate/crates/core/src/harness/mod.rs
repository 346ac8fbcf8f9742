//! Seeded Monte Carlo trials of the (ε, δ) guarantee, plus the experiment
//! runners behind the `reduce` subcommand.

pub mod experiments;

use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::bounds::{hoeffding_sample_size, uniform_convergence_sample_size};
use crate::error::{LlpError, Result};
use crate::generate::{random_nat_distribution, random_target};
use crate::hypothesis::{bernoulli, vc_dimension, ClassDescriptor, ClassId, Hypothesis, DEFAULT_BUDGET};
use crate::learners::{
    erm_proportion_matcher, gap_learner_with, halfspace_sweep_learner, improper_learner,
    noisy_parity_uniform_learner, subset_sum_learner, window_learner, AchievableProportions, HalfspaceParams,
    LearnerId, LearnerOutcome,
};
use crate::model::{draw_sample, true_proportion, FiniteDistribution, Point, Sample};
use crate::rational::{self, Rational};
use crate::rng::{derive_seed, rng_from_seed};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "LLP_LAB_THREADS";

/// Runs `f` on a pool of `LLP_LAB_THREADS` workers when set, else on the
/// global pool.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let threads: usize = v
                .trim()
                .parse()
                .map_err(|_| LlpError::InvalidParams(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| LlpError::InvalidParams(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename = "random_nat")]
pub struct RandomNatDistribution {
    pub support: usize,
    /// Fixed across trials when set; otherwise drawn per trial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistributionSpec {
    Fixed(FiniteDistribution),
    RandomNat(RandomNatDistribution),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpec {
    Fixed(Hypothesis),
    /// One target for every trial when `seed` is set, else one per trial.
    Random {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FromBounds {
    #[serde(rename = "from-bounds")]
    FromBounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleSizeSpec {
    Explicit(u64),
    Rule(FromBounds),
}

/// Which formula "from-bounds" applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundRule {
    /// `hoeffding(ε, δ)`.
    Hoeffding,
    /// `hoeffding(ε/2, δ/2^s)` over the `2^s` subsets of an `s`-point support.
    UnionHoeffding,
    /// `gap_sample_size(β, δ)` with β from the known distribution.
    Gap,
    /// Uniform convergence at the class VC dimension, or at the support size
    /// for finite subsets.
    UniformConvergence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(with = "rational::serde_string")]
    pub eta: Rational,
    #[serde(with = "rational::serde_string")]
    pub eta_prime: Rational,
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub learner: LearnerId,
    pub class: ClassDescriptor,
    pub distribution: DistributionSpec,
    pub target: TargetSpec,
    #[serde(with = "rational::serde_string")]
    pub epsilon: Rational,
    #[serde(with = "rational::serde_string")]
    pub delta: Rational,
    pub m: SampleSizeSpec,
    pub trials: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundRule>,
    /// White-label noise, for the noisy-parity learner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfspace: Option<HalfspaceParams>,
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Wall time per trial; off by default so reports stay byte-identical.
    #[serde(default)]
    pub record_timing: bool,
    /// Success rate `--check` requires.
    #[serde(default, with = "optional_rational", skip_serializing_if = "Option::is_none")]
    pub min_success_rate: Option<Rational>,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        self.class.validate()?;
        if self.trials == 0 {
            return Err(LlpError::InvalidParams("trials must be at least 1".into()));
        }
        if !self.epsilon.is_positive_unit() {
            return Err(LlpError::InvalidParams(format!("epsilon = {} must lie in (0,1]", self.epsilon)));
        }
        if !(self.delta > rational::zero() && self.delta < rational::one()) {
            return Err(LlpError::InvalidParams(format!("delta = {} must lie in (0,1)", self.delta)));
        }
        if self.m == SampleSizeSpec::Explicit(0) {
            return Err(LlpError::InvalidParams("m must be at least 1".into()));
        }
        if self.learner == LearnerId::NoisyParity {
            let noise = self.noise.as_ref().ok_or_else(|| LlpError::InvalidParams("noisy_parity needs noise".into()))?;
            crate::learners::noisy_parity_threshold(&noise.eta_prime)?;
            if noise.eta < rational::zero() || noise.eta > noise.eta_prime {
                return Err(LlpError::InvalidNoiseBound(format!("need 0 ≤ η = {} ≤ η′ = {}", noise.eta, noise.eta_prime)));
            }
            let cube = matches!(&self.distribution, DistributionSpec::Fixed(d) if d.is_uniform_cube());
            if self.class.class_id != ClassId::Parity || !cube {
                return Err(LlpError::InvalidParams("noisy_parity needs parities under the uniform cube".into()));
            }
        }
        Ok(())
    }

    /// The rule "from-bounds" uses when none is given.
    pub fn default_bound(&self) -> BoundRule {
        match self.learner {
            LearnerId::Improper => BoundRule::Hoeffding,
            LearnerId::Gap => BoundRule::Gap,
            _ if vc_dimension(&self.class).finite().is_some() => BoundRule::UniformConvergence,
            _ => BoundRule::UnionHoeffding,
        }
    }

    fn support_size(&self) -> Result<usize> {
        match &self.distribution {
            DistributionSpec::Fixed(d) => d.support_size().ok_or_else(|| {
                LlpError::InvalidParams("the uniform cube has no explicit support size".into())
            }),
            DistributionSpec::RandomNat(r) => Ok(r.support),
        }
    }

    /// Resolves `m`, computing it from the bound formulas when asked.
    pub fn resolve_m(&self) -> Result<u64> {
        let eps = rational::to_f64(&self.epsilon);
        let delta = rational::to_f64(&self.delta);
        let m = match self.m {
            SampleSizeSpec::Explicit(m) => m,
            SampleSizeSpec::Rule(FromBounds::FromBounds) if self.learner == LearnerId::NoisyParity => {
                let eta_prime = &self.noise.as_ref().expect("validated").eta_prime;
                hoeffding_sample_size((0.5 - rational::to_f64(eta_prime)) / 2.0, delta)?
            }
            SampleSizeSpec::Rule(FromBounds::FromBounds) => match self.bound.unwrap_or_else(|| self.default_bound()) {
                BoundRule::Hoeffding => hoeffding_sample_size(eps, delta)?,
                BoundRule::UnionHoeffding => {
                    let s = self.support_size()?;
                    hoeffding_sample_size(eps / 2.0, delta / 2f64.powi(s as i32))?
                }
                BoundRule::Gap => {
                    let DistributionSpec::Fixed(dist) = &self.distribution else {
                        return Err(LlpError::InvalidParams("the gap bound needs a fixed distribution".into()));
                    };
                    AchievableProportions::compute(&self.class, dist, self.budget)?.gap().sample_size(delta)?
                }
                BoundRule::UniformConvergence => {
                    let d = match vc_dimension(&self.class).finite() {
                        Some(d) => d,
                        None if self.class.class_id == ClassId::FiniteSubset => self.support_size()? as u64,
                        None => return Err(LlpError::InfiniteClass("no finite VC dimension".into())),
                    };
                    uniform_convergence_sample_size(d.max(1), eps, delta, 0.0)?
                }
            },
        };
        if m == 0 {
            return Err(LlpError::InvalidParams("resolved m is 0".into()));
        }
        Ok(m)
    }
}

trait UnitInterval {
    fn is_positive_unit(&self) -> bool;
}

impl UnitInterval for Rational {
    fn is_positive_unit(&self) -> bool {
        *self > rational::zero() && *self <= rational::one()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: u64,
    pub seed: u64,
    #[serde(with = "rational::serde_string")]
    pub p_c: Rational,
    #[serde(default, with = "optional_rational", skip_serializing_if = "Option::is_none")]
    pub p_h: Option<Rational>,
    #[serde(default, with = "optional_rational", skip_serializing_if = "Option::is_none")]
    pub residual: Option<Rational>,
    pub success: bool,
    pub ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

mod optional_rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_str(&r.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
        Ok(Option::<rational::RationalParam>::deserialize(d)?.map(|p| p.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: u64,
    pub successes: u64,
    pub errors: u64,
    #[serde(with = "rational::serde_string")]
    pub success_rate: Rational,
    /// Exact binomial 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(default, with = "optional_rational", skip_serializing_if = "Option::is_none")]
    pub mean_residual: Option<Rational>,
}

impl Aggregate {
    pub fn from_rows(rows: &[TrialRow]) -> Self {
        let trials = rows.len() as u64;
        let successes = rows.iter().filter(|r| r.success).count() as u64;
        let residuals: Vec<&Rational> = rows.iter().filter_map(|r| r.residual.as_ref()).collect();
        let mean_residual = (!residuals.is_empty()).then(|| {
            residuals.iter().copied().sum::<Rational>() / rational::from_count(residuals.len() as u64, 1)
        });
        let (ci_low, ci_high) = clopper_pearson(successes, trials, 0.05);
        Aggregate {
            trials,
            successes,
            errors: rows.iter().filter(|r| r.error.is_some()).count() as u64,
            success_rate: if trials == 0 { rational::zero() } else { rational::from_count(successes, trials) },
            ci_low,
            ci_high,
            mean_residual,
        }
    }
}

/// Exact two-sided `1 − alpha` interval for `successes` out of `trials`.
pub fn clopper_pearson(successes: u64, trials: u64, alpha: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let (x, n) = (successes as f64, trials as f64);
    let quantile = |a: f64, b: f64, p: f64| Beta::new(a, b).expect("positive shape parameters").inverse_cdf(p);
    let low = if successes == 0 { 0.0 } else { quantile(x, n - x + 1.0, alpha / 2.0) };
    let high = if successes == trials { 1.0 } else { quantile(x + 1.0, n - x, 1.0 - alpha / 2.0) };
    (low, high)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub config: TrialConfig,
    pub m: u64,
    pub rows: Vec<TrialRow>,
    pub aggregate: Aggregate,
}

impl TrialReport {
    /// Meets `min_success_rate`, or succeeds on every trial when none is set.
    pub fn passed(&self) -> bool {
        match &self.config.min_success_rate {
            Some(rate) => self.aggregate.success_rate >= *rate,
            None => self.aggregate.successes == self.aggregate.trials,
        }
    }
}

/// Everything shared by the trials of one config.
struct Prepared<'a> {
    config: &'a TrialConfig,
    m: u64,
    dist: Option<FiniteDistribution>,
    target: Option<Hypothesis>,
    table: Option<AchievableProportions>,
}

impl Prepared<'_> {
    fn distribution(&self, trial_seed: u64) -> Result<FiniteDistribution> {
        match (&self.dist, &self.config.distribution) {
            (Some(d), _) => Ok(d.clone()),
            (None, DistributionSpec::RandomNat(r)) => random_nat_distribution(r.support, derive_seed(trial_seed, 3)),
            (None, DistributionSpec::Fixed(d)) => Ok(d.clone()),
        }
    }
}

/// Classes over ℕ without a ground set take the distribution's support.
fn class_for(desc: &ClassDescriptor, dist: &FiniteDistribution) -> ClassDescriptor {
    match (desc.class_id, &desc.ground_set, dist.atoms()) {
        (ClassId::FiniteSubset | ClassId::Window, None, Some(atoms)) => {
            desc.with_ground_set(atoms.iter().filter_map(|(p, _)| p.as_nat()).collect())
        }
        _ => desc.clone(),
    }
}

fn noisy_sample(dist: &FiniteDistribution, m: u64, seed: u64, target: &Hypothesis, eta: &Rational) -> Result<Sample> {
    let mut rng = rng_from_seed(seed);
    let mut points = Vec::with_capacity(m as usize);
    let mut positives = 0;
    for _ in 0..m {
        let x = dist.draw_point(&mut rng);
        if target.evaluate(&x)? ^ bernoulli(eta, &mut rng) {
            positives += 1;
        }
        points.push(x);
    }
    Sample::with_count(points, positives)
}

fn run_learner(prep: &Prepared, class: &ClassDescriptor, sample: &Sample, seed: u64) -> Result<LearnerOutcome> {
    let config = prep.config;
    match config.learner {
        LearnerId::Improper => Ok(improper_learner(sample)),
        LearnerId::Gap => match &prep.table {
            Some(table) => gap_learner_with(table, sample),
            None => Err(LlpError::InvalidParams("the gap learner needs a fixed distribution".into())),
        },
        LearnerId::Erm => erm_proportion_matcher(class, sample, config.budget),
        LearnerId::SubsetSum => subset_sum_learner(sample),
        LearnerId::Window => {
            window_learner(sample, class.k.ok_or_else(|| LlpError::InvalidParams("window class needs k".into()))?)
        }
        LearnerId::Halfspace => halfspace_sweep_learner(sample, seed, config.halfspace.unwrap_or_default()),
        LearnerId::NoisyParity => {
            noisy_parity_uniform_learner(sample, &config.noise.as_ref().expect("validated").eta_prime, class.n)
        }
    }
}

fn run_one(prep: &Prepared, trial: u64) -> TrialRow {
    let config = prep.config;
    let seed = derive_seed(config.seed, trial);
    let start = Instant::now();
    let mut row = TrialRow {
        trial,
        seed,
        p_c: rational::zero(),
        p_h: None,
        residual: None,
        success: false,
        ms: 0,
        error: None,
    };
    let result = (|| -> Result<()> {
        let dist = prep.distribution(seed)?;
        let class = class_for(&config.class, &dist);
        let target = match &prep.target {
            Some(t) => t.clone(),
            None => random_target(&class, derive_seed(seed, 1))?,
        };
        row.p_c = true_proportion(&target, &dist)?;
        let sample = match &config.noise {
            Some(noise) if config.learner == LearnerId::NoisyParity => {
                noisy_sample(&dist, prep.m, derive_seed(seed, 0), &target, &noise.eta)?
            }
            _ => draw_sample(&dist, prep.m as usize, derive_seed(seed, 0), &target)?,
        };
        let outcome = run_learner(prep, &class, &sample, derive_seed(seed, 2))?;
        let p_h = true_proportion(&outcome.hypothesis, &dist)?;
        let residual = rational::abs_diff(&row.p_c, &p_h);
        row.success = residual <= config.epsilon;
        row.p_h = Some(p_h);
        row.residual = Some(residual);
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(format!("{}: {e}", e.kind()));
    }
    if config.record_timing {
        row.ms = start.elapsed().as_millis() as u64;
    }
    row
}

/// Runs `config.trials` independent trials. Each trial derives its seeds from
/// `(seed, trial)`, so the report does not depend on the worker count.
/// Failures inside a trial are recorded on its row.
pub fn run_trials(config: &TrialConfig) -> Result<TrialReport> {
    config.validate()?;
    let m = config.resolve_m()?;
    let dist = match &config.distribution {
        DistributionSpec::Fixed(d) => Some(d.clone()),
        DistributionSpec::RandomNat(RandomNatDistribution { support, seed: Some(s) }) => {
            Some(random_nat_distribution(*support, *s)?)
        }
        DistributionSpec::RandomNat(_) => None,
    };
    let target = match &config.target {
        TargetSpec::Fixed(h) => Some(h.clone()),
        TargetSpec::Random { seed: Some(s) } => {
            let class = match &dist {
                Some(d) => class_for(&config.class, d),
                None => config.class.clone(),
            };
            Some(random_target(&class, *s)?)
        }
        TargetSpec::Random { seed: None } => None,
    };
    if let (Some(t), Some(d)) = (&target, &dist) {
        t.check_domain(d.domain())?;
    }
    let table = match (&dist, config.learner) {
        (Some(d), LearnerId::Gap) => Some(AchievableProportions::compute(&class_for(&config.class, d), d, config.budget)?),
        _ => None,
    };
    let prep = Prepared { config, m, dist, target, table };
    let rows: Vec<TrialRow> = with_pool(|| (0..config.trials).into_par_iter().map(|t| run_one(&prep, t)).collect())?;
    let aggregate = Aggregate::from_rows(&rows);
    Ok(TrialReport { config: config.clone(), m, rows, aggregate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = LlpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(LlpError::InvalidParams(format!("unknown report format {other:?}"))),
        }
    }
}

pub const CSV_HEADER: [&str; 9] = ["trial", "seed", "p_c_num", "p_c_den", "p_h_num", "p_h_den", "residual", "success", "ms"];

pub fn report_csv(rows: &[TrialRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| LlpError::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        let (p_h_num, p_h_den) = match &r.p_h {
            Some(p) => (p.numer().to_string(), p.denom().to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            r.p_c.numer().to_string(),
            r.p_c.denom().to_string(),
            p_h_num,
            p_h_den,
            r.residual.as_ref().map(ToString::to_string).unwrap_or_default(),
            u8::from(r.success).to_string(),
            r.ms.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| LlpError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn report_json(report: &TrialReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

pub fn render_report(report: &TrialReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => report_csv(&report.rows),
        ReportFormat::Json => report_json(report),
    }
}

pub fn emit_report(report: &TrialReport, format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render_report(report, format)?)?;
    Ok(())
}

/// Uniform points over the class domain: the cube, or naturals in `1..=span`.
pub(crate) fn random_points(class: &ClassDescriptor, m: u64, span: u64, rng: &mut impl Rng) -> Result<Vec<Point>> {
    (0..m)
        .map(|_| match class.class_id {
            ClassId::FiniteSubset | ClassId::Window => Ok(Point::Nat(rng.gen_range(1..=span))),
            _ => Ok(Point::Bits(crate::model::BitVector::random(class.n, rng)?)),
        })
        .collect()
}
