//! Acceptance suite: one PASS/FAIL line per criterion, driven by the
//! checked-in configs under `configs/`.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;

use llp_core::harness::experiments::{experiment_json, run_experiment, ExperimentConfig, ExperimentReport};
use llp_core::harness::{report_csv, report_json, run_trials, TrialConfig, TrialReport, THREADS_ENV};
use llp_core::rational::{self, Rational};
use serde_json::Value;

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(config_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

thread_local! {
    static RENDERED: RefCell<BTreeMap<String, String>> = const { RefCell::new(BTreeMap::new()) };
}

fn render_trials(report: &TrialReport) -> String {
    report_json(report).unwrap() + &report_csv(&report.rows).unwrap()
}

fn trials(name: &str) -> TrialReport {
    let config: TrialConfig = serde_json::from_str(&read(name)).unwrap();
    let report = run_trials(&config).unwrap();
    RENDERED.with(|r| r.borrow_mut().insert(name.to_string(), render_trials(&report)));
    report
}

fn experiment(name: &str) -> ExperimentReport {
    let config: ExperimentConfig = serde_json::from_str(&read(name)).unwrap();
    let (report, _) = run_experiment(&config, false).unwrap();
    RENDERED.with(|r| r.borrow_mut().insert(name.to_string(), experiment_json(&report).unwrap()));
    report
}

fn rerender(name: &str) -> String {
    let text = read(name);
    if serde_json::from_str::<Value>(&text).unwrap().get("experiment").is_some() {
        let config: ExperimentConfig = serde_json::from_str(&text).unwrap();
        experiment_json(&run_experiment(&config, false).unwrap().0).unwrap()
    } else {
        let config: TrialConfig = serde_json::from_str(&text).unwrap();
        render_trials(&run_trials(&config).unwrap())
    }
}

/// `δ + 3·√(δ(1−δ)/N)`.
fn failure_ceiling(delta: f64, trials: u64) -> f64 {
    delta + 3.0 * (delta * (1.0 - delta) / trials as f64).sqrt()
}

fn u(v: &Value, key: &str) -> u64 {
    v[key].as_u64().unwrap_or_else(|| panic!("missing {key} in {v}"))
}

type Criterion = (&'static str, &'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    note: String,
}

fn verdict(pass: bool, note: impl Into<String>) -> Verdict {
    Verdict { pass, note: note.into() }
}

fn erm_equivalence() -> Verdict {
    let r = experiment("ac01_erm_vs_brute.json");
    let mut per_class: BTreeMap<String, u64> = BTreeMap::new();
    let mut agree = 0;
    for row in &r.rows {
        let d = &row.detail;
        *per_class.entry(d["class"].to_string()).or_default() += 1;
        assert!(u(d, "n") <= 4 && u(d, "m") <= 12);
        if d["erm_residual"] == d["brute_residual"] && d["erm"] == d["brute"] {
            agree += 1;
        }
    }
    let balanced = per_class.len() == 4 && per_class.values().all(|&c| c == 200);
    verdict(
        balanced && agree == r.runs && r.invariant_failures == 0,
        format!("{agree}/{} residual and witness matches", r.runs),
    )
}

fn subset_sum_exactness() -> Verdict {
    let r = experiment("ac02_subset_sum_vs_brute.json");
    let mut exact = 0;
    let mut within_cells = 0;
    for row in &r.rows {
        let d = &row.detail;
        let (unique, m) = (u(d, "u"), u(d, "m"));
        assert!(unique <= 20 && m <= 50);
        exact += u64::from(u(d, "dp_residual") == u(d, "optimum"));
        within_cells += u64::from(u(d, "cells") <= (m + 1) * unique);
    }
    verdict(
        r.runs == 500 && exact == 500 && within_cells == 500,
        format!("{exact}/500 optimal, {within_cells}/500 within (m+1)·u cells"),
    )
}

fn window_exactness() -> Verdict {
    let r = experiment("ac03_window_vs_brute.json");
    let mut exact = 0;
    let mut within = 0;
    for row in &r.rows {
        let d = &row.detail;
        let (k, unique) = (u(d, "k"), u(d, "unique"));
        assert!(k <= 8 && u(d, "m") <= 30);
        exact += u64::from(row.success && d["residual"] == d["brute_residual"]);
        within += u64::from(u(d, "candidates") <= 1 + unique * (1 << k));
    }
    verdict(
        r.runs == 200 && exact == 200 && within == 200,
        format!("{exact}/200 match enumeration, {within}/200 within 1 + u·2^k candidates"),
    )
}

fn halfspace_sweep() -> Verdict {
    let r = experiment("ac04_halfspace_sweep.json");
    let zero = r.rows.iter().filter(|row| row.success && u(&row.detail, "retries_used") <= 3).count() as u64;
    let verified = r.rows.iter().filter(|row| row.invariant_ok).count() as u64;
    verdict(
        r.runs == 1000 && zero * 100 >= 99 * r.runs && verified == r.runs,
        format!("{zero}/1000 residual 0, {verified}/1000 recounts verified"),
    )
}

/// Failure rate over trial rows, recomputed from `|p_h − p_c| ≤ ε`.
fn proportion_failures(report: &TrialReport) -> u64 {
    let eps = &report.config.epsilon;
    report
        .rows
        .iter()
        .filter(|row| match &row.p_h {
            Some(p_h) => rational::abs_diff(p_h, &row.p_c) > *eps,
            None => true,
        })
        .count() as u64
}

fn hoeffding_guarantee() -> Verdict {
    let r = trials("ac05_hoeffding_improper.json");
    let fails = proportion_failures(&r);
    let rate = fails as f64 / r.rows.len() as f64;
    let ceiling = failure_ceiling(0.1, 2000);
    verdict(
        r.m == 150 && r.rows.len() == 2000 && rate <= ceiling,
        format!("m = {}, failure rate {rate:.4} <= {ceiling:.4}", r.m),
    )
}

fn gap_guarantee() -> Verdict {
    let r = trials("ac06_gap_finite_subsets.json");
    let fails = proportion_failures(&r);
    let rate = fails as f64 / r.rows.len() as f64;
    let ceiling = failure_ceiling(0.1, 1000);
    verdict(
        r.m == 67 && r.rows.len() == 1000 && rate <= ceiling,
        format!("m = {}, failure rate {rate:.4} <= {ceiling:.4}", r.m),
    )
}

fn uniform_convergence_audit() -> Verdict {
    let r = experiment("ac07_uniform_convergence_audit.json");
    let mut exceed = 0u64;
    let mut sizes = Vec::new();
    for row in &r.rows {
        let d = &row.detail;
        sizes.push(u(d, "m"));
        let gap: Rational = rational::parse_rational(d["G"].as_str().unwrap()).unwrap();
        exceed += u64::from(rational::to_f64(&gap) > d["bound"].as_f64().unwrap());
    }
    let rate = exceed as f64 / r.runs as f64;
    let ceiling = failure_ceiling(0.1, 500);
    verdict(
        r.runs == 500 && sizes.iter().all(|&m| m == 2187) && rate <= ceiling,
        format!("m = 2187, bound exceeded in {rate:.4} <= {ceiling:.4}"),
    )
}

fn llp_to_pac() -> Verdict {
    let r = experiment("ac08_llp_to_pac.json");
    let zero = r.rows.iter().filter(|row| u(&row.detail, "errors") == 0).count();
    let unique_ok = r.rows.iter().all(|row| u(&row.detail, "unique_points") <= 12);
    verdict(
        r.runs == 100 && zero >= 95 && r.invariant_failures == 0 && unique_ok,
        format!("{zero}/100 consistent, {} invariant failures", r.invariant_failures),
    )
}

fn noisy_parity() -> Verdict {
    let r = experiment("ac09_noisy_parity.json");
    let planted = r.rows.iter().filter(|row| row.detail["parity"] == row.detail["target"]).count();
    let f = experiment("ac09_filtered_frequency.json");
    let draws = 100_000.0;
    let mut expected_total = 0.0;
    let within = f
        .rows
        .iter()
        .filter(|row| {
            let observed = row.detail["observed"].as_f64().unwrap();
            let expected = row.detail["expected"].as_f64().unwrap();
            expected_total += expected;
            let p = expected / draws;
            (observed - expected).abs() <= 3.0 * (draws * p * (1.0 - p)).sqrt()
        })
        .count();
    verdict(
        r.runs == 200 && planted >= 180 && f.runs == 64 && within == 64 && (expected_total - draws).abs() < 1e-6,
        format!("{planted}/200 planted parities, {within}/64 frequencies within 3σ"),
    )
}

fn reduction_chain() -> Verdict {
    let r = experiment("ac10_reduction_chain.json");
    let agree = r.rows.iter().filter(|row| row.detail["report"]["agree"] == Value::Bool(true)).count();
    verdict(r.runs == 100 && agree == 100, format!("{agree}/100 four-way agreements"))
}

fn consistency_via_llp() -> Verdict {
    let r = experiment("ac11_consistency_via_llp.json");
    let agree = r.rows.iter().filter(|row| row.detail["brute"] == row.detail["llp"]).count();
    let unsound = r.rows.iter().filter(|row| row.detail["llp"] == Value::Bool(true) && !row.invariant_ok).count();
    let small = r.rows.iter().all(|row| u(&row.detail, "total") <= 10 && u(&row.detail, "n") <= 4);
    verdict(
        r.runs == 100 && agree >= 99 && unsound == 0 && r.invariant_failures == 0 && small,
        format!("{agree}/100 decisions agree, {unsound} unverified acceptances"),
    )
}

fn noisy_distinguisher() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for eta in ["0", "10", "20"] {
        for kind in ["trivial", "nontrivial"] {
            let r = trials(&format!("ac12_noisy_distinguisher_eta{eta}_{kind}.json"));
            let exact = r.rows.iter().filter(|row| row.p_h.as_ref() == Some(&row.p_c)).count();
            pass &= r.m == 119 && r.rows.len() == 500 && exact * 100 >= 95 * 500;
            parts.push(format!("{exact}"));
        }
    }
    verdict(pass, format!("m = 119, exact proportions per run: {}/500", parts.join("/500, ")))
}

fn determinism() -> Verdict {
    let first = RENDERED.with(|r| r.borrow().clone());
    std::env::set_var(THREADS_ENV, "3");
    let differing: Vec<&String> = first.iter().filter(|(name, bytes)| rerender(name) != **bytes).map(|(n, _)| n).collect();
    std::env::remove_var(THREADS_ENV);
    verdict(
        first.len() == 18 && differing.is_empty(),
        format!("{} reports re-run on 3 workers, differing: {differing:?}", first.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("AC01", "erm matches brute-force enumeration", erm_equivalence),
        ("AC02", "subset-sum dp exactness", subset_sum_exactness),
        ("AC03", "window learner exactness", window_exactness),
        ("AC04", "halfspace sweep", halfspace_sweep),
        ("AC05", "hoeffding guarantee", hoeffding_guarantee),
        ("AC06", "gap guarantee", gap_guarantee),
        ("AC07", "uniform-convergence audit", uniform_convergence_audit),
        ("AC08", "llp to pac reduction", llp_to_pac),
        ("AC09", "noisy-parity reduction", noisy_parity),
        ("AC10", "reduction chain soundness", reduction_chain),
        ("AC11", "consistency via llp", consistency_via_llp),
        ("AC12", "noisy-parity distinguisher", noisy_distinguisher),
        ("AC13", "determinism", determinism),
    ];
    let mut failed = 0;
    for (id, title, check) in criteria {
        let started = std::time::Instant::now();
        let v = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                verdict(false, format!("panicked: {msg}"))
            });
        failed += usize::from(!v.pass);
        println!(
            "{} {id} {title}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.note,
            started.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 13 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
