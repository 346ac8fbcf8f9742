use super::{LearnerOutcome, WorkCounters};
use crate::error::{LlpError, Result};
use crate::hypothesis::{Hypothesis, DEFAULT_BUDGET};
use crate::model::{Domain, Sample};

/// Window learner for `H_k`: every positive set on the sample is a subset of
/// unique values with span at most `k`, so it has a leftmost value `v` and
/// otherwise uses only values in `(v, v+k]`. Enumerating those subsets per
/// `v` covers every achievable labeling in `O(2^k·u)` candidates.
pub fn window_learner(sample: &Sample, k: u64) -> Result<LearnerOutcome> {
    match sample.domain() {
        Some(Domain::Naturals) | None => {}
        Some(other) => return Err(LlpError::DomainMismatch(format!("windows need ℕ, found {other}"))),
    }
    let unique: Vec<(u64, u64)> = sample
        .unique_counts()
        .iter()
        .map(|(p, a)| (p.as_nat().expect("ℕ domain"), *a))
        .collect();
    let t = sample.positives();
    // (residual, count, elements); elements compare like the encodings do.
    let mut best: (u64, u64, Vec<u64>) = (t, 0, Vec::new());
    let mut candidates = 1u64;
    for (i, &(v, a)) in unique.iter().enumerate() {
        let rest: Vec<(u64, u64)> = unique[i + 1..].iter().copied().take_while(|&(w, _)| w - v <= k).collect();
        if rest.len() >= 63 || candidates.saturating_add(1 << rest.len()) > DEFAULT_BUDGET {
            return Err(LlpError::BudgetExceeded { budget: DEFAULT_BUDGET });
        }
        for subset in 0u64..1 << rest.len() {
            candidates += 1;
            let count = a + rest
                .iter()
                .enumerate()
                .filter(|(j, _)| subset >> j & 1 == 1)
                .map(|(_, (_, c))| c)
                .sum::<u64>();
            let key = (count.abs_diff(t), count);
            if key > (best.0, best.1) {
                continue;
            }
            let elems: Vec<u64> = std::iter::once(v)
                .chain(rest.iter().enumerate().filter(|(j, _)| subset >> j & 1 == 1).map(|(_, (w, _))| *w))
                .collect();
            if key < (best.0, best.1) || elems < best.2 {
                best = (key.0, key.1, elems);
            }
        }
    }
    let h = Hypothesis::window(k, best.2)?;
    LearnerOutcome::on_sample(h, sample, WorkCounters { candidates, ..Default::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Point;
    use crate::rational::ratio;

    fn nats(values: &[u64], positives: u64) -> Sample {
        Sample::with_count(values.iter().map(|&v| Point::Nat(v)).collect(), positives).unwrap()
    }

    #[test]
    fn zero_span_forces_singletons() {
        let out = window_learner(&nats(&[3, 9, 20], 1), 0).unwrap();
        assert_eq!(out.hypothesis, Hypothesis::window(0, [3]).unwrap());
        assert_eq!(out.residual, ratio(0, 1));
    }

    #[test]
    fn span_limits_pairs() {
        let out = window_learner(&nats(&[3, 5, 9], 2), 2).unwrap();
        assert_eq!(out.hypothesis, Hypothesis::window(2, [3, 5]).unwrap());
        let out = window_learner(&nats(&[3, 9, 20], 2), 2).unwrap();
        assert_eq!(out.residual, ratio(1, 3));
        assert_eq!(out.hypothesis, Hypothesis::window(2, [3]).unwrap());
    }

    #[test]
    fn zero_proportion_is_empty_window() {
        let out = window_learner(&nats(&[4, 4, 5], 0), 3).unwrap();
        assert_eq!(out.hypothesis, Hypothesis::window(3, []).unwrap());
        assert_eq!(out.work.candidates, 1 + 2 + 1);
    }

    #[test]
    fn duplicates_count_with_multiplicity() {
        let out = window_learner(&nats(&[7, 7, 7, 8], 1), 1).unwrap();
        assert_eq!(out.hypothesis, Hypothesis::window(1, [8]).unwrap());
    }
}
