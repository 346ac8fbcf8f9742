use serde::{Deserialize, Serialize};

use super::{LearnerOutcome, WorkCounters};
use crate::error::{LlpError, Result};
use crate::hypothesis::Hypothesis;
use crate::model::{Domain, Sample};

/// Optimal subset of `counts` for target `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSumSolution {
    /// Chosen indices, ascending.
    pub chosen: Vec<usize>,
    pub sum: u64,
    pub cells: u64,
}

/// Minimizes `|Σ counts[i] − t|` over subsets; ties go to the smaller sum,
/// then the lexicographically smallest index list.
///
/// `reach[i][s]` says whether some subset of `counts[i..]` sums to `s`. A
/// forward pass that always takes the earliest index still able to finish
/// the remaining sum yields the lexicographically smallest list.
pub fn subset_sum_nearest(counts: &[u64], t: u64) -> SubsetSumSolution {
    let total: u64 = counts.iter().sum();
    let width = total as usize + 1;
    let u = counts.len();
    let mut reach = vec![vec![false; width]; u + 1];
    reach[u][0] = true;
    let mut cells = 0u64;
    for i in (0..u).rev() {
        let a = counts[i] as usize;
        for s in 0..width {
            reach[i][s] = reach[i + 1][s] || (s >= a && reach[i + 1][s - a]);
        }
        cells += width as u64;
    }
    let sum = (0..width as u64)
        .filter(|&s| reach[0][s as usize])
        .min_by_key(|&s| (s.abs_diff(t), s))
        .expect("the empty subset is always reachable");
    let mut chosen = Vec::new();
    let mut rem = sum as usize;
    let mut i = 0;
    while rem > 0 {
        let j = (i..u)
            .find(|&j| counts[j] as usize <= rem && reach[j + 1][rem - counts[j] as usize])
            .expect("reachable remainder has a next element");
        chosen.push(j);
        rem -= counts[j] as usize;
        i = j + 1;
    }
    SubsetSumSolution { chosen, sum, cells }
}

/// Finite-subset learner over ℕ: exact subset sum on the unique values'
/// multiplicities.
pub fn subset_sum_learner(sample: &Sample) -> Result<LearnerOutcome> {
    match sample.domain() {
        Some(Domain::Naturals) | None => {}
        Some(other) => return Err(LlpError::DomainMismatch(format!("subset sum needs ℕ, found {other}"))),
    }
    let unique = sample.unique_counts();
    let counts: Vec<u64> = unique.iter().map(|(_, a)| *a).collect();
    let sol = subset_sum_nearest(&counts, sample.positives());
    let h = Hypothesis::finite_subset(sol.chosen.iter().filter_map(|&i| unique[i].0.as_nat()));
    let work = WorkCounters { dp_cells: sol.cells, candidates: counts.len() as u64, ..Default::default() };
    LearnerOutcome::on_sample(h, sample, work)
}
