use std::time::{Duration, Instant};

use crate::separation::{check_pair_cached, CompatibilityCache, SeparationParams};
use crate::trajgen::CandidateSet;
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GreedyStatus {
    Success,
    /// No trajectory of this aircraft (candidate index) fits the ones
    /// already fixed.
    Failed {
        aircraft: usize,
    },
    TimedOut,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedySolution<S> {
    /// Chosen trajectory per aircraft, `None` where the scan never got.
    pub selection: Vec<Option<usize>>,
    /// Sum over the fixed choices.
    pub total_cost: S,
    pub status: GreedyStatus,
    pub pair_checks: u64,
    pub elapsed: Duration,
}

impl<S: Scalar> GreedySolution<S> {
    pub fn success(&self) -> bool {
        self.status == GreedyStatus::Success
    }

    /// Complete selection when successful.
    pub fn complete_selection(&self) -> Option<Vec<usize>> {
        if self.success() {
            self.selection.iter().copied().collect()
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GreedyOptions {
    /// Candidate indices in processing order; aircraft id order when `None`.
    pub order: Option<Vec<usize>>,
    pub deadline: Option<Instant>,
}

/// Fixes aircraft one at a time, each on its cheapest trajectory compatible
/// with every choice made so far. No backtracking.
pub fn solve_greedy<S: Scalar>(
    candidates: &CandidateSet<S>,
    params: &SeparationParams<S>,
    cache: &CompatibilityCache<S>,
    options: &GreedyOptions,
) -> Result<GreedySolution<S>> {
    let started = Instant::now();
    let n = candidates.n_aircraft();
    let order = match &options.order {
        Some(o) => {
            let mut sorted = o.clone();
            sorted.sort_unstable();
            if sorted != (0..n).collect::<Vec<_>>() {
                return Err(Error::Parameter("greedy order is not a permutation".into()));
            }
            o.clone()
        }
        None => {
            let mut o: Vec<usize> = (0..n).collect();
            o.sort_by_key(|&i| candidates.aircraft_ids[i]);
            o
        }
    };
    super::super::solver_sbf::check_domains(candidates)?;

    let misses_before = cache.misses();
    let mut selection: Vec<Option<usize>> = vec![None; n];
    let mut fixed: Vec<(usize, usize)> = Vec::with_capacity(n);
    let mut steps = 0u64;
    let mut status = GreedyStatus::Success;

    'aircraft: for &i in &order {
        for v in 0..candidates.lists[i].len() {
            steps += 1;
            if steps.is_multiple_of(256) && options.deadline.is_some_and(|d| Instant::now() >= d) {
                status = GreedyStatus::TimedOut;
                break 'aircraft;
            }
            let mut fits = true;
            for &(k, w) in &fixed {
                if !check_pair_cached(cache, i, v, k, w, candidates, params)? {
                    fits = false;
                    break;
                }
            }
            if fits {
                selection[i] = Some(v);
                fixed.push((i, v));
                continue 'aircraft;
            }
        }
        status = GreedyStatus::Failed { aircraft: i };
        break;
    }

    let total_cost = (0..n).filter_map(|i| selection[i].map(|v| candidates.cost(i, v))).fold(S::zero(), |a, c| a + c);
    Ok(GreedySolution { selection, total_cost, status, pair_checks: cache.misses() - misses_before, elapsed: started.elapsed() })
}
