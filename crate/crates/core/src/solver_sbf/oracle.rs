use std::time::Instant;

use super::{check_domains, SearchStats, Solution};
use crate::separation::{build_matrix, CompatibilityMatrix, MatrixOptions, SeparationParams};
use crate::trajgen::CandidateSet;
use crate::{Error, Result, Scalar};

pub const DEFAULT_ORACLE_CAP: u128 = 10_000_000;

pub fn solve_oracle<S: Scalar>(candidates: &CandidateSet<S>, params: &SeparationParams<S>) -> Result<Option<Solution<S>>> {
    solve_oracle_with_cap(candidates, params, DEFAULT_ORACLE_CAP)
}

/// Exact optimum by exhaustive enumeration of the Cartesian product over
/// the full compatibility matrix. Among equal-cost optima the
/// lexicographically smallest index tuple wins.
pub fn solve_oracle_with_cap<S: Scalar>(candidates: &CandidateSet<S>, params: &SeparationParams<S>, cap: u128) -> Result<Option<Solution<S>>> {
    let started = Instant::now();
    let product = candidates.product_size();
    if product > cap {
        return Err(Error::Resource(format!("{product} tuples exceed the oracle cap of {cap}")));
    }
    if candidates.n_aircraft() == 0 {
        return Err(Error::Contract("no aircraft to solve".into()));
    }
    check_domains(candidates)?;
    let matrix = build_matrix(candidates, params, MatrixOptions { max_checks: u128::MAX })?;

    let mut search = Enumeration { candidates, matrix: &matrix, current: Vec::with_capacity(candidates.n_aircraft()), best: None, visited: 0 };
    search.descend();

    let stats = SearchStats { nodes_popped: search.visited, pair_checks: matrix.checks as u64, elapsed: started.elapsed(), ..SearchStats::default() };
    Ok(search.best.map(|(total_cost, selection)| Solution { selection, total_cost, optimal: true, stats }))
}

struct Enumeration<'a, S> {
    candidates: &'a CandidateSet<S>,
    matrix: &'a CompatibilityMatrix,
    current: Vec<usize>,
    best: Option<(S, Vec<usize>)>,
    visited: u64,
}

impl<S: Scalar> Enumeration<'_, S> {
    /// Lexicographic walk; a prefix with an incompatible pair cannot
    /// complete into a clique, so its subtree is skipped.
    fn descend(&mut self) {
        let i = self.current.len();
        if i == self.candidates.n_aircraft() {
            self.visited += 1;
            let cost = self.candidates.selection_cost(&self.current);
            if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                self.best = Some((cost, self.current.clone()));
            }
            return;
        }
        for v in 0..self.candidates.lists[i].len() {
            let fits = self.current.iter().enumerate().all(|(k, &w)| self.matrix.get(k, w, i, v));
            if fits {
                self.current.push(v);
                self.descend();
                self.current.pop();
            }
        }
    }
}
