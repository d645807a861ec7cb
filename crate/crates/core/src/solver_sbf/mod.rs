//! Best-first minimum-cost clique search over the n-partite trajectory
//! graph, plus an exhaustive oracle used to validate it.
//!
//! Search nodes are partial selections over the aircraft (in search order).
//! The cheapest node is expanded first; when its newest trajectory is
//! compatible with the rest of the prefix it spawns a child with the next
//! aircraft's cheapest trajectory, and in every case it spawns the sibling
//! holding the next trajectory of its own aircraft. With cost-sorted
//! domains and non-negative costs, the first complete compatible node
//! popped is optimal. Compatibility edges are evaluated lazily.

mod frontier;
mod oracle;

pub use frontier::{Frontier, SearchNode};
pub use oracle::{solve_oracle, solve_oracle_with_cap, DEFAULT_ORACLE_CAP};

use std::time::{Duration, Instant};

use crate::separation::{check_pair_cached, CompatibilityCache, SeparationParams};
use crate::trajgen::CandidateSet;
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes_popped: u64,
    pub nodes_pushed: u64,
    /// Compatibility evaluations actually computed.
    pub pair_checks: u64,
    /// Compatibility lookups, cached or not.
    pub pair_queries: u64,
    pub peak_frontier: usize,
    pub elapsed: Duration,
}

/// One trajectory per aircraft, indices into the candidate lists (aircraft
/// in candidate-set order).
#[derive(Clone, Debug, PartialEq)]
pub struct Solution<S> {
    pub selection: Vec<usize>,
    pub total_cost: S,
    pub optimal: bool,
    pub stats: SearchStats,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SbfOutcome<S> {
    Solved(Solution<S>),
    /// Frontier exhausted (with an upper bound: nothing cheaper exists).
    NoSolution(SearchStats),
    Timeout(SearchStats),
    MemoryLimit(SearchStats),
}

impl<S> SbfOutcome<S> {
    pub fn solution(&self) -> Option<&Solution<S>> {
        match self {
            SbfOutcome::Solved(s) => Some(s),
            _ => None,
        }
    }

    pub fn stats(&self) -> &SearchStats {
        match self {
            SbfOutcome::Solved(s) => &s.stats,
            SbfOutcome::NoSolution(s) | SbfOutcome::Timeout(s) | SbfOutcome::MemoryLimit(s) => s,
        }
    }
}

/// Order in which aircraft enter the search.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum AircraftOrder {
    #[default]
    AscendingDomain,
    AsGiven,
    Explicit(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct SbfOptions<S> {
    pub deadline: Option<Instant>,
    /// Only selections strictly cheaper than this are searched.
    pub upper_bound: Option<S>,
    pub order: AircraftOrder,
    /// Bound on queued nodes, standing in for a memory limit.
    pub max_nodes: usize,
    /// Pops between two clock reads.
    pub check_interval: u64,
}

impl<S> Default for SbfOptions<S> {
    fn default() -> Self {
        Self { deadline: None, upper_bound: None, order: AircraftOrder::default(), max_nodes: 50_000_000, check_interval: 1024 }
    }
}

impl<S> SbfOptions<S> {
    pub fn with_timeout(timeout: Duration) -> Self {
        Self { deadline: Some(Instant::now() + timeout), ..Self::default() }
    }
}

fn search_order(sizes: &[usize], order: &AircraftOrder) -> Result<Vec<usize>> {
    let n = sizes.len();
    let perm = match order {
        AircraftOrder::AsGiven => (0..n).collect(),
        AircraftOrder::AscendingDomain => {
            let mut p: Vec<usize> = (0..n).collect();
            p.sort_by_key(|&i| (sizes[i], i));
            p
        }
        AircraftOrder::Explicit(p) => {
            let mut seen = vec![false; n];
            if p.len() != n || p.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
                return Err(Error::Parameter("aircraft order is not a permutation".into()));
            }
            p.clone()
        }
    };
    Ok(perm)
}

pub(crate) fn check_domains<S: Scalar>(candidates: &CandidateSet<S>) -> Result<()> {
    for (i, list) in candidates.lists.iter().enumerate() {
        if list.iter().any(|t| !(t.cost >= S::zero())) {
            return Err(Error::Contract(format!("aircraft index {i} has a negative or undefined cost")));
        }
        if list.windows(2).any(|w| w[0].cost > w[1].cost) {
            return Err(Error::Contract(format!("aircraft index {i} domain is not sorted by cost")));
        }
    }
    Ok(())
}

/// Best-first search with a private compatibility cache.
pub fn solve_sbf<S: Scalar>(candidates: &CandidateSet<S>, params: &SeparationParams<S>, options: &SbfOptions<S>) -> Result<SbfOutcome<S>> {
    solve_sbf_with_cache(candidates, params, &CompatibilityCache::new(), options)
}

/// Best-first search sharing `cache` with other solvers.
pub fn solve_sbf_with_cache<S: Scalar>(
    candidates: &CandidateSet<S>,
    params: &SeparationParams<S>,
    cache: &CompatibilityCache<S>,
    options: &SbfOptions<S>,
) -> Result<SbfOutcome<S>> {
    let started = Instant::now();
    let n = candidates.n_aircraft();
    if n == 0 {
        return Err(Error::Contract("no aircraft to solve".into()));
    }
    check_domains(candidates)?;
    let sizes = candidates.domain_sizes();
    let order = search_order(&sizes, &options.order)?;
    let mut stats = SearchStats::default();
    let misses_before = cache.misses();
    let finish = |mut stats: SearchStats| {
        stats.pair_checks = cache.misses() - misses_before;
        stats.elapsed = started.elapsed();
        stats
    };
    if sizes.contains(&0) {
        return Ok(SbfOutcome::NoSolution(finish(stats)));
    }

    let cost_at = |pos: usize, v: u32| candidates.cost(order[pos], v as usize);
    let admissible = |c: S| options.upper_bound.is_none_or(|ub| c < ub);
    let interval = options.check_interval.max(1);

    let mut frontier = Frontier::new(n);
    if admissible(cost_at(0, 0)) {
        frontier.push(&[0], cost_at(0, 0));
        stats.nodes_pushed += 1;
    }
    let mut last_cost = S::neg_infinity();
    let mut prefix: Vec<u32> = Vec::with_capacity(n);

    while let Some(cost) = frontier.pop_into(&mut prefix) {
        stats.nodes_popped += 1;
        debug_assert!(cost >= last_cost, "frontier popped out of order");
        last_cost = cost;
        if stats.nodes_popped % interval == 0 {
            if let Some(deadline) = options.deadline {
                if Instant::now() >= deadline {
                    return Ok(SbfOutcome::Timeout(finish(stats)));
                }
            }
        }

        let depth = prefix.len() - 1;
        let value = prefix[depth];
        debug_assert_eq!(
            prefix.iter().enumerate().fold(S::zero(), |acc, (k, &v)| acc + cost_at(k, v)),
            cost,
            "node cost drifted from its prefix sum"
        );

        let mut legal = true;
        for (k, &earlier) in prefix[..depth].iter().enumerate() {
            stats.pair_queries += 1;
            if !check_pair_cached(cache, order[depth], value as usize, order[k], earlier as usize, candidates, params)? {
                legal = false;
                break;
            }
        }

        if legal {
            if depth + 1 == n {
                let mut selection = vec![0usize; n];
                for (k, &v) in prefix.iter().enumerate() {
                    selection[order[k]] = v as usize;
                }
                let total_cost = candidates.selection_cost(&selection);
                stats.peak_frontier = stats.peak_frontier.max(frontier.len() + 1);
                return Ok(SbfOutcome::Solved(Solution { selection, total_cost, optimal: true, stats: finish(stats) }));
            }
            let child_cost = cost + cost_at(depth + 1, 0);
            if admissible(child_cost) {
                prefix.push(0);
                frontier.push(&prefix, child_cost);
                prefix.pop();
                stats.nodes_pushed += 1;
            }
        }

        let next = value + 1;
        if (next as usize) < sizes[order[depth]] {
            // Left-to-right prefix sum, the same accumulation as the child path.
            let base = prefix[..depth].iter().enumerate().fold(S::zero(), |acc, (k, &v)| acc + cost_at(k, v));
            let sibling_cost = base + cost_at(depth, next);
            if admissible(sibling_cost) {
                prefix[depth] = next;
                frontier.push(&prefix, sibling_cost);
                stats.nodes_pushed += 1;
            }
        }

        stats.peak_frontier = stats.peak_frontier.max(frontier.len());
        if frontier.len() > options.max_nodes {
            return Ok(SbfOutcome::MemoryLimit(finish(stats)));
        }
    }
    Ok(SbfOutcome::NoSolution(finish(stats)))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::Trajectory;

    /// Lanes far apart are compatible; a lane at `y` conflicts with any lane
    /// within 5.5 NM. Costs are set explicitly.
    pub(crate) fn lane(y: f64, cost: f64) -> Trajectory<f64> {
        let mut t = Trajectory::straight((0.0, y), 90.0, 360.0, 100.0);
        t.cost = cost;
        t
    }

    /// A1 = 1 kg, A2 = 2 kg; B1 = 1 kg, B2 = 2 kg; only (A1, B1) conflicts.
    pub(crate) fn two_by_two() -> CandidateSet<f64> {
        CandidateSet::from_lists(vec![1, 2], vec![vec![lane(0.0, 1.0), lane(100.0, 2.0)], vec![lane(3.0, 1.0), lane(200.0, 2.0)]])
    }

    fn solve(c: &CandidateSet<f64>) -> SbfOutcome<f64> {
        solve_sbf(c, &SeparationParams::default(), &SbfOptions::default()).unwrap()
    }

    #[test]
    fn single_aircraft_takes_cheapest() {
        let c = CandidateSet::from_lists(vec![9], vec![vec![lane(0.0, 3.0), lane(0.0, 1.5), lane(0.0, 2.0)]]);
        let s = solve(&c);
        let sol = s.solution().unwrap();
        assert_eq!(sol.selection, vec![0]);
        assert_eq!(sol.total_cost, 1.5);
        assert!(sol.optimal);
    }

    #[test]
    fn two_by_two_optimum() {
        let s = solve(&two_by_two());
        let sol = s.solution().unwrap();
        assert_eq!(sol.total_cost, 3.0);
        assert!(sol.selection == vec![0, 1] || sol.selection == vec![1, 0]);
        // Exhaustive check of the four tuples.
        let costs = [(0, 0, 2.0, false), (0, 1, 3.0, true), (1, 0, 3.0, true), (1, 1, 4.0, true)];
        let best = costs.iter().filter(|c| c.3).map(|c| c.2).fold(f64::INFINITY, f64::min);
        assert_eq!(best, sol.total_cost);
    }

    #[test]
    fn all_conflicting_has_no_solution() {
        let c = CandidateSet::from_lists(vec![1, 2], vec![vec![lane(0.0, 1.0), lane(1.0, 2.0)], vec![lane(2.0, 1.0), lane(3.0, 2.0)]]);
        assert!(matches!(solve(&c), SbfOutcome::NoSolution(_)));
    }

    #[test]
    fn unsorted_domain_is_contract_violation() {
        let mut c = two_by_two();
        c.lists[0].swap(0, 1);
        let r = solve_sbf(&c, &SeparationParams::default(), &SbfOptions::default());
        assert!(matches!(r, Err(Error::Contract(_))));
    }

    #[test]
    fn upper_bound_prunes_everything_not_cheaper() {
        let opts = SbfOptions { upper_bound: Some(3.0), ..SbfOptions::default() };
        let r = solve_sbf(&two_by_two(), &SeparationParams::default(), &opts).unwrap();
        assert!(matches!(r, SbfOutcome::NoSolution(_)));
        let opts = SbfOptions { upper_bound: Some(3.5), ..SbfOptions::default() };
        let r = solve_sbf(&two_by_two(), &SeparationParams::default(), &opts).unwrap();
        assert_eq!(r.solution().unwrap().total_cost, 3.0);
    }

    #[test]
    fn expired_deadline_times_out() {
        // Every pair conflicts: the search must exhaust a large frontier.
        let a: Vec<_> = (0..400).map(|k| lane(k as f64 * 0.001, 1.0 + k as f64)).collect();
        let b: Vec<_> = (0..400).map(|k| lane(1.0 + k as f64 * 0.001, 1.0 + k as f64)).collect();
        let c = CandidateSet::from_lists(vec![1, 2], vec![a, b]);
        let opts = SbfOptions { deadline: Some(Instant::now()), check_interval: 1, ..SbfOptions::default() };
        let r = solve_sbf(&c, &SeparationParams::default(), &opts).unwrap();
        assert!(matches!(r, SbfOutcome::Timeout(_)));
    }

    #[test]
    fn node_budget_reports_memory_limit() {
        let a: Vec<_> = (0..50).map(|k| lane(k as f64 * 0.001, 1.0 + k as f64)).collect();
        let b: Vec<_> = (0..50).map(|k| lane(1.0 + k as f64 * 0.001, 1.0 + k as f64)).collect();
        let c = CandidateSet::from_lists(vec![1, 2], vec![a, b]);
        let opts = SbfOptions { max_nodes: 20, ..SbfOptions::default() };
        let r = solve_sbf(&c, &SeparationParams::default(), &opts).unwrap();
        assert!(matches!(r, SbfOutcome::MemoryLimit(_)));
    }

    #[test]
    fn explicit_order_must_be_permutation() {
        let opts = SbfOptions { order: AircraftOrder::Explicit(vec![0, 0]), ..SbfOptions::default() };
        assert!(solve_sbf(&two_by_two(), &SeparationParams::default(), &opts).is_err());
        let opts = SbfOptions { order: AircraftOrder::Explicit(vec![1, 0]), ..SbfOptions::default() };
        let r = solve_sbf(&two_by_two(), &SeparationParams::default(), &opts).unwrap();
        assert_eq!(r.solution().unwrap().total_cost, 3.0);
    }

    #[test]
    fn lazy_checks_stay_below_full_matrix() {
        // 2 x 50 lanes, the cheapest pair already compatible after a few steps.
        let a: Vec<_> = (0..50).map(|k| lane(k as f64 * 10.0, 1.0 + k as f64)).collect();
        let b: Vec<_> = (0..50).map(|k| lane(2.0 + k as f64 * 10.0, 1.0 + k as f64)).collect();
        let c = CandidateSet::from_lists(vec![1, 2], vec![a, b]);
        let cache = CompatibilityCache::new();
        let r = solve_sbf_with_cache(&c, &SeparationParams::default(), &cache, &SbfOptions::default()).unwrap();
        assert!(r.solution().is_some());
        assert!((cache.len() as u128) < c.full_pair_count());
        assert_eq!(r.stats().pair_checks as usize, cache.len());
    }

    #[test]
    fn deterministic_statistics() {
        let a: Vec<_> = (0..30).map(|k| lane((k % 7) as f64 * 2.0, 1.0 + (k / 3) as f64)).collect();
        let b: Vec<_> = (0..30).map(|k| lane((k % 5) as f64 * 2.0 + 1.0, 1.0 + (k / 2) as f64)).collect();
        let c = CandidateSet::from_lists(vec![1, 2], vec![a, b]);
        let r1 = solve(&c);
        let r2 = solve(&c);
        let strip = |o: &SbfOutcome<f64>| {
            let mut s = *o.stats();
            s.elapsed = Duration::ZERO;
            (o.solution().map(|s| s.selection.clone()), s)
        };
        assert_eq!(strip(&r1), strip(&r2));
    }
}
