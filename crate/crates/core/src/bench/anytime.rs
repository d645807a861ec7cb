use std::time::{Duration, Instant};

use super::Outcome;
use crate::model::{validate_instance, Trajectory};
use crate::separation::CompatibilityCache;
use crate::solver_aux::{solve_greedy, GreedyOptions, GreedyStatus};
use crate::solver_sbf::{solve_sbf_with_cache, SbfOptions, SbfOutcome};
use crate::trajgen::{build_candidate_set_with, build_catalog, count_bound, DiscretisationParams, GenerationOptions};
use crate::{ConflictInstance, Error, Result, Scalar};

pub const DEFAULT_SCHEDULE: &str = "2,1,1;3,1,2;4,2,2;5,2,2;6,2,2;6,2,3";

/// Parses `"p,m,g;p,m,g;..."`.
pub fn parse_schedule(text: &str) -> Result<Vec<DiscretisationParams>> {
    let mut out = Vec::new();
    for entry in text.split(';').map(str::trim).filter(|e| !e.is_empty()) {
        let fields: Vec<&str> = entry.split(',').map(str::trim).collect();
        let bad = || Error::Parameter(format!("schedule entry {entry:?} is not p,m,g"));
        if fields.len() != 3 {
            return Err(bad());
        }
        let p = fields[0].parse().map_err(|_| bad())?;
        let m = fields[1].parse().map_err(|_| bad())?;
        let g = fields[2].parse().map_err(|_| bad())?;
        let params = DiscretisationParams::new(p, m, g);
        params.check().map_err(Error::Parameter)?;
        out.push(params);
    }
    if out.is_empty() {
        return Err(Error::Parameter("empty schedule".into()));
    }
    Ok(out)
}

/// Trajectory-count bound of a setting with the plain catalog.
pub fn setting_bound(params: DiscretisationParams) -> Result<u128> {
    let n = build_catalog(params.granularity, false)?.reported_n();
    Ok(count_bound(params.segments, params.max_manoeuvres, n))
}

#[derive(Clone, Debug)]
pub struct AnytimeOptions {
    /// Above this many aircraft every iteration runs greedy.
    pub max_sbf_aircraft: usize,
    /// Settings whose count bound exceeds this run greedy.
    pub max_sbf_bound: u128,
    pub generation: GenerationOptions,
    pub max_nodes: usize,
}

impl Default for AnytimeOptions {
    fn default() -> Self {
        Self {
            max_sbf_aircraft: 5,
            max_sbf_bound: 30_000,
            generation: GenerationOptions::default(),
            max_nodes: SbfOptions::<f64>::default().max_nodes,
        }
    }
}

/// Best selection found so far, self-contained since each iteration works
/// on a different trajectory set.
#[derive(Clone, Debug, PartialEq)]
pub struct Incumbent<S> {
    pub params: DiscretisationParams,
    pub selection: Vec<usize>,
    pub trajectories: Vec<Trajectory<S>>,
    pub cost: S,
    /// Proven optimal for its own setting.
    pub optimal: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationLog {
    pub params: DiscretisationParams,
    pub method: &'static str,
    pub outcome: Outcome,
    pub cost_kg: Option<f64>,
    /// Incumbent after this iteration.
    pub incumbent_kg: Option<f64>,
    pub traj_per_ac: f64,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug)]
pub struct AnytimeResult<S> {
    pub best: Option<Incumbent<S>>,
    pub log: Vec<IterationLog>,
    /// The budget ran out before the schedule did.
    pub budget_exhausted: bool,
}

pub fn iterate_anytime<S: Scalar>(inst: &ConflictInstance<S>, schedule: &[DiscretisationParams], budget: Duration) -> Result<AnytimeResult<S>> {
    iterate_anytime_with(inst, schedule, budget, &AnytimeOptions::default())
}

/// Walks the schedule, carrying the incumbent cost into each search as an
/// upper bound. Whatever the budget, the result holds the best selection
/// completed so far.
pub fn iterate_anytime_with<S: Scalar>(
    inst: &ConflictInstance<S>,
    schedule: &[DiscretisationParams],
    budget: Duration,
    options: &AnytimeOptions,
) -> Result<AnytimeResult<S>> {
    if schedule.is_empty() {
        return Err(Error::Parameter("empty schedule".into()));
    }
    let mut last = 0u128;
    for &p in schedule {
        let b = setting_bound(p)?;
        if b < last {
            return Err(Error::Parameter(format!("schedule is not ordered by trajectory bound at {p}")));
        }
        last = b;
    }
    if let Err(v) = validate_instance(inst) {
        return Err(Error::InvalidInstance(v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")));
    }

    let started = Instant::now();
    let deadline = started + budget;
    let mut best: Option<Incumbent<S>> = None;
    let mut log = Vec::new();
    let mut exhausted = false;
    for &params in schedule {
        if Instant::now() >= deadline {
            exhausted = true;
            break;
        }
        let t = Instant::now();
        let incumbent_cost = best.as_ref().map(|b| b.cost);
        let use_greedy = inst.aircraft.len() > options.max_sbf_aircraft || setting_bound(params)? > options.max_sbf_bound;
        let method = if use_greedy { "greedy" } else { "sbf" };
        let mut entry = IterationLog { params, method, outcome: Outcome::Error, cost_kg: None, incumbent_kg: None, traj_per_ac: 0.0, elapsed_s: 0.0 };

        let candidates = match build_candidate_set_with(&inst.with_discretisation(params), options.generation) {
            Ok(c) => Some(c),
            Err(Error::Unsolvable { .. }) => {
                entry.outcome = Outcome::NoSolution;
                None
            }
            Err(Error::Resource(_)) => {
                entry.outcome = Outcome::Memory;
                None
            }
            Err(e) => return Err(e),
        };
        if let Some(c) = candidates {
            entry.traj_per_ac = c.mean_domain_size();
            let cache = CompatibilityCache::new();
            let sep = inst.separation_params();
            let found: Option<(Vec<usize>, S, bool)> = if use_greedy {
                let g = solve_greedy(&c, &sep, &cache, &GreedyOptions { order: None, deadline: Some(deadline) })?;
                entry.outcome = match g.status {
                    GreedyStatus::Success => Outcome::Solution,
                    GreedyStatus::Failed { .. } => Outcome::NoSolution,
                    GreedyStatus::TimedOut => Outcome::Timeout,
                };
                g.complete_selection().map(|s| (s, g.total_cost, false))
            } else {
                let opts =
                    SbfOptions { deadline: Some(deadline), upper_bound: incumbent_cost, max_nodes: options.max_nodes, ..SbfOptions::default() };
                match solve_sbf_with_cache(&c, &sep, &cache, &opts)? {
                    SbfOutcome::Solved(s) => {
                        entry.outcome = Outcome::Optimal;
                        Some((s.selection, s.total_cost, true))
                    }
                    SbfOutcome::NoSolution(_) => {
                        entry.outcome = Outcome::NoSolution;
                        None
                    }
                    SbfOutcome::Timeout(_) => {
                        entry.outcome = Outcome::Timeout;
                        None
                    }
                    SbfOutcome::MemoryLimit(_) => {
                        entry.outcome = Outcome::Memory;
                        None
                    }
                }
            };
            if let Some((selection, cost, optimal)) = found {
                entry.cost_kg = Some(cost.to_f64_lossy());
                if incumbent_cost.is_none_or(|inc| cost < inc) {
                    let trajectories = selection.iter().enumerate().map(|(i, &v)| c.trajectory(i, v).clone()).collect();
                    best = Some(Incumbent { params, selection, trajectories, cost, optimal });
                }
            }
        }
        entry.incumbent_kg = best.as_ref().map(|b| b.cost.to_f64_lossy());
        entry.elapsed_s = t.elapsed().as_secs_f64();
        log::debug!("anytime {params}: {} {} incumbent {:?}", entry.method, entry.outcome, entry.incumbent_kg);
        log.push(entry);
        if Instant::now() >= deadline {
            exhausted = log.len() < schedule.len() || log.last().is_some_and(|e| e.outcome == Outcome::Timeout);
            break;
        }
    }
    Ok(AnytimeResult { best, log, budget_exhausted: exhausted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{make_crossing, ScenarioSpec};
    use crate::separation::compatible;

    fn instance() -> ConflictInstance<f64> {
        make_crossing(&ScenarioSpec::crossing(3, 21)).unwrap()
    }

    #[test]
    fn schedule_parsing() {
        let s = parse_schedule(DEFAULT_SCHEDULE).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s[2], DiscretisationParams::new(4, 2, 2));
        assert!(parse_schedule("").is_err());
        assert!(parse_schedule("1,2").is_err());
        assert!(parse_schedule("2,3,1").is_err());
        assert!(parse_schedule("3,1,9").is_err());
        let bounds: Vec<u128> = s.iter().map(|&p| setting_bound(p).unwrap()).collect();
        assert!(bounds.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_unordered_schedule() {
        let s = parse_schedule("4,2,2;2,1,1").unwrap();
        assert!(iterate_anytime(&instance(), &s, Duration::from_secs(5)).is_err());
    }

    #[test]
    fn incumbent_never_worsens_and_is_separated() {
        let inst = instance();
        let s = parse_schedule("2,1,1;4,2,2").unwrap();
        let r = iterate_anytime(&inst, &s, Duration::from_secs(60)).unwrap();
        assert_eq!(r.log.len(), 2);
        let inc: Vec<f64> = r.log.iter().filter_map(|e| e.incumbent_kg).collect();
        assert!(inc.windows(2).all(|w| w[1] <= w[0]));
        let best = r.best.expect("solved");
        assert_eq!(Some(best.cost), r.log.last().unwrap().incumbent_kg);
        let sep = inst.separation_params();
        for i in 0..best.trajectories.len() {
            for j in i + 1..best.trajectories.len() {
                assert!(compatible(&best.trajectories[i], &best.trajectories[j], &sep).unwrap());
            }
        }
    }

    #[test]
    fn zero_budget_has_no_solution_yet() {
        let r = iterate_anytime(&instance(), &parse_schedule("2,1,1").unwrap(), Duration::ZERO).unwrap();
        assert!(r.best.is_none());
        assert!(r.log.is_empty());
        assert!(r.budget_exhausted);
    }

    #[test]
    fn greedy_beyond_thresholds() {
        let opts = AnytimeOptions { max_sbf_bound: 10, ..Default::default() };
        let r = iterate_anytime_with(&instance(), &parse_schedule("3,1,1").unwrap(), Duration::from_secs(30), &opts).unwrap();
        assert_eq!(r.log[0].method, "greedy");
    }
}
