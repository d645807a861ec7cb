use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use super::{make_scenario, ScenarioKind, ScenarioSpec};
use crate::separation::{build_matrix, CompatibilityCache, MatrixOptions};
use crate::solver_aux::{
    export_wcsp, formalize_wcsp, run_external_solver, solve_greedy, ExternalOutcome, FailureKind, GreedyOptions, GreedyStatus, DEFAULT_SCALE,
};
use crate::solver_sbf::{solve_oracle, solve_sbf, SbfOptions, SbfOutcome};
use crate::trajgen::{build_candidate_set_with, CandidateSet, DiscretisationParams, GenerationOptions};
use crate::{ConflictInstance, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Sbf,
    Greedy,
    Oracle,
    /// Full matrix, `.wcsp` export and an external solver run.
    External {
        binary: PathBuf,
    },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sbf => "sbf",
            Self::Greedy => "greedy",
            Self::Oracle => "oracle",
            Self::External { .. } => "external",
        }
    }

    /// Comma-separated method names; `external` uses `binary`.
    pub fn parse_list(list: &str, binary: &std::path::Path) -> Result<Vec<Method>> {
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| match s.parse::<Method>()? {
                Self::External { .. } => Ok(Self::External { binary: binary.to_path_buf() }),
                m => Ok(m),
            })
            .collect()
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sbf" => Ok(Self::Sbf),
            "greedy" => Ok(Self::Greedy),
            "oracle" => Ok(Self::Oracle),
            "external" => Ok(Self::External { binary: PathBuf::from("toulbar2") }),
            other => Err(Error::Parameter(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Optimal,
    Solution,
    NoSolution,
    Timeout,
    Memory,
    Error,
}

impl Outcome {
    pub const ALL: [Outcome; 6] = [Self::Optimal, Self::Solution, Self::NoSolution, Self::Timeout, Self::Memory, Self::Error];

    pub fn is_success(self) -> bool {
        matches!(self, Self::Optimal | Self::Solution)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Optimal => "OPTIMAL",
            Self::Solution => "SOLUTION",
            Self::NoSolution => "NO_SOLUTION",
            Self::Timeout => "TIMEOUT",
            Self::Memory => "MEMORY",
            Self::Error => "ERROR",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One (instance, method) run. `cost_kg` is set exactly for successes.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub scenario: ScenarioKind,
    pub n_aircraft: usize,
    pub params: DiscretisationParams,
    pub traj_per_ac: f64,
    pub method: String,
    pub outcome: Outcome,
    pub gen_s: f64,
    pub solve_s: f64,
    pub cost_kg: Option<f64>,
    pub pair_checks: u64,
    pub seed: u64,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scenario: String,
    n_aircraft: usize,
    p: usize,
    m: usize,
    granularity: u8,
    traj_per_ac: f64,
    method: &'a str,
    outcome: &'static str,
    gen_s: f64,
    solve_s: f64,
    cost_kg: Option<f64>,
    pair_checks: u64,
    seed: u64,
}

pub const CSV_HEADER: &str = "scenario,n_aircraft,p,m,granularity,traj_per_ac,method,outcome,gen_s,solve_s,cost_kg,pair_checks,seed";

/// Writes one row per record, preceded by the header line when `header`
/// is set (also for an empty record list).
pub fn write_csv<W: Write>(records: &[RunRecord], writer: W, header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(writer);
    for r in records {
        w.serialize(CsvRow {
            scenario: r.scenario.to_string(),
            n_aircraft: r.n_aircraft,
            p: r.params.segments,
            m: r.params.max_manoeuvres,
            granularity: r.params.granularity,
            traj_per_ac: r.traj_per_ac,
            method: &r.method,
            outcome: r.outcome.as_str(),
            gen_s: r.gen_s,
            solve_s: r.solve_s,
            cost_kg: r.cost_kg,
            pair_checks: r.pair_checks,
            seed: r.seed,
        })?;
    }
    if records.is_empty() && header {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

/// Per (aircraft count, parameters, method) summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub n_aircraft: usize,
    pub params: DiscretisationParams,
    pub method: String,
    pub runs: usize,
    pub counts: BTreeMap<Outcome, usize>,
    pub success_rate: f64,
    /// Mean solve time over successful runs.
    pub mean_solve_s: Option<f64>,
    /// Median solve time over all runs, unsuccessful ones other than
    /// proven infeasibility counted at the timeout.
    pub median_solve_s: f64,
    pub mean_traj_per_ac: f64,
    pub mean_cost_kg: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct CampaignReport {
    pub records: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl CampaignReport {
    pub fn aggregate(&self, n_aircraft: usize, params: DiscretisationParams, method: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.n_aircraft == n_aircraft && a.params == params && a.method == method)
    }

    pub fn extend(&mut self, other: CampaignReport) {
        self.records.extend(other.records);
        self.aggregates.extend(other.aggregates);
    }

    /// Fixed-width summary table.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "{:>3} {:>3} {:>2} {:>2} {:<8} {:>5} {:>6} {:>9} {:>9} {:>10} {:>10}\n",
            "n", "p", "m", "g", "method", "runs", "succ%", "mean_s", "median_s", "traj/ac", "cost_kg"
        );
        for a in &self.aggregates {
            let opt = |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |x| format!("{x:.prec$}"));
            out += &format!(
                "{:>3} {:>3} {:>2} {:>2} {:<8} {:>5} {:>6.1} {:>9} {:>9.3} {:>10.1} {:>10}\n",
                a.n_aircraft,
                a.params.segments,
                a.params.max_manoeuvres,
                a.params.granularity,
                a.method,
                a.runs,
                100.0 * a.success_rate,
                opt(a.mean_solve_s, 3),
                a.median_solve_s,
                a.mean_traj_per_ac,
                opt(a.mean_cost_kg, 3)
            );
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct CampaignOptions {
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
    pub generation: GenerationOptions,
    pub matrix: MatrixOptions,
    /// Node budget for SBF.
    pub max_nodes: usize,
    pub wcsp_scale: u64,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        Self {
            threads: 0,
            generation: GenerationOptions::default(),
            matrix: MatrixOptions::default(),
            max_nodes: SbfOptions::<f64>::default().max_nodes,
            wcsp_scale: DEFAULT_SCALE,
        }
    }
}

/// Seed of run `k` of a campaign.
pub fn run_seed(base: u64, k: usize) -> u64 {
    base ^ k as u64
}

struct Prepared {
    candidates: Option<CandidateSet<f64>>,
    failure: Outcome,
    traj_per_ac: f64,
    gen_s: f64,
}

fn prepare(inst: &ConflictInstance<f64>, options: &CampaignOptions) -> Prepared {
    let t = Instant::now();
    let built = build_candidate_set_with(inst, options.generation);
    let gen_s = t.elapsed().as_secs_f64();
    match built {
        Ok(c) => Prepared { traj_per_ac: c.mean_domain_size(), candidates: Some(c), failure: Outcome::Error, gen_s },
        Err(e) => {
            let failure = match e {
                Error::Unsolvable { .. } => Outcome::NoSolution,
                Error::Resource(_) => Outcome::Memory,
                _ => Outcome::Error,
            };
            Prepared { candidates: None, failure, traj_per_ac: 0.0, gen_s }
        }
    }
}

struct Solved {
    outcome: Outcome,
    cost: Option<f64>,
    extra_gen_s: f64,
    solve_s: f64,
    pair_checks: u64,
}

impl Solved {
    fn failed(outcome: Outcome, solve_s: f64) -> Self {
        Self { outcome, cost: None, extra_gen_s: 0.0, solve_s, pair_checks: 0 }
    }
}

fn solve_one(inst: &ConflictInstance<f64>, c: &CandidateSet<f64>, method: &Method, timeout: Duration, options: &CampaignOptions) -> Solved {
    let params = inst.separation_params();
    let started = Instant::now();
    let deadline = started + timeout;
    let secs = |t: Instant| t.elapsed().as_secs_f64();
    match method {
        Method::Sbf => {
            let opts = SbfOptions { deadline: Some(deadline), max_nodes: options.max_nodes, ..SbfOptions::default() };
            match solve_sbf(c, &params, &opts) {
                Ok(out) => {
                    let checks = out.stats().pair_checks;
                    let (outcome, cost) = match out {
                        SbfOutcome::Solved(s) => (Outcome::Optimal, Some(s.total_cost)),
                        SbfOutcome::NoSolution(_) => (Outcome::NoSolution, None),
                        SbfOutcome::Timeout(_) => (Outcome::Timeout, None),
                        SbfOutcome::MemoryLimit(_) => (Outcome::Memory, None),
                    };
                    Solved { outcome, cost, extra_gen_s: 0.0, solve_s: secs(started), pair_checks: checks }
                }
                Err(_) => Solved::failed(Outcome::Error, secs(started)),
            }
        }
        Method::Greedy => {
            let cache = CompatibilityCache::new();
            let opts = GreedyOptions { order: None, deadline: Some(deadline) };
            match solve_greedy(c, &params, &cache, &opts) {
                Ok(g) => {
                    let (outcome, cost) = match g.status {
                        GreedyStatus::Success => (Outcome::Solution, Some(g.total_cost)),
                        GreedyStatus::Failed { .. } => (Outcome::NoSolution, None),
                        GreedyStatus::TimedOut => (Outcome::Timeout, None),
                    };
                    Solved { outcome, cost, extra_gen_s: 0.0, solve_s: secs(started), pair_checks: g.pair_checks }
                }
                Err(_) => Solved::failed(Outcome::Error, secs(started)),
            }
        }
        Method::Oracle => {
            let r = solve_oracle(c, &params);
            let solve_s = secs(started);
            let checks = c.full_pair_count().min(u64::MAX as u128) as u64;
            match r {
                Ok(_) if solve_s > timeout.as_secs_f64() => Solved { pair_checks: checks, ..Solved::failed(Outcome::Timeout, solve_s) },
                Ok(Some(s)) => Solved { outcome: Outcome::Optimal, cost: Some(s.total_cost), extra_gen_s: 0.0, solve_s, pair_checks: checks },
                Ok(None) => Solved { pair_checks: checks, ..Solved::failed(Outcome::NoSolution, solve_s) },
                Err(Error::Resource(_)) => Solved::failed(Outcome::Memory, solve_s),
                Err(_) => Solved::failed(Outcome::Error, solve_s),
            }
        }
        Method::External { binary } => solve_external(c, &params, binary, timeout, options),
    }
}

fn solve_external(
    c: &CandidateSet<f64>,
    params: &crate::SeparationParams<f64>,
    binary: &std::path::Path,
    timeout: Duration,
    options: &CampaignOptions,
) -> Solved {
    let started = Instant::now();
    let prepared = (|| -> Result<(tempfile::NamedTempFile, u64)> {
        let matrix = build_matrix(c, params, options.matrix)?;
        let wcsp = formalize_wcsp(c, &matrix, None, options.wcsp_scale)?;
        let file = tempfile::Builder::new().suffix(".wcsp").tempfile()?;
        export_wcsp(&wcsp, "lumberjack", file.path())?;
        Ok((file, matrix.checks.min(u64::MAX as u128) as u64))
    })();
    let extra_gen_s = started.elapsed().as_secs_f64();
    let (file, checks) = match prepared {
        Ok(v) => v,
        Err(Error::Resource(_)) => return Solved { extra_gen_s, ..Solved::failed(Outcome::Memory, 0.0) },
        Err(_) => return Solved { extra_gen_s, ..Solved::failed(Outcome::Error, 0.0) },
    };
    let t = Instant::now();
    let out = run_external_solver(file.path(), binary, timeout);
    let solve_s = t.elapsed().as_secs_f64();
    let (outcome, cost) = match out {
        ExternalOutcome::Solved { assignment, .. } => {
            let valid = assignment.len() == c.n_aircraft() && assignment.iter().zip(&c.lists).all(|(&v, l)| v < l.len());
            if valid {
                (Outcome::Optimal, Some(c.selection_cost(&assignment)))
            } else {
                (Outcome::Error, None)
            }
        }
        ExternalOutcome::Unavailable { .. } => (Outcome::Error, None),
        ExternalOutcome::Failed(f) if f.kind == FailureKind::Timeout => (Outcome::Timeout, None),
        ExternalOutcome::Failed(_) => (Outcome::Error, None),
    };
    Solved { outcome, cost, extra_gen_s, solve_s, pair_checks: checks }
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let k = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[k]
    } else {
        0.5 * (xs[k - 1] + xs[k])
    }
}

fn aggregate(records: &[RunRecord], timeout: Duration) -> Aggregate {
    let first = &records[0];
    let runs = records.len();
    let mut counts: BTreeMap<Outcome, usize> = Outcome::ALL.iter().map(|&o| (o, 0)).collect();
    for r in records {
        *counts.entry(r.outcome).or_default() += 1;
    }
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.outcome.is_success()).collect();
    let mean = |v: Vec<f64>| if v.is_empty() { None } else { Some(v.iter().sum::<f64>() / v.len() as f64) };
    let censored =
        records.iter().map(|r| if r.outcome.is_success() || r.outcome == Outcome::NoSolution { r.solve_s } else { timeout.as_secs_f64() }).collect();
    Aggregate {
        n_aircraft: first.n_aircraft,
        params: first.params,
        method: first.method.clone(),
        runs,
        counts,
        success_rate: ok.len() as f64 / runs as f64,
        mean_solve_s: mean(ok.iter().map(|r| r.solve_s).collect()),
        median_solve_s: median(censored),
        mean_traj_per_ac: records.iter().map(|r| r.traj_per_ac).sum::<f64>() / runs as f64,
        mean_cost_kg: mean(ok.iter().filter_map(|r| r.cost_kg).collect()),
    }
}

/// Runs every method on `runs` seeded instances per parameter setting.
/// Instances are generated once per (setting, run) and shared by the
/// methods; records come back in (setting, method, run) order.
pub fn run_campaign(
    spec: &ScenarioSpec,
    params_list: &[DiscretisationParams],
    methods: &[Method],
    runs: usize,
    timeout: Duration,
) -> Result<CampaignReport> {
    run_campaign_with(spec, params_list, methods, runs, timeout, &CampaignOptions::default())
}

pub fn run_campaign_with(
    spec: &ScenarioSpec,
    params_list: &[DiscretisationParams],
    methods: &[Method],
    runs: usize,
    timeout: Duration,
    options: &CampaignOptions,
) -> Result<CampaignReport> {
    spec.check()?;
    for p in params_list {
        p.check().map_err(Error::Parameter)?;
    }
    let jobs: Vec<(usize, usize)> = (0..params_list.len()).flat_map(|i| (0..runs).map(move |k| (i, k))).collect();
    let work = |&(i, k): &(usize, usize)| -> Vec<RunRecord> {
        let params = params_list[i];
        let seed = run_seed(spec.seed, k);
        let run_spec = spec.clone().with_params(params).with_seed(seed);
        let record = |method: &Method, outcome, traj_per_ac, gen_s, solve_s, cost_kg, pair_checks| RunRecord {
            scenario: spec.kind,
            n_aircraft: spec.n_aircraft,
            params,
            traj_per_ac,
            method: method.name().to_string(),
            outcome,
            gen_s,
            solve_s,
            cost_kg,
            pair_checks,
            seed,
        };
        let inst = match make_scenario::<f64>(&run_spec) {
            Ok(inst) => inst,
            Err(_) => return methods.iter().map(|m| record(m, Outcome::Error, 0.0, 0.0, 0.0, None, 0)).collect(),
        };
        let prep = prepare(&inst, options);
        methods
            .iter()
            .map(|m| match &prep.candidates {
                None => record(m, prep.failure, prep.traj_per_ac, prep.gen_s, 0.0, None, 0),
                Some(c) => {
                    let s = solve_one(&inst, c, m, timeout, options);
                    record(m, s.outcome, prep.traj_per_ac, prep.gen_s + s.extra_gen_s, s.solve_s, s.cost, s.pair_checks)
                }
            })
            .collect()
    };
    let per_job: Vec<Vec<RunRecord>> = if options.threads == 1 {
        jobs.iter().map(work).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(options.threads).build().map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(work).collect())
    };

    let mut report = CampaignReport::default();
    for i in 0..params_list.len() {
        for (mi, _) in methods.iter().enumerate() {
            let group: Vec<RunRecord> = (0..runs).map(|k| per_job[i * runs + k][mi].clone()).collect();
            if !group.is_empty() {
                report.aggregates.push(aggregate(&group, timeout));
            }
            report.records.extend(group);
        }
    }
    Ok(report)
}

/// Mean legal trajectories per aircraft over `runs` seeded instances,
/// without solving.
pub fn mean_legal_count(spec: &ScenarioSpec, params: DiscretisationParams, runs: usize, options: &GenerationOptions) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..runs {
        let inst = make_scenario::<f64>(&spec.clone().with_params(params).with_seed(run_seed(spec.seed, k)))?;
        let c = match build_candidate_set_with(&inst, *options) {
            Ok(c) => c.mean_domain_size(),
            Err(Error::Unsolvable { .. }) => 0.0,
            Err(e) => return Err(e),
        };
        total += c;
    }
    Ok(total / runs.max(1) as f64)
}
