use std::fs::OpenOptions;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lumberjack::bench::{
    iterate_anytime, make_scenario, parse_schedule, run_campaign_with, write_csv, CampaignOptions, Method, Outcome, ScenarioSpec,
};
use lumberjack::separation::{build_matrix, CompatibilityCache, MatrixOptions};
use lumberjack::solver_aux::{
    export_wcsp, formalize_wcsp, run_external_solver, solve_greedy, ExternalOutcome, FailureKind, GreedyOptions, GreedyStatus,
};
use lumberjack::solver_sbf::{solve_oracle, solve_sbf, SbfOptions, SbfOutcome};
use lumberjack::trajgen::{build_candidate_set, CandidateSet, DiscretisationParams};
use lumberjack::{ConflictInstance, Error};
use serde_json::json;

use crate::{BenchArgs, ExportArgs, ExternalArgs, GenArgs, IterateArgs, SolveArgs, SolveMethod};

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Solved = 0,
    NoSolution = 2,
    Timeout = 3,
    Input = 4,
    Resource = 5,
}

impl From<Exit> for ExitCode {
    fn from(e: Exit) -> Self {
        ExitCode::from(e as u8)
    }
}

#[derive(Debug)]
pub struct Failure {
    pub code: Exit,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: Exit::Input, message: message.into() }
    }

    fn resource(message: impl Into<String>) -> Self {
        Self { code: Exit::Resource, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Resource(_) => Exit::Resource,
            Error::Unsolvable { .. } => Exit::NoSolution,
            _ => Exit::Input,
        };
        Self { code, message: e.to_string() }
    }
}

fn seconds(s: f64, what: &str) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(s).map_err(|_| Failure::input(format!("{what} must be a non-negative number of seconds")))
}

fn load(path: &Path) -> Result<ConflictInstance<f64>, Failure> {
    ConflictInstance::load(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Candidate generation; `Ok(None)` when some aircraft has no legal trajectory.
fn candidates(inst: &ConflictInstance<f64>) -> Result<Option<CandidateSet<f64>>, Failure> {
    match build_candidate_set(inst) {
        Ok(c) => Ok(Some(c)),
        Err(Error::Unsolvable { aircraft }) => {
            eprintln!("aircraft {aircraft} has no legal trajectory");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn outcome_exit(outcome: Outcome) -> Exit {
    match outcome {
        Outcome::Optimal | Outcome::Solution => Exit::Solved,
        Outcome::NoSolution => Exit::NoSolution,
        Outcome::Timeout => Exit::Timeout,
        Outcome::Memory => Exit::Resource,
        Outcome::Error => Exit::Input,
    }
}

pub fn gen(a: GenArgs) -> Result<Exit, Failure> {
    let kind = a.scenario.into();
    let d = &a.discretisation;
    let mut spec = ScenarioSpec::of_kind(kind, a.aircraft, a.seed).with_params(DiscretisationParams::new(d.segments, d.manoeuvres, d.granularity));
    match kind {
        lumberjack::bench::ScenarioKind::Roundabout => {
            if a.angle.is_some() || a.spacing.is_some() {
                return Err(Failure::input("--angle and --spacing apply to crossing scenarios"));
            }
            spec.radius_nm = a.radius.unwrap_or(spec.radius_nm);
        }
        lumberjack::bench::ScenarioKind::Crossing => {
            if a.radius.is_some() {
                return Err(Failure::input("--radius applies to roundabout scenarios"));
            }
            spec.angle_deg = a.angle.unwrap_or(spec.angle_deg);
            spec.spacing_nm = a.spacing.unwrap_or(spec.spacing_nm);
        }
    }
    spec.discretisation.check().map_err(Failure::input)?;
    let inst: ConflictInstance<f64> = make_scenario(&spec)?;
    inst.save(&a.out).map_err(|e| Failure::input(format!("{}: {e}", a.out.display())))?;
    println!("wrote {} ({} aircraft, period {:.1} s)", a.out.display(), inst.aircraft.len(), inst.resolution_period_s);
    Ok(Exit::Solved)
}

pub fn solve(a: SolveArgs) -> Result<Exit, Failure> {
    let timeout = seconds(a.timeout, "--timeout")?;
    let inst = load(&a.input)?;
    let started = Instant::now();
    let Some(c) = candidates(&inst)? else {
        report_solve(&a, Outcome::NoSolution, None, 0.0, started.elapsed().as_secs_f64(), 0.0, 0);
        return Ok(Exit::NoSolution);
    };
    let gen_s = started.elapsed().as_secs_f64();
    let params = inst.separation_params();
    let t = Instant::now();
    let (outcome, selection, checks) = match a.method {
        SolveMethod::Sbf => {
            let out = solve_sbf(&c, &params, &SbfOptions::with_timeout(timeout))?;
            let checks = out.stats().pair_checks;
            match out {
                SbfOutcome::Solved(s) => (Outcome::Optimal, Some(s.selection), checks),
                SbfOutcome::NoSolution(_) => (Outcome::NoSolution, None, checks),
                SbfOutcome::Timeout(_) => (Outcome::Timeout, None, checks),
                SbfOutcome::MemoryLimit(_) => (Outcome::Memory, None, checks),
            }
        }
        SolveMethod::Greedy => {
            let opts = GreedyOptions { order: None, deadline: Some(Instant::now() + timeout) };
            let g = solve_greedy(&c, &params, &CompatibilityCache::new(), &opts)?;
            match g.status {
                GreedyStatus::Success => (Outcome::Solution, g.complete_selection(), g.pair_checks),
                GreedyStatus::Failed { .. } => (Outcome::NoSolution, None, g.pair_checks),
                GreedyStatus::TimedOut => (Outcome::Timeout, None, g.pair_checks),
            }
        }
        SolveMethod::Oracle => {
            let checks = c.full_pair_count().min(u64::MAX as u128) as u64;
            match solve_oracle(&c, &params)? {
                _ if t.elapsed() > timeout => (Outcome::Timeout, None, checks),
                Some(s) => (Outcome::Optimal, Some(s.selection), checks),
                None => (Outcome::NoSolution, None, checks),
            }
        }
    };
    let solve_s = t.elapsed().as_secs_f64();
    let solution = selection.as_deref().map(|s| (s, &c));
    report_solve(&a, outcome, solution, c.mean_domain_size(), gen_s, solve_s, checks);
    Ok(outcome_exit(outcome))
}

fn report_solve(
    a: &SolveArgs,
    outcome: Outcome,
    solution: Option<(&[usize], &CandidateSet<f64>)>,
    traj_per_ac: f64,
    gen_s: f64,
    solve_s: f64,
    pair_checks: u64,
) {
    let method = match a.method {
        SolveMethod::Sbf => "sbf",
        SolveMethod::Greedy => "greedy",
        SolveMethod::Oracle => "oracle",
    };
    let cost = solution.map(|(s, c)| c.selection_cost(s));
    if a.json {
        let selection: Vec<_> = solution
            .map(|(s, c)| {
                s.iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let t = c.trajectory(i, v);
                        json!({ "aircraft": c.aircraft_ids[i], "trajectory": v, "cost_kg": t.cost, "orders": t.orders })
                    })
                    .collect()
            })
            .unwrap_or_default();
        let doc = json!({
            "method": method,
            "outcome": outcome.as_str(),
            "cost_kg": cost,
            "traj_per_ac": traj_per_ac,
            "gen_s": gen_s,
            "solve_s": solve_s,
            "pair_checks": pair_checks,
            "selection": selection,
        });
        println!("{doc:#}");
        return;
    }
    println!("method {method}: {outcome} in {solve_s:.3} s ({traj_per_ac:.1} trajectories/aircraft, {pair_checks} pair checks)");
    if let (Some((s, c)), Some(cost)) = (solution, cost) {
        println!("total cost {cost:.6} kg");
        for (i, &v) in s.iter().enumerate() {
            let t = c.trajectory(i, v);
            let orders: Vec<String> = t.orders.iter().map(|(k, o)| format!("{k}:{o:?}")).collect();
            println!("  aircraft {}: trajectory {v}, {:.6} kg, {}", c.aircraft_ids[i], t.cost, orders.join(" "));
        }
    }
}

pub fn export(a: ExportArgs) -> Result<Exit, Failure> {
    if a.scale == 0 {
        return Err(Failure::input("--scale must be positive"));
    }
    let inst = load(&a.input)?;
    let Some(c) = candidates(&inst)? else {
        return Ok(Exit::NoSolution);
    };
    let params = inst.separation_params();
    let matrix = build_matrix(&c, &params, MatrixOptions::default())?;
    let ub = if a.ub_from_greedy {
        let g = solve_greedy(&c, &params, &CompatibilityCache::new(), &GreedyOptions::default())?;
        if !g.success() {
            eprintln!("greedy found no solution; exporting without an upper bound");
        }
        g.success().then_some(g.total_cost)
    } else {
        None
    };
    let wcsp = formalize_wcsp(&c, &matrix, ub, a.scale)?;
    let name = a.input.file_stem().and_then(|s| s.to_str()).unwrap_or("lumberjack");
    export_wcsp(&wcsp, name, &a.out).map_err(|e| Failure::input(format!("{}: {e}", a.out.display())))?;
    println!("wrote {}: {} variables, {} hard binary constraints, top {}", a.out.display(), wcsp.n_vars(), wcsp.binary.len(), wcsp.top);
    Ok(Exit::Solved)
}

pub fn solve_external(a: ExternalArgs) -> Result<Exit, Failure> {
    let timeout = seconds(a.timeout, "--timeout")?;
    let inst = load(&a.input)?;
    let Some(c) = candidates(&inst)? else {
        return Ok(Exit::NoSolution);
    };
    let params = inst.separation_params();
    let matrix = build_matrix(&c, &params, MatrixOptions::default())?;
    let wcsp = formalize_wcsp(&c, &matrix, None, lumberjack::solver_aux::DEFAULT_SCALE)?;
    let file = tempfile::Builder::new().suffix(".wcsp").tempfile().map_err(|e| Failure::resource(e.to_string()))?;
    export_wcsp(&wcsp, "lumberjack", file.path())?;
    match run_external_solver(file.path(), &a.solver, timeout) {
        ExternalOutcome::Solved { optimum, assignment, elapsed } => {
            if assignment.len() != c.n_aircraft() || assignment.iter().zip(&c.lists).any(|(&v, l)| v >= l.len()) {
                return Err(Failure::resource("external solver returned an assignment outside the domains"));
            }
            println!("external: optimum {optimum} ({:.6} kg) in {:.3} s", c.selection_cost(&assignment), elapsed.as_secs_f64());
            for (i, &v) in assignment.iter().enumerate() {
                println!("  aircraft {}: trajectory {v}", c.aircraft_ids[i]);
            }
            Ok(Exit::Solved)
        }
        ExternalOutcome::Unavailable { reason } => Err(Failure::resource(reason)),
        ExternalOutcome::Failed(f) if f.kind == FailureKind::Timeout => {
            eprintln!("external solver timed out");
            Ok(Exit::Timeout)
        }
        ExternalOutcome::Failed(f) => Err(Failure::resource(f.message)),
    }
}

fn aircraft_range(text: &str) -> Result<std::ops::RangeInclusive<usize>, Failure> {
    let bad = || Failure::input(format!("--aircraft {text:?} is not N or A..B"));
    let (lo, hi) = match text.split_once("..") {
        Some((lo, hi)) => (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?),
        None => {
            let n = text.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}

pub fn bench(a: BenchArgs) -> Result<Exit, Failure> {
    let timeout = seconds(a.timeout, "--timeout")?;
    let range = aircraft_range(&a.aircraft)?;
    let methods = Method::parse_list(&a.methods, &a.solver)?;
    let settings = match &a.settings {
        Some(s) => parse_schedule(s)?,
        None => {
            let p = DiscretisationParams::new(a.segments, a.manoeuvres, a.granularity);
            p.check().map_err(Failure::input)?;
            vec![p]
        }
    };
    if a.runs == 0 {
        return Err(Failure::input("--runs must be positive"));
    }
    let options = CampaignOptions { threads: a.threads, ..CampaignOptions::default() };
    let file = OpenOptions::new().create(true).append(true).open(&a.csv).map_err(|e| Failure::input(format!("{}: {e}", a.csv.display())))?;
    let mut header = file.metadata().map(|m| m.len() == 0).unwrap_or(true);
    for n in range {
        let spec = ScenarioSpec::of_kind(a.scenario.into(), n, a.seed);
        let report = run_campaign_with(&spec, &settings, &methods, a.runs, timeout, &options)?;
        write_csv(&report.records, &file, header)?;
        header = false;
        print!("{}", report.summary());
    }
    Ok(Exit::Solved)
}

pub fn iterate(a: IterateArgs) -> Result<Exit, Failure> {
    let budget = seconds(a.budget, "--budget")?;
    let schedule = parse_schedule(&a.schedule)?;
    let inst = load(&a.input)?;
    let result = iterate_anytime(&inst, &schedule, budget)?;
    for e in &result.log {
        let kg = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
        println!(
            "{} {:<6} {:<11} cost {:>12} incumbent {:>12} traj/ac {:>9.1} {:>8.3} s",
            e.params,
            e.method,
            e.outcome.as_str(),
            kg(e.cost_kg),
            kg(e.incumbent_kg),
            e.traj_per_ac,
            e.elapsed_s
        );
    }
    match result.best {
        Some(best) => {
            println!("best {:.6} kg at {} ({})", best.cost, best.params, if best.optimal { "optimal for that setting" } else { "greedy" });
            Ok(Exit::Solved)
        }
        None if result.budget_exhausted => {
            eprintln!("budget exhausted before any solution");
            Ok(Exit::Timeout)
        }
        None => Ok(Exit::NoSolution),
    }
}
