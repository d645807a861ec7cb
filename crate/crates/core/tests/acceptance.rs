//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails. Tolerances are the constants
//! below; runtime is several minutes in release mode.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lumberjack::bench::{
    closest_setting, iterate_anytime, large_roundabout, make_scenario, mean_legal_count, parse_schedule, reference_params, run_campaign_with,
    setting_bound, six_segment_turn_generator, sweep_candidates, CampaignOptions, Method, Outcome, ScenarioKind, ScenarioSpec, DEFAULT_SCHEDULE,
    REFERENCE_SETTINGS, SWEEP_TARGET,
};
use lumberjack::separation::{build_matrix, check_pair_cached, CompatibilityCache, MatrixOptions};
use lumberjack::solver_aux::{
    export_wcsp, formalize_wcsp, parse_wcsp, resolve_binary, run_external_solver, solve_greedy, ExternalOutcome, GreedyOptions, DEFAULT_SCALE,
};
use lumberjack::solver_sbf::{solve_oracle_with_cap, solve_sbf, SbfOptions, SbfOutcome};
use lumberjack::trajgen::{build_catalog, GenerationOptions};
use lumberjack::{build_candidate_set, compatible, min_distance, CandidateSet, ConflictInstance, DiscretisationParams, SeparationParams};

// Criterion 1 / 2 / 5: the shared small-instance set.
const C1_INSTANCES: usize = 120;
const C1_MAX_LEGAL: usize = 300;
const C1_ORACLE_CAP: u128 = 200_000_000;
const C1_TIME_LIMIT: Duration = Duration::from_secs(120);
/// Settings with p <= 2m + 1, per aircraft count.
const C1_SETTINGS: [&[(usize, usize, u8)]; 3] = [
    &[(4, 2, 1), (3, 2, 1), (3, 1, 3), (2, 2, 3), (3, 1, 2)],
    &[(4, 2, 1), (3, 2, 1), (3, 1, 3), (2, 2, 3), (3, 1, 2)],
    &[(3, 2, 1), (2, 2, 3), (3, 1, 2), (3, 1, 3)],
];

const C2_TURN_PRESET_RANGE: (f64, f64) = (300.0, 1280.0);

const C3_RUNS: usize = 100;
const C3_BAND: f64 = 0.5;

const C4_TIMEOUT: Duration = Duration::from_secs(60);
const C4_REFERENCE_RUNS: usize = 4;
const C4_SWEEP_RUNS: usize = 4;
const C4_SWEEP_CALIBRATION_RUNS: usize = 10;
const C4_SWEEP_AIRCRAFT: std::ops::RangeInclusive<usize> = 3..=8;
const C4_SWEEP_FINAL_SUCCESS: f64 = 0.5;
const C4_EXTERNAL_AT_6: f64 = 0.9;
const EXTERNAL_BINARY: &str = "toulbar2";

const C6_AIRCRAFT: usize = 20;
const C6_SEED: u64 = 1;
const C6_COARSE: (usize, usize, u8) = (2, 1, 1);
const C6_COARSE_MAX_TRAJ: f64 = 100.0;
const C6_FINE: (usize, usize, u8) = (6, 2, 3);
const C6_FINE_MIN_TRAJ: f64 = 5000.0;
const C6_GREEDY_LIMIT: Duration = Duration::from_secs(60);

const C7_INSTANCES: usize = 20;
const C7_BUDGET: Duration = Duration::from_secs(3);
const C7_INTERRUPT_BUDGETS_MS: [u64; 5] = [0, 5, 50, 300, 1000];
const C7_INTERRUPT_INSTANCES: usize = 5;

const C8_PAIRS: usize = 1000;
const C8_FINE_STEP: f64 = 0.01;
/// Float slack on top of the analytic sampling bound.
const C8_FLOAT_SLACK: f64 = 1e-9;

fn params((p, m, g): (usize, usize, u8)) -> DiscretisationParams {
    DiscretisationParams::new(p, m, g)
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn report(id: u8, name: &str, v: &Verdict) {
    println!("{} criterion {id} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
}

struct Case {
    spec: ScenarioSpec,
    inst: ConflictInstance<f64>,
    candidates: CandidateSet<f64>,
}

/// Deterministic mixed set: 2, 3 and 4 aircraft in turn, kinds alternating,
/// seeds advancing until an instance is generable with at most
/// `C1_MAX_LEGAL` legal trajectories per aircraft.
fn small_cases() -> Vec<Case> {
    let mut cases = Vec::new();
    let mut seed = 1000u64;
    for k in 0..C1_INSTANCES {
        let n = 2 + k % 3;
        let kind = if (k / 3) % 2 == 0 { ScenarioKind::Roundabout } else { ScenarioKind::Crossing };
        let settings = C1_SETTINGS[n - 2];
        let setting = params(settings[(k / 6) % settings.len()]);
        loop {
            seed += 1;
            let spec = ScenarioSpec::of_kind(kind, n, seed).with_params(setting);
            let inst: ConflictInstance<f64> = make_scenario(&spec).expect("scenario");
            let Ok(candidates) = build_candidate_set(&inst) else { continue };
            if candidates.domain_sizes().iter().all(|&d| d <= C1_MAX_LEGAL) {
                cases.push(Case { spec, inst, candidates });
                break;
            }
        }
    }
    cases
}

fn criterion1(cases: &[Case]) -> Verdict {
    let started = Instant::now();
    let (mut equal, mut greedy_checked, mut infeasible, mut constrained) = (0, 0, 0, 0);
    let mut failures = Vec::new();
    for (k, case) in cases.iter().enumerate() {
        let sep = case.inst.separation_params();
        let oracle = solve_oracle_with_cap(&case.candidates, &sep, C1_ORACLE_CAP).expect("oracle");
        let sbf = solve_sbf(&case.candidates, &sep, &SbfOptions::default()).expect("sbf");
        let optimum = oracle.as_ref().map(|s| s.total_cost);
        let agree = match (&sbf, optimum) {
            (SbfOutcome::Solved(s), Some(o)) => s.total_cost == o,
            (SbfOutcome::NoSolution(_), None) => true,
            _ => false,
        };
        if agree {
            equal += 1;
        } else {
            failures.push(format!("#{k} sbf {:?} oracle {optimum:?}", sbf.solution().map(|s| s.total_cost)));
        }
        let unconstrained: f64 = case.candidates.selection_cost(&vec![0; case.candidates.n_aircraft()]);
        match optimum {
            None => infeasible += 1,
            Some(o) if o > unconstrained => constrained += 1,
            _ => {}
        }
        let greedy = solve_greedy(&case.candidates, &sep, &CompatibilityCache::new(), &GreedyOptions::default()).expect("greedy");
        if greedy.success() {
            greedy_checked += 1;
            if optimum.is_none_or(|o| greedy.total_cost < o) {
                failures.push(format!("#{k} greedy {} below optimum {optimum:?}", greedy.total_cost));
            }
        }
    }
    let elapsed = started.elapsed();
    let pass = cases.len() >= 100 && failures.is_empty() && elapsed < C1_TIME_LIMIT;
    verdict(
        pass,
        format!(
            "{equal}/{} SBF == oracle ({constrained} above the unconstrained minimum, {infeasible} infeasible), greedy >= optimum on {greedy_checked} successes, {:.1}s (limit {}s){}",
            cases.len(),
            elapsed.as_secs_f64(),
            C1_TIME_LIMIT.as_secs(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join(", ")) }
        ),
    )
}

fn criterion2(cases: &[Case]) -> Verdict {
    let mut violations = Vec::new();
    for (k, case) in cases.iter().enumerate() {
        let bound = setting_bound(case.spec.discretisation).expect("bound");
        for (i, &d) in case.candidates.domain_sizes().iter().enumerate() {
            if d as u128 > bound {
                violations.push(format!("#{k} aircraft {i}: {d} > {bound}"));
            }
        }
    }
    let inst: ConflictInstance<f64> = make_scenario(&ScenarioSpec::roundabout(3, 1)).expect("scenario");
    let gen = six_segment_turn_generator(&inst).expect("generator");
    let counts: Vec<usize> = inst.aircraft.iter().map(|a| gen.generate(a).expect("generate").trajectories.len()).collect();
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    let preset_ok = counts.iter().all(|&c| (C2_TURN_PRESET_RANGE.0..=C2_TURN_PRESET_RANGE.1).contains(&(c as f64)));
    verdict(
        violations.is_empty() && preset_ok,
        format!(
            "bound holds on {} sets{}; six-segment turn preset legal counts {counts:?} (mean {mean:.0}, range [{}, {}])",
            cases.len(),
            if violations.is_empty() { String::new() } else { format!(" except {}", violations.join(", ")) },
            C2_TURN_PRESET_RANGE.0,
            C2_TURN_PRESET_RANGE.1
        ),
    )
}

fn criterion3() -> Verdict {
    let n2 = build_catalog(2, false).expect("catalog").reported_n();
    let n3 = build_catalog(3, false).expect("catalog").reported_n();
    let spec = ScenarioSpec::roundabout(3, 1);
    let mut means = Vec::new();
    let mut in_band = true;
    for &(p, m, g, published) in REFERENCE_SETTINGS.iter().filter(|s| s.1 == 2 && s.2 == 2) {
        let mean = mean_legal_count(&spec, params((p, m, g)), C3_RUNS, &GenerationOptions::default()).expect("mean");
        let ratio = mean / published;
        in_band &= (ratio - 1.0).abs() <= C3_BAND;
        means.push((p, mean, ratio));
    }
    let increasing = means.windows(2).all(|w| w[0].1 < w[1].1);
    let table = means.iter().map(|(p, mean, r)| format!("p{p} {mean:.0} (x{r:.2})")).collect::<Vec<_>>().join(", ");
    verdict(
        n2 == 17 && n3 == 33 && increasing && in_band,
        format!("catalog n={n2} at g=2, n={n3} at g=3; means {table}; increasing {increasing}, within +-{:.0}% {in_band}", C3_BAND * 100.0),
    )
}

fn criterion4() -> Verdict {
    let options = CampaignOptions { threads: 1, ..CampaignOptions::default() };
    let mut notes = Vec::new();

    let table = run_campaign_with(&ScenarioSpec::roundabout(3, 1), &reference_params(), &[Method::Sbf], C4_REFERENCE_RUNS, C4_TIMEOUT, &options)
        .expect("table campaign");
    let misses: Vec<String> =
        table.records.iter().filter(|r| r.outcome != Outcome::Optimal).map(|r| format!("{} seed {} {}", r.params, r.seed, r.outcome)).collect();
    let slowest = table.records.iter().map(|r| r.solve_s).fold(0.0, f64::max);
    let table_ok = misses.is_empty();
    notes.push(format!(
        "table settings x{C4_REFERENCE_RUNS}: {}/{} optimal within {}s (slowest {slowest:.1}s){}",
        table.records.len() - misses.len(),
        table.records.len(),
        C4_TIMEOUT.as_secs(),
        if table_ok { String::new() } else { format!(", missed {}", misses.join(", ")) }
    ));

    let base = ScenarioSpec::roundabout(3, 1);
    let candidates = sweep_candidates(SWEEP_TARGET).expect("candidates");
    let (setting, mean) = closest_setting(&base, SWEEP_TARGET, &candidates, C4_SWEEP_CALIBRATION_RUNS).expect("closest setting");
    let external = resolve_binary(Path::new(EXTERNAL_BINARY));
    let mut methods = vec![Method::Sbf, Method::Greedy];
    if let Some(bin) = &external {
        methods.push(Method::External { binary: bin.clone() });
    }
    let mut medians = Vec::new();
    let mut last_success = 1.0;
    let mut external_at_6 = None;
    let mut rows = Vec::new();
    for n in C4_SWEEP_AIRCRAFT {
        let report = run_campaign_with(&ScenarioSpec::roundabout(n, 1), &[setting], &methods, C4_SWEEP_RUNS, C4_TIMEOUT, &options).expect("sweep");
        let sbf = report.aggregate(n, setting, "sbf").expect("sbf aggregate");
        let greedy = report.aggregate(n, setting, "greedy").expect("greedy aggregate");
        medians.push(sbf.median_solve_s);
        last_success = sbf.success_rate;
        if n == 6 {
            external_at_6 = report.aggregate(n, setting, "external").map(|a| a.success_rate);
        }
        rows.push(format!(
            "n{n}: sbf {:.0}% median {:.2}s, greedy {:.0}%",
            sbf.success_rate * 100.0,
            sbf.median_solve_s,
            greedy.success_rate * 100.0
        ));
    }
    let increasing = medians.windows(2).all(|w| w[0] < w[1]);
    let collapse = last_success < C4_SWEEP_FINAL_SUCCESS;
    let external_ok = external_at_6.is_none_or(|s| s >= C4_EXTERNAL_AT_6);
    notes.push(format!(
        "sweep at {setting} (mean {mean:.0}/ac): {}; median strictly increasing {increasing}, final success < {:.0}% {collapse}",
        rows.join("; "),
        C4_SWEEP_FINAL_SUCCESS * 100.0
    ));
    notes.push(match external_at_6 {
        Some(s) => format!("external at n=6 {:.0}% (need {:.0}%)", s * 100.0, C4_EXTERNAL_AT_6 * 100.0),
        None => "external solver absent, skipped".to_string(),
    });
    verdict(table_ok && increasing && collapse && external_ok, notes.join(" | "))
}

fn criterion5(cases: &[Case]) -> Verdict {
    let external = resolve_binary(Path::new(EXTERNAL_BINARY));
    let dir = tempfile::tempdir().expect("temp dir");
    let (mut round_trips, mut within, mut external_agree) = (0, 0, 0);
    let mut failures = Vec::new();
    for (k, case) in cases.iter().enumerate() {
        let sep = case.inst.separation_params();
        let matrix = build_matrix(&case.candidates, &sep, MatrixOptions::default()).expect("matrix");
        let wcsp = formalize_wcsp(&case.candidates, &matrix, None, DEFAULT_SCALE).expect("wcsp");
        let name = format!("case{k}");
        let text = wcsp.to_wcsp_string(&name).expect("serialize");
        let (parsed_name, parsed) = parse_wcsp(&text, DEFAULT_SCALE).expect("parse");
        if parsed_name == name && parsed == wcsp && parsed.to_wcsp_string(&name).expect("serialize") == text {
            round_trips += 1;
        } else {
            failures.push(format!("#{k} round trip"));
        }
        let oracle = solve_oracle_with_cap(&case.candidates, &sep, C1_ORACLE_CAP).expect("oracle").map(|s| s.total_cost);
        let exhaustive = wcsp.exhaustive_optimum(C1_ORACLE_CAP).expect("exhaustive").map(|(v, _)| v);
        let n = case.candidates.n_aircraft() as i128;
        let ok = match (exhaustive, oracle) {
            (Some(v), Some(o)) => (v as i128 - (o * DEFAULT_SCALE as f64).round() as i128).abs() <= n,
            (None, None) => true,
            _ => false,
        };
        if ok {
            within += 1;
        } else {
            failures.push(format!("#{k} exhaustive {exhaustive:?} oracle {oracle:?}"));
        }
        if let Some(bin) = &external {
            let path = dir.path().join(format!("{name}.wcsp"));
            export_wcsp(&wcsp, &name, &path).expect("export");
            match (run_external_solver(&path, bin, Duration::from_secs(60)), exhaustive) {
                (ExternalOutcome::Solved { optimum, .. }, Some(v)) if optimum == v => external_agree += 1,
                (other, _) => failures.push(format!("#{k} external {other:?} vs {exhaustive:?}")),
            }
        }
    }
    let ext = if external.is_some() { format!("external agrees on {external_agree}") } else { "external solver absent, skipped".to_string() };
    verdict(
        failures.is_empty(),
        format!(
            "{round_trips}/{} bit-identical round trips, {within}/{} exhaustive within n units of the scaled oracle, {ext}{}",
            cases.len(),
            cases.len(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join(", ")) }
        ),
    )
}

fn criterion6() -> Verdict {
    let spec = large_roundabout(C6_AIRCRAFT, C6_SEED);
    let coarse: ConflictInstance<f64> = make_scenario(&spec.clone().with_params(params(C6_COARSE))).expect("scenario");
    let cc = build_candidate_set(&coarse).expect("coarse candidates");
    let sep = coarse.separation_params();
    let t = Instant::now();
    let optimum = solve_sbf(&cc, &sep, &SbfOptions::default()).expect("sbf");
    let sbf_s = t.elapsed().as_secs_f64();
    let Some(opt) = optimum.solution().map(|s| s.total_cost) else {
        return verdict(false, format!("no coarse optimum: {optimum:?}"));
    };

    let t = Instant::now();
    let fine: ConflictInstance<f64> = make_scenario(&spec.with_params(params(C6_FINE))).expect("scenario");
    let fc = build_candidate_set(&fine).expect("fine candidates");
    let greedy = solve_greedy(&fc, &sep, &CompatibilityCache::new(), &GreedyOptions::default()).expect("greedy");
    let greedy_time = t.elapsed();
    let pass = cc.mean_domain_size() <= C6_COARSE_MAX_TRAJ
        && fc.mean_domain_size() >= C6_FINE_MIN_TRAJ
        && greedy.success()
        && greedy_time < C6_GREEDY_LIMIT
        && greedy.total_cost < opt;
    verdict(
        pass,
        format!(
            "{C6_AIRCRAFT} aircraft, radius {} NM: SBF optimum {opt:.3} kg at {} ({:.0}/ac, {sbf_s:.1}s); greedy {:?} {:.3} kg at {} ({:.0}/ac) in {:.2}s",
            spec_radius(),
            params(C6_COARSE),
            cc.mean_domain_size(),
            greedy.status,
            greedy.total_cost,
            params(C6_FINE),
            fc.mean_domain_size(),
            greedy_time.as_secs_f64()
        ),
    )
}

fn spec_radius() -> f64 {
    large_roundabout(C6_AIRCRAFT, C6_SEED).radius_nm
}

fn anytime_instance(k: usize) -> ConflictInstance<f64> {
    let kind = if k.is_multiple_of(2) { ScenarioKind::Roundabout } else { ScenarioKind::Crossing };
    make_scenario(&ScenarioSpec::of_kind(kind, 2 + k % 3, 500 + k as u64)).expect("scenario")
}

fn criterion7() -> Verdict {
    let schedule = parse_schedule(DEFAULT_SCHEDULE).expect("schedule");
    let mut failures = Vec::new();
    let mut iterations = 0;
    for k in 0..C7_INSTANCES {
        let inst = anytime_instance(k);
        let r = iterate_anytime(&inst, &schedule, C7_BUDGET).expect("anytime");
        iterations += r.log.len();
        let incumbents: Vec<f64> = r.log.iter().filter_map(|e| e.incumbent_kg).collect();
        let first = r.log.iter().position(|e| e.incumbent_kg.is_some()).unwrap_or(r.log.len());
        let monotone = incumbents.windows(2).all(|w| w[1] <= w[0]) && r.log[first..].iter().all(|e| e.incumbent_kg.is_some());
        if !monotone {
            failures.push(format!("#{k} incumbents {incumbents:?}"));
        }
        if let Some(b) = &r.best {
            let sep = inst.separation_params();
            let cost: f64 = b.trajectories.iter().map(|t| t.cost).sum();
            let feasible = (0..b.trajectories.len())
                .all(|i| (i + 1..b.trajectories.len()).all(|j| compatible(&b.trajectories[i], &b.trajectories[j], &sep).expect("compatible")));
            if !feasible || (cost - b.cost).abs() > 1e-6 || incumbents.last() != Some(&b.cost) {
                failures.push(format!("#{k} best inconsistent"));
            }
        }
    }
    let mut interrupts = 0;
    for k in 0..C7_INTERRUPT_INSTANCES {
        let inst = anytime_instance(k);
        for ms in C7_INTERRUPT_BUDGETS_MS {
            let r = iterate_anytime(&inst, &schedule, Duration::from_millis(ms)).expect("anytime");
            interrupts += 1;
            let logged = r.log.last().and_then(|e| e.incumbent_kg);
            if r.best.as_ref().map(|b| b.cost) != logged || (ms == 0 && (r.best.is_some() || !r.budget_exhausted)) {
                failures.push(format!("#{k} budget {ms}ms best {:?} log {logged:?}", r.best.as_ref().map(|b| b.cost)));
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{C7_INSTANCES} instances ({iterations} iterations) non-increasing with a feasible best, {interrupts} interrupted runs return the incumbent{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join(", ")) }
        ),
    )
}

fn criterion8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pools = Vec::new();
    for k in 0..12u64 {
        let kind = if k % 2 == 0 { ScenarioKind::Roundabout } else { ScenarioKind::Crossing };
        let spec = ScenarioSpec::of_kind(kind, 2 + (k % 3) as usize, 800 + k).with_params(params((4, 2, 2)));
        let inst: ConflictInstance<f64> = make_scenario(&spec).expect("scenario");
        if let Ok(c) = build_candidate_set(&inst) {
            let v_max = inst.aircraft.iter().map(|a| a.perf.v_max).fold(0.0, f64::max);
            pools.push((inst.separation_params(), c, v_max));
        }
    }
    let (mut worst_excess, mut asymmetric, mut violations) = (f64::NEG_INFINITY, 0, 0);
    for _ in 0..C8_PAIRS {
        let (sep, c, v_max) = &pools[rng.gen_range(0..pools.len())];
        let i = rng.gen_range(0..c.n_aircraft());
        let j = (i + rng.gen_range(1..c.n_aircraft())) % c.n_aircraft();
        let ti = rng.gen_range(0..c.lists[i].len());
        let tj = rng.gen_range(0..c.lists[j].len());
        let (a, b) = (c.trajectory(i, ti), c.trajectory(j, tj));
        let fine = SeparationParams { sample_step: C8_FINE_STEP, ..*sep };
        let coarse_min = min_distance(a, b, sep).expect("distance");
        let fine_min = min_distance(a, b, &fine).expect("distance");
        let bound = 2.0 * v_max * sep.sample_step / 3600.0;
        let excess = coarse_min - fine_min - bound;
        worst_excess = worst_excess.max(excess);
        if excess > C8_FLOAT_SLACK {
            violations += 1;
        }
        let cache = CompatibilityCache::new();
        let forward = compatible(a, b, sep).expect("compatible");
        let backward = compatible(b, a, sep).expect("compatible");
        let cached = check_pair_cached(&cache, j, tj, i, ti, c, sep).expect("cached");
        if forward != backward || forward != cached || min_distance(b, a, sep).expect("distance") != coarse_min {
            asymmetric += 1;
        }
    }
    verdict(
        violations == 0 && asymmetric == 0,
        format!("{C8_PAIRS} pairs: {violations} exceed 2 v_max step/3600 (worst margin {:.4} NM), {asymmetric} asymmetric", -worst_excess),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cases = small_cases();
    let criteria: [(u8, &str, Box<dyn Fn() -> Verdict + '_>); 8] = [
        (1, "oracle equivalence", Box::new(|| criterion1(&cases))),
        (2, "count bound", Box::new(|| criterion2(&cases))),
        (3, "catalog and table counts", Box::new(criterion3)),
        (4, "crossover shape", Box::new(criterion4)),
        (5, "WCSP consistency", Box::new(|| criterion5(&cases))),
        (6, "greedy beyond exact limits", Box::new(criterion6)),
        (7, "anytime", Box::new(criterion7)),
        (8, "separation", Box::new(criterion8)),
    ];
    let mut all = true;
    for (id, name, run) in &criteria {
        let v = run();
        report(*id, name, &v);
        all &= v.pass;
    }
    println!("acceptance finished in {:.0}s", started.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
