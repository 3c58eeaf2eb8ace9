//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the report is printed in order; exits 1 if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use agency::config::RunConfig;
use agency::domain::{default_start, synthetic_mdp, Domain};
use agency::theorems::{run_suite, RiskInputs, SuiteOptions};
use agency_core::decision_fn::{Preset, SharedDecision};
use agency_core::domains::credit::{MonthlyAction, Scenario, SyntheticFico};
use agency_core::domains::recidivism::{RiskDecision, ScoreVariant, RACES, SEXES};
use agency_core::domains::TableMdp;
use agency_core::mdp::{rollout, AgencyMdp};
use agency_core::policies::{bfs_optimal, greedy_action, mcts_search_detailed, BfsPolicy, Greedy, MctsConfig};

/// Held-out AUC of the full-variant forest trained by `train_forest.json`.
const PINNED_AUC: f64 = 0.6683507071754711;
const GROUP_TOL: f64 = 1e-12;

type Check = Result<String, String>;
type Table = BTreeMap<(String, u32), (f64, f64)>;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn config(name: &str) -> PathBuf {
    data("configs").join(name)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: Duration) -> Result<(), String> {
    let e = t.elapsed();
    ensure(e < limit, || format!("took {e:.1?}, limit {limit:?}"))
}

/// One CLI invocation whose output files are compared across two runs.
struct Job {
    name: &'static str,
    args: Vec<String>,
    /// Output file or directory; `{run}` is replaced by the run directory.
    out: String,
}

fn jobs() -> Vec<Job> {
    let p = |x: PathBuf| x.to_str().unwrap().to_string();
    let experiment = |name: &'static str, cfg: &str| Job {
        name,
        args: vec!["experiment".into(), "--config".into(), p(config(cfg)), "--out".into(), format!("{{run}}/{name}")],
        out: format!("{{run}}/{name}"),
    };
    vec![
        Job {
            name: "train-forest",
            args: vec![
                "train-forest".into(),
                "--data".into(),
                p(data("compas_violent.csv")),
                "--config".into(),
                p(config("train_forest.json")),
                "--out".into(),
                "{run}/forest/forest.json".into(),
            ],
            out: "{run}/forest".into(),
        },
        Job {
            name: "advise",
            args: vec![
                "advise".into(),
                "--config".into(),
                p(config("sudden_debt.json")),
                "--resources".into(),
                "6".into(),
                "--out".into(),
                "{run}/advise/advice.json".into(),
            ],
            out: "{run}/advise".into(),
        },
        experiment("fig1_bench", "fig1_bench.json"),
        experiment("fig2_bench", "fig2_bench.json"),
        experiment("simple_credit_bench", "simple_credit_bench.json"),
        experiment("simple_credit_cache", "simple_credit_cache.json"),
        experiment("sudden_debt", "sudden_debt.json"),
        experiment("debt_free_average", "debt_free_average.json"),
        experiment("recidivism_bench", "recidivism_bench.json"),
        Job {
            name: "check-theorems",
            args: vec![
                "check-theorems".into(),
                "--out".into(),
                "{run}/theorems".into(),
                "--states".into(),
                "20".into(),
                "--ensemble".into(),
                "{run}/forest/forest.json".into(),
                "--data".into(),
                p(data("compas_violent.csv")),
                "--charges".into(),
                p(data("charge_types.json")),
            ],
            out: "{run}/theorems".into(),
        },
        Job {
            name: "build-cache",
            args: vec![
                "build-cache".into(),
                "--synthetic".into(),
                "300".into(),
                "--seed".into(),
                "11".into(),
                "--out".into(),
                "{run}/cache/cache.csv".into(),
            ],
            out: "{run}/cache".into(),
        },
    ]
}

/// Runs every job into `run`; returns each job's output path and wall time.
fn run_jobs(run: &Path) -> Result<BTreeMap<&'static str, (PathBuf, Duration)>, String> {
    let mut out = BTreeMap::new();
    let sub = |s: &str| s.replace("{run}", run.to_str().unwrap());
    for job in jobs() {
        let t = Instant::now();
        let o = Command::new(env!("CARGO_BIN_EXE_agency"))
            .args(job.args.iter().map(|a| sub(a)))
            .output()
            .map_err(|e| format!("{}: {e}", job.name))?;
        if !o.status.success() {
            return Err(format!("{} exited {:?}: {}", job.name, o.status.code(), String::from_utf8_lossy(&o.stderr)));
        }
        out.insert(job.name, (PathBuf::from(sub(&job.out)), t.elapsed()));
    }
    Ok(out)
}

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut m = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                m.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    m
}

/// `(policy, resources) -> (mean, stderr)` from a comparison CSV.
fn comparison(path: &Path) -> Result<Table, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut m = BTreeMap::new();
    for l in text.lines().skip(1) {
        let c: Vec<&str> = l.split(',').collect();
        if let (Ok(mean), Ok(se)) = (c[2].parse(), c[3].parse()) {
            m.insert((c[0].to_string(), c[1].parse().unwrap()), (mean, se));
        }
    }
    Ok(m)
}

fn cell(t: &Table, policy: &str, r: u32) -> Result<(f64, f64), String> {
    t.get(&(policy.to_string(), r)).copied().ok_or_else(|| format!("no {policy} cell at r={r}"))
}

fn criterion_1() -> Check {
    let t = Instant::now();
    let mut seen = Vec::new();
    for r in 1..=6 {
        let m = synthetic_mdp(Preset::Fig1Default, default_start(Preset::Fig1Default), r).map_err(|e| e.to_string())?;
        let b = bfs_optimal(&m, &m.initial_state()).map_err(|e| e.to_string())?;
        let got = m.label(b.best_action).to_string();
        let want = if r <= 2 { "left" } else { "right" };
        ensure(got == want, || format!("r={r}: advised {got}, expected {want}"))?;
        seen.push(format!("r{r}={got}"));
    }
    within(t, Duration::from_secs(1))?;
    Ok(seen.join(" "))
}

fn criterion_2() -> Check {
    let t = Instant::now();
    let start = default_start(Preset::Fig2Default);
    let m = synthetic_mdp(Preset::Fig2Default, start.clone(), 6).map_err(|e| e.to_string())?;
    let s0 = m.initial_state();
    let v_star = bfs_optimal(&m, &s0).map_err(|e| e.to_string())?.value;
    let greedy = rollout(&m, &Greedy, &s0, 0).map_err(|e| e.to_string())?.final_decision;
    ensure(greedy < v_star, || format!("greedy {greedy} is not below V* {v_star}"))?;
    for r in 4..=8 {
        let m = synthetic_mdp(Preset::Fig2Default, start.clone(), r).map_err(|e| e.to_string())?;
        let s = m.initial_state();
        let b = bfs_optimal(&m, &s).map_err(|e| e.to_string())?.best_action;
        let g = greedy_action(&m, &s).map_err(|e| e.to_string())?;
        ensure(b != g, || format!("r={r}: BFS and greedy both move {}", m.label(b)))?;
    }
    within(t, Duration::from_secs(10))?;
    Ok(format!("r=6 greedy {greedy:.4} < V* {v_star:.4}; first moves differ for r=4..8"))
}

fn criterion_3(forest: &Path) -> Check {
    let t = Instant::now();
    let ensemble = agency::io::read_ensemble(forest).map_err(|e| e.to_string())?;
    let charges = agency::io::ChargeDictionary::load(&data("charge_types.json")).map_err(|e| e.to_string())?;
    let records = agency::io::load_compas(&data("compas_violent.csv"), &charges).map_err(|e| e.to_string())?.records;
    let opts = SuiteOptions {
        n_states: 100,
        seed: 0,
        risk: Some(RiskInputs { variant: ScoreVariant::Full, ensemble: Arc::new(ensemble), records }),
    };
    let report = run_suite(&opts).map_err(|e| e.to_string())?;
    let failed: Vec<String> =
        report.rows.iter().filter(|r| !r.pass).map(|r| format!("{} {}", r.check, r.subject)).collect();
    ensure(failed.is_empty(), || format!("failed: {}", failed.join(", ")))?;
    let theorem1 = report.rows.iter().filter(|r| r.check == "theorem1").count();
    for (check, subject) in [
        ("straightness", "linear_default"),
        ("straightness", "radial_default"),
        ("greedy_gap", "linear_default"),
        ("greedy_gap", "radial_default"),
        ("greedy_gap", "fig1_default r=3"),
    ] {
        ensure(report.get(check, subject).is_some(), || format!("no {check} row for {subject}"))?;
    }
    ensure(theorem1 >= 9, || format!("only {theorem1} domains in the one-resource check"))?;
    within(t, Duration::from_secs(60))?;
    Ok(format!("{} checks over {theorem1} domains", report.rows.len()))
}

fn criterion_4() -> Check {
    let t = Instant::now();
    let (mut smallest, mut largest) = (usize::MAX, 0);
    for i in 0..50u64 {
        let depth = 3 + (i % 3) as u32;
        let m = TableMdp::random_layered(1000 + i, depth, 40, 2 + (i % 3) as usize, false);
        let n = m.reachable_states();
        ensure(n <= 500, || format!("mdp {i} has {n} reachable states"))?;
        smallest = smallest.min(n);
        largest = largest.max(n);
        let s = m.initial_state();
        let maxs = bfs_optimal(&m, &s).map_err(|e| e.to_string())?.maximizers(1e-9);
        for seed in 0..20 {
            let r = mcts_search_detailed(&m, &s, &MctsConfig::iterations(100_000), seed).map_err(|e| e.to_string())?;
            ensure(maxs.contains(&r.action), || format!("mdp {i} seed {seed}: MCTS chose {:?}", r.action))?;
        }
    }
    within(t, Duration::from_secs(300))?;
    Ok(format!("50 mdps x 20 seeds agree ({smallest}..{largest} reachable states)"))
}

fn criterion_5(dir: &Path, took: Duration) -> Check {
    let t = comparison(&dir.join("comparison.csv"))?;
    let mut worst = f64::INFINITY;
    for r in 1..=6 {
        let (bfs, _) = cell(&t, "bfs", r)?;
        let (mcts, _) = cell(&t, "mcts", r)?;
        let (greedy, se) = cell(&t, "greedy", r)?;
        let (random, _) = cell(&t, "random", r)?;
        let floor = greedy - 2.0 * se;
        ensure(bfs >= mcts && mcts >= floor && floor >= random, || {
            format!("r={r}: bfs {bfs} mcts {mcts} greedy-2se {floor} random {random}")
        })?;
        worst = worst.min(mcts - floor);
    }
    ensure(took < Duration::from_secs(600), || format!("took {took:.1?}"))?;
    Ok(format!("ordering holds at r=1..6 (closest mcts margin {worst:.2}), {took:.1?}"))
}

fn bfs_plan(sc: &Scenario, months: u32) -> Result<Vec<MonthlyAction>, String> {
    let df: SharedDecision = Arc::new(SyntheticFico::standard());
    let m = sc.mdp(df, Some(months)).map_err(|e| e.to_string())?;
    let t = rollout(&m, &BfsPolicy::default(), &m.initial_state(), 0).map_err(|e| e.to_string())?;
    t.actions.iter().map(|a| MonthlyAction::from_id(*a).ok_or_else(|| format!("bad action {a:?}"))).collect()
}

fn opened(plan: &[MonthlyAction]) -> usize {
    plan.iter().filter(|a| a.label().starts_with("open card")).count()
}

fn criterion_6(debt_free: &Path) -> Check {
    let t = Instant::now();
    let sudden = Scenario::sudden_debt();
    let first = bfs_plan(&sudden, 1)?;
    ensure(first == [MonthlyAction::MissPayment], || format!("months=1 plan {first:?}"))?;
    for m in 2..=6 {
        let plan = bfs_plan(&sudden, m)?;
        ensure(plan.first() == Some(&MonthlyAction::DeclareBankruptcy), || format!("months={m} starts {:?}", plan.first()))?;
    }
    let free = Scenario::debt_free_average();
    let short = opened(&bfs_plan(&free, 1)?);
    let long = opened(&bfs_plan(&free, 6)?);
    ensure(long > short, || format!("cards opened: horizon 6 {long}, horizon 1 {short}"))?;

    let table = comparison(&debt_free.join("comparison.csv"))?;
    let horizons = [1, 2, 3, 4, 5, 6, 9, 12];
    let avg = |p: &str| -> Result<f64, String> {
        let mut s = 0.0;
        for h in horizons {
            s += cell(&table, p, h)?.0;
        }
        Ok(s / horizons.len() as f64)
    };
    let (pay_max, greedy) = (avg("pay max")?, avg("greedy")?);
    ensure(pay_max > greedy, || format!("pay max {pay_max} vs greedy {greedy}"))?;
    within(t, Duration::from_secs(120))?;
    Ok(format!(
        "bankruptcy first for months 2..6; cards opened {short} -> {long}; pay max {pay_max:.2} > greedy {greedy:.2}"
    ))
}

fn criterion_7(forest_metrics: &Path, bench: &Path, took: Duration) -> Check {
    let t = Instant::now();
    let metrics = fs::read_to_string(forest_metrics).map_err(|e| e.to_string())?;
    let auc: f64 = metrics
        .lines()
        .nth(1)
        .and_then(|l| l.split(',').nth(1))
        .and_then(|x| x.parse().ok())
        .ok_or("metrics CSV has no AUC")?;
    ensure(auc > 0.6, || format!("AUC {auc}"))?;
    ensure((auc - PINNED_AUC).abs() < 1e-12, || format!("AUC {auc} differs from pinned {PINNED_AUC}"))?;

    let cfg = RunConfig::load(&config("recidivism_bench.json")).map_err(|e| e.to_string())?;
    let setup = match Domain::load(&cfg).map_err(|e| e.to_string())? {
        Domain::Recidivism(s) => s,
        _ => return Err("bench config is not a recidivism run".into()),
    };
    let blind = RiskDecision::new(setup.model(ScoreVariant::Blind).ok_or("no blind model")?.clone());
    let full = RiskDecision::new(setup.model(ScoreVariant::Full).ok_or("no full model")?.clone());
    for rec in &setup.held_out {
        for (variant, v) in [(ScoreVariant::Full, &full), (ScoreVariant::Blind, &blind)] {
            let s = v.score(&rec.features(variant)).map_err(|e| e.to_string())?.0;
            ensure((1..=10).contains(&s), || format!("score {s} out of range"))?;
        }
        let base = blind.score(&rec.features(ScoreVariant::Blind)).map_err(|e| e.to_string())?;
        for sex in 0..SEXES.len() as u32 {
            for race in 0..RACES.len() as u32 {
                let mut r = rec.clone();
                r.sex = sex;
                r.race = race;
                let s = blind.score(&r.features(ScoreVariant::Blind)).map_err(|e| e.to_string())?;
                ensure(s == base, || format!("blind score moved with race/sex on {rec:?}"))?;
                let p = blind.ensemble().predict(&r.features(ScoreVariant::Blind));
                let q = blind.ensemble().predict(&rec.features(ScoreVariant::Blind));
                ensure(p.to_bits() == q.to_bits(), || "blind probability moved with race/sex".into())?;
            }
        }
    }

    let pinned = group_rows(&std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/pinned/recidivism_group.csv"),
    )
    .map_err(|e| e.to_string())?);
    let got = group_rows(&fs::read_to_string(bench.join("group.csv")).map_err(|e| e.to_string())?);
    for v in ["full", "blind"] {
        for k in 6..=10 {
            ensure(got.keys().any(|(_, gv, gk)| gv == v && *gk == k), || format!("no {v} rows for k={k}"))?;
        }
    }
    ensure(got.len() == pinned.len(), || format!("{} group rows, {} pinned", got.len(), pinned.len()))?;
    for (key, (delta, n)) in &pinned {
        let (d, m) = got.get(key).ok_or_else(|| format!("missing group row {key:?}"))?;
        ensure(m == n && (d - delta).abs() <= GROUP_TOL, || format!("{key:?}: delta {d} (n {m}), pinned {delta} (n {n})"))?;
    }
    let weighted = |v: &str| {
        let (s, n) = got
            .iter()
            .filter(|((_, gv, _), _)| gv == v)
            .fold((0.0, 0usize), |(s, c), (_, (d, n))| (s + d * *n as f64, c + n));
        s / n as f64
    };
    let total = took + t.elapsed();
    ensure(total < Duration::from_secs(900), || format!("took {total:.1?}"))?;
    Ok(format!(
        "AUC {auc:.4}; {} held-out records scored; {} group rows match; mean change full {:.3}, blind {:.3}",
        setup.held_out.len(),
        got.len(),
        weighted("full"),
        weighted("blind")
    ))
}

/// `(group, variant, k) -> (mean_after - mean_before, n)`.
fn group_rows(text: &str) -> BTreeMap<(String, String, u32), (f64, usize)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            let before: f64 = c[3].parse().unwrap();
            let after: f64 = c[4].parse().unwrap();
            ((c[0].to_string(), c[1].to_string(), c[2].parse().unwrap()), (after - before, c[5].parse().unwrap()))
        })
        .collect()
}

fn criterion_8(first: &BTreeMap<&'static str, (PathBuf, Duration)>, second_dir: &Path) -> Check {
    let second = run_jobs(second_dir)?;
    let mut files = 0;
    for (name, (a, _)) in first {
        let (b, _) = &second[name];
        let (fa, fb) = (files_under(a), files_under(b));
        ensure(!fa.is_empty(), || format!("{name} wrote nothing"))?;
        ensure(fa.keys().eq(fb.keys()), || format!("{name}: different file sets"))?;
        for (p, bytes) in &fa {
            ensure(&fb[p] == bytes, || format!("{name}: {} differs", p.display()))?;
        }
        files += fa.len();
    }
    Ok(format!("{} commands, {files} files byte-identical", first.len()))
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let tmp = tempfile::tempdir().expect("temporary directory");
    let first = run_jobs(&tmp.path().join("first"));

    let mut results: Vec<(u32, &str, Check)> = Vec::new();
    let mut run = |n: u32, name: &'static str, f: &mut dyn FnMut() -> Check| {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let tag = if r.is_ok() { "PASS" } else { "FAIL" };
        let detail = match &r {
            Ok(d) | Err(d) => d.clone(),
        };
        println!("{tag} criterion {n} ({name}): {detail} [{:.1?}]", t.elapsed());
        results.push((n, name, r));
    };
    let need = |name: &str| -> Result<(PathBuf, Duration), String> {
        match &first {
            Ok(m) => Ok(m[name].clone()),
            Err(e) => Err(format!("first CLI pass failed: {e}")),
        }
    };

    run(1, "two-peak advice", &mut criterion_1);
    run(2, "curved field", &mut criterion_2);
    run(3, "theorem suite", &mut || criterion_3(&need("train-forest")?.0.join("forest.json")));
    run(4, "search oracle", &mut criterion_4);
    run(5, "simple credit ordering", &mut || {
        let (dir, took) = need("simple_credit_bench")?;
        criterion_5(&dir, took)
    });
    run(6, "credit scenarios", &mut || criterion_6(&need("debt_free_average")?.0));
    run(7, "recidivism pipeline", &mut || {
        let (forest, _) = need("train-forest")?;
        let (bench, took) = need("recidivism_bench")?;
        criterion_7(&forest.join("forest.metrics.csv"), &bench, took)
    });
    run(8, "determinism", &mut || match &first {
        Ok(m) => criterion_8(m, &tmp.path().join("second")),
        Err(e) => Err(format!("first CLI pass failed: {e}")),
    });

    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
