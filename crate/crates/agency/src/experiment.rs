//! The `experiment` pipeline: comparison tables, group reports, metadata.

use std::path::{Path, PathBuf};

use agency_core::analysis::{compare_policies, group_agency_report, ComparisonTable, GroupAgencyReport, PolicyEntry};
use agency_core::domains::recidivism::score_of;
use agency_core::mdp::AgencyMdp;
use agency_core::policies::{AdvicePolicy, BfsConfig, GradientPolicy, Greedy, MctsConfig, MctsPolicy, RandomPolicy};
use agency_core::seed::derive_seed;
use serde_json::json;

use crate::config::{CompareConfig, PolicyConfig, RunConfig};
use crate::domain::{
    realistic_mdp, recidivism_mdp, simple_credit_mdp, simple_credit_starts, synthetic_mdp, synthetic_start, Domain,
};
use crate::io::{write_json, write_text};
use crate::report::{comparison_csv, comparison_svg, emit_pair, failures_csv, group_csv, group_svg};
use crate::{to_core, AgencyError, Result};

pub fn mcts_config(iterations: u64, exploration: Option<f64>) -> MctsConfig {
    let mut c = MctsConfig::iterations(iterations);
    if let Some(e) = exploration {
        c.exploration = e;
    }
    c
}

/// Policies every domain supports; `None` for domain-specific ones.
pub fn common_policy<M: AgencyMdp + 'static>(p: &PolicyConfig) -> Option<Box<dyn AdvicePolicy<M>>> {
    match p {
        PolicyConfig::Greedy => Some(Box::new(Greedy)),
        PolicyConfig::Random => Some(Box::new(RandomPolicy)),
        PolicyConfig::Mcts { iterations, exploration } => {
            Some(Box::new(MctsPolicy { config: mcts_config(*iterations, *exploration) }))
        }
        _ => None,
    }
}

/// How a configured policy is evaluated in a comparison.
pub enum Built<M> {
    Exact(BfsConfig),
    Rollout(Box<dyn AdvicePolicy<M>>),
}

pub fn bfs_config(node_cap: Option<usize>) -> BfsConfig {
    let mut c = BfsConfig::default();
    if let Some(n) = node_cap {
        c.node_cap = n;
    }
    c
}

fn build_all<M: AgencyMdp + 'static>(
    policies: &[PolicyConfig],
    special: impl Fn(&PolicyConfig) -> Option<Box<dyn AdvicePolicy<M>>>,
) -> Result<Vec<Built<M>>> {
    policies
        .iter()
        .map(|p| match p {
            PolicyConfig::Bfs { node_cap } => Ok(Built::Exact(bfs_config(*node_cap))),
            p => common_policy(p)
                .or_else(|| special(p))
                .map(Built::Rollout)
                .ok_or_else(|| AgencyError::Config(format!("policy `{}` does not apply to this domain", p.name()))),
        })
        .collect()
}

fn run_compare<M, F>(c: &CompareConfig, built: &[Built<M>], instance: F, n_starts: usize, seed: u64) -> Result<ComparisonTable>
where
    M: AgencyMdp + 'static,
    F: Fn(usize, u32) -> agency_core::Result<M>,
{
    let entries: Vec<PolicyEntry<'_, M>> = built
        .iter()
        .map(|b| match b {
            Built::Exact(cfg) => PolicyEntry::Exact { name: "bfs".into(), config: *cfg },
            Built::Rollout(p) => PolicyEntry::Rollout(p.as_ref()),
        })
        .collect();
    Ok(compare_policies(instance, n_starts, &c.resources, &entries, derive_seed(seed, "compare", 0))?)
}

#[derive(Debug, Default)]
pub struct ExperimentOutput {
    /// `(label, table)`; recidivism tables hold risk scores, lower is better.
    pub tables: Vec<(String, ComparisonTable)>,
    pub group: Option<GroupAgencyReport>,
    pub files: Vec<PathBuf>,
    pub failures: usize,
}

/// Runs every configured section and writes reports into `out`.
pub fn run_experiment(cfg: &RunConfig, out: &Path) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let domain = Domain::load(cfg)?;
    let mut result = ExperimentOutput::default();
    let mut meta_domain = json!({ "kind": domain.kind() });
    let seed = cfg.seed;

    if let Some(c) = &cfg.compare {
        match &domain {
            Domain::Synthetic { preset, start, uniform } => {
                let built = build_all(&c.policies, |p| match p {
                    PolicyConfig::Gradient { epsilon } => {
                        Some(Box::new(GradientPolicy { epsilon: *epsilon, ..GradientPolicy::default() }) as _)
                    }
                    _ => None,
                })?;
                let inst = |i: usize, r| to_core(synthetic_mdp(*preset, synthetic_start(*preset, start, *uniform, i, seed), r));
                result.tables.push(("comparison".into(), run_compare(c, &built, inst, c.n_starts, seed)?));
                meta_domain["preset"] = json!(preset.name());
                meta_domain["start"] = json!(start);
            }
            Domain::SimpleCredit { df } => {
                let built = build_all(&c.policies, |_| None)?;
                let starts = simple_credit_starts(c.n_starts, seed);
                let inst = |i: usize, r| to_core(simple_credit_mdp(df, &starts[i], r));
                result.tables.push(("comparison".into(), run_compare(c, &built, inst, c.n_starts, seed)?));
                meta_domain["decision"] = json!(if matches!(&cfg.domain, crate::config::DomainConfig::SimpleCredit { cache: Some(_) }) { "query_cache" } else { "synthetic_score" });
            }
            Domain::RealisticCredit { df, preset, scenario } => {
                let base = realistic_mdp(df, preset, scenario, 0)?;
                let built = build_all(&c.policies, |p| match p {
                    PolicyConfig::PayMax => Some(Box::new(base.pay_max_policy()) as _),
                    _ => None,
                })?;
                let inst = |_: usize, r| to_core(realistic_mdp(df, preset, scenario, r));
                result.tables.push(("comparison".into(), run_compare(c, &built, inst, c.n_starts, seed)?));
                meta_domain["scenario"] = json!(scenario.name);
                meta_domain["preset"] = serde_json::to_value(preset).expect("preset serializes");
            }
            Domain::Recidivism(setup) => {
                let n = c.n_starts.min(setup.cohort.len());
                if n == 0 {
                    return Err(AgencyError::Failed("recidivism cohort is empty".into()));
                }
                for (v, e) in &setup.models {
                    let built = build_all(&c.policies, |_| None)?;
                    let inst = |i: usize, r| to_core(recidivism_mdp(e, *v, &setup.cohort[i], r));
                    let table = run_compare(c, &built, inst, n, seed)?;
                    result.tables.push((format!("comparison_{}", v.name()), table));
                }
                meta_domain["n_starts_used"] = json!(n);
            }
        }
    }

    if let (Some(g), Domain::Recidivism(setup)) = (&cfg.group, &domain) {
        let n = g.n_records.min(setup.held_out.len());
        let mcts = MctsConfig::iterations(g.mcts_iterations);
        let report = group_agency_report(&setup.models, &setup.held_out[..n], &g.ks, &mcts, derive_seed(seed, "group", 0))?;
        meta_domain["group_records_used"] = json!(n);
        result.group = Some(report);
    }

    if let Domain::Recidivism(setup) = &domain {
        meta_domain["records"] = json!(setup.n_records);
        meta_domain["dropped_rows"] = json!(setup.dropped);
        meta_domain["cohort_size"] = json!(setup.cohort.len());
        meta_domain["models"] = serde_json::to_value(&setup.metrics).expect("metrics serialize");
        let mut metrics = String::from("variant,auc,accuracy,n_train,n_test\n");
        for m in &setup.metrics {
            metrics.push_str(&format!("{},{},{},{},{}\n", m.variant, m.auc, m.accuracy, m.n_train, m.n_test));
        }
        let p = out.join("metrics.csv");
        write_text(&p, &metrics)?;
        result.files.push(p);
    }

    let risk = matches!(domain, Domain::Recidivism(_));
    let to_display = |v: f64| if risk { score_of(v) } else { v };
    let y_label = if risk { "mean risk score (lower is better)" } else { "mean final decision" };
    for (label, table) in &result.tables {
        let title = format!("{} ({label})", cfg.name);
        result.files.extend(emit_pair(
            out,
            label,
            &comparison_csv(table, to_display),
            &comparison_svg(&title, y_label, table, to_display),
        )?);
        result.failures += table.failures.len();
    }
    let failures: Vec<_> = result.tables.iter().flat_map(|t| t.1.failures.iter().cloned()).collect();
    if !failures.is_empty() {
        let p = out.join("failures.csv");
        write_text(&p, &failures_csv(&failures))?;
        result.files.push(p);
    }
    if let Some(g) = &result.group {
        result.files.extend(emit_pair(out, "group", &group_csv(g), &group_svg(&format!("{} (group agency)", cfg.name), g))?);
    }

    let outputs: Vec<String> = result
        .files
        .iter()
        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
        .collect();
    let meta = json!({
        "tool": { "name": "agency", "version": env!("CARGO_PKG_VERSION") },
        "config": cfg,
        "seed": seed,
        "derived_seeds": {
            "compare": derive_seed(seed, "compare", 0),
            "group": derive_seed(seed, "group", 0),
            "forest": derive_seed(seed, "forest", 0),
            "starts": derive_seed(seed, "starts", 0),
        },
        "domain": meta_domain,
        "failures": result.failures,
        "outputs": outputs,
    });
    let p = out.join("metadata.json");
    write_json(&p, &meta)?;
    result.files.push(p);
    Ok(result)
}
