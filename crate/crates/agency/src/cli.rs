//! Command-line definitions and command bodies. Exit codes: 0 success,
//! 1 runtime failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use agency_core::decision_fn::Schema;
use agency_core::domains::credit::questionnaire_schema;
use agency_core::domains::recidivism::ScoreVariant;
use clap::{Parser, Subcommand};

use crate::advise::advise;
use crate::config::{PolicyConfig, RunConfig, TrainConfig};
use crate::domain::train_models;
use crate::experiment::run_experiment;
use crate::io::{
    load_compas, read_cache_points, read_ensemble, read_json, synthetic_cache_points, write_cache_csv, write_ensemble,
    write_text, ChargeDictionary,
};
use crate::theorems::{run_suite, RiskInputs, SuiteOptions};
use crate::{AgencyError, Result};

#[derive(Parser, Debug)]
#[command(name = "agency", version, about = "Advice policies for agency MDPs over black-box decision functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a risk forest on a COMPAS-format CSV; writes the ensemble JSON and a metrics CSV.
    TrainForest {
        /// COMPAS-format CSV.
        #[arg(long)]
        data: PathBuf,
        /// Training config JSON (seed, variant, charge dictionary, forest settings).
        #[arg(long)]
        config: PathBuf,
        /// Ensemble JSON to write.
        #[arg(long)]
        out: PathBuf,
        /// Metrics CSV to write [default: <out stem>.metrics.csv].
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Advise one action at a start state.
    Advise {
        /// Run config naming the domain.
        #[arg(long)]
        config: PathBuf,
        /// Start state JSON; the domain's default start otherwise.
        #[arg(long)]
        state: Option<PathBuf>,
        /// bfs, greedy, random, gradient, mcts or pay_max.
        #[arg(long, default_value = "bfs")]
        policy: String,
        /// MCTS iterations, or the BFS node cap.
        #[arg(long)]
        budget: Option<u64>,
        /// Remaining resources (months for the realistic credit domain).
        #[arg(long)]
        resources: Option<u32>,
        /// Seed for randomized policies [default: the config's seed].
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the advice as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the comparison and group reports of a run config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output directory [default: the config's output_dir].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the greedy-optimality, straightness and greedy-gap checks.
    CheckTheorems {
        /// Directory for theorems.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random states per domain for the one-resource check.
        #[arg(long, default_value_t = 100)]
        states: usize,
        /// Risk ensemble JSON; adds the recidivism domain (needs --data and --charges).
        #[arg(long, requires_all = ["data", "charges"])]
        ensemble: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        charges: Option<PathBuf>,
    },
    /// Validate and normalise a query-cache CSV, or generate one from the synthetic score.
    BuildCache {
        /// Cache CSV to validate.
        #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
        input: Option<PathBuf>,
        /// Generate this many random questionnaire points instead.
        #[arg(long)]
        synthetic: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Schema JSON [default: the credit questionnaire].
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code() as u8;
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: Command) -> Result<u8> {
    match cmd {
        Command::TrainForest { data, config, out, metrics } => train_forest(&data, &config, &out, metrics).map(|_| 0),
        Command::Advise { config, state, policy, budget, resources, seed, out } => {
            let cfg = RunConfig::load(&config)?;
            let policy = PolicyConfig::from_cli(&policy, budget)?;
            let seed = seed.unwrap_or(cfg.seed);
            let a = advise(&cfg, state.as_deref(), &policy, resources, seed)?;
            println!("policy: {}", a.policy);
            println!("resources: {}", a.resources);
            println!("current decision: {}", a.current);
            match &a.action {
                None => println!("no actions available"),
                Some(act) => {
                    println!("advised action: {act}");
                    if let Some(v) = a.value {
                        println!("optimal expected decision: {v}");
                    }
                    for (label, q) in &a.q_values {
                        println!("  {label}\t{q}");
                    }
                }
            }
            if let Some(p) = out {
                crate::io::write_json(&p, &a)?;
            }
            Ok(0)
        }
        Command::Experiment { config, out, seed } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let res = run_experiment(&cfg, &dir)?;
            for f in &res.files {
                println!("wrote {}", f.display());
            }
            if res.failures > 0 {
                eprintln!("{} cell(s) failed; see failures.csv", res.failures);
                return Ok(1);
            }
            Ok(0)
        }
        Command::CheckTheorems { out, seed, states, ensemble, data, charges } => {
            let risk = match (ensemble, data, charges) {
                (Some(e), Some(d), Some(c)) => {
                    let ensemble = Arc::new(read_ensemble(&e)?);
                    let variant = ScoreVariant::ALL
                        .into_iter()
                        .find(|v| v.schema() == ensemble.schema)
                        .ok_or_else(|| AgencyError::Config("ensemble schema matches no score variant".into()))?;
                    let records = load_compas(&d, &ChargeDictionary::load(&c)?)?.records;
                    Some(RiskInputs { variant, ensemble, records })
                }
                _ => None,
            };
            let rep = run_suite(&SuiteOptions { n_states: states, seed, risk })?;
            for r in &rep.rows {
                println!("{} {} {}: {} (expect {})", if r.pass { "PASS" } else { "FAIL" }, r.check, r.subject, r.value, r.expect);
            }
            if let Some(dir) = out {
                write_text(&dir.join("theorems.csv"), &rep.to_csv())?;
            }
            Ok(if rep.all_pass() { 0 } else { 1 })
        }
        Command::BuildCache { input, synthetic, seed, schema, out } => {
            let schema: Schema = match schema {
                Some(p) => read_json(&p).map_err(|e| AgencyError::Config(e.to_string()))?,
                None => questionnaire_schema(),
            };
            let points = match (input, synthetic) {
                (Some(p), _) => read_cache_points(&p, &schema)?,
                (None, Some(n)) if n > 0 => {
                    if schema != questionnaire_schema() {
                        return Err(AgencyError::Config("--synthetic generates questionnaire points only".into()));
                    }
                    synthetic_cache_points(n, seed)
                }
                _ => return Err(AgencyError::Config("--synthetic needs a positive count".into())),
            };
            write_cache_csv(&out, &schema, &points)?;
            println!("wrote {} points to {}", points.len(), out.display());
            Ok(0)
        }
    }
}

fn train_forest(data: &Path, config: &Path, out: &Path, metrics: Option<PathBuf>) -> Result<()> {
    let (cfg, charges) = TrainConfig::load(config)?;
    let variant = cfg.score_variant()?;
    let dict = ChargeDictionary::load(&charges)?;
    let loaded = load_compas(data, &dict)?;
    if loaded.records.is_empty() {
        return Err(AgencyError::Failed(format!("{}: no usable rows", data.display())));
    }
    let (models, m, _) = train_models(&loaded.records, &[variant], &cfg.forest, cfg.test_fraction, cfg.seed)?;
    let m = &m[0];
    if m.degenerate {
        eprintln!("warning: every training label is the same class; the forest is constant");
    }
    write_ensemble(out, &models[0].1)?;
    let metrics = metrics.unwrap_or_else(|| {
        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "ensemble".into());
        out.with_file_name(format!("{stem}.metrics.csv"))
    });
    let text = format!(
        "variant,auc,accuracy,n_train,n_test,dropped_rows\n{},{},{},{},{},{}\n",
        m.variant, m.auc, m.accuracy, m.n_train, m.n_test, loaded.dropped
    );
    write_text(&metrics, &text)?;
    println!("held-out AUC {} accuracy {} ({} train / {} test rows)", m.auc, m.accuracy, m.n_train, m.n_test);
    println!("wrote {} and {}", out.display(), metrics.display());
    Ok(())
}
