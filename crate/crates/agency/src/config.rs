//! Run configuration: one JSON file per run, validated in full before any
//! work starts. Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use agency_core::decision_fn::{ForestConfig, Preset};
use agency_core::domains::recidivism::ScoreVariant;
use serde::{Deserialize, Serialize};

use crate::{AgencyError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub domain: DomainConfig,
    #[serde(default)]
    pub compare: Option<CompareConfig>,
    #[serde(default)]
    pub group: Option<GroupConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    /// A synthetic surface. `fig1_default` and `fig2_default` use their
    /// figure action sets; other presets move in 8 compass directions.
    Synthetic {
        preset: String,
        #[serde(default)]
        start: Option<Vec<f64>>,
        /// Draw starts after the first uniformly from the preset's box.
        #[serde(default)]
        uniform_starts: bool,
    },
    SimpleCredit {
        /// Query-cache CSV over the questionnaire; the synthetic score otherwise.
        #[serde(default)]
        cache: Option<PathBuf>,
    },
    RealisticCredit {
        scenario: PathBuf,
        /// Replaces the preset's bucket table.
        #[serde(default)]
        bucket_table: Option<PathBuf>,
    },
    Recidivism {
        data: PathBuf,
        charges: PathBuf,
        #[serde(default)]
        forest: ForestSettings,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
        /// Subjects are drawn from held-out records scoring at least this
        /// under the full model.
        #[serde(default = "default_cohort_min_score")]
        cohort_min_score: u8,
        #[serde(default = "default_variants")]
        variants: Vec<String>,
    },
}

fn default_test_fraction() -> f64 {
    0.3
}

fn default_cohort_min_score() -> u8 {
    5
}

fn default_variants() -> Vec<String> {
    ScoreVariant::ALL.iter().map(|v| v.name().to_string()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestSettings {
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    #[serde(default = "default_min_leaf")]
    pub min_leaf: usize,
    #[serde(default = "default_bag_fraction")]
    pub bag_fraction: f64,
    #[serde(default)]
    pub max_features: Option<usize>,
}

fn default_n_trees() -> usize {
    100
}
fn default_max_depth() -> usize {
    8
}
fn default_min_leaf() -> usize {
    5
}
fn default_bag_fraction() -> f64 {
    0.8
}

impl Default for ForestSettings {
    fn default() -> Self {
        ForestSettings {
            n_trees: default_n_trees(),
            max_depth: default_max_depth(),
            min_leaf: default_min_leaf(),
            bag_fraction: default_bag_fraction(),
            max_features: None,
        }
    }
}

impl ForestSettings {
    pub fn to_config(&self, seed: u64) -> ForestConfig {
        ForestConfig {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            bag_fraction: self.bag_fraction,
            max_features: self.max_features,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 || self.min_leaf == 0 {
            return Err(AgencyError::Config("forest n_trees, max_depth and min_leaf must be positive".into()));
        }
        if !(self.bag_fraction > 0.0 && self.bag_fraction <= 1.0) {
            return Err(AgencyError::Config("forest bag_fraction must be in (0, 1]".into()));
        }
        if self.max_features == Some(0) {
            return Err(AgencyError::Config("forest max_features must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    Bfs {
        #[serde(default)]
        node_cap: Option<usize>,
    },
    Greedy,
    Random,
    Gradient {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Mcts {
        iterations: u64,
        #[serde(default)]
        exploration: Option<f64>,
    },
    /// Pay as much as cash allows every month (realistic credit only).
    PayMax,
}

fn default_epsilon() -> f64 {
    1.0
}

impl PolicyConfig {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyConfig::Bfs { .. } => "bfs",
            PolicyConfig::Greedy => "greedy",
            PolicyConfig::Random => "random",
            PolicyConfig::Gradient { .. } => "gradient",
            PolicyConfig::Mcts { .. } => "mcts",
            PolicyConfig::PayMax => "pay_max",
        }
    }

    /// Builds a policy from a CLI name and optional budget.
    pub fn from_cli(name: &str, budget: Option<u64>) -> Result<Self> {
        Ok(match name {
            "bfs" => PolicyConfig::Bfs { node_cap: budget.map(|b| b as usize) },
            "greedy" => PolicyConfig::Greedy,
            "random" => PolicyConfig::Random,
            "gradient" => PolicyConfig::Gradient { epsilon: default_epsilon() },
            "mcts" => PolicyConfig::Mcts { iterations: budget.unwrap_or(1000), exploration: None },
            "pay_max" => PolicyConfig::PayMax,
            other => return Err(AgencyError::Config(format!("unknown policy `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub policies: Vec<PolicyConfig>,
    pub resources: Vec<u32>,
    #[serde(default = "default_n_starts")]
    pub n_starts: usize,
}

fn default_n_starts() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub ks: Vec<u32>,
    #[serde(default = "default_group_iterations")]
    pub mcts_iterations: u64,
    /// Held-out records sampled for the report, regardless of risk.
    pub n_records: usize,
}

fn default_group_iterations() -> u64 {
    200
}

impl RunConfig {
    /// Reads and validates; any problem is a config error.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AgencyError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| AgencyError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn variants(&self) -> Vec<ScoreVariant> {
        match &self.domain {
            DomainConfig::Recidivism { variants, .. } => ScoreVariant::ALL
                .into_iter()
                .filter(|v| variants.iter().any(|n| n == v.name()))
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AgencyError::Config(m));
        if self.name.is_empty() {
            return bad("`name` must be nonempty".into());
        }
        let input = |p: &Path, what: &str| -> Result<()> {
            let full = self.resolve(p);
            if full.is_file() {
                Ok(())
            } else {
                Err(AgencyError::Config(format!("{what} file {} does not exist", full.display())))
            }
        };
        match &self.domain {
            DomainConfig::Synthetic { preset, start, .. } => {
                let Some(p) = Preset::from_name(preset) else {
                    return bad(format!("unknown synthetic preset `{preset}`"));
                };
                if let Some(s) = start {
                    let dim = p.build().domain().len();
                    if s.len() != dim || s.iter().any(|v| !v.is_finite()) {
                        return bad(format!("start must be {dim} finite numbers"));
                    }
                }
            }
            DomainConfig::SimpleCredit { cache } => {
                if let Some(c) = cache {
                    input(c, "cache")?;
                }
            }
            DomainConfig::RealisticCredit { scenario, bucket_table } => {
                input(scenario, "scenario")?;
                if let Some(b) = bucket_table {
                    input(b, "bucket table")?;
                }
            }
            DomainConfig::Recidivism { data, charges, forest, test_fraction, cohort_min_score, variants } => {
                input(data, "data")?;
                input(charges, "charge dictionary")?;
                forest.validate()?;
                if !(*test_fraction > 0.0 && *test_fraction < 1.0) {
                    return bad("test_fraction must be in (0, 1)".into());
                }
                if !(1..=10).contains(cohort_min_score) {
                    return bad("cohort_min_score must be in 1..=10".into());
                }
                if variants.is_empty() {
                    return bad("at least one score variant is required".into());
                }
                if let Some(v) = variants.iter().find(|n| ScoreVariant::ALL.iter().all(|s| s.name() != n.as_str())) {
                    return bad(format!("unknown score variant `{v}`"));
                }
            }
        }
        if self.compare.is_none() && self.group.is_none() {
            return bad("nothing to run: add a `compare` or `group` section".into());
        }
        if let Some(c) = &self.compare {
            if c.policies.is_empty() || c.resources.is_empty() || c.n_starts == 0 {
                return bad("compare needs policies, a nonempty resource list and n_starts >= 1".into());
            }
            for p in &c.policies {
                self.check_policy(p)?;
            }
        }
        if let Some(g) = &self.group {
            if !matches!(self.domain, DomainConfig::Recidivism { .. }) {
                return bad("the group report needs the recidivism domain".into());
            }
            if g.ks.is_empty() || g.n_records == 0 || g.mcts_iterations == 0 {
                return bad("group needs ks, n_records >= 1 and mcts_iterations >= 1".into());
            }
        }
        Ok(())
    }

    pub fn check_policy(&self, p: &PolicyConfig) -> Result<()> {
        let bad = |m: String| Err(AgencyError::Config(m));
        match p {
            PolicyConfig::Bfs { node_cap: Some(0) } => bad("bfs node_cap must be positive".into()),
            PolicyConfig::Mcts { iterations: 0, .. } => bad("mcts iterations must be positive".into()),
            PolicyConfig::Mcts { exploration: Some(c), .. } if !(*c >= 0.0 && c.is_finite()) => {
                bad("mcts exploration must be a nonnegative number".into())
            }
            PolicyConfig::Gradient { epsilon } => {
                if !(*epsilon > 0.0 && epsilon.is_finite()) {
                    return bad("gradient epsilon must be positive".into());
                }
                match &self.domain {
                    DomainConfig::Synthetic { .. } => Ok(()),
                    _ => bad("the gradient policy needs a continuous synthetic domain".into()),
                }
            }
            PolicyConfig::PayMax if !matches!(self.domain, DomainConfig::RealisticCredit { .. }) => {
                bad("pay_max only applies to the realistic credit domain".into())
            }
            _ => Ok(()),
        }
    }
}

/// `train-forest` settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_variant")]
    pub variant: String,
    pub charges: PathBuf,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub forest: ForestSettings,
}

fn default_variant() -> String {
    "full".into()
}

impl TrainConfig {
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AgencyError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: TrainConfig =
            serde_json::from_str(&text).map_err(|e| AgencyError::Config(format!("{}: {e}", path.display())))?;
        cfg.forest.validate()?;
        cfg.score_variant()?;
        if !(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0) {
            return Err(AgencyError::Config("test_fraction must be in (0, 1)".into()));
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let charges = if cfg.charges.is_absolute() { cfg.charges.clone() } else { base.join(&cfg.charges) };
        if !charges.is_file() {
            return Err(AgencyError::Config(format!("charge dictionary {} does not exist", charges.display())));
        }
        Ok((cfg, charges))
    }

    pub fn score_variant(&self) -> Result<ScoreVariant> {
        ScoreVariant::ALL
            .into_iter()
            .find(|v| v.name() == self.variant)
            .ok_or_else(|| AgencyError::Config(format!("unknown score variant `{}`", self.variant)))
    }
}
