use std::path::Path;

use agency_core::decision_fn::{Node, Schema, Tree, TreeEnsemble};
use serde::{Deserialize, Serialize};

use crate::{AgencyError, Result};

/// On-disk ensemble: `{schema, trees: [{nodes: [...]}], aggregation: "mean"}`
/// with node 0 the root of each tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleDoc {
    pub schema: Schema,
    pub trees: Vec<TreeDoc>,
    pub aggregation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDoc {
    pub nodes: Vec<NodeDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum NodeDoc {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { leaf: bool, value: f64 },
}

impl From<&TreeEnsemble> for EnsembleDoc {
    fn from(e: &TreeEnsemble) -> Self {
        let trees = e
            .trees
            .iter()
            .map(|t| TreeDoc {
                nodes: t
                    .nodes
                    .iter()
                    .map(|n| match *n {
                        Node::Split { feature, threshold, left, right } => {
                            NodeDoc::Split { feature, threshold, left, right }
                        }
                        Node::Leaf { value } => NodeDoc::Leaf { leaf: true, value },
                    })
                    .collect(),
            })
            .collect();
        EnsembleDoc { schema: e.schema.clone(), trees, aggregation: "mean".into() }
    }
}

impl EnsembleDoc {
    pub fn into_ensemble(self) -> std::result::Result<TreeEnsemble, String> {
        if self.aggregation != "mean" {
            return Err(format!("unsupported aggregation `{}`", self.aggregation));
        }
        let mut trees = Vec::with_capacity(self.trees.len());
        for t in self.trees {
            let mut nodes = Vec::with_capacity(t.nodes.len());
            for n in t.nodes {
                nodes.push(match n {
                    NodeDoc::Split { feature, threshold, left, right } => Node::Split { feature, threshold, left, right },
                    NodeDoc::Leaf { leaf: true, value } => Node::Leaf { value },
                    NodeDoc::Leaf { leaf: false, .. } => return Err("leaf node with `leaf: false`".into()),
                });
            }
            trees.push(Tree { nodes });
        }
        TreeEnsemble::new(self.schema, trees).map_err(|e| e.to_string())
    }
}

pub fn write_ensemble(path: &Path, e: &TreeEnsemble) -> Result<()> {
    super::write_json(path, &EnsembleDoc::from(e))
}

pub fn read_ensemble(path: &Path) -> Result<TreeEnsemble> {
    let doc: EnsembleDoc = super::read_json(path)?;
    doc.into_ensemble().map_err(|reason| AgencyError::Failed(format!("{}: {reason}", path.display())))
}
