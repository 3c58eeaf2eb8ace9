//! Continuous feature spaces where each action shifts the feature vector by
//! a fixed displacement. Used with the synthetic surfaces.

use alloc::borrow::Cow;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::decision_fn::{DecisionFunction, Preset, SharedDecision};
use crate::mdp::{ActionId, AgencyMdp, AgencyState, Outcome};
use crate::policies::DisplacementActions;
use crate::{math, Error, Result};

/// Slack allowed when checking that a move stays inside the box.
const BOX_SLACK: f64 = 1e-9;

#[derive(Clone)]
pub struct MoveMdp {
    df: SharedDecision,
    labels: Vec<String>,
    moves: Vec<Vec<f64>>,
    bounds: Option<Vec<(f64, f64)>>,
    start: AgencyState,
}

impl core::fmt::Debug for MoveMdp {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MoveMdp")
            .field("labels", &self.labels)
            .field("bounds", &self.bounds)
            .field("start", &self.start)
            .finish()
    }
}

impl MoveMdp {
    /// `bounds`, when given, makes moves that leave the box illegal.
    pub fn new(
        df: SharedDecision,
        actions: Vec<(String, Vec<f64>)>,
        bounds: Option<Vec<(f64, f64)>>,
        start: Vec<f64>,
        resources: u32,
    ) -> Result<Self> {
        let dim = df.schema().len();
        if !df.schema().all_numeric() {
            return Err(Error::Unsupported(String::from("move domains need numeric features")));
        }
        if actions.is_empty() {
            return Err(Error::InvalidParams(String::from("at least one action is required")));
        }
        if let Some((name, _)) = actions.iter().find(|(_, d)| d.len() != dim || d.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidParams(format!("displacement of `{name}` does not fit the schema")));
        }
        if bounds.as_ref().is_some_and(|b| b.len() != dim) {
            return Err(Error::InvalidParams(String::from("bounds do not fit the schema")));
        }
        df.schema().validate(&start)?;
        let (labels, moves) = actions.into_iter().unzip();
        let mdp = MoveMdp { df, labels, moves, bounds, start: AgencyState::new(start, resources) };
        if !mdp.inside(&mdp.start.features) {
            return Err(Error::InvalidParams(String::from("start lies outside the bounds")));
        }
        Ok(mdp)
    }

    /// The bimodal line: `left`, `stay`, `right` unit moves on the preset's
    /// interval, starting at 0.
    pub fn fig1(resources: u32) -> Self {
        let s = Preset::Fig1Default.build();
        let bounds = s.domain().to_vec();
        Self::new(
            Arc::new(s),
            vec![
                (String::from("left"), vec![-1.0]),
                (String::from("stay"), vec![0.0]),
                (String::from("right"), vec![1.0]),
            ],
            Some(bounds),
            vec![0.0],
            resources,
        )
        .expect("preset domain is valid")
    }

    /// The curved monotone square: unit moves along the axes, starting at
    /// the origin corner.
    pub fn fig2(resources: u32) -> Self {
        let s = Preset::Fig2Default.build();
        let bounds = s.domain().to_vec();
        Self::new(Arc::new(s), grid_moves(2, 1.0), Some(bounds), vec![0.0, 0.0], resources)
            .expect("preset domain is valid")
    }

    /// `k` unit moves spread evenly around the circle, unbounded.
    pub fn compass(df: SharedDecision, k: usize, step: f64, start: Vec<f64>, resources: u32) -> Result<Self> {
        if df.schema().len() != 2 || k < 3 {
            return Err(Error::InvalidParams(String::from("compass moves need two features and k >= 3")));
        }
        let actions = (0..k)
            .map(|j| {
                let t = 2.0 * core::f64::consts::PI * j as f64 / k as f64;
                (format!("dir{j}"), vec![step * libm::cos(t), step * libm::sin(t)])
            })
            .collect();
        Self::new(df, actions, None, start, resources)
    }

    /// A 1-D line with `left`, `stay`, `right`, unbounded.
    pub fn line(df: SharedDecision, step: f64, start: f64, resources: u32) -> Result<Self> {
        let actions = vec![
            (String::from("left"), vec![-step]),
            (String::from("stay"), vec![0.0]),
            (String::from("right"), vec![step]),
        ];
        Self::new(df, actions, None, vec![start], resources)
    }

    pub fn with_start(&self, start: Vec<f64>, resources: u32) -> Result<Self> {
        self.df.schema().validate(&start)?;
        let mut m = self.clone();
        m.start = AgencyState::new(start, resources);
        if !m.inside(&m.start.features) {
            return Err(Error::InvalidParams(String::from("start lies outside the bounds")));
        }
        Ok(m)
    }

    pub fn with_resources(&self, resources: u32) -> Self {
        let mut m = self.clone();
        m.start.resources = resources;
        m
    }

    pub fn bounds(&self) -> Option<&[(f64, f64)]> {
        self.bounds.as_deref()
    }

    pub fn shared_decision(&self) -> SharedDecision {
        self.df.clone()
    }

    pub fn action_by_label(&self, label: &str) -> Option<ActionId> {
        self.labels.iter().position(|l| l == label).map(ActionId)
    }

    fn inside(&self, x: &[f64]) -> bool {
        match &self.bounds {
            None => true,
            Some(b) => x.iter().zip(b).all(|(&v, &(lo, hi))| v >= lo - BOX_SLACK && v <= hi + BOX_SLACK),
        }
    }

    fn moved(&self, x: &[f64], a: ActionId) -> Vec<f64> {
        x.iter().zip(&self.moves[a.0]).map(|(v, d)| v + d).collect()
    }
}

/// `+`/`-` unit steps along each axis, labelled by axis name: for two axes
/// the order is right, up, left, down.
pub fn grid_moves(dim: usize, step: f64) -> Vec<(String, Vec<f64>)> {
    const NAMES2: [&str; 4] = ["right", "up", "left", "down"];
    let mut out = Vec::with_capacity(2 * dim);
    for sign in [1.0, -1.0] {
        for i in 0..dim {
            let mut d = vec![0.0; dim];
            d[i] = sign * step;
            let label = if dim == 2 {
                String::from(NAMES2[if sign > 0.0 { i } else { 2 + i }])
            } else {
                format!("{}{}", if sign > 0.0 { '+' } else { '-' }, i)
            };
            out.push((label, d));
        }
    }
    out
}

impl AgencyMdp for MoveMdp {
    type State = AgencyState;

    fn decision(&self) -> &dyn DecisionFunction {
        &*self.df
    }

    fn action_labels(&self) -> &[String] {
        &self.labels
    }

    fn initial_state(&self) -> AgencyState {
        self.start.clone()
    }

    fn features<'s>(&self, s: &'s AgencyState) -> Cow<'s, [f64]> {
        Cow::Borrowed(&s.features)
    }

    fn push_legal(&self, s: &AgencyState, out: &mut Vec<ActionId>) {
        for i in 0..self.moves.len() {
            if self.inside(&self.moved(&s.features, ActionId(i))) {
                out.push(ActionId(i));
            }
        }
    }

    fn transition(&self, s: &AgencyState, a: ActionId) -> Vec<Outcome<AgencyState>> {
        let next = AgencyState { features: self.moved(&s.features, a).into(), resources: s.resources - 1, extras: s.extras.clone() };
        vec![Outcome::certain(next)]
    }
}

impl DisplacementActions for MoveMdp {
    fn displacement(&self, a: ActionId) -> &[f64] {
        &self.moves[a.0]
    }
}

/// Euclidean length of a move; zero for `stay`.
pub fn move_length(mdp: &MoveMdp, a: ActionId) -> f64 {
    math::norm(mdp.displacement(a))
}
