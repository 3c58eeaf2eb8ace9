use alloc::borrow::Cow;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decision_fn::{DecisionFunction, Feature, FeatureKind, Schema, SharedDecision};
use crate::mdp::{ActionId, AgencyMdp, AgencyState, Outcome};
use crate::seed::derive_rng;
use crate::{math, Error, Result};

pub const SCORE_MIN: f64 = 300.0;
pub const SCORE_MAX: f64 = 850.0;

/// Question axes in schema order. Level 0 is the first answer on each
/// question; whether higher levels help or hurt depends on the axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Open revolving accounts: 0, 1, ..., 6, 7+.
    OpenCards,
    /// Age of the oldest account: <6m, 6-12m, 1-2y, 2-5y, 5-10y, 10y+.
    OldestAccountAge,
    /// Months since the newest account was opened: <3, 3-6, 6-12, 12-24, 24+.
    NewestAccountAge,
    /// Hard inquiries in the last year: 0, 1, 2, 3, 4+.
    RecentInquiries,
    /// Last missed payment: never, 24m+ ago, 12-24m, 6-12m, <6m.
    MissedPaymentRecency,
    /// Revolving utilization: <1%, 1-10%, 10-30%, 30-50%, 50-75%, 75%+.
    Utilization,
    /// Total revolving debt: none, <1k, 1k-5k, 5k-15k, 15k+.
    TotalDebt,
    /// Missed payments on record: 0, 1, 2, 3-4, 5+.
    MissedPaymentCount,
    /// Installment loans: 0, 1, 2, 3+.
    InstallmentLoans,
    /// Public-record derogatory: none, 7y+ ago, 2-7y, <2y.
    Derogatory,
}

pub const AXES: [Axis; 10] = [
    Axis::OpenCards,
    Axis::OldestAccountAge,
    Axis::NewestAccountAge,
    Axis::RecentInquiries,
    Axis::MissedPaymentRecency,
    Axis::Utilization,
    Axis::TotalDebt,
    Axis::MissedPaymentCount,
    Axis::InstallmentLoans,
    Axis::Derogatory,
];

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::OpenCards => "open_cards",
            Axis::OldestAccountAge => "oldest_account_age",
            Axis::NewestAccountAge => "newest_account_age",
            Axis::RecentInquiries => "recent_inquiries",
            Axis::MissedPaymentRecency => "missed_payment_recency",
            Axis::Utilization => "utilization",
            Axis::TotalDebt => "total_debt",
            Axis::MissedPaymentCount => "missed_payment_count",
            Axis::InstallmentLoans => "installment_loans",
            Axis::Derogatory => "derogatory",
        }
    }

    pub fn levels(self) -> u32 {
        match self {
            Axis::OpenCards => 8,
            Axis::OldestAccountAge | Axis::Utilization => 6,
            Axis::InstallmentLoans | Axis::Derogatory => 4,
            _ => 5,
        }
    }

    pub fn index(self) -> usize {
        AXES.iter().position(|&a| a == self).unwrap()
    }
}

pub fn questionnaire_schema() -> Schema {
    Schema::new(AXES.iter().map(|a| Feature::ordinal(a.name(), a.levels())).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuestionnaireState {
    pub answers: [u32; 10],
}

impl QuestionnaireState {
    pub fn validate(&self) -> Result<()> {
        for (a, &v) in AXES.iter().zip(&self.answers) {
            if v >= a.levels() {
                return Err(Error::FeatureOutOfRange { name: String::from(a.name()), value: v as f64 });
            }
        }
        Ok(())
    }

    pub fn features(&self) -> Vec<f64> {
        self.answers.iter().map(|&v| v as f64).collect()
    }

    pub fn from_features(x: &[f64]) -> Result<Self> {
        questionnaire_schema().validate(x)?;
        let mut answers = [0; 10];
        for (a, v) in answers.iter_mut().zip(x) {
            *a = *v as u32;
        }
        Ok(QuestionnaireState { answers })
    }

    pub fn get(&self, axis: Axis) -> u32 {
        self.answers[axis.index()]
    }
}

/// Additive points per axis level on top of a base score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub base: f64,
    /// `points[axis][level]`, axes in [`AXES`] order.
    pub points: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn standard() -> Self {
        ScoreTable {
            base: 640.0,
            points: vec![
                vec![-60.0, -15.0, 10.0, 25.0, 35.0, 30.0, 20.0, 5.0],
                vec![-40.0, -20.0, 0.0, 20.0, 40.0, 60.0],
                vec![-30.0, -15.0, -5.0, 0.0, 10.0],
                vec![0.0, -8.0, -20.0, -35.0, -50.0],
                vec![0.0, -10.0, -30.0, -60.0, -90.0],
                vec![60.0, 40.0, 10.0, -30.0, -70.0, -110.0],
                vec![30.0, 15.0, 0.0, -25.0, -50.0],
                vec![20.0, -25.0, -35.0, -60.0, -90.0],
                vec![0.0, 10.0, 15.0, 15.0],
                vec![0.0, -60.0, -100.0, -260.0],
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() != AXES.len() {
            return Err(Error::InvalidParams(String::from("score table needs one row per axis")));
        }
        for (a, row) in AXES.iter().zip(&self.points) {
            if row.len() != a.levels() as usize || row.iter().any(|p| !p.is_finite()) {
                return Err(Error::InvalidParams(format!("score table row `{}` is malformed", a.name())));
            }
        }
        if !self.base.is_finite() {
            return Err(Error::InvalidParams(String::from("score base must be finite")));
        }
        Ok(())
    }

    fn raw(&self, x: &[f64]) -> f64 {
        self.base + self.points.iter().zip(x).map(|(row, &v)| row[v as usize]).sum::<f64>()
    }

    /// The answer on each axis that earns the most points.
    pub fn best_answers(&self) -> QuestionnaireState {
        self.extreme(|a, b| a > b)
    }

    pub fn worst_answers(&self) -> QuestionnaireState {
        self.extreme(|a, b| a < b)
    }

    fn extreme(&self, better: impl Fn(f64, f64) -> bool) -> QuestionnaireState {
        let mut answers = [0; 10];
        for (ans, row) in answers.iter_mut().zip(&self.points) {
            for (i, &p) in row.iter().enumerate() {
                if better(p, row[*ans as usize]) {
                    *ans = i as u32;
                }
            }
        }
        QuestionnaireState { answers }
    }
}

/// Integer score in `[300, 850]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SyntheticScore(pub u16);

/// Deterministic stand-in for a commercial credit score: base plus per-axis
/// points, rounded and clamped to the score range.
#[derive(Clone, Debug)]
pub struct SyntheticFico {
    schema: Schema,
    table: ScoreTable,
}

impl SyntheticFico {
    pub fn new(table: ScoreTable) -> Result<Self> {
        table.validate()?;
        Ok(SyntheticFico { schema: questionnaire_schema(), table })
    }

    pub fn standard() -> Self {
        Self::new(ScoreTable::standard()).expect("standard table is valid")
    }

    pub fn table(&self) -> &ScoreTable {
        &self.table
    }

    pub fn score(&self, q: &QuestionnaireState) -> Result<SyntheticScore> {
        q.validate()?;
        Ok(SyntheticScore(self.value(&q.features()) as u16))
    }
}

impl Default for SyntheticFico {
    fn default() -> Self {
        Self::standard()
    }
}

impl DecisionFunction for SyntheticFico {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn value(&self, x: &[f64]) -> f64 {
        math::round(self.table.raw(x)).clamp(SCORE_MIN, SCORE_MAX)
    }
}

pub fn synthetic_fico(q: &QuestionnaireState) -> Result<SyntheticScore> {
    SyntheticFico::standard().score(q)
}

/// Uniformly random answer sheets.
pub fn sample_questionnaires(n: usize, seed: u64) -> Vec<QuestionnaireState> {
    let mut rng = derive_rng(seed, "questionnaire", 0);
    (0..n)
        .map(|_| {
            let mut answers = [0; 10];
            for (v, a) in answers.iter_mut().zip(AXES) {
                *v = rng.random_range(0..a.levels());
            }
            QuestionnaireState { answers }
        })
        .collect()
}

/// Any answer can be moved one level up or down per step; action `2i` is
/// "axis i -1" and `2i + 1` is "axis i +1".
#[derive(Clone)]
pub struct SimpleCreditMdp {
    df: SharedDecision,
    labels: Vec<String>,
    levels: Vec<u32>,
    start: AgencyState,
}

impl core::fmt::Debug for SimpleCreditMdp {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SimpleCreditMdp").field("start", &self.start).finish()
    }
}

pub fn build_simple_credit_mdp(df: SharedDecision, initial: &QuestionnaireState, resources: u32) -> Result<SimpleCreditMdp> {
    let schema = df.schema();
    if schema.len() != AXES.len() {
        return Err(Error::SchemaLength { expected: AXES.len(), got: schema.len() });
    }
    let mut levels = Vec::with_capacity(AXES.len());
    for f in schema.features() {
        match f.kind {
            FeatureKind::Ordinal { levels: n } => levels.push(n),
            _ => return Err(Error::InvalidParams(format!("questionnaire axis `{}` must be ordinal", f.name))),
        }
    }
    let x = initial.features();
    schema.validate(&x)?;
    let labels = schema
        .features()
        .iter()
        .flat_map(|f| [format!("{} -1", f.name), format!("{} +1", f.name)])
        .collect();
    Ok(SimpleCreditMdp { df, labels, levels, start: AgencyState::new(x, resources) })
}

impl SimpleCreditMdp {
    pub fn restart(&self, initial: &QuestionnaireState, resources: u32) -> Result<Self> {
        let x = initial.features();
        self.df.schema().validate(&x)?;
        let mut m = self.clone();
        m.start = AgencyState::new(x, resources);
        Ok(m)
    }

    pub fn shared_decision(&self) -> SharedDecision {
        self.df.clone()
    }
}

impl AgencyMdp for SimpleCreditMdp {
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
        for (i, (&v, &n)) in s.features.iter().zip(&self.levels).enumerate() {
            if v >= 1.0 {
                out.push(ActionId(2 * i));
            }
            if v + 1.0 < n as f64 {
                out.push(ActionId(2 * i + 1));
            }
        }
    }

    fn transition(&self, s: &AgencyState, a: ActionId) -> Vec<Outcome<AgencyState>> {
        let mut next = s.clone();
        next.features[a.0 / 2] += if a.0.is_multiple_of(2) { -1.0 } else { 1.0 };
        next.resources -= 1;
        vec![Outcome::certain(next)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::bfs_optimal;
    use alloc::sync::Arc;

    #[test]
    fn extremes_clamp() {
        let f = SyntheticFico::standard();
        assert_eq!(f.score(&f.table().best_answers()).unwrap(), SyntheticScore(850));
        assert_eq!(f.score(&f.table().worst_answers()).unwrap(), SyntheticScore(300));
    }

    #[test]
    fn inquiries_never_help() {
        let f = SyntheticFico::standard();
        for q in sample_questionnaires(200, 4) {
            let i = Axis::RecentInquiries.index();
            if q.answers[i] + 1 < Axis::RecentInquiries.levels() {
                let mut more = q.clone();
                more.answers[i] += 1;
                assert!(f.score(&more).unwrap() <= f.score(&q).unwrap());
            }
        }
    }

    #[test]
    fn declared_monotonicities_hold() {
        let t = ScoreTable::standard();
        let nonincreasing = [
            Axis::RecentInquiries,
            Axis::MissedPaymentRecency,
            Axis::Utilization,
            Axis::TotalDebt,
            Axis::MissedPaymentCount,
            Axis::Derogatory,
        ];
        for a in nonincreasing {
            assert!(t.points[a.index()].windows(2).all(|w| w[1] <= w[0]), "{}", a.name());
        }
        for a in [Axis::OldestAccountAge, Axis::NewestAccountAge] {
            assert!(t.points[a.index()].windows(2).all(|w| w[1] >= w[0]), "{}", a.name());
        }
        let cards = &t.points[Axis::OpenCards.index()];
        let peak = cards.iter().enumerate().fold(0, |b, (i, &p)| if p > cards[b] { i } else { b });
        assert!(cards[..=peak].windows(2).all(|w| w[1] >= w[0]));
        assert!(cards[peak..].windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn out_of_range_answer_is_rejected() {
        let mut q = ScoreTable::standard().best_answers();
        q.answers[0] = 8;
        assert!(synthetic_fico(&q).is_err());
    }

    fn mid() -> QuestionnaireState {
        QuestionnaireState { answers: [3, 2, 2, 2, 2, 2, 2, 2, 1, 1] }
    }

    #[test]
    fn interior_state_has_all_twenty_actions() {
        let m = build_simple_credit_mdp(Arc::new(SyntheticFico::standard()), &mid(), 3).unwrap();
        assert_eq!(m.legal_actions(&m.initial_state()).unwrap().len(), 20);
    }

    #[test]
    fn level_zero_blocks_decrement() {
        let mut q = mid();
        q.answers[3] = 0;
        let m = build_simple_credit_mdp(Arc::new(SyntheticFico::standard()), &q, 3).unwrap();
        let s = m.initial_state();
        assert!(!m.is_legal(&s, ActionId(6)));
        assert!(m.is_legal(&s, ActionId(7)));
        assert_eq!(m.label(ActionId(6)), "recent_inquiries -1");
    }

    #[test]
    fn zero_budget_is_terminal() {
        let m = build_simple_credit_mdp(Arc::new(SyntheticFico::standard()), &mid(), 0).unwrap();
        let s = m.initial_state();
        assert!(m.is_terminal(&s));
        assert_eq!(crate::mdp::reward(&m, &s).unwrap(), synthetic_fico(&mid()).unwrap().0 as f64);
    }

    #[test]
    fn bfs_value_grows_with_budget() {
        let m = build_simple_credit_mdp(Arc::new(SyntheticFico::standard()), &mid(), 1).unwrap();
        let mut last = 0.0;
        for r in 1..=3 {
            let m = m.restart(&mid(), r).unwrap();
            let v = bfs_optimal(&m, &m.initial_state()).unwrap().value;
            assert!(v >= last);
            last = v;
        }
    }
}
