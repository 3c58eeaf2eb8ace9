//! Credit scoring: a ten-question ordinal questionnaire, an additive
//! stand-in score, the "simple" questionnaire MDP and the "realistic"
//! monthly household MDP whose state is projected onto the questionnaire.

mod household;
mod questionnaire;

pub use household::{
    apply_month, build_realistic_credit_mdp, project_realistic_state, AxisBuckets, BucketTable, Card,
    HouseholdState, MonthlyAction, RealisticCreditMdp, RealisticPreset, Scenario,
};
pub use questionnaire::{
    build_simple_credit_mdp, questionnaire_schema, sample_questionnaires, synthetic_fico, Axis, QuestionnaireState,
    ScoreTable, SimpleCreditMdp, SyntheticFico, SyntheticScore, AXES, SCORE_MAX, SCORE_MIN,
};
