use std::sync::{Arc, OnceLock};

use agency_core::decision_fn::{
    fd_gradient, make_synthetic, train_forest, DecisionFunction, Feature, FeatureVector, ForestConfig, Preset,
    QueryCache, Schema, SharedDecision, SyntheticKind, Tree, TreeEnsemble,
};
use agency_core::domains::credit::{
    apply_month, build_simple_credit_mdp, project_realistic_state, Axis, HouseholdState, MonthlyAction,
    QuestionnaireState, RealisticCreditMdp, Scenario, SyntheticFico, AXES, SCORE_MAX, SCORE_MIN,
};
use agency_core::domains::recidivism::{
    build_recidivism_mdp, col, train_risk_model, ArresteeRecord, RecidivismMdp, ScoreVariant,
};
use agency_core::domains::{MoveMdp, TableMdp};
use agency_core::mdp::{estimate_policy_value, reward, rollout, AgencyMdp, MdpState};
use agency_core::policies::{
    bfs_optimal, greedy_action, AdvicePolicy, GradientPolicy, Greedy, MctsPolicy, RandomPolicy,
};
use agency_core::seed::rng_from_seed;
use proptest::prelude::*;
use rand::Rng;

fn synthetic_records(n: usize, seed: u64) -> Vec<ArresteeRecord> {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|_| {
            let priors = rng.random_range(0..12u32);
            let age = rng.random_range(18.0..70.0f64).floor();
            let degree = rng.random_range(0..5u32);
            let risk = 0.05 + 0.06 * priors as f64 + 0.05 * degree as f64 - 0.004 * (age - 18.0);
            ArresteeRecord {
                age,
                sex: rng.random_range(0..2),
                race: rng.random_range(0..6),
                charge_type: rng.random_range(0..5),
                charge_degree: degree,
                juv_fel_count: rng.random_range(0..3),
                juv_misd_count: rng.random_range(0..3),
                juv_other_count: rng.random_range(0..3),
                priors_count: priors,
                label: (rng.random::<f64>() < risk) as u8,
            }
        })
        .collect()
}

fn forest(variant: ScoreVariant) -> Arc<TreeEnsemble> {
    static FULL: OnceLock<Arc<TreeEnsemble>> = OnceLock::new();
    static BLIND: OnceLock<Arc<TreeEnsemble>> = OnceLock::new();
    let cell = if variant == ScoreVariant::Full { &FULL } else { &BLIND };
    cell.get_or_init(|| {
        let cfg = ForestConfig { n_trees: 15, max_depth: 5, seed: 3, ..ForestConfig::default() };
        Arc::new(train_risk_model(&synthetic_records(600, 1), variant, &cfg).unwrap().ensemble)
    })
    .clone()
}

fn recidivism(variant: ScoreVariant, rec: &ArresteeRecord, r: u32) -> RecidivismMdp {
    build_recidivism_mdp(forest(variant), variant, rec, r).unwrap()
}

fn fico() -> SharedDecision {
    Arc::new(SyntheticFico::standard())
}

fn realistic(sc: &Scenario, months: u32) -> RealisticCreditMdp {
    sc.mdp(fico(), Some(months)).unwrap()
}

fn arb_questionnaire() -> impl Strategy<Value = QuestionnaireState> {
    AXES.map(|a| 0..a.levels()).prop_map(|answers| QuestionnaireState { answers })
}

fn arb_record() -> impl Strategy<Value = ArresteeRecord> {
    (any::<u64>()).prop_map(|seed| synthetic_records(1, seed).remove(0))
}

/// Every state reachable within `depth` steps, breadth first.
fn reachable<M: AgencyMdp>(m: &M, depth: usize) -> Vec<M::State> {
    let mut frontier = vec![m.initial_state()];
    let mut all = frontier.clone();
    for _ in 0..depth {
        let mut next = Vec::new();
        for s in &frontier {
            if m.is_terminal(s) {
                continue;
            }
            for a in m.legal_actions(s).unwrap() {
                next.extend(m.enumerate_outcomes(s, a).unwrap().into_iter().map(|o| o.state));
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

fn outcomes_sum_to_one<M: AgencyMdp>(m: &M, depth: usize) {
    for s in reachable(m, depth) {
        if m.is_terminal(&s) {
            continue;
        }
        for a in m.legal_actions(&s).unwrap() {
            let out = m.enumerate_outcomes(&s, a).unwrap();
            let total: f64 = out.iter().map(|o| o.probability).sum();
            assert!((total - 1.0).abs() <= 1e-9);
            assert!(out.iter().all(|o| o.probability > 0.0 && o.state.resources() <= s.resources()));
        }
    }
}

#[test]
fn outcome_distributions_are_normalized_near_every_start() {
    outcomes_sum_to_one(&MoveMdp::fig1(4), 3);
    outcomes_sum_to_one(&MoveMdp::fig2(4), 3);
    let q = QuestionnaireState { answers: [2, 2, 2, 2, 2, 2, 2, 2, 1, 1] };
    outcomes_sum_to_one(&build_simple_credit_mdp(fico(), &q, 4).unwrap(), 3);
    for sc in Scenario::shipped() {
        outcomes_sum_to_one(&realistic(&sc, 4), 3);
    }
    let rec = synthetic_records(1, 5).remove(0);
    outcomes_sum_to_one(&recidivism(ScoreVariant::Full, &rec, 4), 3);
    outcomes_sum_to_one(&TableMdp::random_layered(2, 4, 6, 3, true), 3);
}

#[test]
fn evaluation_is_pure() {
    for p in Preset::ALL {
        let s = p.build();
        let x: Vec<f64> = s.domain().iter().map(|(lo, hi)| lo + 0.37 * (hi - lo)).collect();
        let first = s.evaluate(&x).unwrap().to_bits();
        assert!((0..1000).all(|_| s.evaluate(&x).unwrap().to_bits() == first), "{}", p.name());
    }
    let f = forest(ScoreVariant::Full);
    let x = synthetic_records(1, 9)[0].full_features();
    let first = f.predict(&x).to_bits();
    assert!((0..1000).all(|_| f.predict(&x).to_bits() == first));
}

#[test]
fn identical_seeds_identical_forests() {
    let rows: Vec<FeatureVector> = synthetic_records(300, 4).iter().map(|r| r.full_features().into()).collect();
    let labels: Vec<u8> = synthetic_records(300, 4).iter().map(|r| r.label).collect();
    let cfg = ForestConfig { n_trees: 5, max_depth: 4, seed: 11, ..ForestConfig::default() };
    let schema = ScoreVariant::Full.schema();
    let a = train_forest(&schema, &rows, &labels, &cfg).unwrap().ensemble;
    let b = train_forest(&schema, &rows, &labels, &cfg).unwrap().ensemble;
    assert_eq!(a, b);
    let c = train_forest(&schema, &rows, &labels, &ForestConfig { seed: 12, ..cfg }).unwrap().ensemble;
    assert_ne!(a, c);
}

#[test]
fn shipped_scenario_projections_stay_in_range_for_two_years() {
    for sc in Scenario::shipped() {
        let m = realistic(&sc, 24);
        for seed in 0..40 {
            let t = rollout(&m, &RandomPolicy, &m.initial_state(), seed).unwrap();
            assert_eq!(t.len(), 24);
            for s in &t.states {
                project_realistic_state(s, m.preset()).validate().unwrap();
                let score = m.score(s);
                assert!((SCORE_MIN..=SCORE_MAX).contains(&score));
            }
        }
    }
}

#[test]
fn bankruptcy_is_irreversible_and_clears_debt() {
    for sc in Scenario::shipped() {
        let m = realistic(&sc, 12);
        for seed in 0..40 {
            let t = rollout(&m, &RandomPolicy, &m.initial_state(), seed).unwrap();
            for (i, pair) in t.states.windows(2).enumerate() {
                assert!(!(pair[0].bankruptcy && !pair[1].bankruptcy));
                if MonthlyAction::from_id(t.actions[i]) == Some(MonthlyAction::DeclareBankruptcy) {
                    assert_eq!(pair[1].card_debt, pair[0].monthly_spending);
                    let after = project_realistic_state(&pair[1], m.preset());
                    assert_eq!(after.get(Axis::Derogatory), Axis::Derogatory.levels() - 1);
                }
            }
        }
    }
}

#[test]
fn bfs_value_dominates_every_rollout() {
    let mcts = MctsPolicy::iterations(200);
    let check = |v: f64, name: &str, got: f64| assert!(v >= got - 1e-9, "{name}: {got} > {v}");
    for seed in 0..8 {
        let m = TableMdp::random_layered(seed, 3, 5, 3, seed % 2 == 0);
        let s = m.initial_state();
        let v = bfs_optimal(&m, &s).unwrap().value;
        for (name, p) in [("greedy", &Greedy as &dyn AdvicePolicy<TableMdp>), ("random", &RandomPolicy), ("mcts", &mcts)] {
            let e = estimate_policy_value(&m, p, &s, 200, seed).unwrap();
            assert!(v >= e.mean - 4.0 * e.stderr - 1e-9, "{name}");
        }
    }
    for r in 1..=5 {
        for m in [MoveMdp::fig1(r), MoveMdp::fig2(r)] {
            let s = m.initial_state();
            let v = bfs_optimal(&m, &s).unwrap().value;
            check(v, "greedy", rollout(&m, &Greedy, &s, 0).unwrap().final_decision);
            check(v, "gradient", rollout(&m, &GradientPolicy::default(), &s, 0).unwrap().final_decision);
            for seed in 0..5 {
                check(v, "random", rollout(&m, &RandomPolicy, &s, seed).unwrap().final_decision);
                check(v, "mcts", rollout(&m, &mcts, &s, seed).unwrap().final_decision);
            }
        }
    }
}

#[test]
fn recidivism_optimal_score_never_rises_with_budget() {
    for (i, rec) in synthetic_records(6, 21).iter().enumerate() {
        let mut last = f64::INFINITY;
        for r in 1..=3 {
            let m = recidivism(ScoreVariant::Full, rec, r);
            let score = 11.0 - bfs_optimal(&m, &m.initial_state()).unwrap().value;
            assert!(score <= last, "record {i} r={r}");
            last = score;
        }
    }
}

#[test]
fn one_resource_greedy_is_a_maximizer_on_each_domain() {
    let mut rng = rng_from_seed(5);
    let in_max = |best: Vec<agency_core::mdp::ActionId>, g| best.contains(&g);
    for _ in 0..25 {
        let x = rng.random_range(-6.0..8.0);
        let m = MoveMdp::fig1(1).with_start(vec![x], 1).unwrap();
        let s = m.initial_state();
        assert!(in_max(bfs_optimal(&m, &s).unwrap().maximizers(1e-9), greedy_action(&m, &s).unwrap()));
        let m = MoveMdp::fig2(1).with_start(vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)], 1).unwrap();
        let s = m.initial_state();
        assert!(in_max(bfs_optimal(&m, &s).unwrap().maximizers(1e-9), greedy_action(&m, &s).unwrap()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_order_does_not_change_predictions(perm_seed in any::<u64>(), x_seed in any::<u64>()) {
        let f = forest(ScoreVariant::Full);
        let mut trees: Vec<Tree> = f.trees.clone();
        let mut rng = rng_from_seed(perm_seed);
        for i in (1..trees.len()).rev() {
            trees.swap(i, rng.random_range(0..=i));
        }
        let g = TreeEnsemble::new(f.schema.clone(), trees).unwrap();
        let x = synthetic_records(1, x_seed)[0].full_features();
        prop_assert!((f.predict(&x) - g.predict(&x)).abs() <= 1e-12);
    }

    #[test]
    fn cache_answers_with_a_cached_decision(
        pts in prop::collection::vec((0.0..10.0f64, 0.0..10.0f64, 1.0..100.0f64), 1..20),
        q in (0.0..10.0f64, 0.0..10.0f64),
    ) {
        let schema = Schema::new(vec![Feature::numeric("a", 0.0, 10.0), Feature::numeric("b", 0.0, 10.0)]);
        let points: Vec<(FeatureVector, f64)> = pts.iter().map(|&(a, b, d)| (vec![a, b].into(), d)).collect();
        let cache = QueryCache::new(schema, points.clone()).unwrap();
        let d = cache.evaluate(&[q.0, q.1]).unwrap();
        prop_assert!(points.iter().any(|(_, v)| *v == d));
        // the first row holding a point is the one returned for it
        let (p, _) = &points[points.len() - 1];
        let first = points.iter().find(|(x, _)| x == p).unwrap().1;
        prop_assert_eq!(cache.evaluate(p).unwrap(), first);
    }

    #[test]
    fn linear_gradients_are_parallel(w in (0.1..5.0f64, -5.0..5.0f64), x in (0.0..10.0f64, 0.0..10.0f64), y in (0.0..10.0f64, 0.0..10.0f64)) {
        let df = make_synthetic(SyntheticKind::Linear { bias: 100.0, weights: vec![w.0, w.1] }, vec![(0.0, 10.0); 2]).unwrap();
        let g1 = fd_gradient(&df, &[x.0, x.1], 1e-5);
        let g2 = fd_gradient(&df, &[y.0, y.1], 1e-5);
        let n1 = (g1[0] * g1[0] + g1[1] * g1[1]).sqrt();
        let n2 = (g2[0] * g2[0] + g2[1] * g2[1]).sqrt();
        let cos = (g1[0] * g2[0] + g1[1] * g2[1]) / (n1 * n2);
        prop_assert!(cos.clamp(-1.0, 1.0).acos() <= 1e-9 || cos >= 1.0 - 1e-15);
    }

    #[test]
    fn rewards_are_sparse_and_rollouts_bounded(seed in any::<u64>(), depth in 1u32..5, stochastic in any::<bool>()) {
        let m = TableMdp::random_layered(seed, depth, 6, 3, stochastic);
        let t = rollout(&m, &RandomPolicy, &m.initial_state(), seed).unwrap();
        prop_assert!(t.len() <= depth as usize);
        for s in &t.states[..t.states.len() - 1] {
            prop_assert!(!m.is_terminal(s));
            prop_assert_eq!(reward(&m, s).unwrap(), 0.0);
        }
        prop_assert_eq!(reward(&m, t.final_state()).unwrap(), t.final_decision);
        prop_assert_eq!(&t, &rollout(&m, &RandomPolicy, &m.initial_state(), seed).unwrap());
    }

    #[test]
    fn deterministic_estimates_ignore_sample_count(n in 1usize..50, x in -6.0..8.0f64, r in 0u32..5) {
        let m = MoveMdp::fig1(r).with_start(vec![x], r).unwrap();
        let s = m.initial_state();
        let a = estimate_policy_value(&m, &Greedy, &s, n, 3).unwrap();
        let b = estimate_policy_value(&m, &Greedy, &s, 1, 8).unwrap();
        prop_assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        prop_assert_eq!(a.stderr, 0.0);
    }

    #[test]
    fn one_resource_greedy_is_a_maximizer_on_questionnaires(q in arb_questionnaire()) {
        let m = build_simple_credit_mdp(fico(), &q, 1).unwrap();
        let s = m.initial_state();
        prop_assert!(bfs_optimal(&m, &s).unwrap().maximizers(1e-9).contains(&greedy_action(&m, &s).unwrap()));
    }

    #[test]
    fn score_is_monotone_in_penalty_axes(q in arb_questionnaire()) {
        let f = SyntheticFico::standard();
        let base = f.score(&q).unwrap();
        for axis in [Axis::RecentInquiries, Axis::MissedPaymentRecency, Axis::Utilization, Axis::TotalDebt, Axis::MissedPaymentCount, Axis::Derogatory] {
            let i = axis.index();
            if q.answers[i] + 1 < axis.levels() {
                let mut worse = q.clone();
                worse.answers[i] += 1;
                prop_assert!(f.score(&worse).unwrap() <= base);
            }
        }
        for axis in [Axis::OldestAccountAge, Axis::NewestAccountAge] {
            let i = axis.index();
            if q.answers[i] + 1 < axis.levels() {
                let mut older = q.clone();
                older.answers[i] += 1;
                prop_assert!(f.score(&older).unwrap() >= base);
            }
        }
    }

    #[test]
    fn protected_fields_never_change(rec in arb_record(), seed in any::<u64>(), r in 1u32..6) {
        let m = recidivism(ScoreVariant::Full, &rec, r);
        let t = rollout(&m, &RandomPolicy, &m.initial_state(), seed).unwrap();
        let t2 = rollout(&m, &MctsPolicy::iterations(30), &m.initial_state(), seed).unwrap();
        for s in t.states.iter().chain(&t2.states) {
            for c in [col::AGE, col::SEX, col::RACE] {
                prop_assert_eq!(s.features[c], t.states[0].features[c]);
            }
            let score = m.risk_score(s).unwrap();
            prop_assert!((1..=10).contains(&score));
        }
    }

    #[test]
    fn blind_scores_ignore_race_and_sex(rec in arb_record(), race in 0u32..6, sex in 0u32..2) {
        let a = recidivism(ScoreVariant::Blind, &rec, 0);
        let mut other = rec.clone();
        other.race = race;
        other.sex = sex;
        let b = recidivism(ScoreVariant::Blind, &other, 0);
        prop_assert_eq!(a.decide(&a.initial_state()).unwrap(), b.decide(&b.initial_state()).unwrap());
    }

    #[test]
    fn months_conserve_cash(seed in any::<u64>(), months in 1u32..18) {
        for sc in Scenario::shipped() {
            let m = realistic(&sc, months);
            let t = rollout(&m, &RandomPolicy, &m.initial_state(), seed).unwrap();
            for (i, pair) in t.states.windows(2).enumerate() {
                let (s, n) = (&pair[0], &pair[1]);
                let a = MonthlyAction::from_id(t.actions[i]).unwrap();
                let paid = match a {
                    MonthlyAction::MissPayment | MonthlyAction::DeclareBankruptcy => 0.0,
                    _ => s.card_debt - pre_interest_debt(n, s, m.preset().monthly_rate),
                };
                prop_assert!((n.cash_on_hand - (s.cash_on_hand + s.monthly_income - paid)).abs() < 0.011);
                prop_assert!(n.cash_on_hand >= -1e-9 && n.card_debt >= 0.0);
            }
        }
    }

    #[test]
    fn paying_before_interest_beats_missing(debt in 1.0..50_000.0f64, cash in 0.0..100_000.0f64) {
        let sc = Scenario::sudden_debt();
        let preset = sc.resolve_preset().unwrap();
        let s = HouseholdState { card_debt: debt, cash_on_hand: cash + debt, ..sc.household.clone() };
        let paid = apply_month(&preset, &s, MonthlyAction::PayFull).unwrap();
        let missed = apply_month(&preset, &s, MonthlyAction::MissPayment).unwrap();
        prop_assert!(paid.card_debt < missed.card_debt);
    }
}

/// Balance after the month's payment, recovered from the end-of-month
/// balance by undoing spending and interest.
fn pre_interest_debt(n: &HouseholdState, s: &HouseholdState, rate: f64) -> f64 {
    (n.card_debt - s.monthly_spending) / (1.0 + rate)
}
