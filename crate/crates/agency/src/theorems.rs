//! Executable checks on when local advice is optimal: greedy agrees with
//! exact search at one resource, straight gradient fields make greedy exact,
//! and curvature or a lower local peak makes it fail.

use std::sync::Arc;

use agency_core::analysis::{gradient_straightness_check, greedy_gap, greedy_in_maximizers, StraightnessConfig};
use agency_core::decision_fn::{Preset, SharedDecision, TreeEnsemble};
use agency_core::domains::credit::{build_realistic_credit_mdp, RealisticPreset, Scenario, SyntheticFico};
use agency_core::domains::recidivism::{ArresteeRecord, ScoreVariant};
use agency_core::mdp::{rollout, AgencyMdp};
use agency_core::policies::RandomPolicy;
use agency_core::seed::{derive_rng, derive_seed};
use rand::Rng;
use serde::Serialize;

use crate::domain::{recidivism_mdp, simple_credit_mdp, simple_credit_starts, synthetic_mdp};
use crate::Result;

/// Ties within this of the best Q-value count as maximizers.
pub const MAXIMIZER_TOL: f64 = 1e-9;
pub const STRAIGHT_TOL: f64 = 1e-6;
pub const GAP_TOL: f64 = 1e-9;
pub const CURVED_MIN_DEVIATION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub subject: String,
    pub value: f64,
    pub expect: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TheoremReport {
    pub rows: Vec<CheckRow>,
}

impl TheoremReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn get(&self, check: &str, subject: &str) -> Option<&CheckRow> {
        self.rows.iter().find(|r| r.check == check && r.subject == subject)
    }

    fn push(&mut self, check: &str, subject: &str, value: f64, expect: &str, pass: bool) {
        self.rows.push(CheckRow { check: check.into(), subject: subject.into(), value, expect: expect.into(), pass });
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,subject,value,expect,pass\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.check, r.subject, r.value, r.expect, r.pass));
        }
        out
    }
}

/// A trained risk model and the records whose states the suite samples.
pub struct RiskInputs {
    pub variant: ScoreVariant,
    pub ensemble: Arc<TreeEnsemble>,
    pub records: Vec<ArresteeRecord>,
}

pub struct SuiteOptions {
    pub n_states: usize,
    pub seed: u64,
    pub risk: Option<RiskInputs>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { n_states: 100, seed: 0, risk: None }
    }
}

/// Counts states where greedy's choice is not an exact-search maximizer.
fn count_misses<M: AgencyMdp>(mdps: impl Iterator<Item = Result<M>>) -> Result<(usize, usize)> {
    let (mut n, mut misses) = (0, 0);
    for m in mdps {
        let m = m?;
        let s = m.initial_state();
        if m.is_terminal(&s) {
            continue;
        }
        n += 1;
        if !greedy_in_maximizers(&m, &s, MAXIMIZER_TOL)? {
            misses += 1;
        }
    }
    Ok((n, misses))
}

/// States reached by up to 11 random months from the scenario's household,
/// each given a single month to go.
fn realistic_states(sc: &Scenario, preset: &RealisticPreset, df: &SharedDecision, n: usize, seed: u64) -> Result<Vec<agency_core::domains::credit::RealisticCreditMdp>> {
    let long = build_realistic_credit_mdp(df.clone(), preset.clone(), &sc.household, 12)?;
    let mut rng = derive_rng(seed, "walk", 0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = rollout(&long, &RandomPolicy, &long.initial_state(), derive_seed(seed, "walk", i as u64))?;
        let k = rng.random_range(0..t.states.len().min(12));
        out.push(build_realistic_credit_mdp(df.clone(), preset.clone(), &t.states[k], 1)?);
    }
    Ok(out)
}

pub fn run_suite(opts: &SuiteOptions) -> Result<TheoremReport> {
    let mut rep = TheoremReport::default();
    let n = opts.n_states;
    let seed = opts.seed;

    // greedy is exact with one resource left
    for preset in Preset::ALL {
        let domain = preset.build().domain().to_vec();
        let mut rng = derive_rng(seed, preset.name(), 0);
        let starts: Vec<Vec<f64>> =
            (0..n).map(|_| domain.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect()).collect();
        let (k, misses) = count_misses(starts.into_iter().map(|x| synthetic_mdp(preset, x, 1)))?;
        rep.push("theorem1", preset.name(), misses as f64, &format!("0 of {k}"), misses == 0);
    }
    let fico: SharedDecision = Arc::new(SyntheticFico::standard());
    let qs = simple_credit_starts(n, seed);
    let (k, misses) = count_misses(qs.iter().map(|q| simple_credit_mdp(&fico, q, 1)))?;
    rep.push("theorem1", "simple_credit", misses as f64, &format!("0 of {k}"), misses == 0);
    for sc in Scenario::shipped() {
        let preset = sc.resolve_preset()?;
        let mdps = realistic_states(&sc, &preset, &fico, n, seed)?;
        let (k, misses) = count_misses(mdps.into_iter().map(Ok))?;
        rep.push("theorem1", &format!("realistic_credit/{}", sc.name), misses as f64, &format!("0 of {k}"), misses == 0);
    }
    if let Some(risk) = &opts.risk {
        let recs = risk.records.iter().take(n);
        let (k, misses) = count_misses(recs.map(|r| recidivism_mdp(&risk.ensemble, risk.variant, r, 1)))?;
        let name = format!("recidivism/{}", risk.variant.name());
        rep.push("theorem1", &name, misses as f64, &format!("0 of {k}"), misses == 0);
    }

    // straight gradient fields
    let cfg = StraightnessConfig { seed, ..StraightnessConfig::default() };
    for preset in [Preset::LinearDefault, Preset::RadialDefault, Preset::Fig2Default] {
        let f = preset.build();
        let s = gradient_straightness_check(&f, f.domain(), &cfg)?;
        if preset == Preset::Fig2Default {
            let ok = s.max_deviation > CURVED_MIN_DEVIATION;
            rep.push("straightness", preset.name(), s.max_deviation, &format!("> {CURVED_MIN_DEVIATION}"), ok);
        } else {
            let ok = s.max_deviation <= STRAIGHT_TOL && s.interior_stationary == 0;
            rep.push("straightness", preset.name(), s.max_deviation, &format!("<= {STRAIGHT_TOL}"), ok);
        }
    }

    // straight fields leave no greedy gap
    let resources: Vec<u32> = (1..=5).collect();
    let linear_starts: Vec<Vec<f64>> = {
        let mut rng = derive_rng(seed, "linear_gap", 0);
        (0..5).map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).collect()
    };
    let rows = greedy_gap(
        |i, r| crate::to_core(synthetic_mdp(Preset::LinearDefault, linear_starts[i].clone(), r)),
        linear_starts.len(),
        &resources,
        GAP_TOL,
    )?;
    let worst = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
    rep.push("greedy_gap", "linear_default", worst, &format!("<= {GAP_TOL}"), worst <= GAP_TOL);
    // starts on the compass rays through the centre, so that a move can
    // follow the gradient exactly
    let radial_starts: Vec<Vec<f64>> = (0..8)
        .flat_map(|j| {
            let t = std::f64::consts::PI * j as f64 / 4.0;
            [1.0, 2.5].map(|d| vec![5.0 + d * t.cos(), 5.0 + d * t.sin()])
        })
        .collect();
    let rows = greedy_gap(
        |i, r| crate::to_core(synthetic_mdp(Preset::RadialDefault, radial_starts[i].clone(), r)),
        radial_starts.len(),
        &resources,
        GAP_TOL,
    )?;
    let worst = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
    rep.push("greedy_gap", "radial_default", worst, &format!("<= {GAP_TOL}"), worst <= GAP_TOL);

    // a lower local peak, or curvature, is where greedy fails
    let fig1 = Preset::Fig1Default;
    let rows = greedy_gap(|_, r| crate::to_core(synthetic_mdp(fig1, vec![0.0], r)), 1, &[3], GAP_TOL)?;
    rep.push("greedy_gap", "fig1_default r=3", rows[0].gap, &format!("> {GAP_TOL}"), rows[0].witness);
    let peaks = fig1.build().local_maxima_1d(4001).len();
    rep.push("local_maxima", "fig1_default", peaks as f64, ">= 2", peaks >= 2);
    let fig2 = Preset::Fig2Default;
    let rows = greedy_gap(|_, r| crate::to_core(synthetic_mdp(fig2, vec![0.0, 0.0], r)), 1, &[6], GAP_TOL)?;
    rep.push("greedy_gap", "fig2_default r=6", rows[0].gap, &format!("> {GAP_TOL}"), rows[0].witness);
    Ok(rep)
}
