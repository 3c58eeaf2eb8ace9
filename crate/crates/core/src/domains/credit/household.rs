use alloc::borrow::Cow;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::questionnaire::{questionnaire_schema, Axis, QuestionnaireState, AXES};
use crate::decision_fn::{DecisionFunction, SharedDecision};
use crate::policies::{fixed_policy, FixedPolicy};
use crate::mdp::{quantize, ActionId, AgencyMdp, MdpState, Outcome, StateKey};
use crate::{math, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Card {
    /// Month-clock value when the card was opened.
    pub open_month: i32,
    pub credit_limit: f64,
}

/// A household's finances at the start of a month.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HouseholdState {
    pub cash_on_hand: f64,
    pub monthly_income: f64,
    /// Charged to the card balance at the end of every month.
    #[serde(default)]
    pub monthly_spending: f64,
    pub card_debt: f64,
    /// Oldest first.
    pub cards: Vec<Card>,
    /// Month clock; card ages are measured against it.
    #[serde(default)]
    pub month: i32,
    /// Age in months of every missed payment.
    #[serde(default)]
    pub missed_payment_ages: Vec<u32>,
    /// Age in months of each hard inquiry still inside the reporting window.
    #[serde(default)]
    pub inquiry_ages: Vec<u32>,
    #[serde(default)]
    pub bankruptcy: bool,
    #[serde(default)]
    pub months_since_bankruptcy: Option<u32>,
    #[serde(default)]
    pub installment_loans: u32,
    #[serde(default)]
    pub months_remaining: u32,
}

impl HouseholdState {
    pub fn months_since_missed_payment(&self) -> Option<u32> {
        self.missed_payment_ages.iter().copied().min()
    }

    pub fn hard_inquiries_recent(&self) -> usize {
        self.inquiry_ages.len()
    }

    pub fn total_limit(&self) -> f64 {
        self.cards.iter().map(|c| c.credit_limit).sum()
    }

    pub fn card_ages(&self) -> impl Iterator<Item = i32> + '_ {
        self.cards.iter().map(|c| self.month - c.open_month)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParams(format!("household state: {what}")));
        let money = [self.cash_on_hand, self.monthly_income, self.monthly_spending, self.card_debt];
        if money.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("amounts must be finite and nonnegative");
        }
        if self.cards.iter().any(|c| !(c.credit_limit > 0.0) || c.open_month > self.month) {
            return bad("cards need positive limits and past open months");
        }
        if self.cards.windows(2).any(|w| w[0].open_month > w[1].open_month) {
            return bad("cards must be ordered by open month");
        }
        if self.bankruptcy != self.months_since_bankruptcy.is_some() {
            return bad("bankruptcy flag and months since bankruptcy disagree");
        }
        Ok(())
    }
}

impl MdpState for HouseholdState {
    fn resources(&self) -> u32 {
        self.months_remaining
    }

    fn key(&self) -> StateKey {
        let mut k = vec![
            quantize(self.cash_on_hand),
            quantize(self.monthly_income),
            quantize(self.monthly_spending),
            quantize(self.card_debt),
            self.month as i64,
            self.bankruptcy as i64,
            self.months_since_bankruptcy.map_or(-1, |m| m as i64),
            self.installment_loans as i64,
            self.months_remaining as i64,
            self.cards.len() as i64,
        ];
        for c in &self.cards {
            k.push(c.open_month as i64);
            k.push(quantize(c.credit_limit));
        }
        k.push(-1);
        let mut missed = self.missed_payment_ages.clone();
        missed.sort_unstable();
        k.extend(missed.iter().map(|&m| m as i64));
        k.push(-1);
        let mut inq = self.inquiry_ages.clone();
        inq.sort_unstable();
        k.extend(inq.iter().map(|&m| m as i64));
        StateKey(k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonthlyAction {
    MissPayment,
    PayMinimum,
    PayFull,
    PayMinimumPlusExtra,
    OpenCardPayMinimum,
    OpenCardPayFull,
    CloseNewestPayMinimum,
    CloseNewestPayFull,
    LimitIncreasePayMinimum,
    LimitIncreasePayFull,
    DeclareBankruptcy,
}

#[derive(Clone, Copy, PartialEq)]
enum Payment {
    None,
    Minimum,
    MinimumPlusExtra,
    Full,
}

#[derive(Clone, Copy, PartialEq)]
enum Structural {
    Nothing,
    Open,
    Close,
    RaiseLimit,
    Bankruptcy,
}

impl MonthlyAction {
    pub const ALL: [MonthlyAction; 11] = [
        MonthlyAction::MissPayment,
        MonthlyAction::PayMinimum,
        MonthlyAction::PayFull,
        MonthlyAction::PayMinimumPlusExtra,
        MonthlyAction::OpenCardPayMinimum,
        MonthlyAction::OpenCardPayFull,
        MonthlyAction::CloseNewestPayMinimum,
        MonthlyAction::CloseNewestPayFull,
        MonthlyAction::LimitIncreasePayMinimum,
        MonthlyAction::LimitIncreasePayFull,
        MonthlyAction::DeclareBankruptcy,
    ];

    pub fn id(self) -> ActionId {
        ActionId(Self::ALL.iter().position(|&a| a == self).unwrap())
    }

    pub fn from_id(a: ActionId) -> Option<Self> {
        Self::ALL.get(a.0).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            MonthlyAction::MissPayment => "miss payment",
            MonthlyAction::PayMinimum => "pay minimum",
            MonthlyAction::PayFull => "pay full",
            MonthlyAction::PayMinimumPlusExtra => "pay minimum + extra principal",
            MonthlyAction::OpenCardPayMinimum => "open card + pay minimum",
            MonthlyAction::OpenCardPayFull => "open card + pay full",
            MonthlyAction::CloseNewestPayMinimum => "close newest card + pay minimum",
            MonthlyAction::CloseNewestPayFull => "close newest card + pay full",
            MonthlyAction::LimitIncreasePayMinimum => "request limit increase + pay minimum",
            MonthlyAction::LimitIncreasePayFull => "request limit increase + pay full",
            MonthlyAction::DeclareBankruptcy => "declare bankruptcy",
        }
    }

    fn parts(self) -> (Structural, Payment) {
        use MonthlyAction::*;
        match self {
            MissPayment => (Structural::Nothing, Payment::None),
            PayMinimum => (Structural::Nothing, Payment::Minimum),
            PayFull => (Structural::Nothing, Payment::Full),
            PayMinimumPlusExtra => (Structural::Nothing, Payment::MinimumPlusExtra),
            OpenCardPayMinimum => (Structural::Open, Payment::Minimum),
            OpenCardPayFull => (Structural::Open, Payment::Full),
            CloseNewestPayMinimum => (Structural::Close, Payment::Minimum),
            CloseNewestPayFull => (Structural::Close, Payment::Full),
            LimitIncreasePayMinimum => (Structural::RaiseLimit, Payment::Minimum),
            LimitIncreasePayFull => (Structural::RaiseLimit, Payment::Full),
            DeclareBankruptcy => (Structural::Bankruptcy, Payment::None),
        }
    }

    /// Opens, closes, limit changes and bankruptcy.
    pub fn is_structural(self) -> bool {
        self.parts().0 != Structural::Nothing
    }
}

/// Ordered boundaries mapping one grounded quantity onto an axis level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBuckets {
    /// Nondecreasing; a value's count of boundaries `<=` it picks the level.
    pub boundaries: Vec<f64>,
    /// Larger values map to lower levels (counted down from the top level).
    #[serde(default)]
    pub descending: bool,
    /// Level used when the quantity is undefined (no cards, no misses).
    pub absent: u32,
}

impl AxisBuckets {
    fn new(boundaries: &[f64], descending: bool, absent: u32) -> Self {
        AxisBuckets { boundaries: boundaries.to_vec(), descending, absent }
    }

    pub fn level(&self, value: Option<f64>, levels: u32) -> u32 {
        let Some(v) = value else { return self.absent };
        let count = self.boundaries.iter().take_while(|&&b| b <= v).count() as u32;
        if self.descending {
            levels - 1 - count
        } else {
            count
        }
    }
}

/// One [`AxisBuckets`] per questionnaire axis, in axis order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketTable {
    pub open_cards: AxisBuckets,
    pub oldest_account_age: AxisBuckets,
    pub newest_account_age: AxisBuckets,
    pub recent_inquiries: AxisBuckets,
    pub missed_payment_recency: AxisBuckets,
    pub utilization: AxisBuckets,
    pub total_debt: AxisBuckets,
    pub missed_payment_count: AxisBuckets,
    pub installment_loans: AxisBuckets,
    pub derogatory: AxisBuckets,
}

impl BucketTable {
    pub fn standard() -> Self {
        BucketTable {
            open_cards: AxisBuckets::new(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], false, 0),
            oldest_account_age: AxisBuckets::new(&[6.0, 12.0, 24.0, 60.0, 120.0], false, 0),
            newest_account_age: AxisBuckets::new(&[3.0, 6.0, 12.0, 24.0], false, 4),
            recent_inquiries: AxisBuckets::new(&[1.0, 2.0, 3.0, 4.0], false, 0),
            missed_payment_recency: AxisBuckets::new(&[6.0, 12.0, 24.0], true, 0),
            utilization: AxisBuckets::new(&[0.01, 0.1, 0.3, 0.5, 0.75], false, 5),
            total_debt: AxisBuckets::new(&[1.0, 1000.0, 5000.0, 15000.0], false, 0),
            missed_payment_count: AxisBuckets::new(&[1.0, 2.0, 3.0, 5.0], false, 0),
            installment_loans: AxisBuckets::new(&[1.0, 2.0, 3.0], false, 0),
            derogatory: AxisBuckets::new(&[24.0, 84.0], true, 0),
        }
    }

    pub fn axes(&self) -> [&AxisBuckets; 10] {
        [
            &self.open_cards,
            &self.oldest_account_age,
            &self.newest_account_age,
            &self.recent_inquiries,
            &self.missed_payment_recency,
            &self.utilization,
            &self.total_debt,
            &self.missed_payment_count,
            &self.installment_loans,
            &self.derogatory,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (axis, b) in AXES.iter().zip(self.axes()) {
            let n = axis.levels();
            let sorted = b.boundaries.windows(2).all(|w| w[0] <= w[1]);
            if !sorted || b.boundaries.iter().any(|v| !v.is_finite()) || b.boundaries.len() as u32 >= n || b.absent >= n {
                return Err(Error::InvalidParams(format!("bucket table entry `{}` is malformed", axis.name())));
            }
        }
        Ok(())
    }
}

impl Default for BucketTable {
    fn default() -> Self {
        Self::standard()
    }
}

/// Economic constants of the realistic model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealisticPreset {
    pub name: String,
    pub monthly_rate: f64,
    pub min_payment_fraction: f64,
    pub min_payment_floor: f64,
    pub extra_principal: f64,
    pub new_card_limit: f64,
    /// Multiplier applied to the newest card's limit.
    pub limit_increase_factor: f64,
    pub max_cards: u32,
    /// Months a hard inquiry stays on record.
    pub inquiry_window: u32,
    /// Months before a missed payment is reported.
    pub miss_report_lag: u32,
    pub buckets: BucketTable,
}

impl RealisticPreset {
    pub fn us_average() -> Self {
        RealisticPreset {
            name: String::from("us_average"),
            monthly_rate: 0.015,
            min_payment_fraction: 0.02,
            min_payment_floor: 25.0,
            extra_principal: 500.0,
            new_card_limit: 5000.0,
            limit_increase_factor: 1.25,
            max_cards: 10,
            inquiry_window: 12,
            miss_report_lag: 2,
            buckets: BucketTable::standard(),
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        (name == "us_average").then(Self::us_average)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.monthly_rate >= 0.0
            && (0.0..=1.0).contains(&self.min_payment_fraction)
            && self.min_payment_floor >= 0.0
            && self.extra_principal > 0.0
            && self.new_card_limit > 0.0
            && self.limit_increase_factor >= 1.0
            && self.inquiry_window > 0;
        if !ok {
            return Err(Error::InvalidParams(format!("preset `{}` has out-of-range constants", self.name)));
        }
        self.buckets.validate()
    }

    pub fn minimum_due(&self, debt: f64) -> f64 {
        if debt <= 0.0 {
            0.0
        } else {
            cents(debt.min(self.min_payment_floor.max(self.min_payment_fraction * debt)))
        }
    }

    fn payment(&self, p: Payment, debt: f64) -> f64 {
        match p {
            Payment::None => 0.0,
            Payment::Minimum => self.minimum_due(debt),
            Payment::MinimumPlusExtra => cents(debt.min(self.minimum_due(debt) + self.extra_principal)),
            Payment::Full => debt,
        }
    }

    pub fn is_legal(&self, s: &HouseholdState, a: MonthlyAction) -> bool {
        if s.months_remaining == 0 {
            return false;
        }
        let (structural, pay) = a.parts();
        let cash = s.cash_on_hand + s.monthly_income;
        let payable = self.payment(pay, s.card_debt) <= cash + 1e-9;
        match (structural, pay) {
            (Structural::Bankruptcy, _) => !s.bankruptcy,
            (_, Payment::None) => s.card_debt > 0.0,
            (_, Payment::MinimumPlusExtra) if s.card_debt <= self.minimum_due(s.card_debt) => false,
            (Structural::Open, _) => payable && (s.cards.len() as u32) < self.max_cards,
            (Structural::Close | Structural::RaiseLimit, _) => payable && !s.cards.is_empty(),
            _ => payable,
        }
    }
}

fn cents(x: f64) -> f64 {
    math::round(x * 100.0) / 100.0
}

/// One month: income, the action, interest, the budget tick, clocks, then
/// the month's card spending.
pub fn apply_month(preset: &RealisticPreset, s: &HouseholdState, a: MonthlyAction) -> Result<HouseholdState> {
    if !preset.is_legal(s, a) {
        return Err(Error::IllegalAction { action: String::from(a.label()), state: format!("{s:?}") });
    }
    let (structural, pay) = a.parts();
    let mut n = s.clone();
    n.cash_on_hand += s.monthly_income;

    let paid = preset.payment(pay, n.card_debt);
    n.cash_on_hand = cents(n.cash_on_hand - paid);
    n.card_debt = cents(n.card_debt - paid);
    match structural {
        Structural::Nothing => {}
        Structural::Open => {
            n.cards.push(Card { open_month: s.month, credit_limit: preset.new_card_limit });
            n.inquiry_ages.push(0);
        }
        Structural::Close => {
            n.cards.pop();
        }
        Structural::RaiseLimit => {
            let c = n.cards.last_mut().expect("legal limit increase has a card");
            c.credit_limit = cents(c.credit_limit * preset.limit_increase_factor);
            n.inquiry_ages.push(0);
        }
        Structural::Bankruptcy => {
            n.card_debt = 0.0;
            n.bankruptcy = true;
            n.months_since_bankruptcy = Some(0);
        }
    }
    if a == MonthlyAction::MissPayment {
        n.missed_payment_ages.push(0);
    }

    n.card_debt = cents(n.card_debt * (1.0 + preset.monthly_rate));
    n.months_remaining -= 1;

    n.month += 1;
    for m in n.missed_payment_ages.iter_mut().chain(n.inquiry_ages.iter_mut()) {
        *m += 1;
    }
    n.inquiry_ages.retain(|&m| m < preset.inquiry_window);
    if let Some(m) = n.months_since_bankruptcy.as_mut() {
        *m += 1;
    }

    n.card_debt = cents(n.card_debt + s.monthly_spending);
    Ok(n)
}

/// Buckets the household's grounded quantities into questionnaire answers.
pub fn project_realistic_state(s: &HouseholdState, preset: &RealisticPreset) -> QuestionnaireState {
    let t = &preset.buckets;
    let lag = preset.miss_report_lag;
    let reported: Vec<u32> = s.missed_payment_ages.iter().copied().filter(|&m| m >= lag).collect();
    let ages: Vec<f64> = s.card_ages().map(|a| a as f64).collect();
    let oldest = ages.iter().copied().reduce(f64::max);
    let newest = ages.iter().copied().reduce(f64::min);
    let limit = s.total_limit();
    let util = (limit > 0.0).then(|| s.card_debt / limit);
    let values = [
        Some(s.cards.len() as f64),
        oldest,
        newest,
        Some(s.hard_inquiries_recent() as f64),
        reported.iter().copied().min().map(|m| m as f64),
        util,
        Some(s.card_debt),
        Some(reported.len() as f64),
        Some(s.installment_loans as f64),
        s.months_since_bankruptcy.map(|m| m as f64),
    ];
    let mut answers = [0; 10];
    for (i, (axis, b)) in AXES.iter().zip(t.axes()).enumerate() {
        answers[i] = b.level(values[i], axis.levels());
    }
    // util with no cards: the table's absent level
    if util.is_none() {
        answers[Axis::Utilization.index()] = t.utilization.absent;
    }
    QuestionnaireState { answers }
}

/// Initial household, preset name and horizon, as stored in scenario files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub preset: String,
    pub months: u32,
    pub household: HouseholdState,
}

impl Scenario {
    /// A household hit by $10,000 of card debt with almost no slack: the
    /// minimum payment is out of reach for the first months.
    pub fn sudden_debt() -> Self {
        Scenario {
            name: String::from("sudden_debt"),
            preset: String::from("us_average"),
            months: 6,
            household: HouseholdState {
                cash_on_hand: 0.0,
                monthly_income: 100.0,
                monthly_spending: 0.0,
                card_debt: 10000.0,
                cards: vec![Card { open_month: -60, credit_limit: 7000.0 }, Card { open_month: -30, credit_limit: 5000.0 }],
                month: 0,
                missed_payment_ages: Vec::new(),
                inquiry_ages: Vec::new(),
                bankruptcy: false,
                months_since_bankruptcy: None,
                installment_loans: 1,
                months_remaining: 6,
            },
        }
    }

    /// An average household with no card debt whose newest card is a month old.
    pub fn debt_free_average() -> Self {
        Scenario {
            name: String::from("debt_free_average"),
            preset: String::from("us_average"),
            months: 12,
            household: HouseholdState {
                cash_on_hand: 4000.0,
                monthly_income: 5500.0,
                monthly_spending: 1500.0,
                card_debt: 0.0,
                cards: vec![Card { open_month: -60, credit_limit: 6000.0 }, Card { open_month: -1, credit_limit: 4000.0 }],
                month: 0,
                missed_payment_ages: Vec::new(),
                inquiry_ages: vec![1],
                bankruptcy: false,
                months_since_bankruptcy: None,
                installment_loans: 1,
                months_remaining: 12,
            },
        }
    }

    pub fn shipped() -> [Scenario; 2] {
        [Self::debt_free_average(), Self::sudden_debt()]
    }

    pub fn resolve_preset(&self) -> Result<RealisticPreset> {
        RealisticPreset::from_name(&self.preset)
            .ok_or_else(|| Error::InvalidParams(format!("unknown credit preset `{}`", self.preset)))
    }

    /// The scenario's MDP with `months` of horizon (its own when `None`).
    pub fn mdp(&self, df: SharedDecision, months: Option<u32>) -> Result<RealisticCreditMdp> {
        build_realistic_credit_mdp(df, self.resolve_preset()?, &self.household, months.unwrap_or(self.months))
    }
}

#[derive(Clone)]
pub struct RealisticCreditMdp {
    df: SharedDecision,
    preset: RealisticPreset,
    labels: Vec<String>,
    start: HouseholdState,
}

impl core::fmt::Debug for RealisticCreditMdp {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("RealisticCreditMdp").field("preset", &self.preset.name).field("start", &self.start).finish()
    }
}

pub fn build_realistic_credit_mdp(
    df: SharedDecision,
    preset: RealisticPreset,
    initial: &HouseholdState,
    months: u32,
) -> Result<RealisticCreditMdp> {
    if df.schema() != &questionnaire_schema() {
        return Err(Error::InvalidParams(String::from("decision function must take the questionnaire schema")));
    }
    preset.validate()?;
    initial.validate()?;
    let mut start = initial.clone();
    start.months_remaining = months;
    let labels = MonthlyAction::ALL.iter().map(|a| String::from(a.label())).collect();
    Ok(RealisticCreditMdp { df, preset, labels, start })
}

impl RealisticCreditMdp {
    pub fn preset(&self) -> &RealisticPreset {
        &self.preset
    }

    pub fn with_months(&self, months: u32) -> Result<Self> {
        build_realistic_credit_mdp(self.df.clone(), self.preset.clone(), &self.start, months)
    }

    /// Always pays the full balance, never opens or closes cards. Paying the
    /// minimum and then missing are the fallbacks when cash runs short.
    pub fn pay_max_policy(&self) -> FixedPolicy<HouseholdState> {
        let preset = self.preset.clone();
        fixed_policy("pay max", |_: &HouseholdState| Some(MonthlyAction::PayFull.id())).with_fallback(move |s| {
            let a = if preset.is_legal(s, MonthlyAction::PayMinimum) {
                MonthlyAction::PayMinimum
            } else {
                MonthlyAction::MissPayment
            };
            Some(a.id())
        })
    }

    pub fn score(&self, s: &HouseholdState) -> f64 {
        self.df.value(&self.features(s))
    }
}

impl AgencyMdp for RealisticCreditMdp {
    type State = HouseholdState;

    fn decision(&self) -> &dyn DecisionFunction {
        &*self.df
    }

    fn action_labels(&self) -> &[String] {
        &self.labels
    }

    fn initial_state(&self) -> HouseholdState {
        self.start.clone()
    }

    fn features<'s>(&self, s: &'s HouseholdState) -> Cow<'s, [f64]> {
        Cow::Owned(project_realistic_state(s, &self.preset).features())
    }

    fn push_legal(&self, s: &HouseholdState, out: &mut Vec<ActionId>) {
        for a in MonthlyAction::ALL {
            if self.preset.is_legal(s, a) {
                out.push(a.id());
            }
        }
    }

    fn transition(&self, s: &HouseholdState, a: ActionId) -> Vec<Outcome<HouseholdState>> {
        let a = MonthlyAction::from_id(a).expect("legal action ids are in range");
        vec![Outcome::certain(apply_month(&self.preset, s, a).expect("transition called with a legal action"))]
    }
}
