//! Empirical checks of the mechanism's incentive properties.
//!
//! Nothing here proves anything. Each check evaluates the implemented
//! mechanism on a finite grid or a finite set of deviations and reports what
//! it saw, with a counterexample when a property fails.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fairness::{settle_award, winner_reward_exact, FairnessError, PaymentCase};
use crate::gva::vickrey_prices;
use crate::model::{AtomicBid, BidTable, BidderId, FairnessTable, ModelError, Package, ResourceId};
use crate::money::{format_rational, serde_rational, Money, Rational};
use crate::settlement::{settle, SettleError};
use crate::wdp::{solve_bnb, solve_oracle, Allocation, Solver, WdpError, WinnerDetermination};

/// Per-deviation solver calls make larger instances impractical.
pub const TRUTHFULNESS_MAX_RESOURCES: usize = 4;
pub const TRUTHFULNESS_MAX_BIDDERS: usize = 3;
pub const EFFICIENCY_MAX_RESOURCES: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IncentiveError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid does not cover every regime: {0}")]
    IncompleteGrid(String),
    #[error("check expects a sweep over {expected}, got {found}")]
    WrongParameter { expected: String, found: String },
    #[error("instance too large for this check: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fairness(#[from] FairnessError),
    #[error(transparent)]
    Settle(#[from] SettleError),
    #[error(transparent)]
    Solver(#[from] WdpError),
}

/// An auction instance with a readable fairness table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub table: FairnessTable,
    pub bids: BidTable,
    pub m: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptParameter {
    /// The winner's payment for the package. The Vickrey step is not re-run.
    WinnerBid,
    /// The winner's declared fair value for the package.
    WinnerFairValue,
    /// One losing bidder's declared fair value for the package.
    LoserFairValue(BidderId),
}

impl SweptParameter {
    fn name(self) -> String {
        match self {
            SweptParameter::WinnerBid => "winner_bid".into(),
            SweptParameter::WinnerFairValue => "winner_fair_value".into(),
            SweptParameter::LoserFairValue(b) => format!("loser_fair_value({b})"),
        }
    }
}

/// The award a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepTarget {
    pub winner: BidderId,
    pub package: Package,
    /// Payment used at every grid point unless the winner's bid is swept.
    pub package_cost: Money,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepSpec {
    pub base: Instance,
    pub target: SweepTarget,
    pub parameter: SweptParameter,
    grid: Vec<Money>,
    pub seed: u64,
}

impl SweepSpec {
    pub fn new(
        base: Instance,
        target: SweepTarget,
        parameter: SweptParameter,
        grid: Vec<Money>,
        seed: u64,
    ) -> Result<Self, IncentiveError> {
        if grid.is_empty() {
            return Err(IncentiveError::InvalidGrid("grid is empty".into()));
        }
        if let Some(w) = grid.windows(2).find(|w| w[0] >= w[1]) {
            return Err(IncentiveError::InvalidGrid(format!(
                "grid must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(SweepSpec {
            base,
            target,
            parameter,
            grid,
            seed,
        })
    }

    pub fn grid(&self) -> &[Money] {
        &self.grid
    }
}

/// `start, start + step, ...` up to and including `end`.
pub fn money_grid(start: Money, end: Money, step: Money) -> Vec<Money> {
    assert!(step.is_positive(), "grid step must be positive");
    let mut out = Vec::new();
    let mut v = start;
    while v <= end {
        out.push(v);
        v += step;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub parameter_value: Money,
    pub package_cost: Money,
    pub final_payment: Money,
    pub profit: Money,
    pub winner_reward: Money,
    pub shares: Vec<(BidderId, Money)>,
    pub case: PaymentCase,
    pub hypothesis_violation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    pub counterexample: Option<String>,
}

impl Verdict {
    fn pass() -> Self {
        Verdict {
            passed: true,
            counterexample: None,
        }
    }

    fn fail(reason: impl Into<String>) -> Self {
        Verdict {
            passed: false,
            counterexample: Some(reason.into()),
        }
    }
}

/// A unilateral change of one bid amount, from the truthful profile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationRecord {
    pub bidder: BidderId,
    pub package: Package,
    pub truthful_amount: Money,
    pub deviated_amount: Money,
    #[serde(with = "serde_rational")]
    pub truthful_utility: Rational,
    #[serde(with = "serde_rational")]
    pub deviated_utility: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthfulnessRecord {
    pub model: TruthModel,
    pub deviations_checked: usize,
    /// Strictly profitable deviations only.
    pub violations: Vec<DeviationRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfficiencyRecord {
    pub bid_optimal: Vec<(BidderId, Package)>,
    /// Sum of the winners' own fair values under the revenue-optimal allocation.
    pub bid_optimal_fair_total: Money,
    pub fair_optimal: Vec<(BidderId, Package)>,
    pub fair_optimal_total: Money,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub check: String,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
    pub verdicts: BTreeMap<String, Verdict>,
    /// Row indices whose inputs fall outside the property's hypotheses.
    pub hypothesis_violations: Vec<usize>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    pub truthfulness: Option<TruthfulnessRecord>,
    pub efficiency: Option<EfficiencyRecord>,
}

impl SweepReport {
    fn new(check: &str, seed: u64) -> Self {
        SweepReport {
            check: check.into(),
            seed,
            ..Default::default()
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.values().all(|v| v.passed)
    }

    fn valid_rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.hypothesis_violation.is_none())
    }
}

/// Rewrites the fair value of `bidder` for `package` to `value`, putting the
/// whole change on the package's lowest resource.
fn set_package_fair_value(
    table: &FairnessTable,
    bidder: BidderId,
    package: Package,
    value: Money,
) -> Result<FairnessTable, IncentiveError> {
    let first = package
        .lowest()
        .ok_or(IncentiveError::Model(ModelError::InvalidPackage))?;
    let current = table.fair_value_package(bidder, package)?;
    let cell = table.bidder_value(bidder, first)?;
    Ok(table.with_bidder_value(bidder, first, cell + (value - current))?)
}

/// Evaluates every grid point of `spec`. Rows are in grid order and carry
/// no hypothesis flags; the checks add those.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, IncentiveError> {
    let SweepTarget {
        winner, package, ..
    } = spec.target;
    let mut rows = Vec::with_capacity(spec.grid.len());
    for (index, &value) in spec.grid.iter().enumerate() {
        let mut table = spec.base.table.clone();
        let mut bids = spec.base.bids.clone();
        let mut cost = spec.target.package_cost;
        match spec.parameter {
            SweptParameter::WinnerBid => {
                cost = value;
                bids = bids.with_amount(winner, package, value);
            }
            SweptParameter::WinnerFairValue => {
                table = set_package_fair_value(&table, winner, package, value)?;
            }
            SweptParameter::LoserFairValue(loser) => {
                table = set_package_fair_value(&table, loser, package, value)?;
            }
        }
        let s = settle_award(winner, package, cost, &table, &bids)?;
        rows.push(SweepRow {
            index,
            parameter_value: value,
            package_cost: cost,
            final_payment: s.final_payment,
            profit: s.profit,
            winner_reward: s.winner_reward,
            shares: s.shares.iter().map(|x| (x.bidder, x.amount)).collect(),
            case: s.case,
            hypothesis_violation: None,
        });
    }
    Ok(rows)
}

fn expect_parameter(spec: &SweepSpec, expected: SweptParameter) -> Result<(), IncentiveError> {
    if spec.parameter != expected {
        return Err(IncentiveError::WrongParameter {
            expected: expected.name(),
            found: spec.parameter.name(),
        });
    }
    Ok(())
}

/// Raising the winning payment never lowers the profit or any loser's share,
/// and a loser with a higher fair value never gets less than one with a lower
/// fair value.
///
/// Grid points where the payment is below the auctioneer's fair value are
/// outside the hypothesis; they are listed in the report and excluded from
/// the verdicts.
pub fn check_theorem1(spec: &SweepSpec) -> Result<SweepReport, IncentiveError> {
    expect_parameter(spec, SweptParameter::WinnerBid)?;
    let package = spec.target.package;
    let table = &spec.base.table;
    let auctioneer_fair = table.auctioneer_fair_value(package)?;

    let mut report = SweepReport::new("theorem1", spec.seed);
    report.rows = run_sweep(spec)?;
    for row in &mut report.rows {
        if row.package_cost < auctioneer_fair {
            row.hypothesis_violation = Some(format!(
                "payment {} below auctioneer fair value {}",
                row.package_cost, auctioneer_fair
            ));
            report.hypothesis_violations.push(row.index);
        }
    }
    if !report.hypothesis_violations.is_empty() {
        report.warnings.push(format!(
            "{} grid point(s) violate the hypothesis and were not judged",
            report.hypothesis_violations.len()
        ));
    }

    let rows: Vec<&SweepRow> = report.valid_rows().collect();
    let mut profit = Verdict::pass();
    let mut shares = Verdict::pass();
    for pair in rows.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if profit.passed && b.profit < a.profit {
            profit = Verdict::fail(format!(
                "profit fell from {} to {} between payments {} and {}",
                a.profit, b.profit, a.parameter_value, b.parameter_value
            ));
        }
        for (&(bidder, before), &(_, after)) in a.shares.iter().zip(&b.shares) {
            if shares.passed && after < before {
                shares = Verdict::fail(format!(
                    "share of {bidder} fell from {before} to {after} between payments {} and {}",
                    a.parameter_value, b.parameter_value
                ));
            }
        }
    }

    let mut fair: Vec<(BidderId, Money)> = Vec::new();
    if let Some(row) = rows.first() {
        for &(bidder, _) in &row.shares {
            fair.push((bidder, table.fair_value_package(bidder, package)?));
        }
    }
    let mut ordered = Verdict::pass();
    'rows: for row in &rows {
        for (i, &(x, sx)) in row.shares.iter().enumerate() {
            for &(y, sy) in &row.shares[i + 1..] {
                let qx = fair.iter().find(|f| f.0 == x).map(|f| f.1);
                let qy = fair.iter().find(|f| f.0 == y).map(|f| f.1);
                let bad = match qx.cmp(&qy) {
                    std::cmp::Ordering::Greater => sx < sy,
                    std::cmp::Ordering::Less => sy < sx,
                    std::cmp::Ordering::Equal => false,
                };
                if bad {
                    ordered = Verdict::fail(format!(
                        "at payment {}: {x} with fair value {} got {sx}, {y} with fair value {} got {sy}",
                        row.parameter_value,
                        qx.unwrap_or_default(),
                        qy.unwrap_or_default()
                    ));
                    break 'rows;
                }
            }
        }
    }

    let all_zero = rows
        .iter()
        .all(|r| r.shares.iter().all(|&(_, s)| s == Money::ZERO));
    if all_zero {
        report
            .warnings
            .push("every loser share is zero; the monotonicity verdicts hold vacuously".into());
    }
    report.verdicts.insert("profit_non_decreasing".into(), profit);
    report.verdicts.insert("loser_shares_non_decreasing".into(), shares);
    report
        .verdicts
        .insert("higher_fair_value_higher_share".into(), ordered);
    Ok(report)
}

/// The winner's reward is largest when it declares the auctioneer's fair
/// value, stays positive for declarations strictly between half and twice
/// that value, and is never positive from twice that value upward.
///
/// The grid must contain a point below the auctioneer's fair value, the value
/// itself, and a point at or above twice it.
pub fn check_theorem2(spec: &SweepSpec) -> Result<SweepReport, IncentiveError> {
    expect_parameter(spec, SweptParameter::WinnerFairValue)?;
    let SweepTarget {
        package,
        package_cost,
        ..
    } = spec.target;
    let qa = spec.base.table.auctioneer_fair_value(package)?;
    if qa == Money::ZERO {
        return Err(FairnessError::DegenerateFairValue.into());
    }

    let mut missing = Vec::new();
    if !spec.grid.iter().any(|&q| q < qa) {
        missing.push("no point with r < 0");
    }
    if !spec.grid.contains(&qa) {
        missing.push("no point at r = 0");
    }
    if !spec.grid.iter().any(|&q| q >= qa * 2) {
        missing.push("no point with r ≥ 1");
    }
    if !missing.is_empty() {
        return Err(IncentiveError::IncompleteGrid(missing.join(", ")));
    }

    let mut report = SweepReport::new("theorem2", spec.seed);
    report.rows = run_sweep(spec)?;
    let profit = (package_cost - qa).positive_part();
    if profit == Money::ZERO {
        for row in &mut report.rows {
            row.hypothesis_violation = Some(format!(
                "payment {package_cost} leaves no profit over {qa}"
            ));
            report.hypothesis_violations.push(row.index);
        }
        report
            .warnings
            .push("no profit to share; the reward is zero everywhere".into());
    }

    let valid: Vec<&SweepRow> = report.valid_rows().collect();
    let mut peak = Verdict::pass();
    let mut inside = Verdict::pass();
    let mut beyond = Verdict::pass();
    if let Some(truth) = valid.iter().find(|r| r.parameter_value == qa) {
        if truth.winner_reward != profit {
            peak = Verdict::fail(format!(
                "reward at the truthful value is {}, expected the full profit {profit}",
                truth.winner_reward
            ));
        } else if let Some(r) = valid.iter().find(|r| r.winner_reward > truth.winner_reward) {
            peak = Verdict::fail(format!(
                "declaring {} earns {}, more than {} at the truthful value",
                r.parameter_value, r.winner_reward, truth.winner_reward
            ));
        }
    }
    for row in &valid {
        let q = row.parameter_value;
        let exact = winner_reward_exact(profit, qa, q)?;
        if q * 2 > qa && q < qa * 2 && exact <= Rational::from_integer(0) && inside.passed {
            inside = Verdict::fail(format!(
                "declaring {q} earns {}, expected a positive reward",
                format_rational(&exact)
            ));
        }
        if q >= qa * 2 && row.winner_reward.is_positive() && beyond.passed {
            beyond = Verdict::fail(format!(
                "declaring {q} earns {}, expected no positive reward",
                row.winner_reward
            ));
        }
    }
    report.notes.push(
        "Under-declaring by a small margin earns nearly the full reward: the reward \
         approaches the profit as the declaration rises to the truthful value from below, \
         so the maximum is attained only at the truthful value itself."
            .into(),
    );
    report.verdicts.insert("peak_at_truthful_value".into(), peak);
    report
        .verdicts
        .insert("positive_between_half_and_double".into(), inside);
    report
        .verdicts
        .insert("non_positive_from_double".into(), beyond);
    Ok(report)
}

/// What a bidder is taken to value, and which payments it faces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthModel {
    /// True values are the instance's bids; payments are Vickrey package
    /// costs for the chosen optimal allocation, with no fairness step.
    GvaBids,
    /// True values are the bidders' own fair values; bids start equal to
    /// them and payments come from the full settlement pipeline.
    FullPipelineFair,
}

/// `-$10, -$9, …, +$10` without zero.
pub fn default_deviations() -> Vec<Money> {
    (-10..=10)
        .filter(|&d| d != 0)
        .map(Money::from_major)
        .collect()
}

/// Value to `bidder` of the union of `won`, under the OR bids in `truth`:
/// the best packing of its true bids inside the won resources.
fn or_value(truth: &BidTable, bidder: BidderId, won: Package, m: usize) -> Result<Money, WdpError> {
    let own = truth.filtered(|b| b.bidder == bidder && b.package.is_subset_of(won));
    if own.is_empty() {
        return Ok(Money::ZERO);
    }
    Solver::Bnb.revenue(&own, m)
}

fn won_resources(optimal: &Allocation, bidder: BidderId) -> Package {
    optimal
        .awards_of(bidder)
        .fold(Package::EMPTY, |acc, a| acc.union(a.package))
}

/// Utility of `bidder` when everyone bids `bids` and its true bids are `truth`.
fn gva_utility(
    truth: &BidTable,
    bids: &BidTable,
    bidder: BidderId,
    m: usize,
) -> Result<Rational, IncentiveError> {
    let result = solve_bnb(bids, m)?;
    let pricing = vickrey_prices(bids, &result.optimal, &Solver::Bnb, m, |_, _| false)
        .map_err(|e| match e {
            crate::gva::GvaError::Solver(w) => IncentiveError::Solver(w),
            other => IncentiveError::Settle(SettleError::Pricing(other)),
        })?;
    let won = won_resources(&result.optimal, bidder);
    let value = or_value(truth, bidder, won, m)?;
    Ok((value - pricing.cost_of(bidder)).to_ratio())
}

/// Utility of `bidder` under the full settlement, valuing what it receives at
/// its own fair values.
fn pipeline_utility(
    table: &FairnessTable,
    bids: &BidTable,
    bidder: BidderId,
    m: usize,
) -> Result<Rational, IncentiveError> {
    let s = settle(table, bids, m, &Solver::Bnb)?;
    let mut err = None;
    let value = s.received_value(bidder, |p| match table.fair_value_package(bidder, p) {
        Ok(v) => v,
        Err(e) => {
            err = Some(e);
            Money::ZERO
        }
    });
    if let Some(e) = err {
        return Err(e.into());
    }
    Ok(value - s.net_payment_of(bidder).to_ratio())
}

/// Looks for a unilateral single-bid deviation that strictly improves a
/// bidder's utility. Each existing bid of each bidder is moved by every
/// offset in `deviations`; amounts are floored at zero, which withdraws the
/// bid.
pub fn check_truthfulness(
    instance: &Instance,
    deviations: &[Money],
    model: TruthModel,
) -> Result<SweepReport, IncentiveError> {
    let m = instance.m;
    let n = instance.table.bidders();
    if m > TRUTHFULNESS_MAX_RESOURCES || n > TRUTHFULNESS_MAX_BIDDERS {
        return Err(IncentiveError::TooLarge(format!(
            "{m} resources and {n} bidders; at most {TRUTHFULNESS_MAX_RESOURCES} and {TRUTHFULNESS_MAX_BIDDERS}"
        )));
    }
    let truth = match model {
        TruthModel::GvaBids => instance.bids.clone(),
        TruthModel::FullPipelineFair => {
            let mut bids = Vec::new();
            for b in instance.bids.bids() {
                bids.push(AtomicBid {
                    amount: instance.table.fair_value_package(b.bidder, b.package)?,
                    ..*b
                });
            }
            BidTable::new(bids)?
        }
    };
    let utility = |bids: &BidTable, bidder: BidderId| match model {
        TruthModel::GvaBids => gva_utility(&truth, bids, bidder, m),
        TruthModel::FullPipelineFair => pipeline_utility(&instance.table, bids, bidder, m),
    };

    let mut record = TruthfulnessRecord {
        model,
        deviations_checked: 0,
        violations: Vec::new(),
    };
    let mut bidders: Vec<BidderId> = truth.bids().iter().map(|b| b.bidder).collect();
    bidders.sort();
    bidders.dedup();
    for bidder in bidders {
        let base = utility(&truth, bidder)?;
        for bid in truth.bids().iter().filter(|b| b.bidder == bidder) {
            for &delta in deviations {
                let amount = (bid.amount + delta).max(Money::ZERO);
                if amount == bid.amount {
                    continue;
                }
                let deviated = truth.with_amount(bidder, bid.package, amount);
                let u = utility(&deviated, bidder)?;
                record.deviations_checked += 1;
                if u > base {
                    record.violations.push(DeviationRecord {
                        bidder,
                        package: bid.package,
                        truthful_amount: bid.amount,
                        deviated_amount: amount,
                        truthful_utility: base,
                        deviated_utility: u,
                    });
                }
            }
        }
    }

    let mut report = SweepReport::new("truthfulness", 0);
    let verdict = match record.violations.first() {
        None => Verdict::pass(),
        Some(v) => Verdict::fail(format!(
            "{} bidding {} instead of {} on {} raises utility from {} to {}",
            v.bidder,
            v.deviated_amount,
            v.truthful_amount,
            v.package,
            format_rational(&v.truthful_utility),
            format_rational(&v.deviated_utility)
        )),
    };
    if model == TruthModel::FullPipelineFair && !record.violations.is_empty() {
        report.notes.push(format!(
            "{} of {} deviations are profitable once fairness adjustments apply",
            record.violations.len(),
            record.deviations_checked
        ));
    }
    report.verdicts.insert("no_profitable_deviation".into(), verdict);
    report.truthfulness = Some(record);
    Ok(report)
}

fn award_list(a: &Allocation) -> Vec<(BidderId, Package)> {
    a.awards.iter().map(|w| (w.bidder, w.package)).collect()
}

/// Compares the revenue-optimal allocation with the allocation maximizing the
/// winners' total fair value over the same positive bids.
pub fn check_efficiency(instance: &Instance) -> Result<SweepReport, IncentiveError> {
    let m = instance.m;
    if m > EFFICIENCY_MAX_RESOURCES {
        return Err(IncentiveError::TooLarge(format!(
            "{m} resources; at most {EFFICIENCY_MAX_RESOURCES}"
        )));
    }
    let table = &instance.table;
    let by_bid = solve_bnb(&instance.bids, m)?.optimal;
    let mut bid_fair = Money::ZERO;
    for a in &by_bid.awards {
        bid_fair += table.fair_value_package(a.bidder, a.package)?;
    }

    let mut fair_bids = Vec::new();
    for b in instance.bids.bids().iter().filter(|b| b.amount.is_positive()) {
        fair_bids.push(AtomicBid {
            amount: table.fair_value_package(b.bidder, b.package)?,
            ..*b
        });
    }
    let fair_bids = BidTable::new(fair_bids)?;
    let by_fair = solve_oracle(&fair_bids, m)?.optimal;

    let mut report = SweepReport::new("efficiency", 0);
    let verdict = if bid_fair >= by_fair.revenue {
        Verdict::pass()
    } else {
        Verdict::fail(format!(
            "revenue-optimal allocation {:?} totals {} in fair value, {:?} reaches {}",
            award_list(&by_bid),
            bid_fair,
            award_list(&by_fair),
            by_fair.revenue
        ))
    };
    report
        .verdicts
        .insert("revenue_optimal_is_fair_optimal".into(), verdict);
    report.efficiency = Some(EfficiencyRecord {
        bid_optimal: award_list(&by_bid),
        bid_optimal_fair_total: bid_fair,
        fair_optimal: award_list(&by_fair),
        fair_optimal_total: by_fair.revenue,
    });
    Ok(report)
}

/// Shape of randomly generated instances. Amounts are whole units of
/// currency, drawn uniformly from the closed ranges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstanceShape {
    pub max_resources: usize,
    pub max_bidders: usize,
    pub max_bids: usize,
    pub max_bid: i64,
    pub max_fair_value: i64,
}

impl InstanceShape {
    pub const TRUTHFULNESS: InstanceShape = InstanceShape {
        max_resources: TRUTHFULNESS_MAX_RESOURCES,
        max_bidders: TRUTHFULNESS_MAX_BIDDERS,
        max_bids: 6,
        max_bid: 30,
        max_fair_value: 10,
    };
}

/// A random valid instance with an unsealed table. Auctioneer fair values are
/// at least one unit so every package has a positive reserve.
pub fn random_instance(rng: &mut impl Rng, shape: InstanceShape) -> Instance {
    let m = rng.gen_range(1..=shape.max_resources);
    let n = rng.gen_range(1..=shape.max_bidders);
    let count = rng.gen_range(1..=shape.max_bids);
    let mut bids: Vec<AtomicBid> = Vec::new();
    for _ in 0..count {
        let bidder = BidderId(rng.gen_range(0..n));
        let package = Package::from_bits(rng.gen_range(1..(1u64 << m)));
        if bids.iter().any(|b| b.bidder == bidder && b.package == package) {
            continue;
        }
        bids.push(AtomicBid {
            bidder,
            package,
            amount: Money::from_major(rng.gen_range(0..=shape.max_bid)),
        });
    }
    let values = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| Money::from_major(rng.gen_range(0..=shape.max_fair_value)))
                .collect()
        })
        .collect();
    let auctioneer = (0..m)
        .map(|_| Money::from_major(rng.gen_range(1..=shape.max_fair_value.max(1))))
        .collect();
    Instance {
        table: FairnessTable::new(values, auctioneer)
            .expect("generated table is valid")
            .into_unsealed(),
        bids: BidTable::new(bids).expect("generated bids are valid"),
        m,
    }
}

/// Totals of a truthfulness survey.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthfulnessSurvey {
    pub seed: u64,
    pub instances: usize,
    pub deviations_checked: usize,
    pub violations: usize,
    /// Index of each instance with at least one profitable deviation.
    pub violating_instances: Vec<usize>,
}

/// Runs [`check_truthfulness`] on `count` instances drawn from `seed`.
pub fn survey_truthfulness(
    seed: u64,
    count: usize,
    shape: InstanceShape,
    model: TruthModel,
) -> Result<TruthfulnessSurvey, IncentiveError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deviations = default_deviations();
    let mut survey = TruthfulnessSurvey {
        seed,
        instances: count,
        ..Default::default()
    };
    for i in 0..count {
        let instance = random_instance(&mut rng, shape);
        let report = check_truthfulness(&instance, &deviations, model)?;
        let record = report.truthfulness.expect("truthfulness record present");
        survey.deviations_checked += record.deviations_checked;
        survey.violations += record.violations.len();
        if !record.violations.is_empty() {
            survey.violating_instances.push(i);
        }
    }
    Ok(survey)
}

/// Totals of an efficiency survey.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfficiencySurvey {
    pub seed: u64,
    pub instances: usize,
    pub efficient: usize,
    /// Index of each instance whose revenue-optimal allocation is not
    /// fair-value optimal.
    pub inefficient_instances: Vec<usize>,
}

/// Runs [`check_efficiency`] on `count` instances drawn from `seed`.
pub fn survey_efficiency(
    seed: u64,
    count: usize,
    shape: InstanceShape,
) -> Result<EfficiencySurvey, IncentiveError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut survey = EfficiencySurvey {
        seed,
        instances: count,
        ..Default::default()
    };
    for i in 0..count {
        let instance = random_instance(&mut rng, shape);
        if check_efficiency(&instance)?.passed() {
            survey.efficient += 1;
        } else {
            survey.inefficient_instances.push(i);
        }
    }
    Ok(survey)
}

/// The single-resource fixture for the profit-monotonicity sweep: the
/// auctioneer values the resource at 50, the winner b0 at 60, and the losers
/// b1 and b2 at 55 and 52. Payments run from 55 to 70 in steps of 5.
pub fn theorem1_fixture() -> SweepSpec {
    let table = FairnessTable::new(
        vec![
            vec![Money::from_major(60)],
            vec![Money::from_major(55)],
            vec![Money::from_major(52)],
        ],
        vec![Money::from_major(50)],
    )
    .expect("fixture table is valid")
    .into_unsealed();
    let r0 = Package::singleton(ResourceId(0));
    let bids = BidTable::new(vec![
        AtomicBid::new(0, &[0], Money::from_major(55)),
        AtomicBid::new(1, &[0], Money::from_major(54)),
        AtomicBid::new(2, &[0], Money::from_major(53)),
    ])
    .expect("fixture bids are valid");
    SweepSpec::new(
        Instance { table, bids, m: 1 },
        SweepTarget {
            winner: BidderId(0),
            package: r0,
            package_cost: Money::from_major(55),
        },
        SweptParameter::WinnerBid,
        money_grid(Money::from_major(55), Money::from_major(70), Money::from_major(5)),
        0,
    )
    .expect("fixture grid is valid")
}

/// Single resource with auctioneer fair value `qa`, sold at `package_cost`,
/// sweeping the winner's declared fair value over `grid`.
pub fn theorem2_spec(
    qa: Money,
    package_cost: Money,
    grid: Vec<Money>,
) -> Result<SweepSpec, IncentiveError> {
    let table = FairnessTable::new(vec![vec![qa]], vec![qa])?.into_unsealed();
    let bids = BidTable::new(vec![AtomicBid::new(0, &[0], package_cost)])?;
    SweepSpec::new(
        Instance { table, bids, m: 1 },
        SweepTarget {
            winner: BidderId(0),
            package: Package::singleton(ResourceId(0)),
            package_cost,
        },
        SweptParameter::WinnerFairValue,
        grid,
        0,
    )
}

/// Auctioneer fair value $50, sold at $60, with the winner's declaration
/// running from a fifth of the reserve to three times it in tenths.
pub fn theorem2_default_spec() -> SweepSpec {
    let qa = Money::from_major(50);
    let grid = (2..=30).map(|tenths| Money::from_minor(qa.minor() * tenths / 10)).collect();
    theorem2_spec(qa, Money::from_major(60), grid).expect("default grid is valid")
}
