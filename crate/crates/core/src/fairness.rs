//! Final payments after Vickrey pricing.
//!
//! Untied packages go through the five-way payment table of
//! [`decide_payment`]. When the package cost exceeds the auctioneer's fair
//! value, the surplus `Φ` is shared out: the winner's reward is taken first
//! ([`winner_reward`]), and what is left funds the losing bidders in
//! proportion to how far their fair value exceeds the auctioneer's
//! ([`redistribute_profit`]). Tied packages are split among the tied bidders by
//! utility instead ([`settle_tie`]).

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gva::GvaPricing;
use crate::model::{utility_value, BidTable, BidderId, FairnessTable, ModelError, Package};
use crate::money::{largest_remainder, serde_rational, Money, Rational};
use crate::wdp::TieGroup;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FairnessError {
    #[error("auctioneer fair value is zero, profit ratios are undefined")]
    DegenerateFairValue,
    #[error("tie group is empty")]
    InvalidTieGroup,
    #[error(transparent)]
    Table(#[from] ModelError),
}

/// Which branch of the payment table fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PaymentCase {
    /// Package cost above the auctioneer's fair value: pay the cost, share the profit.
    #[serde(rename = "A")]
    Profit,
    /// Package cost equal to the auctioneer's fair value.
    #[serde(rename = "B")]
    AtFairValue,
    /// Below the auctioneer's value, but the winner's own fair value covers it:
    /// pay the auctioneer's value.
    #[serde(rename = "C")]
    RaisedToAuctioneer,
    /// Below both fair values, winner's fair value at most the cost: pay the cost.
    #[serde(rename = "D")]
    KeepsCost,
    /// Between the cost and the auctioneer's value: pay the winner's fair value.
    #[serde(rename = "E")]
    RaisedToWinner,
}

impl PaymentCase {
    pub fn tag(self) -> &'static str {
        match self {
            PaymentCase::Profit => "A",
            PaymentCase::AtFairValue => "B",
            PaymentCase::RaisedToAuctioneer => "C",
            PaymentCase::KeepsCost => "D",
            PaymentCase::RaisedToWinner => "E",
        }
    }
}

/// Final payment for package cost `cost`, auctioneer fair value
/// `auctioneer_fair` and winner fair value `winner_fair`.
pub fn decide_payment(
    cost: Money,
    auctioneer_fair: Money,
    winner_fair: Money,
) -> (Money, PaymentCase) {
    use std::cmp::Ordering::*;
    match cost.cmp(&auctioneer_fair) {
        Greater => (cost, PaymentCase::Profit),
        Equal => (cost, PaymentCase::AtFairValue),
        Less if winner_fair >= auctioneer_fair => {
            (auctioneer_fair, PaymentCase::RaisedToAuctioneer)
        }
        Less if winner_fair <= cost => (cost, PaymentCase::KeepsCost),
        Less => (winner_fair, PaymentCase::RaisedToWinner),
    }
}

/// A losing bidder's cut of the profit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedistributionShare {
    pub bidder: BidderId,
    /// `(Q_k − Q_a) / Q_a` before clamping.
    #[serde(with = "serde_rational")]
    pub ratio: Rational,
    pub amount: Money,
}

/// `(fair − auctioneer_fair) / auctioneer_fair`.
fn premium_ratio(fair: Money, auctioneer_fair: Money) -> Result<Rational, FairnessError> {
    if auctioneer_fair == Money::ZERO {
        return Err(FairnessError::DegenerateFairValue);
    }
    Ok(Rational::new(
        (fair - auctioneer_fair).minor() as i128,
        auctioneer_fair.minor() as i128,
    ))
}

struct Redistribution {
    shares: Vec<RedistributionShare>,
    scaled: bool,
}

fn redistribute(
    pool: Money,
    auctioneer_fair: Money,
    losers: &[(BidderId, Money)],
) -> Result<Redistribution, FairnessError> {
    let mut losers = losers.to_vec();
    losers.sort_by_key(|(b, _)| *b);
    let ratios = losers
        .iter()
        .map(|&(_, fair)| premium_ratio(fair, auctioneer_fair))
        .collect::<Result<Vec<_>, _>>()?;

    let raw: Vec<Rational> = ratios
        .iter()
        .map(|r| pool.scale(*r).max(Rational::zero()))
        .collect();
    let raw_total: Rational = raw.iter().sum();
    let pool_exact = pool.to_ratio();

    let (amounts, scaled) = if raw_total > pool_exact {
        let factor = pool_exact / raw_total;
        let exact: Vec<Rational> = raw.iter().map(|x| x * factor).collect();
        (largest_remainder(pool, &exact), true)
    } else {
        let target = Money::from_ratio_half_up(raw_total);
        (largest_remainder(target, &raw), false)
    };

    let shares = losers
        .iter()
        .zip(ratios)
        .zip(amounts)
        .map(|((&(bidder, _), ratio), amount)| RedistributionShare {
            bidder,
            ratio,
            amount,
        })
        .collect();
    Ok(Redistribution { shares, scaled })
}

/// Shares of `profit` for the losing bidders of a package.
///
/// Each loser is owed `profit × (Q_k − Q_a) / Q_a`, floored at zero. If those
/// claims add up to more than `profit` they are scaled down to exactly
/// `profit`. Cents are assigned by largest remainder, ties to the lower bidder
/// index. Output is ordered by bidder.
pub fn redistribute_profit(
    profit: Money,
    auctioneer_fair: Money,
    losers: &[(BidderId, Money)],
) -> Result<Vec<RedistributionShare>, FairnessError> {
    Ok(redistribute(profit, auctioneer_fair, losers)?.shares)
}

/// Exact reward owed to the winner out of `profit`, given its declared fair
/// value for the package.
///
/// With `r = (Q_w − Q_a) / Q_a`, the reward is `Φ(1 − r)` for `r ≥ 0` and
/// `Φ(1 − 2|r|)` when the winner under-declared. It peaks at `Φ` for a truthful
/// `r = 0` and goes negative for `r > 1` or `r < −½`.
pub fn winner_reward_exact(
    profit: Money,
    auctioneer_fair: Money,
    winner_fair: Money,
) -> Result<Rational, FairnessError> {
    let r = premium_ratio(winner_fair, auctioneer_fair)?;
    let factor = if r.is_negative() {
        Rational::one() - r.abs() * 2
    } else {
        Rational::one() - r
    };
    Ok(profit.scale(factor))
}

/// [`winner_reward_exact`] rounded half-up to whole cents. A negative value
/// is an extra charge on the winner.
pub fn winner_reward(
    profit: Money,
    auctioneer_fair: Money,
    winner_fair: Money,
) -> Result<Money, FairnessError> {
    winner_reward_exact(profit, auctioneer_fair, winner_fair).map(Money::from_ratio_half_up)
}

/// Adjustments recorded while settling a package, for audit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SettlementEvent {
    /// A loser's fair value was below the auctioneer's; its share was set to zero.
    LoserClamped { bidder: BidderId },
    /// Loser claims exceeded the pool and were scaled down to it.
    PoolScaled { pool: Money },
    /// Part of the profit was not claimed by anyone and stays with the auctioneer.
    PoolRetained { amount: Money },
    /// The winner's reward was negative and is charged on top of its payment.
    WinnerPenalty { amount: Money },
}

impl SettlementEvent {
    /// Clamp, scale and retention events. Without any of them the profit is
    /// paid out in full to the winner and the losers.
    pub fn limits_distribution(&self) -> bool {
        !matches!(self, SettlementEvent::WinnerPenalty { .. })
    }
}

/// Settlement of one untied winning package.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendedSettlement {
    pub package: Package,
    pub winner: BidderId,
    pub package_cost: Money,
    pub auctioneer_fair: Money,
    pub winner_fair: Money,
    pub case: PaymentCase,
    /// Amount from the payment table alone.
    pub case_payment: Money,
    /// What the winner hands over: `case_payment` plus any penalty from a
    /// negative reward.
    pub final_payment: Money,
    pub profit: Money,
    pub loss: Money,
    /// Reward to the winner, taken from the profit before the losers are paid.
    pub winner_reward: Money,
    /// Profit left for the losers once a positive reward is taken out.
    pub loser_pool: Money,
    pub shares: Vec<RedistributionShare>,
    pub events: Vec<SettlementEvent>,
}

impl ExtendedSettlement {
    pub fn distributed(&self) -> Money {
        self.shares.iter().map(|s| s.amount).sum()
    }

    /// Money the auctioneer keeps from this package.
    pub fn auctioneer_receipt(&self) -> Money {
        self.final_payment - self.distributed() - self.winner_reward.positive_part()
    }

    /// What the winner is out of pocket after its reward.
    pub fn net_payment(&self) -> Money {
        self.final_payment - self.winner_reward.positive_part()
    }

    pub fn share_of(&self, bidder: BidderId) -> Money {
        self.shares
            .iter()
            .find(|s| s.bidder == bidder)
            .map_or(Money::ZERO, |s| s.amount)
    }
}

/// Bidders other than `winner` holding a positive bid on exactly `package`,
/// with their fair values for it.
fn losing_bidders(
    winner: BidderId,
    package: Package,
    table: &FairnessTable,
    bids: &BidTable,
) -> Result<Vec<(BidderId, Money)>, FairnessError> {
    let mut out = Vec::new();
    for b in bids.bids() {
        if b.package == package && b.bidder != winner && b.amount.is_positive() {
            out.push((b.bidder, table.fair_value_package(b.bidder, package)?));
        }
    }
    out.sort_by_key(|(b, _)| *b);
    out.dedup_by_key(|(b, _)| *b);
    Ok(out)
}

/// Settles one awarded package at the given package cost.
pub fn settle_award(
    winner: BidderId,
    package: Package,
    package_cost: Money,
    table: &FairnessTable,
    bids: &BidTable,
) -> Result<ExtendedSettlement, FairnessError> {
    let auctioneer_fair = table.auctioneer_fair_value(package)?;
    let winner_fair = table.fair_value_package(winner, package)?;
    let (case_payment, case) = decide_payment(package_cost, auctioneer_fair, winner_fair);
    let profit = (package_cost - auctioneer_fair).positive_part();
    let loss = (auctioneer_fair - package_cost).positive_part();

    let mut settlement = ExtendedSettlement {
        package,
        winner,
        package_cost,
        auctioneer_fair,
        winner_fair,
        case,
        case_payment,
        final_payment: case_payment,
        profit,
        loss,
        winner_reward: Money::ZERO,
        loser_pool: Money::ZERO,
        shares: Vec::new(),
        events: Vec::new(),
    };
    if case != PaymentCase::Profit {
        return Ok(settlement);
    }

    let reward = winner_reward(profit, auctioneer_fair, winner_fair)?;
    let pool = profit - reward.positive_part();
    let losers = losing_bidders(winner, package, table, bids)?;
    let split = redistribute(pool, auctioneer_fair, &losers)?;

    for share in &split.shares {
        if share.ratio.is_negative() {
            settlement
                .events
                .push(SettlementEvent::LoserClamped { bidder: share.bidder });
        }
    }
    if split.scaled {
        settlement.events.push(SettlementEvent::PoolScaled { pool });
    }
    let distributed: Money = split.shares.iter().map(|s| s.amount).sum();
    if distributed < pool {
        settlement.events.push(SettlementEvent::PoolRetained {
            amount: pool - distributed,
        });
    }
    if reward.is_negative() {
        settlement
            .events
            .push(SettlementEvent::WinnerPenalty { amount: -reward });
        settlement.final_payment = case_payment - reward;
    }
    settlement.winner_reward = reward;
    settlement.loser_pool = pool;
    settlement.shares = split.shares;
    Ok(settlement)
}

/// Settles every priced package; output ordered by package bitmask, then winner.
pub fn settle_extended(
    pricing: &GvaPricing,
    table: &FairnessTable,
    bids: &BidTable,
) -> Result<Vec<ExtendedSettlement>, FairnessError> {
    let mut out = pricing
        .records
        .iter()
        .map(|r| settle_award(r.bidder, r.package, r.package_cost, table, bids))
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_by_key(|s| (s.package, s.winner));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieEntry {
    pub bidder: BidderId,
    pub utility: Money,
    #[serde(with = "serde_rational")]
    pub fraction: Rational,
    pub payment: Money,
}

/// Equitable split of a tied package.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieSettlement {
    pub package: Package,
    pub total: Money,
    pub entries: Vec<TieEntry>,
}

impl TieSettlement {
    pub fn entry(&self, bidder: BidderId) -> Option<&TieEntry> {
        self.entries.iter().find(|e| e.bidder == bidder)
    }
}

/// Splits `total` among bidders in proportion to their utilities.
///
/// Bidders with non-positive utility get nothing and the rest renormalize; if
/// nobody has positive utility the split is equal. Payments are exact to the
/// cent by largest remainder, ties to the lower bidder index.
pub fn basic_fairness_split(
    package: Package,
    total: Money,
    utilities: &[(BidderId, Money)],
) -> Result<TieSettlement, FairnessError> {
    if utilities.is_empty() {
        return Err(FairnessError::InvalidTieGroup);
    }
    let mut utilities = utilities.to_vec();
    utilities.sort_by_key(|(b, _)| *b);

    let any_positive = utilities.iter().any(|(_, u)| u.is_positive());
    let weights: Vec<Rational> = utilities
        .iter()
        .map(|(_, u)| match (any_positive, u.is_positive()) {
            (true, true) => u.to_ratio(),
            (true, false) => Rational::zero(),
            (false, _) => Rational::one(),
        })
        .collect();
    let weight_total: Rational = weights.iter().sum();
    let fractions: Vec<Rational> = weights.iter().map(|w| w / weight_total).collect();
    let exact: Vec<Rational> = fractions.iter().map(|f| total.scale(*f)).collect();
    let payments = largest_remainder(total, &exact);

    let entries = utilities
        .iter()
        .zip(fractions)
        .zip(payments)
        .map(|((&(bidder, utility), fraction), payment)| TieEntry {
            bidder,
            utility,
            fraction,
            payment,
        })
        .collect();
    Ok(TieSettlement {
        package,
        total,
        entries,
    })
}

/// Splits a tied package among its bidders by utility `Γ = bid − Π`.
pub fn settle_tie(group: &TieGroup, table: &FairnessTable) -> Result<TieSettlement, FairnessError> {
    if group.bidders.is_empty() {
        return Err(FairnessError::InvalidTieGroup);
    }
    let utilities = group
        .bidders
        .iter()
        .map(|&b| {
            let fair = table.fair_value_package(b, group.package)?;
            Ok((b, utility_value(group.amount, fair)))
        })
        .collect::<Result<Vec<_>, FairnessError>>()?;
    basic_fairness_split(group.package, group.amount, &utilities)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::AtomicBid;
    use proptest::prelude::*;

    fn usd(x: i64) -> Money {
        Money::from_major(x)
    }

    fn cents(x: i64) -> Money {
        Money::from_minor(x)
    }

    #[test]
    fn payment_table_examples() {
        assert_eq!(decide_payment(usd(60), usd(50), usd(55)), (usd(60), PaymentCase::Profit));
        assert_eq!(decide_payment(usd(50), usd(50), usd(10)), (usd(50), PaymentCase::AtFairValue));
        assert_eq!(
            decide_payment(usd(40), usd(50), usd(55)),
            (usd(50), PaymentCase::RaisedToAuctioneer)
        );
        assert_eq!(
            decide_payment(usd(40), usd(50), usd(50)),
            (usd(50), PaymentCase::RaisedToAuctioneer)
        );
        assert_eq!(
            decide_payment(usd(40), usd(50), usd(45)),
            (usd(45), PaymentCase::RaisedToWinner)
        );
        assert_eq!(decide_payment(usd(40), usd(50), usd(35)), (usd(40), PaymentCase::KeepsCost));
        assert_eq!(decide_payment(usd(40), usd(50), usd(40)), (usd(40), PaymentCase::KeepsCost));
    }

    #[test]
    fn redistribution_examples() {
        let shares = redistribute_profit(
            usd(10),
            usd(50),
            &[(BidderId(1), usd(55)), (BidderId(2), usd(45))],
        )
        .unwrap();
        assert_eq!(shares[0].amount, usd(1));
        assert_eq!(shares[0].ratio, Rational::new(1, 10));
        assert_eq!(shares[1].amount, Money::ZERO);
        assert_eq!(shares[1].ratio, Rational::new(-1, 10));

        let none = redistribute_profit(Money::ZERO, usd(50), &[(BidderId(1), usd(90))]).unwrap();
        assert!(none.iter().all(|s| s.amount == Money::ZERO));

        let scaled = redistribute_profit(
            usd(10),
            usd(50),
            &[(BidderId(1), usd(150)), (BidderId(2), usd(125))],
        )
        .unwrap();
        let amounts: Vec<Money> = scaled.iter().map(|s| s.amount).collect();
        assert_eq!(amounts, vec![cents(571), cents(429)]);

        assert_eq!(
            redistribute_profit(usd(10), Money::ZERO, &[(BidderId(1), usd(1))]),
            Err(FairnessError::DegenerateFairValue)
        );
    }

    #[test]
    fn reward_examples() {
        assert_eq!(winner_reward(usd(10), usd(50), usd(50)), Ok(usd(10)));
        assert_eq!(winner_reward(usd(10), usd(50), usd(120)), Ok(usd(-4)));
        assert_eq!(winner_reward(usd(10), usd(50), usd(40)), Ok(usd(6)));
        assert_eq!(winner_reward(usd(10), usd(50), usd(100)), Ok(Money::ZERO));
        assert_eq!(
            winner_reward(usd(10), Money::ZERO, usd(40)),
            Err(FairnessError::DegenerateFairValue)
        );
    }

    /// One resource, auctioneer value 50, winner b0 with fair value `qw`,
    /// losers b1.. with the given fair values, everyone bidding on {r0}.
    fn single_resource(qw: i64, losers: &[i64]) -> (FairnessTable, BidTable) {
        let mut rows = vec![vec![usd(qw)]];
        rows.extend(losers.iter().map(|&q| vec![usd(q)]));
        let table = FairnessTable::new(rows, vec![usd(50)]).unwrap().into_unsealed();
        let bids = (0..=losers.len())
            .map(|b| AtomicBid::new(b, &[0], usd(100 - b as i64)))
            .collect();
        (table, BidTable::new(bids).unwrap())
    }

    #[test]
    fn truthful_winner_takes_the_whole_profit() {
        let (table, bids) = single_resource(50, &[55]);
        let s = settle_award(BidderId(0), Package::from_resources([0]), usd(60), &table, &bids)
            .unwrap();
        assert_eq!(s.case, PaymentCase::Profit);
        assert_eq!(s.profit, usd(10));
        assert_eq!(s.winner_reward, usd(10));
        assert_eq!(s.loser_pool, Money::ZERO);
        assert_eq!(s.share_of(BidderId(1)), Money::ZERO);
        assert_eq!(s.final_payment, usd(60));
        assert_eq!(s.net_payment(), usd(50));
        assert_eq!(s.auctioneer_receipt(), usd(50));
    }

    #[test]
    fn cost_at_fair_value_has_no_profit() {
        let (table, bids) = single_resource(45, &[55]);
        let s = settle_award(BidderId(0), Package::from_resources([0]), usd(50), &table, &bids)
            .unwrap();
        assert_eq!(s.case, PaymentCase::AtFairValue);
        assert_eq!(s.profit, Money::ZERO);
        assert!(s.shares.is_empty());
        assert_eq!(s.final_payment, usd(50));
    }

    #[test]
    fn under_cost_raised_to_auctioneer_value() {
        let (table, bids) = single_resource(55, &[60]);
        let s = settle_award(BidderId(0), Package::from_resources([0]), usd(40), &table, &bids)
            .unwrap();
        assert_eq!(s.case, PaymentCase::RaisedToAuctioneer);
        assert_eq!(s.final_payment, usd(50));
        assert_eq!(s.profit, Money::ZERO);
        assert_eq!(s.loss, usd(10));
        assert!(s.shares.is_empty());
    }

    #[test]
    fn over_declaring_winner_pays_a_penalty() {
        let (table, bids) = single_resource(120, &[55]);
        let s = settle_award(BidderId(0), Package::from_resources([0]), usd(60), &table, &bids)
            .unwrap();
        assert_eq!(s.winner_reward, usd(-4));
        assert_eq!(s.loser_pool, usd(10));
        assert_eq!(s.share_of(BidderId(1)), usd(1));
        assert_eq!(s.final_payment, usd(64));
        assert!(s.events.contains(&SettlementEvent::WinnerPenalty { amount: usd(4) }));
        assert!(s.events.contains(&SettlementEvent::PoolRetained { amount: usd(9) }));
        assert_eq!(s.auctioneer_receipt(), usd(63));
    }

    #[test]
    fn reference_auction_untied_variant() {
        // b1 wins the grand bundle at package cost 40 once b0's bid on it is gone
        let table = fixtures::reference_fairness_table().into_unsealed();
        let bids = fixtures::reference_bid_table_where(|b, c| !(b == 0 && c == fixtures::GRAND_BUNDLE));
        let grand = Package::from_resources([0, 1, 2]);
        let s = settle_award(BidderId(1), grand, usd(40), &table, &bids).unwrap();
        assert_eq!(s.auctioneer_fair, usd(33));
        assert_eq!(s.winner_fair, usd(20));
        assert_eq!(s.case, PaymentCase::Profit);
        assert_eq!(s.profit, usd(7));
        // r = −13/33, reward = 7 × 7/33 = 1.4848…
        assert_eq!(s.winner_reward, cents(148));
        assert_eq!(s.loser_pool, cents(552));
        assert_eq!(s.shares.len(), 1);
        assert_eq!(s.shares[0].bidder, BidderId(2));
        assert_eq!(s.shares[0].ratio, Rational::new(-8, 33));
        assert_eq!(s.shares[0].amount, Money::ZERO);
    }

    #[test]
    fn settle_extended_orders_and_reads_sealed_table() {
        use crate::gva::WinnerPrice;
        let bids = fixtures::reference_bid_table();
        let pricing = GvaPricing {
            records: vec![WinnerPrice {
                bidder: BidderId(0),
                package: Package::from_resources([0, 1, 2]),
                bid: usd(50),
                discount: Money::ZERO,
                package_cost: usd(50),
            }],
        };
        let sealed = fixtures::reference_fairness_table();
        assert_eq!(
            settle_extended(&pricing, &sealed, &bids),
            Err(FairnessError::Table(ModelError::Sealed))
        );
        let open = sealed.into_unsealed();
        let out = settle_extended(&pricing, &open, &bids).unwrap();
        assert_eq!(out.len(), 1);
        // profit 17, b0 fair 21 → r = −12/33, reward 17 × 9/33 = 4.636… → 4.64
        assert_eq!(out[0].winner_reward, cents(464));
        // losers b1 (fair 20) and b2 (fair 25), both below 33
        assert_eq!(out[0].shares.len(), 2);
        assert!(out[0].shares.iter().all(|s| s.amount == Money::ZERO));
    }

    #[test]
    fn reference_tie_split() {
        let table = fixtures::reference_fairness_table().into_unsealed();
        let group = TieGroup {
            package: Package::from_resources([0, 1, 2]),
            bidders: vec![BidderId(0), BidderId(1)],
            amount: usd(50),
        };
        let tie = settle_tie(&group, &table).unwrap();
        assert_eq!(tie.entries[0].utility, usd(29));
        assert_eq!(tie.entries[1].utility, usd(30));
        assert_eq!(tie.entries[0].fraction, Rational::new(29, 59));
        assert_eq!(tie.entries[1].fraction, Rational::new(30, 59));
        assert_eq!(tie.entries[0].payment, cents(2458));
        assert_eq!(tie.entries[1].payment, cents(2542));
    }

    #[test]
    fn utility_split_of_one_hundred() {
        let tie = basic_fairness_split(
            Package::from_resources([0]),
            usd(100),
            &[(BidderId(0), usd(6)), (BidderId(1), usd(4)), (BidderId(2), usd(4))],
        )
        .unwrap();
        let payments: Vec<Money> = tie.entries.iter().map(|e| e.payment).collect();
        assert_eq!(payments, vec![cents(4286), cents(2857), cents(2857)]);
        assert_eq!(tie.entries[0].fraction, Rational::new(6, 14));
    }

    #[test]
    fn equal_utilities_split_evenly() {
        let tie = basic_fairness_split(
            Package::from_resources([0]),
            usd(50),
            &[(BidderId(3), usd(7)), (BidderId(1), usd(7))],
        )
        .unwrap();
        assert_eq!(tie.entries[0].bidder, BidderId(1));
        assert!(tie.entries.iter().all(|e| e.payment == usd(25)));
        assert!(tie.entries.iter().all(|e| e.fraction == Rational::new(1, 2)));
    }

    #[test]
    fn non_positive_utilities_are_excluded_or_split_equally() {
        let some = basic_fairness_split(
            Package::from_resources([0]),
            usd(30),
            &[(BidderId(0), usd(-2)), (BidderId(1), usd(5)), (BidderId(2), Money::ZERO)],
        )
        .unwrap();
        assert_eq!(some.entry(BidderId(0)).unwrap().payment, Money::ZERO);
        assert_eq!(some.entry(BidderId(1)).unwrap().payment, usd(30));
        assert_eq!(some.entry(BidderId(1)).unwrap().fraction, Rational::one());

        let none = basic_fairness_split(
            Package::from_resources([0]),
            usd(30),
            &[(BidderId(0), usd(-2)), (BidderId(1), Money::ZERO), (BidderId(2), usd(-9))],
        )
        .unwrap();
        assert!(none.entries.iter().all(|e| e.payment == usd(10)));
    }

    #[test]
    fn empty_tie_group_rejected() {
        let table = fixtures::reference_fairness_table().into_unsealed();
        let group = TieGroup {
            package: Package::from_resources([0]),
            bidders: vec![],
            amount: usd(1),
        };
        assert_eq!(settle_tie(&group, &table), Err(FairnessError::InvalidTieGroup));
    }

    fn straight_line_payment(p: i64, qa: i64, qi: i64) -> i64 {
        if p > qa {
            return p;
        }
        if p == qa {
            return p;
        }
        if qi > qa {
            return qa;
        }
        if qi == qa {
            return qa;
        }
        if qi <= p {
            p
        } else {
            qi
        }
    }

    proptest! {
        #[test]
        fn payment_table_matches_branch_listing(p in 0i64..200, qa in 0i64..200, qi in 0i64..200) {
            let (pay, case) = decide_payment(cents(p), cents(qa), cents(qi));
            prop_assert_eq!(pay, cents(straight_line_payment(p, qa, qi)));
            prop_assert!(pay >= cents(p).min(cents(qa)));
            if qi >= qa {
                prop_assert!(pay >= cents(qa));
            }
            let expected = if p > qa { "A" } else if p == qa { "B" } else if qi >= qa { "C" } else if qi <= p { "D" } else { "E" };
            prop_assert_eq!(case.tag(), expected);
        }

        #[test]
        fn profit_split_never_exceeds_profit(
            qa in 1i64..200,
            qw in 0i64..400,
            over in 1i64..300,
            losers in prop::collection::vec(0i64..400, 0..5),
        ) {
            let (table, bids) = {
                let mut rows = vec![vec![usd(qw)]];
                rows.extend(losers.iter().map(|&q| vec![usd(q)]));
                let table = FairnessTable::new(rows, vec![usd(qa)]).unwrap().into_unsealed();
                let bids = (0..=losers.len())
                    .map(|b| AtomicBid::new(b, &[0], usd(1)))
                    .collect();
                (table, BidTable::new(bids).unwrap())
            };
            let s = settle_award(BidderId(0), Package::from_resources([0]), usd(qa + over), &table, &bids).unwrap();
            prop_assert_eq!(s.case, PaymentCase::Profit);
            let out = s.distributed() + s.winner_reward.positive_part();
            prop_assert!(out <= s.profit);
            if !s.events.iter().any(SettlementEvent::limits_distribution) {
                prop_assert_eq!(out, s.profit);
            }
            prop_assert!(s.shares.iter().all(|x| !x.amount.is_negative()));
        }

        #[test]
        fn tie_payments_sum_to_total(total in 0i64..100_000, utils in prop::collection::vec(-50i64..500, 1..6)) {
            let utilities: Vec<(BidderId, Money)> = utils.iter().enumerate().map(|(i, &u)| (BidderId(i), cents(u))).collect();
            let tie = basic_fairness_split(Package::from_resources([0]), cents(total), &utilities).unwrap();
            prop_assert_eq!(tie.entries.iter().map(|e| e.payment).sum::<Money>(), cents(total));
            prop_assert_eq!(tie.entries.iter().map(|e| e.fraction).sum::<Rational>(), Rational::one());
        }

        #[test]
        fn loser_share_grows_with_profit(qa in 1i64..100, premium in 1i64..100, a in 0i64..10_000, b in 0i64..10_000) {
            let (lo, hi) = (a.min(b), a.max(b));
            let losers = [(BidderId(1), cents(qa + premium))];
            let s_lo = redistribute_profit(cents(lo), cents(qa), &losers).unwrap();
            let s_hi = redistribute_profit(cents(hi), cents(qa), &losers).unwrap();
            prop_assert!(s_lo[0].amount <= s_hi[0].amount);
        }
    }
}
