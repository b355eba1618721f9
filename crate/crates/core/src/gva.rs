//! Generalized Vickrey pricing of the winning packages.
//!
//! A winner's Vickrey discount is how much total revenue drops when every one
//! of its bids is withdrawn: `W* − W₋ᵢ`. Its package cost is its awarded bid
//! value minus that discount. A bidder holding several packages gets a single
//! discount, split over its packages in proportion to their bid amounts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BidTable, BidderId, Package};
use crate::money::{apportion, Money};
use crate::wdp::{Allocation, WdpError, WdpResult, WinnerDetermination};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GvaError {
    #[error("package {package} is tied and must be settled by equitable splitting")]
    TieNotPriceable { package: Package },
    #[error(transparent)]
    Solver(#[from] WdpError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinnerPrice {
    pub bidder: BidderId,
    pub package: Package,
    pub bid: Money,
    pub discount: Money,
    pub package_cost: Money,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GvaPricing {
    /// Ordered by package bitmask, then bidder.
    pub records: Vec<WinnerPrice>,
}

impl GvaPricing {
    pub fn for_bidder(&self, bidder: BidderId) -> impl Iterator<Item = &WinnerPrice> {
        self.records.iter().filter(move |r| r.bidder == bidder)
    }

    /// Sum of package costs charged to `bidder`.
    pub fn cost_of(&self, bidder: BidderId) -> Money {
        self.for_bidder(bidder).map(|r| r.package_cost).sum()
    }
}

/// Prices every winner of an untied optimal result.
pub fn price_gva(
    bids: &BidTable,
    result: &WdpResult,
    solver: &dyn WinnerDetermination,
    m: usize,
) -> Result<GvaPricing, GvaError> {
    if let Some(tie) = result.ties.first() {
        return Err(GvaError::TieNotPriceable {
            package: tie.package,
        });
    }
    vickrey_prices(bids, &result.optimal, solver, m, |_, _| false)
}

/// Vickrey prices for the awards of `optimal` not rejected by `skip`.
///
/// The discount is still measured against the whole allocation; it is only
/// apportioned over the kept awards.
pub(crate) fn vickrey_prices(
    bids: &BidTable,
    optimal: &Allocation,
    solver: &dyn WinnerDetermination,
    m: usize,
    skip: impl Fn(Package, Money) -> bool,
) -> Result<GvaPricing, GvaError> {
    let total = optimal.revenue;
    let mut records = Vec::new();
    for bidder in optimal.winners() {
        let awards: Vec<_> = optimal
            .awards_of(bidder)
            .filter(|a| !skip(a.package, a.amount))
            .collect();
        if awards.is_empty() {
            continue;
        }
        let without = solver.revenue(&bids.without_bidder(bidder), m)?;
        let value: Money = awards.iter().map(|a| a.amount).sum();
        let discount = (total - without).max(Money::ZERO).min(value);

        let mut awards = awards;
        awards.sort_by_key(|a| a.package);
        let weights: Vec<_> = awards.iter().map(|a| a.amount.to_ratio()).collect();
        let parts = apportion(discount, &weights);
        for (award, part) in awards.iter().zip(parts) {
            records.push(WinnerPrice {
                bidder,
                package: award.package,
                bid: award.amount,
                discount: part,
                package_cost: award.amount - part,
            });
        }
    }
    records.sort_by_key(|r| (r.package, r.bidder));
    Ok(GvaPricing { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, GRAND_BUNDLE};
    use crate::model::AtomicBid;
    use crate::wdp::{solve_bnb, solve_oracle, Solver};
    use proptest::prelude::*;

    fn table(bids: &[(usize, &[usize], i64)]) -> BidTable {
        BidTable::new(
            bids.iter()
                .map(|&(b, r, a)| AtomicBid::new(b, r, Money::from_major(a)))
                .collect(),
        )
        .unwrap()
    }

    fn price(bids: &BidTable, m: usize) -> GvaPricing {
        let result = solve_bnb(bids, m).unwrap();
        price_gva(bids, &result, &Solver::Bnb, m).unwrap()
    }

    #[test]
    fn lone_bidder_pays_nothing() {
        let pricing = price(&table(&[(0, &[0], 10)]), 1);
        assert_eq!(
            pricing.records,
            vec![WinnerPrice {
                bidder: BidderId(0),
                package: Package::from_resources([0]),
                bid: Money::from_major(10),
                discount: Money::from_major(10),
                package_cost: Money::ZERO,
            }]
        );
    }

    #[test]
    fn disjoint_demands_pay_nothing() {
        let pricing = price(&table(&[(0, &[0], 10), (1, &[1], 10)]), 2);
        assert_eq!(pricing.records.len(), 2);
        for r in &pricing.records {
            assert_eq!(r.discount, Money::from_major(10));
            assert_eq!(r.package_cost, Money::ZERO);
        }
    }

    #[test]
    fn reference_bids_without_b0_grand_bid() {
        let bids = fixtures::reference_bid_table_where(|b, c| !(b == 0 && c == GRAND_BUNDLE));
        let result = solve_oracle(&bids, 3).unwrap();
        assert!(result.ties.is_empty());
        assert_eq!(result.optimal.revenue, Money::from_major(50));

        // revenue with every b1 bid withdrawn, from the oracle
        let without = solve_oracle(&bids.without_bidder(BidderId(1)), 3)
            .unwrap()
            .optimal
            .revenue;
        assert_eq!(without, Money::from_major(40));

        let pricing = price_gva(&bids, &result, &Solver::Oracle, 3).unwrap();
        assert_eq!(
            pricing.records,
            vec![WinnerPrice {
                bidder: BidderId(1),
                package: Package::from_resources([0, 1, 2]),
                bid: Money::from_major(50),
                discount: Money::from_major(10),
                package_cost: Money::from_major(40),
            }]
        );
    }

    #[test]
    fn tied_result_is_refused() {
        let bids = fixtures::reference_bid_table();
        let result = solve_bnb(&bids, 3).unwrap();
        assert_eq!(
            price_gva(&bids, &result, &Solver::Bnb, 3),
            Err(GvaError::TieNotPriceable {
                package: Package::from_resources([0, 1, 2])
            })
        );
    }

    #[test]
    fn multi_package_discount_is_apportioned_by_bid() {
        // b0 wins {r0} at 30 and {r1} at 10; b1 would otherwise get {r0,r1} at 20
        let bids = table(&[(0, &[0], 30), (0, &[1], 10), (1, &[0, 1], 20)]);
        let pricing = price(&bids, 2);
        // discount 40 − 20 = 20, split 3:1
        let discounts: Vec<Money> = pricing.records.iter().map(|r| r.discount).collect();
        assert_eq!(discounts, vec![Money::from_major(15), Money::from_major(5)]);
        assert_eq!(pricing.cost_of(BidderId(0)), Money::from_major(20));
    }

    fn instance() -> impl Strategy<Value = (BidTable, usize)> {
        (1usize..=5, 1usize..=4).prop_flat_map(|(m, n)| {
            let bid = (0..n, 1u64..(1u64 << m), 0i64..=100);
            prop::collection::vec(bid, 1..=10).prop_map(move |raw| {
                let mut seen = std::collections::HashSet::new();
                let bids = raw
                    .into_iter()
                    .filter(|(b, p, _)| seen.insert((*b, *p)))
                    .map(|(b, p, a)| AtomicBid {
                        bidder: BidderId(b),
                        package: Package::from_bits(p),
                        amount: Money::from_major(a),
                    })
                    .collect();
                (BidTable::new(bids).unwrap(), m)
            })
        })
    }

    proptest! {
        #[test]
        fn package_cost_never_exceeds_bid((bids, m) in instance()) {
            let result = solve_bnb(&bids, m).unwrap();
            let pricing = vickrey_prices(&bids, &result.optimal, &Solver::Bnb, m, |_, _| false).unwrap();
            for r in &pricing.records {
                prop_assert!(r.discount >= Money::ZERO);
                prop_assert!(r.discount <= r.bid);
                prop_assert_eq!(r.package_cost, r.bid - r.discount);
            }
        }

        #[test]
        fn removing_a_non_pivotal_loser_keeps_prices((bids, m) in instance()) {
            let result = solve_bnb(&bids, m).unwrap();
            let winners = result.optimal.winners();
            let base = vickrey_prices(&bids, &result.optimal, &Solver::Bnb, m, |_, _| false).unwrap();
            let losers: Vec<BidderId> = bids.bids().iter().map(|b| b.bidder)
                .filter(|b| !winners.contains(b)).collect();
            for loser in losers {
                let reduced = bids.without_bidder(loser);
                let reduced_result = solve_bnb(&reduced, m).unwrap();
                // only compare when the loser was not pivotal for anyone
                let pivotal = winners.iter().any(|&w| {
                    Solver::Bnb.revenue(&bids.without_bidder(w), m).unwrap()
                        != Solver::Bnb.revenue(&reduced.without_bidder(w), m).unwrap()
                });
                let same_awards = reduced_result.optimal.awards.iter().map(|a| (a.bidder, a.package, a.amount))
                    .eq(result.optimal.awards.iter().map(|a| (a.bidder, a.package, a.amount)));
                if pivotal || !same_awards {
                    continue;
                }
                let again = vickrey_prices(&reduced, &reduced_result.optimal, &Solver::Bnb, m, |_, _| false).unwrap();
                prop_assert_eq!(&again, &base);
            }
        }
    }
}
