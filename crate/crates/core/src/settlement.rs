//! End-to-end settlement of one auction: winners, Vickrey package costs, and
//! the fairness adjustments, without any file handling.

use thiserror::Error;

use crate::fairness::{settle_extended, settle_tie, ExtendedSettlement, FairnessError, TieSettlement};
use crate::gva::{vickrey_prices, GvaError, GvaPricing};
use crate::model::{BidTable, BidderId, FairnessTable};
use crate::money::{Money, Rational};
use crate::wdp::{preprocess_dominated, WdpError, WdpResult, WinnerDetermination};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SettleError {
    #[error("winner determination failed: {0}")]
    Solver(#[from] WdpError),
    #[error("pricing failed: {0}")]
    Pricing(#[from] GvaError),
    #[error("settlement failed: {0}")]
    Fairness(#[from] FairnessError),
}

/// Everything decided for one auction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Settlement {
    pub wdp: WdpResult,
    /// Vickrey prices for the untied awards of `wdp.optimal`.
    pub pricing: GvaPricing,
    pub extended: Vec<ExtendedSettlement>,
    pub ties: Vec<TieSettlement>,
}

impl Settlement {
    pub fn total_final_payments(&self) -> Money {
        self.extended.iter().map(|s| s.final_payment).sum::<Money>()
            + self
                .ties
                .iter()
                .flat_map(|t| t.entries.iter())
                .map(|e| e.payment)
                .sum::<Money>()
    }

    pub fn total_redistributed(&self) -> Money {
        self.extended.iter().map(ExtendedSettlement::distributed).sum()
    }

    pub fn total_winner_rewards(&self) -> Money {
        self.extended
            .iter()
            .map(|s| s.winner_reward.positive_part())
            .sum()
    }

    pub fn auctioneer_receipts(&self) -> Money {
        self.total_final_payments() - self.total_redistributed() - self.total_winner_rewards()
    }

    /// Net money flowing from `bidder` to the auctioneer (negative when the
    /// bidder is paid).
    pub fn net_payment_of(&self, bidder: BidderId) -> Money {
        let mut net = Money::ZERO;
        for s in &self.extended {
            if s.winner == bidder {
                net += s.net_payment();
            }
            net -= s.share_of(bidder);
        }
        for t in &self.ties {
            if let Some(e) = t.entry(bidder) {
                net += e.payment;
            }
        }
        net
    }

    /// Value `bidder` receives when each won package (or won fraction of a
    /// tied package) is valued by `value`.
    pub fn received_value(
        &self,
        bidder: BidderId,
        mut value: impl FnMut(crate::model::Package) -> Money,
    ) -> Rational {
        let mut total = Rational::from_integer(0);
        for s in &self.extended {
            if s.winner == bidder {
                total += value(s.package).to_ratio();
            }
        }
        for t in &self.ties {
            if let Some(e) = t.entry(bidder) {
                total += value(t.package).scale(e.fraction);
            }
        }
        total
    }
}

/// Solves winner determination on the dominance-reduced bid table.
///
/// Award indices in the result refer to the reduced table, which is returned
/// alongside it.
pub fn determine_winners(
    bids: &BidTable,
    m: usize,
    solver: &dyn WinnerDetermination,
) -> Result<(BidTable, WdpResult), WdpError> {
    let reduced = preprocess_dominated(bids);
    let result = solver.solve(&reduced, m)?;
    Ok((reduced, result))
}

/// Prices and settles a solved auction. `table` must be unsealed and `bids`
/// is the full bid table: withdrawal revenues and losing bidders are both
/// taken from it, since a bid dropped as dominated may matter once the
/// dominating bidder is gone.
///
/// Awards whose package and amount form a tie group are split by utility at
/// the tied amount; every other award is priced by Vickrey discount and then
/// passed through the fairness payment table.
pub fn settle_winners(
    result: WdpResult,
    bids: &BidTable,
    table: &FairnessTable,
    m: usize,
    solver: &dyn WinnerDetermination,
) -> Result<Settlement, SettleError> {
    let tied = |package, amount| result.tie_for(package, amount).is_some();
    let pricing = vickrey_prices(bids, &result.optimal, solver, m, tied)?;
    let extended = settle_extended(&pricing, table, bids)?;

    let mut ties = Vec::new();
    for award in &result.optimal.awards {
        if let Some(group) = result.tie_for(award.package, award.amount) {
            if ties.iter().any(|t: &TieSettlement| t.package == group.package) {
                continue;
            }
            ties.push(settle_tie(group, table)?);
        }
    }
    ties.sort_by_key(|t| t.package);

    Ok(Settlement {
        wdp: result,
        pricing,
        extended,
        ties,
    })
}

/// [`determine_winners`] followed by [`settle_winners`].
pub fn settle(
    table: &FairnessTable,
    bids: &BidTable,
    m: usize,
    solver: &dyn WinnerDetermination,
) -> Result<Settlement, SettleError> {
    let (_, result) = determine_winners(bids, m, solver)?;
    settle_winners(result, bids, table, m, solver)
}
