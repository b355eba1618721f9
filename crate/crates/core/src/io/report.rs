//! Settlement report: the JSON document written by `settle`, and its flat CSV
//! export.
//!
//! Money fields are integer minor units. Bidders and resources appear by the
//! names given in the auction file. Field order is fixed by the structs and
//! every list is sorted, so equal inputs give byte-identical output.

use serde::{Deserialize, Serialize};

use crate::fairness::SettlementEvent;
use crate::io::spec::Auction;
use crate::money::{format_rational, Money};
use crate::settlement::Settlement;
use crate::wdp::{Allocation, Solver, WdpResult};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AwardRow {
    pub bidder: String,
    pub package: Vec<String>,
    pub amount: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieRow {
    pub package: Vec<String>,
    pub bidders: Vec<String>,
    pub amount: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WdpSection {
    pub solver: Solver,
    /// Whether the exhaustive oracle confirmed the revenue.
    pub oracle_checked: bool,
    pub revenue: Money,
    pub allocation: Vec<AwardRow>,
    pub ties: Vec<TieRow>,
    pub alternates: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GvaRow {
    pub bidder: String,
    pub package: Vec<String>,
    pub bid: Money,
    pub discount: Money,
    pub package_cost: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareRow {
    pub bidder: String,
    pub ratio: String,
    pub amount: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRow {
    pub event: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bidder: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amount: Option<Money>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessRow {
    pub package: Vec<String>,
    pub winner: String,
    pub case: String,
    pub package_cost: Money,
    pub auctioneer_fair_value: Money,
    pub winner_fair_value: Money,
    pub case_payment: Money,
    pub final_payment: Money,
    pub profit: Money,
    pub winner_reward: Money,
    pub loser_pool: Money,
    pub shares: Vec<ShareRow>,
    pub events: Vec<EventRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieEntryRow {
    pub bidder: String,
    pub utility: Money,
    pub fraction: String,
    pub payment: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieSection {
    pub package: Vec<String>,
    pub total: Money,
    pub entries: Vec<TieEntryRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub final_payments: Money,
    pub redistributed: Money,
    pub winner_rewards: Money,
    pub auctioneer_receipts: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BidderRow {
    pub bidder: String,
    /// Paid to the auctioneer, net of rewards and shares received.
    pub net_payment: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettlementReportFile {
    pub format_version: u32,
    pub minor_units_per_unit: i64,
    pub wdp: WdpSection,
    pub gva: Vec<GvaRow>,
    pub fairness: Vec<FairnessRow>,
    pub ties: Vec<TieSection>,
    pub bidders: Vec<BidderRow>,
    pub totals: Totals,
    pub policy: Vec<String>,
}

pub const POLICY_NOTES: [&str; 3] = [
    "The winner's reward is taken from the profit first; losing bidders share what remains.",
    "Loser claims above the remaining profit are scaled down to it; unclaimed profit stays with the auctioneer.",
    "A negative winner reward is charged on top of the final payment.",
];

fn awards(auction: &Auction, allocation: &Allocation) -> Vec<AwardRow> {
    let mut rows: Vec<_> = allocation
        .awards
        .iter()
        .map(|a| (a.package, a.bidder, a.amount))
        .collect();
    rows.sort();
    rows.into_iter()
        .map(|(package, bidder, amount)| AwardRow {
            bidder: auction.bidder_name(bidder).into(),
            package: auction.package_names(package),
            amount,
        })
        .collect()
}

pub fn wdp_section(auction: &Auction, result: &WdpResult, solver: Solver, oracle_checked: bool) -> WdpSection {
    WdpSection {
        solver,
        oracle_checked,
        revenue: result.optimal.revenue,
        allocation: awards(auction, &result.optimal),
        ties: result
            .ties
            .iter()
            .map(|t| TieRow {
                package: auction.package_names(t.package),
                bidders: t.bidders.iter().map(|&b| auction.bidder_name(b).into()).collect(),
                amount: t.amount,
            })
            .collect(),
        alternates: result.alternates.len(),
    }
}

fn event_row(auction: &Auction, e: &SettlementEvent) -> EventRow {
    let (event, bidder, amount) = match *e {
        SettlementEvent::LoserClamped { bidder } => ("loser_clamped", Some(bidder), None),
        SettlementEvent::PoolScaled { pool } => ("pool_scaled", None, Some(pool)),
        SettlementEvent::PoolRetained { amount } => ("pool_retained", None, Some(amount)),
        SettlementEvent::WinnerPenalty { amount } => ("winner_penalty", None, Some(amount)),
    };
    EventRow {
        event: event.into(),
        bidder: bidder.map(|b| auction.bidder_name(b).into()),
        amount,
    }
}

pub fn settlement_report(
    auction: &Auction,
    settlement: &Settlement,
    solver: Solver,
    oracle_checked: bool,
) -> SettlementReportFile {
    let name = |b| auction.bidder_name(b).to_string();
    let gva = settlement
        .pricing
        .records
        .iter()
        .map(|r| GvaRow {
            bidder: name(r.bidder),
            package: auction.package_names(r.package),
            bid: r.bid,
            discount: r.discount,
            package_cost: r.package_cost,
        })
        .collect();
    let fairness = settlement
        .extended
        .iter()
        .map(|s| FairnessRow {
            package: auction.package_names(s.package),
            winner: name(s.winner),
            case: s.case.tag().into(),
            package_cost: s.package_cost,
            auctioneer_fair_value: s.auctioneer_fair,
            winner_fair_value: s.winner_fair,
            case_payment: s.case_payment,
            final_payment: s.final_payment,
            profit: s.profit,
            winner_reward: s.winner_reward,
            loser_pool: s.loser_pool,
            shares: s
                .shares
                .iter()
                .map(|x| ShareRow {
                    bidder: name(x.bidder),
                    ratio: format_rational(&x.ratio),
                    amount: x.amount,
                })
                .collect(),
            events: s.events.iter().map(|e| event_row(auction, e)).collect(),
        })
        .collect();
    let ties = settlement
        .ties
        .iter()
        .map(|t| TieSection {
            package: auction.package_names(t.package),
            total: t.total,
            entries: t
                .entries
                .iter()
                .map(|e| TieEntryRow {
                    bidder: name(e.bidder),
                    utility: e.utility,
                    fraction: format_rational(&e.fraction),
                    payment: e.payment,
                })
                .collect(),
        })
        .collect();
    let bidders = (0..auction.bidders.len())
        .map(|i| {
            let b = crate::model::BidderId(i);
            BidderRow {
                bidder: name(b),
                net_payment: settlement.net_payment_of(b),
            }
        })
        .collect();
    SettlementReportFile {
        format_version: REPORT_FORMAT_VERSION,
        minor_units_per_unit: auction.minor_units_per_unit,
        wdp: wdp_section(auction, &settlement.wdp, solver, oracle_checked),
        gva,
        fairness,
        ties,
        bidders,
        totals: Totals {
            final_payments: settlement.total_final_payments(),
            redistributed: settlement.total_redistributed(),
            winner_rewards: settlement.total_winner_rewards(),
            auctioneer_receipts: settlement.auctioneer_receipts(),
        },
        policy: POLICY_NOTES.iter().map(|s| s.to_string()).collect(),
    }
}

impl SettlementReportFile {
    /// Receipts equal final payments less shares and positive rewards, as
    /// recomputed from the sections rather than read from `totals`.
    pub fn identity_holds(&self) -> bool {
        let finals: Money = self.fairness.iter().map(|f| f.final_payment).sum::<Money>()
            + self
                .ties
                .iter()
                .flat_map(|t| &t.entries)
                .map(|e| e.payment)
                .sum::<Money>();
        let shares: Money = self
            .fairness
            .iter()
            .flat_map(|f| &f.shares)
            .map(|s| s.amount)
            .sum();
        let rewards: Money = self
            .fairness
            .iter()
            .map(|f| f.winner_reward.positive_part())
            .sum();
        finals == self.totals.final_payments
            && shares == self.totals.redistributed
            && rewards == self.totals.winner_rewards
            && self.totals.auctioneer_receipts == finals - shares - rewards
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// One `section,package,bidder,field,value` record per number in the
    /// report. Packages are `+`-joined resource names.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["section", "package", "bidder", "field", "value"])?;
        let join = |p: &[String]| p.join("+");
        let mut put = |section: &str, package: &str, bidder: &str, field: &str, value: String| {
            w.write_record([section, package, bidder, field, value.as_str()])
        };
        let m = |v: Money| v.minor().to_string();

        put("wdp", "", "", "revenue", m(self.wdp.revenue))?;
        put("wdp", "", "", "alternates", self.wdp.alternates.to_string())?;
        for a in &self.wdp.allocation {
            put("wdp", &join(&a.package), &a.bidder, "awarded", m(a.amount))?;
        }
        for t in &self.wdp.ties {
            for b in &t.bidders {
                put("wdp", &join(&t.package), b, "tied", m(t.amount))?;
            }
        }
        for g in &self.gva {
            let p = join(&g.package);
            put("gva", &p, &g.bidder, "bid", m(g.bid))?;
            put("gva", &p, &g.bidder, "discount", m(g.discount))?;
            put("gva", &p, &g.bidder, "package_cost", m(g.package_cost))?;
        }
        for f in &self.fairness {
            let p = join(&f.package);
            put("fairness", &p, &f.winner, "case", f.case.clone())?;
            put("fairness", &p, &f.winner, "final_payment", m(f.final_payment))?;
            put("fairness", &p, &f.winner, "profit", m(f.profit))?;
            put("fairness", &p, &f.winner, "winner_reward", m(f.winner_reward))?;
            for s in &f.shares {
                put("fairness", &p, &s.bidder, "share", m(s.amount))?;
            }
        }
        for t in &self.ties {
            let p = join(&t.package);
            for e in &t.entries {
                put("ties", &p, &e.bidder, "fraction", e.fraction.clone())?;
                put("ties", &p, &e.bidder, "payment", m(e.payment))?;
            }
        }
        for b in &self.bidders {
            put("bidders", "", &b.bidder, "net_payment", m(b.net_payment))?;
        }
        put("totals", "", "", "final_payments", m(self.totals.final_payments))?;
        put("totals", "", "", "redistributed", m(self.totals.redistributed))?;
        put("totals", "", "", "winner_rewards", m(self.totals.winner_rewards))?;
        put("totals", "", "", "auctioneer_receipts", m(self.totals.auctioneer_receipts))?;
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}
