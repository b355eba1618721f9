//! Sweep definition files for the `sweep` command.
//!
//! A sweep file embeds an auction and names the award to vary:
//!
//! ```json
//! {"check": "theorem1", "auction": { ... }, "winner": "b0", "package": ["r0"],
//!  "package_cost": 5500, "parameter": "winner_bid", "grid": [5500, 6000], "seed": 0}
//! ```
//!
//! `parameter` is `"winner_bid"`, `"winner_fair_value"` or
//! `{"loser_fair_value": "<bidder>"}`.

use serde::{Deserialize, Serialize};

use crate::incentives::{Instance, SweepSpec, SweepTarget, SweptParameter};
use crate::io::spec::{Auction, AuctionFileError, AuctionSpecFile, ParseError, ValidationError};
use crate::model::{BidderId, Package};
use crate::money::Money;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepCheck {
    Theorem1,
    Theorem2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterEntry {
    WinnerBid,
    WinnerFairValue,
    LoserFairValue(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub check: SweepCheck,
    pub auction: AuctionSpecFile,
    pub winner: String,
    pub package: Vec<String>,
    pub package_cost: i64,
    pub parameter: ParameterEntry,
    pub grid: Vec<i64>,
    #[serde(default)]
    pub seed: u64,
}

fn bidder_named(auction: &Auction, field: &'static str, name: &str) -> Result<BidderId, ValidationError> {
    auction
        .bidders
        .iter()
        .position(|b| b == name)
        .map(BidderId)
        .ok_or_else(|| ValidationError::UnknownName {
            field,
            name: name.into(),
        })
}

/// The auction with its table opened for direct evaluation.
pub fn instance_of(auction: &Auction) -> Instance {
    Instance {
        table: auction.table.clone().into_unsealed(),
        bids: auction.bids.clone(),
        m: auction.m(),
    }
}

impl SweepFile {
    pub fn to_spec(&self) -> Result<SweepSpec, ValidationError> {
        let auction = self.auction.validate()?;
        let winner = bidder_named(&auction, "winner", &self.winner)?;
        let mut package = Package::EMPTY;
        for name in &self.package {
            let r = auction
                .resources
                .iter()
                .position(|x| x == name)
                .ok_or_else(|| ValidationError::UnknownName {
                    field: "package",
                    name: name.clone(),
                })?;
            package = package.union(Package::from_resources([r]));
        }
        if package.is_empty() {
            return Err(ValidationError::Empty("package"));
        }
        let parameter = match &self.parameter {
            ParameterEntry::WinnerBid => SweptParameter::WinnerBid,
            ParameterEntry::WinnerFairValue => SweptParameter::WinnerFairValue,
            ParameterEntry::LoserFairValue(name) => {
                SweptParameter::LoserFairValue(bidder_named(&auction, "parameter", name)?)
            }
        };
        SweepSpec::new(
            instance_of(&auction),
            SweepTarget {
                winner,
                package,
                package_cost: Money::from_minor(self.package_cost),
            },
            parameter,
            self.grid.iter().map(|&v| Money::from_minor(v)).collect(),
            self.seed,
        )
        .map_err(|e| ValidationError::Invalid {
            field: "grid",
            message: e.to_string(),
        })
    }
}

pub fn parse_sweep_str(text: &str) -> Result<(SweepCheck, SweepSpec), AuctionFileError> {
    let file: SweepFile = serde_json::from_str(text).map_err(ParseError::from)?;
    Ok((file.check, file.to_spec()?))
}
