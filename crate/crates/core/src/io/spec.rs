//! The auction definition file.
//!
//! One JSON document declares the resources, the bidders, the fairness table
//! and the bids. All money is in integer minor units. A fairness table cell
//! is either a plain amount or `{"initial_value": .., "weight": ".."}`, whose
//! fair value is the product rounded half-up.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AtomicBid, BidTable, BidderId, FairnessTable, ModelError, Package, MAX_RESOURCES};
use crate::money::{parse_rational, Money, Rational, CENTS_PER_UNIT};
use crate::wdp::Solver;

/// Malformed JSON or a value of the wrong shape.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl From<serde_json::Error> for ParseError {
    fn from(e: serde_json::Error) -> Self {
        ParseError {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// Well-formed input that does not describe a valid auction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("`{0}` must not be empty")]
    Empty(&'static str),
    #[error("duplicate {kind} name `{name}`")]
    DuplicateName { kind: &'static str, name: String },
    #[error("minor_units_per_unit must be positive, got {0}")]
    MinorUnits(i64),
    #[error("{0} resources exceeds the {MAX_RESOURCES}-resource limit")]
    TooManyResources(usize),
    #[error("fairness_table: {0}")]
    Dimension(String),
    #[error("fairness_table: {row} value for resource `{resource}` is negative")]
    NegativeFairValue { row: String, resource: String },
    #[error("fairness_table: {row} weight for resource `{resource}` is invalid: {message}")]
    InvalidWeight {
        row: String,
        resource: String,
        message: String,
    },
    #[error("bid {index}: unknown bidder `{name}`")]
    UnknownBidder { index: usize, name: String },
    #[error("bid {index}: unknown resource `{name}`")]
    UnknownResource { index: usize, name: String },
    #[error("bid {index}: resource `{name}` listed twice")]
    RepeatedResource { index: usize, name: String },
    #[error("bid {index}: package is empty")]
    EmptyPackage { index: usize },
    #[error("bid {index}: amount {amount} is negative")]
    NegativeAmount { index: usize, amount: i64 },
    #[error("bid {index}: `{bidder}` already bid on {{{}}}", resources.join(","))]
    DuplicateBid {
        index: usize,
        bidder: String,
        resources: Vec<String>,
    },
    #[error("{field}: unknown name `{name}`")]
    UnknownName { field: &'static str, name: String },
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum AuctionFileError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TiePolicy {
    #[default]
    #[serde(rename = "basic-fairness")]
    BasicFairness,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuctionOptions {
    #[serde(default)]
    pub tie_policy: TiePolicy,
    #[serde(default = "default_solver")]
    pub solver: Solver,
}

fn default_solver() -> Solver {
    Solver::Bnb
}

impl Default for AuctionOptions {
    fn default() -> Self {
        AuctionOptions {
            tie_policy: TiePolicy::BasicFairness,
            solver: Solver::Bnb,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightText {
    Integer(i64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FairCell {
    Amount(i64),
    Weighted {
        initial_value: i64,
        weight: WeightText,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FairnessTableFile {
    pub bidders: Vec<Vec<FairCell>>,
    pub auctioneer: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BidEntry {
    pub bidder: String,
    pub resources: Vec<String>,
    pub amount: i64,
}

fn default_minor_units() -> i64 {
    CENTS_PER_UNIT
}

/// The file as written, before validation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuctionSpecFile {
    #[serde(default = "default_minor_units")]
    pub minor_units_per_unit: i64,
    pub resources: Vec<String>,
    pub bidders: Vec<String>,
    pub fairness_table: FairnessTableFile,
    pub bids: Vec<BidEntry>,
    #[serde(default)]
    pub options: AuctionOptions,
}

/// A validated auction. The fairness table is sealed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Auction {
    pub minor_units_per_unit: i64,
    pub resources: Vec<String>,
    pub bidders: Vec<String>,
    pub table: FairnessTable,
    pub bids: BidTable,
    pub options: AuctionOptions,
}

impl Auction {
    pub fn m(&self) -> usize {
        self.resources.len()
    }

    pub fn bidder_name(&self, b: BidderId) -> &str {
        &self.bidders[b.0]
    }

    pub fn package_names(&self, p: Package) -> Vec<String> {
        p.resources().map(|r| self.resources[r.0].clone()).collect()
    }
}

fn check_names(kind: &'static str, field: &'static str, names: &[String]) -> Result<(), ValidationError> {
    if names.is_empty() {
        return Err(ValidationError::Empty(field));
    }
    let mut seen = BTreeSet::new();
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(ValidationError::DuplicateName {
                kind,
                name: name.clone(),
            });
        }
    }
    Ok(())
}

fn parse_weight(w: &WeightText) -> Result<Rational, String> {
    match w {
        WeightText::Integer(i) => Ok(Rational::from_integer(*i as i128)),
        WeightText::Text(t) => parse_rational(t).ok_or_else(|| format!("`{t}` is not a number")),
    }
}

fn fair_cell(cell: &FairCell, row: &str, resource: &str) -> Result<Money, ValidationError> {
    let value = match cell {
        FairCell::Amount(v) => Money::from_minor(*v),
        FairCell::Weighted {
            initial_value,
            weight,
        } => {
            let invalid = |message: String| ValidationError::InvalidWeight {
                row: row.to_string(),
                resource: resource.to_string(),
                message,
            };
            let weight = parse_weight(weight).map_err(invalid)?;
            crate::model::Valuation::new(Money::from_minor(*initial_value), weight)
                .map_err(|e| invalid(e.to_string()))?
                .fair_value()
        }
    };
    if value.is_negative() {
        return Err(ValidationError::NegativeFairValue {
            row: row.to_string(),
            resource: resource.to_string(),
        });
    }
    Ok(value)
}

impl AuctionSpecFile {
    pub fn validate(&self) -> Result<Auction, ValidationError> {
        if self.minor_units_per_unit <= 0 {
            return Err(ValidationError::MinorUnits(self.minor_units_per_unit));
        }
        check_names("resource", "resources", &self.resources)?;
        check_names("bidder", "bidders", &self.bidders)?;
        let m = self.resources.len();
        if m > MAX_RESOURCES {
            return Err(ValidationError::TooManyResources(m));
        }

        let ft = &self.fairness_table;
        if ft.bidders.len() != self.bidders.len() {
            return Err(ValidationError::Dimension(format!(
                "{} bidder rows for {} bidders",
                ft.bidders.len(),
                self.bidders.len()
            )));
        }
        if ft.auctioneer.len() != m {
            return Err(ValidationError::Dimension(format!(
                "auctioneer row has {} entries for {m} resources",
                ft.auctioneer.len()
            )));
        }
        let mut values = Vec::with_capacity(ft.bidders.len());
        for (name, row) in self.bidders.iter().zip(&ft.bidders) {
            if row.len() != m {
                return Err(ValidationError::Dimension(format!(
                    "row for `{name}` has {} entries for {m} resources",
                    row.len()
                )));
            }
            let cells = row
                .iter()
                .zip(&self.resources)
                .map(|(cell, r)| fair_cell(cell, name, r))
                .collect::<Result<Vec<_>, _>>()?;
            values.push(cells);
        }
        let mut auctioneer = Vec::with_capacity(m);
        for (v, r) in ft.auctioneer.iter().zip(&self.resources) {
            auctioneer.push(fair_cell(&FairCell::Amount(*v), "auctioneer", r)?);
        }
        let table = FairnessTable::new(values, auctioneer)?;

        if self.bids.is_empty() {
            return Err(ValidationError::Empty("bids"));
        }
        let bidder_index: HashMap<&str, usize> =
            self.bidders.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let resource_index: HashMap<&str, usize> =
            self.resources.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut seen = BTreeSet::new();
        let mut bids = Vec::with_capacity(self.bids.len());
        for (index, entry) in self.bids.iter().enumerate() {
            let bidder = *bidder_index.get(entry.bidder.as_str()).ok_or_else(|| {
                ValidationError::UnknownBidder {
                    index,
                    name: entry.bidder.clone(),
                }
            })?;
            if entry.resources.is_empty() {
                return Err(ValidationError::EmptyPackage { index });
            }
            let mut package = Package::EMPTY;
            for name in &entry.resources {
                let r = *resource_index.get(name.as_str()).ok_or_else(|| {
                    ValidationError::UnknownResource {
                        index,
                        name: name.clone(),
                    }
                })?;
                let single = Package::from_resources([r]);
                if package.intersects(single) {
                    return Err(ValidationError::RepeatedResource {
                        index,
                        name: name.clone(),
                    });
                }
                package = package.union(single);
            }
            if entry.amount < 0 {
                return Err(ValidationError::NegativeAmount {
                    index,
                    amount: entry.amount,
                });
            }
            if !seen.insert((bidder, package)) {
                return Err(ValidationError::DuplicateBid {
                    index,
                    bidder: entry.bidder.clone(),
                    resources: entry.resources.clone(),
                });
            }
            bids.push(AtomicBid {
                bidder: BidderId(bidder),
                package,
                amount: Money::from_minor(entry.amount),
            });
        }

        Ok(Auction {
            minor_units_per_unit: self.minor_units_per_unit,
            resources: self.resources.clone(),
            bidders: self.bidders.clone(),
            table,
            bids: BidTable::new(bids)?,
            options: self.options,
        })
    }
}

pub fn parse_auction_str(text: &str) -> Result<Auction, AuctionFileError> {
    let file: AuctionSpecFile = serde_json::from_str(text).map_err(ParseError::from)?;
    Ok(file.validate()?)
}

/// Reads, parses and validates an auction file. The table comes back sealed.
pub fn parse_auction(path: &Path) -> Result<Auction, AuctionFileError> {
    let text = std::fs::read_to_string(path).map_err(|e| AuctionFileError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_auction_str(&text)
}

/// The file form of a validated auction. Weighted cells come back as their
/// rounded fair values.
pub fn to_spec_file(auction: &Auction) -> AuctionSpecFile {
    let (values, auctioneer) = auction.table.raw_parts();
    AuctionSpecFile {
        minor_units_per_unit: auction.minor_units_per_unit,
        resources: auction.resources.clone(),
        bidders: auction.bidders.clone(),
        fairness_table: FairnessTableFile {
            bidders: values
                .iter()
                .map(|row| row.iter().map(|v| FairCell::Amount(v.minor())).collect())
                .collect(),
            auctioneer: auctioneer.iter().map(|v| v.minor()).collect(),
        },
        bids: auction
            .bids
            .bids()
            .iter()
            .map(|b| BidEntry {
                bidder: auction.bidder_name(b.bidder).to_string(),
                resources: auction.package_names(b.package),
                amount: b.amount.minor(),
            })
            .collect(),
        options: auction.options,
    }
}

/// Pretty-printed canonical file text for `auction`.
pub fn emit(auction: &Auction) -> String {
    let mut text = serde_json::to_string_pretty(&to_spec_file(auction))
        .expect("auction file serializes");
    text.push('\n');
    text
}
