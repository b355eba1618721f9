//! Participants, packages, the sealed fairness table and the bid table.

use std::collections::HashSet;
use std::fmt;

use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::{Money, Rational};

/// Largest number of resources a [`Package`] bitmask can address.
pub const MAX_RESOURCES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("fairness table is still sealed")]
    Sealed,
    #[error("package must contain at least one resource")]
    InvalidPackage,
    #[error("fair value for bidder {bidder:?} resource {resource:?} is negative")]
    NegativeFairValue {
        bidder: Option<BidderId>,
        resource: ResourceId,
    },
    #[error("negative weight {0}")]
    NegativeWeight(Rational),
    #[error("bid by {bidder} on {package} has negative amount {amount}")]
    NegativeBid {
        bidder: BidderId,
        package: Package,
        amount: Money,
    },
    #[error("duplicate bid by {bidder} on {package}")]
    DuplicateBid { bidder: BidderId, package: Package },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0} resources exceeds the {MAX_RESOURCES}-resource limit")]
    TooManyResources(usize),
}

/// Zero-based index of a resource.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ResourceId(pub usize);

/// Zero-based index of a bidder. The auctioneer is not a bidder.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct BidderId(pub usize);

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

impl fmt::Display for BidderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", self.0)
    }
}

/// A set of resources as a bitmask; bit `j` set means `r_j` is included.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Package(u64);

impl Package {
    pub const EMPTY: Package = Package(0);

    pub const fn from_bits(bits: u64) -> Self {
        Package(bits)
    }

    pub fn from_resources<I: IntoIterator<Item = usize>>(resources: I) -> Self {
        let bits = resources.into_iter().fold(0u64, |acc, r| {
            assert!(r < MAX_RESOURCES, "resource index {r} out of range");
            acc | (1 << r)
        });
        Package(bits)
    }

    /// Every resource in `0..m`.
    pub fn full(m: usize) -> Self {
        if m >= MAX_RESOURCES {
            Package(u64::MAX)
        } else {
            Package((1u64 << m) - 1)
        }
    }

    pub fn singleton(r: ResourceId) -> Self {
        Package::from_resources([r.0])
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, r: ResourceId) -> bool {
        r.0 < MAX_RESOURCES && self.0 & (1 << r.0) != 0
    }

    pub fn intersects(self, other: Package) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_subset_of(self, other: Package) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Package) -> Package {
        Package(self.0 | other.0)
    }

    pub fn difference(self, other: Package) -> Package {
        Package(self.0 & !other.0)
    }

    pub fn lowest(self) -> Option<ResourceId> {
        (self.0 != 0).then(|| ResourceId(self.0.trailing_zeros() as usize))
    }

    pub fn resources(self) -> impl Iterator<Item = ResourceId> {
        let bits = self.0;
        (0..MAX_RESOURCES)
            .filter(move |j| bits & (1 << j) != 0)
            .map(ResourceId)
    }
}

impl fmt::Display for Package {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.resources().map(|r| r.to_string()).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// A fair value expressed as an initial amount times a desirability weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Valuation {
    pub initial_value: Money,
    pub weight: Rational,
}

impl Valuation {
    pub fn new(initial_value: Money, weight: Rational) -> Result<Self, ModelError> {
        if weight.is_negative() {
            return Err(ModelError::NegativeWeight(weight));
        }
        Ok(Valuation {
            initial_value,
            weight,
        })
    }

    /// `weight × initial_value`, rounded half-up to a whole minor unit.
    pub fn fair_value(&self) -> Money {
        self.initial_value.mul_ratio_half_up(self.weight)
    }
}

/// Per-resource fair values for every bidder and the auctioneer.
///
/// The table is created sealed. Every read goes through [`FairnessTable::bidder_value`]
/// or the package helpers, which fail until [`FairnessTable::unseal`] has been
/// called. Unsealing cannot be undone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FairnessTable {
    bidder_values: Vec<Vec<Money>>,
    auctioneer_values: Vec<Money>,
    sealed: bool,
}

impl FairnessTable {
    /// Builds a sealed table from an `n × m` bidder matrix and the auctioneer's
    /// `m`-vector.
    pub fn new(
        bidder_values: Vec<Vec<Money>>,
        auctioneer_values: Vec<Money>,
    ) -> Result<Self, ModelError> {
        let m = auctioneer_values.len();
        if m > MAX_RESOURCES {
            return Err(ModelError::TooManyResources(m));
        }
        for (i, row) in bidder_values.iter().enumerate() {
            if row.len() != m {
                return Err(ModelError::Dimension(format!(
                    "bidder row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| v.is_negative()) {
                return Err(ModelError::NegativeFairValue {
                    bidder: Some(BidderId(i)),
                    resource: ResourceId(j),
                });
            }
        }
        if let Some(j) = auctioneer_values.iter().position(|v| v.is_negative()) {
            return Err(ModelError::NegativeFairValue {
                bidder: None,
                resource: ResourceId(j),
            });
        }
        Ok(FairnessTable {
            bidder_values,
            auctioneer_values,
            sealed: true,
        })
    }

    /// Builds a sealed table from weighted valuations.
    pub fn from_valuations(
        bidder_valuations: &[Vec<Valuation>],
        auctioneer_values: Vec<Money>,
    ) -> Result<Self, ModelError> {
        let values = bidder_valuations
            .iter()
            .map(|row| row.iter().map(Valuation::fair_value).collect())
            .collect();
        FairnessTable::new(values, auctioneer_values)
    }

    /// Consumes a freshly built table and returns it already unsealed.
    pub fn into_unsealed(mut self) -> Self {
        self.unseal();
        self
    }

    pub fn unseal(&mut self) {
        self.sealed = false;
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn bidders(&self) -> usize {
        self.bidder_values.len()
    }

    pub fn resources(&self) -> usize {
        self.auctioneer_values.len()
    }

    fn check_open(&self) -> Result<(), ModelError> {
        if self.sealed {
            Err(ModelError::Sealed)
        } else {
            Ok(())
        }
    }

    fn check_package(&self, pkg: Package) -> Result<(), ModelError> {
        if pkg.is_empty() {
            return Err(ModelError::InvalidPackage);
        }
        if !pkg.is_subset_of(Package::full(self.resources())) {
            return Err(ModelError::Dimension(format!(
                "package {pkg} references resources beyond r{}",
                self.resources().saturating_sub(1)
            )));
        }
        Ok(())
    }

    fn row(&self, bidder: BidderId) -> Result<&[Money], ModelError> {
        self.bidder_values.get(bidder.0).map(Vec::as_slice).ok_or_else(|| {
            ModelError::Dimension(format!(
                "bidder {bidder} not in a table of {} bidders",
                self.bidders()
            ))
        })
    }

    pub fn bidder_value(&self, bidder: BidderId, r: ResourceId) -> Result<Money, ModelError> {
        self.check_open()?;
        self.check_package(Package::singleton(r))?;
        Ok(self.row(bidder)?[r.0])
    }

    pub fn auctioneer_value(&self, r: ResourceId) -> Result<Money, ModelError> {
        self.check_open()?;
        self.check_package(Package::singleton(r))?;
        Ok(self.auctioneer_values[r.0])
    }

    /// Bidder's fair value for a package: the sum of its per-resource values.
    pub fn fair_value_package(&self, bidder: BidderId, pkg: Package) -> Result<Money, ModelError> {
        self.check_open()?;
        self.check_package(pkg)?;
        let row = self.row(bidder)?;
        Ok(pkg.resources().map(|r| row[r.0]).sum())
    }

    /// Auctioneer's fair value for a package.
    pub fn auctioneer_fair_value(&self, pkg: Package) -> Result<Money, ModelError> {
        self.check_open()?;
        self.check_package(pkg)?;
        Ok(pkg.resources().map(|r| self.auctioneer_values[r.0]).sum())
    }

    /// Returns a copy with one entry replaced; the copy keeps the seal state.
    pub fn with_bidder_value(
        &self,
        bidder: BidderId,
        r: ResourceId,
        value: Money,
    ) -> Result<Self, ModelError> {
        let mut values = self.bidder_values.clone();
        let row = values.get_mut(bidder.0).ok_or_else(|| {
            ModelError::Dimension(format!("bidder {bidder} not in the table"))
        })?;
        let cell = row
            .get_mut(r.0)
            .ok_or_else(|| ModelError::Dimension(format!("resource {r} not in the table")))?;
        *cell = value;
        let mut table = FairnessTable::new(values, self.auctioneer_values.clone())?;
        table.sealed = self.sealed;
        Ok(table)
    }

    /// Raw matrix access for serialization; bypasses the seal on purpose for
    /// writing the table back out, never for settlement.
    pub(crate) fn raw_parts(&self) -> (&[Vec<Money>], &[Money]) {
        (&self.bidder_values, &self.auctioneer_values)
    }
}

/// `Γ = Υ − Π`: how far a bid exceeds the bidder's own fair value.
pub fn utility_value(bid: Money, fair: Money) -> Money {
    bid - fair
}

/// One entry of an OR bid: `bidder` offers `amount` for exactly `package`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicBid {
    pub bidder: BidderId,
    pub package: Package,
    pub amount: Money,
}

impl AtomicBid {
    pub fn new(bidder: usize, resources: &[usize], amount: Money) -> Self {
        AtomicBid {
            bidder: BidderId(bidder),
            package: Package::from_resources(resources.iter().copied()),
            amount,
        }
    }
}

/// All atomic bids of an auction under OR semantics.
///
/// A missing `(bidder, package)` pair means that bidder bids zero on it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BidTable {
    bids: Vec<AtomicBid>,
}

impl BidTable {
    pub fn new(bids: Vec<AtomicBid>) -> Result<Self, ModelError> {
        let mut seen = HashSet::with_capacity(bids.len());
        for bid in &bids {
            if bid.package.is_empty() {
                return Err(ModelError::InvalidPackage);
            }
            if bid.amount.is_negative() {
                return Err(ModelError::NegativeBid {
                    bidder: bid.bidder,
                    package: bid.package,
                    amount: bid.amount,
                });
            }
            if !seen.insert((bid.bidder, bid.package)) {
                return Err(ModelError::DuplicateBid {
                    bidder: bid.bidder,
                    package: bid.package,
                });
            }
        }
        Ok(BidTable { bids })
    }

    pub fn bids(&self) -> &[AtomicBid] {
        &self.bids
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }

    /// Bid amount of `bidder` on exactly `package`, zero when absent.
    pub fn amount(&self, bidder: BidderId, package: Package) -> Money {
        self.bids
            .iter()
            .find(|b| b.bidder == bidder && b.package == package)
            .map_or(Money::ZERO, |b| b.amount)
    }

    /// Every resource mentioned by some bid.
    pub fn covered(&self) -> Package {
        self.bids
            .iter()
            .fold(Package::EMPTY, |acc, b| acc.union(b.package))
    }

    pub fn max_bidder(&self) -> Option<BidderId> {
        self.bids.iter().map(|b| b.bidder).max()
    }

    /// Copy without any bid from `bidder`.
    pub fn without_bidder(&self, bidder: BidderId) -> BidTable {
        self.filtered(|b| b.bidder != bidder)
    }

    pub fn filtered(&self, mut keep: impl FnMut(&AtomicBid) -> bool) -> BidTable {
        BidTable {
            bids: self.bids.iter().filter(|b| keep(b)).copied().collect(),
        }
    }

    /// Copy with the amount of `(bidder, package)` replaced, inserting the bid
    /// if it did not exist.
    pub fn with_amount(&self, bidder: BidderId, package: Package, amount: Money) -> BidTable {
        let mut bids = self.bids.clone();
        match bids
            .iter_mut()
            .find(|b| b.bidder == bidder && b.package == package)
        {
            Some(b) => b.amount = amount,
            None => bids.push(AtomicBid {
                bidder,
                package,
                amount,
            }),
        }
        BidTable { bids }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn pkg(r: &[usize]) -> Package {
        Package::from_resources(r.iter().copied())
    }

    #[test]
    fn fair_value_of_r0_r2_for_b0_is_13() {
        let table = fixtures::reference_fairness_table().into_unsealed();
        assert_eq!(
            table.fair_value_package(BidderId(0), pkg(&[0, 2])),
            Ok(Money::from_major(13))
        );
        assert_eq!(
            table.fair_value_package(BidderId(1), pkg(&[0, 1, 2])),
            Ok(Money::from_major(20))
        );
    }

    #[test]
    fn singleton_package_reads_the_matrix_entry() {
        let table = fixtures::reference_fairness_table().into_unsealed();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(
                    table.fair_value_package(BidderId(i), Package::singleton(ResourceId(j))),
                    table.bidder_value(BidderId(i), ResourceId(j))
                );
            }
        }
    }

    #[test]
    fn auctioneer_values() {
        let table = fixtures::reference_fairness_table().into_unsealed();
        assert_eq!(
            table.auctioneer_fair_value(pkg(&[0, 1, 2])),
            Ok(Money::from_major(33))
        );
        assert_eq!(table.auctioneer_fair_value(pkg(&[2])), Ok(Money::from_major(15)));

        let zero = FairnessTable::new(vec![vec![Money::ZERO; 2]], vec![Money::ZERO; 2])
            .unwrap()
            .into_unsealed();
        assert_eq!(zero.auctioneer_fair_value(pkg(&[0, 1])), Ok(Money::ZERO));
    }

    #[test]
    fn sealed_table_refuses_reads() {
        let mut table = fixtures::reference_fairness_table();
        assert!(table.is_sealed());
        assert_eq!(
            table.fair_value_package(BidderId(0), pkg(&[0])),
            Err(ModelError::Sealed)
        );
        assert_eq!(table.auctioneer_fair_value(pkg(&[0])), Err(ModelError::Sealed));
        table.unseal();
        assert!(table.fair_value_package(BidderId(0), pkg(&[0])).is_ok());
    }

    #[test]
    fn empty_package_is_invalid() {
        let table = fixtures::reference_fairness_table().into_unsealed();
        assert_eq!(
            table.fair_value_package(BidderId(0), Package::EMPTY),
            Err(ModelError::InvalidPackage)
        );
        assert_eq!(
            table.auctioneer_fair_value(Package::EMPTY),
            Err(ModelError::InvalidPackage)
        );
    }

    #[test]
    fn utility_examples() {
        assert_eq!(
            utility_value(Money::from_major(50), Money::from_major(21)),
            Money::from_major(29)
        );
        assert_eq!(
            utility_value(Money::from_major(50), Money::from_major(20)),
            Money::from_major(30)
        );
        assert_eq!(utility_value(Money::from_major(7), Money::from_major(7)), Money::ZERO);
        assert!(utility_value(Money::from_major(5), Money::from_major(7)).is_negative());
    }

    #[test]
    fn valuation_rounds_half_up_once() {
        let v = Valuation::new(Money::from_minor(5), Rational::new(1, 2)).unwrap();
        assert_eq!(v.fair_value(), Money::from_minor(3));
        let v = Valuation::new(Money::from_major(4), Rational::new(3, 2)).unwrap();
        assert_eq!(v.fair_value(), Money::from_major(6));
        assert!(Valuation::new(Money::from_major(4), Rational::new(-1, 2)).is_err());
    }

    #[test]
    fn valuation_table_matches_direct_table_when_integral() {
        let direct = fixtures::reference_fairness_table().into_unsealed();
        // b0 row 5, 8, 8 written as 10 × 1/2, 4 × 2, 8 × 1
        let row0 = vec![
            Valuation::new(Money::from_major(10), Rational::new(1, 2)).unwrap(),
            Valuation::new(Money::from_major(4), Rational::from_integer(2)).unwrap(),
            Valuation::new(Money::from_major(8), Rational::from_integer(1)).unwrap(),
        ];
        let unit = |x: i64| Valuation::new(Money::from_major(x), Rational::from_integer(1)).unwrap();
        let rows = vec![
            row0,
            vec![unit(10), unit(2), unit(8)],
            vec![unit(10), unit(5), unit(10)],
        ];
        let weighted = FairnessTable::from_valuations(
            &rows,
            vec![Money::from_major(8), Money::from_major(10), Money::from_major(15)],
        )
        .unwrap()
        .into_unsealed();
        assert_eq!(weighted, direct);
    }

    #[test]
    fn bid_table_rejects_duplicates_and_bad_entries() {
        let dup = BidTable::new(vec![
            AtomicBid::new(0, &[0], Money::from_major(1)),
            AtomicBid::new(0, &[0], Money::from_major(2)),
        ]);
        assert!(matches!(dup, Err(ModelError::DuplicateBid { .. })));
        let neg = BidTable::new(vec![AtomicBid::new(0, &[0], Money::from_minor(-1))]);
        assert!(matches!(neg, Err(ModelError::NegativeBid { .. })));
        let empty = BidTable::new(vec![AtomicBid {
            bidder: BidderId(0),
            package: Package::EMPTY,
            amount: Money::ZERO,
        }]);
        assert_eq!(empty, Err(ModelError::InvalidPackage));
        // same package from different bidders is fine under OR
        assert!(BidTable::new(vec![
            AtomicBid::new(0, &[0], Money::from_major(1)),
            AtomicBid::new(1, &[0], Money::from_major(1)),
        ])
        .is_ok());
    }

    #[test]
    fn absent_bid_is_zero() {
        let bids = fixtures::reference_bid_table();
        assert_eq!(bids.amount(BidderId(0), pkg(&[0])), Money::ZERO);
        assert_eq!(bids.amount(BidderId(2), pkg(&[0, 2])), Money::from_major(30));
    }

    #[test]
    fn table_dimensions_checked() {
        let bad = FairnessTable::new(vec![vec![Money::ZERO]], vec![Money::ZERO; 2]);
        assert!(matches!(bad, Err(ModelError::Dimension(_))));
        let neg = FairnessTable::new(vec![vec![Money::from_minor(-1)]], vec![Money::ZERO]);
        assert!(matches!(neg, Err(ModelError::NegativeFairValue { .. })));
    }

    proptest! {
        #[test]
        fn package_fair_value_is_additive(
            rows in prop::collection::vec(prop::collection::vec(0i64..10_000, 6), 1..4),
            auct in prop::collection::vec(0i64..10_000, 6),
            s in 1u64..64,
            t in 1u64..64,
        ) {
            let t = t & !s;
            prop_assume!(t != 0);
            let table = FairnessTable::new(
                rows.iter().map(|r| r.iter().map(|&x| Money::from_minor(x)).collect()).collect(),
                auct.iter().map(|&x| Money::from_minor(x)).collect(),
            ).unwrap().into_unsealed();
            let (s, t) = (Package::from_bits(s), Package::from_bits(t));
            for i in 0..rows.len() {
                let b = BidderId(i);
                prop_assert_eq!(
                    table.fair_value_package(b, s.union(t)).unwrap(),
                    table.fair_value_package(b, s).unwrap() + table.fair_value_package(b, t).unwrap()
                );
            }
            prop_assert_eq!(
                table.auctioneer_fair_value(s.union(t)).unwrap(),
                table.auctioneer_fair_value(s).unwrap() + table.auctioneer_fair_value(t).unwrap()
            );
        }
    }
}
