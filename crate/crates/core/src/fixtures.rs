//! The three-bidder, three-resource reference auction used throughout the
//! tests and the bundled example input.

use crate::model::{AtomicBid, BidTable, FairnessTable};
use crate::money::Money;

/// Per-resource fair values, rows b0..b2, plus the auctioneer row.
pub const FAIR_VALUES: [[i64; 3]; 3] = [[5, 8, 8], [10, 2, 8], [10, 5, 10]];
pub const AUCTIONEER_VALUES: [i64; 3] = [8, 10, 15];

/// The seven non-empty packages over three resources in column order:
/// {r0}, {r1}, {r2}, {r0,r1}, {r0,r2}, {r1,r2}, {r0,r1,r2}.
pub const PACKAGES: [&[usize]; 7] = [&[0], &[1], &[2], &[0, 1], &[0, 2], &[1, 2], &[0, 1, 2]];

/// Bid per bidder for each of [`PACKAGES`], in whole dollars; zero means no bid.
pub const BIDS: [[i64; 7]; 3] = [
    [0, 10, 5, 10, 20, 15, 50],
    [10, 5, 10, 30, 0, 0, 50],
    [10, 0, 15, 20, 30, 15, 30],
];

/// Sealed fairness table with the reference values in dollars.
pub fn reference_fairness_table() -> FairnessTable {
    FairnessTable::new(
        FAIR_VALUES
            .iter()
            .map(|row| row.iter().map(|&v| Money::from_major(v)).collect())
            .collect(),
        AUCTIONEER_VALUES.iter().map(|&v| Money::from_major(v)).collect(),
    )
    .expect("reference fairness table is valid")
}

/// The reference bids with zero cells left out.
pub fn reference_bid_table() -> BidTable {
    reference_bid_table_where(|_, _| true)
}

/// The reference bids, keeping only cells for which `keep(bidder, column)`
/// holds.
pub fn reference_bid_table_where(keep: impl Fn(usize, usize) -> bool) -> BidTable {
    let mut bids = Vec::new();
    for (bidder, row) in BIDS.iter().enumerate() {
        for (col, &amount) in row.iter().enumerate() {
            if amount > 0 && keep(bidder, col) {
                bids.push(AtomicBid::new(bidder, PACKAGES[col], Money::from_major(amount)));
            }
        }
    }
    BidTable::new(bids).expect("reference bid table is valid")
}

/// Column index of the grand bundle {r0,r1,r2}.
pub const GRAND_BUNDLE: usize = 6;

/// The reference auction as an input file.
pub const REFERENCE_AUCTION_JSON: &str = include_str!("../data/reference_auction.json");

/// The reference auction without b0's grand-bundle bid, which removes the tie.
pub const REFERENCE_UNTIED_AUCTION_JSON: &str =
    include_str!("../data/reference_auction_untied.json");
