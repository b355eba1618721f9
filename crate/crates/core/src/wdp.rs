//! Winner determination: pick the revenue-maximizing set of pairwise-disjoint
//! atomic bids.
//!
//! Two solvers share one result type. [`solve_oracle`] enumerates every
//! feasible subset of bids and is only meant for small instances; it exists so
//! that [`solve_bnb`] can be checked against something with no cleverness in
//! it. Both report every optimal allocation they see (`alternates`) and the
//! package-level ties among them.
//!
//! Zero-amount bids are treated as absent: they never change revenue and
//! would otherwise multiply the number of optimal allocations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BidTable, BidderId, Package, MAX_RESOURCES};
use crate::money::Money;

/// Default resource bound for exhaustive enumeration.
pub const ORACLE_RESOURCE_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WdpError {
    #[error("oracle enumeration is limited to {limit} resources, got {m}")]
    OracleScale { m: usize, limit: usize },
    #[error("{0} resources exceeds the {MAX_RESOURCES}-resource solver limit")]
    TooManyResources(usize),
    #[error("bid {index} on {package} references resources outside 0..{m}")]
    PackageOutOfRange {
        index: usize,
        package: Package,
        m: usize,
    },
}

/// One accepted atomic bid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Award {
    pub bidder: BidderId,
    pub package: Package,
    pub amount: Money,
    /// Position of the bid in the table the solver was given.
    pub bid_index: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    /// Awards in ascending `bid_index` order.
    pub awards: Vec<Award>,
    pub revenue: Money,
}

impl Allocation {
    fn from_indices(bids: &BidTable, indices: &[usize]) -> Allocation {
        let awards: Vec<Award> = indices
            .iter()
            .map(|&i| {
                let b = bids.bids()[i];
                Award {
                    bidder: b.bidder,
                    package: b.package,
                    amount: b.amount,
                    bid_index: i,
                }
            })
            .collect();
        let revenue = awards.iter().map(|a| a.amount).sum();
        Allocation { awards, revenue }
    }

    pub fn bid_indices(&self) -> Vec<usize> {
        self.awards.iter().map(|a| a.bid_index).collect()
    }

    pub fn is_feasible(&self) -> bool {
        let mut used = Package::EMPTY;
        for a in &self.awards {
            if a.package.intersects(used) {
                return false;
            }
            used = used.union(a.package);
        }
        true
    }

    /// Awards won by `bidder`.
    pub fn awards_of(&self, bidder: BidderId) -> impl Iterator<Item = &Award> {
        self.awards.iter().filter(move |a| a.bidder == bidder)
    }

    pub fn winners(&self) -> Vec<BidderId> {
        let mut w: Vec<BidderId> = self.awards.iter().map(|a| a.bidder).collect();
        w.sort();
        w.dedup();
        w
    }
}

/// Two or more bidders with the same amount on the same package, where that
/// package is awarded in some optimal allocation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieGroup {
    pub package: Package,
    pub bidders: Vec<BidderId>,
    pub amount: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WdpResult {
    pub optimal: Allocation,
    pub ties: Vec<TieGroup>,
    /// Every optimal allocation found, lexicographic by bid indices;
    /// `alternates[0] == optimal`.
    pub alternates: Vec<Allocation>,
}

impl WdpResult {
    /// The tie group, if any, covering an award of the chosen allocation.
    pub fn tie_for(&self, package: Package, amount: Money) -> Option<&TieGroup> {
        self.ties
            .iter()
            .find(|t| t.package == package && t.amount == amount)
    }

    fn assemble(bids: &BidTable, mut optimal_sets: Vec<Vec<usize>>) -> WdpResult {
        optimal_sets.sort();
        optimal_sets.dedup();
        let alternates: Vec<Allocation> = optimal_sets
            .iter()
            .map(|set| Allocation::from_indices(bids, set))
            .collect();
        let ties = detect_ties(bids, &alternates);
        WdpResult {
            optimal: alternates[0].clone(),
            ties,
            alternates,
        }
    }
}

fn detect_ties(bids: &BidTable, alternates: &[Allocation]) -> Vec<TieGroup> {
    let mut groups: BTreeMap<(Package, Money), Vec<BidderId>> = BTreeMap::new();
    for award in alternates.iter().flat_map(|a| a.awards.iter()) {
        let key = (award.package, award.amount);
        if groups.contains_key(&key) {
            continue;
        }
        let mut bidders: Vec<BidderId> = bids
            .bids()
            .iter()
            .filter(|b| b.package == award.package && b.amount == award.amount)
            .map(|b| b.bidder)
            .collect();
        bidders.sort();
        bidders.dedup();
        groups.insert(key, bidders);
    }
    groups
        .into_iter()
        .filter(|(_, bidders)| bidders.len() >= 2)
        .map(|((package, amount), bidders)| TieGroup {
            package,
            bidders,
            amount,
        })
        .collect()
}

fn validate(bids: &BidTable, m: usize) -> Result<(), WdpError> {
    if m > MAX_RESOURCES {
        return Err(WdpError::TooManyResources(m));
    }
    let full = Package::full(m);
    for (index, b) in bids.bids().iter().enumerate() {
        if !b.package.is_subset_of(full) {
            return Err(WdpError::PackageOutOfRange {
                index,
                package: b.package,
                m,
            });
        }
    }
    Ok(())
}

/// Something that can solve winner determination.
pub trait WinnerDetermination {
    fn solve(&self, bids: &BidTable, m: usize) -> Result<WdpResult, WdpError>;

    /// Optimal revenue only.
    fn revenue(&self, bids: &BidTable, m: usize) -> Result<Money, WdpError> {
        Ok(self.solve(bids, m)?.optimal.revenue)
    }
}

/// The built-in solvers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Bnb,
    Oracle,
}

impl WinnerDetermination for Solver {
    fn solve(&self, bids: &BidTable, m: usize) -> Result<WdpResult, WdpError> {
        match self {
            Solver::Bnb => solve_bnb(bids, m),
            Solver::Oracle => solve_oracle(bids, m),
        }
    }
}

/// Exhaustive oracle with an explicit resource bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Oracle {
    pub limit: usize,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle {
            limit: ORACLE_RESOURCE_LIMIT,
        }
    }
}

impl WinnerDetermination for Oracle {
    fn solve(&self, bids: &BidTable, m: usize) -> Result<WdpResult, WdpError> {
        solve_oracle_with_limit(bids, m, self.limit)
    }
}

/// Exhaustive enumeration over every feasible subset of positive bids.
pub fn solve_oracle(bids: &BidTable, m: usize) -> Result<WdpResult, WdpError> {
    solve_oracle_with_limit(bids, m, ORACLE_RESOURCE_LIMIT)
}

pub fn solve_oracle_with_limit(
    bids: &BidTable,
    m: usize,
    limit: usize,
) -> Result<WdpResult, WdpError> {
    if m > limit {
        return Err(WdpError::OracleScale { m, limit });
    }
    validate(bids, m)?;

    struct Enumeration<'a> {
        bids: &'a BidTable,
        candidates: Vec<usize>,
        best: Option<Money>,
        optimal: Vec<Vec<usize>>,
        chosen: Vec<usize>,
    }

    impl Enumeration<'_> {
        // include/exclude on candidates[k..]
        fn visit(&mut self, k: usize, used: Package, revenue: Money) {
            if k == self.candidates.len() {
                match self.best {
                    Some(best) if revenue < best => {}
                    Some(best) if revenue == best => self.optimal.push(self.chosen.clone()),
                    _ => {
                        self.best = Some(revenue);
                        self.optimal.clear();
                        self.optimal.push(self.chosen.clone());
                    }
                }
                return;
            }
            let index = self.candidates[k];
            let bid = self.bids.bids()[index];
            if !bid.package.intersects(used) {
                self.chosen.push(index);
                self.visit(k + 1, used.union(bid.package), revenue + bid.amount);
                self.chosen.pop();
            }
            self.visit(k + 1, used, revenue);
        }
    }

    let candidates = bids
        .bids()
        .iter()
        .enumerate()
        .filter(|(_, b)| b.amount.is_positive())
        .map(|(i, _)| i)
        .collect();
    let mut search = Enumeration {
        bids,
        candidates,
        best: None,
        optimal: Vec::new(),
        chosen: Vec::new(),
    };
    search.visit(0, Package::EMPTY, Money::ZERO);
    Ok(WdpResult::assemble(bids, search.optimal))
}

/// Depth-first branch-and-bound, branching on the lowest undecided resource.
///
/// At each node the lowest resource not yet covered or discarded is either
/// given to one of the compatible bids containing it (highest amount first,
/// then lowest bidder index) or left unsold. A node is pruned only when its
/// optimistic bound is strictly below the incumbent, so every optimal
/// allocation is still reached.
pub fn solve_bnb(bids: &BidTable, m: usize) -> Result<WdpResult, WdpError> {
    validate(bids, m)?;
    let positive: Vec<usize> = bids
        .bids()
        .iter()
        .enumerate()
        .filter(|(_, b)| b.amount.is_positive())
        .map(|(i, _)| i)
        .collect();

    // Per-resource price bound: max over bids containing r of ceil(amount / |S|).
    // Any disjoint set of bids earns at most the sum of these over its resources.
    let mut price_cap = vec![Money::ZERO; m];
    let mut by_resource: Vec<Vec<usize>> = vec![Vec::new(); m];
    for &i in &positive {
        let b = bids.bids()[i];
        let size = b.package.len() as i64;
        let share = Money::from_minor((b.amount.minor() + size - 1) / size);
        for r in b.package.resources() {
            price_cap[r.0] = price_cap[r.0].max(share);
            by_resource[r.0].push(i);
        }
    }
    for list in &mut by_resource {
        list.sort_by(|&a, &b| {
            let (x, y) = (bids.bids()[a], bids.bids()[b]);
            y.amount
                .cmp(&x.amount)
                .then(x.bidder.cmp(&y.bidder))
                .then(a.cmp(&b))
        });
    }

    struct Search<'a> {
        bids: &'a BidTable,
        full: Package,
        price_cap: Vec<Money>,
        by_resource: Vec<Vec<usize>>,
        best: Option<Money>,
        optimal: Vec<Vec<usize>>,
        chosen: Vec<usize>,
    }

    impl Search<'_> {
        fn bound(&self, decided: Package) -> Money {
            self.full
                .difference(decided)
                .resources()
                .map(|r| self.price_cap[r.0])
                .sum()
        }

        fn record(&mut self, revenue: Money) {
            let mut set = self.chosen.clone();
            set.sort_unstable();
            match self.best {
                Some(best) if revenue < best => {}
                Some(best) if revenue == best => self.optimal.push(set),
                _ => {
                    self.best = Some(revenue);
                    self.optimal.clear();
                    self.optimal.push(set);
                }
            }
        }

        fn visit(&mut self, decided: Package, revenue: Money) {
            let Some(r) = self.full.difference(decided).lowest() else {
                self.record(revenue);
                return;
            };
            if let Some(best) = self.best {
                if revenue + self.bound(decided) < best {
                    return;
                }
            }
            for k in 0..self.by_resource[r.0].len() {
                let index = self.by_resource[r.0][k];
                let bid = self.bids.bids()[index];
                if bid.package.intersects(decided) {
                    continue;
                }
                self.chosen.push(index);
                self.visit(decided.union(bid.package), revenue + bid.amount);
                self.chosen.pop();
            }
            self.visit(decided.union(Package::singleton(r)), revenue);
        }
    }

    let mut search = Search {
        bids,
        full: Package::full(m),
        price_cap,
        by_resource,
        best: None,
        optimal: Vec::new(),
        chosen: Vec::new(),
    };
    search.visit(Package::EMPTY, Money::ZERO);
    Ok(WdpResult::assemble(bids, search.optimal))
}

/// Drops bids that can never be needed for optimal revenue.
///
/// A bid `(S, p)` goes when another bid `(T, q)` has `T ⊆ S`, `q ≥ p` and
/// `(T, q) ≠ (S, p)`: swapping it for the smaller bid keeps the allocation
/// feasible and does not lower revenue. A bid whose exact `(package, amount)`
/// is also offered by another bidder is always kept so that tie detection
/// still sees it.
pub fn preprocess_dominated(bids: &BidTable) -> BidTable {
    let all = bids.bids();
    let tie_relevant = |i: usize| {
        all.iter().enumerate().any(|(j, o)| {
            j != i
                && o.bidder != all[i].bidder
                && o.package == all[i].package
                && o.amount == all[i].amount
        })
    };
    let dominated = |i: usize| {
        let s = all[i];
        all.iter().enumerate().any(|(j, t)| {
            j != i
                && t.package.is_subset_of(s.package)
                && t.amount >= s.amount
                && (t.package != s.package || t.amount != s.amount)
        })
    };
    let keep: Vec<bool> = (0..all.len())
        .map(|i| tie_relevant(i) || !dominated(i))
        .collect();
    let mut index = 0;
    bids.filtered(|_| {
        let k = keep[index];
        index += 1;
        k
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, GRAND_BUNDLE};
    use crate::model::AtomicBid;
    use proptest::prelude::*;

    fn table(bids: &[(usize, &[usize], i64)]) -> BidTable {
        BidTable::new(
            bids.iter()
                .map(|&(b, r, a)| AtomicBid::new(b, r, Money::from_major(a)))
                .collect(),
        )
        .unwrap()
    }

    fn grand() -> Package {
        Package::from_resources([0, 1, 2])
    }

    #[test]
    fn reference_bids_tie_on_grand_bundle() {
        let bids = fixtures::reference_bid_table();
        for result in [solve_oracle(&bids, 3).unwrap(), solve_bnb(&bids, 3).unwrap()] {
            assert_eq!(result.optimal.revenue, Money::from_major(50));
            assert_eq!(
                result.ties,
                vec![TieGroup {
                    package: grand(),
                    bidders: vec![BidderId(0), BidderId(1)],
                    amount: Money::from_major(50),
                }]
            );
            assert_eq!(result.alternates.len(), 2);
            assert_eq!(result.optimal.awards[0].bidder, BidderId(0));
        }
    }

    #[test]
    fn single_bid_is_the_allocation() {
        let bids = table(&[(0, &[0], 10)]);
        let result = solve_oracle(&bids, 1).unwrap();
        assert_eq!(result.optimal.revenue, Money::from_major(10));
        assert!(result.ties.is_empty());
        assert_eq!(result.alternates.len(), 1);
    }

    #[test]
    fn without_grand_bundle_bids_revenue_is_45() {
        let bids = fixtures::reference_bid_table_where(|b, c| !(c == GRAND_BUNDLE && b < 2));
        let result = solve_oracle(&bids, 3).unwrap();
        assert_eq!(result.optimal.revenue, Money::from_major(45));
        let got: Vec<(BidderId, Package)> = result
            .optimal
            .awards
            .iter()
            .map(|a| (a.bidder, a.package))
            .collect();
        assert_eq!(
            got,
            vec![
                (BidderId(1), Package::from_resources([0, 1])),
                (BidderId(2), Package::from_resources([2])),
            ]
        );
        assert_eq!(solve_bnb(&bids, 3).unwrap(), result);
    }

    #[test]
    fn disjoint_singletons_sum_per_resource_maxima() {
        let bids = table(&[
            (0, &[0], 4),
            (1, &[0], 7),
            (0, &[1], 9),
            (2, &[1], 3),
            (2, &[2], 5),
        ]);
        let result = solve_bnb(&bids, 4).unwrap();
        assert_eq!(result.optimal.revenue, Money::from_major(7 + 9 + 5));
    }

    #[test]
    fn oracle_rejects_large_instances() {
        let bids = table(&[(0, &[0], 1)]);
        assert_eq!(
            solve_oracle(&bids, 17),
            Err(WdpError::OracleScale { m: 17, limit: 16 })
        );
        assert!(solve_oracle_with_limit(&bids, 17, 20).is_ok());
        assert!(solve_bnb(&bids, 64).is_ok());
        assert_eq!(solve_bnb(&bids, 65), Err(WdpError::TooManyResources(65)));
    }

    #[test]
    fn out_of_range_package_rejected() {
        let bids = table(&[(0, &[3], 1)]);
        assert!(matches!(
            solve_bnb(&bids, 2),
            Err(WdpError::PackageOutOfRange { .. })
        ));
    }

    #[test]
    fn empty_or_zero_bids_yield_empty_allocation() {
        let empty = BidTable::default();
        let result = solve_bnb(&empty, 2).unwrap();
        assert_eq!(result.optimal.revenue, Money::ZERO);
        assert!(result.optimal.awards.is_empty());
        let zero = table(&[(0, &[0], 0)]);
        assert_eq!(solve_oracle(&zero, 1).unwrap().alternates.len(), 1);
    }

    #[test]
    fn sixty_four_resources() {
        let bids = BidTable::new(vec![
            AtomicBid {
                bidder: BidderId(0),
                package: Package::full(64),
                amount: Money::from_major(100),
            },
            AtomicBid::new(1, &[63], Money::from_major(60)),
            AtomicBid::new(2, &[0, 1], Money::from_major(50)),
        ])
        .unwrap();
        assert_eq!(solve_bnb(&bids, 64).unwrap().optimal.revenue, Money::from_major(110));
    }

    #[test]
    fn preprocessing_drops_superset_with_lower_amount() {
        let bids = table(&[(0, &[0, 1], 5), (1, &[0], 8)]);
        let reduced = preprocess_dominated(&bids);
        assert_eq!(reduced.bids(), &bids.bids()[1..]);
        assert_eq!(
            solve_oracle(&reduced, 2).unwrap().optimal.revenue,
            solve_oracle(&bids, 2).unwrap().optimal.revenue
        );

        let single = table(&[(0, &[0, 1], 5)]);
        assert_eq!(preprocess_dominated(&single), single);
    }

    #[test]
    fn preprocessing_reference_bids() {
        let bids = fixtures::reference_bid_table();
        let reduced = preprocess_dominated(&bids);
        assert!(!reduced
            .bids()
            .iter()
            .any(|b| b.bidder == BidderId(2) && b.package == grand()));
        // both tied bids survive
        assert_eq!(
            reduced.bids().iter().filter(|b| b.package == grand()).count(),
            2
        );
        let result = solve_oracle(&reduced, 3).unwrap();
        assert_eq!(result.optimal.revenue, Money::from_major(50));
        assert_eq!(result.ties.len(), 1);
    }

    #[test]
    fn tie_relevant_bids_are_kept_even_when_dominated() {
        let bids = table(&[(0, &[0, 1], 5), (1, &[0, 1], 5), (2, &[0], 9)]);
        assert_eq!(preprocess_dominated(&bids).len(), 3);
    }

    #[test]
    fn solver_enum_dispatch() {
        let bids = fixtures::reference_bid_table();
        assert_eq!(
            Solver::Bnb.revenue(&bids, 3).unwrap(),
            Solver::Oracle.revenue(&bids, 3).unwrap()
        );
        assert_eq!(Oracle { limit: 2 }.revenue(&bids, 3), Err(WdpError::OracleScale { m: 3, limit: 2 }));
    }

    fn instance() -> impl Strategy<Value = (BidTable, usize)> {
        (1usize..=6, 1usize..=5).prop_flat_map(|(m, n)| {
            let bid = (0..n, 1u64..(1u64 << m), 0i64..=100);
            prop::collection::vec(bid, 1..=12).prop_map(move |raw| {
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
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn bnb_matches_oracle((bids, m) in instance()) {
            let oracle = solve_oracle(&bids, m).unwrap();
            let bnb = solve_bnb(&bids, m).unwrap();
            prop_assert_eq!(bnb.optimal.revenue, oracle.optimal.revenue);
            prop_assert_eq!(&bnb, &oracle);
            for alt in &bnb.alternates {
                prop_assert!(alt.is_feasible());
                prop_assert_eq!(alt.revenue, bnb.optimal.revenue);
            }
            for tie in &bnb.ties {
                prop_assert!(tie.bidders.len() >= 2);
            }
        }

        #[test]
        fn preprocessing_keeps_revenue((bids, m) in instance()) {
            let reduced = preprocess_dominated(&bids);
            prop_assert!(reduced.len() <= bids.len());
            prop_assert_eq!(
                solve_oracle(&reduced, m).unwrap().optimal.revenue,
                solve_oracle(&bids, m).unwrap().optimal.revenue
            );
        }

        #[test]
        fn solving_is_deterministic((bids, m) in instance()) {
            prop_assert_eq!(solve_bnb(&bids, m).unwrap(), solve_bnb(&bids, m).unwrap());
        }
    }
}
