//! Parsed auction in, settlement report out.

use thiserror::Error;

use crate::io::report::{settlement_report, wdp_section, SettlementReportFile, WdpSection};
use crate::io::spec::{Auction, AuctionFileError};
use crate::money::Money;
use crate::settlement::{determine_winners, settle_winners, SettleError};
use crate::wdp::{Oracle, Solver, WdpError, WdpResult, WinnerDetermination, ORACLE_RESOURCE_LIMIT};

/// Environment variable overriding [`ORACLE_RESOURCE_LIMIT`].
pub const ORACLE_LIMIT_ENV: &str = "FAIRCA_ORACLE_LIMIT";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Input(#[from] AuctionFileError),
    #[error(transparent)]
    Solver(#[from] WdpError),
    #[error(transparent)]
    Settlement(#[from] SettleError),
    #[error("solver mismatch: primary solver found revenue {primary}, oracle found {oracle}")]
    SolverMismatch { primary: Money, oracle: Money },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Input(_) => 2,
            PipelineError::Solver(_) => 3,
            PipelineError::Settlement(_) => 4,
            PipelineError::SolverMismatch { .. } => 5,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Input(AuctionFileError::Io { .. }) => "io",
            PipelineError::Input(AuctionFileError::Parse(_)) => "parse",
            PipelineError::Input(AuctionFileError::Validation(_)) => "validation",
            PipelineError::Solver(_) => "solver",
            PipelineError::Settlement(_) => "settlement",
            PipelineError::SolverMismatch { .. } => "solver_mismatch",
        }
    }
}

/// Reads [`ORACLE_LIMIT_ENV`], falling back to the default on absence or
/// garbage.
pub fn oracle_limit_from_env() -> usize {
    std::env::var(ORACLE_LIMIT_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(ORACLE_RESOURCE_LIMIT)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineOptions {
    /// Overrides the solver named in the auction file.
    pub solver: Option<Solver>,
    /// Cross-check against the oracle when the auction has at most this
    /// many resources.
    pub oracle_limit: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            solver: None,
            oracle_limit: ORACLE_RESOURCE_LIMIT,
        }
    }
}

impl PipelineOptions {
    pub fn solver_for(&self, auction: &Auction) -> Solver {
        self.solver.unwrap_or(auction.options.solver)
    }
}

/// Winner determination with the optional oracle cross-check. Returns the
/// result and whether the oracle ran.
pub fn solve_checked(
    auction: &Auction,
    primary: &dyn WinnerDetermination,
    oracle_limit: usize,
) -> Result<(WdpResult, bool), PipelineError> {
    let m = auction.m();
    let (reduced, result) = determine_winners(&auction.bids, m, primary)?;
    let checked = m <= oracle_limit;
    if checked {
        let oracle = Oracle {
            limit: oracle_limit,
        }
        .revenue(&reduced, m)?;
        if oracle != result.optimal.revenue {
            return Err(PipelineError::SolverMismatch {
                primary: result.optimal.revenue,
                oracle,
            });
        }
    }
    Ok((result, checked))
}

pub fn run_solve(auction: &Auction, options: PipelineOptions) -> Result<WdpSection, PipelineError> {
    let solver = options.solver_for(auction);
    let (result, checked) = solve_checked(auction, &solver, options.oracle_limit)?;
    Ok(wdp_section(auction, &result, solver, checked))
}

/// Full settlement of `auction`, which arrives sealed. Winners are fixed
/// before the fairness table is unsealed.
pub fn run_pipeline(auction: Auction, options: PipelineOptions) -> Result<SettlementReportFile, PipelineError> {
    let solver = options.solver_for(&auction);
    run_pipeline_with(auction, solver, &solver, options.oracle_limit)
}

/// [`run_pipeline`] with an arbitrary primary solver; `label` is what the
/// report names it.
pub fn run_pipeline_with(
    mut auction: Auction,
    label: Solver,
    primary: &dyn WinnerDetermination,
    oracle_limit: usize,
) -> Result<SettlementReportFile, PipelineError> {
    let (result, checked) = solve_checked(&auction, primary, oracle_limit)?;
    auction.table.unseal();
    let m = auction.m();
    let settlement = settle_winners(result, &auction.bids, &auction.table, m, primary)?;
    Ok(settlement_report(&auction, &settlement, label, checked))
}
