//! File formats and the end-to-end driver used by the command line.

pub mod pipeline;
pub mod report;
pub mod spec;
pub mod sweep;

pub use pipeline::{run_pipeline, run_pipeline_with, run_solve, PipelineError, PipelineOptions};
pub use report::SettlementReportFile;
pub use spec::{emit, parse_auction, parse_auction_str, Auction, AuctionFileError, ParseError, ValidationError};
