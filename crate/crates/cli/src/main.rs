use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use fairca_core::incentives::{
    check_efficiency, check_theorem1, check_theorem2, check_truthfulness, default_deviations,
    survey_efficiency, survey_truthfulness, theorem1_fixture, theorem2_default_spec, IncentiveError,
    InstanceShape, TruthModel,
};
use fairca_core::io::pipeline::{oracle_limit_from_env, PipelineOptions};
use fairca_core::io::spec::AuctionFileError;
use fairca_core::io::sweep::{instance_of, parse_sweep_str, SweepCheck};
use fairca_core::io::{parse_auction, run_pipeline, run_solve, PipelineError};
use fairca_core::settlement::determine_winners;
use fairca_core::wdp::{Oracle, Solver, WdpError, WinnerDetermination};

#[derive(Parser)]
#[command(name = "fairca", version, about = "Settle combinatorial auctions with fairness-adjusted payments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Bnb,
    Oracle,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Bnb => Solver::Bnb,
            SolverArg::Oracle => Solver::Oracle,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Theorem1,
    Theorem2,
    Truthfulness,
    Efficiency,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    /// Values are the bids; Vickrey package costs only.
    Gva,
    /// Values are the fair values; full settlement.
    Pipeline,
}

#[derive(clap::Args)]
struct Common {
    /// Auction file (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Write here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides the solver named in the auction file.
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Winner determination only.
    Solve(Common),
    /// Full settlement report.
    Settle(Common),
    /// Incentive property checks.
    Sweep {
        #[arg(long, value_enum)]
        kind: SweepKind,
        /// Sweep file for theorem1/theorem2, auction file for the others.
        /// Without it a built-in fixture or a seeded survey is used.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random instances in a survey.
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, value_enum, default_value = "gva")]
        model: ModelArg,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Compare branch-and-bound against exhaustive enumeration.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl Failure {
    fn new(code: u8, kind: &str, message: impl Into<String>) -> Self {
        Failure {
            code,
            kind: kind.into(),
            message: message.into(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::new(e.exit_code() as u8, e.kind(), e.to_string())
    }
}

impl From<AuctionFileError> for Failure {
    fn from(e: AuctionFileError) -> Self {
        PipelineError::from(e).into()
    }
}

impl From<WdpError> for Failure {
    fn from(e: WdpError) -> Self {
        PipelineError::from(e).into()
    }
}

impl From<IncentiveError> for Failure {
    fn from(e: IncentiveError) -> Self {
        let code = match e {
            IncentiveError::Solver(_) => 3,
            IncentiveError::Settle(_) | IncentiveError::Fairness(_) => 4,
            _ => 2,
        };
        Failure::new(code, "sweep", e.to_string())
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::new(1, "io", format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    text
}

fn json_only(format: Format, command: &str) -> Result<(), Failure> {
    if format == Format::Csv {
        return Err(Failure::new(2, "usage", format!("{command} only writes JSON")));
    }
    Ok(())
}

fn options(solver: Option<SolverArg>) -> PipelineOptions {
    PipelineOptions {
        solver: solver.map(Solver::from),
        oracle_limit: oracle_limit_from_env(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| {
        AuctionFileError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
        .into()
    })
}

fn sweep(
    kind: SweepKind,
    input: Option<&Path>,
    seed: u64,
    count: usize,
    model: ModelArg,
) -> Result<String, Failure> {
    let model = match model {
        ModelArg::Gva => TruthModel::GvaBids,
        ModelArg::Pipeline => TruthModel::FullPipelineFair,
    };
    match kind {
        SweepKind::Theorem1 | SweepKind::Theorem2 => {
            let expected = match kind {
                SweepKind::Theorem1 => SweepCheck::Theorem1,
                _ => SweepCheck::Theorem2,
            };
            let spec = match input {
                Some(path) => {
                    let (check, spec) = parse_sweep_str(&read(path)?)?;
                    if check != expected {
                        return Err(Failure::new(
                            2,
                            "validation",
                            format!("sweep file is for {check:?}, not the requested check"),
                        ));
                    }
                    spec
                }
                None => {
                    let mut spec = match expected {
                        SweepCheck::Theorem1 => theorem1_fixture(),
                        SweepCheck::Theorem2 => theorem2_default_spec(),
                    };
                    spec.seed = seed;
                    spec
                }
            };
            let report = match expected {
                SweepCheck::Theorem1 => check_theorem1(&spec)?,
                SweepCheck::Theorem2 => check_theorem2(&spec)?,
            };
            Ok(to_json(&report))
        }
        SweepKind::Truthfulness => match input {
            Some(path) => {
                let auction = parse_auction(path)?;
                let report = check_truthfulness(&instance_of(&auction), &default_deviations(), model)?;
                Ok(to_json(&report))
            }
            None => Ok(to_json(&survey_truthfulness(
                seed,
                count,
                InstanceShape::TRUTHFULNESS,
                model,
            )?)),
        },
        SweepKind::Efficiency => match input {
            Some(path) => {
                let auction = parse_auction(path)?;
                Ok(to_json(&check_efficiency(&instance_of(&auction))?))
            }
            None => Ok(to_json(&survey_efficiency(seed, count, InstanceShape::TRUTHFULNESS)?)),
        },
    }
}

fn oracle(input: &Path) -> Result<String, Failure> {
    let auction = parse_auction(input)?;
    let m = auction.m();
    let limit = oracle_limit_from_env();
    let (reduced, bnb) = determine_winners(&auction.bids, m, &Solver::Bnb)?;
    let oracle = Oracle { limit }.revenue(&reduced, m)?;
    let full = Oracle { limit }.revenue(&auction.bids, m)?;
    let agree = oracle == bnb.optimal.revenue && full == oracle;
    let text = to_json(&json!({
        "resources": m,
        "bids": auction.bids.len(),
        "bids_after_preprocessing": reduced.len(),
        "bnb_revenue": bnb.optimal.revenue,
        "oracle_revenue": oracle,
        "oracle_revenue_without_preprocessing": full,
        "agree": agree,
    }));
    if !agree {
        print!("{text}");
        return Err(PipelineError::SolverMismatch {
            primary: bnb.optimal.revenue,
            oracle,
        }
        .into());
    }
    Ok(text)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve(c) => {
            json_only(c.format, "solve")?;
            let auction = parse_auction(&c.input)?;
            let section = run_solve(&auction, options(c.solver))?;
            write_output(c.output.as_deref(), &to_json(&section))
        }
        Command::Settle(c) => {
            let auction = parse_auction(&c.input)?;
            let report = run_pipeline(auction, options(c.solver))?;
            let text = match c.format {
                Format::Json => report.to_json(),
                Format::Csv => report
                    .to_csv()
                    .map_err(|e| Failure::new(1, "io", e.to_string()))?,
            };
            write_output(c.output.as_deref(), &text)
        }
        Command::Sweep {
            kind,
            input,
            output,
            seed,
            count,
            model,
            format,
        } => {
            json_only(format, "sweep")?;
            let text = sweep(kind, input.as_deref(), seed, count, model)?;
            write_output(output.as_deref(), &text)
        }
        Command::Oracle { input, output } => {
            let text = oracle(&input)?;
            write_output(output.as_deref(), &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let err = json!({ "error": { "kind": f.kind, "message": f.message, "exit_code": f.code } });
            eprintln!("{err}");
            ExitCode::from(f.code)
        }
    }
}
