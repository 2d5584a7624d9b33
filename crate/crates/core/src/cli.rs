//! `vickrey` command-line front end.
//!
//! Exit codes: 0 all checks pass (and any sweep is non-vacuous), 1 a check
//! failed or a sweep was vacuous, 2 invalid input, 3 state budget exceeded.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::auction::{
    outcome, validate, AuctionInstance, BidderId, InstanceDoc, Money, Outcome, PaymentRule, PolicySpec, SignedMoney,
    Violation,
};
use crate::error::Error;
use crate::report::{self, Format};
use crate::simulate::{self, ExperimentConfig};
use crate::verify::{
    self, classify_case, deviation_profile, CaseTag, CheckOptions, DeviationMode, SweepReport, SweepSpec,
    TruthfulnessQuery,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass,
    Fail,
    InvalidInput,
    BudgetExceeded,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        match self {
            ExitStatus::Pass => 0,
            ExitStatus::Fail => 1,
            ExitStatus::InvalidInput => 2,
            ExitStatus::BudgetExceeded => 3,
        }
    }

    fn from_error(e: &CliError) -> ExitStatus {
        match e {
            CliError::Core(Error::BudgetExceeded { .. }) => ExitStatus::BudgetExceeded,
            _ => ExitStatus::InvalidInput,
        }
    }
}

/// Everything an invocation produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dispatch {
    pub status: ExitStatus,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Parser)]
#[command(name = "vickrey", version, about = "Sealed-bid auction truthfulness checker and simulator")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = FormatArg::Table, global = true)]
    format: FormatArg,

    /// Seed for seeded tie-breaking (default 0); overrides a simulation config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Cap on evaluated tuples or simulated bidder-rounds.
    #[arg(long, default_value_t = crate::DEFAULT_BUDGET, global = true)]
    budget: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DeviationArg {
    Grid,
    Critical,
}

#[derive(Debug, Args)]
struct PolicyFlags {
    /// Tie-break policy; repeatable. Default: first-index, last-index, seeded, explicit-median.
    #[arg(long = "policy", value_name = "POLICY")]
    policies: Vec<PolicySpec>,

    /// Payment rule: second-price or first-price.
    #[arg(long, default_value = "second-price")]
    rule: PaymentRule,

    /// Skip the adversarial pairing (worst truthful policy vs best deviation policy).
    #[arg(long)]
    no_adversarial: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate an instance document.
    Validate { instance: PathBuf },

    /// Check truthful bidding for the bidders of one instance.
    Check {
        instance: PathBuf,
        #[command(flatten)]
        policy: PolicyFlags,
        #[arg(long, value_enum, default_value_t = DeviationArg::Critical)]
        deviations: DeviationArg,
        /// Largest grid deviation (default: largest tick in the instance plus one).
        #[arg(long)]
        grid_max: Option<u64>,
        /// Only check this bidder.
        #[arg(long)]
        bidder: Option<usize>,
    },

    /// Exhaustively check weak dominance of truthful bidding.
    Dominance {
        /// Number of bidders (at least 2).
        #[arg(long)]
        n: usize,
        /// Opposing bids, values and grid deviations range over 0..=ticks.
        #[arg(long)]
        ticks: u64,
        /// Fix the deviating bidder's value.
        #[arg(long)]
        value: Option<u64>,
        /// Fix the deviating bidder's position.
        #[arg(long)]
        bidder: Option<usize>,
        #[command(flatten)]
        policy: PolicyFlags,
        #[arg(long, value_enum, default_value_t = DeviationArg::Grid)]
        deviations: DeviationArg,
        /// Keep only deviations that win (demonstrates the vacuity guard).
        #[arg(long)]
        only_winning_deviations: bool,
        /// Run the enumeration on one thread.
        #[arg(long)]
        sequential: bool,
    },

    /// Classify one deviation into its win/lose case.
    Classify {
        instance: PathBuf,
        #[arg(long)]
        bidder: usize,
        #[arg(long)]
        deviation: u64,
        #[arg(long, default_value = "first-index")]
        policy: PolicySpec,
        /// Payment rule: second-price or first-price.
        #[arg(long, default_value = "second-price")]
        rule: PaymentRule,
    },

    /// Search for the lexicographically minimal counterexample.
    Falsify {
        #[command(flatten)]
        policy: PolicyFlags,
        #[arg(long, default_value_t = 2)]
        n_max: usize,
        #[arg(long)]
        ticks: u64,
    },

    /// Run a seeded Monte Carlo experiment.
    Simulate {
        config: PathBuf,
        /// Second config sharing seed and bounds; runs a paired comparison.
        #[arg(long)]
        compare: Option<PathBuf>,
        /// Write per-round records of the first config as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Core(#[from] Error),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("{}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

type CliResult<T> = std::result::Result<T, CliError>;

struct Rendered {
    status: ExitStatus,
    body: String,
}

/// Parse `argv` (including the program name) and run the command.
pub fn dispatch<I, T>(argv: I) -> Dispatch
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Dispatch { status: ExitStatus::InvalidInput, stdout: String::new(), stderr: text }
            } else {
                Dispatch { status: ExitStatus::Pass, stdout: text, stderr: String::new() }
            };
        }
    };
    match run(&cli) {
        Ok(r) => Dispatch { status: r.status, stdout: r.body, stderr: String::new() },
        Err(e) => {
            Dispatch { status: ExitStatus::from_error(&e), stdout: String::new(), stderr: format!("error: {e}\n") }
        }
    }
}

/// Read an instance document and validate it; every violation is reported.
pub fn load_instance(path: &Path) -> Result<AuctionInstance, String> {
    load_validated(path).map_err(|e| e.to_string())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: shown.clone(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse { path: shown, source })
}

fn load_validated(path: &Path) -> CliResult<AuctionInstance> {
    let doc: InstanceDoc = read_json(path)?;
    validate(&doc).map_err(CliError::Invalid)
}

fn run(cli: &Cli) -> CliResult<Rendered> {
    let format = match cli.format {
        FormatArg::Json => Format::Json,
        FormatArg::Table => Format::Table,
    };
    let seed = cli.seed.unwrap_or(0);
    let emit = |status: ExitStatus, report: &dyn erased::Report| -> CliResult<Rendered> {
        let body = report.render(format).map_err(|source| CliError::Parse { path: "report".into(), source })?;
        Ok(Rendered { status, body })
    };

    match &cli.command {
        Command::Validate { instance } => {
            let doc: InstanceDoc = read_json(instance)?;
            let violations = doc.violations();
            let report = ValidateReport {
                valid: violations.is_empty(),
                n_valuations: doc.valuations.len(),
                n_bids: doc.bids.len(),
                violations: violations.iter().map(|v| v.to_string()).collect(),
            };
            let status = if report.valid { ExitStatus::Pass } else { ExitStatus::InvalidInput };
            emit(status, &report)
        }

        Command::Check { instance, policy, deviations, grid_max, bidder } => {
            let inst = load_validated(instance)?;
            let n = inst.len();
            let top = inst.valuations.values().iter().chain(inst.bids.bids()).copied().max().unwrap_or(Money::ZERO);
            let deviations = match deviations {
                DeviationArg::Critical => DeviationMode::Critical,
                DeviationArg::Grid => DeviationMode::Grid {
                    max: match grid_max {
                        Some(t) => Money::new(*t)?,
                        None => top.succ().unwrap_or(top),
                    },
                },
            };
            let opts = check_options(policy, n, seed, deviations, false);
            let bidders: Vec<BidderId> = match bidder {
                Some(i) if *i >= n => return Err(Error::BidderOutOfRange { index: *i, n }.into()),
                Some(i) => vec![BidderId(*i)],
                None => (0..n).map(BidderId).collect(),
            };
            let mut sweep: Option<SweepReport> = None;
            for i in bidders {
                let value = inst.valuations.value(i)?;
                let mut others = inst.bids.bids().to_vec();
                others.remove(i.0);
                let results = verify::check_truthfulness(&inst.valuations, &others, i, &opts)?;
                let q = TruthfulnessQuery { bidder: i, value, others };
                let part = SweepReport::from_query(&q, &results, opts.rule);
                sweep = Some(match sweep {
                    Some(acc) => acc.merge(part),
                    None => part,
                });
            }
            let sweep = sweep.expect("at least one bidder");
            let minimal = match &sweep.counterexample {
                Some(cex) => Some(verify::shrink(cex, &opts, cli.budget)?),
                None => None,
            };
            let status = if sweep.is_success() { ExitStatus::Pass } else { ExitStatus::Fail };
            emit(
                status,
                &CheckReport { instance: inst.to_doc(), rule: opts.rule, sweep, minimal_counterexample: minimal },
            )
        }

        Command::Dominance { n, ticks, value, bidder, policy, deviations, only_winning_deviations, sequential } => {
            let tick_bound = Money::new(*ticks)?;
            let deviations = match deviations {
                DeviationArg::Grid => DeviationMode::Grid { max: tick_bound },
                DeviationArg::Critical => DeviationMode::Critical,
            };
            let opts = check_options(policy, *n, seed, deviations, *only_winning_deviations);
            let spec = SweepSpec {
                value: value.map(Money::new).transpose()?,
                bidder: bidder.map(BidderId),
                budget: cli.budget,
                parallel: !sequential,
                ..SweepSpec::new(*n, tick_bound)
            };
            let sweep = verify::sweep(&spec, &opts)?;
            let status = if sweep.is_success() { ExitStatus::Pass } else { ExitStatus::Fail };
            emit(status, &DominanceReport { n: *n, tick_bound, rule: opts.rule, policies: labels(&opts), sweep })
        }

        Command::Classify { instance, bidder, deviation, policy, rule } => {
            let inst = load_validated(instance)?;
            let i = BidderId(*bidder);
            let tie = policy.build(inst.len(), seed);
            let b_prime = deviation_profile(&inst.bids, i, Money::new(*deviation)?)?;
            let case = classify_case(&inst.bids, &b_prime, i, &tie)?;
            let before = outcome(&inst.bids, &tie, *rule)?;
            let after = outcome(&b_prime, &tie, *rule)?;
            let report = ClassifyReport {
                bidder: i,
                bid: inst.bids.bid(i)?,
                deviation_bid: Money::new(*deviation)?,
                case,
                policy: tie.label(),
                rule: *rule,
                outcome: before,
                deviation_outcome: after,
                utility: crate::auction::bidder_utility(&inst.valuations, &before, i)?,
                deviation_utility: crate::auction::bidder_utility(&inst.valuations, &after, i)?,
            };
            emit(ExitStatus::Pass, &report)
        }

        Command::Falsify { policy, n_max, ticks } => {
            let tick_bound = Money::new(*ticks)?;
            let opts = check_options(policy, *n_max, seed, DeviationMode::Grid { max: tick_bound }, false);
            let sweep = verify::falsify(*n_max, tick_bound, &opts, cli.budget)?;
            let status =
                if sweep.counterexample.is_none() && !sweep.vacuous { ExitStatus::Pass } else { ExitStatus::Fail };
            emit(status, &FalsifyReport { n_max: *n_max, tick_bound, rule: opts.rule, policies: labels(&opts), sweep })
        }

        Command::Simulate { config, compare, csv } => {
            let mut a: ExperimentConfig = read_json(config)?;
            if let Some(s) = cli.seed {
                a.seed = s;
            }
            if let Some(path) = csv {
                let rounds = simulate::simulate_rounds(&a, cli.budget)?;
                let mut buf = Vec::new();
                simulate::write_csv(&rounds, &mut buf)
                    .and_then(|_| fs::write(path, buf))
                    .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            }
            match compare {
                None => emit(ExitStatus::Pass, &simulate::run_experiment_with_budget(&a, cli.budget)?),
                Some(other) => {
                    let mut b: ExperimentConfig = read_json(other)?;
                    if let Some(s) = cli.seed {
                        b.seed = s;
                    }
                    emit(ExitStatus::Pass, &simulate::compare_rules_with_budget(&a, &b, cli.budget)?)
                }
            }
        }
    }
}

fn check_options(
    flags: &PolicyFlags,
    n: usize,
    seed: u64,
    deviations: DeviationMode,
    only_winning_deviations: bool,
) -> CheckOptions {
    let policies = if flags.policies.is_empty() {
        verify::standard_policies(n, seed)
    } else {
        flags.policies.iter().map(|p| p.build(n, seed)).collect()
    };
    CheckOptions { policies, adversarial: !flags.no_adversarial, rule: flags.rule, deviations, only_winning_deviations }
}

fn labels(opts: &CheckOptions) -> Vec<String> {
    opts.policies.iter().map(|p| p.label()).collect()
}

#[derive(Serialize)]
struct ValidateReport {
    valid: bool,
    n_valuations: usize,
    n_bids: usize,
    violations: Vec<String>,
}

#[derive(Serialize)]
struct CheckReport {
    instance: InstanceDoc,
    rule: PaymentRule,
    #[serde(flatten)]
    sweep: SweepReport,
    minimal_counterexample: Option<verify::Counterexample>,
}

#[derive(Serialize)]
struct DominanceReport {
    n: usize,
    tick_bound: Money,
    rule: PaymentRule,
    policies: Vec<String>,
    #[serde(flatten)]
    sweep: SweepReport,
}

#[derive(Serialize)]
struct FalsifyReport {
    n_max: usize,
    tick_bound: Money,
    rule: PaymentRule,
    policies: Vec<String>,
    #[serde(flatten)]
    sweep: SweepReport,
}

#[derive(Serialize)]
struct ClassifyReport {
    bidder: BidderId,
    bid: Money,
    deviation_bid: Money,
    case: CaseTag,
    policy: String,
    rule: PaymentRule,
    outcome: Outcome,
    deviation_outcome: Outcome,
    utility: SignedMoney,
    deviation_utility: SignedMoney,
}

mod erased {
    use super::*;

    /// Object-safe rendering so every command shares one emit path.
    pub trait Report {
        fn render(&self, format: Format) -> serde_json::Result<String>;
    }

    impl<T: Serialize> Report for T {
        fn render(&self, format: Format) -> serde_json::Result<String> {
            report::render(self, format)
        }
    }
}
