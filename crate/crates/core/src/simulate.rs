//! Seeded Monte Carlo comparison of payment rules and bidding strategies.
//!
//! Values are drawn i.i.d. uniform on integer ticks `[value_low, value_high]`
//! from a counter-based stream keyed by `(seed, round, bidder)`, so round `r`
//! sees the same valuations regardless of the rule or strategy under test.
//! All statistics are exact rationals.

use std::fmt;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::auction::{outcome, BidProfile, BidderId, Money, PaymentRule, PolicySpec, SignedMoney, ValuationProfile};
use crate::error::{Error, Result};
use crate::rng;

/// Domain tag separating valuation draws from other keyed streams.
const SAMPLE_DOMAIN: u64 = 0x7661_6c75_6573; // "values"

/// An exact rational, serialized as a `"p/q"` string in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(pub Ratio<i128>);

impl Exact {
    pub fn new(numer: i128, denom: i128) -> Exact {
        Exact(Ratio::new(numer, denom))
    }

    pub fn integer(n: i128) -> Exact {
        Exact(Ratio::from_integer(n))
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// How each bidder turns its value into a bid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Strategy {
    Truthful,
    /// `floor(value * numerator / denominator)`, with `numerator < denominator`.
    Shade {
        numerator: u64,
        denominator: u64,
    },
    Overbid {
        delta: Money,
    },
}

impl Strategy {
    fn validate(&self) -> Result<()> {
        if let Strategy::Shade { numerator, denominator } = *self {
            if numerator == 0 || denominator == 0 || numerator >= denominator {
                return Err(Error::InvalidConfig(format!(
                    "shade factor {numerator}/{denominator} must be positive and below 1"
                )));
            }
        }
        Ok(())
    }

    pub fn bid(&self, value: Money) -> Result<Money> {
        match *self {
            Strategy::Truthful => Ok(value),
            Strategy::Shade { numerator, denominator } => {
                let shaded = u128::from(value.ticks()) * u128::from(numerator) / u128::from(denominator);
                // Below `value`, so always representable.
                Money::new(shaded as u64)
            }
            Strategy::Overbid { delta } => value
                .checked_add(delta)
                .ok_or_else(|| Error::InvalidConfig(format!("overbid {value} + {delta} leaves the tick range"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Truthful => f.write_str("truthful"),
            Strategy::Shade { numerator, denominator } => write!(f, "shade {numerator}/{denominator}"),
            Strategy::Overbid { delta } => write!(f, "overbid {delta}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_bidders: usize,
    pub n_rounds: u64,
    pub value_low: Money,
    pub value_high: Money,
    pub rule: PaymentRule,
    pub strategy: Strategy,
    #[serde(default = "default_policy")]
    pub policy: PolicySpec,
    pub seed: u64,
}

fn default_policy() -> PolicySpec {
    PolicySpec::FirstIndex
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bidders < 2 {
            return Err(Error::TooFewBidders(self.n_bidders));
        }
        if self.n_rounds == 0 {
            return Err(Error::InvalidConfig("n_rounds must be positive".into()));
        }
        if self.value_low > self.value_high {
            return Err(Error::InvalidConfig(format!(
                "value_low {} exceeds value_high {}",
                self.value_low, self.value_high
            )));
        }
        self.strategy.validate()
    }

    fn ensure_budget(&self, budget: u64) -> Result<()> {
        let required = u128::from(self.n_rounds) * self.n_bidders as u128;
        if required > u128::from(budget) {
            return Err(Error::BudgetExceeded { required, budget });
        }
        Ok(())
    }

    fn same_sampling(&self, other: &ExperimentConfig) -> Result<()> {
        let mut diffs = Vec::new();
        if self.n_bidders != other.n_bidders {
            diffs.push("n_bidders");
        }
        if self.n_rounds != other.n_rounds {
            diffs.push("n_rounds");
        }
        if self.value_low != other.value_low || self.value_high != other.value_high {
            diffs.push("value bounds");
        }
        if self.seed != other.seed {
            diffs.push("seed");
        }
        if diffs.is_empty() {
            Ok(())
        } else {
            Err(Error::SamplingMismatch(diffs.join(", ")))
        }
    }
}

/// Valuations for one round; a pure function of (seed, round, bidder index).
pub fn sample_valuations(config: &ExperimentConfig, round: u64) -> Result<ValuationProfile> {
    config.validate()?;
    let (lo, hi) = (config.value_low.ticks(), config.value_high.ticks());
    let values = (0..config.n_bidders)
        .map(|i| Money::new(rng::uniform_inclusive(config.seed, &[SAMPLE_DOMAIN, round, i as u64], lo, hi)))
        .collect::<Result<Vec<_>>>()?;
    ValuationProfile::new(values)
}

pub fn apply_strategy(v: &ValuationProfile, s: &Strategy) -> Result<BidProfile> {
    s.validate()?;
    BidProfile::new(v.values().iter().map(|&w| s.bid(w)).collect::<Result<_>>()?)
}

/// Everything that happened in one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub round: u64,
    pub values: Vec<Money>,
    pub bids: Vec<Money>,
    pub winner: BidderId,
    pub price: Money,
    pub winner_utility: SignedMoney,
    pub efficient: bool,
}

pub fn simulate_round(config: &ExperimentConfig, round: u64) -> Result<RoundRecord> {
    let v = sample_valuations(config, round)?;
    let b = apply_strategy(&v, &config.strategy)?;
    let policy = config.policy.build(config.n_bidders, config.seed);
    let o = outcome(&b, &policy, config.rule)?;
    let winner_value = v.value(o.winner)?;
    Ok(RoundRecord {
        round,
        values: v.values().to_vec(),
        bids: b.bids().to_vec(),
        winner: o.winner,
        price: o.price,
        winner_utility: winner_value - o.price,
        efficient: winner_value == v.max_value(),
    })
}

/// Per-round records, in round order.
pub fn simulate_rounds(config: &ExperimentConfig, budget: u64) -> Result<Vec<RoundRecord>> {
    config.validate()?;
    config.ensure_budget(budget)?;
    (0..config.n_rounds).into_par_iter().map(|r| simulate_round(config, r)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Totals {
    revenue: i128,
    winner_utility: i128,
    efficient: u64,
}

impl Totals {
    fn of(r: &RoundRecord) -> Totals {
        Totals {
            revenue: i128::from(r.price.ticks()),
            winner_utility: i128::from(r.winner_utility.ticks()),
            efficient: u64::from(r.efficient),
        }
    }

    fn add(self, o: Totals) -> Totals {
        Totals {
            revenue: self.revenue + o.revenue,
            winner_utility: self.winner_utility + o.winner_utility,
            efficient: self.efficient + o.efficient,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimReport {
    pub rounds: u64,
    pub total_revenue: String,
    pub mean_revenue: Exact,
    pub total_winner_utility: String,
    pub mean_winner_utility: Exact,
    pub efficient_rounds: u64,
    pub efficiency_rate: Exact,
    pub config: ExperimentConfig,
    pub seed: u64,
}

impl SimReport {
    fn from_totals(config: &ExperimentConfig, t: Totals) -> SimReport {
        let rounds = i128::from(config.n_rounds);
        SimReport {
            rounds: config.n_rounds,
            total_revenue: t.revenue.to_string(),
            mean_revenue: Exact::new(t.revenue, rounds),
            total_winner_utility: t.winner_utility.to_string(),
            mean_winner_utility: Exact::new(t.winner_utility, rounds),
            efficient_rounds: t.efficient,
            efficiency_rate: Exact::new(i128::from(t.efficient), rounds),
            config: config.clone(),
            seed: config.seed,
        }
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<SimReport> {
    run_experiment_with_budget(config, crate::DEFAULT_BUDGET)
}

/// Sample, strategize, run the auction and accumulate, for every round.
pub fn run_experiment_with_budget(config: &ExperimentConfig, budget: u64) -> Result<SimReport> {
    config.validate()?;
    config.ensure_budget(budget)?;
    let totals = (0..config.n_rounds)
        .into_par_iter()
        .map(|r| simulate_round(config, r).map(|rec| Totals::of(&rec)))
        .try_reduce(Totals::default, |a, b| Ok(a.add(b)))?;
    Ok(SimReport::from_totals(config, totals))
}

/// Distribution of a per-round difference `A − B`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiffStats {
    pub mean: Exact,
    pub min: i128,
    pub max: i128,
    pub positive_rounds: u64,
    pub zero_rounds: u64,
    pub negative_rounds: u64,
}

impl DiffStats {
    fn from_diffs(diffs: &[i128]) -> DiffStats {
        DiffStats {
            mean: Exact::new(diffs.iter().sum(), diffs.len() as i128),
            min: diffs.iter().copied().min().unwrap_or(0),
            max: diffs.iter().copied().max().unwrap_or(0),
            positive_rounds: diffs.iter().filter(|&&d| d > 0).count() as u64,
            zero_rounds: diffs.iter().filter(|&&d| d == 0).count() as u64,
            negative_rounds: diffs.iter().filter(|&&d| d < 0).count() as u64,
        }
    }
}

/// Two experiments on one valuation stream, with `A − B` differences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairedReport {
    pub a: SimReport,
    pub b: SimReport,
    pub revenue_difference: DiffStats,
    pub winner_utility_difference: DiffStats,
    pub efficiency_rate_difference: Exact,
}

pub fn compare_rules(a: &ExperimentConfig, b: &ExperimentConfig) -> Result<PairedReport> {
    compare_rules_with_budget(a, b, crate::DEFAULT_BUDGET)
}

pub fn compare_rules_with_budget(a: &ExperimentConfig, b: &ExperimentConfig, budget: u64) -> Result<PairedReport> {
    a.validate()?;
    b.validate()?;
    a.same_sampling(b)?;
    let half = budget / 2;
    let ra = simulate_rounds(a, half)?;
    let rb = simulate_rounds(b, half)?;
    let total = |rs: &[RoundRecord]| rs.iter().map(Totals::of).fold(Totals::default(), Totals::add);
    let (ta, tb) = (total(&ra), total(&rb));
    let revenue: Vec<i128> =
        ra.iter().zip(&rb).map(|(x, y)| i128::from(x.price.ticks()) - i128::from(y.price.ticks())).collect();
    let utility: Vec<i128> = ra
        .iter()
        .zip(&rb)
        .map(|(x, y)| i128::from(x.winner_utility.ticks()) - i128::from(y.winner_utility.ticks()))
        .collect();
    let ra_report = SimReport::from_totals(a, ta);
    let rb_report = SimReport::from_totals(b, tb);
    Ok(PairedReport {
        efficiency_rate_difference: Exact(ra_report.efficiency_rate.0 - rb_report.efficiency_rate.0),
        a: ra_report,
        b: rb_report,
        revenue_difference: DiffStats::from_diffs(&revenue),
        winner_utility_difference: DiffStats::from_diffs(&utility),
    })
}

/// Per-round CSV: `round,values,bids,winner,price,winner_utility,efficient`,
/// with profile entries joined by `;`.
pub fn write_csv<W: std::io::Write>(records: &[RoundRecord], out: W) -> std::io::Result<()> {
    let join = |xs: &[Money]| xs.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(";");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "values", "bids", "winner", "price", "winner_utility", "efficient"])?;
    for r in records {
        w.write_record([
            r.round.to_string(),
            join(&r.values),
            join(&r.bids),
            r.winner.to_string(),
            r.price.to_string(),
            r.winner_utility.to_string(),
            r.efficient.to_string(),
        ])?;
    }
    w.flush()
}
