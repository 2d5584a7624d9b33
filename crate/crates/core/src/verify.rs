//! Bounded-exhaustive checking of truthful bidding.
//!
//! For a bidder `i` with value `v_i`, the truthful profile `b` has `b_i = v_i`
//! and a deviation profile `b'` differs from `b` only at `i`. Each
//! (deviation, policy pairing) evaluation is tagged with one of four cases by
//! whether `i` wins under `b` and under `b'`, and the per-case inequalities
//! are asserted:
//!
//! | case       | assertion                                         |
//! |------------|---------------------------------------------------|
//! | `WinWin`   | utilities equal (price is set by the others)      |
//! | `LoseLose` | utilities equal (both zero)                       |
//! | `LoseWin`  | truthful utility is 0, deviation utility is ≤ 0   |
//! | `WinLose`  | truthful utility is ≥ 0, deviation utility is 0   |
//!
//! `LoseWin` asserts non-positivity: losing truthfully means `v_i ≤ M` where
//! `M` is the highest opposing bid, so winning at price `M` yields `v_i − M ≤ 0`.
//!
//! Sweeps enumerate every opposing-bid vector in `{0..=tick_bound}^(N−1)`,
//! optionally every value and bidder position, and aggregate in an
//! order-independent way so parallel and sequential runs agree exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::auction::{
    bidder_utility, max_excluding, outcome, select_winner, AuctionInstance, BidProfile, BidderId, InstanceDoc, Money,
    PaymentRule, SignedMoney, TieBreakPolicy, ValuationProfile,
};
use crate::error::{Error, Result};

/// Win/lose status of the deviating bidder under `b`, then under `b'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CaseTag {
    WinWin,
    LoseLose,
    LoseWin,
    WinLose,
}

impl CaseTag {
    pub const ALL: [CaseTag; 4] = [CaseTag::WinWin, CaseTag::LoseLose, CaseTag::LoseWin, CaseTag::WinLose];

    pub fn from_wins(truthful_wins: bool, deviation_wins: bool) -> CaseTag {
        match (truthful_wins, deviation_wins) {
            (true, true) => CaseTag::WinWin,
            (false, false) => CaseTag::LoseLose,
            (false, true) => CaseTag::LoseWin,
            (true, false) => CaseTag::WinLose,
        }
    }

    pub fn deviation_wins(self) -> bool {
        matches!(self, CaseTag::WinWin | CaseTag::LoseWin)
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingKind {
    /// The same policy resolves ties in `b` and `b'`.
    Same,
    /// Worst policy for the truthful bid, best policy for the deviation.
    Adversarial,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DeviationCheckResult {
    pub bidder: BidderId,
    pub truthful_bid: Money,
    pub deviation_bid: Money,
    pub truthful_utility: SignedMoney,
    pub deviation_utility: SignedMoney,
    pub case: CaseTag,
    pub pass: bool,
    pub pairing: PairingKind,
    /// Position of the policy in the option list; `policies.len()` for the adversarial pairing.
    pub pairing_index: usize,
    pub truthful_policy: String,
    pub deviation_policy: String,
}

/// `b` with bidder `i`'s bid replaced by `new_bid`.
pub fn deviation_profile(b: &BidProfile, i: BidderId, new_bid: Money) -> Result<BidProfile> {
    b.with_bid(i, new_bid)
}

fn ensure_single_deviation(b: &BidProfile, b_prime: &BidProfile, i: BidderId) -> Result<()> {
    if b.len() != b_prime.len() {
        return Err(Error::LengthMismatch { expected: b.len(), actual: b_prime.len() });
    }
    if i.0 >= b.len() {
        return Err(Error::BidderOutOfRange { index: i.0, n: b.len() });
    }
    match b.bids().iter().zip(b_prime.bids()).enumerate().find(|&(j, (x, y))| j != i.0 && x != y) {
        Some((j, _)) => Err(Error::ProfilesDifferElsewhere(j)),
        None => Ok(()),
    }
}

/// Case tag with one policy resolving ties in both profiles.
pub fn classify_case(b: &BidProfile, b_prime: &BidProfile, i: BidderId, policy: &TieBreakPolicy) -> Result<CaseTag> {
    classify_case_with(b, policy, b_prime, policy, i)
}

/// Case tag where `b` and `b'` may be resolved by different policies.
pub fn classify_case_with(
    b: &BidProfile,
    truthful_policy: &TieBreakPolicy,
    b_prime: &BidProfile,
    deviation_policy: &TieBreakPolicy,
    i: BidderId,
) -> Result<CaseTag> {
    ensure_single_deviation(b, b_prime, i)?;
    let wins = select_winner(b, truthful_policy)? == i;
    let wins_after = select_winner(b_prime, deviation_policy)? == i;
    Ok(CaseTag::from_wins(wins, wins_after))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseFailure {
    pub case: CaseTag,
    pub reason: String,
}

impl fmt::Display for CaseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.case, self.reason)
    }
}

/// Per-case inequality for a result whose truthful bid equals the bidder's value.
pub fn assert_case(result: &DeviationCheckResult) -> std::result::Result<(), CaseFailure> {
    let (t, d) = (result.truthful_utility, result.deviation_utility);
    let fail = |reason: String| Err(CaseFailure { case: result.case, reason });
    match result.case {
        CaseTag::WinWin | CaseTag::LoseLose if t != d => fail(format!("utilities differ: truthful {t}, deviation {d}")),
        CaseTag::WinLose if d != SignedMoney::ZERO => fail(format!("losing deviation has utility {d}")),
        CaseTag::WinLose if t < SignedMoney::ZERO => fail(format!("winning truthful bid has utility {t}")),
        CaseTag::LoseWin if t != SignedMoney::ZERO => fail(format!("losing truthful bid has utility {t}")),
        CaseTag::LoseWin if d > SignedMoney::ZERO => fail(format!("winning deviation has utility {d}")),
        _ => Ok(()),
    }
}

/// Representative deviations for bidder `i`: `{0 (if M > 0), M, M + 1}`.
///
/// Win/lose status depends only on the sign of `b'_i − M`, every bid below
/// `M` loses with utility 0, and every winning bid above `M` is weakly worse
/// than `M + 1` under both payment rules. `M + 1` is omitted at [`Money::MAX`].
pub fn critical_deviations(b: &BidProfile, i: BidderId) -> Result<BTreeSet<Money>> {
    let m = max_excluding(b, i)?;
    let mut set = BTreeSet::from([Money::ZERO, m]);
    if let Some(above) = m.succ() {
        set.insert(above);
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum DeviationMode {
    /// Every bid in `0..=max`.
    Grid { max: Money },
    /// [`critical_deviations`] of the truthful profile.
    Critical,
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub policies: Vec<TieBreakPolicy>,
    pub adversarial: bool,
    pub rule: PaymentRule,
    pub deviations: DeviationMode,
    /// Drop every result whose deviation loses. Only useful to demonstrate vacuity.
    pub only_winning_deviations: bool,
}

impl CheckOptions {
    /// First-index, last-index, seeded and explicit-median policies plus the adversarial pairing.
    pub fn standard(n: usize, seed: u64, rule: PaymentRule, deviations: DeviationMode) -> Self {
        CheckOptions {
            policies: standard_policies(n, seed),
            adversarial: true,
            rule,
            deviations,
            only_winning_deviations: false,
        }
    }

    fn pairings(&self) -> usize {
        self.policies.len() + usize::from(self.adversarial)
    }
}

pub fn standard_policies(n: usize, seed: u64) -> Vec<TieBreakPolicy> {
    vec![
        TieBreakPolicy::FirstIndex,
        TieBreakPolicy::LastIndex,
        TieBreakPolicy::Seeded(seed),
        TieBreakPolicy::explicit_median(n),
    ]
}

/// Truthful profile: `others` with `value` inserted at position `i`.
pub fn truthful_profile(value: Money, others: &[Money], i: BidderId) -> Result<BidProfile> {
    if i.0 > others.len() {
        return Err(Error::BidderOutOfRange { index: i.0, n: others.len() + 1 });
    }
    let mut bids = others.to_vec();
    bids.insert(i.0, value);
    BidProfile::new(bids)
}

struct Evaluation {
    wins: bool,
    utility: SignedMoney,
}

fn evaluate(
    v: &ValuationProfile,
    b: &BidProfile,
    i: BidderId,
    policy: &TieBreakPolicy,
    rule: PaymentRule,
) -> Result<Evaluation> {
    let o = outcome(b, policy, rule)?;
    Ok(Evaluation { wins: o.winner == i, utility: bidder_utility(v, &o, i)? })
}

/// Compare bidder `i`'s truthful bid against every deviation under every pairing.
///
/// Results are ordered by deviation bid, then pairing index.
pub fn check_truthfulness(
    v: &ValuationProfile,
    others: &[Money],
    i: BidderId,
    opts: &CheckOptions,
) -> Result<Vec<DeviationCheckResult>> {
    if opts.policies.is_empty() {
        return Err(Error::NoPolicies);
    }
    if others.len() + 1 != v.len() {
        return Err(Error::LengthMismatch { expected: v.len() - 1, actual: others.len() });
    }
    let value = v.value(i)?;
    let b = truthful_profile(value, others, i)?;
    AuctionInstance::new(v.clone(), b.clone())?;

    let deviations: Vec<Money> = match opts.deviations {
        DeviationMode::Grid { max } => (0..=max.ticks()).map(Money::new).collect::<Result<_>>()?,
        DeviationMode::Critical => critical_deviations(&b, i)?.into_iter().collect(),
    };

    let truthful: Vec<Evaluation> =
        opts.policies.iter().map(|p| evaluate(v, &b, i, p, opts.rule)).collect::<Result<_>>()?;

    let mut results = Vec::with_capacity(deviations.len() * opts.pairings());
    for &d in &deviations {
        let b_prime = deviation_profile(&b, i, d)?;
        let deviated: Vec<Evaluation> =
            opts.policies.iter().map(|p| evaluate(v, &b_prime, i, p, opts.rule)).collect::<Result<_>>()?;

        let mut push = |k_truthful: usize, k_deviation: usize, pairing, pairing_index| {
            let (t, dv) = (&truthful[k_truthful], &deviated[k_deviation]);
            let case = CaseTag::from_wins(t.wins, dv.wins);
            if opts.only_winning_deviations && !case.deviation_wins() {
                return;
            }
            results.push(DeviationCheckResult {
                bidder: i,
                truthful_bid: value,
                deviation_bid: d,
                truthful_utility: t.utility,
                deviation_utility: dv.utility,
                case,
                pass: t.utility >= dv.utility,
                pairing,
                pairing_index,
                truthful_policy: opts.policies[k_truthful].label(),
                deviation_policy: opts.policies[k_deviation].label(),
            });
        };

        for k in 0..opts.policies.len() {
            push(k, k, PairingKind::Same, k);
        }
        if opts.adversarial {
            // First policy in list order attaining the extremum.
            let worst = (0..truthful.len()).min_by_key(|&k| (truthful[k].utility, k)).unwrap();
            let best = (0..deviated.len()).min_by_key(|&k| (std::cmp::Reverse(deviated[k].utility), k)).unwrap();
            push(worst, best, PairingKind::Adversarial, opts.policies.len());
        }
    }
    Ok(results)
}

/// Per-case witness counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseCoverage {
    pub counts: BTreeMap<CaseTag, u64>,
    pub vacuous: bool,
}

impl CaseCoverage {
    fn from_counts(counts: BTreeMap<CaseTag, u64>) -> CaseCoverage {
        let vacuous = CaseTag::ALL.iter().any(|c| counts.get(c).copied().unwrap_or(0) == 0);
        CaseCoverage { counts, vacuous }
    }

    pub fn count(&self, case: CaseTag) -> u64 {
        self.counts.get(&case).copied().unwrap_or(0)
    }

    pub fn merge(&self, other: &CaseCoverage) -> CaseCoverage {
        let mut counts = self.counts.clone();
        for (&k, &n) in &other.counts {
            *counts.entry(k).or_default() += n;
        }
        Self::from_counts(counts)
    }
}

/// Count witnesses per case; vacuous when any case has none.
pub fn coverage_guard(results: &[DeviationCheckResult]) -> CaseCoverage {
    let mut counts: BTreeMap<CaseTag, u64> = CaseTag::ALL.iter().map(|&c| (c, 0)).collect();
    for r in results {
        *counts.entry(r.case).or_default() += 1;
    }
    CaseCoverage::from_counts(counts)
}

/// Falsifying evidence: a deviation strictly better than truthful bidding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub n: usize,
    /// Valuations and truthful bids; opposing bidders bid their values.
    pub instance: InstanceDoc,
    pub bidder: BidderId,
    pub value: Money,
    pub others: Vec<Money>,
    pub deviation_bid: Money,
    pub rule: PaymentRule,
    pub pairing: PairingKind,
    pub truthful_policy: String,
    pub deviation_policy: String,
    pub truthful_utility: SignedMoney,
    pub deviation_utility: SignedMoney,
    #[serde(skip)]
    pub pairing_index: usize,
}

/// Ordering key: (N, others' bids, v_i, deviation, bidder, pairing).
pub type CounterexampleKey = (usize, Vec<Money>, Money, Money, BidderId, usize);

impl Counterexample {
    pub fn key(&self) -> CounterexampleKey {
        (self.n, self.others.clone(), self.value, self.deviation_bid, self.bidder, self.pairing_index)
    }

    fn from_result(q: &TruthfulnessQuery, r: &DeviationCheckResult, rule: PaymentRule) -> Self {
        let bids = truthful_profile(q.value, &q.others, q.bidder).expect("query is well formed");
        let ticks: Vec<i64> = bids.bids().iter().map(|m| m.ticks() as i64).collect();
        Counterexample {
            n: q.n(),
            instance: InstanceDoc { valuations: ticks.clone(), bids: ticks },
            bidder: q.bidder,
            value: q.value,
            others: q.others.clone(),
            deviation_bid: r.deviation_bid,
            rule,
            pairing: r.pairing,
            truthful_policy: r.truthful_policy.clone(),
            deviation_policy: r.deviation_policy.clone(),
            truthful_utility: r.truthful_utility,
            deviation_utility: r.deviation_utility,
            pairing_index: r.pairing_index,
        }
    }
}

fn min_counterexample(a: Option<Counterexample>, b: Option<Counterexample>) -> Option<Counterexample> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.key() < x.key() { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// One bidder position, value and opposing-bid vector in a sweep.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruthfulnessQuery {
    pub bidder: BidderId,
    pub value: Money,
    pub others: Vec<Money>,
}

impl TruthfulnessQuery {
    pub fn n(&self) -> usize {
        self.others.len() + 1
    }

    /// Valuations with opposing bidders valuing the good at their bids.
    pub fn valuations(&self) -> Result<ValuationProfile> {
        ValuationProfile::new(truthful_profile(self.value, &self.others, self.bidder)?.bids().to_vec())
    }

    pub fn check(&self, opts: &CheckOptions) -> Result<Vec<DeviationCheckResult>> {
        check_truthfulness(&self.valuations()?, &self.others, self.bidder, opts)
    }
}

/// Bounds of an exhaustive sweep.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub n: usize,
    pub tick_bound: Money,
    /// Fix bidder `i`'s value; every value in `0..=tick_bound` otherwise.
    pub value: Option<Money>,
    /// Fix the deviating bidder; every position otherwise.
    pub bidder: Option<BidderId>,
    pub budget: u64,
    pub parallel: bool,
}

impl SweepSpec {
    pub fn new(n: usize, tick_bound: Money) -> SweepSpec {
        SweepSpec { n, tick_bound, value: None, bidder: None, budget: crate::DEFAULT_BUDGET, parallel: true }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewBidders(self.n));
        }
        if let Some(i) = self.bidder {
            if i.0 >= self.n {
                return Err(Error::BidderOutOfRange { index: i.0, n: self.n });
            }
        }
        Ok(())
    }

    /// Number of (deviation, pairing) evaluations, before filtering.
    pub fn required_evaluations(&self, opts: &CheckOptions) -> u128 {
        let ticks = u128::from(self.tick_bound.ticks()) + 1;
        let positions = if self.bidder.is_some() { 1 } else { self.n as u128 };
        let values = if self.value.is_some() { 1 } else { ticks };
        let deviations = match opts.deviations {
            DeviationMode::Grid { max } => u128::from(max.ticks()) + 1,
            DeviationMode::Critical => 3,
        };
        let others = (0..self.n - 1).try_fold(1u128, |acc, _| acc.checked_mul(ticks)).unwrap_or(u128::MAX);
        [positions, values, deviations, opts.pairings() as u128]
            .into_iter()
            .try_fold(others, |acc, k| acc.checked_mul(k))
            .unwrap_or(u128::MAX)
    }

    fn ensure_budget(&self, opts: &CheckOptions) -> Result<()> {
        let required = self.required_evaluations(opts);
        if required > u128::from(self.budget) {
            return Err(Error::BudgetExceeded { required, budget: self.budget });
        }
        Ok(())
    }

    /// Every query in the sweep, in increasing (others, value, bidder) order.
    pub fn queries(&self) -> Result<Vec<TruthfulnessQuery>> {
        self.validate()?;
        let top = self.tick_bound.ticks();
        let values: Vec<Money> = match self.value {
            Some(v) => vec![v],
            None => (0..=top).map(Money::new).collect::<Result<_>>()?,
        };
        let bidders: Vec<BidderId> = match self.bidder {
            Some(i) => vec![i],
            None => (0..self.n).map(BidderId).collect(),
        };
        let mut out = Vec::new();
        for others in opposing_profiles(self.n - 1, top)? {
            for &value in &values {
                for &bidder in &bidders {
                    out.push(TruthfulnessQuery { bidder, value, others: others.clone() });
                }
            }
        }
        Ok(out)
    }
}

/// All vectors in `{0..=top}^len`, lexicographically increasing.
fn opposing_profiles(len: usize, top: u64) -> Result<Vec<Vec<Money>>> {
    let mut out = vec![Vec::with_capacity(len)];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * (top as usize + 1));
        for prefix in &out {
            for t in 0..=top {
                let mut v: Vec<Money> = prefix.clone();
                v.push(Money::new(t)?);
                next.push(v);
            }
        }
        out = next;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Aggregated sweep statistics; merging is associative and commutative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub verdict: Verdict,
    pub evaluated_count: u64,
    pub passed_count: u64,
    pub failed_count: u64,
    pub case_assertion_failures: u64,
    pub case_counts: BTreeMap<CaseTag, u64>,
    pub vacuous: bool,
    pub counterexample: Option<Counterexample>,
}

impl SweepReport {
    fn empty() -> SweepReport {
        SweepReport::from_parts(0, 0, 0, coverage_guard(&[]), None)
    }

    fn from_parts(
        passed: u64,
        failed: u64,
        case_failures: u64,
        coverage: CaseCoverage,
        counterexample: Option<Counterexample>,
    ) -> SweepReport {
        SweepReport {
            verdict: if failed == 0 && case_failures == 0 { Verdict::Pass } else { Verdict::Fail },
            evaluated_count: passed + failed,
            passed_count: passed,
            failed_count: failed,
            case_assertion_failures: case_failures,
            case_counts: coverage.counts,
            vacuous: coverage.vacuous,
            counterexample,
        }
    }

    pub(crate) fn from_query(q: &TruthfulnessQuery, results: &[DeviationCheckResult], rule: PaymentRule) -> Self {
        let failed = results.iter().filter(|r| !r.pass).count() as u64;
        let case_failures = results.iter().filter(|r| assert_case(r).is_err()).count() as u64;
        let counterexample = results
            .iter()
            .filter(|r| !r.pass)
            .map(|r| Counterexample::from_result(q, r, rule))
            .min_by(|a, b| a.key().cmp(&b.key()));
        SweepReport::from_parts(
            results.len() as u64 - failed,
            failed,
            case_failures,
            coverage_guard(results),
            counterexample,
        )
    }

    pub fn coverage(&self) -> CaseCoverage {
        CaseCoverage::from_counts(self.case_counts.clone())
    }

    pub fn merge(self, other: SweepReport) -> SweepReport {
        SweepReport::from_parts(
            self.passed_count + other.passed_count,
            self.failed_count + other.failed_count,
            self.case_assertion_failures + other.case_assertion_failures,
            self.coverage().merge(&other.coverage()),
            min_counterexample(self.counterexample, other.counterexample),
        )
    }

    /// Pass verdict with every case witnessed.
    pub fn is_success(&self) -> bool {
        self.verdict == Verdict::Pass && !self.vacuous
    }
}

/// Run [`check_truthfulness`] over every query of `spec`.
pub fn sweep(spec: &SweepSpec, opts: &CheckOptions) -> Result<SweepReport> {
    spec.validate()?;
    spec.ensure_budget(opts)?;
    let queries = spec.queries()?;
    let one =
        |q: &TruthfulnessQuery| -> Result<SweepReport> { Ok(SweepReport::from_query(q, &q.check(opts)?, opts.rule)) };
    if spec.parallel {
        queries.par_iter().map(one).try_reduce(SweepReport::empty, |a, b| Ok(a.merge(b)))
    } else {
        queries.iter().map(one).try_fold(SweepReport::empty(), |acc, r| Ok(acc.merge(r?)))
    }
}

/// Sweep with bidder `i`'s value fixed at `value`.
pub fn check_dominance(
    value: Money,
    i: BidderId,
    n: usize,
    tick_bound: Money,
    opts: &CheckOptions,
    budget: u64,
) -> Result<SweepReport> {
    let spec = SweepSpec { value: Some(value), bidder: Some(i), budget, ..SweepSpec::new(n, tick_bound) };
    sweep(&spec, opts)
}

/// Lexicographically minimal counterexample for `N ∈ 2..=n_max`, if any.
pub fn find_counterexample(
    n_max: usize,
    tick_bound: Money,
    opts: &CheckOptions,
    budget: u64,
) -> Result<Option<Counterexample>> {
    Ok(falsify(n_max, tick_bound, opts, budget)?.counterexample)
}

/// Sweeps for `N ∈ 2..=n_max`, stopping at the first N with a counterexample.
///
/// N is the leading key component, so the first N that fails holds the
/// global minimum. The budget applies to the total evaluation count.
pub fn falsify(n_max: usize, tick_bound: Money, opts: &CheckOptions, budget: u64) -> Result<SweepReport> {
    if n_max < 2 {
        return Err(Error::TooFewBidders(n_max));
    }
    let total: u128 = (2..=n_max)
        .map(|n| SweepSpec::new(n, tick_bound).required_evaluations(&opts_for(opts, n)))
        .fold(0u128, |a, b| a.saturating_add(b));
    if total > u128::from(budget) {
        return Err(Error::BudgetExceeded { required: total, budget });
    }
    let mut report = SweepReport::empty();
    for n in 2..=n_max {
        let spec = SweepSpec { budget, ..SweepSpec::new(n, tick_bound) };
        report = report.merge(sweep(&spec, &opts_for(opts, n))?);
        if report.counterexample.is_some() {
            break;
        }
    }
    Ok(report)
}

/// Explicit policies are built per bidder count; rebuild median maps for `n`.
fn opts_for(opts: &CheckOptions, n: usize) -> CheckOptions {
    let mut o = opts.clone();
    for p in &mut o.policies {
        if let TieBreakPolicy::Explicit { name, .. } = p {
            if name == "explicit-median" {
                *p = TieBreakPolicy::explicit_median(n);
            }
        }
    }
    o
}

/// Minimal counterexample no larger than `cex`, by bounded re-enumeration.
///
/// Searches every N up to `cex.n` with ticks up to the largest tick appearing
/// in `cex`; `cex` itself lies in that space, so the result is never larger.
pub fn shrink(cex: &Counterexample, opts: &CheckOptions, budget: u64) -> Result<Counterexample> {
    let top = cex.others.iter().chain([&cex.value, &cex.deviation_bid]).copied().max().unwrap_or(Money::ZERO);
    let mut search = opts.clone();
    search.deviations = DeviationMode::Grid { max: top };
    search.rule = cex.rule;
    let found = find_counterexample(cex.n, top, &search, budget)?;
    Ok(min_counterexample(found, Some(cex.clone())).expect("cex is a candidate"))
}

/// Truthful bids allocate the good to a bidder of maximal value.
pub fn efficiency_check(v: &ValuationProfile, policy: &TieBreakPolicy) -> Result<bool> {
    let b = BidProfile::from(v);
    let w = select_winner(&b, policy)?;
    Ok(v.value(w)? == v.max_value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bids(t: &[u64]) -> BidProfile {
        BidProfile::from_ticks(t).unwrap()
    }

    fn m(t: u32) -> Money {
        Money::from(t)
    }

    fn opts(rule: PaymentRule, deviations: DeviationMode) -> CheckOptions {
        CheckOptions::standard(3, 0, rule, deviations)
    }

    #[test]
    fn deviation_profile_examples() {
        let b = bids(&[3, 5, 4]);
        assert_eq!(deviation_profile(&b, BidderId(1), m(2)).unwrap(), bids(&[3, 2, 4]));
        assert_eq!(deviation_profile(&b, BidderId(1), m(5)).unwrap(), b);
        assert_eq!(deviation_profile(&bids(&[7, 7]), BidderId(0), m(9)).unwrap(), bids(&[9, 7]));
        assert!(deviation_profile(&b, BidderId(3), m(1)).is_err());
    }

    #[test]
    fn classify_examples() {
        let first = TieBreakPolicy::FirstIndex;
        let b = bids(&[3, 5, 4]);
        assert_eq!(classify_case(&b, &bids(&[3, 2, 4]), BidderId(1), &first).unwrap(), CaseTag::WinLose);
        assert_eq!(classify_case(&b, &b, BidderId(1), &first).unwrap(), CaseTag::WinWin);
        assert_eq!(classify_case(&bids(&[3, 2, 4]), &bids(&[3, 9, 4]), BidderId(1), &first).unwrap(), CaseTag::LoseWin);
        assert_eq!(classify_case(&b, &bids(&[3, 5, 9]), BidderId(1), &first), Err(Error::ProfilesDifferElsewhere(2)));
    }

    fn result(case: CaseTag, t: i64, d: i64) -> DeviationCheckResult {
        DeviationCheckResult {
            bidder: BidderId(0),
            truthful_bid: m(0),
            deviation_bid: m(0),
            truthful_utility: SignedMoney::new(t),
            deviation_utility: SignedMoney::new(d),
            case,
            pass: t >= d,
            pairing: PairingKind::Same,
            pairing_index: 0,
            truthful_policy: "first-index".into(),
            deviation_policy: "first-index".into(),
        }
    }

    #[test]
    fn assert_case_examples() {
        // v_i = 6, M = 4, still winning.
        assert!(assert_case(&result(CaseTag::WinWin, 2, 2)).is_ok());
        // v_i = 2, M = 4, deviation 6 wins at price 4.
        assert!(assert_case(&result(CaseTag::LoseWin, 0, -2)).is_ok());
        // v_i = 5, M = 3, deviation 1 loses.
        assert!(assert_case(&result(CaseTag::WinLose, 2, 0)).is_ok());

        assert!(assert_case(&result(CaseTag::WinWin, 2, 1)).is_err());
        assert!(assert_case(&result(CaseTag::LoseLose, 0, 1)).is_err());
        assert!(assert_case(&result(CaseTag::LoseWin, 0, 1)).is_err());
        assert!(assert_case(&result(CaseTag::WinLose, -1, 0)).is_err());
        assert!(assert_case(&result(CaseTag::WinLose, 1, 1)).is_err());
    }

    #[test]
    fn critical_deviation_examples() {
        // M = 4
        let set = critical_deviations(&bids(&[9, 4, 1]), BidderId(0)).unwrap();
        assert_eq!(set.into_iter().collect::<Vec<_>>(), vec![m(0), m(4), m(5)]);
        // M = 0
        let set = critical_deviations(&bids(&[3, 0]), BidderId(0)).unwrap();
        assert_eq!(set.into_iter().collect::<Vec<_>>(), vec![m(0), m(1)]);
        let set = critical_deviations(&BidProfile::new(vec![m(0), Money::MAX]).unwrap(), BidderId(0)).unwrap();
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn check_truthfulness_examples() {
        let o = opts(PaymentRule::SecondPrice, DeviationMode::Grid { max: m(6) });
        let v = ValuationProfile::from_ticks(&[5, 3, 1]).unwrap();
        let rs = check_truthfulness(&v, &[m(3), m(1)], BidderId(0), &o).unwrap();
        let at_zero = rs.iter().find(|r| r.deviation_bid == m(0)).unwrap();
        assert_eq!((at_zero.truthful_utility, at_zero.deviation_utility), (SignedMoney::new(2), SignedMoney::ZERO));
        assert!(rs.iter().all(|r| r.pass));

        let v = ValuationProfile::from_ticks(&[2, 4, 1]).unwrap();
        let rs = check_truthfulness(&v, &[m(4), m(1)], BidderId(0), &o).unwrap();
        let at_six = rs.iter().find(|r| r.deviation_bid == m(6)).unwrap();
        assert_eq!((at_six.truthful_utility, at_six.deviation_utility), (SignedMoney::ZERO, SignedMoney::new(-2)));
        assert_eq!(at_six.case, CaseTag::LoseWin);
        assert!(rs.iter().all(|r| r.pass));
        // 7 deviations × (4 policies + adversarial)
        assert_eq!(rs.len(), 35);
    }

    #[test]
    fn check_truthfulness_rejects_bad_shapes() {
        let o = opts(PaymentRule::SecondPrice, DeviationMode::Critical);
        let v = ValuationProfile::from_ticks(&[2, 4, 1]).unwrap();
        assert!(check_truthfulness(&v, &[m(4)], BidderId(0), &o).is_err());
        assert!(check_truthfulness(&v, &[m(4), m(1)], BidderId(3), &o).is_err());
        let none = CheckOptions { policies: vec![], ..o };
        assert_eq!(check_truthfulness(&v, &[m(4), m(1)], BidderId(0), &none), Err(Error::NoPolicies));
    }

    #[test]
    fn adversarial_pairing_picks_extremes() {
        // Tie at 3: first-index lets bidder 0 win with utility 0, last-index makes it lose.
        let o = CheckOptions {
            policies: vec![TieBreakPolicy::FirstIndex, TieBreakPolicy::LastIndex],
            adversarial: true,
            rule: PaymentRule::FirstPrice,
            deviations: DeviationMode::Grid { max: m(3) },
            only_winning_deviations: false,
        };
        let v = ValuationProfile::from_ticks(&[5, 3]).unwrap();
        let rs = check_truthfulness(&v, &[m(3)], BidderId(0), &o).unwrap();
        let adv: Vec<_> = rs.iter().filter(|r| r.pairing == PairingKind::Adversarial).collect();
        assert_eq!(adv.len(), 4);
        // Truthful bid 5 wins outright under both policies: utility 0.
        // Deviation 3 ties; first-index awards it at price 3 for utility 2.
        let at_three = adv.iter().find(|r| r.deviation_bid == m(3)).unwrap();
        assert_eq!(at_three.deviation_policy, "first-index");
        assert_eq!(at_three.deviation_utility, SignedMoney::new(2));
        assert!(!at_three.pass);
    }

    #[test]
    fn coverage_examples() {
        let c = coverage_guard(&[]);
        assert!(c.vacuous);
        assert!(CaseTag::ALL.iter().all(|&t| c.count(t) == 0));

        let spec = SweepSpec::new(2, m(4));
        let o = CheckOptions::standard(2, 0, PaymentRule::SecondPrice, DeviationMode::Grid { max: m(4) });
        let r = sweep(&spec, &o).unwrap();
        assert!(!r.vacuous);

        let winning = CheckOptions { only_winning_deviations: true, ..o };
        let r = sweep(&spec, &winning).unwrap();
        assert_eq!(r.case_counts[&CaseTag::LoseLose], 0);
        assert!(r.vacuous);
    }

    #[test]
    fn dominance_examples() {
        let sp = CheckOptions::standard(2, 0, PaymentRule::SecondPrice, DeviationMode::Grid { max: m(4) });
        let fp = CheckOptions { rule: PaymentRule::FirstPrice, ..sp.clone() };
        let spec = SweepSpec::new(2, m(4));
        let r = sweep(&spec, &sp).unwrap();
        assert!(r.is_success());
        let r = sweep(&spec, &fp).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.counterexample.is_some());

        let zero = CheckOptions::standard(2, 0, PaymentRule::SecondPrice, DeviationMode::Grid { max: m(0) });
        let r = check_dominance(m(0), BidderId(0), 2, m(0), &zero, crate::DEFAULT_BUDGET).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.vacuous);
        assert_eq!(r.case_counts[&CaseTag::LoseWin], 0);
    }

    #[test]
    fn budget_is_enforced() {
        let o = CheckOptions::standard(4, 0, PaymentRule::SecondPrice, DeviationMode::Grid { max: m(9) });
        let spec = SweepSpec { budget: 1000, ..SweepSpec::new(4, m(9)) };
        assert!(matches!(sweep(&spec, &o), Err(Error::BudgetExceeded { .. })));
        assert!(matches!(find_counterexample(3, m(9), &o, 1000), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn first_price_minimal_counterexample() {
        let o = CheckOptions::standard(2, 0, PaymentRule::FirstPrice, DeviationMode::Grid { max: m(4) });
        let cex = find_counterexample(2, m(4), &o, crate::DEFAULT_BUDGET).unwrap().unwrap();
        assert_eq!(cex.key(), (2, vec![m(0)], m(1), m(0), BidderId(0), 0));
        assert_eq!((cex.truthful_utility, cex.deviation_utility), (SignedMoney::ZERO, SignedMoney::new(1)));
        assert_eq!(cex.instance, InstanceDoc { valuations: vec![1, 0], bids: vec![1, 0] });
    }

    #[test]
    fn shrink_finds_smaller_witness() {
        let o = CheckOptions::standard(3, 0, PaymentRule::FirstPrice, DeviationMode::Grid { max: m(6) });
        let v = ValuationProfile::from_ticks(&[6, 2, 3]).unwrap();
        let rs = check_truthfulness(&v, &[m(2), m(3)], BidderId(0), &o).unwrap();
        let bad = rs.iter().find(|r| !r.pass).unwrap();
        let q = TruthfulnessQuery { bidder: BidderId(0), value: m(6), others: vec![m(2), m(3)] };
        let big = Counterexample::from_result(&q, bad, PaymentRule::FirstPrice);
        let small = shrink(&big, &o, crate::DEFAULT_BUDGET).unwrap();
        assert!(small.key() < big.key());
        assert_eq!(small.key(), (2, vec![m(0)], m(1), m(0), BidderId(0), 0));
    }

    #[test]
    fn efficiency_examples() {
        let v = ValuationProfile::from_ticks(&[3, 6, 4]).unwrap();
        assert!(efficiency_check(&v, &TieBreakPolicy::FirstIndex).unwrap());
        let tie = ValuationProfile::from_ticks(&[5, 5]).unwrap();
        for p in standard_policies(2, 9) {
            assert!(efficiency_check(&tie, &p).unwrap());
        }
    }
}
