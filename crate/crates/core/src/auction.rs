//! Exact-arithmetic sealed-bid auction primitives.
//!
//! Money is measured in nonnegative integer ticks. Winner selection is
//! constrained to the argmax set of the bid profile; which member of that set
//! wins is delegated to a [`TieBreakPolicy`]. The winner pays according to a
//! [`PaymentRule`] and every loser's utility is zero.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A nonnegative amount of money in ticks.
///
/// Ticks are capped at `i64::MAX` so that the difference of any two amounts
/// is exactly representable as a [`SignedMoney`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Money(u64);

impl Money {
    pub const ZERO: Money = Money(0);
    pub const MAX: Money = Money(i64::MAX as u64);

    pub fn new(ticks: u64) -> Result<Money> {
        if ticks > Self::MAX.0 {
            return Err(Error::TickOverflow(u128::from(ticks)));
        }
        Ok(Money(ticks))
    }

    pub const fn ticks(self) -> u64 {
        self.0
    }

    pub fn checked_add(self, rhs: Money) -> Option<Money> {
        self.0.checked_add(rhs.0).and_then(|t| Money::new(t).ok())
    }

    pub fn checked_mul(self, k: u64) -> Option<Money> {
        self.0.checked_mul(k).and_then(|t| Money::new(t).ok())
    }

    /// `self + 1`, or `None` at [`Money::MAX`].
    pub fn succ(self) -> Option<Money> {
        self.checked_add(Money(1))
    }
}

impl TryFrom<u64> for Money {
    type Error = Error;

    fn try_from(ticks: u64) -> Result<Money> {
        Money::new(ticks)
    }
}

impl From<Money> for u64 {
    fn from(m: Money) -> u64 {
        m.0
    }
}

impl From<u32> for Money {
    fn from(ticks: u32) -> Money {
        Money(u64::from(ticks))
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Sub for Money {
    type Output = SignedMoney;

    fn sub(self, rhs: Money) -> SignedMoney {
        // Both operands are at most i64::MAX, so the difference cannot overflow.
        SignedMoney(self.0 as i64 - rhs.0 as i64)
    }
}

/// A signed amount of money in ticks; utilities live here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignedMoney(i64);

impl SignedMoney {
    pub const ZERO: SignedMoney = SignedMoney(0);

    pub const fn new(ticks: i64) -> SignedMoney {
        SignedMoney(ticks)
    }

    pub const fn ticks(self) -> i64 {
        self.0
    }

    pub fn checked_add(self, rhs: SignedMoney) -> Option<SignedMoney> {
        self.0.checked_add(rhs.0).map(SignedMoney)
    }

    pub fn checked_sub(self, rhs: SignedMoney) -> Option<SignedMoney> {
        self.0.checked_sub(rhs.0).map(SignedMoney)
    }
}

impl From<Money> for SignedMoney {
    fn from(m: Money) -> SignedMoney {
        SignedMoney(m.0 as i64)
    }
}

impl Add for SignedMoney {
    type Output = SignedMoney;

    fn add(self, rhs: SignedMoney) -> SignedMoney {
        SignedMoney(self.0 + rhs.0)
    }
}

impl Sub for SignedMoney {
    type Output = SignedMoney;

    fn sub(self, rhs: SignedMoney) -> SignedMoney {
        SignedMoney(self.0 - rhs.0)
    }
}

impl Neg for SignedMoney {
    type Output = SignedMoney;

    fn neg(self) -> SignedMoney {
        SignedMoney(-self.0)
    }
}

impl std::iter::Sum for SignedMoney {
    fn sum<I: Iterator<Item = SignedMoney>>(iter: I) -> SignedMoney {
        iter.fold(SignedMoney::ZERO, Add::add)
    }
}

impl fmt::Display for SignedMoney {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of a bidder within a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BidderId(pub usize);

impl BidderId {
    pub const fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for BidderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_len(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewBidders(n));
    }
    Ok(())
}

fn ticks_to_money(ticks: &[u64]) -> Result<Vec<Money>> {
    ticks.iter().map(|&t| Money::new(t)).collect()
}

/// Every bidder's private value for the good.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct ValuationProfile(Vec<Money>);

impl ValuationProfile {
    pub fn new(values: Vec<Money>) -> Result<Self> {
        check_len(values.len())?;
        Ok(ValuationProfile(values))
    }

    pub fn from_ticks(ticks: &[u64]) -> Result<Self> {
        Self::new(ticks_to_money(ticks)?)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[Money] {
        &self.0
    }

    pub fn value(&self, i: BidderId) -> Result<Money> {
        self.0.get(i.0).copied().ok_or(Error::BidderOutOfRange { index: i.0, n: self.0.len() })
    }

    pub fn max_value(&self) -> Money {
        self.0.iter().copied().max().unwrap_or(Money::ZERO)
    }
}

/// Every bidder's submitted bid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct BidProfile(Vec<Money>);

impl BidProfile {
    pub fn new(bids: Vec<Money>) -> Result<Self> {
        check_len(bids.len())?;
        Ok(BidProfile(bids))
    }

    pub fn from_ticks(ticks: &[u64]) -> Result<Self> {
        Self::new(ticks_to_money(ticks)?)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bids(&self) -> &[Money] {
        &self.0
    }

    pub fn bid(&self, i: BidderId) -> Result<Money> {
        self.0.get(i.0).copied().ok_or(Error::BidderOutOfRange { index: i.0, n: self.0.len() })
    }

    /// Comma-joined decimal ticks, e.g. `3,5,4`. Keys the seeded tie-break.
    pub fn canonical(&self) -> String {
        self.0.iter().map(|m| m.0.to_string()).collect::<Vec<_>>().join(",")
    }

    pub(crate) fn with_bid(&self, i: BidderId, bid: Money) -> Result<BidProfile> {
        if i.0 >= self.0.len() {
            return Err(Error::BidderOutOfRange { index: i.0, n: self.0.len() });
        }
        let mut bids = self.0.clone();
        bids[i.0] = bid;
        Ok(BidProfile(bids))
    }
}

impl From<&ValuationProfile> for BidProfile {
    fn from(v: &ValuationProfile) -> BidProfile {
        BidProfile(v.0.clone())
    }
}

/// Valuations and bids for the same set of bidders.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AuctionInstance {
    pub valuations: ValuationProfile,
    pub bids: BidProfile,
}

impl AuctionInstance {
    pub fn new(valuations: ValuationProfile, bids: BidProfile) -> Result<Self> {
        if valuations.len() != bids.len() {
            return Err(Error::LengthMismatch { expected: valuations.len(), actual: bids.len() });
        }
        Ok(AuctionInstance { valuations, bids })
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }

    pub fn to_doc(&self) -> InstanceDoc {
        let signed = |ms: &[Money]| ms.iter().map(|m| m.0 as i64).collect();
        InstanceDoc { valuations: signed(self.valuations.values()), bids: signed(self.bids.bids()) }
    }
}

/// Unvalidated instance document: `{"valuations":[..],"bids":[..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub valuations: Vec<i64>,
    pub bids: Vec<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Valuations,
    Bids,
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileKind::Valuations => "valuations",
            ProfileKind::Bids => "bids",
        })
    }
}

/// One broken validity rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Violation {
    TooFewBidders { valuations: usize, bids: usize },
    LengthMismatch { valuations: usize, bids: usize },
    NegativeTick { profile: ProfileKind, index: usize, value: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewBidders { valuations, bids } => {
                write!(f, "N ≥ 2 required ({valuations} valuation(s), {bids} bid(s))")
            }
            Violation::LengthMismatch { valuations, bids } => {
                write!(f, "length mismatch: {valuations} valuation(s) vs {bids} bid(s)")
            }
            Violation::NegativeTick { profile, index, value } => {
                write!(f, "negative tick: {profile}[{index}] = {value}")
            }
        }
    }
}

impl InstanceDoc {
    /// Every violated rule, in a fixed order: size, shape, then entries.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let (nv, nb) = (self.valuations.len(), self.bids.len());
        if nv.min(nb) < 2 {
            out.push(Violation::TooFewBidders { valuations: nv, bids: nb });
        }
        if nv != nb {
            out.push(Violation::LengthMismatch { valuations: nv, bids: nb });
        }
        for (profile, entries) in [(ProfileKind::Valuations, &self.valuations), (ProfileKind::Bids, &self.bids)] {
            for (index, &value) in entries.iter().enumerate() {
                if value < 0 {
                    out.push(Violation::NegativeTick { profile, index, value });
                }
            }
        }
        out
    }
}

/// Gatekeeper for instance documents; reports every violated rule at once.
pub fn validate(doc: &InstanceDoc) -> std::result::Result<AuctionInstance, Vec<Violation>> {
    let violations = doc.violations();
    if !violations.is_empty() {
        return Err(violations);
    }
    // Nonnegative i64 values are always representable ticks.
    let to_money = |xs: &[i64]| xs.iter().map(|&x| Money(x as u64)).collect::<Vec<_>>();
    Ok(AuctionInstance {
        valuations: ValuationProfile(to_money(&doc.valuations)),
        bids: BidProfile(to_money(&doc.bids)),
    })
}

/// How the winner is picked from the argmax set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TieBreakPolicy {
    FirstIndex,
    LastIndex,
    /// Deterministic pseudo-random member, keyed by seed and canonical bids.
    Seeded(u64),
    Explicit {
        name: String,
        choices: BTreeMap<Vec<BidderId>, BidderId>,
    },
}

impl TieBreakPolicy {
    /// Explicit policy over every nonempty subset of `0..n`, choosing with `choose`.
    pub fn explicit_from_fn(
        name: impl Into<String>,
        n: usize,
        choose: impl Fn(&[BidderId]) -> BidderId,
    ) -> TieBreakPolicy {
        assert!(n < usize::BITS as usize, "too many bidders for subset enumeration");
        let mut choices = BTreeMap::new();
        for mask in 1usize..(1 << n) {
            let set: Vec<BidderId> = (0..n).filter(|k| mask >> k & 1 == 1).map(BidderId).collect();
            let pick = choose(&set);
            choices.insert(set, pick);
        }
        TieBreakPolicy::Explicit { name: name.into(), choices }
    }

    /// Explicit policy picking the lower median of each argmax set.
    pub fn explicit_median(n: usize) -> TieBreakPolicy {
        Self::explicit_from_fn("explicit-median", n, |set| set[(set.len() - 1) / 2])
    }

    pub fn label(&self) -> String {
        match self {
            TieBreakPolicy::FirstIndex => "first-index".into(),
            TieBreakPolicy::LastIndex => "last-index".into(),
            TieBreakPolicy::Seeded(seed) => format!("seeded({seed})"),
            TieBreakPolicy::Explicit { name, .. } => name.clone(),
        }
    }
}

impl fmt::Display for TieBreakPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Serializable name of a tie-break policy: `first-index`, `last-index`,
/// `seeded`, `seeded:<u64>` or `explicit-median`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicySpec {
    FirstIndex,
    LastIndex,
    /// `None` takes the seed supplied at build time.
    Seeded(Option<u64>),
    ExplicitMedian,
}

impl PolicySpec {
    pub fn build(self, n: usize, default_seed: u64) -> TieBreakPolicy {
        match self {
            PolicySpec::FirstIndex => TieBreakPolicy::FirstIndex,
            PolicySpec::LastIndex => TieBreakPolicy::LastIndex,
            PolicySpec::Seeded(seed) => TieBreakPolicy::Seeded(seed.unwrap_or(default_seed)),
            PolicySpec::ExplicitMedian => TieBreakPolicy::explicit_median(n),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "first-index" => Ok(PolicySpec::FirstIndex),
            "last-index" => Ok(PolicySpec::LastIndex),
            "seeded" => Ok(PolicySpec::Seeded(None)),
            "explicit-median" | "explicit" => Ok(PolicySpec::ExplicitMedian),
            other => match other.strip_prefix("seeded:") {
                Some(seed) => seed
                    .parse()
                    .map(|s| PolicySpec::Seeded(Some(s)))
                    .map_err(|e| format!("bad seed in `{other}`: {e}")),
                None => Err(format!(
                    "unknown tie-break policy `{other}` (expected first-index, last-index, seeded[:<u64>] or explicit-median)"
                )),
            },
        }
    }
}

impl TryFrom<String> for PolicySpec {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<PolicySpec> for String {
    fn from(p: PolicySpec) -> String {
        match p {
            PolicySpec::FirstIndex => "first-index".into(),
            PolicySpec::LastIndex => "last-index".into(),
            PolicySpec::Seeded(None) => "seeded".into(),
            PolicySpec::Seeded(Some(s)) => format!("seeded:{s}"),
            PolicySpec::ExplicitMedian => "explicit-median".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaymentRule {
    /// Winner pays the highest bid among the other bidders.
    SecondPrice,
    /// Winner pays its own bid.
    FirstPrice,
}

impl fmt::Display for PaymentRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PaymentRule::SecondPrice => "second-price",
            PaymentRule::FirstPrice => "first-price",
        })
    }
}

impl FromStr for PaymentRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "second-price" => Ok(PaymentRule::SecondPrice),
            "first-price" => Ok(PaymentRule::FirstPrice),
            other => Err(format!("unknown payment rule `{other}` (expected second-price or first-price)")),
        }
    }
}

/// Result of one auction evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Outcome {
    pub winner: BidderId,
    pub price: Money,
    pub rule: PaymentRule,
}

pub fn max_bid(b: &BidProfile) -> Money {
    b.0.iter().copied().max().unwrap_or(Money::ZERO)
}

/// Indices attaining the maximum bid, in increasing order.
pub fn argmax_set(b: &BidProfile) -> Vec<BidderId> {
    let top = max_bid(b);
    b.0.iter().enumerate().filter(|(_, &x)| x == top).map(|(i, _)| BidderId(i)).collect()
}

/// Highest bid among everyone except `i`.
pub fn max_excluding(b: &BidProfile, i: BidderId) -> Result<Money> {
    check_len(b.len())?;
    if i.0 >= b.len() {
        return Err(Error::BidderOutOfRange { index: i.0, n: b.len() });
    }
    Ok(b.0
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i.0)
        .map(|(_, &x)| x)
        .max()
        .expect("N ≥ 2 leaves at least one other bidder"))
}

pub fn select_winner(b: &BidProfile, policy: &TieBreakPolicy) -> Result<BidderId> {
    check_len(b.len())?;
    let set = argmax_set(b);
    let winner = match policy {
        TieBreakPolicy::FirstIndex => set[0],
        TieBreakPolicy::LastIndex => set[set.len() - 1],
        TieBreakPolicy::Seeded(seed) => {
            if set.len() == 1 {
                set[0]
            } else {
                let key = rng::fnv1a64(b.canonical().as_bytes());
                let k = rng::uniform_inclusive(*seed, &[key], 0, set.len() as u64 - 1);
                set[k as usize]
            }
        }
        TieBreakPolicy::Explicit { choices, .. } => {
            let choice = *choices.get(&set).ok_or_else(|| Error::MissingTieBreak(set.iter().map(|i| i.0).collect()))?;
            if !set.contains(&choice) {
                return Err(Error::ChoiceOutsideArgmax { choice: choice.0, set: set.iter().map(|i| i.0).collect() });
            }
            choice
        }
    };
    Ok(winner)
}

pub fn outcome(b: &BidProfile, policy: &TieBreakPolicy, rule: PaymentRule) -> Result<Outcome> {
    let winner = select_winner(b, policy)?;
    let price = match rule {
        PaymentRule::SecondPrice => max_excluding(b, winner)?,
        PaymentRule::FirstPrice => b.0[winner.0],
    };
    Ok(Outcome { winner, price, rule })
}

/// Zero for losers; value minus price for the winner.
pub fn bidder_utility(v: &ValuationProfile, o: &Outcome, i: BidderId) -> Result<SignedMoney> {
    let value = v.value(i)?;
    if i != o.winner {
        return Ok(SignedMoney::ZERO);
    }
    Ok(value - o.price)
}

/// Sum of all bidders' utilities; equal to the winner's utility.
pub fn profile_utility(v: &ValuationProfile, o: &Outcome) -> Result<SignedMoney> {
    (0..v.len()).map(|i| bidder_utility(v, o, BidderId(i))).sum()
}
