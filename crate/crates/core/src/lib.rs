//! Executable model of sealed-bid auctions.
//!
//! The crate is split into four layers:
//!
//! - [`auction`]: exact tick arithmetic, bid/valuation profiles, winner
//!   selection under argmax-respecting tie-break policies, payment rules and
//!   utilities.
//! - [`verify`]: bounded-exhaustive checking that truthful bidding is weakly
//!   dominant under the second-price rule, with four-way case classification,
//!   vacuity detection and lexicographically minimal counterexamples.
//! - [`simulate`]: seeded Monte Carlo experiments comparing payment rules and
//!   bidding strategies with exact rational statistics.
//! - [`cli`]: the `vickrey` command-line front end.

pub mod auction;
pub mod cli;
pub mod error;
pub mod report;
pub mod rng;
pub mod simulate;
pub mod verify;

pub use auction::{
    argmax_set, bidder_utility, max_bid, max_excluding, outcome, profile_utility, select_winner, validate,
    AuctionInstance, BidProfile, BidderId, InstanceDoc, Money, Outcome, PaymentRule, PolicySpec, SignedMoney,
    TieBreakPolicy, ValuationProfile, Violation,
};
pub use error::{Error, Result};

/// Default cap on the number of evaluated tuples (or simulated bidder-rounds).
pub const DEFAULT_BUDGET: u64 = 10_000_000;
