//! Independent brute-force oracles for the enumeration-derived expectations.
//!
//! Each oracle recomputes winners, prices and utilities with plain loops
//! instead of going through the verify module.

use vickrey::simulate::{self, ExperimentConfig, Strategy};
use vickrey::verify::{self, check_truthfulness, efficiency_check, CheckOptions, DeviationMode, SweepSpec, Verdict};
use vickrey::{BidderId, Money, PaymentRule, PolicySpec, TieBreakPolicy, ValuationProfile};

fn m(t: u64) -> Money {
    Money::new(t).unwrap()
}

#[derive(Clone, Copy)]
enum Pick {
    First,
    Last,
}

fn naive_winner(bids: &[u64], pick: Pick) -> usize {
    let top = *bids.iter().max().unwrap();
    let tied: Vec<usize> = (0..bids.len()).filter(|&k| bids[k] == top).collect();
    match pick {
        Pick::First => tied[0],
        Pick::Last => *tied.last().unwrap(),
    }
}

fn naive_utility(value: u64, bids: &[u64], i: usize, pick: Pick, rule: PaymentRule) -> i64 {
    if naive_winner(bids, pick) != i {
        return 0;
    }
    let price = match rule {
        PaymentRule::FirstPrice => bids[i],
        PaymentRule::SecondPrice => (0..bids.len()).filter(|&j| j != i).map(|j| bids[j]).max().unwrap(),
    };
    value as i64 - price as i64
}

fn product(len: usize, top: u64) -> Vec<Vec<u64>> {
    (0..len).fold(vec![vec![]], |acc, _| {
        acc.into_iter()
            .flat_map(|p| {
                (0..=top).map(move |t| {
                    let mut q = p.clone();
                    q.push(t);
                    q
                })
            })
            .collect()
    })
}

/// `(N, others, v_i, deviation, bidder, pairing, truthful utility, deviation utility)`
type Failure = (usize, Vec<u64>, u64, u64, usize, usize, i64, i64);

/// Failing tuples, sorted.
fn naive_failures(rule: PaymentRule, n_max: usize, top: u64) -> Vec<Failure> {
    let mut out = Vec::new();
    for n in 2..=n_max {
        for others in product(n - 1, top) {
            for v in 0..=top {
                for d in 0..=top {
                    for i in 0..n {
                        for (k, pick) in [Pick::First, Pick::Last].into_iter().enumerate() {
                            let mut b = others.clone();
                            b.insert(i, v);
                            let mut b2 = b.clone();
                            b2[i] = d;
                            let t = naive_utility(v, &b, i, pick, rule);
                            let dv = naive_utility(v, &b2, i, pick, rule);
                            if dv > t {
                                out.push((n, others.clone(), v, d, i, k, t, dv));
                            }
                        }
                    }
                }
            }
        }
    }
    out.sort();
    out
}

fn first_last(rule: PaymentRule, deviations: DeviationMode) -> CheckOptions {
    CheckOptions {
        policies: vec![TieBreakPolicy::FirstIndex, TieBreakPolicy::LastIndex],
        adversarial: false,
        rule,
        deviations,
        only_winning_deviations: false,
    }
}

#[test]
fn frozen_first_price_witness_matches_oracle() {
    // Frozen from the brute-force enumeration: N=2, others=[0], v_i=1,
    // deviation 0, bidder 0, first-index; utilities 0 vs 1.
    let oracle = naive_failures(PaymentRule::FirstPrice, 2, 4);
    assert_eq!(oracle.len(), 60);
    assert_eq!(oracle[0], (2, vec![0], 1, 0, 0, 0, 0, 1));

    let opts = first_last(PaymentRule::FirstPrice, DeviationMode::Grid { max: m(4) });
    let cex = verify::find_counterexample(2, m(4), &opts, vickrey::DEFAULT_BUDGET).unwrap().unwrap();
    let (n, others, v, d, i, k, t, dv) = oracle[0].clone();
    assert_eq!(cex.key(), (n, others.into_iter().map(m).collect(), m(v), m(d), BidderId(i), k));
    assert_eq!((cex.truthful_utility.ticks(), cex.deviation_utility.ticks()), (t, dv));
    assert_eq!(cex.truthful_policy, "first-index");
}

#[test]
fn naive_failure_count_matches_sweep() {
    let opts = first_last(PaymentRule::FirstPrice, DeviationMode::Grid { max: m(4) });
    for n in [2, 3] {
        let all = naive_failures(PaymentRule::FirstPrice, n, 4);
        let expected = all.iter().filter(|f| f.0 == n).count() as u64;
        let report = verify::sweep(&SweepSpec::new(n, m(4)), &opts).unwrap();
        assert_eq!(report.failed_count, expected, "N = {n}");
    }
}

#[test]
fn second_price_has_no_naive_failures() {
    assert!(naive_failures(PaymentRule::SecondPrice, 3, 4).is_empty());
    let opts = CheckOptions::standard(3, 0, PaymentRule::SecondPrice, DeviationMode::Grid { max: m(4) });
    assert_eq!(verify::find_counterexample(3, m(4), &opts, vickrey::DEFAULT_BUDGET).unwrap(), None);
}

#[test]
fn exhaustive_two_bidders_all_policies_pass() {
    let opts = CheckOptions::standard(2, 0, PaymentRule::SecondPrice, DeviationMode::Grid { max: m(4) });
    let report = verify::sweep(&SweepSpec::new(2, m(4)), &opts).unwrap();
    assert_eq!(report.verdict, Verdict::Pass);
    assert_eq!(report.failed_count, 0);
    // 2 positions × 5 values × 5 others × 5 deviations × 5 pairings
    assert_eq!(report.evaluated_count, 1250);
    assert!(!report.vacuous);
}

#[test]
fn critical_set_matches_grid_up_to_nine() {
    for rule in [PaymentRule::SecondPrice, PaymentRule::FirstPrice] {
        for n in [2, 3] {
            let grid = CheckOptions::standard(n, 5, rule, DeviationMode::Grid { max: m(9) });
            let critical = CheckOptions { deviations: DeviationMode::Critical, ..grid.clone() };
            for q in SweepSpec::new(n, m(9)).queries().unwrap() {
                let full = q.check(&grid).unwrap().iter().all(|r| r.pass);
                let reduced = q.check(&critical).unwrap().iter().all(|r| r.pass);
                assert_eq!(full, reduced, "{rule} {q:?}");
            }
        }
    }
}

#[test]
fn efficiency_over_small_cube() {
    for v in product(3, 4) {
        let v = ValuationProfile::from_ticks(&v).unwrap();
        for p in verify::standard_policies(3, 17) {
            assert!(efficiency_check(&v, &p).unwrap(), "{v:?} {p}");
        }
    }
}

fn sim_config(n: usize, high: u64, rounds: u64, strategy: Strategy, rule: PaymentRule) -> ExperimentConfig {
    ExperimentConfig {
        n_bidders: n,
        n_rounds: rounds,
        value_low: m(0),
        value_high: m(high),
        rule,
        strategy,
        policy: PolicySpec::FirstIndex,
        seed: 2024,
    }
}

#[test]
fn sampled_ticks_are_near_uniform() {
    let c = sim_config(2, 4, 10_000, Strategy::Truthful, PaymentRule::SecondPrice);
    let mut counts = [0u64; 5];
    let mut total = 0u64;
    for r in 0..c.n_rounds {
        for v in simulate::sample_valuations(&c, r).unwrap().values() {
            counts[v.ticks() as usize] += 1;
            total += 1;
        }
    }
    for (tick, &k) in counts.iter().enumerate() {
        let freq = k as f64 / total as f64;
        assert!((freq - 0.2).abs() <= 0.2 * 0.05, "tick {tick}: {freq}");
    }
}

#[test]
fn truthful_second_price_revenue_is_mean_second_highest_value() {
    let c = sim_config(3, 9, 2_000, Strategy::Truthful, PaymentRule::SecondPrice);
    let report = simulate::run_experiment(&c).unwrap();
    let mut sum: i128 = 0;
    for r in 0..c.n_rounds {
        let mut v: Vec<u64> = simulate::sample_valuations(&c, r).unwrap().values().iter().map(|x| x.ticks()).collect();
        v.sort_unstable();
        sum += i128::from(v[v.len() - 2]);
    }
    assert_eq!(report.mean_revenue, simulate::Exact::new(sum, 2_000));
}

#[test]
fn shading_lowers_mean_revenue() {
    let truthful = sim_config(3, 9, 10_000, Strategy::Truthful, PaymentRule::SecondPrice);
    let shaded = ExperimentConfig { strategy: Strategy::Shade { numerator: 1, denominator: 2 }, ..truthful.clone() };
    let a = simulate::run_experiment(&truthful).unwrap();
    let b = simulate::run_experiment(&shaded).unwrap();
    assert!(a.mean_revenue > b.mean_revenue);
}

#[test]
fn truthfulness_examples_from_check() {
    let opts = CheckOptions::standard(3, 0, PaymentRule::SecondPrice, DeviationMode::Critical);
    let v = ValuationProfile::from_ticks(&[5, 3, 1]).unwrap();
    assert!(check_truthfulness(&v, &[m(3), m(1)], BidderId(0), &opts).unwrap().iter().all(|r| r.pass));
}
