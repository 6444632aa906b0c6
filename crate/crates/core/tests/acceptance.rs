//! Release gate. Each test prints exactly one verdict line of the form
//! `A<k> [PASS|FAIL] <measurements>` and then asserts it. Tolerances are
//! collected below so the bar is visible in one place.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use discount_auctions::dist::ValuationDistribution;
use discount_auctions::equivalence::{run_additive_trials, run_multiplicative_trials};
use discount_auctions::estimation::{run_estimation, BidRecord, BidderClass, EstimationConfig};
use discount_auctions::outcomes::{
    evaluate_outcomes, sweep, OutcomeConfig, OutcomeMethod, SweepRow,
};
use discount_auctions::solver::{solve, SolverConfig, TabulatedBidFunction};

// A1: symmetric uniform oracle.
const A1_BSTAR_TOLERANCE: f64 = 1e-3;
const A1_CURVE_TOLERANCE: f64 = 5e-3;
const A1_RUNTIME_LIMIT_SECS: f64 = 10.0;

// A2: compensating-discount oracle.
const A2_CURVE_TOLERANCE: f64 = 1e-2;
const A2_BSTAR_TOLERANCE: f64 = 2e-3;

// A3: discount-regime equivalences.
const A3_TRIALS: u64 = 100_000;
const A3_MULTIPLICATIVE_TOLERANCE: f64 = 1e-12;
const A3_MIN_TIES: u64 = 100;
const A3_RUNTIME_LIMIT_SECS: f64 = 5.0;

// A4: best-response audit, as a fraction of the bid range.
const A4_GAP_TOLERANCE: f64 = 1e-3;

// A5: accounting identities on sweep rows.
const A5_IDENTITY_TOLERANCE: f64 = 1e-6;
const A5_WIN_RATE_TOLERANCE: f64 = 1e-3;
const A5_MIN_EFFICIENCY: f64 = 0.999;

// A6: directional response to the discount rate.
const A6_REVENUE_DROP_RANGE: (f64, f64) = (0.005, 0.03);
const A6_WIN_SHIFT_RANGE: (f64, f64) = (0.04, 0.06);
const A6_MAX_EFFICIENCY_DROP: f64 = 0.06;
const A6_RUNTIME_LIMIT_SECS: f64 = 300.0;

// A7: integrator versus Monte Carlo.
const A7_SAMPLES: u64 = 1_000_000;
const A7_SE_MULTIPLE: f64 = 3.0;

// A8: estimation round-trip.
const A8_AUCTIONS: usize = 200_000;
const A8_PARAMETER_TOLERANCE: f64 = 0.10;
const A8_FOC_TOLERANCE: f64 = 1e-4;

// A9: step-doubling error contraction for a first-order scheme.
const A9_CONTRACTION_RANGE: (f64, f64) = (1.6, 2.4);

fn check(id: &str, passed: bool, detail: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("{id} [{verdict}] {detail}");
    assert!(passed, "{id} [{verdict}] {detail}");
}

fn uniform01() -> ValuationDistribution {
    ValuationDistribution::uniform(0.0, 1.0).unwrap()
}

fn symmetric_uniform_config(r: f64) -> SolverConfig {
    SolverConfig::new(r, uniform01(), uniform01())
}

/// Log-normal pair fitted-shaped like real ad-auction data; also the audit
/// configuration, so the truncation is wide enough to keep boundary effects
/// out of the gap.
fn fitted_like_config(r: f64) -> SolverConfig {
    let d1 = ValuationDistribution::truncated_log_normal(0.72, 3.0, 1e-5, 1.0 - 1e-5).unwrap();
    let d2 = ValuationDistribution::truncated_log_normal(0.7056, 2.95, 1e-5, 1.0 - 1e-5).unwrap();
    SolverConfig::new(r, d1, d2)
}

/// Largest knot deviation from a linear oracle bid function, as a fraction
/// of the bid range.
fn max_oracle_error(table: &TabulatedBidFunction, slope: f64) -> f64 {
    let range = table.bid_range();
    table
        .points()
        .iter()
        .map(|&(v, b)| (b - slope * v).abs() / range)
        .fold(0.0, f64::max)
}

#[test]
fn a1_uniform_oracle() {
    let start = Instant::now();
    let report = solve(&symmetric_uniform_config(0.0)).unwrap();
    let runtime = start.elapsed().as_secs_f64();

    let bstar_err = (report.bstar - 0.8).abs();
    let curve_err = max_oracle_error(&report.bid1, 0.8).max(max_oracle_error(&report.bid2, 0.8));
    let passed = bstar_err <= A1_BSTAR_TOLERANCE
        && curve_err <= A1_CURVE_TOLERANCE
        && runtime < A1_RUNTIME_LIMIT_SECS;
    check(
        "A1",
        passed,
        &format!(
            "five uniform bidders: bstar={:.6} (err {:.1e} <= {:.0e}), curve err {:.2e} <= {:.0e}, {:.2}s < {:.0}s",
            report.bstar, bstar_err, A1_BSTAR_TOLERANCE, curve_err, A1_CURVE_TOLERANCE, runtime,
            A1_RUNTIME_LIMIT_SECS
        ),
    );
}

#[test]
fn a2_compensating_discount_oracle() {
    let cfg = SolverConfig::new(
        0.2,
        ValuationDistribution::uniform(0.0, 0.8).unwrap(),
        uniform01(),
    );
    let report = solve(&cfg).unwrap();

    // A discounted bidder on [0, 0.8] at r = 0.2 bids exactly their value;
    // the others keep the plain four-fifths rule.
    let bstar_err = (report.bstar - 0.8).abs();
    let err1 = max_oracle_error(&report.bid1, 1.0);
    let err2 = max_oracle_error(&report.bid2, 0.8);
    let passed = bstar_err <= A2_BSTAR_TOLERANCE
        && err1 <= A2_CURVE_TOLERANCE
        && err2 <= A2_CURVE_TOLERANCE;
    check(
        "A2",
        passed,
        &format!(
            "compensating discount: bstar={:.6} (err {:.1e} <= {:.0e}), curve errs {:.2e}/{:.2e} <= {:.0e}",
            report.bstar, bstar_err, A2_BSTAR_TOLERANCE, err1, err2, A2_CURVE_TOLERANCE
        ),
    );
}

#[test]
fn a3_regime_equivalence() {
    let start = Instant::now();
    let additive = run_additive_trials(A3_TRIALS, 2026).unwrap();
    let multiplicative = run_multiplicative_trials(A3_TRIALS, 2027).unwrap();
    let runtime = start.elapsed().as_secs_f64();

    let passed = additive.max_abs_deviation == 0.0
        && additive.winners_always_matched
        && additive.constructed_ties >= A3_MIN_TIES
        && multiplicative.max_rel_deviation < A3_MULTIPLICATIVE_TOLERANCE
        && multiplicative.winners_always_matched
        && multiplicative.constructed_ties >= A3_MIN_TIES
        && runtime < A3_RUNTIME_LIMIT_SECS;
    check(
        "A3",
        passed,
        &format!(
            "{} trials per regime: additive dev {:.1e} (exact), multiplicative dev {:.2e} < {:.0e}, ties {}/{}, {:.2}s < {:.0}s",
            A3_TRIALS,
            additive.max_abs_deviation,
            multiplicative.max_rel_deviation,
            A3_MULTIPLICATIVE_TOLERANCE,
            additive.constructed_ties,
            multiplicative.constructed_ties,
            runtime,
            A3_RUNTIME_LIMIT_SECS
        ),
    );
}

#[test]
fn a4_best_response_audit() {
    let uniform = solve(&symmetric_uniform_config(0.0)).unwrap();
    let mut lognormal_cfg = fitted_like_config(0.05);
    lognormal_cfg.steps = 20_000;
    let lognormal = solve(&lognormal_cfg).unwrap();

    let worst_uniform = uniform.best_response_gap1.max(uniform.best_response_gap2);
    let worst_lognormal = lognormal
        .best_response_gap1
        .max(lognormal.best_response_gap2);
    let passed = worst_uniform <= A4_GAP_TOLERANCE && worst_lognormal <= A4_GAP_TOLERANCE;
    check(
        "A4",
        passed,
        &format!(
            "best-response gaps: uniform {:.2e}, near-identical log-normal {:.2e}, both <= {:.0e} of bid range",
            worst_uniform, worst_lognormal, A4_GAP_TOLERANCE
        ),
    );
}

fn assert_row_identities(rows: &[SweepRow]) -> (f64, bool) {
    let mut worst = 0.0f64;
    let mut all_ok = true;
    for row in rows {
        match &row.stats {
            Some(s) => {
                let n = 4.0;
                let rev_gap =
                    (s.expected_revenue - (s.cost_discounted + n * s.cost_other)).abs();
                let win_gap = (s.win_rate_discounted + n * s.win_rate_other - 1.0).abs();
                worst = worst.max(rev_gap).max(win_gap);
            }
            None => all_ok = false,
        }
    }
    (worst, all_ok)
}

#[test]
fn a5_outcome_identities() {
    let rates = [0.0, 0.05, 0.10, 0.15, 0.20, 0.25];
    let rows = sweep(&rates, &symmetric_uniform_config(0.0));
    let (worst_gap, all_solved) = assert_row_identities(&rows);

    let base = rows[0].stats.as_ref().unwrap();
    let win_err = (base.win_rate_discounted - 0.2)
        .abs()
        .max((base.win_rate_other - 0.2).abs());
    let passed = all_solved
        && worst_gap <= A5_IDENTITY_TOLERANCE
        && win_err <= A5_WIN_RATE_TOLERANCE
        && base.efficiency >= A5_MIN_EFFICIENCY;
    check(
        "A5",
        passed,
        &format!(
            "identities on {} rows: worst gap {:.2e} <= {:.0e}; r=0 win rates err {:.2e} <= {:.0e}, eff {:.5} >= {}",
            rows.len(),
            worst_gap,
            A5_IDENTITY_TOLERANCE,
            win_err,
            A5_WIN_RATE_TOLERANCE,
            base.efficiency,
            A5_MIN_EFFICIENCY
        ),
    );
}

#[test]
fn a6_directional_rate_sweep() {
    let start = Instant::now();
    // Class parameters differ by 2% (sigma) and 1.7% (median).
    let cfg = SolverConfig::new(
        0.0,
        ValuationDistribution::log_normal(1.2, 3.0).unwrap(),
        ValuationDistribution::log_normal(1.176, 2.95).unwrap(),
    );
    let rates = [0.0, 0.05, 0.10, 0.15, 0.20, 0.25];
    let rows = sweep(&rates, &cfg);
    let runtime = start.elapsed().as_secs_f64();

    let all_solved = rows.iter().all(|r| r.is_ok());
    let stats: Vec<_> = rows.iter().filter_map(|r| r.stats.as_ref()).collect();
    let mut revenue_monotone = true;
    for pair in stats.windows(2) {
        if pair[1].expected_revenue > pair[0].expected_revenue + 1e-9 {
            revenue_monotone = false;
        }
    }
    let first = stats.first().unwrap();
    let last = stats.last().unwrap();
    let revenue_drop = (first.expected_revenue - last.expected_revenue) / first.expected_revenue;
    let win_shift = last.win_rate_discounted - first.win_rate_discounted;
    let efficiency_drop = first.efficiency - last.efficiency;

    let passed = all_solved
        && revenue_monotone
        && revenue_drop >= A6_REVENUE_DROP_RANGE.0
        && revenue_drop <= A6_REVENUE_DROP_RANGE.1
        && win_shift >= A6_WIN_SHIFT_RANGE.0
        && win_shift <= A6_WIN_SHIFT_RANGE.1
        && efficiency_drop >= 0.0
        && efficiency_drop <= A6_MAX_EFFICIENCY_DROP
        && runtime < A6_RUNTIME_LIMIT_SECS;
    check(
        "A6",
        passed,
        &format!(
            "rate sweep 0..0.25: revenue nonincreasing={}, drop {:.2}% in [{}, {}]%, win shift {:+.2}pts in [{}, {}]pts, eff drop {:.2}pts <= {}pts, {:.1}s < {:.0}s",
            revenue_monotone,
            100.0 * revenue_drop,
            100.0 * A6_REVENUE_DROP_RANGE.0,
            100.0 * A6_REVENUE_DROP_RANGE.1,
            100.0 * win_shift,
            100.0 * A6_WIN_SHIFT_RANGE.0,
            100.0 * A6_WIN_SHIFT_RANGE.1,
            100.0 * efficiency_drop,
            100.0 * A6_MAX_EFFICIENCY_DROP,
            runtime,
            A6_RUNTIME_LIMIT_SECS
        ),
    );
}

fn compare_methods(cfg: &SolverConfig, seed: u64) -> (f64, Vec<String>) {
    let report = solve(cfg).unwrap();
    let base = OutcomeConfig::from_solve(&report, cfg);
    let integrated = evaluate_outcomes(&base).unwrap();
    let simulated = evaluate_outcomes(&base.clone().with_method(OutcomeMethod::MonteCarlo {
        samples: A7_SAMPLES,
        seed,
    }))
    .unwrap();
    let se = simulated.std_errors.as_ref().unwrap();

    let fields = [
        ("e_rev", integrated.expected_revenue, simulated.expected_revenue, se.expected_revenue),
        ("eff", integrated.efficiency, simulated.efficiency, se.efficiency),
        (
            "win_disc",
            integrated.win_rate_discounted,
            simulated.win_rate_discounted,
            se.win_rate_discounted,
        ),
        ("win_other", integrated.win_rate_other, simulated.win_rate_other, se.win_rate_other),
        (
            "surp_disc",
            integrated.surplus_discounted,
            simulated.surplus_discounted,
            se.surplus_discounted,
        ),
        ("surp_other", integrated.surplus_other, simulated.surplus_other, se.surplus_other),
        ("cost_disc", integrated.cost_discounted, simulated.cost_discounted, se.cost_discounted),
        ("cost_other", integrated.cost_other, simulated.cost_other, se.cost_other),
    ];
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (name, exact, mc, se) in fields {
        let z = (exact - mc).abs() / se;
        worst = worst.max(z);
        if z > A7_SE_MULTIPLE {
            failures.push(format!("{name} off by {z:.1} SE"));
        }
    }
    (worst, failures)
}

#[test]
fn a7_integrator_vs_monte_carlo() {
    let (z_uniform, fail_uniform) = compare_methods(&symmetric_uniform_config(0.0), 20_260_822);
    let (z_lognormal, fail_lognormal) = compare_methods(&fitted_like_config(0.15), 20_260_823);

    let passed = fail_uniform.is_empty() && fail_lognormal.is_empty();
    check(
        "A7",
        passed,
        &format!(
            "integrator vs {} samples: worst |z| uniform {:.2}, log-normal {:.2}, all <= {} SE{}",
            A7_SAMPLES,
            z_uniform,
            z_lognormal,
            A7_SE_MULTIPLE,
            if passed {
                String::new()
            } else {
                format!("; failures: {:?} {:?}", fail_uniform, fail_lognormal)
            }
        ),
    );
}

#[test]
fn a8_estimation_round_trip() {
    let (sigma_true, m_true, r) = (0.4, 3.0, 0.05);
    let dist = ValuationDistribution::log_normal(sigma_true, m_true).unwrap();
    let cfg = SolverConfig::new(r, dist.clone(), dist.clone());
    let report = solve(&cfg).unwrap();

    let bounded = dist.with_bounded_support();
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut records = Vec::with_capacity(A8_AUCTIONS * 5);
    for a in 0..A8_AUCTIONS {
        for i in 0..5 {
            let mut u: f64 = rng.gen();
            while u <= 0.0 {
                u = rng.gen();
            }
            let v = bounded.quantile(u).unwrap();
            let (class, bid) = if i == 0 {
                (BidderClass::Discounted, report.bid1.bid_at(v))
            } else {
                (BidderClass::Other, report.bid2.bid_at(v))
            };
            // A zero bid is an abstention and never reaches the log.
            if bid > 0.0 {
                records.push(BidRecord {
                    auction_id: format!("a{a}"),
                    class,
                    bid,
                });
            }
        }
    }

    let est_cfg = EstimationConfig {
        r,
        ..EstimationConfig::default()
    };
    let result = run_estimation(&records, &est_cfg).unwrap();

    let mut worst_param = 0.0f64;
    let mut worst_foc = 0.0f64;
    for est in result.classes() {
        let sigma_err = (est.sigma - sigma_true).abs() / sigma_true;
        let m_err = (est.m - m_true).abs() / m_true;
        worst_param = worst_param.max(sigma_err).max(m_err);
        worst_foc = worst_foc.max(est.max_foc_residual);
    }
    let passed = worst_param <= A8_PARAMETER_TOLERANCE && worst_foc < A8_FOC_TOLERANCE;
    check(
        "A8",
        passed,
        &format!(
            "{} auctions round-trip: sigma/m recovered ({:.4}/{:.4}, {:.4}/{:.4}) vs ({}, {}), worst rel err {:.1}% <= {:.0}%, worst FOC residual {:.1e} < {:.0e}",
            A8_AUCTIONS,
            result.discounted.sigma,
            result.discounted.m,
            result.other.sigma,
            result.other.m,
            sigma_true,
            m_true,
            100.0 * worst_param,
            100.0 * A8_PARAMETER_TOLERANCE,
            worst_foc,
            A8_FOC_TOLERANCE
        ),
    );
}

#[test]
fn a9_convergence_order() {
    let coarse = solve(&symmetric_uniform_config(0.0)).unwrap();
    let mut fine_cfg = symmetric_uniform_config(0.0);
    fine_cfg.steps *= 2;
    let fine = solve(&fine_cfg).unwrap();

    let coarse_err =
        max_oracle_error(&coarse.bid1, 0.8).max(max_oracle_error(&coarse.bid2, 0.8));
    let fine_err = max_oracle_error(&fine.bid1, 0.8).max(max_oracle_error(&fine.bid2, 0.8));
    let ratio = coarse_err / fine_err;

    let passed = ratio >= A9_CONTRACTION_RANGE.0 && ratio <= A9_CONTRACTION_RANGE.1;
    check(
        "A9",
        passed,
        &format!(
            "step doubling: max oracle error {:.3e} -> {:.3e}, contraction {:.3} expected in [{}, {}]",
            coarse_err, fine_err, ratio, A9_CONTRACTION_RANGE.0, A9_CONTRACTION_RANGE.1
        ),
    );
}
