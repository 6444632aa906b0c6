//! Expected outcomes of a discounted auction under tabulated bid functions.
//!
//! Both evaluation paths share one discretization: every bidder's continuous
//! bid is floored onto the merged grid of table knots, so the integrator and
//! the Monte Carlo simulator price exactly the same discrete game and differ
//! only by sampling noise.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::auction::{AuctionInstance, DiscountForm, DiscountRegime, DiscountSpec};
use crate::dist::ValuationDistribution;
use crate::error::{Error, Result};
use crate::solver::{Role, SolveReport, SolverConfig, TabulatedBidFunction};

/// Smallest Monte Carlo run accepted; below this the standard errors are too
/// loose to report alongside point estimates.
pub const MIN_SIMULATION_SAMPLES: u64 = 10_000;

/// How the outcome statistics are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutcomeMethod {
    /// Deterministic integration over the discretized bid grid.
    FullIntegration,
    /// Seeded simulation; reports standard errors alongside point estimates.
    MonteCarlo { samples: u64, seed: u64 },
}

/// One auction environment to evaluate: a discounted bidder facing `n`
/// undiscounted rivals, each side committed to a tabulated bid function.
#[derive(Debug, Clone)]
pub struct OutcomeConfig {
    /// Post-auction multiplicative discount rate for the discounted bidder.
    pub r: f64,
    /// Number of undiscounted bidders.
    pub n: usize,
    pub bid1: TabulatedBidFunction,
    pub bid2: TabulatedBidFunction,
    pub dist1: ValuationDistribution,
    pub dist2: ValuationDistribution,
    pub method: OutcomeMethod,
}

impl OutcomeConfig {
    pub fn new(
        r: f64,
        n: usize,
        bid1: TabulatedBidFunction,
        bid2: TabulatedBidFunction,
        dist1: ValuationDistribution,
        dist2: ValuationDistribution,
    ) -> Self {
        OutcomeConfig { r, n, bid1, bid2, dist1, dist2, method: OutcomeMethod::FullIntegration }
    }

    /// Packages a solver run for evaluation, carrying over the rate, the
    /// opponent count, and the valuation distributions.
    pub fn from_solve(report: &SolveReport, cfg: &SolverConfig) -> Self {
        OutcomeConfig::new(
            cfg.r,
            cfg.n,
            report.bid1.clone(),
            report.bid2.clone(),
            cfg.dist1.clone(),
            cfg.dist2.clone(),
        )
    }

    pub fn with_method(mut self, method: OutcomeMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.r.is_finite() || !(0.0..1.0).contains(&self.r) {
            return Err(Error::invalid(format!("discount rate must be in [0, 1), got {}", self.r)));
        }
        if self.n < 1 {
            return Err(Error::invalid("need at least one undiscounted bidder"));
        }
        if self.bid1.role() != Role::Discounted {
            return Err(Error::invalid("bid1 must carry the discounted role"));
        }
        if self.bid2.role() != Role::Undiscounted {
            return Err(Error::invalid("bid2 must carry the undiscounted role"));
        }
        self.dist1.validate()?;
        self.dist2.validate()?;
        if let OutcomeMethod::MonteCarlo { samples, .. } = self.method {
            if samples < MIN_SIMULATION_SAMPLES {
                return Err(Error::invalid(format!(
                    "simulation needs at least {MIN_SIMULATION_SAMPLES} samples, got {samples}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-auction expectations for one environment. Class statistics are per
/// bidder: `win_rate_other` is the chance a single undiscounted bidder wins.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcomeStats {
    /// Seller revenue, net of the discount payout.
    pub expected_revenue: f64,
    /// Probability the winner holds the highest valuation in the auction.
    pub efficiency: f64,
    pub win_rate_discounted: f64,
    pub win_rate_other: f64,
    pub surplus_discounted: f64,
    pub surplus_other: f64,
    pub cost_discounted: f64,
    pub cost_other: f64,
    /// Present only for Monte Carlo runs.
    pub std_errors: Option<OutcomeStdErrors>,
}

/// Standard errors matching the fields of [`AuctionOutcomeStats`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeStdErrors {
    pub expected_revenue: f64,
    pub efficiency: f64,
    pub win_rate_discounted: f64,
    pub win_rate_other: f64,
    pub surplus_discounted: f64,
    pub surplus_other: f64,
    pub cost_discounted: f64,
    pub cost_other: f64,
}

impl AuctionOutcomeStats {
    /// Average price paid when the discounted bidder does win. NaN when the
    /// win rate is zero; derived on demand, never stored.
    pub fn conditional_cost_discounted(&self) -> f64 {
        self.cost_discounted / self.win_rate_discounted
    }

    /// Average price paid by a single undiscounted bidder when it wins.
    pub fn conditional_cost_other(&self) -> f64 {
        self.cost_other / self.win_rate_other
    }
}

/// Evaluates one environment using the method in its config.
pub fn evaluate_outcomes(cfg: &OutcomeConfig) -> Result<AuctionOutcomeStats> {
    match cfg.method {
        OutcomeMethod::FullIntegration => integrate_outcomes(cfg),
        OutcomeMethod::MonteCarlo { samples, seed } => simulate_outcomes(cfg, samples, seed),
    }
}

/// One bidder class mapped onto the shared bid grid.
///
/// `bnd` has one more entry than the grid: valuations in `[bnd[k], bnd[k+1])`
/// floor to grid bid `k`. `l[k]` is the probability of bidding strictly below
/// grid bid `k`, `e[k]` the probability of bidding exactly it.
struct ClassGrid {
    bnd: Vec<f64>,
    l: Vec<f64>,
    e: Vec<f64>,
}

impl ClassGrid {
    fn build(table: &TabulatedBidFunction, dist: &ValuationDistribution, bids: &[f64]) -> ClassGrid {
        let (lo, hi) = dist.support();
        let k = bids.len();
        let mut bnd = Vec::with_capacity(k + 1);
        bnd.push(lo);
        for &b in &bids[1..] {
            bnd.push(table.value_at_bid(b).clamp(lo, hi));
        }
        bnd.push(hi);
        for i in 1..bnd.len() {
            if bnd[i] < bnd[i - 1] {
                bnd[i] = bnd[i - 1];
            }
        }
        let l: Vec<f64> = bnd.iter().map(|&v| dist.cdf(v)).collect();
        let e: Vec<f64> = (0..k).map(|i| (l[i + 1] - l[i]).max(0.0)).collect();
        ClassGrid { bnd, l, e }
    }

    /// Index of the grid bid a valuation floors to.
    fn cell(&self, v: f64) -> usize {
        let interior = &self.bnd[1..self.bnd.len() - 1];
        interior.partition_point(|&x| x <= v)
    }
}

struct DiscretizedModel {
    bids: Vec<f64>,
    d: ClassGrid,
    o: ClassGrid,
    n: usize,
    r: f64,
    dist_d: ValuationDistribution,
    dist_o: ValuationDistribution,
    /// C(n, j) for j = 0..=n and C(n-1, j) for j = 0..n.
    choose_n: Vec<f64>,
    choose_n1: Vec<f64>,
}

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for j in 0..n {
        let next = row[j] * (n - j) as f64 / (j + 1) as f64;
        row.push(next);
    }
    row
}

impl DiscretizedModel {
    fn build(cfg: &OutcomeConfig) -> Result<DiscretizedModel> {
        cfg.validate()?;
        let dist_d = cfg.dist1.with_bounded_support();
        let dist_o = cfg.dist2.with_bounded_support();
        let mut bids: Vec<f64> = cfg
            .bid1
            .points()
            .iter()
            .chain(cfg.bid2.points())
            .map(|&(_, b)| b)
            .collect();
        bids.sort_unstable_by(f64::total_cmp);
        bids.dedup();
        if bids.len() < 2 {
            return Err(Error::invalid("bid tables collapse to fewer than two grid bids"));
        }
        let d = ClassGrid::build(&cfg.bid1, &dist_d, &bids);
        let o = ClassGrid::build(&cfg.bid2, &dist_o, &bids);
        Ok(DiscretizedModel {
            bids,
            d,
            o,
            n: cfg.n,
            r: cfg.r,
            dist_d,
            dist_o,
            choose_n: binomial_row(cfg.n),
            choose_n1: binomial_row(cfg.n - 1),
        })
    }

    /// Win probability for the discounted bidder given it bids grid bid `k`:
    /// every rival strictly below or tied, ties split uniformly.
    fn d_win_given(&self, k: usize) -> f64 {
        let (e, l) = (self.o.e[k], self.o.l[k]);
        let mut total = 0.0;
        for j in 0..=self.n {
            total += self.choose_n[j] * e.powi(j as i32) * l.powi((self.n - j) as i32)
                / (1.0 + j as f64);
        }
        total
    }

    /// Win probability for one undiscounted bidder given it bids grid bid `k`.
    fn o_win_given(&self, k: usize) -> f64 {
        let (eo, lo) = (self.o.e[k], self.o.l[k]);
        let (ed, ld) = (self.d.e[k], self.d.l[k]);
        let mut total = 0.0;
        for j in 0..self.n {
            let rivals = self.choose_n1[j] * eo.powi(j as i32) * lo.powi((self.n - 1 - j) as i32);
            total += rivals * (ld / (1.0 + j as f64) + ed / (2.0 + j as f64));
        }
        total
    }

    /// Probability that the realized winner holds the highest valuation,
    /// integrated cell by cell with Simpson's rule.
    fn efficiency(&self) -> f64 {
        let mut eff = 0.0;
        for k in 0..self.bids.len() {
            if self.d.e[k] > 0.0 {
                eff += simpson(self.d.bnd[k], self.d.bnd[k + 1], |v| {
                    self.dist_d.pdf(v) * self.d_win_and_top_given(k, v)
                });
            }
            if self.o.e[k] > 0.0 {
                eff += self.n as f64
                    * simpson(self.o.bnd[k], self.o.bnd[k + 1], |v| {
                        self.dist_o.pdf(v) * self.o_win_and_top_given(k, v)
                    });
            }
        }
        eff
    }

    /// Mass of one undiscounted rival bidding below grid bid `k` with
    /// valuation at most `v`, and tying at it with valuation at most `v`.
    fn below_and_tie(&self, grid: &ClassGrid, dist: &ValuationDistribution, k: usize, v: f64) -> (f64, f64) {
        let below = dist.cdf(v.min(grid.bnd[k]));
        let tie = (dist.cdf(v.clamp(grid.bnd[k], grid.bnd[k + 1])) - grid.l[k]).max(0.0);
        (below, tie)
    }

    fn d_win_and_top_given(&self, k: usize, v: f64) -> f64 {
        let (below, tie) = self.below_and_tie(&self.o, &self.dist_o, k, v);
        let mut total = 0.0;
        for j in 0..=self.n {
            total += self.choose_n[j] * tie.powi(j as i32) * below.powi((self.n - j) as i32)
                / (1.0 + j as f64);
        }
        total
    }

    fn o_win_and_top_given(&self, k: usize, v: f64) -> f64 {
        let (below_o, tie_o) = self.below_and_tie(&self.o, &self.dist_o, k, v);
        let (below_d, tie_d) = self.below_and_tie(&self.d, &self.dist_d, k, v);
        let mut total = 0.0;
        for j in 0..self.n {
            let rivals = self.choose_n1[j] * tie_o.powi(j as i32) * below_o.powi((self.n - 1 - j) as i32);
            total += rivals * (below_d / (1.0 + j as f64) + tie_d / (2.0 + j as f64));
        }
        total
    }
}

fn simpson(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mid = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(mid) + f(b))
}

/// Deterministic evaluation over the discretized bid grid.
///
/// Revenue is accumulated along an independent route (winning-bid
/// distribution minus the discount payout), so agreement with the summed
/// per-class costs checks the computation rather than restating it.
pub fn integrate_outcomes(cfg: &OutcomeConfig) -> Result<AuctionOutcomeStats> {
    let model = DiscretizedModel::build(cfg)?;
    let k_max = model.bids.len();

    let mut win_d = 0.0;
    let mut win_o = 0.0;
    let mut cost_d = 0.0;
    let mut cost_o = 0.0;
    let mut surp_d = 0.0;
    let mut surp_o = 0.0;
    let mut gross = 0.0;
    let mut refund = 0.0;
    for k in 0..k_max {
        let b = model.bids[k];
        let dw = model.d_win_given(k);
        let ow = model.o_win_given(k);
        let (ed, eo) = (model.d.e[k], model.o.e[k]);
        win_d += ed * dw;
        win_o += eo * ow;
        cost_d += ed * dw * (1.0 - model.r) * b;
        cost_o += eo * ow * b;
        let pm_d = model.dist_d.partial_mean(model.d.bnd[k], model.d.bnd[k + 1]);
        let pm_o = model.dist_o.partial_mean(model.o.bnd[k], model.o.bnd[k + 1]);
        surp_d += dw * (pm_d - (1.0 - model.r) * b * ed);
        surp_o += ow * (pm_o - b * eo);
        let top_here = model.d.l[k + 1] * model.o.l[k + 1].powi(model.n as i32)
            - model.d.l[k] * model.o.l[k].powi(model.n as i32);
        gross += b * top_here;
        refund += model.r * b * ed * dw;
    }

    Ok(AuctionOutcomeStats {
        expected_revenue: gross - refund,
        efficiency: model.efficiency(),
        win_rate_discounted: win_d,
        win_rate_other: win_o,
        surplus_discounted: surp_d,
        surplus_other: surp_o,
        cost_discounted: cost_d,
        cost_other: cost_o,
        std_errors: None,
    })
}

/// Seeded Monte Carlo evaluation of the same discretized game.
///
/// Ties are left as expected shares rather than re-randomized, which keeps
/// the estimator unbiased while trimming its variance.
pub fn simulate_outcomes(cfg: &OutcomeConfig, samples: u64, seed: u64) -> Result<AuctionOutcomeStats> {
    let model = DiscretizedModel::build(cfg)?;
    if samples < MIN_SIMULATION_SAMPLES {
        return Err(Error::invalid(format!(
            "simulation needs at least {MIN_SIMULATION_SAMPLES} samples, got {samples}"
        )));
    }
    let n = model.n;
    let nf = n as f64;
    let mut amounts = vec![0.0; n + 1];
    amounts[0] = model.r;
    let discount = DiscountSpec::new(DiscountRegime::PostAuction, DiscountForm::Multiplicative, amounts)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |dist: &ValuationDistribution| -> Result<f64> {
        let mut u: f64 = rng.gen();
        while u <= 0.0 {
            u = rng.gen();
        }
        dist.quantile(u)
    };

    let mut acc = Accumulator::default();
    let mut valuations = vec![0.0; n + 1];
    let mut bids = vec![0.0; n + 1];
    for _ in 0..samples {
        valuations[0] = draw(&model.dist_d)?;
        bids[0] = model.bids[model.d.cell(valuations[0])];
        for i in 1..=n {
            valuations[i] = draw(&model.dist_o)?;
            bids[i] = model.bids[model.o.cell(valuations[i])];
        }
        let outcome = crate::auction::resolve(&AuctionInstance::new(
            valuations.clone(),
            bids.clone(),
            discount.clone(),
        )?)?;

        let top_valuation = valuations.iter().cloned().fold(f64::MIN, f64::max);
        let mut revenue = 0.0;
        let mut eff = 0.0;
        let mut win_o = 0.0;
        let mut cost_o = 0.0;
        let mut surp_o = 0.0;
        for i in 0..=n {
            let p = outcome.win_probability[i];
            revenue += p * outcome.price[i];
            if valuations[i] >= top_valuation {
                eff += p;
            }
            if i > 0 {
                win_o += p / nf;
                cost_o += p * outcome.price[i] / nf;
                surp_o += outcome.utility[i] / nf;
            }
        }
        acc.push([
            revenue,
            eff,
            outcome.win_probability[0],
            win_o,
            outcome.utility[0],
            surp_o,
            outcome.win_probability[0] * outcome.price[0],
            cost_o,
        ]);
    }

    let (mean, se) = acc.finish(samples as f64);
    Ok(AuctionOutcomeStats {
        expected_revenue: mean[0],
        efficiency: mean[1],
        win_rate_discounted: mean[2],
        win_rate_other: mean[3],
        surplus_discounted: mean[4],
        surplus_other: mean[5],
        cost_discounted: mean[6],
        cost_other: mean[7],
        std_errors: Some(OutcomeStdErrors {
            expected_revenue: se[0],
            efficiency: se[1],
            win_rate_discounted: se[2],
            win_rate_other: se[3],
            surplus_discounted: se[4],
            surplus_other: se[5],
            cost_discounted: se[6],
            cost_other: se[7],
        }),
    })
}

#[derive(Default)]
struct Accumulator {
    sum: [f64; 8],
    sum_sq: [f64; 8],
}

impl Accumulator {
    fn push(&mut self, x: [f64; 8]) {
        for i in 0..8 {
            self.sum[i] += x[i];
            self.sum_sq[i] += x[i] * x[i];
        }
    }

    fn finish(&self, count: f64) -> ([f64; 8], [f64; 8]) {
        let mut mean = [0.0; 8];
        let mut se = [0.0; 8];
        for i in 0..8 {
            mean[i] = self.sum[i] / count;
            let var = (self.sum_sq[i] / count - mean[i] * mean[i]).max(0.0);
            se[i] = (var / count).sqrt();
        }
        (mean, se)
    }
}

/// One discount rate evaluated inside a sweep. A row either carries
/// statistics or the reason its equilibrium could not be computed.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub r: f64,
    pub bstar: Option<f64>,
    pub stats: Option<AuctionOutcomeStats>,
    pub failure: Option<String>,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.stats.is_some()
    }
}

/// Re-solves the equilibrium at each rate and integrates its outcomes.
/// A rate whose solve or evaluation fails is reported as a failed row; the
/// sweep always continues to the remaining rates.
pub fn sweep(r_values: &[f64], template: &SolverConfig) -> Vec<SweepRow> {
    r_values
        .iter()
        .map(|&r| {
            let mut cfg = template.clone();
            cfg.r = r;
            match crate::solver::solve(&cfg)
                .and_then(|report| {
                    integrate_outcomes(&OutcomeConfig::from_solve(&report, &cfg))
                        .map(|stats| (report.bstar, stats))
                }) {
                Ok((bstar, stats)) => SweepRow { r, bstar: Some(bstar), stats: Some(stats), failure: None },
                Err(err) => SweepRow { r, bstar: None, stats: None, failure: Some(err.to_string()) },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ValuationDistribution;
    use crate::solver::Role;

    const IDENTITY_TOLERANCE: f64 = 1e-9;

    fn line_table(role: Role, vmax: f64, slope: f64, knots: usize) -> TabulatedBidFunction {
        let points: Vec<(f64, f64)> = (0..=knots)
            .map(|i| {
                let v = vmax * i as f64 / knots as f64;
                (v, slope * v)
            })
            .collect();
        TabulatedBidFunction::new(role, points).unwrap()
    }

    fn symmetric_uniform(knots: usize) -> OutcomeConfig {
        OutcomeConfig::new(
            0.0,
            4,
            line_table(Role::Discounted, 1.0, 0.8, knots),
            line_table(Role::Undiscounted, 1.0, 0.8, knots),
            ValuationDistribution::uniform(0.0, 1.0).unwrap(),
            ValuationDistribution::uniform(0.0, 1.0).unwrap(),
        )
    }

    /// Offset discount and support chosen so both classes submit identical
    /// bid distributions: the discounted bidder on U[0, 0.8] bids its
    /// valuation at r = 0.2, the others bid 0.8 of theirs.
    fn compensated_uniform(knots: usize) -> OutcomeConfig {
        OutcomeConfig::new(
            0.2,
            4,
            line_table(Role::Discounted, 0.8, 1.0, knots),
            line_table(Role::Undiscounted, 1.0, 0.8, knots),
            ValuationDistribution::uniform(0.0, 0.8).unwrap(),
            ValuationDistribution::uniform(0.0, 1.0).unwrap(),
        )
    }

    fn assert_identities(stats: &AuctionOutcomeStats, n: usize) {
        let closure = stats.win_rate_discounted + n as f64 * stats.win_rate_other;
        assert!((closure - 1.0).abs() < IDENTITY_TOLERANCE, "win rates sum to {closure}");
        let paid = stats.cost_discounted + n as f64 * stats.cost_other;
        let rev_gap = (stats.expected_revenue - paid).abs() / stats.expected_revenue.abs().max(1.0);
        assert!(rev_gap < IDENTITY_TOLERANCE, "revenue route disagrees by {rev_gap}");
    }

    #[test]
    fn symmetric_uniform_matches_closed_forms() {
        let stats = integrate_outcomes(&symmetric_uniform(2000)).unwrap();
        // Five identical bidders at b = 0.8v: revenue 0.8 E[max of five
        // uniforms] = 2/3, each wins a fifth of the time, per-bidder surplus
        // 0.2 E[v; v is the max] = 1/30.
        assert!((stats.expected_revenue - 2.0 / 3.0).abs() < 1e-3);
        assert!((stats.win_rate_discounted - 0.2).abs() < 1e-3);
        assert!((stats.win_rate_other - 0.2).abs() < 1e-3);
        assert!((stats.surplus_discounted - 1.0 / 30.0).abs() < 1e-3);
        assert!((stats.surplus_other - 1.0 / 30.0).abs() < 1e-3);
        assert!(stats.efficiency >= 0.999 && stats.efficiency <= 1.0 + 1e-9);
        assert!(stats.std_errors.is_none());
        assert_identities(&stats, 4);
    }

    #[test]
    fn compensated_uniform_equalizes_bid_distributions() {
        let stats = integrate_outcomes(&compensated_uniform(1000)).unwrap();
        assert!((stats.win_rate_discounted - 0.2).abs() < 1e-3);
        // Same bid distribution, but the discounted winner pays 0.8 of it.
        let price_ratio = stats.conditional_cost_discounted() / stats.conditional_cost_other();
        assert!((price_ratio - 0.8).abs() < 5e-3, "price ratio {price_ratio}");
        // The discount misallocates: the discounted bidder outbids rivals it
        // values below. P(win without the top valuation) = (1 - 0.8^4)/5.
        let eff_expected = 1.0 - (1.0 - 0.8f64.powi(4)) / 5.0;
        assert!(
            (stats.efficiency - eff_expected).abs() < 3e-3,
            "efficiency {} vs {eff_expected}",
            stats.efficiency
        );
        assert_identities(&stats, 4);
    }

    #[test]
    fn monte_carlo_agrees_with_integration() {
        let cfg = compensated_uniform(1000);
        let exact = integrate_outcomes(&cfg).unwrap();
        let mc = simulate_outcomes(&cfg, 20_000, 7).unwrap();
        let se = mc.std_errors.as_ref().unwrap();
        let checks = [
            (mc.expected_revenue, exact.expected_revenue, se.expected_revenue),
            (mc.efficiency, exact.efficiency, se.efficiency),
            (mc.win_rate_discounted, exact.win_rate_discounted, se.win_rate_discounted),
            (mc.win_rate_other, exact.win_rate_other, se.win_rate_other),
            (mc.surplus_discounted, exact.surplus_discounted, se.surplus_discounted),
            (mc.surplus_other, exact.surplus_other, se.surplus_other),
            (mc.cost_discounted, exact.cost_discounted, se.cost_discounted),
            (mc.cost_other, exact.cost_other, se.cost_other),
        ];
        for (i, (sampled, truth, se)) in checks.iter().enumerate() {
            assert!(
                (sampled - truth).abs() <= 5.0 * se + 1e-6,
                "stat {i}: {sampled} vs {truth} (se {se})"
            );
        }
    }

    #[test]
    fn same_seed_reproduces_simulation_exactly() {
        let cfg = symmetric_uniform(400);
        let a = simulate_outcomes(&cfg, 10_000, 99).unwrap();
        let b = simulate_outcomes(&cfg, 10_000, 99).unwrap();
        assert_eq!(a, b);
        let c = simulate_outcomes(&cfg, 10_000, 100).unwrap();
        assert_ne!(a.expected_revenue, c.expected_revenue);
    }

    #[test]
    fn simulation_rejects_small_sample_counts() {
        let cfg = symmetric_uniform(50);
        assert!(simulate_outcomes(&cfg, 0, 1).is_err());
        assert!(simulate_outcomes(&cfg, MIN_SIMULATION_SAMPLES - 1, 1).is_err());
        let via_method = cfg.with_method(OutcomeMethod::MonteCarlo { samples: 10, seed: 1 });
        assert!(via_method.validate().is_err());
    }

    #[test]
    fn config_rejects_swapped_roles() {
        let mut cfg = symmetric_uniform(50);
        cfg.bid1 = line_table(Role::Undiscounted, 1.0, 0.8, 50);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn refining_the_tables_is_stable() {
        let coarse = integrate_outcomes(&symmetric_uniform(1000)).unwrap();
        let fine = integrate_outcomes(&symmetric_uniform(2000)).unwrap();
        let pairs = [
            (coarse.expected_revenue, fine.expected_revenue),
            (coarse.efficiency, fine.efficiency),
            (coarse.win_rate_discounted, fine.win_rate_discounted),
            (coarse.win_rate_other, fine.win_rate_other),
            (coarse.surplus_discounted, fine.surplus_discounted),
            (coarse.surplus_other, fine.surplus_other),
            (coarse.cost_discounted, fine.cost_discounted),
            (coarse.cost_other, fine.cost_other),
        ];
        for (i, (a, b)) in pairs.iter().enumerate() {
            let rel = (a - b).abs() / b.abs().max(1e-12);
            assert!(rel < 2e-3, "stat {i} moved by {rel}");
        }
    }

    #[test]
    fn sweep_resolves_each_rate() {
        let template = SolverConfig {
            steps: 2000,
            ..SolverConfig::new(
                0.0,
                ValuationDistribution::uniform(0.0, 1.0).unwrap(),
                ValuationDistribution::uniform(0.0, 1.0).unwrap(),
            )
        };
        let rows = sweep(&[0.0, 0.2], &template);
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!(row.is_ok(), "row r={} failed: {:?}", row.r, row.failure);
            assert_identities(row.stats.as_ref().unwrap(), template.n);
        }
        let w0 = rows[0].stats.as_ref().unwrap().win_rate_discounted;
        let w2 = rows[1].stats.as_ref().unwrap().win_rate_discounted;
        assert!(w2 > w0 + 0.02, "discount should lift the win rate: {w0} -> {w2}");
        let rev0 = rows[0].stats.as_ref().unwrap().expected_revenue;
        let rev2 = rows[1].stats.as_ref().unwrap().expected_revenue;
        assert!(rev2 < rev0 + 1e-3, "revenue should not rise: {rev0} -> {rev2}");
    }

    #[test]
    fn sweep_marks_failed_rows_and_continues() {
        let template = SolverConfig {
            bstar_bracket: Some((0.9, 1.0)),
            steps: 500,
            ..SolverConfig::new(
                0.0,
                ValuationDistribution::uniform(0.0, 1.0).unwrap(),
                ValuationDistribution::uniform(0.0, 1.0).unwrap(),
            )
        };
        let rows = sweep(&[0.0, 0.1], &template);
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!(!row.is_ok());
            assert!(row.failure.as_ref().is_some_and(|m| !m.is_empty()));
        }
        assert!(sweep(&[], &template).is_empty());
    }
}
