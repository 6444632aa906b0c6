//! Numeric equilibrium solver for a first-price auction in which bidder 1
//! receives a post-auction multiplicative price reduction and n other
//! bidders do not.
//!
//! The inverse bid functions v1(b), v2(b) satisfy a coupled ODE system in
//! the bid. Integration runs backward from the common maximum bid b* (where
//! both hit their support maxima) down to b = 0 with Euler steps. b* itself
//! is not known in advance: candidates above the true value drive v2 into
//! the bid line and blow up, candidates below stay monotone, so a binary
//! search keeps the greatest feasible candidate.

use crate::dist::ValuationDistribution;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_N: usize = 4;
pub const DEFAULT_STEPS: usize = 10_000;
/// Relative width at which the b* bisection stops. The gap between the
/// returned candidate and the true b* feeds the bottom-of-table error with
/// only fifth-root attenuation (1e-8 here leaves a ~2% error sliver near
/// b = 0), so the default sits much deeper; below ~1e-13 the bisection
/// grinds against f64 noise without getting steadier.
pub const DEFAULT_BSTAR_TOLERANCE: f64 = 1e-12;
pub const MAX_BISECTIONS: usize = 80;
/// Probe decimation used by [`solve`] when auditing best responses.
pub const DEFAULT_AUDIT_PROBES: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Discounted,
    Undiscounted,
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Role::Discounted => write!(f, "discounted"),
            Role::Undiscounted => write!(f, "undiscounted"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Count of undiscounted bidders (the discounted bidder is extra).
    #[serde(default = "default_n")]
    pub n: usize,
    /// Post-auction multiplicative reduction rate for bidder 1.
    pub r: f64,
    /// Valuation distribution of the discounted bidder.
    pub dist1: ValuationDistribution,
    /// Valuation distribution of each undiscounted bidder.
    pub dist2: ValuationDistribution,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_bstar_tolerance")]
    pub bstar_tolerance: f64,
    /// Initial (lo, hi) bid bracket; defaults to (1e-6 v2max, v2max).
    #[serde(default)]
    pub bstar_bracket: Option<(f64, f64)>,
}

fn default_n() -> usize {
    DEFAULT_N
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

fn default_bstar_tolerance() -> f64 {
    DEFAULT_BSTAR_TOLERANCE
}

impl SolverConfig {
    pub fn new(r: f64, dist1: ValuationDistribution, dist2: ValuationDistribution) -> Self {
        SolverConfig {
            n: DEFAULT_N,
            r,
            dist1,
            dist2,
            steps: DEFAULT_STEPS,
            bstar_tolerance: DEFAULT_BSTAR_TOLERANCE,
            bstar_bracket: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::invalid(format!("need at least 1 undiscounted bidder, got {}", self.n)));
        }
        if !self.r.is_finite() || !(0.0..1.0).contains(&self.r) {
            return Err(Error::invalid(format!("reduction rate must be in [0, 1), got {}", self.r)));
        }
        if self.steps < 100 {
            return Err(Error::invalid(format!("steps must be >= 100, got {}", self.steps)));
        }
        if !self.bstar_tolerance.is_finite() || self.bstar_tolerance <= 0.0 || self.bstar_tolerance >= 0.1 {
            return Err(Error::invalid(format!(
                "bstar tolerance must be in (0, 0.1), got {}",
                self.bstar_tolerance
            )));
        }
        self.dist1.validate()?;
        self.dist2.validate()?;
        if let Some((lo, hi)) = self.bstar_bracket {
            if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || hi <= lo {
                return Err(Error::invalid(format!("bracket needs 0 < lo < hi, got ({lo}, {hi})")));
            }
        }
        Ok(())
    }

    /// Distributions as the solver actually integrates them: unbounded
    /// log-normals get the default quantile truncation.
    pub fn bounded_dists(&self) -> (ValuationDistribution, ValuationDistribution) {
        (self.dist1.with_bounded_support(), self.dist2.with_bounded_support())
    }
}

/// Backward Euler trajectory, stored from b* (index 0) down to b = 0.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub bids: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    /// v1 hit its support minimum before b reached 0 and was held there.
    pub clamped1: bool,
    pub clamped2: bool,
}

#[derive(Debug, Clone)]
pub enum EulerOutcome {
    Feasible(Trajectory),
    /// Not an error: infeasibility is the signal the b* search binds on.
    Infeasible { step: usize, reason: String },
}

impl EulerOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, EulerOutcome::Feasible(_))
    }
}

struct Ctx {
    n: f64,
    r: f64,
    d1: ValuationDistribution,
    d2: ValuationDistribution,
    sup1: (f64, f64),
    sup2: (f64, f64),
}

impl Ctx {
    fn new(cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let (d1, d2) = cfg.bounded_dists();
        let sup1 = d1.support();
        let sup2 = d2.support();
        Ok(Ctx { n: cfg.n as f64, r: cfg.r, d1, d2, sup1, sup2 })
    }

    fn singular(&self, b: f64, v1: f64, v2: f64, detail: &str) -> Error {
        Error::Singular { b, v1, v2, detail: detail.to_string() }
    }

    /// Margin between the discounted bidder's valuation and what winning
    /// would cost; the shared denominator of both derivative formulas.
    fn price_gap(&self, b: f64, v1: f64, v2: f64) -> Result<f64> {
        let gap = v1 - (1.0 - self.r) * b;
        if !(gap > 0.0) {
            return Err(self.singular(b, v1, v2, "v1 does not exceed the discounted price (1-r) b"));
        }
        Ok(gap)
    }

    fn v1_prime(&self, b: f64, v1: f64, v2: f64, price_gap: f64) -> Result<f64> {
        let v2_gap = v2 - b;
        if !(v2_gap > 0.0) {
            return Err(self.singular(b, v1, v2, "v2 does not exceed the bid"));
        }
        let v1e = v1.clamp(self.sup1.0, self.sup1.1);
        let f1 = self.d1.pdf(v1e);
        if !(f1 > 0.0) {
            return Err(self.singular(b, v1, v2, "density of bidder 1 vanished"));
        }
        let cdf1 = self.d1.cdf(v1e);
        let out = cdf1 / f1 * (1.0 / v2_gap - (self.n - 1.0) / self.n * (1.0 - self.r) / price_gap);
        if !out.is_finite() {
            return Err(self.singular(b, v1, v2, "v1' is not finite"));
        }
        Ok(out)
    }

    fn v2_prime(&self, b: f64, v1: f64, v2: f64, price_gap: f64) -> Result<f64> {
        let v2e = v2.clamp(self.sup2.0, self.sup2.1);
        let f2 = self.d2.pdf(v2e);
        let cdf2 = self.d2.cdf(v2e);
        if !(f2 > 0.0) {
            return Err(self.singular(b, v1, v2, "density of bidder 2 vanished"));
        }
        if !(cdf2 > 0.0) {
            return Err(self.singular(b, v1, v2, "cdf of bidder 2 vanished"));
        }
        let out = (1.0 - self.r) * cdf2 / (self.n * f2 * price_gap);
        if !out.is_finite() {
            return Err(self.singular(b, v1, v2, "v2' is not finite"));
        }
        Ok(out)
    }

    fn rhs(&self, b: f64, v1: f64, v2: f64) -> Result<(f64, f64)> {
        let gap = self.price_gap(b, v1, v2)?;
        let d2 = self.v2_prime(b, v1, v2, gap)?;
        let d1 = self.v1_prime(b, v1, v2, gap)?;
        Ok((d1, d2))
    }

    fn integrate(&self, bstar: f64, steps: usize) -> Result<EulerOutcome> {
        if !bstar.is_finite() || bstar <= 0.0 {
            return Err(Error::invalid(format!("b* candidate must be finite and > 0, got {bstar}")));
        }
        let (vmin1, vmax1) = self.sup1;
        let (vmin2, vmax2) = self.sup2;
        let mut v1 = vmax1;
        let mut v2 = vmax2;
        let mut clamped1 = false;
        let mut clamped2 = false;
        let mut bids = Vec::with_capacity(steps + 1);
        let mut v1s = Vec::with_capacity(steps + 1);
        let mut v2s = Vec::with_capacity(steps + 1);
        bids.push(bstar);
        v1s.push(v1);
        v2s.push(v2);

        let infeasible = |step: usize, reason: String| Ok(EulerOutcome::Infeasible { step, reason });

        for k in 0..steps {
            let b = bstar * (steps - k) as f64 / steps as f64;
            let b_next = bstar * (steps - k - 1) as f64 / steps as f64;
            let db = b - b_next;

            if !(clamped1 && clamped2) {
                let gap = match self.price_gap(b, v1, v2) {
                    Ok(g) => g,
                    Err(e) => return infeasible(k, e.to_string()),
                };
                if !clamped1 {
                    let d1 = match self.v1_prime(b, v1, v2, gap) {
                        Ok(d) => d,
                        Err(e) => return infeasible(k, e.to_string()),
                    };
                    if !(d1 > 0.0) {
                        return infeasible(k, format!("v1 not strictly decreasing (v1' = {d1} at b = {b})"));
                    }
                    let next = v1 - db * d1;
                    if next < vmin1 {
                        // A valuation at the support floor can never bid
                        // past its own discounted value.
                        if b_next <= vmin1 / (1.0 - self.r) {
                            v1 = vmin1;
                            clamped1 = true;
                        } else {
                            return infeasible(
                                k,
                                format!("v1 fell below support minimum {vmin1} while b = {b_next}"),
                            );
                        }
                    } else {
                        v1 = next;
                    }
                }
                if !clamped2 {
                    let d2 = match self.v2_prime(b, v1s[k], v2, gap) {
                        Ok(d) => d,
                        Err(e) => return infeasible(k, e.to_string()),
                    };
                    if !(d2 > 0.0) {
                        return infeasible(k, format!("v2 not strictly decreasing (v2' = {d2} at b = {b})"));
                    }
                    let next = v2 - db * d2;
                    if next < vmin2 {
                        if b_next <= vmin2 {
                            v2 = vmin2;
                            clamped2 = true;
                        } else {
                            return infeasible(
                                k,
                                format!("v2 fell below support minimum {vmin2} while b = {b_next}"),
                            );
                        }
                    } else {
                        v2 = next;
                    }
                }
            }

            bids.push(b_next);
            v1s.push(v1);
            v2s.push(v2);
        }

        Ok(EulerOutcome::Feasible(Trajectory { bids, v1: v1s, v2: v2s, clamped1, clamped2 }))
    }
}

/// Derivatives (v1', v2') of the inverse bid functions at (b, v1, v2).
pub fn ode_rhs(b: f64, v1: f64, v2: f64, cfg: &SolverConfig) -> Result<(f64, f64)> {
    Ctx::new(cfg)?.rhs(b, v1, v2)
}

/// One backward Euler pass from a b* candidate. Infeasibility (monotonicity
/// loss or a singular step) is reported in the outcome, not as an error.
pub fn euler_integrate(bstar_candidate: f64, cfg: &SolverConfig) -> Result<EulerOutcome> {
    Ctx::new(cfg)?.integrate(bstar_candidate, cfg.steps)
}

/// Greatest b* candidate (within the configured relative tolerance) whose
/// backward trajectory stays feasible.
pub fn find_bstar(cfg: &SolverConfig) -> Result<f64> {
    let ctx = Ctx::new(cfg)?;
    let vmax2 = ctx.sup2.1;
    let (mut lo, mut hi) = cfg.bstar_bracket.unwrap_or((1e-6 * vmax2, vmax2));

    match ctx.integrate(lo, cfg.steps)? {
        EulerOutcome::Feasible(_) => {}
        EulerOutcome::Infeasible { step, reason } => {
            return Err(Error::Bracket(format!(
                "lower bracket {lo} is infeasible (step {step}: {reason}); shrink the lower end"
            )));
        }
    }
    if ctx.integrate(hi, cfg.steps)?.is_feasible() {
        return Err(Error::Bracket(format!(
            "upper bracket {hi} is already feasible; widen the upper end"
        )));
    }

    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= cfg.bstar_tolerance * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ctx.integrate(mid, cfg.steps)?.is_feasible() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Bid as a function of valuation, tabulated on the solver grid. Knots are
/// strictly increasing in both coordinates; queries interpolate linearly,
/// and queries outside the table clamp to the end bids.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedBidFunction {
    role: Role,
    points: Vec<(f64, f64)>,
}

impl TabulatedBidFunction {
    pub fn new(role: Role, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("bid function needs at least one knot"));
        }
        for window in points.windows(2) {
            let (v0, b0) = window[0];
            let (v1, b1) = window[1];
            if !(v1 > v0) || !(b1 > b0) {
                return Err(Error::invalid(format!(
                    "bid function knots must strictly increase in both coordinates: ({v0}, {b0}) then ({v1}, {b1})"
                )));
            }
        }
        for &(v, b) in &points {
            if !v.is_finite() || !b.is_finite() || b < 0.0 {
                return Err(Error::invalid(format!("bad bid function knot ({v}, {b})")));
            }
        }
        Ok(TabulatedBidFunction { role, points })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn min_valuation(&self) -> f64 {
        self.points[0].0
    }

    pub fn max_valuation(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    pub fn min_bid(&self) -> f64 {
        self.points[0].1
    }

    pub fn max_bid(&self) -> f64 {
        self.points[self.points.len() - 1].1
    }

    pub fn bid_range(&self) -> f64 {
        self.max_bid() - self.min_bid()
    }

    pub fn bid_at(&self, v: f64) -> f64 {
        interpolate(&self.points, v, |p| p.0, |p| p.1)
    }

    pub fn value_at_bid(&self, b: f64) -> f64 {
        interpolate(&self.points, b, |p| p.1, |p| p.0)
    }
}

fn interpolate(
    points: &[(f64, f64)],
    x: f64,
    key: impl Fn(&(f64, f64)) -> f64,
    val: impl Fn(&(f64, f64)) -> f64,
) -> f64 {
    let first = &points[0];
    let last = &points[points.len() - 1];
    if x <= key(first) {
        return val(first);
    }
    if x >= key(last) {
        return val(last);
    }
    // First index whose key exceeds x; x lies in [idx-1, idx).
    let idx = points.partition_point(|p| key(p) <= x);
    let a = &points[idx - 1];
    let b = &points[idx];
    let t = (x - key(a)) / (key(b) - key(a));
    val(a) + t * (val(b) - val(a))
}

/// Swap a feasible trajectory into (valuation -> bid) tables. Runs of
/// repeated values in either coordinate (possible after support clamping)
/// collapse to their first point in ascending order, keeping the lowest
/// bid for a repeated valuation and the lowest valuation for a repeated
/// bid.
pub fn invert(traj: &Trajectory) -> Result<(TabulatedBidFunction, TabulatedBidFunction)> {
    let build = |vs: &[f64], role: Role| -> Result<TabulatedBidFunction> {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(vs.len());
        for (i, &v) in vs.iter().enumerate().rev() {
            let b = traj.bids[i];
            if let Some(&(pv, pb)) = pts.last() {
                if v <= pv || b <= pb {
                    continue;
                }
            }
            pts.push((v, b));
        }
        TabulatedBidFunction::new(role, pts)
    };
    Ok((build(&traj.v1, Role::Discounted)?, build(&traj.v2, Role::Undiscounted)?))
}

/// Max distance, as a fraction of each role's bid range, between a
/// tabulated bid and the grid-restricted best response against the other
/// side's tabulated behavior. Probes decimate the knots evenly (all knots
/// when `probe_count` covers the table).
pub fn best_response_audit(
    bid1: &TabulatedBidFunction,
    bid2: &TabulatedBidFunction,
    cfg: &SolverConfig,
    probe_count: usize,
) -> Result<(f64, f64)> {
    let ctx = Ctx::new(cfg)?;
    if probe_count == 0 {
        return Err(Error::invalid("probe count must be >= 1"));
    }

    // Win factors on each table's own bid grid. Both grids came from the
    // same trajectory, so value_at_bid lookups land on knots.
    let win1: Vec<f64> = bid1
        .points()
        .iter()
        .map(|&(_, b)| ctx.d2.cdf(bid2.value_at_bid(b)).powi(cfg.n as i32))
        .collect();
    let win2: Vec<f64> = bid2
        .points()
        .iter()
        .map(|&(_, b)| {
            ctx.d1.cdf(bid1.value_at_bid(b)) * ctx.d2.cdf(bid2.value_at_bid(b)).powi(cfg.n as i32 - 1)
        })
        .collect();

    let gap_for = |table: &TabulatedBidFunction, win: &[f64], price_rate: f64| -> f64 {
        let pts = table.points();
        let range = table.bid_range();
        if range <= 0.0 {
            return 0.0;
        }
        let probes: Vec<usize> = if probe_count >= pts.len() {
            (0..pts.len()).collect()
        } else if probe_count == 1 {
            vec![pts.len() - 1]
        } else {
            (0..probe_count)
                .map(|t| (t * (pts.len() - 1)) / (probe_count - 1))
                .collect()
        };
        let mut gap: f64 = 0.0;
        for &i in &probes {
            let (v, tabulated) = pts[i];
            let mut best_j = 0;
            let mut best_u = f64::NEG_INFINITY;
            for (j, &(_, alt)) in pts.iter().enumerate() {
                let u = win[j] * (v - price_rate * alt);
                if u > best_u {
                    best_u = u;
                    best_j = j;
                }
            }
            gap = gap.max((pts[best_j].1 - tabulated).abs() / range);
        }
        gap
    };

    let gap1 = gap_for(bid1, &win1, 1.0 - cfg.r);
    let gap2 = gap_for(bid2, &win2, 1.0);
    Ok((gap1, gap2))
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub bstar: f64,
    pub bid1: TabulatedBidFunction,
    pub bid2: TabulatedBidFunction,
    pub feasible: bool,
    pub best_response_gap1: f64,
    pub best_response_gap2: f64,
    pub clamped1: bool,
    pub clamped2: bool,
}

/// Full pipeline: b* search, final integration, inversion, audit.
pub fn solve(cfg: &SolverConfig) -> Result<SolveReport> {
    let bstar = find_bstar(cfg)?;
    let traj = match euler_integrate(bstar, cfg)? {
        EulerOutcome::Feasible(t) => t,
        EulerOutcome::Infeasible { step, reason } => {
            return Err(Error::Infeasible(format!(
                "selected b* = {bstar} failed final integration at step {step}: {reason}"
            )));
        }
    };
    let (bid1, bid2) = invert(&traj)?;
    let (gap1, gap2) = best_response_audit(&bid1, &bid2, cfg, DEFAULT_AUDIT_PROBES)?;
    Ok(SolveReport {
        bstar,
        bid1,
        bid2,
        feasible: true,
        best_response_gap1: gap1,
        best_response_gap2: gap2,
        clamped1: traj.clamped1,
        clamped2: traj.clamped2,
    })
}
