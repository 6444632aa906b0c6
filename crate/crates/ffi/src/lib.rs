//! C ABI for the discount-auctions library.
//!
//! Every handle type is opaque and owned by the library; each constructor
//! has a matching `_free`, and passing null to a `_free` is a no-op.
//! Fallible entry points return a [`DaStatus`]; on failure the out-params
//! are left untouched and `da_last_error` carries a message for the calling
//! thread, valid until that thread's next library call.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use discount_auctions::dist::ValuationDistribution;
use discount_auctions::outcomes::{evaluate_outcomes, OutcomeConfig, OutcomeMethod};
use discount_auctions::solver::{solve, Role, SolveReport, SolverConfig, TabulatedBidFunction};
use discount_auctions::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DaStatus {
    /// Success.
    Ok = 0,
    /// A parameter was outside its documented domain, or a pointer was null.
    InvalidInput = 1,
    /// The numerical search failed (singular state or infeasible bracket).
    Numerical = 2,
    /// A defect in the library itself; the message names the panic.
    Internal = 3,
}

/// Which bidder a bid function belongs to.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DaRole {
    Discounted = 0,
    Undiscounted = 1,
}

impl From<DaRole> for Role {
    fn from(role: DaRole) -> Role {
        match role {
            DaRole::Discounted => Role::Discounted,
            DaRole::Undiscounted => Role::Undiscounted,
        }
    }
}

/// A valuation distribution.
pub struct DaDistribution(ValuationDistribution);

/// Market configuration for the equilibrium solver.
pub struct DaSolverConfig(SolverConfig);

/// A solved equilibrium: both bid functions plus the audit record.
pub struct DaSolveReport {
    report: SolveReport,
    config: SolverConfig,
}

/// Expected per-auction outcome statistics. Win rate, surplus, and cost for
/// the undiscounted side are per bidder.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DaOutcomeStats {
    pub expected_revenue: f64,
    pub efficiency: f64,
    pub win_rate_discounted: f64,
    pub win_rate_other: f64,
    pub surplus_discounted: f64,
    pub surplus_other: f64,
    pub cost_discounted: f64,
    pub cost_other: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(err: &Error) -> DaStatus {
    set_error(&err.to_string());
    if err.is_numerical() {
        DaStatus::Numerical
    } else {
        DaStatus::InvalidInput
    }
}

fn null_pointer(name: &str) -> DaStatus {
    set_error(&format!("{name} must not be null"));
    DaStatus::InvalidInput
}

/// Runs a body behind a panic guard so unwinding never crosses the ABI.
fn guarded(body: impl FnOnce() -> DaStatus) -> DaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(&format!("internal panic: {message}"));
            DaStatus::Internal
        }
    }
}

/// Message for the current thread's most recent failure. Never null; empty
/// before the first failure. The pointer is invalidated by the thread's
/// next call into the library.
#[no_mangle]
pub extern "C" fn da_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

fn dist_out(
    out: *mut *mut DaDistribution,
    built: discount_auctions::Result<ValuationDistribution>,
) -> DaStatus {
    if out.is_null() {
        return null_pointer("out");
    }
    match built {
        Ok(dist) => {
            unsafe { *out = Box::into_raw(Box::new(DaDistribution(dist))) };
            DaStatus::Ok
        }
        Err(err) => fail(&err),
    }
}

/// Uniform valuations on [lo, hi].
#[no_mangle]
pub unsafe extern "C" fn da_dist_uniform(
    lo: f64,
    hi: f64,
    out: *mut *mut DaDistribution,
) -> DaStatus {
    guarded(|| dist_out(out, ValuationDistribution::uniform(lo, hi)))
}

/// Log-normal valuations with log standard deviation `sigma` and median
/// `scale`.
#[no_mangle]
pub unsafe extern "C" fn da_dist_log_normal(
    sigma: f64,
    scale: f64,
    out: *mut *mut DaDistribution,
) -> DaStatus {
    guarded(|| dist_out(out, ValuationDistribution::log_normal(sigma, scale)))
}

/// Log-normal valuations restricted to the quantile band
/// [lower_q, upper_q].
#[no_mangle]
pub unsafe extern "C" fn da_dist_truncated_log_normal(
    sigma: f64,
    scale: f64,
    lower_q: f64,
    upper_q: f64,
    out: *mut *mut DaDistribution,
) -> DaStatus {
    guarded(|| {
        dist_out(
            out,
            ValuationDistribution::truncated_log_normal(sigma, scale, lower_q, upper_q),
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn da_dist_free(dist: *mut DaDistribution) {
    if !dist.is_null() {
        drop(unsafe { Box::from_raw(dist) });
    }
}

/// New solver configuration: one discounted bidder under post-auction
/// multiplicative rate `r`, against the default count of undiscounted
/// bidders. Both distributions are copied.
#[no_mangle]
pub unsafe extern "C" fn da_config_new(
    r: f64,
    discounted: *const DaDistribution,
    undiscounted: *const DaDistribution,
    out: *mut *mut DaSolverConfig,
) -> DaStatus {
    guarded(|| {
        if discounted.is_null() {
            return null_pointer("discounted");
        }
        if undiscounted.is_null() {
            return null_pointer("undiscounted");
        }
        if out.is_null() {
            return null_pointer("out");
        }
        let cfg = SolverConfig::new(
            r,
            unsafe { &*discounted }.0.clone(),
            unsafe { &*undiscounted }.0.clone(),
        );
        if let Err(err) = cfg.validate() {
            return fail(&err);
        }
        unsafe { *out = Box::into_raw(Box::new(DaSolverConfig(cfg))) };
        DaStatus::Ok
    })
}

fn with_config(
    config: *mut DaSolverConfig,
    mutate: impl FnOnce(&mut SolverConfig),
) -> DaStatus {
    if config.is_null() {
        return null_pointer("config");
    }
    let cfg = unsafe { &mut *config };
    mutate(&mut cfg.0);
    match cfg.0.validate() {
        Ok(()) => DaStatus::Ok,
        Err(err) => fail(&err),
    }
}

/// Count of undiscounted bidders.
#[no_mangle]
pub unsafe extern "C" fn da_config_set_undiscounted_count(
    config: *mut DaSolverConfig,
    n: usize,
) -> DaStatus {
    guarded(|| with_config(config, |cfg| cfg.n = n))
}

#[no_mangle]
pub unsafe extern "C" fn da_config_set_rate(config: *mut DaSolverConfig, r: f64) -> DaStatus {
    guarded(|| with_config(config, |cfg| cfg.r = r))
}

#[no_mangle]
pub unsafe extern "C" fn da_config_set_steps(
    config: *mut DaSolverConfig,
    steps: usize,
) -> DaStatus {
    guarded(|| with_config(config, |cfg| cfg.steps = steps))
}

#[no_mangle]
pub unsafe extern "C" fn da_config_set_bstar_tolerance(
    config: *mut DaSolverConfig,
    tolerance: f64,
) -> DaStatus {
    guarded(|| with_config(config, |cfg| cfg.bstar_tolerance = tolerance))
}

/// Initial search bracket for the common maximum bid.
#[no_mangle]
pub unsafe extern "C" fn da_config_set_bracket(
    config: *mut DaSolverConfig,
    lo: f64,
    hi: f64,
) -> DaStatus {
    guarded(|| with_config(config, |cfg| cfg.bstar_bracket = Some((lo, hi))))
}

#[no_mangle]
pub unsafe extern "C" fn da_config_free(config: *mut DaSolverConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Solves for the equilibrium bid functions.
#[no_mangle]
pub unsafe extern "C" fn da_solve(
    config: *const DaSolverConfig,
    out: *mut *mut DaSolveReport,
) -> DaStatus {
    guarded(|| {
        if config.is_null() {
            return null_pointer("config");
        }
        if out.is_null() {
            return null_pointer("out");
        }
        let cfg = unsafe { &*config }.0.clone();
        match solve(&cfg) {
            Ok(report) => {
                unsafe {
                    *out = Box::into_raw(Box::new(DaSolveReport {
                        report,
                        config: cfg,
                    }))
                };
                DaStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn da_report_free(report: *mut DaSolveReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

/// The common maximum bid; NaN if `report` is null.
#[no_mangle]
pub unsafe extern "C" fn da_report_bstar(report: *const DaSolveReport) -> f64 {
    if report.is_null() {
        return f64::NAN;
    }
    unsafe { &*report }.report.bstar
}

#[no_mangle]
pub unsafe extern "C" fn da_report_feasible(report: *const DaSolveReport) -> bool {
    if report.is_null() {
        return false;
    }
    unsafe { &*report }.report.feasible
}

/// Best-response audit gap for one role, as a fraction of the bid range;
/// NaN if `report` is null.
#[no_mangle]
pub unsafe extern "C" fn da_report_audit_gap(
    report: *const DaSolveReport,
    role: DaRole,
) -> f64 {
    if report.is_null() {
        return f64::NAN;
    }
    let rep = &unsafe { &*report }.report;
    match role {
        DaRole::Discounted => rep.best_response_gap1,
        DaRole::Undiscounted => rep.best_response_gap2,
    }
}

fn table_of(report: &DaSolveReport, role: DaRole) -> &TabulatedBidFunction {
    match role {
        DaRole::Discounted => &report.report.bid1,
        DaRole::Undiscounted => &report.report.bid2,
    }
}

/// Number of knots in one role's tabulated bid function; 0 if `report` is
/// null.
#[no_mangle]
pub unsafe extern "C" fn da_report_knot_count(
    report: *const DaSolveReport,
    role: DaRole,
) -> usize {
    if report.is_null() {
        return 0;
    }
    table_of(unsafe { &*report }, role).points().len()
}

/// Copies up to `capacity` knots of one role's bid function into the given
/// arrays (either may be null to skip it) and returns the total knot count.
#[no_mangle]
pub unsafe extern "C" fn da_report_copy_knots(
    report: *const DaSolveReport,
    role: DaRole,
    valuations: *mut f64,
    bids: *mut f64,
    capacity: usize,
) -> usize {
    if report.is_null() {
        return 0;
    }
    let points = table_of(unsafe { &*report }, role).points();
    let count = points.len().min(capacity);
    for (i, &(v, b)) in points.iter().take(count).enumerate() {
        if !valuations.is_null() {
            unsafe { *valuations.add(i) = v };
        }
        if !bids.is_null() {
            unsafe { *bids.add(i) = b };
        }
    }
    points.len()
}

/// Equilibrium bid at a valuation, clamped to the table's range; NaN if
/// `report` is null.
#[no_mangle]
pub unsafe extern "C" fn da_report_bid_at(
    report: *const DaSolveReport,
    role: DaRole,
    valuation: f64,
) -> f64 {
    if report.is_null() {
        return f64::NAN;
    }
    table_of(unsafe { &*report }, role).bid_at(valuation)
}

/// Valuation that bids a given amount, clamped to the table's range; NaN if
/// `report` is null.
#[no_mangle]
pub unsafe extern "C" fn da_report_value_at_bid(
    report: *const DaSolveReport,
    role: DaRole,
    bid: f64,
) -> f64 {
    if report.is_null() {
        return f64::NAN;
    }
    table_of(unsafe { &*report }, role).value_at_bid(bid)
}

fn outcome_call(
    report: *const DaSolveReport,
    method: OutcomeMethod,
    out: *mut DaOutcomeStats,
    out_std_errors: *mut DaOutcomeStats,
) -> DaStatus {
    if report.is_null() {
        return null_pointer("report");
    }
    if out.is_null() {
        return null_pointer("out");
    }
    let rep = unsafe { &*report };
    let cfg = OutcomeConfig::from_solve(&rep.report, &rep.config).with_method(method);
    match evaluate_outcomes(&cfg) {
        Ok(stats) => {
            unsafe {
                *out = DaOutcomeStats {
                    expected_revenue: stats.expected_revenue,
                    efficiency: stats.efficiency,
                    win_rate_discounted: stats.win_rate_discounted,
                    win_rate_other: stats.win_rate_other,
                    surplus_discounted: stats.surplus_discounted,
                    surplus_other: stats.surplus_other,
                    cost_discounted: stats.cost_discounted,
                    cost_other: stats.cost_other,
                };
            }
            if !out_std_errors.is_null() {
                // Integration is exact up to the grid; its errors read as 0.
                let packed = match &stats.std_errors {
                    Some(se) => DaOutcomeStats {
                        expected_revenue: se.expected_revenue,
                        efficiency: se.efficiency,
                        win_rate_discounted: se.win_rate_discounted,
                        win_rate_other: se.win_rate_other,
                        surplus_discounted: se.surplus_discounted,
                        surplus_other: se.surplus_other,
                        cost_discounted: se.cost_discounted,
                        cost_other: se.cost_other,
                    },
                    None => DaOutcomeStats::default(),
                };
                unsafe { *out_std_errors = packed };
            }
            DaStatus::Ok
        }
        Err(err) => fail(&err),
    }
}

/// Expected outcome statistics by numerical integration.
#[no_mangle]
pub unsafe extern "C" fn da_outcomes(
    report: *const DaSolveReport,
    out: *mut DaOutcomeStats,
) -> DaStatus {
    guarded(|| outcome_call(report, OutcomeMethod::FullIntegration, out, std::ptr::null_mut()))
}

/// Outcome statistics by Monte Carlo simulation. `out_std_errors` may be
/// null; otherwise it receives the standard error of each statistic.
#[no_mangle]
pub unsafe extern "C" fn da_outcomes_simulated(
    report: *const DaSolveReport,
    samples: u64,
    seed: u64,
    out: *mut DaOutcomeStats,
    out_std_errors: *mut DaOutcomeStats,
) -> DaStatus {
    guarded(|| {
        outcome_call(
            report,
            OutcomeMethod::MonteCarlo { samples, seed },
            out,
            out_std_errors,
        )
    })
}
