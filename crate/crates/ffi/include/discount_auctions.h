#ifndef DISCOUNT_AUCTIONS_H
#define DISCOUNT_AUCTIONS_H

/* Generated by cbindgen from discount-auctions-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which bidder a bid function belongs to.
 */
typedef enum DaRole {
  DA_ROLE_DISCOUNTED = 0,
  DA_ROLE_UNDISCOUNTED = 1,
} DaRole;

/**
 * Result of every fallible call.
 */
typedef enum DaStatus {
  /**
   * Success.
   */
  DA_STATUS_OK = 0,
  /**
   * A parameter was outside its documented domain, or a pointer was null.
   */
  DA_STATUS_INVALID_INPUT = 1,
  /**
   * The numerical search failed (singular state or infeasible bracket).
   */
  DA_STATUS_NUMERICAL = 2,
  /**
   * A defect in the library itself; the message names the panic.
   */
  DA_STATUS_INTERNAL = 3,
} DaStatus;

/**
 * A valuation distribution.
 */
typedef struct DaDistribution DaDistribution;

/**
 * A solved equilibrium: both bid functions plus the audit record.
 */
typedef struct DaSolveReport DaSolveReport;

/**
 * Market configuration for the equilibrium solver.
 */
typedef struct DaSolverConfig DaSolverConfig;

/**
 * Expected per-auction outcome statistics. Win rate, surplus, and cost for
 * the undiscounted side are per bidder.
 */
typedef struct DaOutcomeStats {
  double expected_revenue;
  double efficiency;
  double win_rate_discounted;
  double win_rate_other;
  double surplus_discounted;
  double surplus_other;
  double cost_discounted;
  double cost_other;
} DaOutcomeStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the current thread's most recent failure. Never null; empty
 * before the first failure. The pointer is invalidated by the thread's
 * next call into the library.
 */
const char *da_last_error(void);

/**
 * Uniform valuations on [lo, hi].
 */
enum DaStatus da_dist_uniform(double lo, double hi, struct DaDistribution **out);

/**
 * Log-normal valuations with log standard deviation `sigma` and median
 * `scale`.
 */
enum DaStatus da_dist_log_normal(double sigma, double scale, struct DaDistribution **out);

/**
 * Log-normal valuations restricted to the quantile band
 * [lower_q, upper_q].
 */
enum DaStatus da_dist_truncated_log_normal(double sigma,
                                           double scale,
                                           double lower_q,
                                           double upper_q,
                                           struct DaDistribution **out);

void da_dist_free(struct DaDistribution *dist);

/**
 * New solver configuration: one discounted bidder under post-auction
 * multiplicative rate `r`, against the default count of undiscounted
 * bidders. Both distributions are copied.
 */
enum DaStatus da_config_new(double r,
                            const struct DaDistribution *discounted,
                            const struct DaDistribution *undiscounted,
                            struct DaSolverConfig **out);

/**
 * Count of undiscounted bidders.
 */
enum DaStatus da_config_set_undiscounted_count(struct DaSolverConfig *config, size_t n);

enum DaStatus da_config_set_rate(struct DaSolverConfig *config, double r);

enum DaStatus da_config_set_steps(struct DaSolverConfig *config, size_t steps);

enum DaStatus da_config_set_bstar_tolerance(struct DaSolverConfig *config, double tolerance);

/**
 * Initial search bracket for the common maximum bid.
 */
enum DaStatus da_config_set_bracket(struct DaSolverConfig *config, double lo, double hi);

void da_config_free(struct DaSolverConfig *config);

/**
 * Solves for the equilibrium bid functions.
 */
enum DaStatus da_solve(const struct DaSolverConfig *config, struct DaSolveReport **out);

void da_report_free(struct DaSolveReport *report);

/**
 * The common maximum bid; NaN if `report` is null.
 */
double da_report_bstar(const struct DaSolveReport *report);

bool da_report_feasible(const struct DaSolveReport *report);

/**
 * Best-response audit gap for one role, as a fraction of the bid range;
 * NaN if `report` is null.
 */
double da_report_audit_gap(const struct DaSolveReport *report, enum DaRole role);

/**
 * Number of knots in one role's tabulated bid function; 0 if `report` is
 * null.
 */
size_t da_report_knot_count(const struct DaSolveReport *report, enum DaRole role);

/**
 * Copies up to `capacity` knots of one role's bid function into the given
 * arrays (either may be null to skip it) and returns the total knot count.
 */
size_t da_report_copy_knots(const struct DaSolveReport *report,
                            enum DaRole role,
                            double *valuations,
                            double *bids,
                            size_t capacity);

/**
 * Equilibrium bid at a valuation, clamped to the table's range; NaN if
 * `report` is null.
 */
double da_report_bid_at(const struct DaSolveReport *report, enum DaRole role, double valuation);

/**
 * Valuation that bids a given amount, clamped to the table's range; NaN if
 * `report` is null.
 */
double da_report_value_at_bid(const struct DaSolveReport *report, enum DaRole role, double bid);

/**
 * Expected outcome statistics by numerical integration.
 */
enum DaStatus da_outcomes(const struct DaSolveReport *report, struct DaOutcomeStats *out);

/**
 * Outcome statistics by Monte Carlo simulation. `out_std_errors` may be
 * null; otherwise it receives the standard error of each statistic.
 */
enum DaStatus da_outcomes_simulated(const struct DaSolveReport *report,
                                    uint64_t samples,
                                    uint64_t seed,
                                    struct DaOutcomeStats *out,
                                    struct DaOutcomeStats *out_std_errors);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DISCOUNT_AUCTIONS_H */
