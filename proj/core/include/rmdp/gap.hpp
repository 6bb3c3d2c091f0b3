#pragma once

#include "rmdp/model.hpp"

namespace rmdp {

struct ContractionResult {
    double value = 0.0; // scalarized against the initial distribution
    numvec v;
    long sweeps = 0;
    bool converged = true;
};

struct GapBudget {
    long max_sweeps = 1000000;
};

/**
 * Worst-case return of a fixed policy: iterates the per-state inner
 * maximization over the uncertainty set to the fixed point, stopping at
 * |dv|_inf < tol * (1 - discount) / (2 * discount). A hit budget returns a
 * flagged partial result instead of running unbounded.
 */
ContractionResult worst_case_value(const RobustMdpInstance& instance, const Policy& x,
                                   double tol, const GapBudget& budget = {});

/// Best response against a fixed kernel: plain value iteration on the
/// resulting nominal MDP (the per-state minimum is attained at an action).
ContractionResult best_response_value(const RobustMdpInstance& instance,
                                      const AdversarialKernel& y, double tol,
                                      const GapBudget& budget = {});

struct GapReport {
    double worst_case_value = 0.0;
    double best_response_value = 0.0;
    double gap = 0.0;
    double tolerance = 0.0;
    long worst_case_sweeps = 0;
    long best_response_sweeps = 0;
    bool converged = true;
    /// Set when the raw gap dips below the -4*tol numerical slack.
    bool negative_gap_flagged = false;
};

/// Certified duality gap of the pair (x, y): worst case of x minus best
/// response to y. The raw (possibly slightly negative) value is retained.
GapReport duality_gap(const RobustMdpInstance& instance, const Policy& x,
                      const AdversarialKernel& y, double tol, const GapBudget& budget = {});

} // namespace rmdp
