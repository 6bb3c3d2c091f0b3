#pragma once

#include "rmdp/common.hpp"
#include "rmdp/model.hpp"
#include "rmdp/prox.hpp"

#include <optional>

namespace rmdp {

/**
 * One row of the per-run trace. Written to CSV with the fixed column set
 * (run_id, method, norm_pair, p, q, S, A, uncertainty_kind, alpha, seed,
 * epoch, iteration, residual_inf, certified_gap, elapsed_seconds); fields
 * without a measurement stay empty in the file, never zero.
 */
struct TraceRow {
    long epoch = 0;
    long iteration = 0;
    std::optional<double> residual_inf;
    std::optional<double> certified_gap;
    double elapsed_seconds = 0.0;
};

struct SolveReport {
    std::string method;
    bool converged = false;
    /// True when a guard path fired (momentum restart, inner budget hit).
    long guard_events = 0;
    double value = 0.0; // scalarized return of the final pair/value vector
    numvec v;
    Policy policy;
    AdversarialKernel kernel;
    std::optional<double> certified_gap;
    double stopping_threshold = 0.0;
    long epochs = 0;
    long iterations = 0; // primal-dual iterations (or Bellman evaluations)
    ProxStats prox_stats;
    double elapsed_seconds = 0.0;
    std::vector<TraceRow> trace;
};

} // namespace rmdp
