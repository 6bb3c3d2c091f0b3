#pragma once

#include "rmdp/model.hpp"
#include "rmdp/prox.hpp"
#include "rmdp/report.hpp"

#include <functional>
#include <optional>

namespace rmdp {

/**
 * Polynomial schedules: iterate weight omega_t = t^p and epoch length
 * T_ell = ell^q. Epoch boundaries tau_ell = T_1 + ... + T_{ell-1} are kept
 * in 64-bit integers; weight sums use incremental convex combinations so
 * long runs cannot overflow.
 */
struct Schedule {
    int p = 2;
    int q = 2;
    long max_epochs = 100000;
    long gap_check_period = 5; // epochs between duality-gap evaluations
    double epsilon = 0.1;      // target accuracy; the run stops at gap <= epsilon/2
};

/**
 * Step sizes, diameter bound and entropy scale for a whole run, from the
 * worst-case payoff norm over every value vector the run can visit
 * (|v|_inf <= r_inf/(1-discount) when started from zero). Verifies the
 * product condition tau * sigma * L^2 <= 1 and rejects configurations that
 * break it.
 */
ProxSetup make_step_sizes(const RobustMdpInstance& instance, NormPair norm_pair);

/// Primal-dual iterates of one state.
struct PdaState {
    numvec x; // A
    numvec y; // A*S
};

/**
 * One primal-dual step at state s: a policy prox step against the cost
 * plus transition gradient, then a kernel prox step at the extrapolated
 * policy point 2*x_new - x_old.
 */
void pda_step(const RobustMdpInstance& instance, int s, const ProxSetup& setup,
              const numvec& v, PdaState& state, ProxWorkspace& ws, ProxStats* stats = nullptr,
              double prox_tol = 1e-10);

/// Per-epoch snapshot retained when FomViOptions::record_epochs is set.
struct EpochRecord {
    numvec v;        // value vector entering the epoch
    Policy xbar;     // epoch-local weighted average
    AdversarialKernel ybar;
    double residual_inf = 0.0;
};

struct FomViOptions {
    /// Uniform initial iterates by default; a seed switches to random rows.
    std::optional<uint64_t> random_init_seed;
    double max_wall_seconds = std::numeric_limits<double>::infinity();
    bool stop_on_gap = true; // disable to run max_epochs unconditionally
    double gap_eval_tol_factor = 0.05; // evaluator tolerance = factor * epsilon
    bool record_epochs = false;
    bool record_iterates = false; // full iterate history, small instances only
};

struct FomViDebugLog {
    std::vector<EpochRecord> epochs;
    // Flattened iterate history: per iteration, all states' x then y.
    std::vector<numvec> iterate_x;
    std::vector<numvec> iterate_y;
    std::vector<double> weights;
};

/**
 * The interleaved primal-dual / approximate value-iteration solver.
 * Runs epochs of PDA iterations per state with warm starts, updates the
 * value vector from the epoch averages, and stops once the certified
 * duality gap of the global averaged pair drops below epsilon/2.
 */
SolveReport run_fom_vi(const RobustMdpInstance& instance, NormPair norm_pair,
                       const Schedule& schedule, const FomViOptions& options = {},
                       FomViDebugLog* debug = nullptr);

} // namespace rmdp
