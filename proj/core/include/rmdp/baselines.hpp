#pragma once

#include "rmdp/model.hpp"
#include "rmdp/prox.hpp"
#include "rmdp/report.hpp"

#include <optional>

namespace rmdp {

/// Result of one state's min-max stage problem.
struct BellmanResult {
    double value = 0.0; // worst-case response value at the returned policy row
    numvec x;           // A, on the simplex
    numvec y;           // A*S, feasible block
    double gap = 0.0;   // certified saddle gap at (x, y)
    bool converged = true;
    long iterations = 0;
};

struct BellmanOptions {
    long max_iterations = 4000000;
    /// Warm-start iterates; overwritten with the final pair when non-null.
    numvec* warm_x = nullptr;
    numvec* warm_y = nullptr;
    ProxStats* stats = nullptr;
};

/**
 * Robust Bellman update at state s for value vector v: solves the stage
 * saddle problem min over policy rows of the worst-case action value, by
 * primal-dual iterations with restarted averaging. The returned gap is
 * certified against the exact inner maximization and the pure-action
 * minimum, independent of the iteration path.
 */
BellmanResult robust_bellman(const RobustMdpInstance& instance, const numvec& v, int s,
                             double tol, const BellmanOptions& options = {});

struct ViOptions {
    long max_sweeps = 1000000;
    double max_wall_seconds = std::numeric_limits<double>::infinity();
    int anderson_memory = 5;
    /// Inner stage-problem tolerance; defaults to
    /// epsilon * (1 - discount) / (20 * discount).
    std::optional<double> inner_tol;
};

/// Fixed-point sweeps v <- F(v) with the stopping rule
/// |v_{t+1} - v_t|_inf <= epsilon * (1 - discount) / (2 * discount).
SolveReport vi_robust(const RobustMdpInstance& instance, double epsilon,
                      const ViOptions& options = {});

/// In-sweep (ascending state order) variant of vi_robust.
SolveReport gs_vi(const RobustMdpInstance& instance, double epsilon,
                  const ViOptions& options = {});

/// Momentum-accelerated sweeps with a divergence guard that falls back to
/// plain fixed-point steps when the momentum iterate overshoots.
SolveReport avi(const RobustMdpInstance& instance, double epsilon,
                const ViOptions& options = {});

/// Memory-m fixed-point mixing: the next iterate combines the last m+1
/// Bellman images with weights minimizing the combined residual.
SolveReport anderson_vi(const RobustMdpInstance& instance, double epsilon,
                        const ViOptions& options = {});

/// Equality-constrained least-squares weights for the residual matrix
/// (columns = last residuals). Tikhonov-damped; exposed for tests.
numvec anderson_weights(const std::vector<numvec>& residuals, double damping = 1e-10);

/// Stopping threshold shared by all the value-iteration baselines.
inline double vi_stopping_threshold(double epsilon, double discount) {
    return epsilon * (1.0 - discount) / (2.0 * discount);
}

/// Momentum coefficients used by avi.
inline double avi_alpha(double discount) { return 1.0 / (1.0 + discount); }
inline double avi_gamma(double discount) {
    return (1.0 - std::sqrt(1.0 - discount * discount)) / discount;
}

} // namespace rmdp
