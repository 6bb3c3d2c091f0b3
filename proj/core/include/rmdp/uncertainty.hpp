#pragma once

#include "rmdp/common.hpp"

namespace rmdp {

enum class UncertaintyKind { ellipsoidal, kullback_leibler };

const char* to_string(UncertaintyKind kind);
UncertaintyKind uncertainty_kind_from_string(const std::string& name);

/**
 * Per-state uncertainty budget shared by all actions of a state:
 * either sum_a (1/2)||y_a - y0_a||_2^2 <= radius (ellipsoidal) or
 * sum_a KL(y_a, y0_a) <= radius (Kullback-Leibler). The center is always
 * the instance's nominal kernel block for the state.
 */
struct UncertaintySpec {
    UncertaintyKind kind = UncertaintyKind::ellipsoidal;
    double radius = 0.0;
};

/**
 * Distance of the block `y` (A rows of length S, row-major) from the
 * nominal block `y0` in the divergence the kind selects. Convention: a KL
 * term with y[i] = 0 contributes zero.
 *
 * Throws numerical_failure naming the offending (action, next-state) entry
 * when a KL block puts mass outside the nominal support.
 */
double set_distance(const UncertaintySpec& spec, cspan y0, cspan y, int num_actions,
                    int num_next);

/// Feasibility gate: distance within radius + tol and every row on the
/// simplex within tol. Violations (including KL support violations) return
/// false rather than throw.
bool is_member(const UncertaintySpec& spec, cspan y0, cspan y, int num_actions, int num_next,
               double tol);

struct LinearMaxResult {
    numvec maximizer;   // A x S block, feasible
    double value = 0.0; // <direction, maximizer>
    long bisection_iterations = 0;
};

/**
 * Maximizes <direction, y> over the uncertainty set around y0. Solved by
 * bisection on the budget multiplier; per action the inner problem is a
 * Euclidean simplex projection (ellipsoidal) or an exponential tilt of the
 * nominal row (KL). The returned value exceeds the optimum by at most tol.
 */
LinearMaxResult linear_max_over_set(const UncertaintySpec& spec, cspan y0, cspan direction,
                                    int num_actions, int num_next, double tol);

} // namespace rmdp
