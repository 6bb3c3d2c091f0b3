#pragma once

#include "rmdp/common.hpp"
#include "rmdp/uncertainty.hpp"

namespace rmdp {

enum class NormPair { l1l1, l2l2 };

const char* to_string(NormPair np);
NormPair norm_pair_from_string(const std::string& name);

/**
 * Step sizes and diameter bound for one primal-dual run. The product
 * tau * sigma must stay below 1/L^2 for the largest payoff operator norm L
 * the run can visit. beta scales the kernel-side entropy and is only
 * meaningful in the l1 setup (beta = A/2 makes the distance-generating
 * function 1-strongly convex in the l1 norm).
 */
struct ProxSetup {
    NormPair norm_pair = NormPair::l2l2;
    double tau = 0.0;   // policy-side step
    double sigma = 0.0; // kernel-side step
    double omega = 0.0; // diameter bound entering the gap certificate
    double beta = 0.0;  // kernel-side entropy scale (l1 setup)
};

/// Counters surfaced in solve reports.
struct ProxStats {
    long budget_bisections = 0;  // outer multiplier searches
    long simplex_bisections = 0; // inner row-sum searches
    double worst_certificate = 0.0; // largest residual prox-objective bound
};

/// Scratch space reused across prox calls; caller-owned, one per worker.
/// a-f belong to the prox kernels; the named buffers to the step drivers.
/// budget_mu_hint carries the previous budget multiplier between calls to
/// seed a tight bracket (consecutive prox problems move it slowly).
struct ProxWorkspace {
    numvec a, b, c, d, e, f;
    numvec grad_x, grad_y, x_next, y_next, x_extra;
    double budget_mu_hint = -1.0;
};

/**
 * Euclidean projection onto the probability simplex by sort-and-threshold,
 * O(n log n). Ties share a common threshold, so the output is
 * permutation-equivariant.
 */
void project_simplex_l2(cspan z, mspan out, ProxWorkspace& ws);
numvec project_simplex_l2(cspan z);

/**
 * Entropy prox on the simplex: argmin_{x' in simplex} <g, x'> +
 * KL(x', x) / tau, i.e. the normalized tilt x[i] * exp(-tau * g[i]).
 * Zero coordinates of x stay zero.
 */
void prox_simplex_entropy(cspan x, cspan g, double tau, mspan out);
numvec prox_simplex_entropy_copy(cspan x, cspan g, double tau);

/**
 * Principal branch of the Lambert W function on [0, inf): the w >= 0 with
 * w * exp(w) = z, to 1e-12 relative accuracy.
 */
double lambert_w(double z);

/// W(exp(u)) for any real u, evaluated without forming exp(u). Used by the
/// entropic kernel updates whose W arguments overflow double range.
double lambert_w_exp(double u);

/**
 * Kernel-side proximal mappings. All four minimize
 *
 *   <g, y> + D(y, y_ref) / sigma
 *
 * over blocks y with rows on the simplex and the uncertainty budget
 * (ellipsoidal or KL ball of the given radius around y0). D is the squared
 * Euclidean distance (l2 setups) or beta * sum-of-row-KL (l1 setups).
 *
 * The returned block is feasible and its objective exceeds the true
 * minimum by at most tol. A zero budget multiplier is tried first and
 * returned outright when the ball constraint is slack.
 */
void prox_y_ellipsoid_l2(cspan y_ref, cspan g, double sigma, double radius, cspan y0,
                         int num_actions, int num_next, double tol, mspan out,
                         ProxWorkspace& ws, ProxStats* stats = nullptr);

void prox_y_ellipsoid_l1(cspan y_ref, cspan g, double sigma, double beta, double radius,
                         cspan y0, int num_actions, int num_next, double tol, mspan out,
                         ProxWorkspace& ws, ProxStats* stats = nullptr);

void prox_y_kl_l2(cspan y_ref, cspan g, double sigma, double radius, cspan y0,
                  int num_actions, int num_next, double tol, mspan out, ProxWorkspace& ws,
                  ProxStats* stats = nullptr);

void prox_y_kl_l1(cspan y_ref, cspan g, double sigma, double beta, double radius, cspan y0,
                  int num_actions, int num_next, double tol, mspan out, ProxWorkspace& ws,
                  ProxStats* stats = nullptr);

/// Dispatch on (uncertainty kind, norm pair).
void prox_y(UncertaintyKind kind, NormPair norm_pair, cspan y_ref, cspan g,
            const ProxSetup& setup, double radius, cspan y0, int num_actions, int num_next,
            double tol, mspan out, ProxWorkspace& ws, ProxStats* stats = nullptr);

namespace detail {
// Inner solutions at a fixed budget multiplier mu, exposed for the
// monotonicity checks of the outer bisections. Each fills `out` with the
// block minimizing the mu-penalized objective and returns the budget usage
// (ellipsoidal distance or KL) of that block.
double ellipsoid_l2_inner(cspan y_ref, cspan g, double sigma, double mu, cspan y0,
                          int num_actions, int num_next, mspan out, ProxWorkspace& ws);
double ellipsoid_l1_inner(cspan y_ref, cspan g, double sigma, double beta, double mu, cspan y0,
                          int num_actions, int num_next, mspan out, ProxWorkspace& ws,
                          ProxStats* stats);
double kl_l2_inner(cspan y_ref, cspan g, double sigma, double mu, cspan y0, int num_actions,
                   int num_next, mspan out, ProxWorkspace& ws, ProxStats* stats);
double kl_l1_inner(cspan y_ref, cspan g, double sigma, double beta, double mu, cspan y0,
                   int num_actions, int num_next, mspan out, ProxWorkspace& ws);

// Cached-core variants: the fill_* helpers hoist the multiplier-independent
// vectors out of the outer bisection loop.
void fill_ellipsoid_l1_tilt(cspan y_ref, cspan g, double sigma, double beta, numvec& tilt);
double ellipsoid_l1_core(cspan tilt, cspan y_ref, cspan g, double sigma, double beta,
                         double mu, cspan y0, int num_actions, int num_next, mspan out,
                         ProxWorkspace& ws, ProxStats* stats);
void fill_kl_caches(cspan y_ref, cspan g, double sigma, cspan y0, numvec& log_y0, numvec& lin);
double kl_l2_core(cspan log_y0, cspan lin, cspan y_ref, cspan g, double sigma, double mu,
                  cspan y0, int num_actions, int num_next, mspan out, ProxWorkspace& ws,
                  ProxStats* stats);
double kl_l1_core(cspan base, cspan log_y0, double sigma, double beta, double mu, cspan y0,
                  int num_actions, int num_next, mspan out);
} // namespace detail

} // namespace rmdp
