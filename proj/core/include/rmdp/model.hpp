#pragma once

#include "rmdp/common.hpp"
#include "rmdp/uncertainty.hpp"

namespace rmdp {

/**
 * A finite robust MDP: costs c[s,a] >= 0, a row-stochastic nominal kernel
 * y0[s,a,s'], a discount in (0,1), an initial distribution over states and
 * an uncertainty budget per state. All tensors are dense, row-major, in
 * state-action-(next state) order.
 */
struct RobustMdpInstance {
    int num_states = 0;
    int num_actions = 0;
    double discount = 0.0;
    numvec costs;                // S*A
    numvec nominal_kernel;       // S*A*S
    numvec initial_distribution; // S
    UncertaintySpec uncertainty;

    double cost(int s, int a) const { return costs[size_t(s) * num_actions + a]; }
    cspan cost_row(int s) const {
        return cspan(costs).subspan(size_t(s) * num_actions, num_actions);
    }
    cspan nominal_row(int s, int a) const {
        return cspan(nominal_kernel)
            .subspan((size_t(s) * num_actions + a) * num_states, num_states);
    }
    cspan nominal_block(int s) const {
        return cspan(nominal_kernel)
            .subspan(size_t(s) * num_actions * num_states, size_t(num_actions) * num_states);
    }

    double max_cost() const;

    /// Upper bound r_inf / (1 - discount) on any value produced from v = 0.
    double value_upper_bound() const { return max_cost() / (1.0 - discount); }

    /// Checks all structural invariants; throws invalid_input on violation.
    void validate() const;
};

/// Decision rule: one distribution over actions per state (S x A, row-major).
struct Policy {
    int num_states = 0;
    int num_actions = 0;
    numvec rows; // S*A

    cspan row(int s) const { return cspan(rows).subspan(size_t(s) * num_actions, num_actions); }
    mspan row(int s) { return mspan(rows).subspan(size_t(s) * num_actions, num_actions); }
    static Policy uniform(int num_states, int num_actions);
};

/**
 * Adversary's kernel choice: per state a block of A next-state
 * distributions. Rows are kept on the simplex; membership in the
 * uncertainty set is checked separately (intermediate iterates may be
 * queried mid-update).
 */
struct AdversarialKernel {
    int num_states = 0;
    int num_actions = 0;
    numvec blocks; // S*A*S

    cspan row(int s, int a) const {
        return cspan(blocks).subspan((size_t(s) * num_actions + a) * num_states, num_states);
    }
    cspan block(int s) const {
        return cspan(blocks).subspan(size_t(s) * num_actions * num_states,
                                     size_t(num_actions) * num_states);
    }
    mspan block(int s) {
        return mspan(blocks).subspan(size_t(s) * num_actions * num_states,
                                     size_t(num_actions) * num_states);
    }
    static AdversarialKernel nominal(const RobustMdpInstance& instance);
};

/**
 * One-state bilinear form sum_a x[a] * (c[s,a] + discount * <y[a], v>),
 * the stage value of playing x against kernel rows y at state s.
 */
double bilinear_value(const RobustMdpInstance& instance, int s, cspan x_s, cspan y_s,
                      const numvec& v);

/**
 * Gradient block fed to the kernel update: out[a,s'] =
 * discount * x[a] * v[s']. The payoff operator is rank-structured, so this
 * never materializes an A x (A*S) matrix.
 */
void payoff_apply(double discount, const numvec& v, cspan x_s, mspan out);

/// Adjoint of payoff_apply: out[a] = discount * <y[a], v>.
void payoff_apply_adjoint(double discount, const numvec& v, cspan y_s, mspan out);

/**
 * Exact discounted value of the stationary pair (x, y): solves
 * (I - discount * P) v = c_x where P[s,s'] = sum_a x[s,a] y[s,a,s'].
 * Direct dense factorization up to 2000 states, fixed-point iteration
 * beyond.
 */
numvec policy_value(const RobustMdpInstance& instance, const Policy& x,
                    const AdversarialKernel& y);

/// Scalarizes a value vector against the initial distribution.
double return_value(const RobustMdpInstance& instance, const numvec& v);

} // namespace rmdp
