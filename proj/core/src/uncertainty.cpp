#include "rmdp/uncertainty.hpp"

#include "rmdp/prox.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace rmdp {

double set_distance(const UncertaintySpec& spec, cspan y0, cspan y, int num_actions,
                    int num_next) {
    if (y0.size() != y.size() || y.size() != size_t(num_actions) * num_next)
        throw invalid_input("set_distance: block size mismatch");
    double total = 0.0;
    if (spec.kind == UncertaintyKind::ellipsoidal) {
        for (size_t i = 0; i < y.size(); i++) {
            const double d = y[i] - y0[i];
            total += 0.5 * d * d;
        }
        return total;
    }
    for (int a = 0; a < num_actions; a++)
        for (int sp = 0; sp < num_next; sp++) {
            const size_t i = size_t(a) * num_next + sp;
            if (y[i] <= 0.0) continue;
            if (y0[i] <= 0.0) {
                std::ostringstream msg;
                msg << "KL block puts mass outside the nominal support at action " << a
                    << ", next state " << sp;
                throw invalid_input(msg.str());
            }
            total += y[i] * std::log(y[i] / y0[i]);
        }
    return total;
}

bool is_member(const UncertaintySpec& spec, cspan y0, cspan y, int num_actions, int num_next,
               double tol) {
    if (y0.size() != y.size() || y.size() != size_t(num_actions) * num_next) return false;
    for (int a = 0; a < num_actions; a++) {
        double row_sum = 0.0;
        for (int sp = 0; sp < num_next; sp++) {
            const double p = y[size_t(a) * num_next + sp];
            if (!(p >= -tol) || !std::isfinite(p)) return false;
            row_sum += p;
        }
        if (std::abs(row_sum - 1.0) > tol) return false;
    }
    double dist = 0.0;
    if (spec.kind == UncertaintyKind::ellipsoidal) {
        for (size_t i = 0; i < y.size(); i++) {
            const double d = y[i] - y0[i];
            dist += 0.5 * d * d;
        }
    } else {
        for (size_t i = 0; i < y.size(); i++) {
            if (y[i] <= 0.0) continue;
            if (y0[i] <= 0.0) {
                if (y[i] > tol) return false;
                continue; // tolerated dust outside the support
            }
            dist += y[i] * std::log(y[i] / y0[i]);
        }
    }
    return dist <= spec.radius + tol;
}

namespace {

// Maximizer of <d, y> over the mu-penalized Lagrangian, one action row at a
// time. Returns the budget usage of the block written to `out`.
double linear_max_inner(const UncertaintySpec& spec, cspan y0, cspan direction, int num_actions,
                        int num_next, double mu, mspan out, ProxWorkspace& ws) {
    const int S = num_next;
    ws.a.resize(S);
    for (int a = 0; a < num_actions; a++) {
        cspan d = direction.subspan(size_t(a) * S, S);
        cspan center = y0.subspan(size_t(a) * S, S);
        mspan row = out.subspan(size_t(a) * S, S);
        if (spec.kind == UncertaintyKind::ellipsoidal) {
            for (int j = 0; j < S; j++)
                ws.a[j] = center[j] + d[j] / mu;
            project_simplex_l2(ws.a, row, ws);
        } else {
            // Exponential tilt of the nominal row, max-shifted on its support.
            double shift = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < S; j++)
                if (center[j] > 0.0) shift = std::max(shift, d[j]);
            double total = 0.0;
            for (int j = 0; j < S; j++) {
                row[j] = center[j] > 0.0 ? center[j] * std::exp((d[j] - shift) / mu) : 0.0;
                total += row[j];
            }
            for (int j = 0; j < S; j++)
                row[j] /= total;
        }
    }
    double usage = 0.0;
    if (spec.kind == UncertaintyKind::ellipsoidal) {
        for (size_t i = 0; i < out.size(); i++) {
            const double dev = out[i] - y0[i];
            usage += 0.5 * dev * dev;
        }
    } else {
        for (size_t i = 0; i < out.size(); i++)
            if (out[i] > 0.0) usage += out[i] * std::log(out[i] / y0[i]);
    }
    return usage;
}

} // namespace

LinearMaxResult linear_max_over_set(const UncertaintySpec& spec, cspan y0, cspan direction,
                                    int num_actions, int num_next, double tol) {
    const int A = num_actions;
    const int S = num_next;
    if (y0.size() != size_t(A) * S || direction.size() != size_t(A) * S)
        throw invalid_input("linear_max_over_set: block size mismatch");
    for (double d : direction)
        if (!std::isfinite(d)) throw invalid_input("linear_max_over_set: non-finite direction");

    LinearMaxResult result;
    result.maximizer.assign(y0.begin(), y0.end());

    if (spec.radius <= 0.0 || linf_norm(direction) == 0.0) {
        result.value = dot(direction, result.maximizer);
        return result;
    }

    // Budget-free optimum: all mass per action on the best next state
    // (restricted to the nominal support for KL rows). Feasible means done.
    numvec vertex(size_t(A) * S, 0.0);
    const bool kl = spec.kind == UncertaintyKind::kullback_leibler;
    for (int a = 0; a < A; a++) {
        int best = -1;
        for (int j = 0; j < S; j++) {
            if (kl && y0[size_t(a) * S + j] <= 0.0) continue;
            if (best < 0 || direction[size_t(a) * S + j] > direction[size_t(a) * S + best])
                best = j;
        }
        vertex[size_t(a) * S + best] = 1.0;
    }
    double vertex_usage = 0.0;
    if (kl) {
        for (size_t i = 0; i < vertex.size(); i++)
            if (vertex[i] > 0.0) vertex_usage += -std::log(y0[i]);
    } else {
        for (size_t i = 0; i < vertex.size(); i++) {
            const double dev = vertex[i] - y0[i];
            vertex_usage += 0.5 * dev * dev;
        }
    }
    if (vertex_usage <= spec.radius) {
        result.maximizer = std::move(vertex);
        result.value = dot(direction, result.maximizer);
        return result;
    }

    ProxWorkspace ws;
    numvec candidate(size_t(A) * S, 0.0);
    mspan cand(candidate);

    // Bracket the multiplier: usage(mu) decreases from the vertex level
    // towards zero, so double until feasible and halve until infeasible.
    double mu_hi = 1.0;
    double usage_hi = linear_max_inner(spec, y0, direction, A, S, mu_hi, cand, ws);
    long doublings = 0;
    while (usage_hi > spec.radius) {
        mu_hi *= 2.0;
        usage_hi = linear_max_inner(spec, y0, direction, A, S, mu_hi, cand, ws);
        if (++doublings > 200)
            throw numerical_failure("linear_max_over_set: no feasible multiplier after 200 "
                                    "doublings");
    }
    result.maximizer.assign(candidate.begin(), candidate.end());
    double value_hi = dot(direction, result.maximizer);
    double best_upper = value_hi + mu_hi * (spec.radius - usage_hi);

    double mu_lo = mu_hi;
    double usage_lo = usage_hi;
    while (usage_lo < spec.radius) {
        mu_lo *= 0.5;
        usage_lo = linear_max_inner(spec, y0, direction, A, S, mu_lo, cand, ws);
        if (++doublings > 400) break; // constraint numerically never active
    }

    long iters = 0;
    while (best_upper - value_hi > tol && iters < 200) {
        const double mu = 0.5 * (mu_lo + mu_hi);
        const double usage = linear_max_inner(spec, y0, direction, A, S, mu, cand, ws);
        const double value = dot(direction, candidate);
        best_upper = std::min(best_upper, value + mu * (spec.radius - usage));
        if (usage <= spec.radius) {
            mu_hi = mu;
            result.maximizer.assign(candidate.begin(), candidate.end());
            value_hi = value;
        } else {
            mu_lo = mu;
        }
        iters++;
    }
    result.bisection_iterations = iters;
    result.value = value_hi;
    return result;
}

} // namespace rmdp
