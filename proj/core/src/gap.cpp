#include "rmdp/gap.hpp"

#include "rmdp/uncertainty.hpp"

#include <cmath>

namespace rmdp {

namespace {

double stopping_threshold(double tol, double discount) {
    return tol * (1.0 - discount) / (2.0 * discount);
}

} // namespace

ContractionResult worst_case_value(const RobustMdpInstance& instance, const Policy& x,
                                   double tol, const GapBudget& budget) {
    const int S = instance.num_states;
    const int A = instance.num_actions;
    if (x.num_states != S || x.num_actions != A)
        throw invalid_input("worst_case_value: policy does not match instance");
    const double lambda = instance.discount;
    const double threshold = stopping_threshold(tol, lambda);
    const double inner_tol = std::min(1e-8, tol * (1.0 - lambda) / 20.0);

    ContractionResult result;
    result.v.assign(S, 0.0);
    numvec next(S, 0.0);
    numvec direction(size_t(A) * S, 0.0);

    result.converged = false;
    for (long sweep = 1; sweep <= budget.max_sweeps; sweep++) {
        for (int s = 0; s < S; s++) {
            cspan xs = x.row(s);
            payoff_apply(lambda, result.v, xs, direction);
            const LinearMaxResult inner =
                linear_max_over_set(instance.uncertainty, instance.nominal_block(s), direction,
                                    A, S, inner_tol);
            next[s] = dot(xs, instance.cost_row(s)) + inner.value;
        }
        const double delta = linf_diff(next, result.v);
        result.v.swap(next);
        result.sweeps = sweep;
        if (delta < threshold) {
            result.converged = true;
            break;
        }
    }
    result.value = return_value(instance, result.v);
    return result;
}

ContractionResult best_response_value(const RobustMdpInstance& instance,
                                      const AdversarialKernel& y, double tol,
                                      const GapBudget& budget) {
    const int S = instance.num_states;
    const int A = instance.num_actions;
    if (y.num_states != S || y.num_actions != A)
        throw invalid_input("best_response_value: kernel does not match instance");
    const double lambda = instance.discount;
    const double threshold = stopping_threshold(tol, lambda);

    ContractionResult result;
    result.v.assign(S, 0.0);
    numvec next(S, 0.0);

    result.converged = false;
    for (long sweep = 1; sweep <= budget.max_sweeps; sweep++) {
        for (int s = 0; s < S; s++) {
            double best = std::numeric_limits<double>::infinity();
            for (int a = 0; a < A; a++) {
                const double q = instance.cost(s, a) + lambda * dot(y.row(s, a), result.v);
                best = std::min(best, q);
            }
            next[s] = best;
        }
        const double delta = linf_diff(next, result.v);
        result.v.swap(next);
        result.sweeps = sweep;
        if (delta < threshold) {
            result.converged = true;
            break;
        }
    }
    result.value = return_value(instance, result.v);
    return result;
}

GapReport duality_gap(const RobustMdpInstance& instance, const Policy& x,
                      const AdversarialKernel& y, double tol, const GapBudget& budget) {
    const ContractionResult worst = worst_case_value(instance, x, tol, budget);
    const ContractionResult best = best_response_value(instance, y, tol, budget);
    GapReport report;
    report.worst_case_value = worst.value;
    report.best_response_value = best.value;
    report.gap = worst.value - best.value;
    report.tolerance = tol;
    report.worst_case_sweeps = worst.sweeps;
    report.best_response_sweeps = best.sweeps;
    report.converged = worst.converged && best.converged;
    report.negative_gap_flagged = report.gap < -4.0 * tol;
    return report;
}

} // namespace rmdp
