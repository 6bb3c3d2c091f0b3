#include "rmdp/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace rmdp {

const char* to_string(UncertaintyKind kind) {
    return kind == UncertaintyKind::ellipsoidal ? "ellipsoidal" : "kl";
}

UncertaintyKind uncertainty_kind_from_string(const std::string& name) {
    if (name == "ellipsoidal") return UncertaintyKind::ellipsoidal;
    if (name == "kl") return UncertaintyKind::kullback_leibler;
    throw invalid_input("unknown uncertainty kind: " + name);
}

double RobustMdpInstance::max_cost() const {
    double r = 0.0;
    for (double c : costs)
        r = std::max(r, c);
    return r;
}

namespace {

void check_simplex_row(cspan row, const std::string& what) {
    double total = 0.0;
    for (double p : row) {
        if (!(p >= 0.0))
            throw invalid_input(what + ": negative or non-finite probability");
        total += p;
    }
    if (std::abs(total - 1.0) > SIMPLEX_TOL)
        throw invalid_input(what + ": row sums to " + std::to_string(total));
}

} // namespace

void RobustMdpInstance::validate() const {
    if (num_states <= 0 || num_actions <= 0)
        throw invalid_input("instance must have positive state and action counts");
    if (!(discount > 0.0 && discount < 1.0))
        throw invalid_input("discount must lie in (0,1)");
    if (costs.size() != size_t(num_states) * num_actions)
        throw invalid_input("costs must be an S x A matrix");
    if (nominal_kernel.size() != size_t(num_states) * num_actions * num_states)
        throw invalid_input("nominal_kernel must be an S x A x S tensor");
    if (initial_distribution.size() != size_t(num_states))
        throw invalid_input("initial_distribution must have one entry per state");
    for (double c : costs)
        if (!(c >= 0.0) || !std::isfinite(c))
            throw invalid_input("costs must be non-negative finite reals");
    for (int s = 0; s < num_states; s++)
        for (int a = 0; a < num_actions; a++) {
            std::ostringstream what;
            what << "nominal_kernel[" << s << "," << a << "]";
            check_simplex_row(nominal_row(s, a), what.str());
        }
    check_simplex_row(initial_distribution, "initial_distribution");
    if (uncertainty.radius < 0.0)
        throw invalid_input("uncertainty radius must be non-negative");
}

Policy Policy::uniform(int num_states, int num_actions) {
    Policy p;
    p.num_states = num_states;
    p.num_actions = num_actions;
    p.rows.assign(size_t(num_states) * num_actions, 1.0 / num_actions);
    return p;
}

AdversarialKernel AdversarialKernel::nominal(const RobustMdpInstance& instance) {
    AdversarialKernel y;
    y.num_states = instance.num_states;
    y.num_actions = instance.num_actions;
    y.blocks = instance.nominal_kernel;
    return y;
}

double bilinear_value(const RobustMdpInstance& instance, int s, cspan x_s, cspan y_s,
                      const numvec& v) {
    const int A = instance.num_actions;
    const int S = instance.num_states;
    if (int(x_s.size()) != A || int(y_s.size()) != A * S || int(v.size()) != S)
        throw invalid_input("bilinear_value: dimension mismatch");
    double total = 0.0;
    for (int a = 0; a < A; a++) {
        const double transition = dot(y_s.subspan(size_t(a) * S, S), v);
        total += x_s[a] * (instance.cost(s, a) + instance.discount * transition);
    }
    return total;
}

void payoff_apply(double discount, const numvec& v, cspan x_s, mspan out) {
    const size_t A = x_s.size();
    const size_t S = v.size();
    if (out.size() != A * S)
        throw invalid_input("payoff_apply: output block has wrong size");
    for (size_t a = 0; a < A; a++) {
        const double w = discount * x_s[a];
        double* row = out.data() + a * S;
        for (size_t sp = 0; sp < S; sp++)
            row[sp] = w * v[sp];
    }
}

void payoff_apply_adjoint(double discount, const numvec& v, cspan y_s, mspan out) {
    const size_t A = out.size();
    const size_t S = v.size();
    if (y_s.size() != A * S)
        throw invalid_input("payoff_apply_adjoint: kernel block has wrong size");
    for (size_t a = 0; a < A; a++)
        out[a] = discount * dot(y_s.subspan(a * S, S), v);
}

numvec policy_value(const RobustMdpInstance& instance, const Policy& x,
                    const AdversarialKernel& y) {
    const int S = instance.num_states;
    const int A = instance.num_actions;
    if (x.num_states != S || x.num_actions != A || y.num_states != S || y.num_actions != A)
        throw invalid_input("policy_value: pair does not match instance dimensions");

    numvec cost_x(S, 0.0);
    for (int s = 0; s < S; s++)
        cost_x[s] = dot(x.row(s), instance.cost_row(s));

    if (S <= 2000) {
        Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S);
        for (int s = 0; s < S; s++) {
            cspan xs = x.row(s);
            for (int a = 0; a < A; a++) {
                cspan row = y.row(s, a);
                const double w = instance.discount * xs[a];
                for (int sp = 0; sp < S; sp++)
                    system(s, sp) -= w * row[sp];
            }
        }
        Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(cost_x.data(), S);
        Eigen::VectorXd sol = system.partialPivLu().solve(rhs);
        return numvec(sol.data(), sol.data() + S);
    }

    // Large instances: contraction iteration to a fixed residual.
    numvec v(S, 0.0), next(S, 0.0);
    const double target = 1e-10 * (1.0 + linf_norm(cost_x));
    for (long iter = 0; iter < 1000000; iter++) {
        for (int s = 0; s < S; s++) {
            double acc = cost_x[s];
            cspan xs = x.row(s);
            for (int a = 0; a < A; a++)
                acc += instance.discount * xs[a] * dot(y.row(s, a), v);
            next[s] = acc;
        }
        const double delta = linf_diff(next, v);
        v.swap(next);
        if (delta * instance.discount / (1.0 - instance.discount) < target) break;
    }
    return v;
}

double return_value(const RobustMdpInstance& instance, const numvec& v) {
    if (v.size() != size_t(instance.num_states))
        throw invalid_input("return_value: value vector has wrong length");
    return dot(instance.initial_distribution, v);
}

} // namespace rmdp
