#include "rmdp/baselines.hpp"

#include "rmdp/fom_vi.hpp"
#include "rmdp/uncertainty.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <deque>

namespace rmdp {

namespace {

struct StageProblem {
    const RobustMdpInstance& instance;
    const numvec& v;
    int s;

    // Worst-case response value of a policy row, via the exact inner
    // maximization; returns the achieving kernel block through `maximizer`.
    double worst_case(cspan x, double inner_tol, numvec& direction,
                      numvec* maximizer = nullptr) const {
        const int A = instance.num_actions;
        const int S = instance.num_states;
        direction.resize(size_t(A) * S);
        payoff_apply(instance.discount, v, x, direction);
        const LinearMaxResult inner = linear_max_over_set(
            instance.uncertainty, instance.nominal_block(s), direction, A, S, inner_tol);
        if (maximizer) *maximizer = inner.maximizer;
        return dot(x, instance.cost_row(s)) + inner.value;
    }

    // Pure-action best response to a kernel block (exact).
    double best_response(cspan y, numvec& scratch) const {
        const int A = instance.num_actions;
        scratch.resize(A);
        payoff_apply_adjoint(instance.discount, v, y, scratch);
        double best = std::numeric_limits<double>::infinity();
        for (int a = 0; a < A; a++)
            best = std::min(best, instance.cost(s, a) + scratch[a]);
        return best;
    }
};

// Nominal shortcut: a point uncertainty set turns the stage problem into a
// plain minimum over actions.
BellmanResult nominal_bellman(const RobustMdpInstance& instance, const numvec& v, int s) {
    const int A = instance.num_actions;
    const int S = instance.num_states;
    BellmanResult result;
    result.x.assign(A, 0.0);
    result.y.assign(instance.nominal_block(s).begin(), instance.nominal_block(s).end());
    int best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; a++) {
        const double q =
            instance.cost(s, a) + instance.discount * dot(instance.nominal_row(s, a), v);
        if (q < best_value) {
            best_value = q;
            best = a;
        }
    }
    result.x[best] = 1.0;
    result.value = best_value;
    result.gap = 0.0;
    result.converged = true;
    result.iterations = 0;
    return result;
}

} // namespace

BellmanResult robust_bellman(const RobustMdpInstance& instance, const numvec& v, int s,
                             double tol, const BellmanOptions& options) {
    const int A = instance.num_actions;
    const int S = instance.num_states;
    if (int(v.size()) != S) throw invalid_input("robust_bellman: value vector length mismatch");
    for (double x : v)
        if (!std::isfinite(x)) throw invalid_input("robust_bellman: non-finite value vector");

    if (instance.uncertainty.radius <= 0.0) {
        BellmanResult r = nominal_bellman(instance, v, s);
        if (options.warm_x) *options.warm_x = r.x;
        if (options.warm_y) *options.warm_y = r.y;
        return r;
    }

    const bool kl = instance.uncertainty.kind == UncertaintyKind::kullback_leibler;
    const double lambda = instance.discount;

    // Step sizes from the actual payoff norm of this call; the l1 setup is
    // used for KL sets (single inner bisection), l2 otherwise.
    const NormPair np = kl ? NormPair::l1l1 : NormPair::l2l2;
    double payoff_norm;
    double theta_x, theta_y;
    if (np == NormPair::l2l2) {
        double sq = 0.0;
        for (double x : v)
            sq += x * x;
        payoff_norm = lambda * std::sqrt(sq);
        theta_x = 1.0;
        theta_y = 2.0 * A;
    } else {
        payoff_norm = lambda * linf_norm(v);
        theta_x = std::max(std::log(double(A)), 1e-6);
        theta_y = double(A) * A * std::max(std::log(double(S)), 1e-6);
    }
    payoff_norm = std::max(payoff_norm, 1e-12);

    ProxSetup setup;
    setup.norm_pair = np;
    setup.beta = 0.5 * A;
    setup.tau = std::sqrt(theta_x / theta_y) / payoff_norm;
    setup.sigma = 1.0 / (payoff_norm * payoff_norm * setup.tau);
    setup.omega = 2.0 * (theta_x / setup.tau + theta_y / setup.sigma);

    PdaState state;
    state.x = options.warm_x && !options.warm_x->empty()
                  ? *options.warm_x
                  : numvec(A, 1.0 / A);
    state.y = options.warm_y && !options.warm_y->empty()
                  ? *options.warm_y
                  : numvec(instance.nominal_block(s).begin(), instance.nominal_block(s).end());
    if (np == NormPair::l1l1) {
        // Entropy prox steps cannot resurrect exact-zero coordinates, so a
        // warm start on a face could pin the run there. Mix a small interior
        // component in (the nominal block keeps the kernel feasible).
        const double mix = 1e-2;
        for (int a = 0; a < A; a++)
            state.x[a] = (1.0 - mix) * state.x[a] + mix / A;
        cspan nominal = instance.nominal_block(s);
        for (size_t j = 0; j < state.y.size(); j++)
            state.y[j] = (1.0 - mix) * state.y[j] + mix * nominal[j];
    }

    StageProblem stage{instance, v, s};
    const double inner_tol = std::max(tol * 0.05, 1e-14);
    numvec direction, scratch, maximizer;

    BellmanResult best;
    best.gap = std::numeric_limits<double>::infinity();
    auto consider = [&](cspan x, cspan y) {
        const double wc = stage.worst_case(x, inner_tol, direction, &maximizer);
        const double br = stage.best_response(y, scratch);
        const double gap = wc - br + inner_tol; // inner max may undershoot
        if (gap < best.gap) {
            best.gap = gap;
            best.value = wc;
            best.x.assign(x.begin(), x.end());
            best.y.assign(y.begin(), y.end());
        }
        return gap;
    };

    consider(state.x, state.y);
    if (best.gap <= tol) {
        best.converged = true;
        if (options.warm_x) *options.warm_x = best.x;
        if (options.warm_y) *options.warm_y = best.y;
        return best;
    }

    numvec avg_x(A, 0.0), avg_y(size_t(A) * S, 0.0);
    double weight_sum = 0.0;
    long t_local = 0;
    double gap_at_restart = best.gap;

    ProxWorkspace ws;
    const double prox_tol = std::max(tol * 1e-3, 1e-13);
    long next_check = 16, interval = 16;
    best.converged = false;

    double gap_at_last_progress = best.gap;
    long checks_since_progress = 0;
    int rescues = 0;

    long t = 1;
    for (; t <= options.max_iterations; t++) {
        pda_step(instance, s, setup, v, state, ws, options.stats, prox_tol);
        t_local++;
        const double w = double(t_local) * t_local;
        weight_sum += w;
        const double f = w / weight_sum;
        for (int a = 0; a < A; a++)
            avg_x[a] += f * (state.x[a] - avg_x[a]);
        for (size_t j = 0; j < avg_y.size(); j++)
            avg_y[j] += f * (state.y[j] - avg_y[j]);

        if (t == next_check) {
            const double gap_avg = consider(avg_x, avg_y);
            consider(state.x, state.y);
            best.iterations = t;
            if (best.gap <= tol) {
                best.converged = true;
                break;
            }
            // Restart the averaging once the averaged gap halves; the run
            // continues from the averaged pair.
            if (gap_avg <= 0.5 * gap_at_restart) {
                state.x = avg_x;
                state.y = avg_y;
                std::fill(avg_x.begin(), avg_x.end(), 0.0);
                std::fill(avg_y.begin(), avg_y.end(), 0.0);
                weight_sum = 0.0;
                t_local = 0;
                gap_at_restart = gap_avg;
            }
            if (best.gap < 0.95 * gap_at_last_progress) {
                gap_at_last_progress = best.gap;
                checks_since_progress = 0;
            } else if (++checks_since_progress > 50 && rescues < 2) {
                // No progress over many checks: move the iterates off
                // whatever face they are stuck on and start fresh.
                rescues++;
                checks_since_progress = 0;
                cspan nominal = instance.nominal_block(s);
                for (int a = 0; a < A; a++)
                    state.x[a] = 0.5 * state.x[a] + 0.5 / A;
                for (size_t j = 0; j < state.y.size(); j++)
                    state.y[j] = 0.5 * state.y[j] + 0.5 * nominal[j];
                std::fill(avg_x.begin(), avg_x.end(), 0.0);
                std::fill(avg_y.begin(), avg_y.end(), 0.0);
                weight_sum = 0.0;
                t_local = 0;
                gap_at_restart = best.gap;
            }
            interval = std::min(interval * 5 / 4 + 1, long(1024));
            next_check = t + interval;
        }
    }
    best.iterations = std::min(t, options.max_iterations);
    if (options.warm_x) *options.warm_x = best.x;
    if (options.warm_y) *options.warm_y = best.y;
    return best;
}

namespace {

struct SweepEngine {
    const RobustMdpInstance& instance;
    double inner_tol;
    std::vector<numvec> warm_x, warm_y;
    long total_iterations = 0;
    long non_converged = 0;
    ProxStats stats;

    explicit SweepEngine(const RobustMdpInstance& inst, double tol)
        : instance(inst), inner_tol(tol), warm_x(inst.num_states), warm_y(inst.num_states) {}

    double state_update(const numvec& v, int s) {
        BellmanOptions opts;
        opts.warm_x = &warm_x[s];
        opts.warm_y = &warm_y[s];
        opts.stats = &stats;
        const BellmanResult r = robust_bellman(instance, v, s, inner_tol, opts);
        total_iterations += r.iterations;
        if (!r.converged) non_converged++;
        return r.value;
    }

    // Jacobi sweep: every state reads the same input vector.
    numvec sweep(const numvec& v) {
        numvec out(v.size());
        for (int s = 0; s < instance.num_states; s++)
            out[s] = state_update(v, s);
        return out;
    }

    // Extracts the stage pair at the final value vector.
    void extract_pair(const numvec& v, Policy& x, AdversarialKernel& y) {
        const int S = instance.num_states;
        const int A = instance.num_actions;
        x.num_states = S;
        x.num_actions = A;
        x.rows.assign(size_t(S) * A, 0.0);
        y.num_states = S;
        y.num_actions = A;
        y.blocks.assign(size_t(S) * A * S, 0.0);
        for (int s = 0; s < S; s++) {
            BellmanOptions opts;
            opts.warm_x = &warm_x[s];
            opts.warm_y = &warm_y[s];
            opts.stats = &stats;
            const BellmanResult r = robust_bellman(instance, v, s, inner_tol, opts);
            total_iterations += r.iterations;
            std::copy(r.x.begin(), r.x.end(), x.rows.begin() + size_t(s) * A);
            std::copy(r.y.begin(), r.y.end(), y.blocks.begin() + size_t(s) * A * S);
        }
    }
};

double default_inner_tol(const RobustMdpInstance& instance, double epsilon,
                         const ViOptions& options) {
    if (options.inner_tol) return *options.inner_tol;
    return epsilon * (1.0 - instance.discount) / (20.0 * instance.discount);
}

SolveReport finish_vi_report(SolveReport report, const RobustMdpInstance& instance,
                             SweepEngine& engine, const numvec& v, bool converged,
                             const std::chrono::steady_clock::time_point& start) {
    engine.extract_pair(v, report.policy, report.kernel);
    report.v = v;
    report.value = return_value(instance, v);
    report.converged = converged;
    report.iterations = engine.total_iterations;
    report.guard_events += engine.non_converged;
    report.prox_stats = engine.stats;
    report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

} // namespace

SolveReport vi_robust(const RobustMdpInstance& instance, double epsilon,
                      const ViOptions& options) {
    if (epsilon <= 0.0) throw invalid_input("vi_robust: epsilon must be positive");
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    const double threshold = vi_stopping_threshold(epsilon, instance.discount);
    SweepEngine engine(instance, default_inner_tol(instance, epsilon, options));

    SolveReport report;
    report.method = "vi";
    report.stopping_threshold = threshold;
    numvec v(instance.num_states, 0.0);
    bool converged = false;
    for (long sweep = 1; sweep <= options.max_sweeps; sweep++) {
        numvec next = engine.sweep(v);
        const double residual = linf_diff(next, v);
        v.swap(next);
        report.trace.push_back(
            {sweep, engine.total_iterations, residual, std::nullopt, elapsed()});
        report.epochs = sweep;
        if (residual <= threshold) {
            converged = true;
            break;
        }
        if (elapsed() > options.max_wall_seconds) break;
    }
    return finish_vi_report(std::move(report), instance, engine, v, converged, start);
}

SolveReport gs_vi(const RobustMdpInstance& instance, double epsilon, const ViOptions& options) {
    if (epsilon <= 0.0) throw invalid_input("gs_vi: epsilon must be positive");
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    const double threshold = vi_stopping_threshold(epsilon, instance.discount);
    SweepEngine engine(instance, default_inner_tol(instance, epsilon, options));

    SolveReport report;
    report.method = "gsvi";
    report.stopping_threshold = threshold;
    numvec v(instance.num_states, 0.0);
    bool converged = false;
    for (long sweep = 1; sweep <= options.max_sweeps; sweep++) {
        double residual = 0.0;
        // States consume already-updated entries within the sweep.
        for (int s = 0; s < instance.num_states; s++) {
            const double updated = engine.state_update(v, s);
            residual = std::max(residual, std::abs(updated - v[s]));
            v[s] = updated;
        }
        report.trace.push_back(
            {sweep, engine.total_iterations, residual, std::nullopt, elapsed()});
        report.epochs = sweep;
        if (residual <= threshold) {
            converged = true;
            break;
        }
        if (elapsed() > options.max_wall_seconds) break;
    }
    return finish_vi_report(std::move(report), instance, engine, v, converged, start);
}

SolveReport avi(const RobustMdpInstance& instance, double epsilon, const ViOptions& options) {
    if (epsilon <= 0.0) throw invalid_input("avi: epsilon must be positive");
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    const double lambda = instance.discount;
    const double threshold = vi_stopping_threshold(epsilon, lambda);
    const double alpha = avi_alpha(lambda);
    const double gamma = avi_gamma(lambda);
    const double guard_level = 10.0 * instance.value_upper_bound();
    SweepEngine engine(instance, default_inner_tol(instance, epsilon, options));

    SolveReport report;
    report.method = "avi";
    report.stopping_threshold = threshold;
    const int S = instance.num_states;
    numvec v(S, 0.0), v_prev(S, 0.0), h(S, 0.0);
    bool converged = false;
    bool momentum = true;
    for (long sweep = 1; sweep <= options.max_sweeps; sweep++) {
        // The stopping certificate is the Bellman residual at the probe
        // point (the momentum point while momentum is active), which is the
        // quantity the epsilon rule bounds for plain sweeps.
        double residual;
        if (momentum) {
            for (int s = 0; s < S; s++)
                h[s] = v[s] + gamma * (v[s] - v_prev[s]);
            numvec image = engine.sweep(h);
            residual = linf_diff(image, h);
            if (residual <= threshold) {
                v = std::move(image);
                converged = true;
                report.trace.push_back(
                    {sweep, engine.total_iterations, residual, std::nullopt, elapsed()});
                report.epochs = sweep;
                break;
            }
            numvec next(S);
            for (int s = 0; s < S; s++)
                next[s] = h[s] - alpha * (h[s] - image[s]);
            if (linf_norm(next) > guard_level) {
                // Momentum overshot; fall back to plain fixed-point sweeps.
                report.guard_events++;
                momentum = false;
                v_prev = v;
                continue;
            }
            v_prev.swap(v);
            v = std::move(next);
        } else {
            numvec image = engine.sweep(v);
            residual = linf_diff(image, v);
            v = std::move(image);
            converged = residual <= threshold;
        }
        report.trace.push_back(
            {sweep, engine.total_iterations, residual, std::nullopt, elapsed()});
        report.epochs = sweep;
        if (converged) break;
        if (elapsed() > options.max_wall_seconds) break;
    }
    return finish_vi_report(std::move(report), instance, engine, v, converged, start);
}

numvec anderson_weights(const std::vector<numvec>& residuals, double damping) {
    const int k = int(residuals.size());
    if (k == 0) throw invalid_input("anderson_weights: no residuals");
    Eigen::MatrixXd gram(k, k);
    for (int i = 0; i < k; i++)
        for (int j = i; j < k; j++) {
            const double g = dot(residuals[i], residuals[j]);
            gram(i, j) = g;
            gram(j, i) = g;
        }
    gram.diagonal().array() += damping;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k);
    Eigen::LDLT<Eigen::MatrixXd> solver(gram);
    numvec weights(k, 0.0);
    if (solver.info() != Eigen::Success) {
        weights.back() = 1.0; // singular system: plain fixed-point step
        return weights;
    }
    const Eigen::VectorXd raw = solver.solve(ones);
    const double total = raw.sum();
    if (!std::isfinite(total) || std::abs(total) < 1e-300) {
        weights.back() = 1.0;
        return weights;
    }
    for (int i = 0; i < k; i++)
        weights[i] = raw(i) / total;
    return weights;
}

SolveReport anderson_vi(const RobustMdpInstance& instance, double epsilon,
                        const ViOptions& options) {
    if (epsilon <= 0.0) throw invalid_input("anderson_vi: epsilon must be positive");
    if (options.anderson_memory < 1)
        throw invalid_input("anderson_vi: memory must be at least 1");
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    const double threshold = vi_stopping_threshold(epsilon, instance.discount);
    SweepEngine engine(instance, default_inner_tol(instance, epsilon, options));

    SolveReport report;
    report.method = "anderson";
    report.stopping_threshold = threshold;
    const int S = instance.num_states;
    const size_t memory = size_t(options.anderson_memory) + 1;

    numvec v(S, 0.0);
    std::deque<numvec> images;    // F(v_i)
    std::deque<numvec> residuals; // F(v_i) - v_i
    bool converged = false;
    for (long sweep = 1; sweep <= options.max_sweeps; sweep++) {
        numvec image = engine.sweep(v);
        numvec residual_vec(S);
        for (int s = 0; s < S; s++)
            residual_vec[s] = image[s] - v[s];
        // Stopping is certified on the unmixed Bellman residual: the mixed
        // iterates can stall without being near the fixed point.
        const double residual = linf_norm(residual_vec);
        report.trace.push_back(
            {sweep, engine.total_iterations, residual, std::nullopt, elapsed()});
        report.epochs = sweep;
        if (residual <= threshold) {
            v = std::move(image);
            converged = true;
            break;
        }
        images.push_back(std::move(image));
        residuals.push_back(std::move(residual_vec));
        while (images.size() > memory) {
            images.pop_front();
            residuals.pop_front();
        }

        const numvec weights =
            anderson_weights(std::vector<numvec>(residuals.begin(), residuals.end()));
        numvec next(S, 0.0);
        for (size_t i = 0; i < images.size(); i++)
            for (int s = 0; s < S; s++)
                next[s] += weights[i] * images[i][s];
        v = std::move(next);
        if (elapsed() > options.max_wall_seconds) break;
    }
    return finish_vi_report(std::move(report), instance, engine, v, converged, start);
}

} // namespace rmdp
