#include "rmdp/fom_vi.hpp"

#include "rmdp/gap.hpp"
#include "rmdp/rng.hpp"

#include <chrono>
#include <cmath>

namespace rmdp {

ProxSetup make_step_sizes(const RobustMdpInstance& instance, NormPair norm_pair) {
    const int S = instance.num_states;
    const int A = instance.num_actions;
    const double lambda = instance.discount;
    const double r_inf = instance.max_cost();
    if (r_inf <= 0.0)
        throw invalid_input("make_step_sizes: all costs are zero, step sizes are undefined");
    if (!(lambda > 0.0 && lambda < 1.0))
        throw invalid_input("make_step_sizes: discount must lie in (0,1)");

    const double vmax = r_inf / (1.0 - lambda);
    ProxSetup setup;
    setup.norm_pair = norm_pair;
    setup.beta = 0.5 * A;

    double payoff_norm_bound;
    if (norm_pair == NormPair::l2l2) {
        const double root_as = std::sqrt(double(A) * S);
        setup.tau = (1.0 - lambda) / (lambda * r_inf * root_as);
        setup.sigma = (1.0 - lambda) * std::sqrt(double(A)) / (lambda * r_inf * std::sqrt(double(S)));
        setup.omega = 2.0 * root_as * lambda * r_inf / (1.0 - lambda);
        payoff_norm_bound = lambda * std::sqrt(double(S)) * vmax;
    } else {
        if (A < 2 || S < 2)
            throw invalid_input("make_step_sizes: the l1 setup needs at least two states and "
                                "two actions");
        const double ratio = std::sqrt(std::log(double(A)) / std::log(double(S)));
        setup.tau = (1.0 - lambda) / (lambda * r_inf * A) * ratio;
        setup.sigma = (1.0 - lambda) * A / (lambda * r_inf) * ratio;
        setup.omega = 2.0 * A / ratio * lambda * r_inf / (1.0 - lambda);
        payoff_norm_bound = lambda * vmax;
    }

    const double product = setup.tau * setup.sigma * payoff_norm_bound * payoff_norm_bound;
    if (product > 1.0 + 1e-9)
        throw invalid_input("make_step_sizes: step-size product violates the operator-norm "
                            "condition (tau*sigma*L^2 = " + std::to_string(product) + " > 1)");
    return setup;
}

void pda_step(const RobustMdpInstance& instance, int s, const ProxSetup& setup,
              const numvec& v, PdaState& state, ProxWorkspace& ws, ProxStats* stats,
              double prox_tol) {
    const int A = instance.num_actions;
    const int S = instance.num_states;
    const double lambda = instance.discount;
    cspan costs = instance.cost_row(s);

    ws.grad_x.resize(A);
    ws.x_next.resize(A);
    ws.x_extra.resize(A);
    ws.grad_y.resize(size_t(A) * S);
    ws.y_next.resize(size_t(A) * S);

    payoff_apply_adjoint(lambda, v, state.y, ws.grad_x);
    for (int a = 0; a < A; a++)
        ws.grad_x[a] += costs[a];

    if (setup.norm_pair == NormPair::l2l2) {
        for (int a = 0; a < A; a++)
            ws.x_extra[a] = state.x[a] - setup.tau * ws.grad_x[a];
        project_simplex_l2(ws.x_extra, ws.x_next, ws);
    } else {
        prox_simplex_entropy(state.x, ws.grad_x, setup.tau, ws.x_next);
    }

    // Kernel gradient at the extrapolated policy point; negated because the
    // kernel player maximizes while the prox kernels minimize.
    for (int a = 0; a < A; a++)
        ws.x_extra[a] = 2.0 * ws.x_next[a] - state.x[a];
    payoff_apply(lambda, v, ws.x_extra, ws.grad_y);
    for (double& gy : ws.grad_y)
        gy = -gy;

    prox_y(instance.uncertainty.kind, setup.norm_pair, state.y, ws.grad_y, setup,
           instance.uncertainty.radius, instance.nominal_block(s), A, S, prox_tol, ws.y_next,
           ws, stats);

    state.x.assign(ws.x_next.begin(), ws.x_next.end());
    state.y.assign(ws.y_next.begin(), ws.y_next.end());
}

namespace {

void renormalize_rows(numvec& data, int rows, int cols) {
    for (int r = 0; r < rows; r++) {
        double total = 0.0;
        for (int c = 0; c < cols; c++)
            total += data[size_t(r) * cols + c];
        if (total > 0.0)
            for (int c = 0; c < cols; c++)
                data[size_t(r) * cols + c] /= total;
    }
}

numvec random_simplex_row(SplitMix64& rng, cspan support_mask, int n) {
    numvec row(n, 0.0);
    double total = 0.0;
    for (int j = 0; j < n; j++) {
        if (support_mask.empty() || support_mask[j] > 0.0) {
            row[j] = rng.next_positive();
            total += row[j];
        }
    }
    for (int j = 0; j < n; j++)
        row[j] /= total;
    return row;
}

long epoch_length(long epoch, int q) {
    long t = 1;
    for (int i = 0; i < q; i++)
        t *= epoch;
    return t;
}

} // namespace

SolveReport run_fom_vi(const RobustMdpInstance& instance, NormPair norm_pair,
                       const Schedule& schedule, const FomViOptions& options,
                       FomViDebugLog* debug) {
    const int S = instance.num_states;
    const int A = instance.num_actions;
    const bool kl = instance.uncertainty.kind == UncertaintyKind::kullback_leibler;
    if (schedule.epsilon <= 0.0) throw invalid_input("run_fom_vi: epsilon must be positive");
    if (schedule.q < 0 || schedule.p < 0)
        throw invalid_input("run_fom_vi: schedule exponents must be non-negative");

    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    SolveReport report;
    report.method = "fomvi";
    report.stopping_threshold = 0.5 * schedule.epsilon;
    report.v.assign(S, 0.0);
    report.policy = Policy::uniform(S, A);
    report.kernel = AdversarialKernel::nominal(instance);

    // Zero costs make every pair optimal with value zero.
    if (instance.max_cost() <= 0.0) {
        report.converged = true;
        report.certified_gap = 0.0;
        report.trace.push_back({0, 0, 0.0, 0.0, elapsed()});
        report.elapsed_seconds = elapsed();
        return report;
    }

    const ProxSetup setup = make_step_sizes(instance, norm_pair);

    // Iterates start uniform (deterministic) or seeded-random; KL rows are
    // uniform over the nominal support since mass outside it is infeasible.
    std::vector<PdaState> states(S);
    for (int s = 0; s < S; s++) {
        states[s].x.assign(A, 1.0 / A);
        states[s].y.assign(size_t(A) * S, 0.0);
        for (int a = 0; a < A; a++) {
            cspan nominal = instance.nominal_row(s, a);
            mspan row = mspan(states[s].y).subspan(size_t(a) * S, S);
            if (kl) {
                int support = 0;
                for (int j = 0; j < S; j++)
                    if (nominal[j] > 0.0) support++;
                for (int j = 0; j < S; j++)
                    row[j] = nominal[j] > 0.0 ? 1.0 / support : 0.0;
            } else {
                for (int j = 0; j < S; j++)
                    row[j] = 1.0 / S;
            }
        }
    }
    if (options.random_init_seed) {
        SplitMix64 rng(*options.random_init_seed);
        for (int s = 0; s < S; s++) {
            states[s].x = random_simplex_row(rng, {}, A);
            for (int a = 0; a < A; a++) {
                numvec mask(instance.nominal_row(s, a).begin(),
                            instance.nominal_row(s, a).end());
                numvec row = random_simplex_row(rng, kl ? cspan(mask) : cspan{}, S);
                std::copy(row.begin(), row.end(),
                          states[s].y.begin() + (size_t(a) * S));
            }
        }
    }

    numvec v(S, 0.0), v_next(S, 0.0);
    Policy xbar = Policy::uniform(S, A);
    AdversarialKernel ybar = AdversarialKernel::nominal(instance);
    std::fill(xbar.rows.begin(), xbar.rows.end(), 0.0);
    std::fill(ybar.blocks.begin(), ybar.blocks.end(), 0.0);

    std::vector<numvec> epoch_xbar(S, numvec(A, 0.0));
    std::vector<numvec> epoch_ybar(S, numvec(size_t(A) * S, 0.0));

    ProxWorkspace ws;
    double weight_total = 0.0; // S_T
    long t_global = 0;
    bool converged = false;
    const double gap_tol = options.gap_eval_tol_factor * schedule.epsilon;

    numvec weights, global_sums, local_sums;

    for (long epoch = 1; epoch <= schedule.max_epochs; epoch++) {
        const long t_len = epoch_length(epoch, schedule.q);

        weights.resize(t_len);
        global_sums.resize(t_len);
        local_sums.resize(t_len);
        double run_global = weight_total, run_local = 0.0;
        for (long i = 0; i < t_len; i++) {
            weights[i] = std::pow(double(t_global + i + 1), schedule.p);
            run_global += weights[i];
            run_local += weights[i];
            global_sums[i] = run_global;
            local_sums[i] = run_local;
        }

        if (debug && options.record_iterates)
            for (long i = 0; i < t_len; i++) {
                debug->iterate_x.emplace_back(size_t(S) * A, 0.0);
                debug->iterate_y.emplace_back(size_t(S) * A * S, 0.0);
                debug->weights.push_back(weights[i]);
            }

        for (int s = 0; s < S; s++) {
            PdaState& st = states[s];
            numvec& exb = epoch_xbar[s];
            numvec& eyb = epoch_ybar[s];
            std::fill(exb.begin(), exb.end(), 0.0);
            std::fill(eyb.begin(), eyb.end(), 0.0);
            for (long i = 0; i < t_len; i++) {
                pda_step(instance, s, setup, v, st, ws, &report.prox_stats);
                const double f_local = weights[i] / local_sums[i];
                const double f_global = weights[i] / global_sums[i];
                for (int a = 0; a < A; a++) {
                    exb[a] += f_local * (st.x[a] - exb[a]);
                    xbar.rows[size_t(s) * A + a] +=
                        f_global * (st.x[a] - xbar.rows[size_t(s) * A + a]);
                }
                for (size_t j = 0; j < st.y.size(); j++) {
                    eyb[j] += f_local * (st.y[j] - eyb[j]);
                    ybar.blocks[size_t(s) * A * S + j] +=
                        f_global * (st.y[j] - ybar.blocks[size_t(s) * A * S + j]);
                }
                if (debug && options.record_iterates) {
                    const size_t slot = debug->iterate_x.size() - t_len + i;
                    std::copy(st.x.begin(), st.x.end(),
                              debug->iterate_x[slot].begin() + size_t(s) * A);
                    std::copy(st.y.begin(), st.y.end(),
                              debug->iterate_y[slot].begin() + size_t(s) * A * S);
                }
            }
        }
        weight_total = global_sums[t_len - 1];
        t_global += t_len;

        // Synchronous value update from the epoch averages.
        for (int s = 0; s < S; s++)
            v_next[s] = bilinear_value(instance, s, epoch_xbar[s], epoch_ybar[s], v);
        const double residual = linf_diff(v_next, v);

        if (debug && options.record_epochs) {
            EpochRecord rec;
            rec.v = v;
            rec.xbar.num_states = S;
            rec.xbar.num_actions = A;
            rec.xbar.rows.clear();
            for (int s = 0; s < S; s++)
                rec.xbar.rows.insert(rec.xbar.rows.end(), epoch_xbar[s].begin(),
                                     epoch_xbar[s].end());
            rec.ybar.num_states = S;
            rec.ybar.num_actions = A;
            rec.ybar.blocks.clear();
            for (int s = 0; s < S; s++)
                rec.ybar.blocks.insert(rec.ybar.blocks.end(), epoch_ybar[s].begin(),
                                       epoch_ybar[s].end());
            rec.residual_inf = residual;
            debug->epochs.push_back(std::move(rec));
        }

        v.swap(v_next);

        TraceRow row;
        row.epoch = epoch;
        row.iteration = t_global;
        row.residual_inf = residual;

        const bool check_now = epoch % schedule.gap_check_period == 0 ||
                               epoch == schedule.max_epochs;
        if (check_now) {
            Policy px = xbar;
            AdversarialKernel py = ybar;
            renormalize_rows(px.rows, S, A);
            renormalize_rows(py.blocks, S * A, S);
            const GapReport gap = duality_gap(instance, px, py, gap_tol);
            row.certified_gap = gap.gap;
            report.certified_gap = gap.gap;
            report.value = gap.worst_case_value;
            // The evaluator itself carries up to one tolerance of error per
            // side, so stop only with that margin in hand.
            if (options.stop_on_gap &&
                gap.gap + 2.0 * gap_tol <= 0.5 * schedule.epsilon) {
                converged = true;
            }
        }
        row.elapsed_seconds = elapsed();
        report.trace.push_back(row);
        report.epochs = epoch;
        report.iterations = t_global;
        if (converged) break;
        if (elapsed() > options.max_wall_seconds) break;
    }

    renormalize_rows(xbar.rows, S, A);
    renormalize_rows(ybar.blocks, S * A, S);
    report.policy = std::move(xbar);
    report.kernel = std::move(ybar);
    report.v = v;
    report.converged = converged;
    if (!report.certified_gap) report.value = return_value(instance, v);
    report.elapsed_seconds = elapsed();
    return report;
}

} // namespace rmdp
