#include "rmdp/prox.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace rmdp {

const char* to_string(NormPair np) { return np == NormPair::l1l1 ? "l1" : "l2"; }

NormPair norm_pair_from_string(const std::string& name) {
    if (name == "l1" || name == "l1l1") return NormPair::l1l1;
    if (name == "l2" || name == "l2l2") return NormPair::l2l2;
    throw invalid_input("unknown norm pair: " + name);
}

void project_simplex_l2(cspan z, mspan out, ProxWorkspace& ws) {
    const size_t n = z.size();
    if (n == 0) throw invalid_input("project_simplex_l2: empty vector");
    if (out.size() != n) throw invalid_input("project_simplex_l2: output size mismatch");
    ws.b.assign(z.begin(), z.end());
    std::sort(ws.b.begin(), ws.b.end(), std::greater<double>());
    double prefix = 0.0, theta = 0.0;
    for (size_t j = 0; j < n; j++) {
        prefix += ws.b[j];
        const double t = (1.0 - prefix) / double(j + 1);
        if (ws.b[j] + t > 0.0) theta = t;
    }
    for (size_t i = 0; i < n; i++)
        out[i] = std::max(z[i] + theta, 0.0);
}

numvec project_simplex_l2(cspan z) {
    ProxWorkspace ws;
    numvec out(z.size());
    project_simplex_l2(z, out, ws);
    return out;
}

void prox_simplex_entropy(cspan x, cspan g, double tau, mspan out) {
    const size_t n = x.size();
    if (n == 0 || g.size() != n || out.size() != n)
        throw invalid_input("prox_simplex_entropy: size mismatch");
    double shift = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; i++)
        if (x[i] > 0.0) shift = std::max(shift, std::log(x[i]) - tau * g[i]);
    if (!std::isfinite(shift)) throw invalid_input("prox_simplex_entropy: all-zero reference");
    double total = 0.0;
    for (size_t i = 0; i < n; i++) {
        out[i] = x[i] > 0.0 ? std::exp(std::log(x[i]) - tau * g[i] - shift) : 0.0;
        total += out[i];
    }
    for (size_t i = 0; i < n; i++)
        out[i] /= total;
}

numvec prox_simplex_entropy_copy(cspan x, cspan g, double tau) {
    numvec out(x.size());
    prox_simplex_entropy(x, g, tau, out);
    return out;
}

double lambert_w_exp(double u) {
    // Below this, W(exp(u)) equals exp(u) to double precision.
    if (u < -36.7) return std::exp(u);
    if (u <= 1.0) {
        const double z = std::exp(u);
        double w = z < 1.0 ? z * (1.0 - z) : 0.567;
        for (int it = 0; it < 64; it++) {
            const double ew = std::exp(w);
            const double f = w * ew - z;
            const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
            const double step = f / denom;
            w -= step;
            if (std::abs(step) <= 1e-16 * std::abs(w) + 1e-300) break;
        }
        return w;
    }
    // Solve w + log w = u. Newton from below converges monotonically.
    double w = u - std::log(u);
    for (int it = 0; it < 64; it++) {
        const double f = w + std::log(w) - u;
        const double step = f * w / (w + 1.0);
        w -= step;
        if (std::abs(step) <= 1e-16 * w) break;
    }
    return w;
}

double lambert_w(double z) {
    if (z < 0.0) throw invalid_input("lambert_w: negative argument");
    if (z == 0.0) return 0.0;
    return lambert_w_exp(std::log(z));
}

namespace {

double half_sq_dist(cspan a, cspan b) {
    double r = 0.0;
    for (size_t i = 0; i < a.size(); i++) {
        const double d = a[i] - b[i];
        r += 0.5 * d * d;
    }
    return r;
}

double kl_block(cspan y, cspan ref) {
    double r = 0.0;
    for (size_t i = 0; i < y.size(); i++)
        if (y[i] > 0.0) r += y[i] * (std::log(y[i]) - std::log(floored(ref[i])));
    return r;
}

double kl_against_nominal(cspan y, cspan y0) {
    double r = 0.0;
    for (size_t i = 0; i < y.size(); i++)
        if (y[i] > 0.0) r += y[i] * std::log(y[i] / y0[i]);
    return r;
}

// Row-sum multiplier search shared by the entropic inner updates. Evaluates
// y_j(nu) = scale * W(exp(base_j + slope * nu)) for the row, bisects nu until
// the row sums to one, then normalizes exactly. `base` is caller-filled in
// ws.a; slope < 0 so the sum decreases in nu.
void row_sum_bisect(cspan base, double slope, double scale, mspan row, ProxStats* stats) {
    const size_t n = base.size();
    auto fill = [&](double nu) {
        double total = 0.0;
        for (size_t j = 0; j < n; j++) {
            row[j] = std::isfinite(base[j]) ? scale * lambert_w_exp(base[j] + slope * nu) : 0.0;
            total += row[j];
        }
        return total;
    };
    long iters = 0;
    double lo, hi;
    double sum0 = fill(0.0);
    if (sum0 > 1.0) {
        lo = 0.0;
        hi = 1.0;
        int l = 0;
        while (fill(hi) > 1.0) {
            lo = hi;
            hi *= 2.0;
            if (++l > 60)
                throw numerical_failure("kernel prox: row-sum multiplier upper bracket not "
                                        "found within doubling budget");
        }
        iters += l;
    } else {
        hi = 0.0;
        lo = -1.0;
        int l = 0;
        while (fill(lo) < 1.0) {
            hi = lo;
            lo *= 2.0;
            if (++l > 60)
                throw numerical_failure("kernel prox: row-sum multiplier lower bracket not "
                                        "found within doubling budget");
        }
        iters += l;
    }
    double total = 0.0;
    for (int it = 0; it < 200; it++) {
        const double nu = 0.5 * (lo + hi);
        total = fill(nu);
        iters++;
        if (std::abs(total - 1.0) <= 1e-13) break;
        if (total > 1.0)
            lo = nu;
        else
            hi = nu;
        if (hi - lo <= 1e-16 * std::max({1.0, std::abs(hi), std::abs(lo)})) break;
    }
    if (total > 0.0)
        for (size_t j = 0; j < n; j++)
            row[j] /= total;
    if (stats) stats->simplex_bisections += iters;
}

} // namespace

namespace detail {

double ellipsoid_l2_inner(cspan y_ref, cspan g, double sigma, double mu, cspan y0,
                          int num_actions, int num_next, mspan out, ProxWorkspace& ws) {
    const int S = num_next;
    ws.a.resize(S);
    const double scale = sigma / (1.0 + sigma * mu);
    for (int a = 0; a < num_actions; a++) {
        const size_t off = size_t(a) * S;
        for (int j = 0; j < S; j++)
            ws.a[j] = scale * (y_ref[off + j] / sigma + mu * y0[off + j] - g[off + j]);
        project_simplex_l2(ws.a, out.subspan(off, S), ws);
    }
    return half_sq_dist(out, y0);
}

// Core of the ellipsoidal-l1 update at fixed mu. `tilt` caches the
// mu-independent part (sigma/beta)*g - log(y_ref), computed once per call.
double ellipsoid_l1_core(cspan tilt, cspan y_ref, cspan g, double sigma, double beta,
                         double mu, cspan y0, int num_actions, int num_next, mspan out,
                         ProxWorkspace& ws, ProxStats* stats) {
    const int S = num_next;
    for (int a = 0; a < num_actions; a++) {
        const size_t off = size_t(a) * S;
        mspan row = out.subspan(off, S);
        if (mu == 0.0) {
            prox_simplex_entropy(y_ref.subspan(off, S), g.subspan(off, S), sigma / beta, row);
            continue;
        }
        // Variable-wise Lambert-W update of the entropy-plus-quadratic row
        // problem; see the l1 kernel derivation.
        const double m = sigma * mu / beta;
        const double logm = std::log(m);
        ws.a.resize(S);
        for (int j = 0; j < S; j++)
            ws.a[j] = logm + m * y0[off + j] - tilt[off + j] - 1.0;
        row_sum_bisect(ws.a, -(sigma / beta), 1.0 / m, row, stats);
    }
    return half_sq_dist(out, y0);
}

void fill_ellipsoid_l1_tilt(cspan y_ref, cspan g, double sigma, double beta, numvec& tilt) {
    tilt.resize(y_ref.size());
    for (size_t j = 0; j < y_ref.size(); j++)
        tilt[j] = (sigma / beta) * g[j] - std::log(floored(y_ref[j]));
}

double ellipsoid_l1_inner(cspan y_ref, cspan g, double sigma, double beta, double mu, cspan y0,
                          int num_actions, int num_next, mspan out, ProxWorkspace& ws,
                          ProxStats* stats) {
    numvec tilt;
    fill_ellipsoid_l1_tilt(y_ref, g, sigma, beta, tilt);
    return ellipsoid_l1_core(tilt, y_ref, g, sigma, beta, mu, y0, num_actions, num_next, out,
                             ws, stats);
}

// Core of the KL-l2 update at fixed mu. `log_y0` and `lin` cache log(y0)
// (-inf off support) and y_ref/sigma - g.
double kl_l2_core(cspan log_y0, cspan lin, cspan y_ref, cspan g, double sigma, double mu,
                  cspan y0, int num_actions, int num_next, mspan out, ProxWorkspace& ws,
                  ProxStats* stats) {
    const int S = num_next;
    for (int a = 0; a < num_actions; a++) {
        const size_t off = size_t(a) * S;
        mspan row = out.subspan(off, S);
        if (mu == 0.0) {
            // Projection restricted to the nominal support; off-support
            // coordinates stay frozen at zero.
            ws.c.clear();
            ws.d.clear();
            for (int j = 0; j < S; j++)
                if (y0[off + j] > 0.0) {
                    ws.d.push_back(double(j));
                    ws.c.push_back(y_ref[off + j] - sigma * g[off + j]);
                }
            ws.a.resize(ws.c.size());
            project_simplex_l2(ws.c, mspan(ws.a.data(), ws.a.size()), ws);
            for (int j = 0; j < S; j++)
                row[j] = 0.0;
            for (size_t k = 0; k < ws.d.size(); k++)
                row[size_t(ws.d[k])] = ws.a[k];
            continue;
        }
        const double log_scale = std::log(sigma * mu);
        ws.a.resize(S);
        for (int j = 0; j < S; j++)
            ws.a[j] = log_y0[off + j] - log_scale + lin[off + j] / mu - 1.0;
        row_sum_bisect(ws.a, -1.0 / mu, sigma * mu, row, stats);
    }
    return kl_against_nominal(out, y0);
}

void fill_kl_caches(cspan y_ref, cspan g, double sigma, cspan y0, numvec& log_y0,
                    numvec& lin) {
    const double inf = std::numeric_limits<double>::infinity();
    log_y0.resize(y0.size());
    lin.resize(y0.size());
    for (size_t j = 0; j < y0.size(); j++) {
        log_y0[j] = y0[j] > 0.0 ? std::log(y0[j]) : -inf;
        lin[j] = y_ref[j] / sigma - g[j];
    }
}

double kl_l2_inner(cspan y_ref, cspan g, double sigma, double mu, cspan y0, int num_actions,
                   int num_next, mspan out, ProxWorkspace& ws, ProxStats* stats) {
    numvec log_y0, lin;
    fill_kl_caches(y_ref, g, sigma, y0, log_y0, lin);
    return kl_l2_core(log_y0, lin, y_ref, g, sigma, mu, y0, num_actions, num_next, out, ws,
                      stats);
}

// Core of the KL-l1 closed form at fixed mu. `base` caches
// beta*log(y_ref) - sigma*g and `log_y0` the nominal logs.
double kl_l1_core(cspan base, cspan log_y0, double sigma, double beta, double mu, cspan y0,
                  int num_actions, int num_next, mspan out) {
    const int S = num_next;
    const double denom = beta + sigma * mu;
    for (int a = 0; a < num_actions; a++) {
        const size_t off = size_t(a) * S;
        mspan row = out.subspan(off, S);
        // Geometric-mean reference tilted by the gradient, in closed form.
        double shift = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < S; j++) {
            if (y0[off + j] > 0.0)
                shift = std::max(shift, (base[off + j] + sigma * mu * log_y0[off + j]) / denom);
        }
        double total = 0.0;
        for (int j = 0; j < S; j++) {
            row[j] = y0[off + j] > 0.0
                         ? std::exp((base[off + j] + sigma * mu * log_y0[off + j]) / denom -
                                    shift)
                         : 0.0;
            total += row[j];
        }
        for (int j = 0; j < S; j++)
            row[j] /= total;
    }
    return kl_against_nominal(out, y0);
}

double kl_l1_inner(cspan y_ref, cspan g, double sigma, double beta, double mu, cspan y0,
                   int num_actions, int num_next, mspan out, ProxWorkspace& ws) {
    (void)ws;
    numvec base(y0.size()), log_y0(y0.size());
    for (size_t j = 0; j < y0.size(); j++) {
        base[j] = beta * std::log(floored(y_ref[j])) - sigma * g[j];
        log_y0[j] = y0[j] > 0.0 ? std::log(y0[j]) : 0.0;
    }
    return kl_l1_core(base, log_y0, sigma, beta, mu, y0, num_actions, num_next, out);
}

} // namespace detail

namespace {

// Outer bisection on the budget multiplier, shared by the four kernels.
// `inner` fills `out` with the mu-penalized minimizer and reports budget
// usage; `objective` evaluates the unpenalized prox objective. `dual_anchor`
// is the objective at the nominal block, which bounds the optimal
// multiplier. `hint`, when it holds the previous call's multiplier, seeds a
// tight bracket; consecutive prox calls move the multiplier slowly.
template <class Inner, class Objective>
void budget_bisect(Inner&& inner, Objective&& objective, double dual_anchor, double radius,
                   double tol, mspan out, ProxStats* stats, const char* what,
                   double* hint = nullptr) {
    double usage = inner(0.0, out);
    if (usage <= radius) {
        if (hint) *hint = -1.0;
        return;
    }
    const double q0 = objective(out); // objective of the mu = 0 solution

    double mu_lo = 0.0;
    double mu_hi = -1.0;
    double usage_hi = 0.0;
    int probes = 0;
    if (hint && *hint > 0.0) {
        const double lo_try = 0.25 * *hint;
        const double hi_try = 4.0 * *hint;
        const double u_lo = inner(lo_try, out);
        probes++;
        if (u_lo <= radius) {
            mu_hi = lo_try;
            usage_hi = u_lo;
        } else {
            const double u_hi = inner(hi_try, out);
            probes++;
            if (u_hi <= radius) {
                mu_lo = lo_try;
                mu_hi = hi_try;
                usage_hi = u_hi;
            } else {
                mu_lo = hi_try; // both probes infeasible: a lower bound at least
            }
        }
    }
    if (mu_hi < 0.0) {
        double probe = std::max((dual_anchor - q0) / radius, 1e-12);
        usage_hi = inner(probe, out);
        probes++;
        int doublings = 0;
        while (usage_hi > radius) {
            probe *= 2.0;
            usage_hi = inner(probe, out);
            probes++;
            if (++doublings > 200) {
                std::ostringstream msg;
                msg << what << ": budget multiplier not bracketed after 200 doublings"
                    << " (mu=" << probe << ", usage=" << usage_hi << ", radius=" << radius
                    << ")";
                throw numerical_failure(msg.str());
            }
        }
        mu_hi = probe;
    }

    numvec best_feasible(out.begin(), out.end());
    long iters = probes;
    for (int it = 0; it < 200; it++) {
        const double certificate = mu_hi * (radius - usage_hi);
        if (certificate <= tol) break;
        if (mu_hi - mu_lo <= 1e-10 * std::max(1.0, mu_hi)) break;
        const double mu = 0.5 * (mu_lo + mu_hi);
        const double u = inner(mu, out);
        iters++;
        if (u <= radius) {
            mu_hi = mu;
            usage_hi = u;
            best_feasible.assign(out.begin(), out.end());
        } else {
            mu_lo = mu;
        }
    }
    std::copy(best_feasible.begin(), best_feasible.end(), out.begin());
    if (hint) *hint = mu_hi;
    const double certificate = mu_hi * (radius - usage_hi);
    if (stats) {
        stats->budget_bisections += iters;
        stats->worst_certificate = std::max(stats->worst_certificate, certificate);
    }
    // Large multipliers limit the certificate's floating-point resolution;
    // only a substantially unmet target means the bracket actually failed.
    if (certificate > 10.0 * tol + 1e-8) {
        std::ostringstream msg;
        msg << what << ": bisection exhausted its bracket with certificate " << certificate
            << " above tol " << tol << " (mu in [" << mu_lo << ", " << mu_hi << "])";
        throw numerical_failure(msg.str());
    }
}

void check_block_sizes(cspan y_ref, cspan g, cspan y0, int num_actions, int num_next,
                       cspan out) {
    const size_t n = size_t(num_actions) * num_next;
    if (y_ref.size() != n || g.size() != n || y0.size() != n || out.size() != n)
        throw invalid_input("kernel prox: block size mismatch");
}

} // namespace

void prox_y_ellipsoid_l2(cspan y_ref, cspan g, double sigma, double radius, cspan y0,
                         int num_actions, int num_next, double tol, mspan out,
                         ProxWorkspace& ws, ProxStats* stats) {
    check_block_sizes(y_ref, g, y0, num_actions, num_next, out);
    if (radius <= 0.0) {
        std::copy(y0.begin(), y0.end(), out.begin());
        return;
    }
    const double anchor = dot(g, y0) + half_sq_dist(y0, y_ref) / sigma;
    budget_bisect(
        [&](double mu, mspan o) {
            return detail::ellipsoid_l2_inner(y_ref, g, sigma, mu, y0, num_actions, num_next, o,
                                              ws);
        },
        [&](cspan y) { return dot(g, y) + half_sq_dist(y, y_ref) / sigma; }, anchor, radius,
        tol, out, stats, "prox_y_ellipsoid_l2", &ws.budget_mu_hint);
}

void prox_y_ellipsoid_l1(cspan y_ref, cspan g, double sigma, double beta, double radius,
                         cspan y0, int num_actions, int num_next, double tol, mspan out,
                         ProxWorkspace& ws, ProxStats* stats) {
    check_block_sizes(y_ref, g, y0, num_actions, num_next, out);
    if (radius <= 0.0) {
        std::copy(y0.begin(), y0.end(), out.begin());
        return;
    }
    const double anchor = dot(g, y0) + (beta / sigma) * kl_block(y0, y_ref);
    detail::fill_ellipsoid_l1_tilt(y_ref, g, sigma, beta, ws.e);
    budget_bisect(
        [&](double mu, mspan o) {
            return detail::ellipsoid_l1_core(ws.e, y_ref, g, sigma, beta, mu, y0, num_actions,
                                             num_next, o, ws, stats);
        },
        [&](cspan y) { return dot(g, y) + (beta / sigma) * kl_block(y, y_ref); }, anchor,
        radius, tol, out, stats, "prox_y_ellipsoid_l1", &ws.budget_mu_hint);
}

void prox_y_kl_l2(cspan y_ref, cspan g, double sigma, double radius, cspan y0, int num_actions,
                  int num_next, double tol, mspan out, ProxWorkspace& ws, ProxStats* stats) {
    check_block_sizes(y_ref, g, y0, num_actions, num_next, out);
    if (radius <= 0.0) {
        std::copy(y0.begin(), y0.end(), out.begin());
        return;
    }
    const double anchor = dot(g, y0) + half_sq_dist(y0, y_ref) / sigma;
    detail::fill_kl_caches(y_ref, g, sigma, y0, ws.e, ws.f);
    budget_bisect(
        [&](double mu, mspan o) {
            return detail::kl_l2_core(ws.e, ws.f, y_ref, g, sigma, mu, y0, num_actions,
                                      num_next, o, ws, stats);
        },
        [&](cspan y) { return dot(g, y) + half_sq_dist(y, y_ref) / sigma; }, anchor, radius,
        tol, out, stats, "prox_y_kl_l2", &ws.budget_mu_hint);
}

void prox_y_kl_l1(cspan y_ref, cspan g, double sigma, double beta, double radius, cspan y0,
                  int num_actions, int num_next, double tol, mspan out, ProxWorkspace& ws,
                  ProxStats* stats) {
    check_block_sizes(y_ref, g, y0, num_actions, num_next, out);
    if (radius <= 0.0) {
        std::copy(y0.begin(), y0.end(), out.begin());
        return;
    }
    const double anchor = dot(g, y0) + (beta / sigma) * kl_block(y0, y_ref);
    ws.e.resize(y0.size());
    ws.f.resize(y0.size());
    for (size_t j = 0; j < y0.size(); j++) {
        ws.e[j] = beta * std::log(floored(y_ref[j])) - sigma * g[j];
        ws.f[j] = y0[j] > 0.0 ? std::log(y0[j]) : 0.0;
    }
    budget_bisect(
        [&](double mu, mspan o) {
            return detail::kl_l1_core(ws.e, ws.f, sigma, beta, mu, y0, num_actions, num_next,
                                      o);
        },
        [&](cspan y) { return dot(g, y) + (beta / sigma) * kl_block(y, y_ref); }, anchor,
        radius, tol, out, stats, "prox_y_kl_l1", &ws.budget_mu_hint);
}

void prox_y(UncertaintyKind kind, NormPair norm_pair, cspan y_ref, cspan g,
            const ProxSetup& setup, double radius, cspan y0, int num_actions, int num_next,
            double tol, mspan out, ProxWorkspace& ws, ProxStats* stats) {
    if (kind == UncertaintyKind::ellipsoidal) {
        if (norm_pair == NormPair::l2l2)
            prox_y_ellipsoid_l2(y_ref, g, setup.sigma, radius, y0, num_actions, num_next, tol,
                                out, ws, stats);
        else
            prox_y_ellipsoid_l1(y_ref, g, setup.sigma, setup.beta, radius, y0, num_actions,
                                num_next, tol, out, ws, stats);
    } else {
        if (norm_pair == NormPair::l2l2)
            prox_y_kl_l2(y_ref, g, setup.sigma, radius, y0, num_actions, num_next, tol, out, ws,
                         stats);
        else
            prox_y_kl_l1(y_ref, g, setup.sigma, setup.beta, radius, y0, num_actions, num_next,
                         tol, out, ws, stats);
    }
}

} // namespace rmdp
