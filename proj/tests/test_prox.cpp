#include "rmdp/prox.hpp"

#include "rmdp/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace rmdp;

namespace {

struct YProxTrial {
    int A, S;
    numvec y_ref, y0, g;
    double sigma, radius, beta;
};

YProxTrial draw_trial(SplitMix64& rng, bool kl_budget) {
    YProxTrial t;
    t.A = 1 + int(rng.next_below(2));
    t.S = 2 + int(rng.next_below(2));
    t.y_ref = oracle::random_block(rng, t.A, t.S);
    t.y0 = oracle::random_block(rng, t.A, t.S);
    t.g.resize(size_t(t.A) * t.S);
    for (double& x : t.g)
        x = 4.0 * rng.next_double() - 2.0;
    t.sigma = 0.2 + 1.8 * rng.next_double();
    t.radius = kl_budget ? 0.02 + 0.8 * rng.next_double() : 0.02 + 1.2 * rng.next_double();
    t.beta = 0.5 * t.A;
    return t;
}

void grid_settings(int dim, int& points, int& stages) {
    switch (dim) {
    case 1: points = 513; stages = 6; break;
    case 2: points = 65; stages = 9; break;
    case 3: points = 25; stages = 12; break;
    default: points = 17; stages = 14; break;
    }
}

enum class Kernel { el2, el1, kl2, kl1 };

double run_kernel(Kernel which, const YProxTrial& t, mspan out, ProxWorkspace& ws,
                  double tol = 1e-9) {
    switch (which) {
    case Kernel::el2:
        prox_y_ellipsoid_l2(t.y_ref, t.g, t.sigma, t.radius, t.y0, t.A, t.S, tol, out, ws);
        break;
    case Kernel::el1:
        prox_y_ellipsoid_l1(t.y_ref, t.g, t.sigma, t.beta, t.radius, t.y0, t.A, t.S, tol, out,
                            ws);
        break;
    case Kernel::kl2:
        prox_y_kl_l2(t.y_ref, t.g, t.sigma, t.radius, t.y0, t.A, t.S, tol, out, ws);
        break;
    case Kernel::kl1:
        prox_y_kl_l1(t.y_ref, t.g, t.sigma, t.beta, t.radius, t.y0, t.A, t.S, tol, out, ws);
        break;
    }
    return 0.0;
}

// Independent objective and budget functions for the oracle.
oracle::BlockProblem oracle_problem(Kernel which, const YProxTrial& t) {
    oracle::BlockProblem p;
    p.A = t.A;
    p.S = t.S;
    p.radius = t.radius;
    p.seed_block = t.y0;
    const bool quad = which == Kernel::el2 || which == Kernel::kl2;
    const bool kl_budget = which == Kernel::kl2 || which == Kernel::kl1;
    p.objective = [&t, quad](cspan y) {
        double div = 0.0;
        if (quad) {
            div = oracle::half_sq(y, t.y_ref) / t.sigma;
        } else {
            for (int a = 0; a < t.A; a++)
                div += oracle::kl_div(y.subspan(size_t(a) * t.S, t.S),
                                      cspan(t.y_ref).subspan(size_t(a) * t.S, t.S));
            div *= t.beta / t.sigma;
        }
        return rmdp::dot(t.g, y) + div;
    };
    p.budget = [&t, kl_budget](cspan y) {
        if (!kl_budget) return oracle::half_sq(y, t.y0);
        double div = 0.0;
        for (int a = 0; a < t.A; a++)
            div += oracle::kl_div(y.subspan(size_t(a) * t.S, t.S),
                                  cspan(t.y0).subspan(size_t(a) * t.S, t.S));
        return div;
    };
    return p;
}

UncertaintySpec spec_for(Kernel which, double radius) {
    const bool kl_budget = which == Kernel::kl2 || which == Kernel::kl1;
    return {kl_budget ? UncertaintyKind::kullback_leibler : UncertaintyKind::ellipsoidal,
            radius};
}

void check_against_grid(Kernel which, const YProxTrial& t) {
    ProxWorkspace ws;
    numvec out(size_t(t.A) * t.S);
    run_kernel(which, t, out, ws);

    const oracle::BlockProblem problem = oracle_problem(which, t);
    CHECK(is_member(spec_for(which, t.radius), t.y0, out, t.A, t.S, 1e-7));

    int points, stages;
    grid_settings(t.A * (t.S - 1), points, stages);
    const oracle::GridResult grid = oracle::grid_minimize_block(problem, points, stages);

    // The grid incumbent localizes the optimum to its own resolution; the
    // fitted-multiplier dual bound certifies optimality much tighter.
    const double lib_obj = problem.objective(out);
    CHECK(lib_obj <= grid.value + 1e-9);
    CHECK(std::abs(lib_obj - grid.value) <= 5e-3);

    oracle::KernelDualProblem dual;
    dual.A = t.A;
    dual.S = t.S;
    dual.entropic_objective = which == Kernel::el1 || which == Kernel::kl1;
    dual.kl_budget = which == Kernel::kl2 || which == Kernel::kl1;
    dual.y_ref = t.y_ref;
    dual.y0 = t.y0;
    dual.g = t.g;
    dual.sigma = t.sigma;
    dual.beta = t.beta;
    dual.radius = t.radius;
    CHECK(oracle::kernel_dual_gap(dual, out) <= 1e-4);
}

} // namespace

TEST_CASE("project_simplex_l2") {
    ProxWorkspace ws;

    SUBCASE("feasible points are fixed") {
        const numvec z{0.2, 0.5, 0.3};
        const numvec out = project_simplex_l2(z);
        for (int i = 0; i < 3; i++)
            CHECK(out[i] == doctest::Approx(z[i]).epsilon(1e-14));
    }

    SUBCASE("constant vectors map to uniform") {
        const numvec out = project_simplex_l2(numvec{7.3, 7.3, 7.3, 7.3});
        for (double o : out)
            CHECK(o == doctest::Approx(0.25).epsilon(1e-14));
    }

    SUBCASE("known active-set case") {
        const numvec out = project_simplex_l2(numvec{1.0, 0.5, -0.5});
        CHECK(out[0] == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(out[1] == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(out[2] == doctest::Approx(0.0));
    }

    SUBCASE("matches KKT enumeration on random points") {
        SplitMix64 rng(11);
        for (int trial = 0; trial < 200; trial++) {
            const int n = 2 + int(rng.next_below(5));
            numvec z(n);
            for (double& x : z)
                x = 6.0 * rng.next_double() - 3.0;
            const numvec got = project_simplex_l2(z);
            const numvec want = oracle::kkt_project_simplex(z);
            double total = 0.0;
            for (int i = 0; i < n; i++) {
                CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
                total += got[i];
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    SUBCASE("non-expansive in the Euclidean norm") {
        SplitMix64 rng(12);
        for (int trial = 0; trial < 100; trial++) {
            numvec z1(4), z2(4);
            for (int i = 0; i < 4; i++) {
                z1[i] = 5.0 * rng.next_double() - 2.5;
                z2[i] = 5.0 * rng.next_double() - 2.5;
            }
            const numvec p1 = project_simplex_l2(z1);
            const numvec p2 = project_simplex_l2(z2);
            double dz = 0.0, dp = 0.0;
            for (int i = 0; i < 4; i++) {
                dz += (z1[i] - z2[i]) * (z1[i] - z2[i]);
                dp += (p1[i] - p2[i]) * (p1[i] - p2[i]);
            }
            CHECK(dp <= dz + 1e-12);
        }
    }

    SUBCASE("permutation equivariant, ties included") {
        const numvec z{0.4, 0.9, 0.4, -0.1};
        const numvec p = project_simplex_l2(z);
        const numvec z_perm{0.9, 0.4, -0.1, 0.4};
        const numvec p_perm = project_simplex_l2(z_perm);
        CHECK(p[1] == doctest::Approx(p_perm[0]));
        CHECK(p[0] == doctest::Approx(p_perm[1]));
        CHECK(p[3] == doctest::Approx(p_perm[2]));
        CHECK(p[2] == doctest::Approx(p_perm[3]));
        CHECK(p[0] == doctest::Approx(p[2])); // equal inputs share the threshold
    }

    SUBCASE("empty input is rejected") {
        numvec empty;
        CHECK_THROWS_AS(project_simplex_l2(empty), invalid_input);
    }
}

TEST_CASE("prox_simplex_entropy") {
    SUBCASE("zero gradient is a fixed point") {
        const numvec x{0.2, 0.3, 0.5};
        const numvec out = prox_simplex_entropy_copy(x, numvec(3, 0.0), 0.7);
        for (int i = 0; i < 3; i++)
            CHECK(out[i] == doctest::Approx(x[i]).epsilon(1e-14));
    }

    SUBCASE("constant gradients cancel in the normalization") {
        const numvec x{0.6, 0.1, 0.3};
        const numvec out = prox_simplex_entropy_copy(x, numvec(3, 4.2), 1.3);
        for (int i = 0; i < 3; i++)
            CHECK(out[i] == doctest::Approx(x[i]).epsilon(1e-12));
    }

    SUBCASE("matches a fine grid on the 2-simplex") {
        const numvec x{0.5, 0.5};
        const numvec g{1.0, 0.0};
        const double tau = 1.0;
        const numvec out = prox_simplex_entropy_copy(x, g, tau);
        double best = oracle::INF;
        double best_t = 0.0;
        const int n = 1000000;
        for (int i = 1; i < n; i++) {
            const double t = double(i) / n;
            const double obj = g[0] * t + (t * std::log(t / x[0]) +
                                           (1.0 - t) * std::log((1.0 - t) / x[1])) /
                                              tau;
            if (obj < best) {
                best = obj;
                best_t = t;
            }
        }
        CHECK(out[0] == doctest::Approx(best_t).epsilon(1e-4));
        const double lib_obj =
            g[0] * out[0] + (out[0] * std::log(out[0] / x[0]) +
                             out[1] * std::log(out[1] / x[1])) / tau;
        CHECK(lib_obj <= best + 1e-4);
    }

    SUBCASE("zero coordinates of the reference stay zero") {
        const numvec x{0.0, 0.4, 0.6};
        const numvec out = prox_simplex_entropy_copy(x, numvec{-5.0, 0.0, 0.0}, 1.0);
        CHECK(out[0] == 0.0);
        CHECK(out[1] + out[2] == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("all-zero reference is rejected") {
        numvec out(2);
        CHECK_THROWS_AS(prox_simplex_entropy(numvec{0.0, 0.0}, numvec{1.0, 1.0}, 1.0, out),
                        invalid_input);
    }
}

TEST_CASE("lambert_w") {
    SUBCASE("anchor values") {
        CHECK(lambert_w(0.0) == 0.0);
        CHECK(lambert_w(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-14));
        const double w1 = oracle::bisect_lambert(1.0, 1.0);
        CHECK(lambert_w(1.0) == doctest::Approx(w1).epsilon(1e-12));
        CHECK(lambert_w(1.0) == doctest::Approx(0.5671432904097838).epsilon(1e-12));
    }

    SUBCASE("round trip over log-spaced arguments") {
        for (int i = 0; i <= 1000; i++) {
            const double z = std::pow(10.0, -12.0 + 20.0 * i / 1000.0);
            const double w = lambert_w(z);
            CHECK(w * std::exp(w) == doctest::Approx(z).epsilon(1e-12));
        }
    }

    SUBCASE("negative input throws") { CHECK_THROWS_AS(lambert_w(-1e-9), invalid_input); }

    SUBCASE("log-argument form covers extreme exponents") {
        const double w = lambert_w_exp(900.0); // exp(900) overflows double
        CHECK(w + std::log(w) == doctest::Approx(900.0).epsilon(1e-13));
        CHECK(lambert_w_exp(-745.0) == doctest::Approx(std::exp(-745.0)).epsilon(1e-12));
    }
}

TEST_CASE("kernel prox: reference fixed points and vacuous budgets") {
    SplitMix64 rng(13);
    ProxWorkspace ws;
    for (const Kernel which : {Kernel::el2, Kernel::el1, Kernel::kl2, Kernel::kl1}) {
        CAPTURE(int(which));
        YProxTrial t = draw_trial(rng, which == Kernel::kl2 || which == Kernel::kl1);
        numvec out(size_t(t.A) * t.S);

        // Zero gradient from the nominal block returns the nominal block.
        t.y_ref = t.y0;
        std::fill(t.g.begin(), t.g.end(), 0.0);
        run_kernel(which, t, out, ws);
        for (size_t i = 0; i < out.size(); i++)
            CHECK(out[i] == doctest::Approx(t.y0[i]).epsilon(1e-9));

        // A huge budget reduces to the unconstrained per-action prox.
        t = draw_trial(rng, which == Kernel::kl2 || which == Kernel::kl1);
        t.radius = 1e6;
        out.assign(size_t(t.A) * t.S, 0.0);
        run_kernel(which, t, out, ws);
        for (int a = 0; a < t.A; a++) {
            cspan ref = cspan(t.y_ref).subspan(size_t(a) * t.S, t.S);
            cspan grad = cspan(t.g).subspan(size_t(a) * t.S, t.S);
            numvec expected(t.S);
            if (which == Kernel::el2 || which == Kernel::kl2) {
                numvec point(t.S);
                for (int j = 0; j < t.S; j++)
                    point[j] = ref[j] - t.sigma * grad[j];
                expected = project_simplex_l2(point);
            } else {
                prox_simplex_entropy(ref, grad, t.sigma / t.beta, expected);
            }
            for (int j = 0; j < t.S; j++)
                CHECK(out[size_t(a) * t.S + j] ==
                      doctest::Approx(expected[j]).epsilon(1e-8).scale(1.0));
        }
    }
}

TEST_CASE("kernel prox: zero radius pins the nominal block") {
    SplitMix64 rng(14);
    ProxWorkspace ws;
    for (const Kernel which : {Kernel::el2, Kernel::el1, Kernel::kl2, Kernel::kl1}) {
        YProxTrial t = draw_trial(rng, true);
        t.radius = 0.0;
        numvec out(size_t(t.A) * t.S);
        run_kernel(which, t, out, ws);
        for (size_t i = 0; i < out.size(); i++)
            CHECK(out[i] == doctest::Approx(t.y0[i]).epsilon(1e-9));
    }
}

TEST_CASE("kernel prox: objective matches the refined grid oracle") {
    SplitMix64 rng(15);
    for (const Kernel which : {Kernel::el2, Kernel::el1, Kernel::kl2, Kernel::kl1}) {
        CAPTURE(int(which));
        const bool kl_budget = which == Kernel::kl2 || which == Kernel::kl1;
        for (int trial = 0; trial < 25; trial++) {
            const YProxTrial t = draw_trial(rng, kl_budget);
            check_against_grid(which, t);
        }
    }
}

TEST_CASE("kernel prox: KL budgets freeze the nominal support") {
    ProxWorkspace ws;
    YProxTrial t;
    t.A = 2;
    t.S = 3;
    t.y0 = {0.6, 0.4, 0.0, 0.0, 0.3, 0.7};
    t.y_ref = {0.5, 0.5, 0.0, 0.0, 0.5, 0.5};
    t.g = {-3.0, 0.0, -5.0, -5.0, 0.0, -1.0}; // pushes mass off the support
    t.sigma = 1.0;
    t.beta = 1.0;
    t.radius = 0.4;
    numvec out(6);
    for (const Kernel which : {Kernel::kl2, Kernel::kl1}) {
        run_kernel(which, t, out, ws);
        CHECK(out[2] == 0.0);
        CHECK(out[3] == 0.0);
        CHECK(is_member({UncertaintyKind::kullback_leibler, t.radius}, t.y0, out, 2, 3, 1e-7));
    }
}

TEST_CASE("kernel prox: budget usage decreases along the multiplier") {
    SplitMix64 rng(16);
    ProxWorkspace ws;
    for (int trial = 0; trial < 10; trial++) {
        const YProxTrial te = draw_trial(rng, false);
        const YProxTrial tk = draw_trial(rng, true);
        numvec out(size_t(te.A) * te.S);
        double previous = oracle::INF;
        for (const double mu : {0.0, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 100.0}) {
            const double usage = detail::ellipsoid_l2_inner(te.y_ref, te.g, te.sigma, mu,
                                                            te.y0, te.A, te.S, out, ws);
            CHECK(usage <= previous + 1e-9);
            previous = usage;
        }
        previous = oracle::INF;
        out.assign(size_t(te.A) * te.S, 0.0);
        for (const double mu : {0.0, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 100.0}) {
            const double usage = detail::ellipsoid_l1_inner(te.y_ref, te.g, te.sigma, te.beta,
                                                            mu, te.y0, te.A, te.S, out, ws,
                                                            nullptr);
            CHECK(usage <= previous + 1e-9);
            previous = usage;
        }
        previous = oracle::INF;
        out.assign(size_t(tk.A) * tk.S, 0.0);
        for (const double mu : {0.0, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 100.0}) {
            const double usage = detail::kl_l2_inner(tk.y_ref, tk.g, tk.sigma, mu, tk.y0, tk.A,
                                                     tk.S, out, ws, nullptr);
            CHECK(usage <= previous + 1e-9);
            previous = usage;
        }
        previous = oracle::INF;
        for (const double mu : {0.0, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 100.0}) {
            const double usage = detail::kl_l1_inner(tk.y_ref, tk.g, tk.sigma, tk.beta, mu,
                                                     tk.y0, tk.A, tk.S, out, ws);
            CHECK(usage <= previous + 1e-9);
            previous = usage;
        }
    }
}

TEST_CASE("kernel prox: subnormal reference coordinates do not break logs") {
    ProxWorkspace ws;
    YProxTrial t;
    t.A = 1;
    t.S = 3;
    t.y0 = {0.3, 0.3, 0.4};
    t.y_ref = {1e-320, 0.5, 0.5 - 1e-320};
    t.g = {0.5, -0.5, 0.0};
    t.sigma = 1.0;
    t.beta = 0.5;
    t.radius = 0.2;
    numvec out(3);
    for (const Kernel which : {Kernel::el1, Kernel::kl1}) {
        run_kernel(which, t, out, ws);
        for (double o : out)
            CHECK(std::isfinite(o));
        CHECK(sum(out) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("kernel prox certifies at solver-scale dimensions") {
    // The exhaustive oracle battery runs at tiny dimensions; the duality
    // certificate scales, so spot-check the sizes the solvers actually use.
    SplitMix64 rng(17);
    ProxWorkspace ws;
    const int A = 4, S = 6;
    for (const Kernel which : {Kernel::el2, Kernel::el1, Kernel::kl2, Kernel::kl1}) {
        CAPTURE(int(which));
        const bool kl_budget = which == Kernel::kl2 || which == Kernel::kl1;
        for (int trial = 0; trial < 4; trial++) {
            YProxTrial t;
            t.A = A;
            t.S = S;
            t.y_ref = oracle::random_block(rng, A, S);
            t.y0 = oracle::random_block(rng, A, S);
            t.g.resize(size_t(A) * S);
            for (double& x : t.g)
                x = 4.0 * rng.next_double() - 2.0;
            t.sigma = 0.2 + 1.8 * rng.next_double();
            t.beta = 0.5 * A;
            t.radius = kl_budget ? 0.05 + 0.6 * rng.next_double()
                                 : 0.05 + 1.0 * rng.next_double();
            numvec out(size_t(A) * S);
            run_kernel(which, t, out, ws);
            CHECK(is_member(spec_for(which, t.radius), t.y0, out, A, S, 1e-7));

            oracle::KernelDualProblem dual;
            dual.A = A;
            dual.S = S;
            dual.entropic_objective = which == Kernel::el1 || which == Kernel::kl1;
            dual.kl_budget = kl_budget;
            dual.y_ref = t.y_ref;
            dual.y0 = t.y0;
            dual.g = t.g;
            dual.sigma = t.sigma;
            dual.beta = t.beta;
            dual.radius = t.radius;
            CHECK(oracle::kernel_dual_gap(dual, out) <= 1e-4);
        }
    }
}
