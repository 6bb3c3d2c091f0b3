#include "rmdp/uncertainty.hpp"

#include "rmdp/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace rmdp;

namespace {

UncertaintySpec ellipsoidal(double radius) { return {UncertaintyKind::ellipsoidal, radius}; }
UncertaintySpec kl(double radius) { return {UncertaintyKind::kullback_leibler, radius}; }

} // namespace

TEST_CASE("set_distance") {
    SUBCASE("distance to the center is zero for both kinds") {
        SplitMix64 rng(5);
        const numvec y0 = oracle::random_block(rng, 2, 3);
        CHECK(set_distance(ellipsoidal(1.0), y0, y0, 2, 3) == doctest::Approx(0.0));
        CHECK(set_distance(kl(1.0), y0, y0, 2, 3) == doctest::Approx(0.0));
    }

    SUBCASE("single-action ellipsoidal arithmetic") {
        const numvec y0{0.5, 0.5};
        const numvec y{1.0, 0.0};
        CHECK(set_distance(ellipsoidal(1.0), y0, y, 1, 2) == doctest::Approx(0.25));
    }

    SUBCASE("single-action KL value") {
        const numvec y0{0.5, 0.5};
        const numvec y{0.6, 0.4};
        // 0.6*log(1.2) + 0.4*log(0.8), evaluated independently
        const double expected = 0.6 * std::log(1.2) + 0.4 * std::log(0.8);
        CHECK(expected == doctest::Approx(0.0201355136).epsilon(1e-8));
        CHECK(set_distance(kl(1.0), y0, y, 1, 2) == doctest::Approx(expected).epsilon(1e-12));
    }

    SUBCASE("KL support violation names the bad entry") {
        const numvec y0{1.0, 0.0, 0.7, 0.3};
        const numvec y{0.9, 0.1, 0.7, 0.3};
        try {
            set_distance(kl(1.0), y0, y, 2, 2);
            FAIL("expected an infeasibility error");
        } catch (const invalid_input& e) {
            const std::string msg = e.what();
            CHECK(msg.find("action 0") != std::string::npos);
            CHECK(msg.find("next state 1") != std::string::npos);
        }
    }

    SUBCASE("a zero coordinate of y contributes nothing") {
        const numvec y0{0.5, 0.5};
        const numvec y{1.0, 0.0};
        CHECK(set_distance(kl(1.0), y0, y, 1, 2) == doctest::Approx(std::log(2.0)));
    }
}

TEST_CASE("is_member") {
    SplitMix64 rng(6);
    const numvec y0 = oracle::random_block(rng, 2, 3);

    SUBCASE("center always belongs") {
        CHECK(is_member(ellipsoidal(0.0), y0, y0, 2, 3, 1e-9));
        CHECK(is_member(kl(0.0), y0, y0, 2, 3, 1e-9));
    }

    SUBCASE("zero radius rejects anything else") {
        numvec y = y0;
        y[0] += 0.05;
        y[1] -= 0.05;
        CHECK_FALSE(is_member(ellipsoidal(0.0), y0, y, 2, 3, 1e-9));
        CHECK_FALSE(is_member(kl(0.0), y0, y, 2, 3, 1e-9));
    }

    SUBCASE("near-boundary points classify by the distance sign") {
        const double tol = 1e-9;
        int tested = 0;
        for (int trial = 0; trial < 60 && tested < 30; trial++) {
            const numvec base = oracle::random_row(rng, 3);
            numvec vertex(3, 0.0);
            vertex[trial % 3] = 1.0;
            const double full = oracle::half_sq(vertex, base);
            if (full < 0.25) continue; // need alpha clear of the tol scale
            const double alpha = 0.5 * full;
            tested++;
            for (const double scale : {1.0 - 10.0 * tol, 1.0 + 10.0 * tol}) {
                // The distance along the segment is quadratic in t, so the
                // point at distance scale*alpha is available in closed form.
                const double t = std::sqrt(scale * alpha / full);
                numvec y(3);
                for (int j = 0; j < 3; j++)
                    y[j] = base[j] + t * (vertex[j] - base[j]);
                CHECK(is_member(ellipsoidal(alpha), base, y, 1, 3, tol) == (scale < 1.0));
            }
        }
        CHECK(tested >= 20);
    }
}

TEST_CASE("linear_max_over_set: degenerate cases") {
    SplitMix64 rng(7);
    const numvec y0 = oracle::random_block(rng, 2, 3);
    numvec d(6);
    for (double& x : d)
        x = 2.0 * rng.next_double() - 1.0;

    SUBCASE("zero radius pins the maximizer at the center") {
        for (const auto& spec : {ellipsoidal(0.0), kl(0.0)}) {
            const LinearMaxResult r = linear_max_over_set(spec, y0, d, 2, 3, 1e-10);
            CHECK(r.value == doctest::Approx(dot(d, y0)).epsilon(1e-12));
            for (size_t i = 0; i < y0.size(); i++)
                CHECK(r.maximizer[i] == doctest::Approx(y0[i]).epsilon(1e-12));
        }
    }

    SUBCASE("zero direction gives zero value") {
        const numvec zero(6, 0.0);
        for (const auto& spec : {ellipsoidal(0.5), kl(0.5)}) {
            const LinearMaxResult r = linear_max_over_set(spec, y0, zero, 2, 3, 1e-10);
            CHECK(r.value == doctest::Approx(0.0));
            CHECK(is_member(spec, y0, r.maximizer, 2, 3, 1e-8));
        }
    }
}

TEST_CASE("linear_max_over_set agrees with a fine feasible-arc grid (A=1, S=2)") {
    SplitMix64 rng(8);
    for (int trial = 0; trial < 25; trial++) {
        const numvec y0 = oracle::random_row(rng, 2);
        numvec d(2);
        for (double& x : d)
            x = 4.0 * rng.next_double() - 2.0;
        const double alpha = 0.02 + 0.5 * rng.next_double();

        for (const auto& spec : {ellipsoidal(alpha), kl(alpha)}) {
            const LinearMaxResult r = linear_max_over_set(spec, y0, d, 1, 2, 1e-9);
            // 1e6-point sweep of the segment y = (t, 1-t).
            double best = -oracle::INF;
            const int n = 1000000;
            for (int i = 0; i <= n; i++) {
                const double t = double(i) / n;
                const numvec y{t, 1.0 - t};
                double dist;
                if (spec.kind == UncertaintyKind::ellipsoidal)
                    dist = oracle::half_sq(y, y0);
                else
                    dist = oracle::kl_div(y, y0);
                if (dist > alpha) continue;
                best = std::max(best, d[0] * t + d[1] * (1.0 - t));
            }
            CHECK(r.value == doctest::Approx(best).epsilon(1e-4));
            CHECK(is_member(spec, y0, r.maximizer, 1, 2, 1e-8));
        }
    }
}

TEST_CASE("linear_max_over_set properties") {
    SplitMix64 rng(9);
    for (int trial = 0; trial < 20; trial++) {
        const int A = 1 + int(rng.next_below(2));
        const int S = 2 + int(rng.next_below(2));
        const numvec y0 = oracle::random_block(rng, A, S);
        numvec d(size_t(A) * S);
        for (double& x : d)
            x = 3.0 * rng.next_double() - 1.0;

        for (const UncertaintyKind kind :
             {UncertaintyKind::ellipsoidal, UncertaintyKind::kullback_leibler}) {
            // Monotone in the radius, feasible output, center lower bound.
            double previous = -oracle::INF;
            for (const double alpha : {0.0, 0.05, 0.2, 0.8, 3.0}) {
                const UncertaintySpec spec{kind, alpha};
                const LinearMaxResult r = linear_max_over_set(spec, y0, d, A, S, 1e-9);
                CHECK(r.value >= previous - 1e-9);
                CHECK(r.value >= dot(d, y0) - 1e-9);
                CHECK(is_member(spec, y0, r.maximizer, A, S, 1e-7));
                previous = r.value;
            }
        }
    }
}
