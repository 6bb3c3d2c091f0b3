#include "rmdp/instances.hpp"

#include "rmdp/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace rmdp;

TEST_CASE("gen_garnet") {
    GarnetParams params;
    params.num_states = 10;
    params.num_actions = 4;
    params.branching = 0.5;
    params.seed = 42;

    SUBCASE("defaults follow the benchmark conventions") {
        const RobustMdpInstance inst = gen_garnet(params, UncertaintyKind::ellipsoidal);
        CHECK(inst.discount == 0.8);
        CHECK(inst.uncertainty.radius == doctest::Approx(std::sqrt(0.5 * 4)));
        for (double c : inst.costs) {
            CHECK(c >= 0.0);
            CHECK(c <= 10.0);
        }
        inst.validate();
    }

    SUBCASE("row support size is exactly ceil(branching * S)") {
        for (const double branching : {0.13, 0.5, 0.91}) {
            params.branching = branching;
            const RobustMdpInstance inst = gen_garnet(params, UncertaintyKind::ellipsoidal);
            const int expected = int(std::ceil(branching * 10));
            for (int s = 0; s < 10; s++)
                for (int a = 0; a < 4; a++) {
                    int support = 0;
                    for (double p : inst.nominal_row(s, a))
                        if (p > 0.0) support++;
                    CHECK(support == expected);
                }
        }
    }

    SUBCASE("full branching fills every row") {
        params.branching = 1.0;
        const RobustMdpInstance inst = gen_garnet(params, UncertaintyKind::ellipsoidal);
        for (double p : inst.nominal_kernel)
            CHECK(p > 0.0);
    }

    SUBCASE("same seed, bitwise identical instance") {
        const RobustMdpInstance a = gen_garnet(params, UncertaintyKind::kullback_leibler);
        const RobustMdpInstance b = gen_garnet(params, UncertaintyKind::kullback_leibler);
        CHECK(a.costs == b.costs);
        CHECK(a.nominal_kernel == b.nominal_kernel);
        params.seed = 43;
        const RobustMdpInstance c = gen_garnet(params, UncertaintyKind::kullback_leibler);
        CHECK(a.nominal_kernel != c.nominal_kernel);
    }

    SUBCASE("zero branching is rejected") {
        params.branching = 0.0;
        CHECK_THROWS_AS(gen_garnet(params, UncertaintyKind::ellipsoidal), invalid_input);
    }
}

TEST_CASE("gen_machine_replacement") {
    MachineReplacementParams params;
    params.num_states = 10;

    SUBCASE("costs sit on the documented states") {
        const RobustMdpInstance inst =
            gen_machine_replacement(params, UncertaintyKind::ellipsoidal);
        const numvec expected{0, 0, 0, 0, 0, 0, 0, 20, 2, 10};
        for (int s = 0; s < 10; s++)
            for (int a = 0; a < 2; a++)
                CHECK(inst.cost(s, a) == expected[s]);
        CHECK(inst.num_actions == 2);
        for (double p : inst.initial_distribution)
            CHECK(p == doctest::Approx(0.1));
    }

    SUBCASE("rows are stochastic and the instance validates") {
        const RobustMdpInstance inst =
            gen_machine_replacement(params, UncertaintyKind::kullback_leibler);
        inst.validate();
    }

    SUBCASE("deterministic in the parameter record") {
        const RobustMdpInstance a = gen_machine_replacement(params, UncertaintyKind::ellipsoidal);
        const RobustMdpInstance b = gen_machine_replacement(params, UncertaintyKind::ellipsoidal);
        CHECK(a.nominal_kernel == b.nominal_kernel);
    }

    SUBCASE("too few states") {
        params.num_states = 4;
        CHECK_THROWS_AS(gen_machine_replacement(params, UncertaintyKind::ellipsoidal),
                        invalid_input);
    }
}

TEST_CASE("gen_healthcare") {
    SUBCASE("mortality is absorbing under every action") {
        const HealthcareResult result = gen_healthcare(8, 5, 3);
        const RobustMdpInstance& inst = result.instance;
        const int mortality = 7;
        for (int a = 0; a < 3; a++) {
            cspan row = inst.nominal_row(mortality, a);
            for (int sp = 0; sp < 8; sp++)
                CHECK(row[sp] == (sp == mortality ? 1.0 : 0.0));
        }
        inst.validate();
    }

    SUBCASE("radius follows sqrt(S*A)") {
        const HealthcareResult result = gen_healthcare(30, 0, 0);
        CHECK(result.instance.uncertainty.radius == doctest::Approx(std::sqrt(90.0)));
        CHECK(result.instance.uncertainty.radius == doctest::Approx(9.4868).epsilon(1e-4));
    }

    SUBCASE("samples recombine the nominal kernel with Garnet noise") {
        const int S = 6, N = 4;
        const HealthcareResult result = gen_healthcare(S, N, 17);
        CHECK(int(result.samples.size()) == N);
        // Regenerate the noise kernels from the documented stream layout.
        SplitMix64 root(SplitMix64(17).child(3).next_u64());
        for (int i = 0; i < N; i++) {
            const numvec noise = garnet_kernel(S, 3, 0.2, root.child(uint64_t(i)).next_u64());
            for (size_t j = 0; j < noise.size(); j++)
                CHECK(result.samples[i][j] ==
                      doctest::Approx(0.95 * result.instance.nominal_kernel[j] + 0.05 * noise[j])
                          .epsilon(1e-15));
            // Rows remain stochastic.
            for (int s = 0; s < S; s++)
                for (int a = 0; a < 3; a++) {
                    double total = 0.0;
                    for (int sp = 0; sp < S; sp++)
                        total += result.samples[i][(size_t(s) * 3 + a) * S + sp];
                    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
                }
        }
    }

    SUBCASE("too few states") { CHECK_THROWS_AS(gen_healthcare(2, 0, 0), invalid_input); }
}

TEST_CASE("perturb_samples") {
    SplitMix64 rng(23);
    const int S = 5, A = 2;
    const numvec y0 = [&] {
        numvec k;
        for (int i = 0; i < S * A; i++) {
            const numvec row = oracle::random_row(rng, S);
            k.insert(k.end(), row.begin(), row.end());
        }
        return k;
    }();

    SUBCASE("empty request") {
        CHECK(perturb_samples(y0, S, A, 0, 0.2, 1).empty());
    }

    SUBCASE("bounded deviation from the nominal kernel") {
        const auto samples = perturb_samples(y0, S, A, 6, 0.2, 9);
        SplitMix64 root(9);
        for (int i = 0; i < 6; i++) {
            const numvec noise = garnet_kernel(S, A, 0.2, root.child(uint64_t(i)).next_u64());
            double max_noise_dev = 0.0;
            for (size_t j = 0; j < y0.size(); j++)
                max_noise_dev = std::max(max_noise_dev, std::abs(noise[j] - y0[j]));
            CHECK(linf_diff(samples[i], y0) <= 0.05 * max_noise_dev + 1e-15);
        }
    }
}
