#include "rmdp/baselines.hpp"
#include "rmdp/fom_vi.hpp"
#include "rmdp/instances.hpp"
#include "rmdp/prox.hpp"
#include "rmdp/rng.hpp"

#include <benchmark/benchmark.h>

using namespace rmdp;

namespace {

numvec random_vector(int n, uint64_t seed, double scale) {
    SplitMix64 rng(seed);
    numvec v(n);
    for (double& x : v)
        x = scale * rng.next_double();
    return v;
}

numvec random_block(int A, int S, uint64_t seed) {
    SplitMix64 rng(seed);
    numvec block(size_t(A) * S);
    for (int a = 0; a < A; a++) {
        double total = 0.0;
        for (int j = 0; j < S; j++) {
            block[size_t(a) * S + j] = rng.next_positive();
            total += block[size_t(a) * S + j];
        }
        for (int j = 0; j < S; j++)
            block[size_t(a) * S + j] /= total;
    }
    return block;
}

void SimplexProjection(benchmark::State& state) {
    const int n = int(state.range(0));
    const numvec z = random_vector(n, 3, 4.0);
    ProxWorkspace ws;
    numvec out(n);
    for (auto _ : state) {
        project_simplex_l2(z, out, ws);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetComplexityN(n);
}
BENCHMARK(SimplexProjection)->RangeMultiplier(4)->Range(8, 2048)->Complexity();

void LambertW(benchmark::State& state) {
    double z = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(lambert_w(z));
        z = z < 1e8 ? z * 1.7 : 0.1;
    }
}
BENCHMARK(LambertW);

template <UncertaintyKind kind, NormPair np>
void KernelProx(benchmark::State& state) {
    const int n = int(state.range(0));
    const int A = n, S = n;
    const numvec y_ref = random_block(A, S, 5);
    const numvec y0 = random_block(A, S, 7);
    const numvec g = random_vector(A * S, 9, 2.0);
    ProxWorkspace ws;
    numvec out(size_t(A) * S);
    const double radius = 0.1 * A;
    for (auto _ : state) {
        if (kind == UncertaintyKind::ellipsoidal && np == NormPair::l2l2)
            prox_y_ellipsoid_l2(y_ref, g, 0.05, radius, y0, A, S, 1e-9, out, ws);
        else if (kind == UncertaintyKind::ellipsoidal)
            prox_y_ellipsoid_l1(y_ref, g, 0.05, 0.5 * A, radius, y0, A, S, 1e-9, out, ws);
        else if (np == NormPair::l2l2)
            prox_y_kl_l2(y_ref, g, 0.05, radius, y0, A, S, 1e-9, out, ws);
        else
            prox_y_kl_l1(y_ref, g, 0.05, 0.5 * A, radius, y0, A, S, 1e-9, out, ws);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetComplexityN(n);
}
BENCHMARK(KernelProx<UncertaintyKind::ellipsoidal, NormPair::l2l2>)
    ->RangeMultiplier(2)->Range(8, 64)->Complexity();
BENCHMARK(KernelProx<UncertaintyKind::ellipsoidal, NormPair::l1l1>)
    ->RangeMultiplier(2)->Range(8, 32)->Complexity();
BENCHMARK(KernelProx<UncertaintyKind::kullback_leibler, NormPair::l2l2>)
    ->RangeMultiplier(2)->Range(8, 32)->Complexity();
BENCHMARK(KernelProx<UncertaintyKind::kullback_leibler, NormPair::l1l1>)
    ->RangeMultiplier(2)->Range(8, 64)->Complexity();

void PdaEpoch(benchmark::State& state) {
    const int n = int(state.range(0));
    GarnetParams params;
    params.num_states = n;
    params.num_actions = n;
    params.branching = 0.5;
    params.seed = 1;
    const RobustMdpInstance inst = gen_garnet(params, UncertaintyKind::ellipsoidal);
    const ProxSetup setup = make_step_sizes(inst, NormPair::l2l2);
    const numvec v = random_vector(n, 11, inst.value_upper_bound());
    std::vector<PdaState> states(n);
    for (int s = 0; s < n; s++) {
        states[s].x.assign(n, 1.0 / n);
        states[s].y.assign(inst.nominal_block(s).begin(), inst.nominal_block(s).end());
    }
    ProxWorkspace ws;
    for (auto _ : state) {
        for (int s = 0; s < n; s++)
            pda_step(inst, s, setup, v, states[s], ws);
    }
    state.SetComplexityN(n);
}
BENCHMARK(PdaEpoch)->RangeMultiplier(2)->Range(8, 64)->Complexity();

void RobustBellman(benchmark::State& state) {
    const int n = int(state.range(0));
    GarnetParams params;
    params.num_states = n;
    params.num_actions = n;
    params.branching = 0.5;
    params.seed = 2;
    const RobustMdpInstance inst = gen_garnet(params, UncertaintyKind::ellipsoidal);
    const numvec v = random_vector(n, 13, inst.value_upper_bound());
    numvec warm_x, warm_y;
    for (auto _ : state) {
        BellmanOptions opts;
        opts.warm_x = &warm_x;
        opts.warm_y = &warm_y;
        benchmark::DoNotOptimize(robust_bellman(inst, v, 0, 1e-3, opts).value);
    }
    state.SetComplexityN(n);
}
BENCHMARK(RobustBellman)->RangeMultiplier(2)->Range(4, 32)->Complexity();

} // namespace

BENCHMARK_MAIN();
