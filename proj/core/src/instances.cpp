#include "rmdp/instances.hpp"

#include "rmdp/rng.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace rmdp {

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

} // namespace

double garnet_default_radius(const GarnetParams& params) {
    return std::sqrt(params.branching * params.num_actions);
}

numvec garnet_kernel(int num_states, int num_actions, double branching, uint64_t seed) {
    const int S = num_states;
    const int A = num_actions;
    const int reachable = int(std::ceil(branching * S));
    if (reachable < 1 || branching <= 0.0 || branching > 1.0)
        throw invalid_input("garnet_kernel: branching factor must reach at least one state");

    numvec kernel(size_t(S) * A * S, 0.0);
    SplitMix64 base(seed);
    std::vector<int> indices(S);
    for (int s = 0; s < S; s++)
        for (int a = 0; a < A; a++) {
            SplitMix64 row_rng = base.child(uint64_t(s) * A + a);
            std::iota(indices.begin(), indices.end(), 0);
            // Partial Fisher-Yates: the first `reachable` entries are a
            // uniform draw without replacement.
            for (int i = 0; i < reachable; i++) {
                const int j = i + int(row_rng.next_below(uint64_t(S - i)));
                std::swap(indices[i], indices[j]);
            }
            double total = 0.0;
            numvec draws(reachable);
            for (int i = 0; i < reachable; i++) {
                draws[i] = row_rng.next_positive();
                total += draws[i];
            }
            double* row = kernel.data() + (size_t(s) * A + a) * S;
            for (int i = 0; i < reachable; i++)
                row[indices[i]] = draws[i] / total;
        }
    return kernel;
}

RobustMdpInstance gen_garnet(const GarnetParams& params, UncertaintyKind kind,
                             std::optional<double> radius) {
    const int S = params.num_states;
    const int A = params.num_actions;
    if (S < 1 || A < 1) throw invalid_input("gen_garnet: need positive state/action counts");
    if (!(params.branching > 0.0 && params.branching <= 1.0) ||
        std::ceil(params.branching * S) < 1.0)
        throw invalid_input("gen_garnet: branching factor must reach at least one state");
    if (params.cost_low < 0.0 || params.cost_high < params.cost_low)
        throw invalid_input("gen_garnet: need 0 <= cost_low <= cost_high");
    if (!(params.discount > 0.0 && params.discount < 1.0))
        throw invalid_input("gen_garnet: discount must lie in (0,1)");

    SplitMix64 root(params.seed);
    SplitMix64 cost_rng = root.child(1);

    RobustMdpInstance instance;
    instance.num_states = S;
    instance.num_actions = A;
    instance.discount = params.discount;
    instance.costs.resize(size_t(S) * A);
    for (double& c : instance.costs)
        c = params.cost_low + cost_rng.next_double() * (params.cost_high - params.cost_low);
    instance.nominal_kernel =
        garnet_kernel(S, A, params.branching, root.child(2).next_u64());
    instance.initial_distribution.assign(S, 1.0 / S);
    instance.uncertainty.kind = kind;
    instance.uncertainty.radius = radius.value_or(garnet_default_radius(params));
    instance.validate();
    return instance;
}

RobustMdpInstance gen_machine_replacement(const MachineReplacementParams& params,
                                          UncertaintyKind kind) {
    const int S = params.num_states;
    if (S < 5) throw invalid_input("gen_machine_replacement: need at least 5 states");
    if (!(params.wear_prob > 0.0 && params.wear_prob < 1.0) ||
        !(params.repair_success_prob > 0.0 && params.repair_success_prob < 1.0))
        throw invalid_input("gen_machine_replacement: probabilities must lie in (0,1)");
    const int A = 2; // 0 = repair, 1 = no repair
    const int worst = S - 3;    // worst operative condition
    const int repair = S - 2;   // standard repair
    const int long_repair = S - 1;

    RobustMdpInstance instance;
    instance.num_states = S;
    instance.num_actions = A;
    instance.discount = 0.8;
    instance.costs.assign(size_t(S) * A, 0.0);
    for (int a = 0; a < A; a++) {
        instance.costs[size_t(worst) * A + a] = 20.0;
        instance.costs[size_t(repair) * A + a] = 2.0;
        instance.costs[size_t(long_repair) * A + a] = 10.0;
    }

    instance.nominal_kernel.assign(size_t(S) * A * S, 0.0);
    auto row = [&](int s, int a) { return instance.nominal_kernel.data() + (size_t(s) * A + a) * S; };
    const double wear = params.wear_prob;
    const double fixed = params.repair_success_prob;
    for (int s = 0; s <= worst; s++) {
        row(s, 0)[repair] = 1.0; // repairing sends the machine to the shop
        if (s < worst) {
            row(s, 1)[s] = 1.0 - wear;
            row(s, 1)[s + 1] = wear;
        } else {
            row(s, 1)[s] = 1.0 - wear;
            row(s, 1)[repair] = wear; // breakdown from the worst condition
        }
    }
    for (int a = 0; a < A; a++) {
        row(repair, a)[0] = fixed;
        row(repair, a)[long_repair] = 1.0 - fixed;
        row(long_repair, a)[0] = fixed;
        row(long_repair, a)[long_repair] = 1.0 - fixed;
    }

    instance.initial_distribution.assign(S, 1.0 / S);
    instance.uncertainty.kind = kind;
    instance.uncertainty.radius = params.radius;
    instance.validate();
    return instance;
}

namespace {

// Stand-in healthcare transition rates; recorded in provenance.
constexpr double HEAL_RATE[3] = {0.10, 0.25, 0.40};
constexpr double WORSEN_RATE[3] = {0.40, 0.25, 0.12};
constexpr double DEATH_SCALE[3] = {1.00, 0.60, 0.35};
constexpr double DRUG_COST[3] = {1.0, 3.0, 6.0};
constexpr double MORTALITY_COST = 10.0;

} // namespace

HealthcareResult gen_healthcare(int num_states, int num_samples, uint64_t seed) {
    const int S = num_states;
    if (S < 3) throw invalid_input("gen_healthcare: need at least 3 states");
    if (num_samples < 0) throw invalid_input("gen_healthcare: negative sample count");
    const int A = 3;
    const int mortality = S - 1;

    RobustMdpInstance instance;
    instance.num_states = S;
    instance.num_actions = A;
    instance.discount = 0.8;
    instance.costs.assign(size_t(S) * A, 0.0);
    for (int s = 0; s < S; s++)
        for (int a = 0; a < A; a++)
            instance.costs[size_t(s) * A + a] = s == mortality ? MORTALITY_COST : DRUG_COST[a];

    instance.nominal_kernel.assign(size_t(S) * A * S, 0.0);
    for (int i = 0; i <= S - 2; i++) {
        const double z = double(i) / double(S - 2);
        for (int a = 0; a < A; a++) {
            double* row = instance.nominal_kernel.data() + (size_t(i) * A + a) * S;
            const double heal = HEAL_RATE[a] * (1.0 - 0.5 * z);
            const double worsen = WORSEN_RATE[a] * (0.3 + 0.7 * z);
            const double death = DEATH_SCALE[a] * (0.02 + 0.25 * z);
            double stay = 1.0 - worsen - death;
            if (i > 0) {
                row[i - 1] = heal;
                stay -= heal;
            }
            if (i < S - 2)
                row[i + 1] = worsen;
            else
                row[mortality] += worsen; // the sickest state worsens into mortality
            row[mortality] += death;
            row[i] += stay;
        }
    }
    for (int a = 0; a < A; a++)
        instance.nominal_kernel[(size_t(mortality) * A + a) * S + mortality] = 1.0;

    instance.initial_distribution.assign(S, 1.0 / S);
    instance.uncertainty.kind = UncertaintyKind::ellipsoidal;
    instance.uncertainty.radius = std::sqrt(double(S) * A);
    instance.validate();

    HealthcareResult result;
    result.samples = perturb_samples(instance.nominal_kernel, S, A, num_samples, 0.2,
                                     SplitMix64(seed).child(3).next_u64());
    result.instance = std::move(instance);
    return result;
}

std::vector<numvec> perturb_samples(const numvec& y0, int num_states, int num_actions,
                                    int num_samples, double branching, uint64_t seed) {
    if (y0.size() != size_t(num_states) * num_actions * num_states)
        throw invalid_input("perturb_samples: kernel size mismatch");
    std::vector<numvec> samples;
    samples.reserve(size_t(num_samples));
    SplitMix64 root(seed);
    for (int i = 0; i < num_samples; i++) {
        const numvec noise =
            garnet_kernel(num_states, num_actions, branching, root.child(uint64_t(i)).next_u64());
        numvec sample(y0.size());
        for (size_t j = 0; j < y0.size(); j++)
            sample[j] = 0.95 * y0[j] + 0.05 * noise[j];
        samples.push_back(std::move(sample));
    }
    return samples;
}

Provenance garnet_provenance(const GarnetParams& params, UncertaintyKind kind, double radius) {
    return {{"generator", "garnet"},
            {"version", LIBRARY_VERSION},
            {"num_states", std::to_string(params.num_states)},
            {"num_actions", std::to_string(params.num_actions)},
            {"branching", fmt(params.branching)},
            {"cost_low", fmt(params.cost_low)},
            {"cost_high", fmt(params.cost_high)},
            {"discount", fmt(params.discount)},
            {"uncertainty_kind", to_string(kind)},
            {"radius", fmt(radius)},
            {"seed", std::to_string(params.seed)}};
}

Provenance machine_provenance(const MachineReplacementParams& params, UncertaintyKind kind) {
    return {{"generator", "machine_replacement"},
            {"version", LIBRARY_VERSION},
            {"num_states", std::to_string(params.num_states)},
            {"wear_prob", fmt(params.wear_prob)},
            {"repair_success_prob", fmt(params.repair_success_prob)},
            {"uncertainty_kind", to_string(kind)},
            {"radius", fmt(params.radius)},
            {"seed", std::to_string(params.seed)},
            {"kernel_parameterization", "stand-in aging chain; source tables unavailable"}};
}

Provenance healthcare_provenance(int num_states, int num_samples, uint64_t seed) {
    return {{"generator", "healthcare"},
            {"version", LIBRARY_VERSION},
            {"num_states", std::to_string(num_states)},
            {"num_actions", "3"},
            {"num_samples", std::to_string(num_samples)},
            {"seed", std::to_string(seed)},
            {"kernel_parameterization",
             "stand-in tridiagonal chain with absorbing mortality; source tables unavailable"}};
}

} // namespace rmdp
