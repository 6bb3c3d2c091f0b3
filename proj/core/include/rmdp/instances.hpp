#pragma once

#include "rmdp/model.hpp"

#include <map>
#include <optional>

namespace rmdp {

/**
 * Seeded random MDP family parameterized by a branching factor: each
 * state-action pair reaches ceil(branching * S) distinct next states with
 * probabilities drawn from normalized uniforms.
 */
struct GarnetParams {
    int num_states = 10;
    int num_actions = 10;
    double branching = 0.5; // in (0, 1]
    double cost_low = 0.0;
    double cost_high = 10.0;
    double discount = 0.8;
    uint64_t seed = 0;
};

/// Default budget rule for Garnet instances: sqrt(branching * A).
double garnet_default_radius(const GarnetParams& params);

/// Fully determined by the seed: stream 1 drives costs, stream 2 the
/// kernel rows (one child stream per state-action pair).
RobustMdpInstance gen_garnet(const GarnetParams& params, UncertaintyKind kind,
                             std::optional<double> radius = std::nullopt);

/// Transition part of a Garnet draw, used stand-alone by the perturbation
/// sampler. Row (s,a) uses the kernel stream's child s*A+a.
numvec garnet_kernel(int num_states, int num_actions, double branching, uint64_t seed);

/**
 * Aging-chain machine with two actions (repair / no repair), S-2 operative
 * condition states and two repair states. Costs sit on states: 20 at the
 * worst operative state, 2 in standard repair, 10 in long repair. The
 * transition probabilities are an exposed parameterization, not taken from
 * a published table; provenance records them.
 */
struct MachineReplacementParams {
    int num_states = 10;
    double wear_prob = 0.2;           // operative s -> s+1 under "no repair"
    double repair_success_prob = 0.8; // repair states -> good-as-new
    double radius = 1.0;
    uint64_t seed = 0;
};

RobustMdpInstance gen_machine_replacement(const MachineReplacementParams& params,
                                          UncertaintyKind kind);

/**
 * Patient-evolution chain: S-1 health states plus an absorbing mortality
 * state, three actions (drug levels). Higher drug levels cut the
 * deterioration and mortality rates but cost more per stage. Kernel
 * parameterization is an exposed stand-in recorded in provenance.
 * Budget: sqrt(S * A). N sampled kernels are returned alongside.
 */
struct HealthcareResult {
    RobustMdpInstance instance;
    std::vector<numvec> samples; // N kernels, each S*A*S
};

HealthcareResult gen_healthcare(int num_states, int num_samples, uint64_t seed);

/**
 * N kernels y_i = 0.95 * y0 + 0.05 * g_i with g_i independent Garnet draws
 * at the given branching factor. Sample i uses seed child i.
 */
std::vector<numvec> perturb_samples(const numvec& y0, int num_states, int num_actions,
                                    int num_samples, double branching, uint64_t seed);

/// Generator name, parameters and seed recorded next to emitted instances.
using Provenance = std::map<std::string, std::string>;

Provenance garnet_provenance(const GarnetParams& params, UncertaintyKind kind, double radius);
Provenance machine_provenance(const MachineReplacementParams& params, UncertaintyKind kind);
Provenance healthcare_provenance(int num_states, int num_samples, uint64_t seed);

} // namespace rmdp
