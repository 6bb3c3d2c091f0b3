#pragma once

#include "rmdp/gap.hpp"
#include "rmdp/instances.hpp"
#include "rmdp/model.hpp"
#include "rmdp/report.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>

namespace rmdp {

using ordered_json = nlohmann::ordered_json;

// Instance files: {num_states, num_actions, discount, costs (row-major S*A),
// nominal_kernel (row-major S*A*S), initial_distribution,
// uncertainty: {kind: "ellipsoidal"|"kl", radius}}. Doubles keep full
// precision. Extra blocks (provenance, samples) are preserved on read.
ordered_json instance_to_json(const RobustMdpInstance& instance);
RobustMdpInstance instance_from_json(const nlohmann::json& j);

RobustMdpInstance load_instance(const std::string& path);
void save_instance(const std::string& path, const RobustMdpInstance& instance,
                   const Provenance& provenance = {},
                   const std::vector<numvec>* samples = nullptr);

// Pair files: {"policy": row-major S*A, "kernel": row-major S*A*S}.
ordered_json pair_to_json(const Policy& x, const AdversarialKernel& y);
std::pair<Policy, AdversarialKernel> pair_from_json(const nlohmann::json& j, int num_states,
                                                    int num_actions);

ordered_json gap_report_to_json(const GapReport& report);

ordered_json solve_report_to_json(const SolveReport& report);

/// Identification columns shared by every row of a trace file.
struct RunId {
    std::string run_id;
    std::string method;
    std::string norm_pair; // empty for the value-iteration methods
    std::string p, q;      // empty unless the method uses schedules
    int num_states = 0;
    int num_actions = 0;
    std::string uncertainty_kind;
    double alpha = 0.0;
    uint64_t seed = 0;
};

extern const char* const TRACE_HEADER;

void write_trace_csv(std::ostream& os, const RunId& id, const std::vector<TraceRow>& rows);
void write_trace_csv(const std::string& path, const RunId& id,
                     const std::vector<TraceRow>& rows);

/// Full-precision shortest-round-trip formatting used in the CSV files.
std::string format_double(double x);

} // namespace rmdp
