#include "rmdp/io.hpp"

#include <fstream>
#include <sstream>

namespace rmdp {

namespace {

numvec to_numvec(const nlohmann::json& j, size_t expected, const char* what) {
    if (!j.is_array() || j.size() != expected)
        throw invalid_input(std::string(what) + ": expected an array of " +
                            std::to_string(expected) + " reals");
    numvec out;
    out.reserve(expected);
    for (const auto& x : j) {
        if (!x.is_number()) throw invalid_input(std::string(what) + ": non-numeric entry");
        out.push_back(x.get<double>());
    }
    return out;
}

} // namespace

std::string format_double(double x) {
    // nlohmann emits the shortest digit string that round-trips; reuse it so
    // CSV and JSON agree byte-for-byte.
    return nlohmann::json(x).dump();
}

ordered_json instance_to_json(const RobustMdpInstance& instance) {
    ordered_json j;
    j["num_states"] = instance.num_states;
    j["num_actions"] = instance.num_actions;
    j["discount"] = instance.discount;
    j["costs"] = instance.costs;
    j["nominal_kernel"] = instance.nominal_kernel;
    j["initial_distribution"] = instance.initial_distribution;
    j["uncertainty"] = {{"kind", to_string(instance.uncertainty.kind)},
                        {"radius", instance.uncertainty.radius}};
    return j;
}

RobustMdpInstance instance_from_json(const nlohmann::json& j) {
    RobustMdpInstance instance;
    try {
        instance.num_states = j.at("num_states").get<int>();
        instance.num_actions = j.at("num_actions").get<int>();
        instance.discount = j.at("discount").get<double>();
        const size_t S = size_t(instance.num_states);
        const size_t A = size_t(instance.num_actions);
        instance.costs = to_numvec(j.at("costs"), S * A, "costs");
        instance.nominal_kernel = to_numvec(j.at("nominal_kernel"), S * A * S, "nominal_kernel");
        instance.initial_distribution =
            to_numvec(j.at("initial_distribution"), S, "initial_distribution");
        const auto& unc = j.at("uncertainty");
        instance.uncertainty.kind =
            uncertainty_kind_from_string(unc.at("kind").get<std::string>());
        instance.uncertainty.radius = unc.at("radius").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input(std::string("malformed instance JSON: ") + e.what());
    }
    instance.validate();
    return instance;
}

RobustMdpInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input("cannot open instance file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input("cannot parse " + path + ": " + e.what());
    }
    return instance_from_json(j);
}

void save_instance(const std::string& path, const RobustMdpInstance& instance,
                   const Provenance& provenance, const std::vector<numvec>* samples) {
    ordered_json j = instance_to_json(instance);
    if (!provenance.empty()) {
        ordered_json p;
        for (const auto& [key, value] : provenance)
            p[key] = value;
        j["provenance"] = p;
    }
    if (samples && !samples->empty()) j["samples"] = *samples;
    std::ofstream out(path);
    if (!out) throw invalid_input("cannot write instance file: " + path);
    out << j.dump(2) << "\n";
}

ordered_json pair_to_json(const Policy& x, const AdversarialKernel& y) {
    ordered_json j;
    j["policy"] = x.rows;
    j["kernel"] = y.blocks;
    return j;
}

std::pair<Policy, AdversarialKernel> pair_from_json(const nlohmann::json& j, int num_states,
                                                    int num_actions) {
    const size_t S = size_t(num_states);
    const size_t A = size_t(num_actions);
    Policy x;
    x.num_states = num_states;
    x.num_actions = num_actions;
    AdversarialKernel y;
    y.num_states = num_states;
    y.num_actions = num_actions;
    try {
        x.rows = to_numvec(j.at("policy"), S * A, "policy");
        y.blocks = to_numvec(j.at("kernel"), S * A * S, "kernel");
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input(std::string("malformed pair JSON: ") + e.what());
    }
    return {std::move(x), std::move(y)};
}

ordered_json gap_report_to_json(const GapReport& report) {
    ordered_json j;
    j["worst_case_value"] = report.worst_case_value;
    j["best_response_value"] = report.best_response_value;
    j["gap"] = report.gap;
    j["tolerance"] = report.tolerance;
    j["worst_case_sweeps"] = report.worst_case_sweeps;
    j["best_response_sweeps"] = report.best_response_sweeps;
    j["converged"] = report.converged;
    j["negative_gap_flagged"] = report.negative_gap_flagged;
    return j;
}

ordered_json solve_report_to_json(const SolveReport& report) {
    ordered_json j;
    j["method"] = report.method;
    j["converged"] = report.converged;
    j["value"] = report.value;
    if (report.certified_gap)
        j["certified_gap"] = *report.certified_gap;
    else
        j["certified_gap"] = nullptr;
    j["stopping_threshold"] = report.stopping_threshold;
    j["epochs"] = report.epochs;
    j["iterations"] = report.iterations;
    j["guard_events"] = report.guard_events;
    j["budget_bisections"] = report.prox_stats.budget_bisections;
    j["simplex_bisections"] = report.prox_stats.simplex_bisections;
    j["elapsed_seconds"] = report.elapsed_seconds;
    j["v"] = report.v;
    j["policy"] = report.policy.rows;
    j["kernel"] = report.kernel.blocks;
    return j;
}

const char* const TRACE_HEADER = "run_id,method,norm_pair,p,q,S,A,uncertainty_kind,alpha,seed,"
                                 "epoch,iteration,residual_inf,certified_gap,elapsed_seconds";

void write_trace_csv(std::ostream& os, const RunId& id, const std::vector<TraceRow>& rows) {
    os << TRACE_HEADER << "\n";
    std::ostringstream prefix;
    prefix << id.run_id << ',' << id.method << ',' << id.norm_pair << ',' << id.p << ','
           << id.q << ',' << id.num_states << ',' << id.num_actions << ','
           << id.uncertainty_kind << ',' << format_double(id.alpha) << ',' << id.seed;
    for (const TraceRow& row : rows) {
        os << prefix.str() << ',' << row.epoch << ',' << row.iteration << ',';
        if (row.residual_inf) os << format_double(*row.residual_inf);
        os << ',';
        if (row.certified_gap) os << format_double(*row.certified_gap);
        os << ',' << format_double(row.elapsed_seconds) << "\n";
    }
}

void write_trace_csv(const std::string& path, const RunId& id,
                     const std::vector<TraceRow>& rows) {
    std::ofstream out(path);
    if (!out) throw invalid_input("cannot write trace file: " + path);
    write_trace_csv(out, id, rows);
}

} // namespace rmdp
