// Command-line driver: instance generation, solver runs, duality-gap
// evaluation and benchmark sweeps over the robust MDP solver library.
//
// Exit codes: 0 success, 2 usage error, 3 budget exhausted before the
// target accuracy, 4 numerical failure inside a kernel.

#include "rmdp/baselines.hpp"
#include "rmdp/fom_vi.hpp"
#include "rmdp/gap.hpp"
#include "rmdp/instances.hpp"
#include "rmdp/io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace rmdp;

constexpr int EXIT_USAGE = 2;
constexpr int EXIT_BUDGET = 3;
constexpr int EXIT_NUMERICAL = 4;

std::string output_path(const std::string& name) {
    if (name.find('/') != std::string::npos) return name;
    const char* dir = std::getenv("RMDP_OUT_DIR");
    if (!dir || !*dir) return name;
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / name).string();
}

struct GenArgs {
    std::string family;
    std::string out;
    std::string kind = "ellipsoidal";
    int states = 10;
    int actions = 10;
    double branch = 0.5;
    double cost_low = 0.0;
    double cost_high = 10.0;
    double discount = 0.8;
    double radius = -1.0; // negative = family default
    int samples = 60;
    uint64_t seed = 0;
};

int run_gen(const GenArgs& args) {
    const UncertaintyKind kind = uncertainty_kind_from_string(args.kind);
    const std::string path = output_path(args.out);
    if (args.family == "garnet") {
        GarnetParams params;
        params.num_states = args.states;
        params.num_actions = args.actions;
        params.branching = args.branch;
        params.cost_low = args.cost_low;
        params.cost_high = args.cost_high;
        params.discount = args.discount;
        params.seed = args.seed;
        const double radius = args.radius >= 0.0 ? args.radius : garnet_default_radius(params);
        const RobustMdpInstance instance = gen_garnet(params, kind, radius);
        save_instance(path, instance, garnet_provenance(params, kind, radius));
    } else if (args.family == "machine") {
        MachineReplacementParams params;
        params.num_states = args.states;
        params.seed = args.seed;
        if (args.radius >= 0.0) params.radius = args.radius;
        const RobustMdpInstance instance = gen_machine_replacement(params, kind);
        save_instance(path, instance, machine_provenance(params, kind));
    } else if (args.family == "healthcare") {
        HealthcareResult result = gen_healthcare(args.states, args.samples, args.seed);
        if (args.radius >= 0.0) result.instance.uncertainty.radius = args.radius;
        result.instance.uncertainty.kind = kind;
        save_instance(path, result.instance,
                      healthcare_provenance(args.states, args.samples, args.seed),
                      &result.samples);
    } else {
        throw CLI::ValidationError("gen", "unknown family: " + args.family);
    }
    std::cout << path << "\n";
    return 0;
}

struct SolveArgs {
    std::string instance_path;
    std::string method = "fomvi";
    std::string norm = "l2";
    int p = 2;
    int q = 2;
    double epsilon = 0.1;
    long max_epochs = 100000;
    double max_seconds = std::numeric_limits<double>::infinity();
    long gap_period = 5;
    int memory = 5;
    uint64_t seed = 0;
    bool random_init = false;
    std::string report_out;
    std::string trace_out;
};

RunId make_run_id(const SolveArgs& args, const RobustMdpInstance& instance, bool fom) {
    RunId id;
    std::ostringstream name;
    name << args.method << "-" << to_string(instance.uncertainty.kind) << "-S"
         << instance.num_states << "A" << instance.num_actions << "-seed" << args.seed;
    id.run_id = name.str();
    id.method = args.method;
    if (fom) {
        id.norm_pair = args.norm;
        id.p = std::to_string(args.p);
        id.q = std::to_string(args.q);
    }
    id.num_states = instance.num_states;
    id.num_actions = instance.num_actions;
    id.uncertainty_kind = to_string(instance.uncertainty.kind);
    id.alpha = instance.uncertainty.radius;
    id.seed = args.seed;
    return id;
}

SolveReport dispatch_solve(const RobustMdpInstance& instance, const SolveArgs& args) {
    if (args.method == "fomvi") {
        Schedule schedule;
        schedule.p = args.p;
        schedule.q = args.q;
        schedule.epsilon = args.epsilon;
        schedule.max_epochs = args.max_epochs;
        schedule.gap_check_period = args.gap_period;
        FomViOptions options;
        options.max_wall_seconds = args.max_seconds;
        if (args.random_init) options.random_init_seed = args.seed;
        return run_fom_vi(instance, norm_pair_from_string(args.norm), schedule, options);
    }
    ViOptions options;
    options.max_sweeps = args.max_epochs;
    options.max_wall_seconds = args.max_seconds;
    options.anderson_memory = args.memory;
    if (args.method == "vi") return vi_robust(instance, args.epsilon, options);
    if (args.method == "gsvi") return gs_vi(instance, args.epsilon, options);
    if (args.method == "avi") return avi(instance, args.epsilon, options);
    if (args.method == "anderson") return anderson_vi(instance, args.epsilon, options);
    throw CLI::ValidationError("solve", "unknown method: " + args.method);
}

int run_solve(const SolveArgs& args) {
    const RobustMdpInstance instance = load_instance(args.instance_path);
    const SolveReport report = dispatch_solve(instance, args);

    if (!args.report_out.empty()) {
        std::ofstream out(output_path(args.report_out));
        if (!out) throw invalid_input("cannot write report: " + args.report_out);
        out << solve_report_to_json(report).dump(2) << "\n";
    }
    if (!args.trace_out.empty())
        write_trace_csv(output_path(args.trace_out),
                        make_run_id(args, instance, args.method == "fomvi"), report.trace);

    std::cout << "method=" << report.method << " converged=" << (report.converged ? 1 : 0)
              << " value=" << format_double(report.value);
    if (report.certified_gap)
        std::cout << " certified_gap=" << format_double(*report.certified_gap);
    std::cout << " epochs=" << report.epochs << " iterations=" << report.iterations
              << " elapsed=" << format_double(report.elapsed_seconds) << "\n";
    return report.converged ? 0 : EXIT_BUDGET;
}

struct GapArgs {
    std::string instance_path;
    std::string pair_path;
    std::string out;
    double tol = 1e-3;
    long max_sweeps = 1000000;
};

int run_gap(const GapArgs& args) {
    const RobustMdpInstance instance = load_instance(args.instance_path);
    std::ifstream in(args.pair_path);
    if (!in) throw invalid_input("cannot open pair file: " + args.pair_path);
    nlohmann::json pj;
    in >> pj;
    const auto [x, y] = pair_from_json(pj, instance.num_states, instance.num_actions);

    GapBudget budget;
    budget.max_sweeps = args.max_sweeps;
    const GapReport report = duality_gap(instance, x, y, args.tol, budget);

    const ordered_json j = gap_report_to_json(report);
    if (!args.out.empty()) {
        std::ofstream out(output_path(args.out));
        if (!out) throw invalid_input("cannot write gap report: " + args.out);
        out << j.dump(2) << "\n";
    }
    std::cout << j.dump() << "\n";
    return report.converged ? 0 : EXIT_BUDGET;
}

struct BenchArgs {
    std::vector<int> sizes{5, 10};
    std::vector<std::string> methods{"fomvi", "vi"};
    std::vector<uint64_t> seeds{0, 1, 2};
    std::string kind = "ellipsoidal";
    std::string norm = "l2";
    int p = 2;
    int q = 2;
    double branch = 0.5;
    double epsilon = 0.1;
    long max_epochs = 100000;
    double max_seconds = std::numeric_limits<double>::infinity();
    std::string out = "bench.csv";
    std::string trace_dir;
};

int run_bench(const BenchArgs& args) {
    const UncertaintyKind kind = uncertainty_kind_from_string(args.kind);
    std::ofstream out(output_path(args.out));
    if (!out) throw invalid_input("cannot write bench csv: " + args.out);
    out << "run_id,method,norm_pair,p,q,S,A,uncertainty_kind,alpha,seed,converged,epochs,"
           "iterations,value,certified_gap,elapsed_seconds\n";

    int failures = 0;
    for (const int size : args.sizes)
        for (const std::string& method : args.methods)
            for (const uint64_t seed : args.seeds) {
                GarnetParams params;
                params.num_states = size;
                params.num_actions = size;
                params.branching = args.branch;
                params.seed = seed;
                const RobustMdpInstance instance = gen_garnet(params, kind);

                SolveArgs solve_args;
                solve_args.method = method;
                solve_args.norm = args.norm;
                solve_args.p = args.p;
                solve_args.q = args.q;
                solve_args.epsilon = args.epsilon;
                solve_args.max_epochs = args.max_epochs;
                solve_args.max_seconds = args.max_seconds;
                solve_args.seed = seed;

                const RunId id = make_run_id(solve_args, instance, method == "fomvi");
                const bool fom = method == "fomvi";
                out << id.run_id << ',' << method << ',' << (fom ? args.norm : "") << ','
                    << (fom ? std::to_string(args.p) : "") << ','
                    << (fom ? std::to_string(args.q) : "") << ',' << size << ',' << size << ','
                    << args.kind << ',' << format_double(instance.uncertainty.radius) << ','
                    << seed << ',';
                try {
                    const SolveReport report = dispatch_solve(instance, solve_args);
                    out << (report.converged ? 1 : 0) << ',' << report.epochs << ','
                        << report.iterations << ',' << format_double(report.value) << ',';
                    if (report.certified_gap) out << format_double(*report.certified_gap);
                    out << ',' << format_double(report.elapsed_seconds) << "\n";
                    if (!args.trace_dir.empty()) {
                        std::filesystem::create_directories(args.trace_dir);
                        write_trace_csv((std::filesystem::path(args.trace_dir) /
                                         (id.run_id + ".csv"))
                                            .string(),
                                        id, report.trace);
                    }
                    if (!report.converged) failures++;
                } catch (const std::exception& e) {
                    // Partial failures are recorded per row; the sweep goes on.
                    out << ",,,,," << "\n";
                    std::cerr << "row " << id.run_id << " failed: " << e.what() << "\n";
                    failures++;
                }
            }
    return failures == 0 ? 0 : EXIT_BUDGET;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust MDP solver suite: first-order and value-iteration methods for "
                 "s-rectangular ellipsoidal and KL uncertainty sets"};
    app.require_subcommand(1);
    app.set_config("--config");

    GenArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen", "Generate an instance file");
    gen->fallthrough();
    gen->add_option("family", gen_args.family, "garnet | machine | healthcare")->required();
    gen->add_option("-o,--out", gen_args.out, "Output JSON path")->required();
    gen->add_option("--states", gen_args.states, "Number of states");
    gen->add_option("--actions", gen_args.actions, "Number of actions (garnet)");
    gen->add_option("--branch", gen_args.branch, "Garnet branching factor in (0,1]");
    gen->add_option("--kind", gen_args.kind, "ellipsoidal | kl");
    gen->add_option("--radius", gen_args.radius, "Uncertainty budget (family default if unset)");
    gen->add_option("--cost-low", gen_args.cost_low, "Garnet cost lower bound");
    gen->add_option("--cost-high", gen_args.cost_high, "Garnet cost upper bound");
    gen->add_option("--discount", gen_args.discount, "Discount factor");
    gen->add_option("--samples", gen_args.samples, "Healthcare perturbation sample count");
    gen->add_option("--seed", gen_args.seed, "Generator seed");

    SolveArgs solve_args;
    CLI::App* solve = app.add_subcommand("solve", "Run a solver on an instance");
    solve->fallthrough();
    solve->add_option("-i,--instance", solve_args.instance_path, "Instance JSON")->required();
    solve->add_option("--method", solve_args.method, "fomvi | vi | gsvi | avi | anderson");
    solve->add_option("--norm", solve_args.norm, "l1 | l2 (fomvi only)");
    solve->add_option("-p", solve_args.p, "Averaging weight exponent (fomvi)");
    solve->add_option("-q", solve_args.q, "Epoch length exponent (fomvi)");
    solve->add_option("--epsilon", solve_args.epsilon, "Target accuracy")
        ->check(CLI::PositiveNumber);
    solve->add_option("--max-epochs", solve_args.max_epochs, "Epoch/sweep budget");
    solve->add_option("--max-seconds", solve_args.max_seconds, "Wall-clock budget");
    solve->add_option("--gap-period", solve_args.gap_period, "Epochs between gap checks");
    solve->add_option("--memory", solve_args.memory, "Anderson memory depth");
    solve->add_option("--seed", solve_args.seed, "Run seed (recorded; drives random init)");
    solve->add_flag("--random-init", solve_args.random_init, "Seeded random initial iterates");
    solve->add_option("-o,--report", solve_args.report_out, "Report JSON path");
    solve->add_option("--trace", solve_args.trace_out, "Trace CSV path");

    GapArgs gap_args;
    CLI::App* gap = app.add_subcommand("gap", "Certify the duality gap of a stored pair");
    gap->fallthrough();
    gap->add_option("-i,--instance", gap_args.instance_path, "Instance JSON")->required();
    gap->add_option("--pair", gap_args.pair_path, "Pair JSON with policy and kernel")
        ->required();
    gap->add_option("--tol", gap_args.tol, "Evaluator tolerance")->check(CLI::PositiveNumber);
    gap->add_option("--max-sweeps", gap_args.max_sweeps, "Contraction sweep budget");
    gap->add_option("-o,--out", gap_args.out, "Gap report JSON path");

    BenchArgs bench_args;
    CLI::App* bench = app.add_subcommand("bench", "Sweep methods over seeded Garnet instances");
    bench->fallthrough();
    bench->add_option("--sizes", bench_args.sizes, "S=A sizes");
    bench->add_option("--methods", bench_args.methods, "Solvers to run");
    bench->add_option("--seeds", bench_args.seeds, "Instance seeds");
    bench->add_option("--kind", bench_args.kind, "ellipsoidal | kl");
    bench->add_option("--norm", bench_args.norm, "Norm pair for fomvi");
    bench->add_option("-p", bench_args.p, "Averaging exponent for fomvi");
    bench->add_option("-q", bench_args.q, "Epoch exponent for fomvi");
    bench->add_option("--branch", bench_args.branch, "Garnet branching factor");
    bench->add_option("--epsilon", bench_args.epsilon, "Target accuracy")
        ->check(CLI::PositiveNumber);
    bench->add_option("--max-epochs", bench_args.max_epochs, "Per-run epoch budget");
    bench->add_option("--max-seconds", bench_args.max_seconds, "Per-run wall-clock budget");
    bench->add_option("-o,--out", bench_args.out, "Aggregate CSV path");
    bench->add_option("--trace-dir", bench_args.trace_dir, "Directory for per-run traces");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : EXIT_USAGE;
    }

    try {
        if (solve->parsed() && solve_args.method != "fomvi")
            for (const char* flag : {"--norm", "-p", "-q", "--gap-period"})
                if (solve->count(flag))
                    throw CLI::ValidationError(
                        "solve", std::string(flag) + " only applies to the fomvi method");
        if (solve->parsed() && solve_args.method != "anderson" && solve->count("--memory"))
            throw CLI::ValidationError("solve", "--memory only applies to the anderson method");
        if (gen->parsed()) return run_gen(gen_args);
        if (solve->parsed()) return run_solve(solve_args);
        if (gap->parsed()) return run_gap(gap_args);
        if (bench->parsed()) return run_bench(bench_args);
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return EXIT_USAGE;
    } catch (const rmdp::invalid_input& e) {
        std::cerr << "error: " << e.what() << "\n";
        return EXIT_USAGE;
    } catch (const rmdp::numerical_failure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return EXIT_NUMERICAL;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
