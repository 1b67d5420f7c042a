#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrtnet/errors.hpp"
#include "mrtnet/estimators.hpp"
#include "mrtnet/harness.hpp"
#include "mrtnet/meanfield.hpp"
#include "mrtnet/oracle.hpp"
#include "mrtnet/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string scenario;
    std::string out_dir;
    std::string format = "csv";
    long seed = -1; // -1: keep config seed
    int threads = 0;
};

mrtnet::ExperimentConfig load_config(const CommonArgs& args) {
    mrtnet::ExperimentConfig config;
    if (!args.scenario.empty())
        config = mrtnet::scenario_config(args.scenario);
    else if (!args.config_path.empty())
        config = mrtnet::ExperimentConfig::load(args.config_path);
    else
        throw mrtnet::ConfigInvalidError("pass --config PATH (or --scenario NAME)");
    if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
    if (!args.out_dir.empty()) config.out_dir = args.out_dir;
    if (args.threads > 0) config.threads = args.threads;
    if (!args.format.empty()) config.format = args.format;
    return config;
}

void emit(const json& j, const std::string& out_dir, const std::string& filename) {
    std::cout << j.dump(2) << "\n";
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream out(fs::path(out_dir) / filename);
        out << j.dump(2) << "\n";
    }
}

int cmd_validate(const CommonArgs& args) {
    const auto config = load_config(args);
    const auto setup = mrtnet::build_setup(config);
    json j;
    j["assumptions"] = setup.report.to_json();
    j["graph"] = {{"n", setup.graph.n},
                  {"edges", setup.graph.edge_count()},
                  {"max_degree", setup.graph.max_degree}};
    emit(j, config.out_dir, "assumptions.json");
    if (!setup.report.contraction_ok) {
        std::cerr << "validation failed: contraction constant C = " << setup.report.C
                  << " >= 1\n";
        return 1;
    }
    return 0;
}

int cmd_simulate(const CommonArgs& args, long replication, long horizon_override) {
    const auto config = load_config(args);
    const auto setup = mrtnet::build_setup(config);
    const long max_h = *std::max_element(config.horizons.begin(), config.horizons.end());
    const long T = horizon_override > 0 ? horizon_override : config.burn_in + max_h;
    const mrtnet::Trajectory traj =
        mrtnet::simulate(setup.graph, setup.model, setup.policy, T, config.seed, setup.init,
                         static_cast<std::uint64_t>(replication));
    const std::string dir = config.out_dir.empty() ? "." : config.out_dir;
    fs::create_directories(dir);
    if (config.format != "csv" && config.format != "bin")
        throw mrtnet::ConfigInvalidError("simulate supports --format csv or bin");
    const std::string path = (fs::path(dir) / ("trajectory." + config.format)).string();
    mrtnet::save_trajectory(traj, path, config.format);
    std::cout << "wrote " << path << " (n=" << traj.n << ", T=" << traj.T << ")\n";
    return 0;
}

int cmd_meanfield(const CommonArgs& args) {
    const auto config = load_config(args);
    const auto setup = mrtnet::build_setup(config);
    mrtnet::FixedPointOptions opts;
    opts.report = &setup.report;
    const auto sol = mrtnet::mf_fixed_point(setup.graph, setup.model, setup.policy, opts);
    json j;
    j["meanfield"] = sol.to_json();
    for (const auto& r : config.estimands) {
        if (r.kind == "lde")
            j["mf_lde"] = mrtnet::mf_lde(setup.graph, setup.model, setup.policy, r.gamma1,
                                         r.gamma2, opts);
        if (r.kind == "lte") {
            const std::vector<double> v =
                r.v.empty() ? std::vector<double>(setup.graph.n, 1.0) : r.v;
            j["mf_lte"] = mrtnet::mf_lte(setup.graph, setup.model, setup.policy, r.delta, v, opts);
            const auto p = mrtnet::mf_derivative(setup.graph, setup.model, sol, setup.policy, v);
            double total = 0;
            for (double x : p) total += x;
            j["mf_derivative_mean"] = total / setup.graph.n;
        }
    }
    emit(j, config.out_dir, "meanfield.json");
    return 0;
}

int cmd_oracle(const CommonArgs& args) {
    const auto config = load_config(args);
    const auto setup = mrtnet::build_setup(config);
    mrtnet::OracleOptions opts;
    opts.cap = config.oracle_cap;
    const auto dist = mrtnet::exact_stationary(setup.graph, setup.model, setup.policy, opts);
    json j;
    j["stationary_mean"] = mrtnet::exact_mean(dist);
    j["residual"] = dist.residual;
    j["sde_stationary"] = mrtnet::exact_sde_stationary(setup.graph, setup.model, dist);
    for (const auto& r : config.estimands) {
        if (r.kind == "lde")
            j["exact_lde"] = mrtnet::exact_lde(setup.graph, setup.model, setup.policy, r.gamma1,
                                               r.gamma2, opts);
        if (r.kind == "lte") {
            mrtnet::PolicyVector shifted = setup.policy;
            for (int i = 0; i < setup.graph.n; ++i)
                shifted.pi[i] += r.delta * (r.v.empty() ? 1.0 : r.v[i]);
            j["exact_lte"] =
                mrtnet::exact_lte(setup.graph, setup.model, shifted, setup.policy, opts);
        }
    }
    emit(j, config.out_dir, "oracle.json");
    if (!config.out_dir.empty()) {
        std::ofstream out(fs::path(config.out_dir) / "distribution.csv");
        mrtnet::write_distribution_csv(dist, out);
    }
    return 0;
}

int cmd_estimate(const CommonArgs& args, const std::string& traj_path) {
    const auto config = load_config(args);
    const auto setup = mrtnet::build_setup(config);
    const mrtnet::Trajectory raw = mrtnet::load_trajectory(traj_path);
    if (raw.graph_hash != setup.graph.hash())
        throw mrtnet::ConfigInvalidError(
            "trajectory was generated on a different graph than the config builds");
    if (raw.model_hash != setup.model.hash())
        std::cerr << "mrtnet: warning: trajectory model hash differs from config model\n";
    const long burn = std::min(config.burn_in, raw.T > 0 ? raw.T - 1 : 0);
    const mrtnet::Trajectory stationary = raw.drop_prefix(burn);
    const mrtnet::PolicyVector pi{raw.policy};

    std::vector<mrtnet::EstimateReport> reports;
    for (const auto& r : config.estimands) {
        mrtnet::EstimateReport rep;
        rep.estimand = r.kind;
        rep.trajectory_hash = mrtnet::trajectory_metadata_hash(raw);
        if (r.kind == "sde_ipw") {
            rep.value = mrtnet::sde_ipw(raw, r.t, pi);
            rep.tuning = {{"t", r.t}};
        } else if (r.kind == "sde_ipw_avg") {
            rep.value = mrtnet::sde_ipw_avg(raw, r.t0, r.t1, pi);
            rep.tuning = {{"t0", r.t0}, {"t1", r.t1}};
        } else if (r.kind == "lde") {
            rep.value = mrtnet::lde_hat(stationary, r.gamma1, r.gamma2);
            rep.tuning = {{"gamma1", r.gamma1}, {"gamma2", r.gamma2}, {"burn_in", burn}};
            json occupancy = json::array();
            for (int i = 0; i < stationary.n; ++i) {
                const auto counts = mrtnet::cell_counts(stationary, i);
                occupancy.push_back({counts[0][0], counts[0][1], counts[1][0], counts[1][1]});
            }
            rep.diagnostics["cell_counts"] = std::move(occupancy);
        } else if (r.kind == "lte") {
            const std::vector<double> v = r.v.empty() ? std::vector<double>(raw.n, 1.0) : r.v;
            const auto sys = mrtnet::build_lte_system(stationary, setup.graph, pi, v, r.lte);
            rep.value = mrtnet::lte_solve(setup.graph, sys, r.delta, r.lte.solve_tol);
            const double delta_T_used =
                r.lte.delta_T > 0 ? r.lte.delta_T
                                  : std::pow(static_cast<double>(stationary.T), -0.25);
            rep.tuning = {{"delta", r.delta},
                          {"eta", r.lte.eta},
                          {"kappa", r.lte.kappa},
                          {"delta_T", delta_T_used},
                          {"burn_in", burn}};
            rep.diagnostics["fprime_floor"] = sys.any_fprime_floor;
            rep.diagnostics["omega_clip"] = sys.any_omega_clip;
            rep.diagnostics["min_cell_count"] = sys.min_cell_count;
        }
        reports.push_back(std::move(rep));
    }

    for (const auto& rep : reports) std::cout << rep.to_json().dump() << "\n";
    if (!config.out_dir.empty()) {
        fs::create_directories(config.out_dir);
        const fs::path csv_path = fs::path(config.out_dir) / "estimates.csv";
        const bool fresh = !fs::exists(csv_path);
        std::ofstream csv(csv_path, std::ios::app);
        if (fresh) csv << "estimand,value,tuning,trajectory_hash\n";
        std::ofstream jsonl(fs::path(config.out_dir) / "estimates.jsonl", std::ios::app);
        for (const auto& rep : reports) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", rep.value);
            csv << rep.estimand << "," << buf << "," << rep.tuning.dump() << ","
                << rep.trajectory_hash << "\n";
            jsonl << rep.to_json().dump() << "\n";
        }
    }
    return 0;
}

int cmd_experiment(const CommonArgs& args) {
    const auto config = load_config(args);
    const auto result = mrtnet::run_experiment(config);
    std::cout << "truth_mode=" << result.truth_mode << " C=" << result.report.C
              << " contraction_ok=" << (result.report.contraction_ok ? "yes" : "no") << "\n";
    for (const auto& s : result.summary)
        std::cout << s.estimand << " horizon=" << s.horizon << " count=" << s.count
                  << " median_error=" << s.median_error << " iqr=" << s.iqr_error
                  << " median_abs_error=" << s.median_abs_error << "\n";
    if (!config.out_dir.empty()) std::cout << "wrote reports to " << config.out_dir << "\n";
    return 0;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_scenario = false) {
    cmd->add_option("--config", args.config_path, "experiment config file (JSON)");
    if (with_scenario)
        cmd->add_option("--scenario", args.scenario, "built-in scenario name");
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--format", args.format, "output format: csv or json")
        ->check(CLI::IsMember({"csv", "json", "bin"}));
    cmd->add_option("--threads", args.threads, "worker threads (0 = hardware)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation and estimation for micro-randomized trials on interference networks"};
    app.require_subcommand(1);

    CommonArgs args;
    long replication = 0;
    long horizon_override = 0;
    std::string traj_path;
    bool list_scenarios = false;
    std::string dump_scenario;

    auto* validate = app.add_subcommand("validate", "check model/graph assumption constants");
    add_common(validate, args);

    auto* simulate = app.add_subcommand("simulate", "simulate and dump one trajectory");
    add_common(simulate, args);
    simulate->add_option("--replication", replication, "replication key");
    simulate->add_option("--horizon", horizon_override, "override total transitions");

    auto* meanfield = app.add_subcommand("meanfield", "mean-field fixed point and derivatives");
    add_common(meanfield, args);

    auto* oracle = app.add_subcommand("oracle", "exact stationary distribution and estimands");
    add_common(oracle, args);

    auto* estimate = app.add_subcommand("estimate", "run estimators on a trajectory file");
    add_common(estimate, args);
    estimate->add_option("--traj", traj_path, "trajectory file (csv or binary)")->required();

    auto* experiment = app.add_subcommand("experiment", "run a config-driven experiment");
    add_common(experiment, args, true);
    experiment->add_flag("--list-scenarios", list_scenarios, "list built-in scenarios");
    experiment->add_option("--dump-scenario", dump_scenario, "print a built-in scenario config");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(args);
        if (simulate->parsed()) return cmd_simulate(args, replication, horizon_override);
        if (meanfield->parsed()) return cmd_meanfield(args);
        if (oracle->parsed()) return cmd_oracle(args);
        if (estimate->parsed()) return cmd_estimate(args, traj_path);
        if (experiment->parsed()) {
            if (list_scenarios) {
                for (const auto& name : mrtnet::scenario_names()) std::cout << name << "\n";
                return 0;
            }
            if (!dump_scenario.empty()) {
                std::cout << mrtnet::scenario_json(dump_scenario).dump(2) << "\n";
                return 0;
            }
            return cmd_experiment(args);
        }
    } catch (const mrtnet::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == mrtnet::ErrorKind::Validation ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
