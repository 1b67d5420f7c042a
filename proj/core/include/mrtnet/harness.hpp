#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrtnet/activation.hpp"
#include "mrtnet/estimators.hpp"
#include "mrtnet/graph.hpp"
#include "mrtnet/meanfield.hpp"
#include "mrtnet/oracle.hpp"
#include "mrtnet/simulate.hpp"

namespace mrtnet {

enum class GroundTruth { Auto, Oracle, MeanField, None };

struct EstimandRequest {
    std::string kind; // sde_ipw | sde_ipw_avg | lde | lte
    long t = 0;       // sde_ipw
    long t0 = 0, t1 = 0; // sde_ipw_avg
    double gamma1 = 0, gamma2 = 0; // lde
    double delta = 0;              // lte
    std::vector<double> v;         // lte direction; empty = ones
    LteOptions lte;                // lte tuning
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    nlohmann::json graph_spec;
    nlohmann::json model_spec;
    nlohmann::json policy_spec;
    nlohmann::json init_spec;
    std::vector<long> horizons{1000};
    long burn_in = 1000; // applied to stationary-regime estimators only
    long replications = 1;
    std::vector<EstimandRequest> estimands;
    GroundTruth ground_truth = GroundTruth::Auto;
    int oracle_cap = 12;
    std::string out_dir;        // empty: no files written
    std::string format = "csv"; // trajectory/report flavor for tools
    int threads = 0;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
    nlohmann::json to_json() const;
};

/// Instantiated experiment inputs, shared read-only across replications.
struct ExperimentSetup {
    InterferenceGraph graph;
    ActivationModel model;
    PolicyVector policy;
    InitSpec init;
    AssumptionReport report;
};

ExperimentSetup build_setup(const ExperimentConfig& config);

PolicyVector parse_policy(const nlohmann::json& spec, int n);
InterferenceGraph parse_graph(const nlohmann::json& spec, std::uint64_t default_seed);
InitSpec parse_init(const nlohmann::json& spec, int n);

struct ResultRow {
    long replication = 0;
    long horizon = 0;
    std::string estimand;
    double estimate = 0;
    double truth = std::nan("");
    double error = std::nan("");
    std::string tuning;
    std::string flags;
};

struct SummaryRow {
    std::string estimand;
    long horizon = 0;
    long count = 0;
    double median_error = std::nan("");
    double iqr_error = std::nan("");
    double median_abs_error = std::nan("");
};

struct ExperimentResult {
    AssumptionReport report;
    std::string truth_mode; // oracle | meanfield | none
    std::vector<ResultRow> rows;
    std::vector<SummaryRow> summary;
};

/// Generates, simulates, estimates, and compares against ground truth.
/// Deterministic function of the config; when out_dir is set, writes
/// report.csv, report.jsonl, summary.csv, and assumptions.json there.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Named built-in scenarios (also shipped as files under scenarios/).
std::vector<std::string> scenario_names();
ExperimentConfig scenario_config(const std::string& name);
nlohmann::json scenario_json(const std::string& name);

} // namespace mrtnet
