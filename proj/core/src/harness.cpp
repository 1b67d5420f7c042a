#include "mrtnet/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mrtnet/errors.hpp"
#include "mrtnet/parallel.hpp"
#include "mrtnet/stats.hpp"

namespace mrtnet {

namespace {

std::string fmt_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

GroundTruth parse_truth_mode(const std::string& s) {
    if (s == "auto") return GroundTruth::Auto;
    if (s == "oracle") return GroundTruth::Oracle;
    if (s == "meanfield") return GroundTruth::MeanField;
    if (s == "none") return GroundTruth::None;
    throw ConfigInvalidError("unknown ground_truth mode: " + s);
}

std::string truth_mode_name(GroundTruth g) {
    switch (g) {
    case GroundTruth::Auto: return "auto";
    case GroundTruth::Oracle: return "oracle";
    case GroundTruth::MeanField: return "meanfield";
    case GroundTruth::None: return "none";
    }
    return "none";
}

} // namespace

InterferenceGraph parse_graph(const nlohmann::json& spec, std::uint64_t default_seed) {
    if (!spec.is_object() || !spec.contains("type"))
        throw ConfigInvalidError("graph spec needs a 'type'");
    const std::string type = spec.at("type").get<std::string>();
    const std::uint64_t seed = spec.value("seed", default_seed);
    if (type == "erdos_renyi")
        return gen_erdos_renyi(spec.at("n").get<int>(), spec.at("rho").get<double>(), seed);
    if (type == "graphon") {
        const auto& kj = spec.at("kernel");
        const std::string kt = kj.at("type").get<std::string>();
        GraphonKernel kernel;
        if (kt == "constant")
            kernel = GraphonKernel::make_constant(kj.at("value").get<double>());
        else if (kt == "block")
            kernel = GraphonKernel::make_block(kj.at("matrix").get<std::vector<std::vector<double>>>());
        else if (kt == "product")
            kernel = GraphonKernel::make_product(kj.at("g").get<std::vector<double>>());
        else
            throw ConfigInvalidError("unknown graphon kernel type: " + kt);
        return gen_graphon(spec.at("n").get<int>(), spec.at("rho").get<double>(), kernel, seed)
            .graph;
    }
    if (type == "file") return load_edge_list(spec.at("path").get<std::string>());
    if (type == "edges") {
        std::vector<std::pair<int, int>> edges;
        for (const auto& e : spec.at("edges"))
            edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        return graph_from_edge_list(spec.at("n").get<int>(), edges);
    }
    if (type == "complete") {
        const int n = spec.at("n").get<int>();
        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
        return graph_from_edge_list(n, edges);
    }
    if (type == "empty") return graph_from_edge_list(spec.at("n").get<int>(), {});
    throw ConfigInvalidError("unknown graph type: " + type);
}

PolicyVector parse_policy(const nlohmann::json& spec, int n) {
    if (!spec.is_object() || !spec.contains("type"))
        throw ConfigInvalidError("policy spec needs a 'type'");
    const std::string type = spec.at("type").get<std::string>();
    PolicyVector pi;
    if (type == "uniform")
        pi = PolicyVector::uniform(n, spec.at("value").get<double>());
    else if (type == "per_unit") {
        pi.pi = spec.at("values").get<std::vector<double>>();
        if (pi.n() != n) throw ConfigInvalidError("per-unit policy length does not match n");
    } else
        throw ConfigInvalidError("unknown policy type: " + type);
    pi.validate();
    return pi;
}

InitSpec parse_init(const nlohmann::json& spec, int n) {
    if (spec.is_null()) return InitSpec::iid(0.5);
    const std::string type = spec.value("type", "iid_bernoulli");
    if (type == "iid_bernoulli") return InitSpec::iid(spec.value("p", 0.5));
    if (type == "fixed") {
        auto bits = spec.at("state").get<std::vector<int>>();
        std::vector<std::uint8_t> state(bits.begin(), bits.end());
        if (static_cast<int>(state.size()) != n)
            throw ConfigInvalidError("fixed init state length does not match n");
        return InitSpec::fixed(std::move(state));
    }
    if (type == "product_bernoulli") {
        auto p = spec.at("p").get<std::vector<double>>();
        if (static_cast<int>(p.size()) != n)
            throw ConfigInvalidError("product init length does not match n");
        return InitSpec::product(std::move(p));
    }
    throw ConfigInvalidError("unknown init type: " + type);
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        c.seed = j.value("seed", std::uint64_t{0});
        if (!j.contains("graph")) throw ConfigInvalidError("config needs 'graph'");
        if (!j.contains("model")) throw ConfigInvalidError("config needs 'model'");
        if (!j.contains("policy")) throw ConfigInvalidError("config needs 'policy'");
        c.graph_spec = j.at("graph");
        c.model_spec = j.at("model");
        c.policy_spec = j.at("policy");
        c.init_spec = j.contains("init") ? j.at("init") : nlohmann::json();
        if (j.contains("horizons"))
            c.horizons = j.at("horizons").get<std::vector<long>>();
        else if (j.contains("horizon"))
            c.horizons = {j.at("horizon").get<long>()};
        c.burn_in = j.value("burn_in", 1000L);
        c.replications = j.value("replications", 1L);
        c.ground_truth = parse_truth_mode(j.value("ground_truth", std::string("auto")));
        c.oracle_cap = j.value("oracle_cap", 12);
        c.threads = j.value("threads", 0);
        if (j.contains("output")) {
            c.out_dir = j.at("output").value("dir", std::string());
            c.format = j.at("output").value("format", std::string("csv"));
        }
        if (j.contains("estimands")) {
            for (const auto& e : j.at("estimands")) {
                EstimandRequest r;
                r.kind = e.at("estimand").get<std::string>();
                if (r.kind == "sde_ipw") {
                    r.t = e.value("t", 0L);
                } else if (r.kind == "sde_ipw_avg") {
                    r.t0 = e.value("t0", 0L);
                    r.t1 = e.at("t1").get<long>();
                } else if (r.kind == "lde") {
                    r.gamma1 = e.at("gamma1").get<double>();
                    r.gamma2 = e.at("gamma2").get<double>();
                } else if (r.kind == "lte") {
                    r.delta = e.at("delta").get<double>();
                    if (e.contains("v") && e.at("v").is_array())
                        r.v = e.at("v").get<std::vector<double>>();
                    r.lte.eta = e.value("eta", 0.05);
                    r.lte.kappa = e.value("kappa", 0.05);
                    r.lte.delta_T = e.value("delta_T", 0.0);
                    const std::string guard = e.value("m_guard", std::string("derivative"));
                    if (guard == "derivative")
                        r.lte.m_guard = MGuard::DerivativeMagnitude;
                    else if (guard == "paper_literal")
                        r.lte.m_guard = MGuard::PaperLiteral;
                    else
                        throw ConfigInvalidError("unknown m_guard: " + guard);
                } else {
                    throw ConfigInvalidError("unknown estimand: " + r.kind);
                }
                c.estimands.push_back(std::move(r));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigInvalidError("config: " + std::string(e.what()));
    }
    if (c.horizons.empty()) throw ConfigInvalidError("config needs at least one horizon");
    for (long h : c.horizons)
        if (h <= 0) throw ConfigInvalidError("horizons must be positive");
    if (c.burn_in < 0) throw ConfigInvalidError("burn_in must be nonnegative");
    if (c.replications < 0) throw ConfigInvalidError("replications must be nonnegative");
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigInvalidError("config: " + std::string(e.what()));
    }
    return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["graph"] = graph_spec;
    j["model"] = model_spec;
    j["policy"] = policy_spec;
    if (!init_spec.is_null()) j["init"] = init_spec;
    j["horizons"] = horizons;
    j["burn_in"] = burn_in;
    j["replications"] = replications;
    j["ground_truth"] = truth_mode_name(ground_truth);
    j["oracle_cap"] = oracle_cap;
    j["threads"] = threads;
    if (!out_dir.empty()) j["output"] = {{"dir", out_dir}, {"format", format}};
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : estimands) {
        nlohmann::json e;
        e["estimand"] = r.kind;
        if (r.kind == "sde_ipw") e["t"] = r.t;
        if (r.kind == "sde_ipw_avg") {
            e["t0"] = r.t0;
            e["t1"] = r.t1;
        }
        if (r.kind == "lde") {
            e["gamma1"] = r.gamma1;
            e["gamma2"] = r.gamma2;
        }
        if (r.kind == "lte") {
            e["delta"] = r.delta;
            if (!r.v.empty()) e["v"] = r.v;
            e["eta"] = r.lte.eta;
            e["kappa"] = r.lte.kappa;
            if (r.lte.delta_T > 0) e["delta_T"] = r.lte.delta_T;
            e["m_guard"] =
                r.lte.m_guard == MGuard::DerivativeMagnitude ? "derivative" : "paper_literal";
        }
        arr.push_back(std::move(e));
    }
    if (!arr.empty()) j["estimands"] = std::move(arr);
    return j;
}

ExperimentSetup build_setup(const ExperimentConfig& config) {
    ExperimentSetup s;
    s.graph = parse_graph(config.graph_spec, config.seed);
    nlohmann::json model_json = config.model_spec;
    if (model_json.contains("file"))
        s.model = build_activation(ModelSpec::load(model_json.at("file").get<std::string>()),
                                   s.graph);
    else
        s.model = build_activation(ModelSpec::from_json(model_json), s.graph);
    s.policy = parse_policy(config.policy_spec, s.graph.n);
    s.init = parse_init(config.init_spec, s.graph.n);
    s.report = assumption_constants(s.model, s.graph);
    return s;
}

namespace {

struct TruthValues {
    std::map<std::size_t, double> fixed; // estimand index -> horizon-free truth
};

std::string lte_tuning_string(const EstimandRequest& r, double delta_T_used, double v_norm) {
    std::ostringstream ss;
    ss << "delta=" << r.delta << ";eta=" << r.lte.eta << ";kappa=" << r.lte.kappa
       << ";delta_T=" << delta_T_used << ";m_guard="
       << (r.lte.m_guard == MGuard::DerivativeMagnitude ? "derivative" : "paper_literal")
       << ";v_norm=" << v_norm;
    return ss.str();
}

void write_report_files(const ExperimentConfig& config, const ExperimentSetup& setup,
                        const ExperimentResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);

    {
        std::ofstream out(dir / "report.csv");
        out << "replication,horizon,estimand,estimate,truth,error,tuning,flags\n";
        for (const auto& r : result.rows)
            out << r.replication << "," << r.horizon << "," << r.estimand << ","
                << fmt_double(r.estimate) << "," << fmt_double(r.truth) << ","
                << fmt_double(r.error) << "," << r.tuning << "," << r.flags << "\n";
    }
    {
        std::ofstream out(dir / "report.jsonl");
        for (const auto& r : result.rows) {
            nlohmann::json j{{"replication", r.replication}, {"horizon", r.horizon},
                             {"estimand", r.estimand},       {"estimate", r.estimate},
                             {"tuning", r.tuning},           {"flags", r.flags}};
            if (!std::isnan(r.truth)) {
                j["truth"] = r.truth;
                j["error"] = r.error;
            }
            out << j.dump() << "\n";
        }
    }
    {
        std::ofstream out(dir / "summary.csv");
        out << "estimand,horizon,count,median_error,iqr_error,median_abs_error\n";
        for (const auto& s : result.summary)
            out << s.estimand << "," << s.horizon << "," << s.count << ","
                << fmt_double(s.median_error) << "," << fmt_double(s.iqr_error) << ","
                << fmt_double(s.median_abs_error) << "\n";
    }
    {
        nlohmann::json j;
        j["assumptions"] = result.report.to_json();
        j["truth_mode"] = result.truth_mode;
        j["config"] = config.to_json();
        j["graph"] = {{"n", setup.graph.n},
                      {"edges", setup.graph.edge_count()},
                      {"max_degree", setup.graph.max_degree},
                      {"hash", setup.graph.hash()}};
        std::ofstream out(dir / "assumptions.json");
        out << j.dump(2) << "\n";
    }
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const ExperimentSetup setup = build_setup(config);
    const int n = setup.graph.n;

    GroundTruth mode = config.ground_truth;
    if (mode == GroundTruth::Auto)
        mode = n <= config.oracle_cap ? GroundTruth::Oracle : GroundTruth::MeanField;
    if (mode == GroundTruth::Oracle && n > config.oracle_cap)
        throw ConfigInvalidError("oracle ground truth requested but n = " + std::to_string(n) +
                                 " exceeds the oracle cap " + std::to_string(config.oracle_cap));

    const long max_horizon = *std::max_element(config.horizons.begin(), config.horizons.end());
    const long min_horizon = *std::min_element(config.horizons.begin(), config.horizons.end());
    const long total_T = config.burn_in + max_horizon;

    // Validate estimand requests before any simulation starts.
    for (const auto& r : config.estimands) {
        if (r.kind == "sde_ipw" && (r.t < 0 || r.t >= min_horizon))
            throw ConfigInvalidError("sde_ipw decision point t outside every horizon");
        if (r.kind == "sde_ipw_avg" && (r.t0 < 0 || r.t1 <= r.t0 || r.t1 > min_horizon))
            throw ConfigInvalidError("sde_ipw_avg window invalid");
        if (r.kind == "lde" &&
            !(r.gamma1 > 0 && r.gamma1 < 1 && r.gamma2 > 0 && r.gamma2 < 1))
            throw ConfigInvalidError("lde tilt probabilities must lie strictly inside (0,1)");
        if (r.kind == "lte") {
            if (!r.v.empty() && static_cast<int>(r.v.size()) != n)
                throw ConfigInvalidError("lte direction length does not match n");
            for (int i = 0; i < n; ++i) {
                const double vi = r.v.empty() ? 1.0 : r.v[i];
                const double shifted = setup.policy[i] + r.delta * vi;
                if (!(shifted > 0 && shifted < 1))
                    throw ConfigInvalidError("lte shifted policy leaves (0,1) at unit " +
                                             std::to_string(i));
            }
        }
    }

    ExperimentResult result;
    result.report = setup.report;
    result.truth_mode = truth_mode_name(mode);

    // Horizon-free truths (LDE/LTE); SDE truth is per replication.
    OracleOptions oracle_opts;
    oracle_opts.cap = config.oracle_cap;
    FixedPointOptions mf_opts;
    mf_opts.report = &setup.report;
    TruthValues truths;
    for (std::size_t e = 0; e < config.estimands.size(); ++e) {
        const auto& r = config.estimands[e];
        if (r.kind == "lde" && mode != GroundTruth::None) {
            truths.fixed[e] = mode == GroundTruth::Oracle
                                  ? exact_lde(setup.graph, setup.model, setup.policy, r.gamma1,
                                              r.gamma2, oracle_opts)
                                  : mf_lde(setup.graph, setup.model, setup.policy, r.gamma1,
                                           r.gamma2, mf_opts);
        } else if (r.kind == "lte" && mode != GroundTruth::None) {
            std::vector<double> v = r.v.empty() ? std::vector<double>(n, 1.0) : r.v;
            if (mode == GroundTruth::Oracle) {
                PolicyVector shifted = setup.policy;
                for (int i = 0; i < n; ++i) shifted.pi[i] += r.delta * v[i];
                truths.fixed[e] =
                    exact_lte(setup.graph, setup.model, shifted, setup.policy, oracle_opts);
            } else {
                truths.fixed[e] = mf_lte(setup.graph, setup.model, setup.policy, r.delta, v,
                                         mf_opts);
            }
        }
    }

    std::vector<std::vector<ResultRow>> per_rep(config.replications);
    parallel_for(config.replications, [&](long rep) {
        const Trajectory full = simulate(setup.graph, setup.model, setup.policy, total_T,
                                         config.seed, setup.init, static_cast<std::uint64_t>(rep));
        std::vector<ResultRow>& rows = per_rep[rep];
        for (long horizon : config.horizons) {
            const Trajectory sized = full.truncate(config.burn_in + horizon);
            const Trajectory stationary = sized.drop_prefix(config.burn_in);
            for (std::size_t e = 0; e < config.estimands.size(); ++e) {
                const auto& r = config.estimands[e];
                ResultRow row;
                row.replication = rep;
                row.horizon = horizon;
                row.estimand = r.kind;
                if (r.kind == "sde_ipw") {
                    row.estimate = sde_ipw(sized, r.t, setup.policy);
                    row.truth = exact_sde(setup.graph, setup.model, sized.y_row(r.t));
                    std::ostringstream ss;
                    ss << "t=" << r.t;
                    row.tuning = ss.str();
                } else if (r.kind == "sde_ipw_avg") {
                    row.estimate = sde_ipw_avg(sized, r.t0, r.t1, setup.policy);
                    double truth = 0;
                    for (long t = r.t0; t < r.t1; ++t)
                        truth += exact_sde(setup.graph, setup.model, sized.y_row(t));
                    row.truth = truth / static_cast<double>(r.t1 - r.t0);
                    std::ostringstream ss;
                    ss << "t0=" << r.t0 << ";t1=" << r.t1;
                    row.tuning = ss.str();
                } else if (r.kind == "lde") {
                    row.estimate = lde_hat(stationary, r.gamma1, r.gamma2);
                    if (auto it = truths.fixed.find(e); it != truths.fixed.end())
                        row.truth = it->second;
                    std::ostringstream ss;
                    ss << "gamma1=" << r.gamma1 << ";gamma2=" << r.gamma2;
                    row.tuning = ss.str();
                } else if (r.kind == "lte") {
                    const std::vector<double> v =
                        r.v.empty() ? std::vector<double>(n, 1.0) : r.v;
                    const LteSystem sys =
                        build_lte_system(stationary, setup.graph, setup.policy, v, r.lte);
                    row.estimate = lte_solve(setup.graph, sys, r.delta, r.lte.solve_tol);
                    if (auto it = truths.fixed.find(e); it != truths.fixed.end())
                        row.truth = it->second;
                    double norm2 = 0;
                    for (double vi : v) norm2 += vi * vi;
                    const double v_norm = std::sqrt(norm2);
                    const double delta_T_used =
                        r.lte.delta_T > 0
                            ? r.lte.delta_T
                            : std::pow(static_cast<double>(stationary.T), -0.25);
                    row.tuning = lte_tuning_string(r, delta_T_used, v_norm);
                    std::vector<std::string> flags;
                    if (sys.any_fprime_floor) flags.push_back("floor");
                    if (sys.any_omega_clip) flags.push_back("clip");
                    if (std::abs(v_norm - std::sqrt(static_cast<double>(n))) > 1e-9)
                        flags.push_back("vnorm");
                    for (std::size_t f = 0; f < flags.size(); ++f)
                        row.flags += (f ? "|" : "") + flags[f];
                }
                if (!std::isnan(row.truth)) row.error = row.estimate - row.truth;
                rows.push_back(std::move(row));
            }
        }
    }, config.threads);

    for (auto& rows : per_rep)
        for (auto& row : rows) result.rows.push_back(std::move(row));
    std::stable_sort(result.rows.begin(), result.rows.end(),
                     [](const ResultRow& a, const ResultRow& b) {
                         if (a.estimand != b.estimand) return a.estimand < b.estimand;
                         if (a.horizon != b.horizon) return a.horizon < b.horizon;
                         return a.replication < b.replication;
                     });

    // Summary: median and IQR of the signed errors per (estimand, horizon).
    std::map<std::pair<std::string, long>, std::vector<double>> groups;
    for (const auto& row : result.rows)
        if (!std::isnan(row.error)) groups[{row.estimand, row.horizon}].push_back(row.error);
    for (auto& [key, errors] : groups) {
        SummaryRow s;
        s.estimand = key.first;
        s.horizon = key.second;
        s.count = static_cast<long>(errors.size());
        s.median_error = median(errors);
        s.iqr_error = iqr(errors);
        std::vector<double> abs_errors(errors.size());
        std::transform(errors.begin(), errors.end(), abs_errors.begin(),
                       [](double e) { return std::abs(e); });
        s.median_abs_error = median(abs_errors);
        result.summary.push_back(std::move(s));
    }

    if (!config.out_dir.empty()) write_report_files(config, setup, result);
    return result;
}

// --- built-in scenarios -----------------------------------------------------

namespace {

const char* kLdeConsistency = R"JSON({
  "seed": 606,
  "graph": {"type": "erdos_renyi", "n": 6, "rho": 0.5, "seed": 606},
  "model": {"family": "affine",
            "abcd": {"a": 0.1, "b": 0.2, "c": 0.3, "d": 0.1},
            "abcd_slope": {"a": 0.002, "b": 0.0, "c": 0.0, "d": 0.0}},
  "policy": {"type": "uniform", "value": 0.5},
  "init": {"type": "iid_bernoulli", "p": 0.5},
  "horizons": [1000, 10000, 100000],
  "burn_in": 1000,
  "replications": 20,
  "estimands": [{"estimand": "lde", "gamma1": 0.7, "gamma2": 0.3}],
  "ground_truth": "oracle"
})JSON";

const char* kLteEndToEnd = R"JSON({
  "seed": 909,
  "graph": {"type": "erdos_renyi", "n": 100, "rho": 0.08, "seed": 909},
  "model": {"family": "logistic",
            "theta0": {"f00": -1.0, "f01": -0.5, "f10": -0.2, "f11": 0.3},
            "thetaz": {"f00": 0.8, "f01": 0.8, "f10": 0.8, "f11": 0.8},
            "scale": 100.0},
  "policy": {"type": "uniform", "value": 0.5},
  "init": {"type": "iid_bernoulli", "p": 0.5},
  "horizons": [100000],
  "burn_in": 1000,
  "replications": 20,
  "estimands": [{"estimand": "lte", "delta": 0.1, "eta": 0.05, "kappa": 0.05}],
  "ground_truth": "meanfield"
})JSON";

const char* kSdeIpw = R"JSON({
  "seed": 505,
  "graph": {"type": "erdos_renyi", "n": 100, "rho": 0.1, "seed": 505},
  "model": {"family": "affine",
            "abcd": {"a": 0.1, "b": 0.2, "c": 0.3, "d": 0.1},
            "abcd_slope": {"a": 0.01, "b": 0.0, "c": 0.0, "d": 0.0}},
  "policy": {"type": "uniform", "value": 0.5},
  "init": {"type": "iid_bernoulli", "p": 0.5},
  "horizons": [50],
  "burn_in": 0,
  "replications": 50,
  "estimands": [{"estimand": "sde_ipw", "t": 25}],
  "ground_truth": "meanfield"
})JSON";

} // namespace

std::vector<std::string> scenario_names() {
    return {"lde-consistency", "lte-end-to-end", "sde-ipw"};
}

nlohmann::json scenario_json(const std::string& name) {
    if (name == "lde-consistency") return nlohmann::json::parse(kLdeConsistency);
    if (name == "lte-end-to-end") return nlohmann::json::parse(kLteEndToEnd);
    if (name == "sde-ipw") return nlohmann::json::parse(kSdeIpw);
    throw ConfigInvalidError("unknown scenario: " + name);
}

ExperimentConfig scenario_config(const std::string& name) {
    return ExperimentConfig::from_json(scenario_json(name));
}

} // namespace mrtnet
