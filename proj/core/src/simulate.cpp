#include "mrtnet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mrtnet/errors.hpp"
#include "mrtnet/hash.hpp"
#include "mrtnet/rng.hpp"

namespace mrtnet {

void PolicyVector::validate() const {
    for (std::size_t i = 0; i < pi.size(); ++i)
        if (!(pi[i] > 0.0 && pi[i] < 1.0))
            throw PolicyOutOfRangeError("treatment probability pi[" + std::to_string(i) + "] = " +
                                        std::to_string(pi[i]) + " is not strictly inside (0,1)");
}

std::uint64_t PolicyVector::hash() const {
    Fnv1a h;
    for (double v : pi) h.mix(v);
    return h.value();
}

InitSpec InitSpec::iid(double p0) {
    InitSpec s;
    s.kind = Kind::IidBernoulli;
    s.p0 = p0;
    return s;
}

InitSpec InitSpec::fixed(std::vector<std::uint8_t> state) {
    InitSpec s;
    s.kind = Kind::Fixed;
    s.state = std::move(state);
    return s;
}

InitSpec InitSpec::product(std::vector<double> p) {
    InitSpec s;
    s.kind = Kind::ProductBernoulli;
    s.p = std::move(p);
    return s;
}

namespace {

std::vector<std::uint8_t> draw_initial_state(const InitSpec& init, int n, std::uint64_t seed,
                                             std::uint64_t rep_key) {
    std::vector<std::uint8_t> y(n, 0);
    switch (init.kind) {
    case InitSpec::Kind::IidBernoulli:
        if (!(init.p0 >= 0.0 && init.p0 <= 1.0))
            throw InvalidProbabilityError("initial Bernoulli probability outside [0,1]");
        for (int i = 0; i < n; ++i)
            y[i] = rng::uniform(seed, rep_key, 0, i, rng::Purpose::Init) <= init.p0 ? 1 : 0;
        return y;
    case InitSpec::Kind::Fixed:
        if (static_cast<int>(init.state.size()) != n)
            throw LengthMismatchError("fixed initial state length does not match unit count");
        return init.state;
    case InitSpec::Kind::ProductBernoulli:
        if (static_cast<int>(init.p.size()) != n)
            throw LengthMismatchError("initial probability vector length does not match unit count");
        for (int i = 0; i < n; ++i) {
            if (!(init.p[i] >= 0.0 && init.p[i] <= 1.0))
                throw InvalidProbabilityError("initial probability outside [0,1]");
            y[i] = rng::uniform(seed, rep_key, 0, i, rng::Purpose::Init) <= init.p[i] ? 1 : 0;
        }
        return y;
    }
    throw InvalidSpecError("unknown init kind");
}

struct StepWorkspace {
    std::vector<int> z;
};

void record_step(Trajectory& traj, long t, std::span<const std::uint8_t> w,
                 std::span<const int> z, std::span<const std::uint8_t> next_y) {
    const int n = traj.n;
    std::copy(w.begin(), w.end(), traj.w_data.begin() + static_cast<std::size_t>(t) * n);
    for (int i = 0; i < n; ++i)
        traj.z_data[static_cast<std::size_t>(t) * n + i] = static_cast<std::uint16_t>(z[i]);
    std::copy(next_y.begin(), next_y.end(),
              traj.y_data.begin() + static_cast<std::size_t>(t + 1) * n);
}

Trajectory make_trajectory_shell(const InterferenceGraph& g, const ActivationModel& m,
                                 const PolicyVector& pi, long T, std::uint64_t seed,
                                 std::uint64_t replication) {
    if (T < 0) throw InvalidSpecError("horizon T must be nonnegative");
    if (g.n >= 65536) throw TooLargeError("unit count exceeds trajectory storage limit (65535)");
    if (pi.n() != g.n)
        throw LengthMismatchError("policy length does not match unit count");
    if (m.n() != g.n)
        throw LengthMismatchError("model unit count does not match graph unit count");
    pi.validate();

    Trajectory traj;
    traj.n = g.n;
    traj.T = T;
    traj.y_data.resize(static_cast<std::size_t>(T + 1) * g.n);
    traj.w_data.resize(static_cast<std::size_t>(T) * g.n);
    traj.z_data.resize(static_cast<std::size_t>(T) * g.n);
    traj.seed = seed;
    traj.replication = replication;
    traj.policy = pi.pi;
    traj.graph_hash = g.hash();
    traj.model_hash = m.hash();
    return traj;
}

} // namespace

Trajectory Trajectory::drop_prefix(long burn) const {
    if (burn < 0 || burn > T)
        throw TimeOutOfRangeError("burn-in " + std::to_string(burn) +
                                  " outside [0, T=" + std::to_string(T) + "]");
    Trajectory out;
    out.n = n;
    out.T = T - burn;
    out.y_data.assign(y_data.begin() + static_cast<std::size_t>(burn) * n, y_data.end());
    out.w_data.assign(w_data.begin() + static_cast<std::size_t>(burn) * n, w_data.end());
    out.z_data.assign(z_data.begin() + static_cast<std::size_t>(burn) * n, z_data.end());
    out.seed = seed;
    out.replication = replication;
    out.policy = policy;
    out.graph_hash = graph_hash;
    out.model_hash = model_hash;
    return out;
}

Trajectory Trajectory::truncate(long new_T) const {
    if (new_T < 0 || new_T > T)
        throw TimeOutOfRangeError("truncation horizon " + std::to_string(new_T) +
                                  " outside [0, T=" + std::to_string(T) + "]");
    Trajectory out;
    out.n = n;
    out.T = new_T;
    out.y_data.assign(y_data.begin(), y_data.begin() + static_cast<std::size_t>(new_T + 1) * n);
    out.w_data.assign(w_data.begin(), w_data.begin() + static_cast<std::size_t>(new_T) * n);
    out.z_data.assign(z_data.begin(), z_data.begin() + static_cast<std::size_t>(new_T) * n);
    out.seed = seed;
    out.replication = replication;
    out.policy = policy;
    out.graph_hash = graph_hash;
    out.model_hash = model_hash;
    return out;
}

std::vector<std::uint8_t> mdp_step(const InterferenceGraph& g, const ActivationModel& m,
                                   std::span<const std::uint8_t> y,
                                   std::span<const std::uint8_t> w,
                                   std::span<const double> draws) {
    if (static_cast<int>(y.size()) != g.n || static_cast<int>(w.size()) != g.n ||
        static_cast<int>(draws.size()) != g.n)
        throw LengthMismatchError("mdp_step inputs must all have length n");
    const std::vector<int> z = neighbor_sums(g, y);
    std::vector<std::uint8_t> next(g.n);
    for (int i = 0; i < g.n; ++i)
        next[i] = draws[i] <= m.eval_f(i, y[i], w[i], static_cast<double>(z[i])) ? 1 : 0;
    return next;
}

Trajectory simulate(const InterferenceGraph& g, const ActivationModel& m, const PolicyVector& pi,
                    long T, std::uint64_t seed, const InitSpec& init, std::uint64_t replication) {
    Trajectory traj = make_trajectory_shell(g, m, pi, T, seed, replication);
    const int n = g.n;

    std::vector<std::uint8_t> y = draw_initial_state(init, n, seed, replication);
    std::copy(y.begin(), y.end(), traj.y_data.begin());

    std::vector<std::uint8_t> w(n), next(n);
    for (long t = 0; t < T; ++t) {
        for (int i = 0; i < n; ++i)
            w[i] = rng::uniform(seed, replication, t, i, rng::Purpose::Treatment) <= pi[i] ? 1 : 0;
        const std::vector<int> z = neighbor_sums(g, std::span<const std::uint8_t>(y));
        for (int i = 0; i < n; ++i) {
            const double f = m.eval_f(i, y[i], w[i], static_cast<double>(z[i]));
            next[i] = rng::uniform(seed, replication, t, i, rng::Purpose::Outcome) <= f ? 1 : 0;
        }
        record_step(traj, t, w, z, next);
        y.swap(next);
    }
    return traj;
}

std::pair<Trajectory, Trajectory> coupled_simulate(const InterferenceGraph& g,
                                                   const ActivationModel& m,
                                                   const PolicyVector& pi_a,
                                                   const PolicyVector& pi_b, long T,
                                                   std::uint64_t seed, const InitSpec& init_a,
                                                   const InitSpec& init_b, ShareFlags share,
                                                   std::uint64_t replication) {
    const std::uint64_t rep_a = 2 * replication;
    const std::uint64_t rep_b = 2 * replication + 1;

    Trajectory ta = make_trajectory_shell(g, m, pi_a, T, seed, rep_a);
    Trajectory tb = make_trajectory_shell(g, m, pi_b, T, seed, rep_b);
    const int n = g.n;

    // Initial draws always come from the shared stream; distinct initial
    // distributions are expressed through the init specs themselves.
    std::vector<std::uint8_t> ya = draw_initial_state(init_a, n, seed, rep_a);
    std::vector<std::uint8_t> yb = draw_initial_state(init_b, n, seed, rep_a);
    std::copy(ya.begin(), ya.end(), ta.y_data.begin());
    std::copy(yb.begin(), yb.end(), tb.y_data.begin());

    std::vector<std::uint8_t> wa(n), wb(n), na(n), nb(n);
    for (long t = 0; t < T; ++t) {
        for (int i = 0; i < n; ++i) {
            const double ua = rng::uniform(seed, rep_a, t, i, rng::Purpose::Treatment);
            const double ub =
                share.treatments ? ua : rng::uniform(seed, rep_b, t, i, rng::Purpose::Treatment);
            wa[i] = ua <= pi_a[i] ? 1 : 0;
            wb[i] = ub <= pi_b[i] ? 1 : 0;
        }
        const std::vector<int> za = neighbor_sums(g, std::span<const std::uint8_t>(ya));
        const std::vector<int> zb = neighbor_sums(g, std::span<const std::uint8_t>(yb));
        for (int i = 0; i < n; ++i) {
            const double ua = rng::uniform(seed, rep_a, t, i, rng::Purpose::Outcome);
            const double ub =
                share.outcome_draws ? ua : rng::uniform(seed, rep_b, t, i, rng::Purpose::Outcome);
            na[i] = ua <= m.eval_f(i, ya[i], wa[i], static_cast<double>(za[i])) ? 1 : 0;
            nb[i] = ub <= m.eval_f(i, yb[i], wb[i], static_cast<double>(zb[i])) ? 1 : 0;
        }
        record_step(ta, t, wa, za, na);
        record_step(tb, t, wb, zb, nb);
        ya.swap(na);
        yb.swap(nb);
    }
    return {std::move(ta), std::move(tb)};
}

double empirical_distance(const InterferenceGraph& g,
                          std::span<const std::pair<Trajectory, Trajectory>> pairs, long t,
                          DistanceMetric metric) {
    if (pairs.empty()) throw EmptyEnsembleError("empirical_distance needs at least one pair");
    const std::uint64_t gh = g.hash();
    for (const auto& [x, y] : pairs) {
        if (x.graph_hash != gh || y.graph_hash != gh)
            throw InvalidSpecError("ensemble pair was generated on a different graph");
        if (x.T != pairs.front().first.T || y.T != pairs.front().first.T)
            throw LengthMismatchError("ensemble pairs disagree on horizon");
        if (t < 0 || t > x.T)
            throw TimeOutOfRangeError("distance time " + std::to_string(t) + " outside [0, T]");
    }
    const double R = static_cast<double>(pairs.size());

    if (metric == DistanceMetric::L1) {
        double total = 0;
        for (const auto& [x, y] : pairs) {
            const auto xr = x.y_row(t);
            const auto yr = y.y_row(t);
            for (int i = 0; i < g.n; ++i) total += std::abs(int(xr[i]) - int(yr[i]));
        }
        return total / R;
    }

    const int k = metric == DistanceMetric::DE1 ? 1 : 3;
    std::vector<double> moment(g.n, 0.0);
    std::vector<std::uint8_t> diff(g.n);
    for (const auto& [x, y] : pairs) {
        const auto xr = x.y_row(t);
        const auto yr = y.y_row(t);
        for (int i = 0; i < g.n; ++i) diff[i] = xr[i] ^ yr[i];
        const std::vector<int> counts = neighbor_sums(g, std::span<const std::uint8_t>(diff));
        for (int i = 0; i < g.n; ++i)
            moment[i] += std::pow(static_cast<double>(counts[i]), k);
    }
    double best = 0;
    for (int i = 0; i < g.n; ++i)
        best = std::max(best, std::pow(moment[i] / R, 1.0 / static_cast<double>(k)));
    return best;
}

// --- dumps ------------------------------------------------------------------

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
    out << "# mrtnet trajectory v1\n";
    out << "# seed=" << traj.seed << " replication=" << traj.replication << " n=" << traj.n
        << " T=" << traj.T << "\n";
    out << "# graph_hash=" << traj.graph_hash << " model_hash=" << traj.model_hash << "\n";
    out << "# policy=";
    for (int i = 0; i < traj.n; ++i) {
        if (i) out << ",";
        std::ostringstream ss;
        ss.precision(17);
        ss << traj.policy[i];
        out << ss.str();
    }
    out << "\n";
    out << "t,i,y,w,z\n";
    for (long t = 0; t <= traj.T; ++t)
        for (int i = 0; i < traj.n; ++i) {
            out << t << "," << i << "," << int(traj.y(t, i)) << ",";
            if (t < traj.T)
                out << int(traj.w(t, i)) << "," << traj.z(t, i) << "\n";
            else
                out << "-1,-1\n";
        }
}

namespace {

std::uint64_t parse_meta_u64(const std::string& line, const std::string& key) {
    std::istringstream ss(line);
    std::string token;
    const std::string prefix = key + "=";
    while (ss >> token)
        if (token.rfind(prefix, 0) == 0) return std::stoull(token.substr(prefix.size()));
    throw IoError("trajectory csv header: missing " + key);
}

} // namespace

Trajectory read_trajectory_csv(std::istream& in) {
    Trajectory traj;
    std::string line;
    bool have_dims = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.find("seed=") != std::string::npos) {
                traj.seed = parse_meta_u64(line, "seed");
                traj.replication = parse_meta_u64(line, "replication");
                traj.n = static_cast<int>(parse_meta_u64(line, "n"));
                traj.T = static_cast<long>(parse_meta_u64(line, "T"));
                have_dims = true;
            } else if (line.find("graph_hash=") != std::string::npos) {
                traj.graph_hash = parse_meta_u64(line, "graph_hash");
                traj.model_hash = parse_meta_u64(line, "model_hash");
            } else if (line.find("policy=") != std::string::npos) {
                const auto pos = line.find("policy=");
                std::istringstream ss(line.substr(pos + 7));
                std::string tok;
                while (std::getline(ss, tok, ',')) traj.policy.push_back(std::stod(tok));
            }
            continue;
        }
        if (line.rfind("t,i,", 0) == 0) break; // column header
    }
    if (!have_dims) throw IoError("trajectory csv: missing metadata header");
    traj.y_data.assign(static_cast<std::size_t>(traj.T + 1) * traj.n, 0);
    traj.w_data.assign(static_cast<std::size_t>(traj.T) * traj.n, 0);
    traj.z_data.assign(static_cast<std::size_t>(traj.T) * traj.n, 0);

    long t;
    int i, y, w, z;
    char comma;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        if (!(ss >> t >> comma >> i >> comma >> y >> comma >> w >> comma >> z))
            throw IoError("trajectory csv: bad row: " + line);
        if (t < 0 || t > traj.T || i < 0 || i >= traj.n)
            throw IoError("trajectory csv: indices out of range: " + line);
        traj.y_data[static_cast<std::size_t>(t) * traj.n + i] = static_cast<std::uint8_t>(y);
        if (t < traj.T) {
            traj.w_data[static_cast<std::size_t>(t) * traj.n + i] = static_cast<std::uint8_t>(w);
            traj.z_data[static_cast<std::size_t>(t) * traj.n + i] = static_cast<std::uint16_t>(z);
        }
    }
    return traj;
}

namespace {

constexpr char kBinaryMagic[4] = {'M', 'R', 'T', 'B'};

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::istream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw IoError("trajectory binary: truncated file");
    return v;
}

} // namespace

void write_trajectory_binary(const Trajectory& traj, std::ostream& out) {
    out.write(kBinaryMagic, 4);
    put<std::uint32_t>(out, 1); // version
    put<std::uint64_t>(out, traj.seed);
    put<std::uint64_t>(out, traj.replication);
    put<std::uint64_t>(out, traj.graph_hash);
    put<std::uint64_t>(out, traj.model_hash);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(traj.n));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(traj.T));
    for (double v : traj.policy) put(out, v);
    out.write(reinterpret_cast<const char*>(traj.y_data.data()),
              static_cast<std::streamsize>(traj.y_data.size()));
    out.write(reinterpret_cast<const char*>(traj.w_data.data()),
              static_cast<std::streamsize>(traj.w_data.size()));
    out.write(reinterpret_cast<const char*>(traj.z_data.data()),
              static_cast<std::streamsize>(traj.z_data.size() * sizeof(std::uint16_t)));
}

Trajectory read_trajectory_binary(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kBinaryMagic, 4) != 0)
        throw IoError("trajectory binary: bad magic");
    const auto version = get<std::uint32_t>(in);
    if (version != 1) throw IoError("trajectory binary: unsupported version");
    Trajectory traj;
    traj.seed = get<std::uint64_t>(in);
    traj.replication = get<std::uint64_t>(in);
    traj.graph_hash = get<std::uint64_t>(in);
    traj.model_hash = get<std::uint64_t>(in);
    traj.n = static_cast<int>(get<std::uint32_t>(in));
    traj.T = static_cast<long>(get<std::uint64_t>(in));
    traj.policy.resize(traj.n);
    for (double& v : traj.policy) v = get<double>(in);
    traj.y_data.resize(static_cast<std::size_t>(traj.T + 1) * traj.n);
    traj.w_data.resize(static_cast<std::size_t>(traj.T) * traj.n);
    traj.z_data.resize(static_cast<std::size_t>(traj.T) * traj.n);
    in.read(reinterpret_cast<char*>(traj.y_data.data()),
            static_cast<std::streamsize>(traj.y_data.size()));
    in.read(reinterpret_cast<char*>(traj.w_data.data()),
            static_cast<std::streamsize>(traj.w_data.size()));
    in.read(reinterpret_cast<char*>(traj.z_data.data()),
            static_cast<std::streamsize>(traj.z_data.size() * sizeof(std::uint16_t)));
    if (!in) throw IoError("trajectory binary: truncated file");
    return traj;
}

void save_trajectory(const Trajectory& traj, const std::string& path, const std::string& format) {
    if (format == "csv") {
        std::ofstream out(path);
        if (!out) throw IoError("cannot open for writing: " + path);
        write_trajectory_csv(traj, out);
    } else if (format == "bin" || format == "binary") {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + path);
        write_trajectory_binary(traj, out);
    } else {
        throw InvalidSpecError("unknown trajectory format: " + format);
    }
}

Trajectory load_trajectory(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    char magic[4] = {};
    in.read(magic, 4);
    in.clear();
    in.seekg(0);
    if (std::memcmp(magic, kBinaryMagic, 4) == 0) return read_trajectory_binary(in);
    return read_trajectory_csv(in);
}

} // namespace mrtnet
