#include <doctest.h>

#include <cmath>
#include <map>

#include "mrtnet/errors.hpp"
#include "mrtnet/rng.hpp"
#include "mrtnet/simulate.hpp"
#include "mrtnet/stats.hpp"

using namespace mrtnet;

namespace {

InterferenceGraph singleton() { return graph_from_edge_list(1, {}); }

ActivationModel constant_model(const InterferenceGraph& g) {
    return build_activation(ModelSpec::constant_abcd(0.1, 0.2, 0.3, 0.1), g);
}

} // namespace

TEST_CASE("mdp_step extremes and length checks") {
    const auto g = gen_erdos_renyi(10, 0.3, 4);
    const auto m = constant_model(g);
    const std::vector<std::uint8_t> y(10, 0), w(10, 1);
    const std::vector<double> zeros(10, 0.0), ones(10, 1.0);
    CHECK(mdp_step(g, m, y, w, zeros) == std::vector<std::uint8_t>(10, 1));
    CHECK(mdp_step(g, m, y, w, ones) == std::vector<std::uint8_t>(10, 0));
    CHECK_THROWS_AS(mdp_step(g, m, std::span<const std::uint8_t>(y.data(), 5), w, ones),
                    LengthMismatchError);
}

TEST_CASE("mdp_step matches the activation probability in frequency") {
    const auto g = singleton();
    const auto m = constant_model(g); // f(0,1,z) = 0.3
    const std::vector<std::uint8_t> y{0}, w{1};
    const int N = 100000;
    long ones = 0;
    for (int k = 0; k < N; ++k) {
        const std::vector<double> draw{rng::uniform(11, k, 0, 0, rng::Purpose::Outcome)};
        ones += mdp_step(g, m, y, w, draw)[0];
    }
    const double freq = static_cast<double>(ones) / N;
    const double se = std::sqrt(0.3 * 0.7 / N);
    CHECK(std::abs(freq - 0.3) <= 3 * se);
}

TEST_CASE("simulate horizon zero and determinism") {
    const auto g = gen_erdos_renyi(12, 0.25, 8);
    const auto m = constant_model(g);
    const auto pi = PolicyVector::uniform(12, 0.5);

    const auto t0 = simulate(g, m, pi, 0, 5, InitSpec::iid(0.5));
    CHECK(t0.T == 0);
    CHECK(t0.y_data.size() == 12);
    CHECK(t0.w_data.empty());

    const auto a = simulate(g, m, pi, 300, 5, InitSpec::iid(0.5), 2);
    const auto b = simulate(g, m, pi, 300, 5, InitSpec::iid(0.5), 2);
    CHECK(a.y_data == b.y_data);
    CHECK(a.w_data == b.w_data);
    CHECK(a.z_data == b.z_data);

    const auto c = simulate(g, m, pi, 300, 5, InitSpec::iid(0.5), 3);
    CHECK(a.y_data != c.y_data);
}

TEST_CASE("truncation equals re-simulation at the shorter horizon") {
    const auto g = gen_erdos_renyi(7, 0.4, 2);
    const auto m = constant_model(g);
    const auto pi = PolicyVector::uniform(7, 0.4);
    const auto longer = simulate(g, m, pi, 500, 77, InitSpec::iid(0.5), 1);
    const auto shorter = simulate(g, m, pi, 120, 77, InitSpec::iid(0.5), 1);
    const auto cut = longer.truncate(120);
    CHECK(cut.y_data == shorter.y_data);
    CHECK(cut.w_data == shorter.w_data);
    CHECK(cut.z_data == shorter.z_data);
}

TEST_CASE("trajectory stores consistent neighbor sums") {
    const auto g = gen_erdos_renyi(15, 0.3, 21);
    const auto m = constant_model(g);
    const auto traj = simulate(g, m, PolicyVector::uniform(15, 0.5), 50, 9, InitSpec::iid(0.5));
    for (long t = 0; t < traj.T; ++t) {
        const auto z = neighbor_sums(g, traj.y_row(t));
        for (int i = 0; i < 15; ++i) CHECK(traj.z(t, i) == z[i]);
    }
}

TEST_CASE("single-unit time average hits the closed-form stationary mean") {
    const auto g = singleton();
    const auto m = constant_model(g);
    const long T = 200000;
    const auto traj = simulate(g, m, PolicyVector::uniform(1, 0.5), T, 31, InitSpec::iid(0.5));
    double avg = 0;
    for (long t = 1; t <= T; ++t) avg += traj.y(t, 0);
    avg /= static_cast<double>(T);

    // Marginalized chain: P(Y'=1|Y) = 0.2 + 0.35 Y, stationary mean
    // p = 0.2/0.65 and lag-k autocorrelation 0.35^k, so the time average has
    // variance p(1-p)(1+theta)/((1-theta) T).
    const double p = 0.2 / 0.65;
    const double theta = 0.35;
    const double se = std::sqrt(p * (1 - p) * (1 + theta) / ((1 - theta) * T));
    CHECK(std::abs(avg - p) <= 3 * se);
}

TEST_CASE("treatment marginals match the policy") {
    const auto g = gen_erdos_renyi(5, 0.4, 13);
    const auto m = constant_model(g);
    PolicyVector pi{{0.2, 0.35, 0.5, 0.65, 0.8}};
    const long T = 20000;
    const auto traj = simulate(g, m, pi, T, 17, InitSpec::iid(0.5));
    for (int i = 0; i < 5; ++i) {
        double freq = 0;
        for (long t = 0; t < T; ++t) freq += traj.w(t, i);
        freq /= static_cast<double>(T);
        const double se = std::sqrt(pi[i] * (1 - pi[i]) / static_cast<double>(T));
        CHECK(std::abs(freq - pi[i]) <= 3 * se);
    }
}

TEST_CASE("conditional law: cell frequencies match eval_f") {
    const auto g = graph_from_edge_list(3, std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
    const auto m = build_activation(ModelSpec::affine_abcd(0.1, 0.2, 0.3, 0.1, 0.02), g);
    const long T = 30000;
    const auto traj = simulate(g, m, PolicyVector::uniform(3, 0.5), T, 23, InitSpec::iid(0.5));

    std::map<std::tuple<int, int, int, int>, std::pair<long, long>> cells; // (i,y,w,z) -> (count, ones)
    for (long t = 0; t < T; ++t)
        for (int i = 0; i < 3; ++i) {
            auto& cell = cells[{i, traj.y(t, i), traj.w(t, i), traj.z(t, i)}];
            cell.first += 1;
            cell.second += traj.y(t + 1, i);
        }
    int checked = 0;
    for (const auto& [key, stat] : cells) {
        if (stat.first < 1000) continue;
        const auto [i, y, w, z] = key;
        const double f = m.eval_f(i, y, w, static_cast<double>(z));
        const double freq = static_cast<double>(stat.second) / stat.first;
        const double se = std::sqrt(f * (1 - f) / static_cast<double>(stat.first));
        CHECK(std::abs(freq - f) <= 3 * se);
        ++checked;
    }
    CHECK(checked >= 8);
}

TEST_CASE("coupled runs: share-all with identical configs coincide") {
    const auto g = gen_erdos_renyi(20, 0.2, 3);
    const auto m = constant_model(g);
    const auto pi = PolicyVector::uniform(20, 0.5);
    const auto [a, b] = coupled_simulate(g, m, pi, pi, 200, 77, InitSpec::iid(0.5),
                                         InitSpec::iid(0.5), ShareFlags{true, true});
    CHECK(a.y_data == b.y_data);
    CHECK(a.w_data == b.w_data);
    std::vector<std::pair<Trajectory, Trajectory>> pairs;
    pairs.emplace_back(a, b);
    for (long t = 0; t <= 200; t += 50)
        CHECK(empirical_distance(g, pairs, t, DistanceMetric::L1) == doctest::Approx(0.0));
}

TEST_CASE("coupled runs: sharing nothing separates the streams") {
    const auto g = gen_erdos_renyi(20, 0.2, 3);
    const auto m = constant_model(g);
    const auto pi = PolicyVector::uniform(20, 0.5);
    const auto [a, b] = coupled_simulate(g, m, pi, pi, 100, 77, InitSpec::iid(0.5),
                                         InitSpec::iid(0.5), ShareFlags{false, false});
    CHECK(a.y_data != b.y_data);
}

TEST_CASE("coupled contraction: expected L1 distance shrinks by factor C") {
    // Desk-size version; the acceptance suite runs the full-size one.
    const int n = 50;
    const auto g = gen_erdos_renyi(n, 0.1, 606);
    const auto m = build_activation(ModelSpec::affine_abcd(0.1, 0.2, 0.3, 0.1, 0.01), g);
    const auto rep = assumption_constants(m, g);
    REQUIRE(rep.contraction_ok);
    const auto pi = PolicyVector::uniform(n, 0.5);

    const int R = 100;
    const long T = 8;
    std::vector<std::pair<Trajectory, Trajectory>> pairs;
    for (int r = 0; r < R; ++r)
        pairs.push_back(coupled_simulate(g, m, pi, pi, T, 909,
                                         InitSpec::fixed(std::vector<std::uint8_t>(n, 0)),
                                         InitSpec::fixed(std::vector<std::uint8_t>(n, 1)),
                                         ShareFlags{true, true}, r));

    for (long t = 0; t + 1 <= T; ++t) {
        std::vector<double> d_t, d_next;
        for (const auto& [x, y] : pairs) {
            double dt = 0, dn = 0;
            for (int i = 0; i < n; ++i) {
                dt += std::abs(int(x.y(t, i)) - int(y.y(t, i)));
                dn += std::abs(int(x.y(t + 1, i)) - int(y.y(t + 1, i)));
            }
            d_t.push_back(dt);
            d_next.push_back(dn);
        }
        const double mean_t = mean(d_t);
        if (mean_t < 1.0) continue;
        const double mean_next = mean(d_next);
        const double ratio = mean_next / mean_t;
        // delta-method SE for the ratio of ensemble means
        double cov = 0;
        for (int r = 0; r < R; ++r) cov += (d_next[r] - mean_next) * (d_t[r] - mean_t);
        cov /= (R - 1);
        const double var_next = sample_sd(d_next) * sample_sd(d_next);
        const double var_t = sample_sd(d_t) * sample_sd(d_t);
        const double var_ratio =
            (var_next + ratio * ratio * var_t - 2 * ratio * cov) / (mean_t * mean_t * R);
        const double se = std::sqrt(std::max(var_ratio, 0.0));
        CHECK(ratio <= rep.C + 3 * se);
    }
}

TEST_CASE("empirical distance on a hand-built pair") {
    const auto g = graph_from_edge_list(3, std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
    auto make = [&](std::vector<std::uint8_t> y0) {
        Trajectory t;
        t.n = 3;
        t.T = 0;
        t.y_data = std::move(y0);
        t.graph_hash = g.hash();
        return t;
    };
    std::vector<std::pair<Trajectory, Trajectory>> pairs;
    pairs.emplace_back(make({0, 0, 0}), make({0, 1, 0})); // differ only at the middle unit
    CHECK(empirical_distance(g, pairs, 0, DistanceMetric::L1) == doctest::Approx(1.0));
    CHECK(empirical_distance(g, pairs, 0, DistanceMetric::DE1) == doctest::Approx(1.0));
    CHECK(empirical_distance(g, pairs, 0, DistanceMetric::DE3) == doctest::Approx(1.0));

    CHECK_THROWS_AS(
        empirical_distance(g, std::span<const std::pair<Trajectory, Trajectory>>{}, 0,
                           DistanceMetric::L1),
        EmptyEnsembleError);
}

TEST_CASE("dE(1) obeys the one-step contraction ladder") {
    const int n = 50;
    const auto g = gen_erdos_renyi(n, 0.1, 442);
    const auto m = build_activation(ModelSpec::affine_abcd(0.1, 0.2, 0.3, 0.1, 0.01), g);
    const auto rep = assumption_constants(m, g);
    REQUIRE(rep.contraction_ok);
    const auto pi = PolicyVector::uniform(n, 0.5);

    const int R = 200;
    const long T = 6;
    std::vector<std::pair<Trajectory, Trajectory>> pairs;
    for (int r = 0; r < R; ++r)
        pairs.push_back(coupled_simulate(g, m, pi, pi, T, 11,
                                         InitSpec::fixed(std::vector<std::uint8_t>(n, 0)),
                                         InitSpec::fixed(std::vector<std::uint8_t>(n, 1)),
                                         ShareFlags{true, true}, r));

    std::vector<std::uint8_t> diff(n);
    for (long t = 0; t + 1 <= T; ++t) {
        const double de_t = empirical_distance(g, pairs, t, DistanceMetric::DE1);
        const double de_next = empirical_distance(g, pairs, t + 1, DistanceMetric::DE1);
        if (de_t < 0.5) continue;
        // SE proxy: largest per-unit standard error of the mean differing-
        // neighbor count at t+1.
        double se_max = 0;
        for (int i = 0; i < n; ++i) {
            std::vector<double> counts;
            for (const auto& [x, y] : pairs) {
                for (int j = 0; j < n; ++j) diff[j] = x.y(t + 1, j) ^ y.y(t + 1, j);
                const auto sums = neighbor_sums(g, std::span<const std::uint8_t>(diff));
                counts.push_back(sums[i]);
            }
            se_max = std::max(se_max, standard_error(counts));
        }
        CHECK(de_next <= rep.C * de_t + 3 * se_max);
    }
}

TEST_CASE("trajectory csv and binary dumps round trip") {
    const auto g = gen_erdos_renyi(6, 0.5, 31);
    const auto m = constant_model(g);
    const auto traj = simulate(g, m, PolicyVector::uniform(6, 0.3), 40, 12, InitSpec::iid(0.5), 4);

    std::stringstream csv;
    write_trajectory_csv(traj, csv);
    const auto from_csv = read_trajectory_csv(csv);
    CHECK(from_csv.y_data == traj.y_data);
    CHECK(from_csv.w_data == traj.w_data);
    CHECK(from_csv.z_data == traj.z_data);
    CHECK(from_csv.seed == traj.seed);
    CHECK(from_csv.replication == traj.replication);
    CHECK(from_csv.policy == traj.policy);
    CHECK(from_csv.graph_hash == traj.graph_hash);

    std::stringstream bin(std::ios::in | std::ios::out | std::ios::binary);
    write_trajectory_binary(traj, bin);
    const auto from_bin = read_trajectory_binary(bin);
    CHECK(from_bin.y_data == traj.y_data);
    CHECK(from_bin.w_data == traj.w_data);
    CHECK(from_bin.z_data == traj.z_data);
    CHECK(from_bin.policy == traj.policy);
}

TEST_CASE("drop_prefix shifts the time origin") {
    const auto g = gen_erdos_renyi(4, 0.5, 3);
    const auto m = constant_model(g);
    const auto traj = simulate(g, m, PolicyVector::uniform(4, 0.5), 30, 2, InitSpec::iid(0.5));
    const auto tail = traj.drop_prefix(10);
    CHECK(tail.T == 20);
    for (long t = 0; t < 20; ++t)
        for (int i = 0; i < 4; ++i) {
            CHECK(tail.y(t, i) == traj.y(t + 10, i));
            CHECK(tail.w(t, i) == traj.w(t + 10, i));
            CHECK(tail.z(t, i) == traj.z(t + 10, i));
        }
    CHECK(tail.y(20, 0) == traj.y(30, 0));
}

TEST_CASE("policies must be strictly interior") {
    const PolicyVector at_one{{0.5, 1.0}};
    CHECK_THROWS_AS(at_one.validate(), PolicyOutOfRangeError);
    const PolicyVector at_zero{{0.0}};
    CHECK_THROWS_AS(at_zero.validate(), PolicyOutOfRangeError);
    const PolicyVector interior{{0.001, 0.999}};
    CHECK_NOTHROW(interior.validate());
}
