#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mrtnet/activation.hpp"
#include "mrtnet/graph.hpp"

namespace mrtnet {

struct PolicyVector {
    std::vector<double> pi;

    static PolicyVector uniform(int n, double p) { return {std::vector<double>(n, p)}; }
    int n() const { return static_cast<int>(pi.size()); }
    double operator[](int i) const { return pi[i]; }
    void validate() const; // strict interior: 0 < pi_i < 1
    std::uint64_t hash() const;
};

struct InitSpec {
    enum class Kind { IidBernoulli, Fixed, ProductBernoulli };
    Kind kind = Kind::IidBernoulli;
    double p0 = 0.5;
    std::vector<std::uint8_t> state; // Fixed
    std::vector<double> p;           // ProductBernoulli

    static InitSpec iid(double p0);
    static InitSpec fixed(std::vector<std::uint8_t> state);
    static InitSpec product(std::vector<double> p);
};

/// Recorded (Y, W, Z) path. Y has T+1 rows; W and Z have T. Z is stored
/// redundantly (Z[t] = neighbor_sums(graph, Y[t])) so dumps and estimator
/// inputs are self-contained.
struct Trajectory {
    int n = 0;
    long T = 0;
    std::vector<std::uint8_t> y_data;  // (T+1) x n, row-major
    std::vector<std::uint8_t> w_data;  // T x n
    std::vector<std::uint16_t> z_data; // T x n

    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
    std::vector<double> policy;
    std::uint64_t graph_hash = 0;
    std::uint64_t model_hash = 0;

    std::uint8_t y(long t, int i) const { return y_data[static_cast<std::size_t>(t) * n + i]; }
    std::uint8_t w(long t, int i) const { return w_data[static_cast<std::size_t>(t) * n + i]; }
    int z(long t, int i) const { return z_data[static_cast<std::size_t>(t) * n + i]; }

    std::span<const std::uint8_t> y_row(long t) const {
        return {y_data.data() + static_cast<std::size_t>(t) * n, static_cast<std::size_t>(n)};
    }

    /// Drops the first `burn` transitions; the result starts at Y[burn].
    Trajectory drop_prefix(long burn) const;

    /// Keeps only the first `new_T` transitions. With the counter-based
    /// streams this equals re-simulating at the shorter horizon.
    Trajectory truncate(long new_T) const;
};

/// One transition of the chain: out[i] = 1 iff draws[i] <= f_i(y_i, w_i, z_i)
/// with z = neighbor_sums(g, y) — the inverse-CDF construction shared by the
/// coupled runs.
std::vector<std::uint8_t> mdp_step(const InterferenceGraph& g, const ActivationModel& m,
                                   std::span<const std::uint8_t> y,
                                   std::span<const std::uint8_t> w,
                                   std::span<const double> draws);

Trajectory simulate(const InterferenceGraph& g, const ActivationModel& m, const PolicyVector& pi,
                    long T, std::uint64_t seed, const InitSpec& init,
                    std::uint64_t replication = 0);

struct ShareFlags {
    bool treatments = true;
    bool outcome_draws = true;
};

/// Runs two chains whose per-(t,i) uniforms coincide exactly on shared
/// streams. Unshared streams use distinct replication keys (2r and 2r+1).
std::pair<Trajectory, Trajectory> coupled_simulate(const InterferenceGraph& g,
                                                   const ActivationModel& m,
                                                   const PolicyVector& pi_a,
                                                   const PolicyVector& pi_b, long T,
                                                   std::uint64_t seed, const InitSpec& init_a,
                                                   const InitSpec& init_b, ShareFlags share,
                                                   std::uint64_t replication = 0);

enum class DistanceMetric { L1, DE1, DE3 };

/// Coupled-ensemble distance at time t: for L1 the mean over pairs of
/// ||X_t - Y_t||_1; for dE(k) the max over units of the k-th moment of the
/// differing-neighbor count. An upper-bound proxy for the Wasserstein
/// infimum, not the infimum itself.
double empirical_distance(const InterferenceGraph& g,
                          std::span<const std::pair<Trajectory, Trajectory>> pairs, long t,
                          DistanceMetric metric);

// Trajectory dumps. CSV is long format (t,i,y,w,z) with a comment header
// carrying seed/policy/hash metadata; rows at t = T carry the final outcomes
// with w = z = -1. The binary dump is a fixed-width little-endian layout
// (magic "MRTB"), documented in the README.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
Trajectory read_trajectory_csv(std::istream& in);
void write_trajectory_binary(const Trajectory& traj, std::ostream& out);
Trajectory read_trajectory_binary(std::istream& in);
void save_trajectory(const Trajectory& traj, const std::string& path, const std::string& format);
Trajectory load_trajectory(const std::string& path);

} // namespace mrtnet
