#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrtnet/activation.hpp"
#include "mrtnet/graph.hpp"
#include "mrtnet/simulate.hpp"

namespace mrtnet {

/// A named estimate plus everything needed to reproduce it from the
/// referenced trajectory: tuning constants, occupancy diagnostics, floor
/// flags, and the trajectory metadata hash.
struct EstimateReport {
    std::string estimand;
    double value = 0;
    nlohmann::json tuning = nlohmann::json::object();
    nlohmann::json diagnostics = nlohmann::json::object();
    std::uint64_t trajectory_hash = 0;

    nlohmann::json to_json() const;
};

std::uint64_t trajectory_metadata_hash(const Trajectory& traj);

/// IPW contrast at a single decision point:
/// (1/n) sum_i Y_{i,t+1} (W_it/pi_i - (1-W_it)/(1-pi_i)).
double sde_ipw(const Trajectory& traj, long t, const PolicyVector& pi);

/// Average of the per-t IPW contrast over the window [t0, t1).
double sde_ipw_avg(const Trajectory& traj, long t0, long t1, const PolicyVector& pi);

/// Visits of unit i to each (y, w) cell, indexed [y][w].
std::array<std::array<long, 2>, 2> cell_counts(const Trajectory& traj, int i);

/// Within-cell mean of next-step outcomes:
/// sum_t Y_{i,t+1} 1{W_it=w, Y_it=y} / sum_t 1{W_it=w, Y_it=y}.
double fhat(const Trajectory& traj, int i, int y, int w);

/// Plug-in moments (a, b, c, d) from the four cell means.
Abcd abcd_hat(const Trajectory& traj, int i);

/// (a + b gamma) / (1 - c - d gamma); the denominator must stay away from
/// zero (threshold 1e-3).
double stationary_mean_from_abcd(const Abcd& k, double gamma);

/// (1/n) sum_i [ratio(gamma1) - ratio(gamma2)] from per-unit plug-in moments.
double lde_hat(const Trajectory& traj, double gamma1, double gamma2);

struct FPrimeEstimate {
    double value = 0;
    bool floor_active = false; // denominator was the D_n T delta_T floor
    long cell_count = 0;
    double denominator = 0;
};

/// Within-cell regression slope of Y_{i,t+1} on Z_it with a floored
/// denominator: num / max(D_n T delta_T, sum (Z - Zbar)^2).
FPrimeEstimate fprime_hat(const Trajectory& traj, const InterferenceGraph& g, int i, int y, int w,
                          double delta_T);

/// Time average of Y_it over t = 1..T.
double phat(const Trajectory& traj, int i);

enum class MGuard {
    DerivativeMagnitude, // |D_hat_i| in the M diagonal (row dominance holds)
    PaperLiteral,        // d_hat_i moment estimate
};

struct LteOptions {
    double delta_T = 0; // 0: default T^{-1/4}
    double eta = 0.05;
    double kappa = 0.05;
    MGuard m_guard = MGuard::DerivativeMagnitude;
    double solve_tol = 1e-10;
};

/// The estimated pieces of the linear system (M - D_hat A - W_hat) x = u_hat.
struct LteSystem {
    std::vector<double> D_hat;     // derivative-matrix diagonal
    std::vector<double> omega_hat; // min(1 - kappa, c_hat + d_hat pi)
    std::vector<double> u_hat;     // (b_hat + d_hat P_hat) v
    std::vector<double> guard;     // per-unit guard magnitude in M's diagonal
    double eta = 0.05;
    bool any_fprime_floor = false;
    bool any_omega_clip = false; // some c_hat + d_hat pi exceeded 1 - kappa
    long min_cell_count = 0;
};

LteSystem build_lte_system(const Trajectory& traj, const InterferenceGraph& g,
                           const PolicyVector& pi, std::span<const double> v,
                           const LteOptions& opts = {});

/// (Delta/n) 1^T (M - D_hat A - W_hat)^{-1} u_hat with
/// M = diag(max(1, guard_i D_n/(1-eta) + omega_i)), solved by the guarded
/// fixed-point iteration x <- (M - W_hat)^{-1} (u_hat + D_hat A x).
double lte_solve(const InterferenceGraph& g, const LteSystem& sys, double delta,
                 double tol = 1e-10);

double lte_hat(const Trajectory& traj, const InterferenceGraph& g, const PolicyVector& pi,
               double delta, std::span<const double> v, const LteOptions& opts = {});

} // namespace mrtnet
