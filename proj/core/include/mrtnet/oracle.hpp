#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "mrtnet/activation.hpp"
#include "mrtnet/graph.hpp"
#include "mrtnet/simulate.hpp"

namespace mrtnet {

/// Probability vector over all 2^n outcome states; state x encodes unit i's
/// outcome in bit i.
struct ExactDistribution {
    int n = 0;
    std::vector<double> probs;
    double residual = 0; // max-norm one-step invariance defect

    double mean_of_unit(int i) const;
};

struct OracleOptions {
    int cap = 12;            // refuse larger n unless raised (hard max 20)
    double tol = 1e-13;
    long max_sweeps = 200000;
    std::vector<double> initial; // warm start; empty = uniform
};

/// W-marginalized transition: out[i] = pi_i f_i(y_i,1,z_i) + (1-pi_i) f_i(y_i,0,z_i).
/// Next-state units are conditionally independent given y.
std::vector<double> marginal_transition_prob(const InterferenceGraph& g, const ActivationModel& m,
                                             const PolicyVector& pi,
                                             std::span<const std::uint8_t> y);

/// Power iteration on the marginalized chain; transition rows are expanded on
/// the fly, never materialized as a 2^n x 2^n matrix.
ExactDistribution exact_stationary(const InterferenceGraph& g, const ActivationModel& m,
                                   const PolicyVector& pi, const OracleOptions& opts = {});

std::vector<double> exact_mean(const ExactDistribution& dist);

/// Per-state short-term direct effect:
/// (1/n) sum_i [f_i(y_i,1,z_i) - f_i(y_i,0,z_i)].
double exact_sde(const InterferenceGraph& g, const ActivationModel& m,
                 std::span<const std::uint8_t> y);

/// Stationary expectation of the per-state value above.
double exact_sde_stationary(const InterferenceGraph& g, const ActivationModel& m,
                            const ExactDistribution& dist);

double exact_lde(const InterferenceGraph& g, const ActivationModel& m, const PolicyVector& pi,
                 double gamma1, double gamma2, const OracleOptions& opts = {});

double exact_lte(const InterferenceGraph& g, const ActivationModel& m, const PolicyVector& pi1,
                 const PolicyVector& pi2, const OracleOptions& opts = {});

/// CSV of (state-bitmask, probability).
void write_distribution_csv(const ExactDistribution& dist, std::ostream& out);

} // namespace mrtnet
