#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mrtnet/activation.hpp"
#include "mrtnet/graph.hpp"
#include "mrtnet/simulate.hpp"

namespace mrtnet {

struct MeanFieldSolution {
    std::vector<double> P_star;
    std::vector<double> Q_star; // neighbor sums of P_star
    long iterations = 0;
    double residual = 0; // max-norm of P - f(P, pi, Q)
    PolicyVector policy;
    std::uint64_t graph_hash = 0;
    std::uint64_t model_hash = 0;
    std::vector<std::vector<double>> iterates; // filled when recording is on

    nlohmann::json to_json() const;
};

struct FixedPointOptions {
    double tol = 1e-10;
    long max_iter = 0;               // 0: derived from the contraction constant
    bool require_contraction = true; // false: warn-and-proceed for exploratory use
    bool record_iterates = false;
    std::vector<double> initial;     // empty: 0.5 everywhere
    const AssumptionReport* report = nullptr; // reuse a precomputed report
};

/// One sweep of the deterministic system:
/// out_i = a_i(Q_i) + b_i(Q_i) pi_i + c_i(Q_i) P_i + d_i(Q_i) pi_i P_i,
/// Q = neighbor sums of P.
std::vector<double> mf_step(const InterferenceGraph& g, const ActivationModel& m,
                            const PolicyVector& pi, std::span<const double> P);

MeanFieldSolution mf_fixed_point(const InterferenceGraph& g, const ActivationModel& m,
                                 const PolicyVector& pi, const FixedPointOptions& opts = {});

struct JacobianParts {
    std::vector<double> D_diag; // f'(P*, pi, Q*) per unit, derivative in z
    std::vector<double> W_diag; // c(Q*) + d(Q*) pi per unit
};

JacobianParts mf_jacobian_parts(const InterferenceGraph& g, const ActivationModel& m,
                                const MeanFieldSolution& sol, const PolicyVector& pi);

/// u_i = v_i (b_i(Q*) + d_i(Q*) P*_i), the direction term of the linearized
/// fixed-point equation.
std::vector<double> mf_direction_term(const InterferenceGraph& g, const ActivationModel& m,
                                      const MeanFieldSolution& sol, std::span<const double> v);

/// Solves (I - D A - W) p = u by the Neumann iteration p <- u + (D A + W) p;
/// returns p* with p*_i = d/d(Delta) P*_i(pi + Delta v) at Delta = 0.
std::vector<double> mf_derivative(const InterferenceGraph& g, const ActivationModel& m,
                                  const PolicyVector& pi, std::span<const double> v,
                                  const FixedPointOptions& opts = {});
std::vector<double> mf_derivative(const InterferenceGraph& g, const ActivationModel& m,
                                  const MeanFieldSolution& sol, const PolicyVector& pi,
                                  std::span<const double> v, double tol = 1e-10);

/// Mean-field total effect: (1/n) sum_i [P*_i(pi + Delta v) - P*_i(pi)].
double mf_lte(const InterferenceGraph& g, const ActivationModel& m, const PolicyVector& pi,
              double delta, std::span<const double> v, const FixedPointOptions& opts = {});

/// Mean-field direct effect: (1/n) sum_i [P*_i(pi_i = g1) - P*_i(pi_i = g2)],
/// 2n tilted fixed points warm-started from P*(pi).
double mf_lde(const InterferenceGraph& g, const ActivationModel& m, const PolicyVector& pi,
              double gamma1, double gamma2, const FixedPointOptions& opts = {});

} // namespace mrtnet
