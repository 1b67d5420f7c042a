#include "mrtnet/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "mrtnet/errors.hpp"
#include "mrtnet/parallel.hpp"

namespace mrtnet {

namespace {

double max_norm_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

long auto_max_iter(double tol, int n, const AssumptionReport& rep) {
    if (!rep.contraction_ok) return 10000;
    if (rep.C <= 1e-12) return 100;
    const double sweeps = std::log(tol / static_cast<double>(n)) / std::log(rep.C);
    return static_cast<long>(std::ceil(sweeps)) + 50;
}

void check_policy(const PolicyVector& pi, int n) {
    if (pi.n() != n) throw LengthMismatchError("policy length does not match unit count");
    pi.validate();
}

} // namespace

nlohmann::json MeanFieldSolution::to_json() const {
    return {
        {"P_star", P_star},
        {"Q_star", Q_star},
        {"iterations", iterations},
        {"residual", residual},
        {"policy", policy.pi},
        {"graph_hash", graph_hash},
        {"model_hash", model_hash},
    };
}

std::vector<double> mf_step(const InterferenceGraph& g, const ActivationModel& m,
                            const PolicyVector& pi, std::span<const double> P) {
    if (static_cast<int>(P.size()) != g.n)
        throw LengthMismatchError("state length does not match unit count");
    const std::vector<double> Q = neighbor_sums(g, P);
    std::vector<double> out(g.n);
    for (int i = 0; i < g.n; ++i) {
        const Abcd k = m.eval_abcd(i, Q[i]);
        out[i] = k.a + k.b * pi[i] + k.c * P[i] + k.d * pi[i] * P[i];
    }
    return out;
}

MeanFieldSolution mf_fixed_point(const InterferenceGraph& g, const ActivationModel& m,
                                 const PolicyVector& pi, const FixedPointOptions& opts) {
    check_policy(pi, g.n);

    AssumptionReport local_report;
    const AssumptionReport* rep = opts.report;
    if (rep == nullptr) {
        local_report = assumption_constants(m, g);
        rep = &local_report;
    }
    if (!rep->contraction_ok) {
        if (opts.require_contraction)
            throw ContractionViolatedError("contraction constant C = " + std::to_string(rep->C) +
                                           " >= 1; pass require_contraction=false to proceed");
        std::cerr << "mrtnet: warning: contraction constant C = " << rep->C
                  << " >= 1; fixed-point iteration may not converge\n";
    }

    MeanFieldSolution sol;
    sol.policy = pi;
    sol.graph_hash = g.hash();
    sol.model_hash = m.hash();

    std::vector<double> P = opts.initial;
    if (P.empty())
        P.assign(g.n, 0.5);
    else if (static_cast<int>(P.size()) != g.n)
        throw LengthMismatchError("initial vector length does not match unit count");

    const long max_iter = opts.max_iter > 0 ? opts.max_iter : auto_max_iter(opts.tol, g.n, *rep);
    if (opts.record_iterates) sol.iterates.push_back(P);

    for (long it = 0; it < max_iter; ++it) {
        std::vector<double> next = mf_step(g, m, pi, P);
        const double change = max_norm_diff(next, P);
        P.swap(next);
        sol.iterations = it + 1;
        if (opts.record_iterates) sol.iterates.push_back(P);
        if (change <= opts.tol) {
            sol.P_star = P;
            sol.Q_star = neighbor_sums(g, std::span<const double>(P));
            sol.residual = max_norm_diff(mf_step(g, m, pi, P), P);
            return sol;
        }
    }
    throw NoConvergenceError("mean-field fixed point: no convergence after " +
                             std::to_string(max_iter) + " sweeps (C = " + std::to_string(rep->C) +
                             ")");
}

namespace {

void check_solution(const InterferenceGraph& g, const ActivationModel& m,
                    const MeanFieldSolution& sol, const PolicyVector& pi) {
    if (sol.graph_hash != g.hash() || sol.model_hash != m.hash() || sol.policy.pi != pi.pi)
        throw StaleSolutionError("mean-field solution does not match the given graph/model/policy");
}

} // namespace

JacobianParts mf_jacobian_parts(const InterferenceGraph& g, const ActivationModel& m,
                                const MeanFieldSolution& sol, const PolicyVector& pi) {
    check_solution(g, m, sol, pi);
    JacobianParts parts;
    parts.D_diag.resize(g.n);
    parts.W_diag.resize(g.n);
    for (int i = 0; i < g.n; ++i) {
        const double q = sol.Q_star[i];
        const double p_i = sol.P_star[i];
        // Corner derivatives compose the same bilinear mix as the values.
        const double d00 = m.eval_f_deriv(i, 0, 0, q);
        const double d01 = m.eval_f_deriv(i, 0, 1, q);
        const double d10 = m.eval_f_deriv(i, 1, 0, q);
        const double d11 = m.eval_f_deriv(i, 1, 1, q);
        const double da = d00;
        const double db = d01 - d00;
        const double dc = d10 - d00;
        const double dd = d11 - d01 - d10 + d00;
        parts.D_diag[i] = da + db * pi[i] + dc * p_i + dd * pi[i] * p_i;
        const Abcd k = m.eval_abcd(i, q);
        parts.W_diag[i] = k.c + k.d * pi[i];
    }
    return parts;
}

std::vector<double> mf_direction_term(const InterferenceGraph& g, const ActivationModel& m,
                                      const MeanFieldSolution& sol, std::span<const double> v) {
    if (static_cast<int>(v.size()) != g.n)
        throw LengthMismatchError("direction length does not match unit count");
    std::vector<double> u(g.n);
    for (int i = 0; i < g.n; ++i) {
        const Abcd k = m.eval_abcd(i, sol.Q_star[i]);
        u[i] = v[i] * (k.b + k.d * sol.P_star[i]);
    }
    return u;
}

std::vector<double> mf_derivative(const InterferenceGraph& g, const ActivationModel& m,
                                  const MeanFieldSolution& sol, const PolicyVector& pi,
                                  std::span<const double> v, double tol) {
    const JacobianParts parts = mf_jacobian_parts(g, m, sol, pi);
    const std::vector<double> u = mf_direction_term(g, m, sol, v);

    // p <- u + (D A + W) p. Row-sum norm of DA + W is at most L_n D_n + B,
    // so convergence at rate <= C is inherited from the contraction check.
    std::vector<double> p = u;
    const long max_iter = 1000000;
    for (long it = 0; it < max_iter; ++it) {
        const std::vector<double> ap = neighbor_sums(g, std::span<const double>(p));
        double change = 0;
        for (int i = 0; i < g.n; ++i) {
            const double next = u[i] + parts.D_diag[i] * ap[i] + parts.W_diag[i] * p[i];
            change = std::max(change, std::abs(next - p[i]));
            p[i] = next;
        }
        if (change <= tol) {
            const std::vector<double> ap2 = neighbor_sums(g, std::span<const double>(p));
            double residual = 0;
            for (int i = 0; i < g.n; ++i)
                residual = std::max(residual, std::abs(p[i] - parts.D_diag[i] * ap2[i] -
                                                       parts.W_diag[i] * p[i] - u[i]));
            if (residual > 10 * tol)
                throw NoConvergenceError("mean-field derivative: residual " +
                                         std::to_string(residual) + " above tolerance");
            return p;
        }
    }
    throw NoConvergenceError("mean-field derivative: Neumann iteration did not converge");
}

std::vector<double> mf_derivative(const InterferenceGraph& g, const ActivationModel& m,
                                  const PolicyVector& pi, std::span<const double> v,
                                  const FixedPointOptions& opts) {
    const MeanFieldSolution sol = mf_fixed_point(g, m, pi, opts);
    return mf_derivative(g, m, sol, pi, v, opts.tol);
}

double mf_lte(const InterferenceGraph& g, const ActivationModel& m, const PolicyVector& pi,
              double delta, std::span<const double> v, const FixedPointOptions& opts) {
    check_policy(pi, g.n);
    if (static_cast<int>(v.size()) != g.n)
        throw LengthMismatchError("direction length does not match unit count");
    PolicyVector shifted = pi;
    for (int i = 0; i < g.n; ++i) shifted.pi[i] += delta * v[i];
    for (int i = 0; i < g.n; ++i)
        if (!(shifted.pi[i] > 0.0 && shifted.pi[i] < 1.0))
            throw PolicyOutOfRangeError("pi + Delta*v leaves (0,1) at unit " + std::to_string(i));

    const AssumptionReport rep = assumption_constants(m, g);
    FixedPointOptions local = opts;
    local.report = &rep;
    const MeanFieldSolution base = mf_fixed_point(g, m, pi, local);
    const MeanFieldSolution moved = mf_fixed_point(g, m, shifted, local);
    double total = 0;
    for (int i = 0; i < g.n; ++i) total += moved.P_star[i] - base.P_star[i];
    return total / g.n;
}

double mf_lde(const InterferenceGraph& g, const ActivationModel& m, const PolicyVector& pi,
              double gamma1, double gamma2, const FixedPointOptions& opts) {
    check_policy(pi, g.n);
    for (double gamma : {gamma1, gamma2})
        if (!(gamma > 0.0 && gamma < 1.0))
            throw PolicyOutOfRangeError("tilt probability " + std::to_string(gamma) +
                                        " is not strictly inside (0,1)");

    const AssumptionReport rep = assumption_constants(m, g);
    FixedPointOptions local = opts;
    local.report = &rep;
    const MeanFieldSolution base = mf_fixed_point(g, m, pi, local);

    // Tilting one pi_i perturbs the fixed point locally; warm starts from the
    // base solution cut the tilted solves to a handful of sweeps each.
    FixedPointOptions warm = local;
    warm.initial = base.P_star;

    std::vector<double> gain(g.n);
    parallel_for(g.n, [&](long i) {
        PolicyVector tilted = pi;
        tilted.pi[i] = gamma1;
        const double up = mf_fixed_point(g, m, tilted, warm).P_star[i];
        tilted.pi[i] = gamma2;
        const double down = mf_fixed_point(g, m, tilted, warm).P_star[i];
        gain[i] = up - down;
    });
    double total = 0;
    for (double v : gain) total += v;
    return total / g.n;
}

} // namespace mrtnet
