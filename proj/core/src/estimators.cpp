#include "mrtnet/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "mrtnet/errors.hpp"
#include "mrtnet/hash.hpp"

namespace mrtnet {

namespace {

constexpr double kDenomThreshold = 1e-3;

void check_cell_args(int y, int w) {
    if (y < 0 || y > 1 || w < 0 || w > 1)
        throw InvalidSpecError("cell indices (y, w) must be binary");
}

void check_unit(const Trajectory& traj, int i) {
    if (i < 0 || i >= traj.n)
        throw IndexOutOfRangeError("unit " + std::to_string(i) + " out of range for n=" +
                                   std::to_string(traj.n));
}

} // namespace

nlohmann::json EstimateReport::to_json() const {
    return {
        {"estimand", estimand},
        {"value", value},
        {"tuning", tuning},
        {"diagnostics", diagnostics},
        {"trajectory_hash", trajectory_hash},
    };
}

std::uint64_t trajectory_metadata_hash(const Trajectory& traj) {
    Fnv1a h;
    h.mix(traj.seed).mix(traj.replication).mix(traj.graph_hash).mix(traj.model_hash);
    h.mix(traj.n).mix(static_cast<std::int64_t>(traj.T));
    for (double p : traj.policy) h.mix(p);
    return h.value();
}

double sde_ipw(const Trajectory& traj, long t, const PolicyVector& pi) {
    if (t < 0 || t >= traj.T)
        throw TimeOutOfRangeError("decision point " + std::to_string(t) + " outside [0, T)");
    if (pi.n() != traj.n) throw LengthMismatchError("policy length does not match unit count");
    pi.validate();
    double total = 0;
    for (int i = 0; i < traj.n; ++i) {
        const double weight =
            traj.w(t, i) ? 1.0 / pi[i] : -1.0 / (1.0 - pi[i]);
        total += traj.y(t + 1, i) * weight;
    }
    return total / traj.n;
}

double sde_ipw_avg(const Trajectory& traj, long t0, long t1, const PolicyVector& pi) {
    if (t0 < 0 || t1 > traj.T || t0 >= t1)
        throw TimeOutOfRangeError("window [" + std::to_string(t0) + ", " + std::to_string(t1) +
                                  ") is not a valid decision-point range");
    double total = 0;
    for (long t = t0; t < t1; ++t) total += sde_ipw(traj, t, pi);
    return total / static_cast<double>(t1 - t0);
}

std::array<std::array<long, 2>, 2> cell_counts(const Trajectory& traj, int i) {
    check_unit(traj, i);
    std::array<std::array<long, 2>, 2> counts{};
    for (long t = 0; t < traj.T; ++t) ++counts[traj.y(t, i)][traj.w(t, i)];
    return counts;
}

double fhat(const Trajectory& traj, int i, int y, int w) {
    check_unit(traj, i);
    check_cell_args(y, w);
    long count = 0;
    long ones = 0;
    for (long t = 0; t < traj.T; ++t) {
        if (traj.y(t, i) == y && traj.w(t, i) == w) {
            ++count;
            ones += traj.y(t + 1, i);
        }
    }
    if (count == 0)
        throw EmptyCellError("cell (y=" + std::to_string(y) + ", w=" + std::to_string(w) +
                             ") never visited for unit " + std::to_string(i));
    return static_cast<double>(ones) / static_cast<double>(count);
}

Abcd abcd_hat(const Trajectory& traj, int i) {
    const double f00 = fhat(traj, i, 0, 0);
    const double f01 = fhat(traj, i, 0, 1);
    const double f10 = fhat(traj, i, 1, 0);
    const double f11 = fhat(traj, i, 1, 1);
    return {f00, f01 - f00, f10 - f00, f11 + f00 - f01 - f10};
}

double stationary_mean_from_abcd(const Abcd& k, double gamma) {
    const double denom = 1.0 - k.c - k.d * gamma;
    if (std::abs(denom) < kDenomThreshold)
        throw DegenerateDenominatorError("plug-in denominator 1 - c - d*gamma = " +
                                         std::to_string(denom) + " is below threshold " +
                                         std::to_string(kDenomThreshold));
    return (k.a + k.b * gamma) / denom;
}

double lde_hat(const Trajectory& traj, double gamma1, double gamma2) {
    double total = 0;
    for (int i = 0; i < traj.n; ++i) {
        const Abcd k = abcd_hat(traj, i);
        total += stationary_mean_from_abcd(k, gamma1) - stationary_mean_from_abcd(k, gamma2);
    }
    return total / traj.n;
}

FPrimeEstimate fprime_hat(const Trajectory& traj, const InterferenceGraph& g, int i, int y, int w,
                          double delta_T) {
    check_unit(traj, i);
    check_cell_args(y, w);
    if (!(delta_T > 0.0)) throw InvalidSpecError("delta_T must be positive");

    long count = 0;
    double sum_y = 0, sum_z = 0, sum_zz = 0, sum_yz = 0;
    for (long t = 0; t < traj.T; ++t) {
        if (traj.y(t, i) != y || traj.w(t, i) != w) continue;
        const double ynext = traj.y(t + 1, i);
        const double z = traj.z(t, i);
        ++count;
        sum_y += ynext;
        sum_z += z;
        sum_zz += z * z;
        sum_yz += ynext * z;
    }
    if (count == 0)
        throw EmptyCellError("cell (y=" + std::to_string(y) + ", w=" + std::to_string(w) +
                             ") never visited for unit " + std::to_string(i));

    const double cnt = static_cast<double>(count);
    const double y_bar = sum_y / cnt;
    const double z_bar = sum_z / cnt;
    const double s_zz = sum_zz - cnt * z_bar * z_bar;
    const double s_yz = sum_yz - cnt * y_bar * z_bar;

    const double floor = static_cast<double>(max_degree(g)) * static_cast<double>(traj.T) * delta_T;
    FPrimeEstimate est;
    est.cell_count = count;
    est.floor_active = floor >= s_zz;
    est.denominator = std::max(floor, s_zz);
    est.value = est.denominator > 0.0 ? s_yz / est.denominator : 0.0;
    return est;
}

double phat(const Trajectory& traj, int i) {
    check_unit(traj, i);
    if (traj.T < 1) throw TimeOutOfRangeError("phat needs at least one transition");
    long ones = 0;
    for (long t = 1; t <= traj.T; ++t) ones += traj.y(t, i);
    return static_cast<double>(ones) / static_cast<double>(traj.T);
}

LteSystem build_lte_system(const Trajectory& traj, const InterferenceGraph& g,
                           const PolicyVector& pi, std::span<const double> v,
                           const LteOptions& opts) {
    if (static_cast<int>(v.size()) != traj.n)
        throw LengthMismatchError("direction length does not match unit count");
    if (pi.n() != traj.n) throw LengthMismatchError("policy length does not match unit count");
    if (g.n != traj.n) throw LengthMismatchError("graph does not match trajectory");
    pi.validate();

    const double delta_T =
        opts.delta_T > 0.0 ? opts.delta_T : std::pow(static_cast<double>(traj.T), -0.25);

    LteSystem sys;
    sys.eta = opts.eta;
    sys.D_hat.resize(traj.n);
    sys.omega_hat.resize(traj.n);
    sys.u_hat.resize(traj.n);
    sys.guard.resize(traj.n);
    sys.min_cell_count = traj.T;

    for (int i = 0; i < traj.n; ++i) {
        const Abcd k = abcd_hat(traj, i);
        const double p_hat = phat(traj, i);

        double d_diag = 0;
        for (int y = 0; y < 2; ++y)
            for (int w = 0; w < 2; ++w) {
                const FPrimeEstimate fp = fprime_hat(traj, g, i, y, w, delta_T);
                const double weight = (y ? p_hat : 1.0 - p_hat) * (w ? pi[i] : 1.0 - pi[i]);
                d_diag += weight * fp.value;
                sys.any_fprime_floor = sys.any_fprime_floor || fp.floor_active;
                sys.min_cell_count = std::min(sys.min_cell_count, fp.cell_count);
            }
        sys.D_hat[i] = d_diag;
        sys.omega_hat[i] = std::min(1.0 - opts.kappa, k.c + k.d * pi[i]);
        sys.any_omega_clip = sys.any_omega_clip || k.c + k.d * pi[i] > 1.0 - opts.kappa;
        sys.u_hat[i] = (k.b + k.d * p_hat) * v[i];
        sys.guard[i] = opts.m_guard == MGuard::DerivativeMagnitude ? std::abs(d_diag) : k.d;
    }
    return sys;
}

double lte_solve(const InterferenceGraph& g, const LteSystem& sys, double delta, double tol) {
    const int n = g.n;
    if (static_cast<int>(sys.D_hat.size()) != n)
        throw LengthMismatchError("system size does not match graph");
    const double dn = static_cast<double>(max_degree(g));

    std::vector<double> m_diag(n);
    for (int i = 0; i < n; ++i)
        m_diag[i] = std::max(1.0, sys.guard[i] * dn / (1.0 - sys.eta) + sys.omega_hat[i]);

    // (M - W_hat) x_{k+1} = u_hat + D_hat A x_k. With the derivative-magnitude
    // guard the iteration matrix has row sums <= 1 - eta; with the literal
    // guard convergence is not guaranteed, so divergence is detected below.
    std::vector<double> x(n, 0.0);
    double prev_change = std::numeric_limits<double>::infinity();
    int growth_streak = 0;
    const long max_iter = 500000;
    for (long it = 0; it < max_iter; ++it) {
        const std::vector<double> ax = neighbor_sums(g, std::span<const double>(x));
        double change = 0;
        for (int i = 0; i < n; ++i) {
            const double next = (sys.u_hat[i] + sys.D_hat[i] * ax[i]) / (m_diag[i] - sys.omega_hat[i]);
            change = std::max(change, std::abs(next - x[i]));
            x[i] = next;
        }
        if (change <= tol) {
            double total = 0;
            for (double xi : x) total += xi;
            return delta * total / static_cast<double>(n);
        }
        if (change > prev_change * (1.0 + 1e-12)) {
            if (++growth_streak > 100 || change > 1e12)
                throw NoConvergenceError("lte solve: guarded iteration diverged (change " +
                                         std::to_string(change) + ")");
        } else {
            growth_streak = 0;
        }
        prev_change = change;
    }
    throw NoConvergenceError("lte solve: no convergence within iteration budget");
}

double lte_hat(const Trajectory& traj, const InterferenceGraph& g, const PolicyVector& pi,
               double delta, std::span<const double> v, const LteOptions& opts) {
    const LteSystem sys = build_lte_system(traj, g, pi, v, opts);
    return lte_solve(g, sys, delta, opts.solve_tol);
}

} // namespace mrtnet
