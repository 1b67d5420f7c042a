#include "mrtnet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <ostream>

#include "mrtnet/errors.hpp"
#include "mrtnet/parallel.hpp"

namespace mrtnet {

namespace {

constexpr int kHardCap = 20;

void check_size(int n, const OracleOptions& opts) {
    const int cap = std::min(opts.cap, kHardCap);
    if (n > cap)
        throw TooLargeError("exact oracle limited to n <= " + std::to_string(cap) +
                            " units, got n = " + std::to_string(n));
    if (n > 12)
        std::cerr << "mrtnet: warning: exact oracle at n = " << n << " sweeps a 2^" << n
                  << "-state chain; expect long runtimes\n";
}

std::vector<std::uint8_t> state_bits(std::uint32_t x, int n) {
    std::vector<std::uint8_t> y(n);
    for (int i = 0; i < n; ++i) y[i] = (x >> i) & 1u;
    return y;
}

} // namespace

double ExactDistribution::mean_of_unit(int i) const {
    double total = 0;
    for (std::size_t x = 0; x < probs.size(); ++x)
        if ((x >> i) & 1u) total += probs[x];
    return total;
}

std::vector<double> marginal_transition_prob(const InterferenceGraph& g, const ActivationModel& m,
                                             const PolicyVector& pi,
                                             std::span<const std::uint8_t> y) {
    if (static_cast<int>(y.size()) != g.n)
        throw LengthMismatchError("state length does not match unit count");
    const std::vector<int> z = neighbor_sums(g, y);
    std::vector<double> out(g.n);
    for (int i = 0; i < g.n; ++i)
        out[i] = pi[i] * m.eval_f(i, y[i], 1, static_cast<double>(z[i])) +
                 (1.0 - pi[i]) * m.eval_f(i, y[i], 0, static_cast<double>(z[i]));
    return out;
}

ExactDistribution exact_stationary(const InterferenceGraph& g, const ActivationModel& m,
                                   const PolicyVector& pi, const OracleOptions& opts) {
    check_size(g.n, opts);
    if (pi.n() != g.n) throw LengthMismatchError("policy length does not match unit count");
    pi.validate();

    const int n = g.n;
    const std::size_t S = std::size_t{1} << n;

    std::vector<double> cur = opts.initial;
    if (cur.empty())
        cur.assign(S, 1.0 / static_cast<double>(S));
    else if (cur.size() != S)
        throw LengthMismatchError("oracle warm start has wrong length");

    // Each source state's marginal row is expanded on the fly; nothing of
    // size 2^n x 2^n (or even 2^n x n) is ever materialized.
    std::vector<double> next(S), buf(S);
    auto sweep = [&](const std::vector<double>& from, std::vector<double>& to) {
        std::fill(to.begin(), to.end(), 0.0);
        for (std::size_t y = 0; y < S; ++y) {
            const double mass = from[y];
            if (mass == 0.0) continue;
            const auto p =
                marginal_transition_prob(g, m, pi, state_bits(static_cast<std::uint32_t>(y), n));
            // Expand mass * prod_i p_i^{x_i} (1-p_i)^{1-x_i} over all x by
            // doubling in place.
            buf[0] = mass;
            std::size_t len = 1;
            for (int i = 0; i < n; ++i) {
                for (std::size_t k = 0; k < len; ++k) {
                    buf[k + len] = buf[k] * p[i];
                    buf[k] *= 1.0 - p[i];
                }
                len <<= 1;
            }
            for (std::size_t x = 0; x < S; ++x) to[x] += buf[x];
        }
        double total = 0;
        for (double v : to) total += v;
        for (double& v : to) v /= total;
    };

    ExactDistribution dist;
    dist.n = n;
    for (long it = 0; it < opts.max_sweeps; ++it) {
        sweep(cur, next);
        double change = 0;
        for (std::size_t x = 0; x < S; ++x) change = std::max(change, std::abs(next[x] - cur[x]));
        cur.swap(next);
        if (change <= opts.tol) {
            sweep(cur, next);
            double residual = 0;
            for (std::size_t x = 0; x < S; ++x)
                residual = std::max(residual, std::abs(next[x] - cur[x]));
            dist.probs = std::move(cur);
            dist.residual = residual;
            return dist;
        }
    }
    throw NoConvergenceError("exact stationary distribution: no convergence after " +
                             std::to_string(opts.max_sweeps) + " sweeps");
}

std::vector<double> exact_mean(const ExactDistribution& dist) {
    std::vector<double> out(dist.n, 0.0);
    for (std::size_t x = 0; x < dist.probs.size(); ++x) {
        const double p = dist.probs[x];
        for (int i = 0; i < dist.n; ++i)
            if ((x >> i) & 1u) out[i] += p;
    }
    return out;
}

double exact_sde(const InterferenceGraph& g, const ActivationModel& m,
                 std::span<const std::uint8_t> y) {
    if (static_cast<int>(y.size()) != g.n)
        throw LengthMismatchError("state length does not match unit count");
    const std::vector<int> z = neighbor_sums(g, y);
    double total = 0;
    for (int i = 0; i < g.n; ++i)
        total += m.eval_f(i, y[i], 1, static_cast<double>(z[i])) -
                 m.eval_f(i, y[i], 0, static_cast<double>(z[i]));
    return total / g.n;
}

double exact_sde_stationary(const InterferenceGraph& g, const ActivationModel& m,
                            const ExactDistribution& dist) {
    double total = 0;
    for (std::size_t x = 0; x < dist.probs.size(); ++x)
        total += dist.probs[x] * exact_sde(g, m, state_bits(static_cast<std::uint32_t>(x), g.n));
    return total;
}

double exact_lde(const InterferenceGraph& g, const ActivationModel& m, const PolicyVector& pi,
                 double gamma1, double gamma2, const OracleOptions& opts) {
    check_size(g.n, opts);
    for (double gamma : {gamma1, gamma2})
        if (!(gamma > 0.0 && gamma < 1.0))
            throw PolicyOutOfRangeError("tilt probability " + std::to_string(gamma) +
                                        " is not strictly inside (0,1)");
    const ExactDistribution base = exact_stationary(g, m, pi, opts);
    OracleOptions warm = opts;
    warm.initial = base.probs;

    std::vector<double> gain(g.n);
    parallel_for(g.n, [&](long i) {
        PolicyVector tilted = pi;
        tilted.pi[i] = gamma1;
        const double up = exact_stationary(g, m, tilted, warm).mean_of_unit(static_cast<int>(i));
        tilted.pi[i] = gamma2;
        const double down = exact_stationary(g, m, tilted, warm).mean_of_unit(static_cast<int>(i));
        gain[i] = up - down;
    });
    double total = 0;
    for (double v : gain) total += v;
    return total / g.n;
}

double exact_lte(const InterferenceGraph& g, const ActivationModel& m, const PolicyVector& pi1,
                 const PolicyVector& pi2, const OracleOptions& opts) {
    check_size(g.n, opts);
    const std::vector<double> m1 = exact_mean(exact_stationary(g, m, pi1, opts));
    const std::vector<double> m2 = exact_mean(exact_stationary(g, m, pi2, opts));
    double total = 0;
    for (int i = 0; i < g.n; ++i) total += m1[i] - m2[i];
    return total / g.n;
}

void write_distribution_csv(const ExactDistribution& dist, std::ostream& out) {
    out << "state,probability\n";
    out.precision(17);
    for (std::size_t x = 0; x < dist.probs.size(); ++x) out << x << "," << dist.probs[x] << "\n";
}

} // namespace mrtnet
