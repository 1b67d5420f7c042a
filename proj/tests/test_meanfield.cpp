#include <doctest.h>

#include <cmath>

#include "mrtnet/errors.hpp"
#include "mrtnet/meanfield.hpp"
#include "mrtnet/rng.hpp"

using namespace mrtnet;

namespace {

InterferenceGraph singleton() { return graph_from_edge_list(1, {}); }

ModelSpec logistic_spec(double scale) {
    LogisticCurves l;
    l.theta0 = {{{-1.0, -0.5}, {-0.2, 0.3}}};
    l.thetaz = {{{0.5, 0.4}, {0.45, 0.35}}};
    l.scale = scale;
    ModelSpec spec;
    spec.defaults = l;
    return spec;
}

double l1_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

} // namespace

TEST_CASE("mf_step on the constant single unit") {
    const auto g = singleton();
    const auto m = build_activation(ModelSpec::constant_abcd(0.1, 0.2, 0.3, 0.1), g);
    const auto pi = PolicyVector::uniform(1, 0.5);
    const std::vector<double> zero{0.0};
    CHECK(mf_step(g, m, pi, zero)[0] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("fixed point is a fixed point of mf_step") {
    const auto g = gen_erdos_renyi(20, 0.2, 5);
    const auto m = build_activation(ModelSpec::affine_abcd(0.1, 0.2, 0.3, 0.1, 0.005), g);
    const auto pi = PolicyVector::uniform(20, 0.5);
    const auto sol = mf_fixed_point(g, m, pi);
    const auto stepped = mf_step(g, m, pi, sol.P_star);
    for (int i = 0; i < 20; ++i)
        CHECK(stepped[i] == doctest::Approx(sol.P_star[i]).epsilon(1e-9));
    CHECK(sol.residual <= 1e-9);
}

TEST_CASE("symmetric instances give symmetric fixed points") {
    const auto g = gen_erdos_renyi(6, 1.0, 0);
    const auto m = build_activation(ModelSpec::affine_abcd(0.1, 0.2, 0.3, 0.1, 0.01), g);
    const auto sol = mf_fixed_point(g, m, PolicyVector::uniform(6, 0.5));
    for (int i = 1; i < 6; ++i)
        CHECK(sol.P_star[i] == doctest::Approx(sol.P_star[0]).epsilon(1e-12));
}

TEST_CASE("closed-form fixed points") {
    const auto g1 = singleton();
    const auto m1 = build_activation(ModelSpec::constant_abcd(0.1, 0.2, 0.3, 0.1), g1);
    const auto sol1 = mf_fixed_point(g1, m1, PolicyVector::uniform(1, 0.5));
    CHECK(std::abs(sol1.P_star[0] - 0.2 / 0.65) <= 1e-9); // 0.307692...

    // complete graph n=5, a-slope 0.01: symmetric scalar equation
    // P = 0.2 + (0.04 + 0.35) P, so P = 0.2/0.61.
    const auto g5 = gen_erdos_renyi(5, 1.0, 0);
    const auto m5 = build_activation(ModelSpec::affine_abcd(0.1, 0.2, 0.3, 0.1, 0.01), g5);
    const auto sol5 = mf_fixed_point(g5, m5, PolicyVector::uniform(5, 0.5));
    for (int i = 0; i < 5; ++i) CHECK(std::abs(sol5.P_star[i] - 0.2 / 0.61) <= 1e-9);
}

TEST_CASE("fixed point is unique across random initializations") {
    const auto g = gen_erdos_renyi(15, 0.3, 77);
    const auto m = build_activation(logistic_spec(10.0), g);
    const auto pi = PolicyVector::uniform(15, 0.5);
    const auto reference = mf_fixed_point(g, m, pi);
    for (int trial = 0; trial < 10; ++trial) {
        FixedPointOptions opts;
        opts.initial.resize(15);
        for (int i = 0; i < 15; ++i)
            opts.initial[i] = rng::uniform(trial, 0, 0, i, rng::Purpose::Init);
        const auto sol = mf_fixed_point(g, m, pi, opts);
        double max_diff = 0;
        for (int i = 0; i < 15; ++i)
            max_diff = std::max(max_diff, std::abs(sol.P_star[i] - reference.P_star[i]));
        CHECK(max_diff <= 1e-8);
    }
}

TEST_CASE("iterates contract toward the fixed point in L1") {
    const auto g = gen_erdos_renyi(25, 0.15, 13);
    const auto m = build_activation(ModelSpec::affine_abcd(0.1, 0.2, 0.3, 0.1, 0.01), g);
    const auto pi = PolicyVector::uniform(25, 0.5);
    const auto rep = assumption_constants(m, g);
    FixedPointOptions opts;
    opts.record_iterates = true;
    const auto sol = mf_fixed_point(g, m, pi, opts);
    for (std::size_t k = 0; k + 1 < sol.iterates.size(); ++k) {
        const double now = l1_dist(sol.iterates[k], sol.P_star);
        const double next = l1_dist(sol.iterates[k + 1], sol.P_star);
        if (now < 1e-12) continue;
        CHECK(next <= rep.C * now + 1e-12);
    }
}

TEST_CASE("contraction violations are refused unless overridden") {
    AffineCurves wild;
    wild.base = {{{0.05, 0.95}, {0.5, 0.5}}};
    wild.slope = {{{0.07, -0.07}, {0.035, -0.035}}};
    ModelSpec spec;
    spec.defaults = wild;
    const auto g = gen_erdos_renyi(13, 1.0, 0);
    const auto m = build_activation(spec, g);
    const auto pi = PolicyVector::uniform(13, 0.5);
    CHECK_THROWS_AS(mf_fixed_point(g, m, pi), ContractionViolatedError);
    FixedPointOptions opts;
    opts.require_contraction = false;
    CHECK_NOTHROW(mf_fixed_point(g, m, pi, opts)); // this instance still converges
}

TEST_CASE("jacobian parts on the constant single unit") {
    const auto g = singleton();
    const auto m = build_activation(ModelSpec::constant_abcd(0.1, 0.2, 0.3, 0.1), g);
    const auto pi = PolicyVector::uniform(1, 0.5);
    const auto sol = mf_fixed_point(g, m, pi);
    const auto parts = mf_jacobian_parts(g, m, sol, pi);
    CHECK(parts.D_diag[0] == doctest::Approx(0.0));
    CHECK(parts.W_diag[0] == doctest::Approx(0.35).epsilon(1e-12));
    const auto u = mf_direction_term(g, m, sol, std::vector<double>{1.0});
    CHECK(u[0] == doctest::Approx(0.2 + 0.1 * (0.2 / 0.65)).epsilon(1e-9)); // 0.230769
}

TEST_CASE("jacobian parts reject a stale solution") {
    const auto g = gen_erdos_renyi(8, 0.4, 1);
    const auto m = build_activation(ModelSpec::constant_abcd(0.1, 0.2, 0.3, 0.1), g);
    const auto pi = PolicyVector::uniform(8, 0.5);
    auto sol = mf_fixed_point(g, m, pi);
    const auto other_pi = PolicyVector::uniform(8, 0.6);
    CHECK_THROWS_AS(mf_jacobian_parts(g, m, sol, other_pi), StaleSolutionError);
}

TEST_CASE("D_diag matches a finite difference of mf_step at the fixed point") {
    const auto g = gen_erdos_renyi(10, 0.4, 17);
    const auto m = build_activation(logistic_spec(8.0), g);
    const auto pi = PolicyVector::uniform(10, 0.5);
    const auto sol = mf_fixed_point(g, m, pi);
    const auto parts = mf_jacobian_parts(g, m, sol, pi);
    // Perturb Q directly: d f(P_i, pi_i, Q)/dQ at Q*_i.
    const double h = 1e-5;
    for (int i = 0; i < 10; ++i) {
        auto eval_mix = [&](double q) {
            const Abcd k = m.eval_abcd(i, q);
            return k.a + k.b * pi[i] + k.c * sol.P_star[i] + k.d * pi[i] * sol.P_star[i];
        };
        const double fd = (eval_mix(sol.Q_star[i] + h) - eval_mix(sol.Q_star[i] - h)) / (2 * h);
        CHECK(std::abs(parts.D_diag[i] - fd) <= 1e-5);
    }
}

TEST_CASE("mf_derivative closed forms") {
    const auto g = singleton();
    const auto m = build_activation(ModelSpec::constant_abcd(0.1, 0.2, 0.3, 0.1), g);
    const auto pi = PolicyVector::uniform(1, 0.5);
    const auto p = mf_derivative(g, m, pi, std::vector<double>{1.0});
    // u/(1 - c - d pi) = 0.230769/0.65, also d/dpi [(0.1+0.2pi)/(0.7-0.1pi)]
    // at pi = 0.5 = 0.15/0.4225.
    CHECK(std::abs(p[0] - 0.15 / 0.4225) <= 1e-9); // 0.355030...

    // Empty graph: diagonal solve, exact per unit.
    const auto ge = graph_from_edge_list(4, {});
    const auto me = build_activation(ModelSpec::constant_abcd(0.1, 0.2, 0.3, 0.1), ge);
    PolicyVector pe{{0.2, 0.4, 0.6, 0.8}};
    const auto sole = mf_fixed_point(ge, me, pe);
    const auto parts = mf_jacobian_parts(ge, me, sole, pe);
    const auto u = mf_direction_term(ge, me, sole, std::vector<double>(4, 1.0));
    const auto pd = mf_derivative(ge, me, pe, std::vector<double>(4, 1.0));
    for (int i = 0; i < 4; ++i)
        CHECK(pd[i] == doctest::Approx(u[i] / (1.0 - parts.W_diag[i])).epsilon(1e-10));
}

TEST_CASE("mf_derivative agrees with central finite differences of the fixed point") {
    const auto g = gen_erdos_renyi(12, 0.3, 23);
    const auto m = build_activation(logistic_spec(6.0), g);
    const auto pi = PolicyVector::uniform(12, 0.5);
    const std::vector<double> v(12, 1.0);
    const auto p = mf_derivative(g, m, pi, v);

    FixedPointOptions tight;
    tight.tol = 1e-12;
    auto solve_at = [&](double delta) {
        PolicyVector shifted = pi;
        for (int i = 0; i < 12; ++i) shifted.pi[i] += delta * v[i];
        return mf_fixed_point(g, m, shifted, tight).P_star;
    };
    const double h = 1e-4;
    const auto up = solve_at(h);
    const auto down = solve_at(-h);
    for (int i = 0; i < 12; ++i)
        CHECK(std::abs(p[i] - (up[i] - down[i]) / (2 * h)) <= 1e-6);

    // Central differences converge at second order: halving h quarters the error.
    const double h2 = 2e-2, h1 = 1e-2;
    const auto e_at = [&](double h_) {
        const auto u_ = solve_at(h_);
        const auto d_ = solve_at(-h_);
        double err = 0;
        for (int i = 0; i < 12; ++i)
            err = std::max(err, std::abs(p[i] - (u_[i] - d_[i]) / (2 * h_)));
        return err;
    };
    const double ratio = e_at(h2) / e_at(h1);
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.0);
}

TEST_CASE("mf_lte values and degenerate cases") {
    const auto g = singleton();
    const auto m = build_activation(ModelSpec::constant_abcd(0.1, 0.2, 0.3, 0.1), g);
    const auto pi = PolicyVector::uniform(1, 0.5);
    const std::vector<double> v{1.0};
    CHECK(mf_lte(g, m, pi, 0.0, v) == doctest::Approx(0.0));
    // 0.22/0.64 - 0.2/0.65
    CHECK(std::abs(mf_lte(g, m, pi, 0.1, v) - (0.22 / 0.64 - 0.2 / 0.65)) <= 1e-9);
    CHECK_THROWS_AS(mf_lte(g, m, pi, 0.6, v), PolicyOutOfRangeError);
}

TEST_CASE("mf_lte linearization error halves with Delta") {
    const auto g = gen_erdos_renyi(12, 0.3, 29);
    const auto m = build_activation(logistic_spec(6.0), g);
    const auto pi = PolicyVector::uniform(12, 0.5);
    const std::vector<double> v(12, 1.0);
    FixedPointOptions tight;
    tight.tol = 1e-12;
    const auto p = mf_derivative(g, m, pi, v, tight);
    double lin = 0;
    for (double x : p) lin += x;
    lin /= 12.0;
    const double e1 = std::abs(mf_lte(g, m, pi, 0.1, v, tight) / 0.1 - lin);
    const double e2 = std::abs(mf_lte(g, m, pi, 0.05, v, tight) / 0.05 - lin);
    CHECK(e1 / e2 > 1.5);
    CHECK(e1 / e2 < 2.5);
}

TEST_CASE("mf_lde degenerate and single-unit cases") {
    const auto g = singleton();
    const auto m = build_activation(ModelSpec::constant_abcd(0.1, 0.2, 0.3, 0.1), g);
    const auto pi = PolicyVector::uniform(1, 0.5);
    CHECK(mf_lde(g, m, pi, 0.4, 0.4) == doctest::Approx(0.0));
    CHECK(std::abs(mf_lde(g, m, pi, 0.6, 0.5) - (0.22 / 0.64 - 0.2 / 0.65)) <= 1e-9);
    CHECK_THROWS_AS(mf_lde(g, m, pi, 1.0, 0.5), PolicyOutOfRangeError);
}

TEST_CASE("mf_lde on the empty graph equals the per-unit closed form") {
    const auto g = graph_from_edge_list(5, {});
    const auto m = build_activation(ModelSpec::constant_abcd(0.12, 0.18, 0.25, 0.08), g);
    PolicyVector pi{{0.3, 0.4, 0.5, 0.6, 0.7}};
    const double got = mf_lde(g, m, pi, 0.7, 0.3);
    auto closed = [&](double gamma) {
        // (a + b gamma)/(1 - c - d gamma), identical across units here
        return (0.12 + 0.18 * gamma) / (1.0 - 0.25 - 0.08 * gamma);
    };
    CHECK(std::abs(got - (closed(0.7) - closed(0.3))) <= 1e-9);
}

TEST_CASE("mean-field report serializes") {
    const auto g = gen_erdos_renyi(4, 0.5, 5);
    const auto m = build_activation(ModelSpec::constant_abcd(0.1, 0.2, 0.3, 0.1), g);
    const auto sol = mf_fixed_point(g, m, PolicyVector::uniform(4, 0.5));
    const auto j = sol.to_json();
    CHECK(j.at("P_star").size() == 4);
    CHECK(j.at("residual").get<double>() <= 1e-9);
}
