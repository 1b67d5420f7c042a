#include "mrtnet/activation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mrtnet/errors.hpp"
#include "mrtnet/hash.hpp"

namespace mrtnet {

namespace {

constexpr double kRangeMargin = 1e-9;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double interp_table(const std::vector<double>& v, double z) {
    const auto last = static_cast<double>(v.size() - 1);
    if (z <= 0.0) return v.front();
    if (z >= last) return v.back();
    const auto k = static_cast<std::size_t>(z);
    const double frac = z - static_cast<double>(k);
    return v[k] + frac * (v[k + 1] - v[k]);
}

double eval_curve(const UnitCurves& c, int y, int w, double z) {
    if (const auto* a = std::get_if<AffineCurves>(&c))
        return a->base[y][w] + a->slope[y][w] * z;
    if (const auto* l = std::get_if<LogisticCurves>(&c))
        return sigmoid(l->theta0[y][w] + l->thetaz[y][w] * z / l->scale);
    const auto& t = std::get<TabulatedCurves>(c);
    return interp_table(t.values[y][w], z);
}

double eval_curve_deriv(const UnitCurves& c, int y, int w, double z) {
    if (const auto* a = std::get_if<AffineCurves>(&c)) return a->slope[y][w];
    if (const auto* l = std::get_if<LogisticCurves>(&c)) {
        const double s = sigmoid(l->theta0[y][w] + l->thetaz[y][w] * z / l->scale);
        return (l->thetaz[y][w] / l->scale) * s * (1.0 - s);
    }
    // Central finite difference with step 1 on the z grid, one-sided at the
    // ends of the tabulated domain.
    const auto& t = std::get<TabulatedCurves>(c);
    const auto& v = t.values[y][w];
    const auto last = static_cast<double>(v.size() - 1);
    const bool left_ok = z - 1.0 >= 0.0;
    const bool right_ok = z + 1.0 <= last;
    if (left_ok && right_ok) return (interp_table(v, z + 1.0) - interp_table(v, z - 1.0)) / 2.0;
    if (right_ok) return interp_table(v, z + 1.0) - interp_table(v, z);
    if (left_ok) return interp_table(v, z) - interp_table(v, z - 1.0);
    return 0.0;
}

// --- spec-file parsing ----------------------------------------------------

const char* corner_key(int y, int w) {
    static const char* keys[2][2] = {{"f00", "f01"}, {"f10", "f11"}};
    return keys[y][w];
}

CornerValues parse_corners(const nlohmann::json& j, const std::string& field, bool required,
                           double fallback) {
    CornerValues out{};
    if (!j.contains(field)) {
        if (required) throw InvalidSpecError("model spec: missing field '" + field + "'");
        for (auto& row : out) row.fill(fallback);
        return out;
    }
    const auto& o = j.at(field);
    for (int y = 0; y < 2; ++y)
        for (int w = 0; w < 2; ++w) {
            const char* key = corner_key(y, w);
            if (!o.contains(key))
                throw InvalidSpecError("model spec: field '" + field + "' missing corner '" + key + "'");
            out[y][w] = o.at(key).get<double>();
        }
    return out;
}

// abcd coefficients to corner values: f(y,w) = a + b w + c y + d w y.
CornerValues corners_from_abcd(double a, double b, double c, double d) {
    CornerValues out{};
    out[0][0] = a;
    out[0][1] = a + b;
    out[1][0] = a + c;
    out[1][1] = a + b + c + d;
    return out;
}

CornerValues parse_abcd(const nlohmann::json& o) {
    for (const char* k : {"a", "b", "c", "d"})
        if (!o.contains(k)) throw InvalidSpecError(std::string("model spec: abcd block missing '") + k + "'");
    return corners_from_abcd(o.at("a").get<double>(), o.at("b").get<double>(),
                             o.at("c").get<double>(), o.at("d").get<double>());
}

UnitCurves parse_curves(const nlohmann::json& j) {
    if (!j.contains("family")) throw InvalidSpecError("model spec: missing 'family'");
    const std::string family = j.at("family").get<std::string>();
    if (family == "affine") {
        AffineCurves a;
        if (j.contains("abcd")) {
            a.base = parse_abcd(j.at("abcd"));
            a.slope = j.contains("abcd_slope") ? parse_abcd(j.at("abcd_slope"))
                                               : CornerValues{};
        } else {
            a.base = parse_corners(j, "base", true, 0.0);
            a.slope = parse_corners(j, "slope", false, 0.0);
        }
        return a;
    }
    if (family == "logistic") {
        LogisticCurves l;
        l.theta0 = parse_corners(j, "theta0", true, 0.0);
        l.thetaz = parse_corners(j, "thetaz", false, 0.0);
        l.scale = j.value("scale", 1.0);
        if (!(l.scale > 0.0)) throw InvalidSpecError("model spec: logistic scale must be positive");
        return l;
    }
    if (family == "tabulated") {
        TabulatedCurves t;
        if (!j.contains("table")) throw InvalidSpecError("model spec: tabulated family needs 'table'");
        const auto& o = j.at("table");
        for (int y = 0; y < 2; ++y)
            for (int w = 0; w < 2; ++w) {
                const char* key = corner_key(y, w);
                if (!o.contains(key))
                    throw InvalidSpecError(std::string("model spec: table missing corner '") + key + "'");
                t.values[y][w] = o.at(key).get<std::vector<double>>();
                if (t.values[y][w].empty())
                    throw InvalidSpecError(std::string("model spec: empty table for corner '") + key + "'");
            }
        return t;
    }
    throw InvalidSpecError("model spec: unknown family '" + family + "'");
}

nlohmann::json corners_to_json(const CornerValues& c) {
    nlohmann::json o;
    for (int y = 0; y < 2; ++y)
        for (int w = 0; w < 2; ++w) o[corner_key(y, w)] = c[y][w];
    return o;
}

nlohmann::json curves_to_json(const UnitCurves& c) {
    nlohmann::json j;
    if (const auto* a = std::get_if<AffineCurves>(&c)) {
        j["family"] = "affine";
        j["base"] = corners_to_json(a->base);
        j["slope"] = corners_to_json(a->slope);
    } else if (const auto* l = std::get_if<LogisticCurves>(&c)) {
        j["family"] = "logistic";
        j["theta0"] = corners_to_json(l->theta0);
        j["thetaz"] = corners_to_json(l->thetaz);
        j["scale"] = l->scale;
    } else {
        const auto& t = std::get<TabulatedCurves>(c);
        j["family"] = "tabulated";
        nlohmann::json tab;
        for (int y = 0; y < 2; ++y)
            for (int w = 0; w < 2; ++w) tab[corner_key(y, w)] = t.values[y][w];
        j["table"] = tab;
    }
    return j;
}

} // namespace

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
    ModelSpec spec;
    spec.defaults = parse_curves(j);
    if (j.contains("overrides")) {
        for (const auto& o : j.at("overrides")) {
            std::vector<int> units;
            if (o.contains("unit"))
                units.push_back(o.at("unit").get<int>());
            else if (o.contains("units"))
                units = o.at("units").get<std::vector<int>>();
            else
                throw InvalidSpecError("model spec: override needs 'unit' or 'units'");
            spec.overrides.emplace_back(std::move(units), parse_curves(o));
        }
    }
    return spec;
}

nlohmann::json ModelSpec::to_json() const {
    nlohmann::json j = curves_to_json(defaults);
    if (!overrides.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [units, curves] : overrides) {
            nlohmann::json o = curves_to_json(curves);
            o["units"] = units;
            arr.push_back(std::move(o));
        }
        j["overrides"] = std::move(arr);
    }
    return j;
}

ModelSpec ModelSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model spec: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpecError("model spec: " + std::string(e.what()));
    }
    return from_json(j);
}

ModelSpec ModelSpec::constant_abcd(double a, double b, double c, double d) {
    return affine_abcd(a, b, c, d, 0.0);
}

ModelSpec ModelSpec::affine_abcd(double a, double b, double c, double d, double slope_a,
                                 double slope_b, double slope_c, double slope_d) {
    AffineCurves curves;
    curves.base = corners_from_abcd(a, b, c, d);
    curves.slope = corners_from_abcd(slope_a, slope_b, slope_c, slope_d);
    ModelSpec spec;
    spec.defaults = curves;
    return spec;
}

double ActivationModel::eval_f(int i, int y, int w, double z) const {
    return eval_curve(unit(i), y, w, z);
}

Abcd ActivationModel::eval_abcd(int i, double z) const {
    const UnitCurves& c = unit(i);
    const double f00 = eval_curve(c, 0, 0, z);
    const double f01 = eval_curve(c, 0, 1, z);
    const double f10 = eval_curve(c, 1, 0, z);
    const double f11 = eval_curve(c, 1, 1, z);
    return {f00, f01 - f00, f10 - f00, f11 - f01 - f10 + f00};
}

double ActivationModel::eval_f_deriv(int i, int y, int w, double z) const {
    return eval_curve_deriv(unit(i), y, w, z);
}

ActivationModel build_activation(const ModelSpec& spec, const InterferenceGraph& g) {
    ActivationModel m;
    m.spec_json_ = spec.to_json();
    m.hash_ = Fnv1a{}.mix(m.spec_json_.dump()).mix(g.n).value();

    m.curves_.push_back(spec.defaults);
    m.curve_of_unit_.assign(g.n, 0);
    for (const auto& [units, curves] : spec.overrides) {
        m.curves_.push_back(curves);
        const int idx = static_cast<int>(m.curves_.size()) - 1;
        for (int u : units) {
            if (u < 0 || u >= g.n)
                throw InvalidSpecError("model spec: override unit " + std::to_string(u) +
                                       " out of range for n=" + std::to_string(g.n));
            m.curve_of_unit_[u] = idx;
        }
    }
    m.degrees_.resize(g.n);
    for (int i = 0; i < g.n; ++i) m.degrees_[i] = g.degree(i);

    // Range check on the integer grid plus tabulated knots of each unit's
    // feasible z-range. All three families attain their extremes there.
    for (int i = 0; i < g.n; ++i) {
        const UnitCurves& c = m.unit(i);
        const int d = m.degrees_[i];
        for (int y = 0; y < 2; ++y)
            for (int w = 0; w < 2; ++w)
                for (int z = 0; z <= d; ++z) {
                    const double f = eval_curve(c, y, w, static_cast<double>(z));
                    if (!(f >= kRangeMargin && f <= 1.0 - kRangeMargin)) {
                        std::ostringstream msg;
                        msg << "activation range violation: f(" << y << "," << w << "," << z
                            << ") = " << f << " at unit " << i << " (feasible z-range [0," << d
                            << "])";
                        throw RangeViolationError(msg.str());
                    }
                }
    }
    return m;
}

namespace {

// Nested sampling lattice over [0, d]: all integer knots plus kSubdiv
// subdivisions of each unit interval. Lattices for larger d contain those for
// smaller d, which keeps sampled sups monotone in the degree.
constexpr int kSubdiv = 16;

template <typename Fn>
double sup_on_lattice(int d, Fn&& fn) {
    double best = fn(0.0);
    for (int k = 0; k < d; ++k)
        for (int s = (k == 0 ? 1 : 0); s <= kSubdiv; ++s)
            best = std::max(best, fn(k + static_cast<double>(s) / kSubdiv));
    return best;
}

double lipschitz_bound(const UnitCurves& c, int d) {
    if (const auto* a = std::get_if<AffineCurves>(&c)) {
        double best = 0;
        for (const auto& row : a->slope)
            for (double s : row) best = std::max(best, std::abs(s));
        return best;
    }
    if (const auto* l = std::get_if<LogisticCurves>(&c)) {
        double best = 0;
        for (int y = 0; y < 2; ++y)
            for (int w = 0; w < 2; ++w) {
                const double rate = l->thetaz[y][w] / l->scale;
                if (rate == 0.0) continue;
                auto deriv = [&](double z) {
                    const double s = sigmoid(l->theta0[y][w] + rate * z);
                    return std::abs(rate) * s * (1.0 - s);
                };
                double corner = std::max(deriv(0.0), deriv(static_cast<double>(d)));
                // sigmoid' peaks where the argument crosses zero
                const double z_star = -l->theta0[y][w] / rate;
                if (z_star > 0.0 && z_star < static_cast<double>(d))
                    corner = std::max(corner, deriv(z_star));
                best = std::max(best, corner);
            }
        return best;
    }
    const auto& t = std::get<TabulatedCurves>(c);
    double best = 0;
    for (const auto& row : t.values)
        for (const auto& v : row) {
            const std::size_t knots = std::min<std::size_t>(v.size(), static_cast<std::size_t>(d) + 1);
            for (std::size_t k = 0; k + 1 < knots; ++k)
                best = std::max(best, std::abs(v[k + 1] - v[k]));
        }
    return best;
}

double self_feedback_bound(const UnitCurves& c, int d) {
    double best = 0;
    for (int w = 0; w < 2; ++w) {
        auto gap = [&](double z) {
            return std::abs(eval_curve(c, 1, w, z) - eval_curve(c, 0, w, z));
        };
        best = std::max(best, sup_on_lattice(d, gap));
    }
    return best;
}

double second_deriv_bound(const UnitCurves& c, int d) {
    const auto* l = std::get_if<LogisticCurves>(&c);
    if (l == nullptr) return 0.0;
    double best = 0;
    for (int y = 0; y < 2; ++y)
        for (int w = 0; w < 2; ++w) {
            const double rate = l->thetaz[y][w] / l->scale;
            if (rate == 0.0) continue;
            auto second = [&](double z) {
                const double s = sigmoid(l->theta0[y][w] + rate * z);
                return rate * rate * std::abs(s * (1.0 - s) * (1.0 - 2.0 * s));
            };
            double corner = std::max(second(0.0), second(static_cast<double>(d)));
            // |sigmoid''| peaks at sigma = (3 +- sqrt(3))/6
            const double x_crit = 1.3169578969248166;
            for (double x : {-x_crit, x_crit}) {
                const double z = (x - l->theta0[y][w]) / rate;
                if (z > 0.0 && z < static_cast<double>(d)) corner = std::max(corner, second(z));
            }
            best = std::max(best, corner);
        }
    return best;
}

} // namespace

nlohmann::json AssumptionReport::to_json() const {
    return {
        {"L_n", L_n},
        {"B", B},
        {"L2_n", L2_n},
        {"D_n", D_n},
        {"C", C},
        {"C_L2", C_L2},
        {"contraction_ok", contraction_ok},
        {"smoothness_ok", smoothness_ok},
    };
}

AssumptionReport assumption_constants(const ActivationModel& m, const InterferenceGraph& g) {
    AssumptionReport rep;
    rep.D_n = max_degree(g);
    rep.L_per_unit.resize(m.n());
    rep.smoothness_ok = true;

    // Deduplicate by (curve, degree); overrides are rare so this is cheap.
    std::map<std::pair<const UnitCurves*, int>, std::pair<double, double>> memo;
    for (int i = 0; i < m.n(); ++i) {
        const UnitCurves& c = m.unit(i);
        const int d = m.feasible_degree(i);
        auto [it, fresh] = memo.try_emplace({&c, d});
        if (fresh) it->second = {lipschitz_bound(c, d), self_feedback_bound(c, d)};
        rep.L_per_unit[i] = it->second.first;
        rep.L_n = std::max(rep.L_n, it->second.first);
        rep.B = std::max(rep.B, it->second.second);
        rep.L2_n = std::max(rep.L2_n, second_deriv_bound(c, d));
        if (std::holds_alternative<TabulatedCurves>(c)) rep.smoothness_ok = false;
    }
    rep.C = rep.B + rep.L_n * rep.D_n;
    rep.C_L2 = rep.L2_n * static_cast<double>(rep.D_n) * static_cast<double>(rep.D_n);
    rep.contraction_ok = rep.C < 1.0;
    return rep;
}

} // namespace mrtnet
