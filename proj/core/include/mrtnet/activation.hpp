#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mrtnet/graph.hpp"

namespace mrtnet {

// Outcome-probability curves per (y, w) corner, indexed [y][w].
using CornerValues = std::array<std::array<double, 2>, 2>;

struct AffineCurves {
    CornerValues base{};  // f_{yw}(z) = base + slope * z
    CornerValues slope{};
};

struct LogisticCurves {
    CornerValues theta0{}; // f_{yw}(z) = sigmoid(theta0 + thetaz * z / scale)
    CornerValues thetaz{};
    double scale = 1.0;
};

struct TabulatedCurves {
    // Values on the integer grid z = 0..K per corner; linear interpolation
    // between knots, constant beyond the last knot.
    std::array<std::array<std::vector<double>, 2>, 2> values;
};

using UnitCurves = std::variant<AffineCurves, LogisticCurves, TabulatedCurves>;

/// Parsed model-spec file. `defaults` applies to every unit unless an
/// override names it.
struct ModelSpec {
    UnitCurves defaults = AffineCurves{};
    std::vector<std::pair<std::vector<int>, UnitCurves>> overrides;

    static ModelSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    static ModelSpec load(const std::string& path);

    // f(y,w,z) = a(z) + b(z)w + c(z)y + d(z)wy with constant coefficients.
    static ModelSpec constant_abcd(double a, double b, double c, double d);
    // Same but with per-coefficient slopes in z.
    static ModelSpec affine_abcd(double a, double b, double c, double d, double slope_a,
                                 double slope_b = 0.0, double slope_c = 0.0, double slope_d = 0.0);
};

struct Abcd {
    double a = 0, b = 0, c = 0, d = 0;
};

class ActivationModel {
public:
    ActivationModel() = default;

    int n() const { return static_cast<int>(curve_of_unit_.size()); }
    int feasible_degree(int i) const { return degrees_[i]; }
    const UnitCurves& unit(int i) const { return curves_[curve_of_unit_[i]]; }

    double eval_f(int i, int y, int w, double z) const;
    Abcd eval_abcd(int i, double z) const;
    double eval_f_deriv(int i, int y, int w, double z) const;

    std::uint64_t hash() const { return hash_; }
    const nlohmann::json& spec_json() const { return spec_json_; }

    friend ActivationModel build_activation(const ModelSpec& spec, const InterferenceGraph& g);

private:
    std::vector<UnitCurves> curves_;     // deduplicated curve set
    std::vector<int> curve_of_unit_;     // unit -> curve index
    std::vector<int> degrees_;           // unit -> feasible z-range end
    nlohmann::json spec_json_;
    std::uint64_t hash_ = 0;
};

/// Validates the 0 < f < 1 range (margin 1e-9) on each unit's feasible
/// z-range [0, degree(i)], checked on the integer grid plus knots.
ActivationModel build_activation(const ModelSpec& spec, const InterferenceGraph& g);

struct AssumptionReport {
    double L_n = 0;    // sup_z |df/dz| over units, corners, feasible z
    double B = 0;      // sup |c(z) + d(z) w|
    double L2_n = 0;   // sup |d2f/dz2| (0 for affine/tabulated)
    int D_n = 0;       // realized max degree
    double C = 0;      // B + L_n * D_n
    double C_L2 = 0;   // L2_n * D_n^2
    bool contraction_ok = false;
    bool smoothness_ok = false; // every unit's curve is twice differentiable
    std::vector<double> L_per_unit;

    nlohmann::json to_json() const;
};

AssumptionReport assumption_constants(const ActivationModel& m, const InterferenceGraph& g);

} // namespace mrtnet
