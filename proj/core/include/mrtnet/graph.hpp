#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mrtnet {

/// Undirected simple graph over n units. Immutable after construction;
/// safe to share across concurrent readers.
struct InterferenceGraph {
    int n = 0;
    std::vector<std::vector<int>> neighbors; // per unit, sorted, no self, no dups
    int max_degree = 0;
    bool complete = false; // every unit adjacent to every other

    int degree(int i) const { return static_cast<int>(neighbors[i].size()); }
    std::size_t edge_count() const;
    std::uint64_t hash() const;
};

InterferenceGraph graph_from_edge_list(int n, std::span<const std::pair<int, int>> edges);

InterferenceGraph gen_erdos_renyi(int n, double rho, std::uint64_t seed);

/// Built-in graphon kernel menu: a constant, a K-block symmetric matrix over
/// equal-width cells of [0,1], or a product g(u)g(v) with g piecewise
/// constant. Kernel values must lie in [0,1].
struct GraphonKernel {
    enum class Family { Constant, Block, Product };
    Family family = Family::Constant;
    double constant = 1.0;
    std::vector<std::vector<double>> block; // K x K, symmetric
    std::vector<double> product_g;          // g on K equal cells

    static GraphonKernel make_constant(double value);
    static GraphonKernel make_block(std::vector<std::vector<double>> matrix);
    static GraphonKernel make_product(std::vector<double> g);

    void validate() const; // throws InvalidKernelError
    double eval(double u, double v) const;
};

struct GraphonResult {
    InterferenceGraph graph;
    std::vector<double> latent_types; // U_i, i.i.d. Uniform[0,1]
};

GraphonResult gen_graphon(int n, double rho, const GraphonKernel& kernel, std::uint64_t seed);

int max_degree(const InterferenceGraph& g);

/// out[i] = sum of state[j] over neighbors j of i.
std::vector<int> neighbor_sums(const InterferenceGraph& g, std::span<const std::uint8_t> state);
std::vector<double> neighbor_sums(const InterferenceGraph& g, std::span<const double> state);

/// Edge-list text format: first line "n", then one "i j" pair per line with
/// i < j in lexicographic order; '#' starts a comment.
void write_edge_list(const InterferenceGraph& g, std::ostream& out);
InterferenceGraph read_edge_list(std::istream& in);
void save_edge_list(const InterferenceGraph& g, const std::string& path);
InterferenceGraph load_edge_list(const std::string& path);

} // namespace mrtnet
