#include "mrtnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mrtnet/errors.hpp"
#include "mrtnet/hash.hpp"
#include "mrtnet/rng.hpp"

namespace mrtnet {

namespace {

void finalize(InterferenceGraph& g) {
    g.max_degree = 0;
    for (auto& list : g.neighbors) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        g.max_degree = std::max(g.max_degree, static_cast<int>(list.size()));
    }
    g.complete = g.n > 0 && g.max_degree == g.n - 1 &&
                 std::all_of(g.neighbors.begin(), g.neighbors.end(),
                             [&](const auto& l) { return static_cast<int>(l.size()) == g.n - 1; });
}

void check_unit_count(int n) {
    if (n <= 0) throw InvalidSpecError("unit count must be positive, got " + std::to_string(n));
}

} // namespace

std::size_t InterferenceGraph::edge_count() const {
    std::size_t two_m = 0;
    for (const auto& list : neighbors) two_m += list.size();
    return two_m / 2;
}

std::uint64_t InterferenceGraph::hash() const {
    Fnv1a h;
    h.mix(n);
    for (int i = 0; i < n; ++i)
        for (int j : neighbors[i])
            if (i < j) h.mix(i).mix(j);
    return h.value();
}

InterferenceGraph graph_from_edge_list(int n, std::span<const std::pair<int, int>> edges) {
    check_unit_count(n);
    InterferenceGraph g;
    g.n = n;
    g.neighbors.assign(n, {});
    for (const auto& [i, j] : edges) {
        if (i < 0 || i >= n || j < 0 || j >= n)
            throw IndexOutOfRangeError("edge (" + std::to_string(i) + "," + std::to_string(j) +
                                       ") out of range for n=" + std::to_string(n));
        if (i == j) throw SelfLoopError("self-loop at unit " + std::to_string(i));
        g.neighbors[i].push_back(j);
        g.neighbors[j].push_back(i);
    }
    finalize(g);
    return g;
}

InterferenceGraph gen_erdos_renyi(int n, double rho, std::uint64_t seed) {
    check_unit_count(n);
    if (!(rho >= 0.0 && rho <= 1.0))
        throw InvalidProbabilityError("edge probability must lie in [0,1], got " + std::to_string(rho));
    InterferenceGraph g;
    g.n = n;
    g.neighbors.assign(n, {});
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng::uniform(seed, 0, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j),
                             rng::Purpose::Edge) < rho) {
                g.neighbors[i].push_back(j);
                g.neighbors[j].push_back(i);
            }
        }
    }
    finalize(g);
    return g;
}

GraphonKernel GraphonKernel::make_constant(double value) {
    GraphonKernel k;
    k.family = Family::Constant;
    k.constant = value;
    k.validate();
    return k;
}

GraphonKernel GraphonKernel::make_block(std::vector<std::vector<double>> matrix) {
    GraphonKernel k;
    k.family = Family::Block;
    k.block = std::move(matrix);
    k.validate();
    return k;
}

GraphonKernel GraphonKernel::make_product(std::vector<double> g) {
    GraphonKernel k;
    k.family = Family::Product;
    k.product_g = std::move(g);
    k.validate();
    return k;
}

void GraphonKernel::validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    switch (family) {
    case Family::Constant:
        if (!in_unit(constant)) throw InvalidKernelError("constant kernel value outside [0,1]");
        return;
    case Family::Block: {
        const std::size_t k = block.size();
        if (k == 0) throw InvalidKernelError("block kernel is empty");
        for (const auto& row : block) {
            if (row.size() != k) throw InvalidKernelError("block kernel matrix is not square");
            for (double v : row)
                if (!in_unit(v)) throw InvalidKernelError("block kernel value outside [0,1]");
        }
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b)
                if (block[a][b] != block[b][a])
                    throw InvalidKernelError("block kernel matrix is not symmetric");
        return;
    }
    case Family::Product:
        if (product_g.empty()) throw InvalidKernelError("product kernel is empty");
        for (double v : product_g)
            if (!in_unit(v)) throw InvalidKernelError("product kernel value outside [0,1]");
        return;
    }
    throw InvalidKernelError("unknown kernel family");
}

double GraphonKernel::eval(double u, double v) const {
    auto cell = [](double x, std::size_t k) {
        auto c = static_cast<std::size_t>(x * static_cast<double>(k));
        return std::min(c, k - 1);
    };
    switch (family) {
    case Family::Constant:
        return constant;
    case Family::Block:
        return block[cell(u, block.size())][cell(v, block.size())];
    case Family::Product:
        return product_g[cell(u, product_g.size())] * product_g[cell(v, product_g.size())];
    }
    return 0.0;
}

GraphonResult gen_graphon(int n, double rho, const GraphonKernel& kernel, std::uint64_t seed) {
    check_unit_count(n);
    if (!(rho >= 0.0 && rho <= 1.0))
        throw InvalidProbabilityError("edge probability must lie in [0,1], got " + std::to_string(rho));
    kernel.validate();

    GraphonResult res;
    res.latent_types.resize(n);
    for (int i = 0; i < n; ++i)
        res.latent_types[i] =
            rng::uniform(seed, 0, 0, static_cast<std::uint64_t>(i), rng::Purpose::LatentType);

    InterferenceGraph& g = res.graph;
    g.n = n;
    g.neighbors.assign(n, {});
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double p = rho * kernel.eval(res.latent_types[i], res.latent_types[j]);
            // Same (i, j, Edge) stream cell as gen_erdos_renyi, so a kernel
            // identically equal to one reproduces the ER graph bit for bit.
            if (rng::uniform(seed, 0, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j),
                             rng::Purpose::Edge) < p) {
                g.neighbors[i].push_back(j);
                g.neighbors[j].push_back(i);
            }
        }
    }
    finalize(g);
    return res;
}

int max_degree(const InterferenceGraph& g) { return g.max_degree; }

template <typename In, typename Out>
static std::vector<Out> neighbor_sums_impl(const InterferenceGraph& g, std::span<const In> state) {
    if (static_cast<int>(state.size()) != g.n)
        throw LengthMismatchError("state length " + std::to_string(state.size()) +
                                  " does not match unit count " + std::to_string(g.n));
    std::vector<Out> out(g.n, Out{0});
    if (g.complete) {
        Out total{0};
        for (In v : state) total += static_cast<Out>(v);
        for (int i = 0; i < g.n; ++i) out[i] = total - static_cast<Out>(state[i]);
        return out;
    }
    for (int i = 0; i < g.n; ++i) {
        Out s{0};
        for (int j : g.neighbors[i]) s += static_cast<Out>(state[j]);
        out[i] = s;
    }
    return out;
}

std::vector<int> neighbor_sums(const InterferenceGraph& g, std::span<const std::uint8_t> state) {
    return neighbor_sums_impl<std::uint8_t, int>(g, state);
}

std::vector<double> neighbor_sums(const InterferenceGraph& g, std::span<const double> state) {
    return neighbor_sums_impl<double, double>(g, state);
}

void write_edge_list(const InterferenceGraph& g, std::ostream& out) {
    out << g.n << "\n";
    for (int i = 0; i < g.n; ++i)
        for (int j : g.neighbors[i])
            if (i < j) out << i << " " << j << "\n";
}

InterferenceGraph read_edge_list(std::istream& in) {
    std::string line;
    auto next_content_line = [&](std::string& dst) -> bool {
        while (std::getline(in, dst)) {
            const auto pos = dst.find('#');
            if (pos != std::string::npos) dst.erase(pos);
            if (dst.find_first_not_of(" \t\r\n") != std::string::npos) return true;
        }
        return false;
    };

    if (!next_content_line(line)) throw IoError("edge-list file is empty");
    int n = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> n)) throw IoError("edge-list file: bad unit count line: " + line);
    }
    std::vector<std::pair<int, int>> edges;
    while (next_content_line(line)) {
        std::istringstream ss(line);
        int i, j;
        if (!(ss >> i >> j)) throw IoError("edge-list file: bad edge line: " + line);
        edges.emplace_back(i, j);
    }
    return graph_from_edge_list(n, edges);
}

void save_edge_list(const InterferenceGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    write_edge_list(g, out);
}

InterferenceGraph load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    return read_edge_list(in);
}

} // namespace mrtnet
