#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aiw/error.hpp"

namespace aiw {

/// Real value per vertex.
using GraphSignal = Eigen::VectorXd;

/// A set of vertex ids. Regions produced by the library are sorted ascending.
using Region = std::vector<int>;

struct Edge {
    int i = 0;
    int j = 0;
    double w = 0.0;
};

enum class VertexWeightMode { unit, degree, explicit_weights };

/// Simple connected undirected graph with nonnegative edge weights W and
/// positive vertex weights S. Immutable once built.
class WeightedGraph {
public:
    struct Neighbor {
        int vertex;
        double weight;
    };

    /// Builds the graph and validates it. Every (i, j) pair may be listed in
    /// either or both directions; mirrored entries must agree to 1e-9 relative.
    /// Zero-weight edges are accepted and ignored.
    static WeightedGraph from_edges(int n_vertices, std::span<const Edge> edges,
                                    VertexWeightMode mode,
                                    std::span<const double> explicit_weights = {}) {
        if (n_vertices < 1) throw InputError("graph must have at least one vertex");
        if (edges.empty()) throw InputError("edge list is empty");

        struct Entry {
            double w;
            bool forward;   // seen as (lo, hi)
            bool backward;  // seen as (hi, lo)
        };
        std::map<std::pair<int, int>, Entry> pairs;
        for (const Edge& e : edges) {
            if (e.i < 0 || e.j < 0 || e.i >= n_vertices || e.j >= n_vertices)
                throw InputError("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                                 ") references a vertex outside [0, " +
                                 std::to_string(n_vertices) + ")");
            if (e.i == e.j) throw InputError("self-loop at vertex " + std::to_string(e.i));
            if (!std::isfinite(e.w)) throw InputError("non-finite edge weight");
            if (e.w < 0.0)
                throw InputError("negative weight on edge (" + std::to_string(e.i) + ", " +
                                 std::to_string(e.j) + ")");
            const bool fwd = e.i < e.j;
            const auto key = std::minmax(e.i, e.j);
            auto [it, inserted] = pairs.try_emplace({key.first, key.second}, Entry{e.w, fwd, !fwd});
            if (inserted) continue;
            Entry& prev = it->second;
            const bool same_direction = fwd ? prev.forward : prev.backward;
            const double scale = std::max(std::abs(prev.w), std::abs(e.w));
            const bool agree = std::abs(prev.w - e.w) <= 1e-9 * scale;
            if (!agree) {
                if (same_direction)
                    throw InputError("duplicate edge (" + std::to_string(e.i) + ", " +
                                     std::to_string(e.j) + ") with different weights");
                throw InputError("non-symmetric weights on edge (" + std::to_string(key.first) +
                                 ", " + std::to_string(key.second) + ")");
            }
            (fwd ? prev.forward : prev.backward) = true;
        }

        WeightedGraph g;
        g.adj_.assign(static_cast<std::size_t>(n_vertices), {});
        for (const auto& [key, entry] : pairs) {
            if (entry.w == 0.0) continue;
            g.adj_[key.first].push_back({key.second, entry.w});
            g.adj_[key.second].push_back({key.first, entry.w});
        }
        for (auto& row : g.adj_)
            std::sort(row.begin(), row.end(),
                      [](const Neighbor& a, const Neighbor& b) { return a.vertex < b.vertex; });

        g.degree_ = Eigen::VectorXd::Zero(n_vertices);
        for (int i = 0; i < n_vertices; ++i)
            for (const Neighbor& nb : g.adj_[i]) g.degree_[i] += nb.weight;

        if (!g.connected()) throw InputError("graph is disconnected");

        switch (mode) {
        case VertexWeightMode::unit:
            g.mass_ = Eigen::VectorXd::Ones(n_vertices);
            break;
        case VertexWeightMode::degree:
            g.mass_ = g.degree_;
            break;
        case VertexWeightMode::explicit_weights:
            if (static_cast<int>(explicit_weights.size()) != n_vertices)
                throw InputError("expected " + std::to_string(n_vertices) + " vertex weights, got " +
                                 std::to_string(explicit_weights.size()));
            g.mass_.resize(n_vertices);
            for (int i = 0; i < n_vertices; ++i) {
                const double s = explicit_weights[i];
                if (!std::isfinite(s) || s <= 0.0)
                    throw InputError("vertex weight " + std::to_string(i) + " must be positive");
                g.mass_[i] = s;
            }
            break;
        }
        g.total_volume_ = g.mass_.sum();
        return g;
    }

    int size() const { return static_cast<int>(adj_.size()); }

    const std::vector<Neighbor>& adjacency(int i) const { return adj_[i]; }

    double degree(int i) const { return degree_[i]; }
    const Eigen::VectorXd& degrees() const { return degree_; }

    /// S_ii.
    double vertex_weight(int i) const { return mass_[i]; }
    const Eigen::VectorXd& vertex_weights() const { return mass_; }

    double total_volume() const { return total_volume_; }

    /// Edges with i < j and positive weight, sorted.
    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        for (int i = 0; i < size(); ++i)
            for (const Neighbor& nb : adj_[i])
                if (i < nb.vertex) out.push_back({i, nb.vertex, nb.weight});
        return out;
    }

    std::size_t edge_count() const {
        std::size_t twice = 0;
        for (const auto& row : adj_) twice += row.size();
        return twice / 2;
    }

    /// Dense D - W.
    Eigen::MatrixXd combinatorial_laplacian() const {
        const int n = size();
        Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            lap(i, i) = degree_[i];
            for (const Neighbor& nb : adj_[i]) lap(i, nb.vertex) -= nb.weight;
        }
        return lap;
    }

private:
    WeightedGraph() = default;

    bool connected() const {
        const int n = size();
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::queue<int> todo;
        todo.push(0);
        seen[0] = 1;
        int count = 1;
        while (!todo.empty()) {
            const int v = todo.front();
            todo.pop();
            for (const Neighbor& nb : adj_[v])
                if (!seen[nb.vertex]) {
                    seen[nb.vertex] = 1;
                    ++count;
                    todo.push(nb.vertex);
                }
        }
        return count == n;
    }

    std::vector<std::vector<Neighbor>> adj_;
    Eigen::VectorXd degree_;
    Eigen::VectorXd mass_;
    double total_volume_ = 0.0;
};

inline WeightedGraph build_graph(int n_vertices, std::span<const Edge> edges, VertexWeightMode mode,
                                 std::span<const double> explicit_weights = {}) {
    return WeightedGraph::from_edges(n_vertices, edges, mode, explicit_weights);
}

/// Throws unless `signal` is finite and sized for `graph`.
inline void check_signal(const WeightedGraph& graph, const GraphSignal& signal) {
    if (signal.size() != graph.size())
        throw InputError("signal has " + std::to_string(signal.size()) + " values, graph has " +
                         std::to_string(graph.size()) + " vertices");
    if (!signal.allFinite()) throw InputError("signal contains non-finite values");
}

/// Vol(R) = sum of S_ii over R.
inline double volume(std::span<const int> region, const WeightedGraph& graph) {
    if (region.empty()) throw InputError("volume of an empty region");
    double v = 0.0;
    for (int i : region) v += graph.vertex_weight(i);
    return v;
}

/// S-weighted mean of `signal` over `region`.
inline double weighted_average(const GraphSignal& signal, std::span<const int> region,
                               const WeightedGraph& graph) {
    if (region.empty()) throw InputError("average over an empty region");
    double num = 0.0;
    double den = 0.0;
    for (int i : region) {
        const double s = graph.vertex_weight(i);
        num += s * signal[i];
        den += s;
    }
    return num / den;
}

}  // namespace aiw
