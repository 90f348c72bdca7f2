#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aiw/error.hpp"
#include "aiw/graph.hpp"
#include "aiw/spectral.hpp"

namespace aiw {

struct NeighborRef {
    int region;
    int order;  // hop count; 0 for the region itself
};

struct RegionNode {
    int id = 0;
    int level = 0;
    Region vertices;  // sorted
    double volume = 0.0;
    int parent = -1;
    std::vector<int> children;
    std::vector<NeighborRef> neighbors;  // self first
};

/// Hierarchy of regions R_{l,k}. Node ids are assigned level by level, so
/// the root is node 0 and ids grow with level.
class PartitionTree {
public:
    std::vector<RegionNode> nodes;
    std::vector<std::vector<int>> levels;   // node ids at each level
    std::vector<double> level_volume_avg;   // VolAv_l

    int max_level() const { return static_cast<int>(levels.size()) - 1; }
    int vertex_count() const { return static_cast<int>(nodes.front().vertices.size()); }
    const RegionNode& node(int id) const { return nodes.at(static_cast<std::size_t>(id)); }

    /// The level-`level` region containing `vertex`.
    int region_containing(int level, int vertex) const {
        int id = 0;
        while (node(id).level < level) {
            const RegionNode& cur = node(id);
            int next = -1;
            for (int c : cur.children) {
                const Region& v = node(c).vertices;
                if (std::binary_search(v.begin(), v.end(), vertex)) {
                    next = c;
                    break;
                }
            }
            if (next < 0) throw InputError("vertex " + std::to_string(vertex) + " not in tree");
            id = next;
        }
        return id;
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Lloyd's 2-means on the rows of `points`. Returns a 0/1 label per row with
/// row 0 always labelled 0, both clusters nonempty.
///
/// Seeding takes the farthest pair among up to 256 rows sampled with `seed`.
inline std::vector<int> two_means(const Eigen::MatrixXd& points, std::uint64_t seed) {
    const int n = static_cast<int>(points.rows());
    if (n < 2) throw InputError("2-means needs at least 2 points");
    std::vector<int> label(static_cast<std::size_t>(n), 0);
    if (n == 2) {
        label[1] = 1;
        return label;
    }

    constexpr int kSample = 256;
    std::vector<int> sample(static_cast<std::size_t>(n));
    std::iota(sample.begin(), sample.end(), 0);
    if (n > kSample) {
        std::uint64_t state = seed;
        for (int t = 0; t < kSample; ++t) {
            const auto r = static_cast<int>(detail::splitmix64(state) % static_cast<std::uint64_t>(n - t));
            std::swap(sample[t], sample[t + r]);
        }
        sample.resize(kSample);
        std::sort(sample.begin(), sample.end());
    }
    int seed_a = sample[0];
    int seed_b = sample[1];
    double best = -1.0;
    for (std::size_t s = 0; s < sample.size(); ++s)
        for (std::size_t t = s + 1; t < sample.size(); ++t) {
            const double d = (points.row(sample[s]) - points.row(sample[t])).squaredNorm();
            if (d > best) {
                best = d;
                seed_a = sample[s];
                seed_b = sample[t];
            }
        }

    Eigen::MatrixXd centroid(2, points.cols());
    centroid.row(0) = points.row(seed_a);
    centroid.row(1) = points.row(seed_b);

    for (int iter = 0; iter < 100; ++iter) {
        bool changed = iter == 0;
        std::array<int, 2> count{0, 0};
        for (int i = 0; i < n; ++i) {
            const double d0 = (points.row(i) - centroid.row(0)).squaredNorm();
            const double d1 = (points.row(i) - centroid.row(1)).squaredNorm();
            const int l = d1 < d0 ? 1 : 0;
            if (l != label[i]) changed = true;
            label[i] = l;
            ++count[l];
        }
        for (int empty = 0; empty < 2; ++empty) {
            if (count[empty] != 0) continue;
            const int full = 1 - empty;
            int far = 0;
            double far_d = -1.0;
            for (int i = 0; i < n; ++i) {
                const double d = (points.row(i) - centroid.row(full)).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            label[far] = empty;
            ++count[empty];
            --count[full];
            changed = true;
        }
        if (!changed) break;
        centroid.setZero();
        for (int i = 0; i < n; ++i) centroid.row(label[i]) += points.row(i);
        centroid.row(0) /= count[0];
        centroid.row(1) /= count[1];
    }

    if (label[0] == 1)
        for (int& l : label) l = 1 - l;
    return label;
}

struct TreeOptions {
    std::optional<int> max_level;  // default floor(log2 N)
    std::uint64_t seed = 0;
};

/// Recursive 2-means bipartition of the embedding. Regions too small to
/// give two children of at least 2 vertices are carried down unchanged
/// (single child); the last level splits every region into singletons.
/// Neighbor lists are left empty; see compute_neighbors.
inline PartitionTree build_tree(const WeightedGraph& graph, const Embedding& embedding,
                                const TreeOptions& options = {}) {
    const int n = graph.size();
    if (embedding.vertex_count() != n) throw InputError("embedding does not match graph");
    const int l_max = options.max_level.value_or(static_cast<int>(std::floor(std::log2(n))));
    if (l_max < 1 || l_max > n - 1)
        throw InputError("levels must be in [1, " + std::to_string(n - 1) + "], got " +
                         std::to_string(l_max));

    PartitionTree tree;
    RegionNode root;
    root.vertices.resize(static_cast<std::size_t>(n));
    std::iota(root.vertices.begin(), root.vertices.end(), 0);
    root.volume = graph.total_volume();
    tree.nodes.push_back(std::move(root));
    tree.levels.push_back({0});

    auto add_child = [&](int parent, Region vertices) {
        RegionNode child;
        child.id = static_cast<int>(tree.nodes.size());
        child.level = tree.nodes[parent].level + 1;
        child.volume = volume(vertices, graph);
        child.vertices = std::move(vertices);
        child.parent = parent;
        tree.nodes[parent].children.push_back(child.id);
        tree.levels[child.level].push_back(child.id);
        tree.nodes.push_back(std::move(child));
    };

    for (int l = 0; l < l_max; ++l) {
        tree.levels.emplace_back();
        const std::vector<int> current = tree.levels[l];
        for (int id : current) {
            const Region verts = tree.nodes[id].vertices;
            const int size = static_cast<int>(verts.size());
            if (l == l_max - 1) {
                for (int v : verts) add_child(id, Region{v});
                continue;
            }
            if (size < 4) {
                add_child(id, verts);
                continue;
            }
            Eigen::MatrixXd pts(size, embedding.dimension());
            for (int r = 0; r < size; ++r) pts.row(r) = embedding.coords.row(verts[r]);
            std::uint64_t state = options.seed ^ (static_cast<std::uint64_t>(id) * 0x2545f4914f6cdd1dULL);
            std::vector<int> label = two_means(pts, detail::splitmix64(state));

            // Keep both children at >= 2 vertices: pull the nearest points
            // of the big cluster into a singleton one.
            for (int small = 0; small < 2; ++small) {
                int count = static_cast<int>(std::count(label.begin(), label.end(), small));
                while (count < 2) {
                    Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(pts.cols());
                    for (int r = 0; r < size; ++r)
                        if (label[r] == small) c += pts.row(r);
                    c /= count;
                    int best = -1;
                    double best_d = std::numeric_limits<double>::infinity();
                    for (int r = 0; r < size; ++r) {
                        if (label[r] == small) continue;
                        const double d = (pts.row(r) - c).squaredNorm();
                        if (d < best_d) {
                            best_d = d;
                            best = r;
                        }
                    }
                    label[best] = small;
                    ++count;
                }
            }
            if (label[0] == 1)
                for (int& x : label) x = 1 - x;

            Region a, b;
            for (int r = 0; r < size; ++r) (label[r] == 0 ? a : b).push_back(verts[r]);
            add_child(id, std::move(a));
            add_child(id, std::move(b));
        }
    }

    tree.level_volume_avg.resize(tree.levels.size());
    for (std::size_t l = 0; l < tree.levels.size(); ++l) {
        double total = 0.0;
        for (int id : tree.levels[l]) total += tree.nodes[id].volume;
        tree.level_volume_avg[l] = total / static_cast<double>(tree.levels[l].size());
    }
    return tree;
}

/// Total edge weight between two disjoint vertex sets.
inline double cut_size(std::span<const int> a, std::span<const int> b, const WeightedGraph& graph) {
    std::vector<char> side(static_cast<std::size_t>(graph.size()), 0);
    for (int v : a) side[v] = 1;
    for (int v : b) {
        if (side[v] == 1) throw InputError("cut_size: regions overlap at vertex " + std::to_string(v));
        side[v] = 2;
    }
    double cut = 0.0;
    for (int v : a)
        for (const auto& nb : graph.adjacency(v))
            if (side[nb.vertex] == 2) cut += nb.weight;
    return cut;
}

/// Fills every node's neighbor list. Same-level regions sharing edges are
/// candidates; a candidate is kept when its cut is at least `cut_fraction`
/// of the region's largest candidate cut. Order-q neighbors are reached in
/// q hops over kept lists.
inline void compute_neighbors(PartitionTree& tree, const WeightedGraph& graph, int neighbor_order,
                              double cut_fraction) {
    if (neighbor_order < 1) throw InputError("neighbor order must be >= 1");
    if (!(cut_fraction >= 0.0 && cut_fraction <= 1.0))
        throw InputError("cut fraction must be in [0, 1]");

    std::vector<int> owner(static_cast<std::size_t>(graph.size()));
    for (std::size_t l = 0; l < tree.levels.size(); ++l) {
        const std::vector<int>& ids = tree.levels[l];
        for (int id : ids)
            for (int v : tree.nodes[id].vertices) owner[v] = id;

        std::map<int, std::vector<int>> kept;
        for (int id : ids) {
            std::map<int, double> cuts;
            for (int v : tree.nodes[id].vertices)
                for (const auto& nb : graph.adjacency(v))
                    if (owner[nb.vertex] != id) cuts[owner[nb.vertex]] += nb.weight;
            double largest = 0.0;
            for (const auto& [other, c] : cuts) largest = std::max(largest, c);
            std::vector<int>& list = kept[id];
            for (const auto& [other, c] : cuts)
                if (c > 0.0 && c >= cut_fraction * largest) list.push_back(other);
            if (list.empty() && ids.size() > 1)
                throw InputError("region " + std::to_string(id) + " at level " + std::to_string(l) +
                                 " has no retained neighbors");
        }

        for (int id : ids) {
            std::map<int, int> order{{id, 0}};
            std::vector<int> frontier{id};
            for (int hop = 1; hop <= neighbor_order && !frontier.empty(); ++hop) {
                std::vector<int> next;
                for (int f : frontier)
                    for (int g : kept[f])
                        if (order.emplace(g, hop).second) next.push_back(g);
                frontier = std::move(next);
            }
            std::vector<NeighborRef>& out = tree.nodes[id].neighbors;
            out.clear();
            out.push_back({id, 0});
            std::vector<NeighborRef> rest;
            for (const auto& [g, hop] : order)
                if (g != id) rest.push_back({g, hop});
            std::stable_sort(rest.begin(), rest.end(),
                             [](const NeighborRef& a, const NeighborRef& b) { return a.order < b.order; });
            out.insert(out.end(), rest.begin(), rest.end());
        }
    }
}

}  // namespace aiw
