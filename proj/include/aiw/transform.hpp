#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aiw/error.hpp"
#include "aiw/graph.hpp"
#include "aiw/interpolate.hpp"
#include "aiw/partition.hpp"
#include "aiw/spectral.hpp"

namespace aiw {

/// beta per tree node, indexed by node id.
struct AveragePyramid {
    std::vector<double> beta;
};

/// Root average plus one coefficient per non-root node (alpha[0] is unused
/// and kept at zero). Coefficients live on the children.
struct WaveletPyramid {
    double root_beta = 0.0;
    std::vector<double> alpha;
};

/// One interpolation solve, reported through TransformOptions::on_solve.
struct SolveReport {
    int level = 0;
    int region = 0;
    int regions_used = 0;
    int moments = 0;
    double condition = 0.0;
    double constraint_residual = 0.0;
    double zero_sum_residual = 0.0;
};

struct TransformOptions {
    double ridge = 0.0;
    std::function<void(const SolveReport&)> on_solve;
};

namespace detail {

// Node ids at one level are contiguous, so summaries are stored by offset.
struct LevelSummaries {
    int first_id = 0;
    std::vector<RegionSummary> items;

    const RegionSummary& at(int id) const { return items[static_cast<std::size_t>(id - first_id)]; }
};

inline LevelSummaries summarize_level(const PartitionTree& tree, int level, const WeightedGraph& graph,
                                      const Embedding& emb) {
    LevelSummaries out;
    const std::vector<int>& ids = tree.levels[static_cast<std::size_t>(level)];
    out.first_id = ids.front();
    out.items.reserve(ids.size());
    for (int id : ids) out.items.push_back(summarize(tree.node(id).vertices, graph, emb));
    return out;
}

inline void check_inputs(const PartitionTree& tree, const WeightedGraph& graph, const Embedding& emb) {
    if (tree.nodes.empty() || tree.vertex_count() != graph.size())
        throw InputError("partition tree does not match the graph");
    if (emb.vertex_count() != graph.size()) throw InputError("embedding does not match the graph");
    for (std::size_t l = 0; l + 1 < tree.levels.size(); ++l)
        for (int id : tree.levels[l])
            if (tree.node(id).neighbors.empty())
                throw InputError("partition tree has no neighbor lists; run compute_neighbors first");
}

// Writes predicted averages for every node at level + 1 into `predicted`,
// using the averages of level `level` held in `beta`.
inline void predict_level(const PartitionTree& tree, int level, const std::vector<double>& beta,
                          const LevelSummaries& parents, const LevelSummaries& children,
                          const Embedding& emb, const TransformOptions& options,
                          std::vector<double>& predicted) {
    std::vector<RegionSummary> regions;
    std::vector<double> values;
    std::vector<RegionSummary> kids;
    for (int id : tree.levels[static_cast<std::size_t>(level)]) {
        const RegionNode& node = tree.node(id);
        if (node.children.size() == 1) {
            predicted[node.children.front()] = beta[id];
            continue;
        }
        regions.clear();
        values.clear();
        for (const NeighborRef& nb : node.neighbors) {
            regions.push_back(parents.at(nb.region));
            values.push_back(beta[nb.region]);
        }
        InterpolationOptions io;
        io.ridge = options.ridge;
        io.region_id = id;
        io.moments = std::min(emb.moment_count(), static_cast<int>(regions.size()) - 1);
        Interpolant interp;
        try {
            interp = solve_interpolant(regions, values, io);
        } catch (const SingularSystemError& e) {
            throw SingularSystemError("level " + std::to_string(level) + ": " + e.what(), e.region(),
                                      e.condition());
        }
        if (options.on_solve)
            options.on_solve({level, id, static_cast<int>(regions.size()), io.moments, interp.condition,
                              interp.constraint_residual, interp.zero_sum_residual});
        kids.clear();
        for (int c : node.children) kids.push_back(children.at(c));
        const std::vector<double> p = predict_children(interp, kids);
        for (std::size_t c = 0; c < node.children.size(); ++c) predicted[node.children[c]] = p[c];
    }
}

}  // namespace detail

/// beta at every node: the S-weighted average of the signal over it.
inline AveragePyramid analyze_averages(const GraphSignal& signal, const PartitionTree& tree,
                                       const WeightedGraph& graph) {
    check_signal(graph, signal);
    if (tree.nodes.empty() || tree.vertex_count() != graph.size())
        throw InputError("partition tree does not match the graph");
    AveragePyramid out;
    out.beta.resize(tree.nodes.size());
    for (const RegionNode& node : tree.nodes) out.beta[node.id] = weighted_average(signal, node.vertices, graph);
    return out;
}

/// Coefficient scale for a node: Vol(node) / sqrt(VolAv at the node's level).
inline double coefficient_scale(const PartitionTree& tree, int id) {
    const RegionNode& node = tree.node(id);
    return node.volume / std::sqrt(tree.level_volume_avg[static_cast<std::size_t>(node.level)]);
}

/// Forward transform: at every parent, fit the interpolant to the true
/// averages on the parent and its neighbors, predict the children, and
/// store alpha_c = Vol(c) / sqrt(VolAv) * (beta_c - predicted_c).
inline WaveletPyramid forward(const GraphSignal& signal, const PartitionTree& tree,
                              const WeightedGraph& graph, const Embedding& emb,
                              const TransformOptions& options = {}) {
    detail::check_inputs(tree, graph, emb);
    const AveragePyramid avg = analyze_averages(signal, tree, graph);
    WaveletPyramid out;
    out.root_beta = avg.beta[0];
    out.alpha.assign(tree.nodes.size(), 0.0);
    std::vector<double> predicted(tree.nodes.size(), 0.0);

    detail::LevelSummaries parents = detail::summarize_level(tree, 0, graph, emb);
    for (int l = 0; l < tree.max_level(); ++l) {
        detail::LevelSummaries children = detail::summarize_level(tree, l + 1, graph, emb);
        detail::predict_level(tree, l, avg.beta, parents, children, emb, options, predicted);
        for (int id : tree.levels[static_cast<std::size_t>(l + 1)]) {
            // Single children reproduce the parent exactly.
            if (tree.node(tree.node(id).parent).children.size() == 1) continue;
            out.alpha[id] = coefficient_scale(tree, id) * (avg.beta[id] - predicted[id]);
        }
        parents = std::move(children);
    }
    return out;
}

/// Rebuilds the averages top-down: beta_c = predicted_c + alpha_c sqrt(VolAv) / Vol(c).
inline AveragePyramid reconstruct_averages(const WaveletPyramid& pyramid, const PartitionTree& tree,
                                           const WeightedGraph& graph, const Embedding& emb,
                                           const TransformOptions& options = {}) {
    detail::check_inputs(tree, graph, emb);
    if (pyramid.alpha.size() != tree.nodes.size())
        throw InputError("pyramid has " + std::to_string(pyramid.alpha.size()) +
                         " coefficients, tree has " + std::to_string(tree.nodes.size()) + " nodes");
    if (!std::isfinite(pyramid.root_beta)) throw InputError("non-finite root average");
    AveragePyramid avg;
    avg.beta.assign(tree.nodes.size(), 0.0);
    avg.beta[0] = pyramid.root_beta;
    std::vector<double> predicted(tree.nodes.size(), 0.0);

    detail::LevelSummaries parents = detail::summarize_level(tree, 0, graph, emb);
    for (int l = 0; l < tree.max_level(); ++l) {
        detail::LevelSummaries children = detail::summarize_level(tree, l + 1, graph, emb);
        detail::predict_level(tree, l, avg.beta, parents, children, emb, options, predicted);
        for (int id : tree.levels[static_cast<std::size_t>(l + 1)])
            avg.beta[id] = predicted[id] + pyramid.alpha[id] / coefficient_scale(tree, id);
        parents = std::move(children);
    }
    return avg;
}

/// Signal from the leaf (singleton) averages.
inline GraphSignal leaf_signal(const AveragePyramid& avg, const PartitionTree& tree) {
    GraphSignal out(tree.vertex_count());
    for (int id : tree.levels.back()) out[tree.node(id).vertices.front()] = avg.beta[id];
    return out;
}

inline GraphSignal inverse(const WaveletPyramid& pyramid, const PartitionTree& tree,
                           const WeightedGraph& graph, const Embedding& emb,
                           const TransformOptions& options = {}) {
    return leaf_signal(reconstruct_averages(pyramid, tree, graph, emb, options), tree);
}

/// Refinement of a unit average on `target` (zero on the other regions of
/// its level) down to the leaves, without detail coefficients. Unscaled.
inline GraphSignal scaling_function(const PartitionTree& tree, int target, const WeightedGraph& graph,
                                    const Embedding& emb, const TransformOptions& options = {}) {
    detail::check_inputs(tree, graph, emb);
    if (target < 0 || target >= static_cast<int>(tree.nodes.size()))
        throw InputError("node " + std::to_string(target) + " does not exist");
    const int start = tree.node(target).level;
    if (start >= tree.max_level()) throw InputError("scaling function target must be above the leaf level");

    std::vector<double> beta(tree.nodes.size(), 0.0);
    beta[target] = 1.0;
    detail::LevelSummaries parents = detail::summarize_level(tree, start, graph, emb);
    for (int l = start; l < tree.max_level(); ++l) {
        detail::LevelSummaries children = detail::summarize_level(tree, l + 1, graph, emb);
        detail::predict_level(tree, l, beta, parents, children, emb, options, beta);
        parents = std::move(children);
    }
    AveragePyramid avg{std::move(beta)};
    return leaf_signal(avg, tree);
}

}  // namespace aiw
