#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aiw/error.hpp"
#include "aiw/graph.hpp"
#include "aiw/partition.hpp"
#include "aiw/spectral.hpp"
#include "aiw/transform.hpp"

namespace aiw {

/// Default denoising cutoff, l_max * 5 / 9 in integer arithmetic.
inline int default_cutoff_level(const PartitionTree& tree) { return tree.max_level() * 5 / 9; }

/// Keeps the coefficients whose parent level is below `cutoff_level` and
/// zeroes the rest.
inline GraphSignal denoise(const GraphSignal& signal, const PartitionTree& tree, const WeightedGraph& graph,
                           const Embedding& emb, int cutoff_level, const TransformOptions& options = {}) {
    if (cutoff_level < 0 || cutoff_level > tree.max_level())
        throw InputError("cutoff level must be in [0, " + std::to_string(tree.max_level()) + "]");
    WaveletPyramid pyr = forward(signal, tree, graph, emb, options);
    for (const RegionNode& node : tree.nodes)
        if (node.parent >= 0 && node.level - 1 >= cutoff_level) pyr.alpha[node.id] = 0.0;
    return inverse(pyr, tree, graph, emb, options);
}

/// Subtracts, per parent, the mean of its children's coefficients, which
/// restores sum_c alpha_c = 0.
inline void reconcile(WaveletPyramid& pyr, const PartitionTree& tree) {
    for (const RegionNode& node : tree.nodes) {
        if (node.children.size() < 2) continue;
        double mean = 0.0;
        for (int c : node.children) mean += pyr.alpha[c];
        mean /= static_cast<double>(node.children.size());
        for (int c : node.children) pyr.alpha[c] -= mean;
    }
}

/// Hard-thresholding variant: zero every |alpha| < threshold, then
/// reconcile siblings.
inline GraphSignal denoise_threshold(const GraphSignal& signal, const PartitionTree& tree,
                                     const WeightedGraph& graph, const Embedding& emb, double threshold,
                                     const TransformOptions& options = {}) {
    if (!(threshold >= 0.0)) throw InputError("threshold must be nonnegative");
    WaveletPyramid pyr = forward(signal, tree, graph, emb, options);
    for (double& a : pyr.alpha)
        if (std::abs(a) < threshold) a = 0.0;
    reconcile(pyr, tree);
    return inverse(pyr, tree, graph, emb, options);
}

/// Observed (vertex, value) pairs with distinct vertices.
struct SampleSet {
    std::vector<std::pair<int, double>> samples;
};

/// Reconstructs a signal from sparse samples: estimate averages where a
/// region holds samples, form coefficients where the parent, all of its
/// children and all of its interpolation neighbors are estimated, reconcile
/// siblings, and invert from the root estimate.
inline GraphSignal regress(const SampleSet& set, const PartitionTree& tree, const WeightedGraph& graph,
                           const Embedding& emb, const TransformOptions& options = {}) {
    detail::check_inputs(tree, graph, emb);
    if (set.samples.empty()) throw InputError("regression needs at least one sample");

    const std::size_t count = tree.nodes.size();
    std::vector<double> num(count, 0.0), den(count, 0.0);
    std::set<int> seen;
    for (const auto& [v, y] : set.samples) {
        if (v < 0 || v >= graph.size()) throw InputError("sample vertex " + std::to_string(v) + " out of range");
        if (!std::isfinite(y)) throw InputError("non-finite sample value");
        if (!seen.insert(v).second) throw InputError("duplicate sample vertex " + std::to_string(v));
        const int leaf = tree.region_containing(tree.max_level(), v);
        num[leaf] += graph.vertex_weight(v) * y;
        den[leaf] += graph.vertex_weight(v);
    }
    for (int l = tree.max_level(); l > 0; --l)
        for (int id : tree.levels[static_cast<std::size_t>(l)]) {
            const int parent = tree.node(id).parent;
            num[parent] += num[id];
            den[parent] += den[id];
        }

    std::vector<double> beta(count, 0.0);
    std::vector<char> known(count, 0);
    for (std::size_t id = 0; id < count; ++id)
        if (den[id] > 0.0) {
            known[id] = 1;
            beta[id] = num[id] / den[id];
        }

    WaveletPyramid pyr;
    pyr.root_beta = beta[0];
    pyr.alpha.assign(count, 0.0);
    std::vector<RegionSummary> regions, kids;
    std::vector<double> values;
    for (int l = 0; l < tree.max_level(); ++l) {
        for (int id : tree.levels[static_cast<std::size_t>(l)]) {
            const RegionNode& node = tree.node(id);
            if (node.children.size() < 2) continue;
            bool usable = known[id] != 0;
            for (const NeighborRef& nb : node.neighbors) usable = usable && known[nb.region];
            for (int c : node.children) usable = usable && known[c];
            if (!usable) continue;

            regions.clear();
            values.clear();
            for (const NeighborRef& nb : node.neighbors) {
                regions.push_back(summarize(tree.node(nb.region).vertices, graph, emb));
                values.push_back(beta[nb.region]);
            }
            InterpolationOptions io;
            io.ridge = options.ridge;
            io.region_id = id;
            io.moments = std::min(emb.moment_count(), static_cast<int>(regions.size()) - 1);
            const Interpolant interp = solve_interpolant(regions, values, io);
            kids.clear();
            for (int c : node.children) kids.push_back(summarize(tree.node(c).vertices, graph, emb));
            const std::vector<double> p = predict_children(interp, kids);
            for (std::size_t c = 0; c < node.children.size(); ++c) {
                const int child = node.children[c];
                pyr.alpha[child] = coefficient_scale(tree, child) * (beta[child] - p[c]);
            }
        }
    }
    reconcile(pyr, tree);
    return inverse(pyr, tree, graph, emb, options);
}

/// 10 log10(sum ref^2 / sum (ref - est)^2); +inf when the estimate is exact.
inline double snr_db(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate) {
    if (reference.size() != estimate.size()) throw InputError("snr_db: length mismatch");
    const double noise = (reference - estimate).squaredNorm();
    if (noise == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(reference.squaredNorm() / noise);
}

/// RMSE divided by the range of the reference.
inline double nrmse(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate) {
    if (reference.size() != estimate.size()) throw InputError("nrmse: length mismatch");
    const double range = reference.maxCoeff() - reference.minCoeff();
    if (!(range > 0.0)) throw InputError("nrmse: reference signal is constant");
    const double rmse = std::sqrt((reference - estimate).squaredNorm() / static_cast<double>(reference.size()));
    return rmse / range;
}

}  // namespace aiw
