#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aiw/error.hpp"
#include "aiw/graph.hpp"

namespace aiw {

inline constexpr int kDefaultNeighbors = 10;

/// n x d matrix of sample coordinates, one point per row.
class PointCloud {
public:
    explicit PointCloud(Eigen::MatrixXd points) : points_(std::move(points)) {
        if (points_.rows() < 2) throw InputError("point cloud needs at least 2 points");
        if (points_.cols() < 1) throw InputError("point cloud has zero columns");
        if (!points_.allFinite()) throw InputError("point cloud contains non-finite coordinates");
    }

    int size() const { return static_cast<int>(points_.rows()); }
    int dimension() const { return static_cast<int>(points_.cols()); }
    const Eigen::MatrixXd& points() const { return points_; }

private:
    Eigen::MatrixXd points_;
};

/// How the Gaussian kernel width epsilon is chosen.
struct Bandwidth {
    enum class Kind { mean_kth, median_kth, fixed };
    Kind kind = Kind::mean_kth;
    double value = 0.0;  // epsilon, for Kind::fixed

    static Bandwidth fixed_value(double eps) { return {Kind::fixed, eps}; }
};

namespace detail {

// Every other point ordered by (squared distance, index).
inline std::vector<std::vector<std::pair<double, int>>> sorted_neighbors(const Eigen::MatrixXd& x,
                                                                         int keep) {
    const int n = static_cast<int>(x.rows());
    std::vector<std::vector<std::pair<double, int>>> out(static_cast<std::size_t>(n));
    std::vector<std::pair<double, int>> row;
    for (int i = 0; i < n; ++i) {
        row.clear();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d2 = (x.row(i) - x.row(j)).squaredNorm();
            if (d2 == 0.0)
                throw InputError("duplicate points " + std::to_string(std::min(i, j)) + " and " +
                                 std::to_string(std::max(i, j)));
            row.emplace_back(d2, j);
        }
        const int k = std::min<int>(keep, static_cast<int>(row.size()));
        std::partial_sort(row.begin(), row.begin() + k, row.end());
        out[i].assign(row.begin(), row.begin() + k);
    }
    return out;
}

inline bool knn_connected(const std::vector<std::vector<std::pair<double, int>>>& nn, int k) {
    const int n = static_cast<int>(nn.size());
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int t = 0; t < k; ++t) {
            adj[i].push_back(nn[i][t].second);
            adj[nn[i][t].second].push_back(i);
        }
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::queue<int> todo;
    todo.push(0);
    seen[0] = 1;
    int count = 1;
    while (!todo.empty()) {
        const int v = todo.front();
        todo.pop();
        for (int u : adj[v])
            if (!seen[u]) {
                seen[u] = 1;
                ++count;
                todo.push(u);
            }
    }
    return count == n;
}

}  // namespace detail

/// Gaussian-weighted symmetrized k-nearest-neighbor graph,
/// W_ij = exp(-|x_i - x_j|^2 / eps), with degree vertex weights so that
/// S^-1 (D - W) is the random-walk Laplacian.
inline WeightedGraph point_cloud_graph(const PointCloud& cloud, int k_neighbors,
                                       Bandwidth bandwidth = {}) {
    const int n = cloud.size();
    if (k_neighbors < 2 || k_neighbors >= n)
        throw InputError("k_neighbors must satisfy 2 <= k < n (k=" + std::to_string(k_neighbors) +
                         ", n=" + std::to_string(n) + ")");

    const auto nn = detail::sorted_neighbors(cloud.points(), k_neighbors);

    double eps = 0.0;
    switch (bandwidth.kind) {
    case Bandwidth::Kind::mean_kth: {
        for (int i = 0; i < n; ++i) eps += nn[i][k_neighbors - 1].first;
        eps /= n;
        break;
    }
    case Bandwidth::Kind::median_kth: {
        std::vector<double> kth(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) kth[i] = nn[i][k_neighbors - 1].first;
        std::nth_element(kth.begin(), kth.begin() + n / 2, kth.end());
        eps = kth[n / 2];
        break;
    }
    case Bandwidth::Kind::fixed:
        eps = bandwidth.value;
        break;
    }
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InputError("kernel bandwidth must be positive");

    if (!detail::knn_connected(nn, k_neighbors)) {
        const auto all = detail::sorted_neighbors(cloud.points(), n - 1);
        int k_min = k_neighbors + 1;
        while (k_min < n && !detail::knn_connected(all, k_min)) ++k_min;
        throw InputError("k-nearest-neighbor graph with k=" + std::to_string(k_neighbors) +
                         " is disconnected; smallest connecting k is " + std::to_string(k_min));
    }

    // Kernel is symmetric in (i, j), so listing each kNN pair once from
    // either side yields exactly equal mirrored weights.
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n) * k_neighbors);
    for (int i = 0; i < n; ++i)
        for (int t = 0; t < k_neighbors; ++t) {
            const auto [d2, j] = nn[i][t];
            edges.push_back({std::min(i, j), std::max(i, j), std::exp(-d2 / eps)});
        }
    return WeightedGraph::from_edges(n, edges, VertexWeightMode::degree);
}

}  // namespace aiw
