#pragma once

// Test fixtures and independent oracles. The oracles deliberately avoid the
// library's spectral and interpolation code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "aiw/aiw.hpp"

namespace aiw_test {

/// Random spanning tree plus `extra` random chords, weights uniform in
/// [0.2, 2]; vertex weights uniform in [0.5, 2] when `random_mass`.
inline aiw::WeightedGraph random_graph(int n, std::uint64_t seed, int extra = -1, bool random_mass = true) {
    aiw::Rng rng(seed);
    if (extra < 0) extra = 2 * n;
    std::vector<aiw::Edge> edges;
    for (int i = 1; i < n; ++i)
        edges.push_back({static_cast<int>(rng.below(static_cast<std::uint64_t>(i))), i, rng.uniform(0.2, 2.0)});
    for (int t = 0; t < extra; ++t) {
        const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        const int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        if (a == b) continue;
        bool dup = false;
        for (const aiw::Edge& e : edges) dup = dup || (std::min(a, b) == std::min(e.i, e.j) && std::max(a, b) == std::max(e.i, e.j));
        if (!dup) edges.push_back({a, b, rng.uniform(0.2, 2.0)});
    }
    if (!random_mass) return aiw::WeightedGraph::from_edges(n, edges, aiw::VertexWeightMode::unit);
    std::vector<double> mass(static_cast<std::size_t>(n));
    for (double& m : mass) m = rng.uniform(0.5, 2.0);
    return aiw::WeightedGraph::from_edges(n, edges, aiw::VertexWeightMode::explicit_weights, mass);
}

inline Eigen::VectorXd random_signal(int n, std::uint64_t seed) {
    aiw::Rng rng(seed);
    Eigen::VectorXd f(n);
    for (int i = 0; i < n; ++i) f[i] = rng.normal();
    return f;
}

/// Graph + basis + embedding + tree with neighbor lists.
struct Setup {
    aiw::WeightedGraph graph;
    aiw::SpectralBasis basis;
    aiw::Embedding emb;
    aiw::PartitionTree tree;
};

inline Setup prepare(aiw::WeightedGraph g, double p = 2.0, int neighbor_order = 1, double cut_fraction = 0.125,
                     int n_eigs = -1) {
    Setup s{std::move(g), {}, {}, {}};
    s.basis = aiw::compute_basis(s.graph, n_eigs < 0 ? aiw::default_n_eigs(s.graph.size()) : n_eigs);
    aiw::choose_p(s.basis, p);
    s.emb = aiw::embed(s.basis);
    s.tree = aiw::build_tree(s.graph, s.emb);
    aiw::compute_neighbors(s.tree, s.graph, neighbor_order, cut_fraction);
    return s;
}

inline Eigen::MatrixXd dense_weights(const aiw::WeightedGraph& g) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(g.size(), g.size());
    for (const aiw::Edge& e : g.edges()) w(e.i, e.j) = w(e.j, e.i) = e.w;
    return w;
}

/// Generalized eigenpairs of (D - W) x = lambda S x from Eigen's
/// generalized solver (Cholesky of S), S-orthonormal, ascending.
struct OracleBasis {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

inline OracleBasis oracle_basis(const aiw::WeightedGraph& g) {
    const Eigen::MatrixXd w = dense_weights(g);
    Eigen::MatrixXd lap = -w;
    lap.diagonal() = w.rowwise().sum();
    const Eigen::MatrixXd s = g.vertex_weights().asDiagonal();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(lap, s);
    return {es.eigenvalues(), es.eigenvectors()};
}

/// Dense L = S^-1 (D - W).
inline Eigen::MatrixXd dense_laplacian(const aiw::WeightedGraph& g) {
    const Eigen::MatrixXd w = dense_weights(g);
    Eigen::MatrixXd lap = -w;
    lap.diagonal() = w.rowwise().sum();
    return g.vertex_weights().cwiseInverse().asDiagonal() * lap;
}

/// Coefficient-space minimizer of sum_{n>=1} a_n^2 lambda_n^p subject to
/// Ave{sum_n a_n phi_n | Omega_r} = beta_r, solved as a dense KKT system
/// with full-pivot LU. Returns pi = sum a_n phi_n at every vertex and the
/// coefficients a.
struct OracleInterpolant {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd values;
};

inline OracleInterpolant oracle_interpolant(const aiw::WeightedGraph& g, const OracleBasis& b, double p,
                                            const std::vector<aiw::Region>& regions,
                                            const std::vector<double>& betas) {
    const int n = g.size();
    const int m = static_cast<int>(regions.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m, n);
    for (int r = 0; r < m; ++r) {
        double vol = 0.0;
        for (int i : regions[r]) {
            c.row(r) += g.vertex_weight(i) * b.vectors.row(i);
            vol += g.vertex_weight(i);
        }
        c.row(r) /= vol;
    }
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
    for (int k = 1; k < n; ++k) kkt(k, k) = 2.0 * std::pow(b.values[k], p);
    kkt.topRightCorner(n, m) = c.transpose();
    kkt.bottomLeftCorner(m, n) = c;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
    for (int r = 0; r < m; ++r) rhs[n + r] = betas[r];
    const Eigen::VectorXd x = kkt.fullPivLu().solve(rhs);
    OracleInterpolant out;
    out.coefficients = x.head(n);
    out.values = b.vectors * out.coefficients;
    return out;
}

/// S-orthogonal expansion coefficients of f in the oracle basis.
inline Eigen::VectorXd coefficients_of(const Eigen::VectorXd& f, const aiw::WeightedGraph& g, const OracleBasis& b) {
    return b.vectors.transpose() * g.vertex_weights().asDiagonal() * f;
}

inline std::vector<int> all_vertices(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[i] = i;
    return v;
}

/// Random partition of [0, n) into m nonempty groups (not necessarily
/// connected), drawn from a shuffled vertex order.
inline std::vector<aiw::Region> random_regions(int n, int m, std::uint64_t seed) {
    aiw::Rng rng(seed);
    std::vector<int> order = rng.sample_without_replacement(n, n);
    std::vector<aiw::Region> regions(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r) regions[r].push_back(order[r]);
    for (int t = m; t < n; ++t) regions[rng.below(static_cast<std::uint64_t>(m))].push_back(order[t]);
    for (auto& r : regions) std::sort(r.begin(), r.end());
    return regions;
}

}  // namespace aiw_test
