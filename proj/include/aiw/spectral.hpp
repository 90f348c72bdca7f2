#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aiw/error.hpp"
#include "aiw/graph.hpp"

namespace aiw {

/// Smallest eigenpairs of (D - W) phi = lambda S phi, S-orthonormal,
/// lambda_0 = 0 with constant phi_0.
struct SpectralBasis {
    Eigen::VectorXd eigenvalues;   // lambda_0 .. lambda_nmax, ascending
    Eigen::MatrixXd eigenvectors;  // column n is phi_n
    double p = 2.0;

    int n_max() const { return static_cast<int>(eigenvalues.size()) - 1; }
    int vertex_count() const { return static_cast<int>(eigenvectors.rows()); }
};

/// Per-vertex coordinates whose dot products give the Green's kernel.
///
/// `coords` row i is the embedding of vertex i. For the higher-moment
/// variant `moment_functions` holds the eigenvectors that were removed from
/// the kernel (one column each); it is empty for the plain p-harmonic
/// embedding.
struct Embedding {
    Eigen::MatrixXd coords;
    Eigen::MatrixXd moment_functions;
    double p = 2.0;

    int vertex_count() const { return static_cast<int>(coords.rows()); }
    int dimension() const { return static_cast<int>(coords.cols()); }
    int moment_count() const { return static_cast<int>(moment_functions.cols()); }
};

inline int default_n_eigs(int n_vertices) { return std::min(n_vertices - 1, 300); }

/// Flips phi so its first clearly nonzero entry is positive.
inline void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> phi) {
    const double scale = phi.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
        if (std::abs(phi[i]) > 1e-8 * scale) {
            if (phi[i] < 0.0) phi = -phi;
            return;
        }
    }
}

namespace detail {

extern "C" void dsyevr_(const char* jobz, const char* range, const char* uplo, const int* n, double* a,
                        const int* lda, const double* vl, const double* vu, const int* il, const int* iu,
                        const double* abstol, int* m, double* w, double* z, const int* ldz, int* isuppz,
                        double* work, const int* lwork, int* iwork, const int* liwork, int* info,
                        std::size_t jobz_len, std::size_t range_len, std::size_t uplo_len);

// The `count` smallest eigenpairs of a symmetric matrix, ascending, via
// LAPACK's MRRR driver (only the requested vectors are formed).
inline void lowest_eigenpairs(const Eigen::MatrixXd& matrix, int count, Eigen::VectorXd& values,
                              Eigen::MatrixXd& vectors) {
    const int n = static_cast<int>(matrix.rows());
    Eigen::MatrixXd a = matrix;
    values.resize(n);
    vectors.resize(n, count);
    std::vector<int> isuppz(2 * static_cast<std::size_t>(count));
    const int il = 1, iu = count;
    const double vl = 0.0, vu = 0.0, abstol = 0.0;
    int found = 0, info = 0;
    int lwork = -1, liwork = -1, iwork_query = 0;
    double work_query = 0.0;
    dsyevr_("V", "I", "L", &n, a.data(), &n, &vl, &vu, &il, &iu, &abstol, &found, values.data(),
            vectors.data(), &n, isuppz.data(), &work_query, &lwork, &iwork_query, &liwork, &info, 1, 1, 1);
    if (info != 0) throw NumericalError("eigensolver workspace query failed (info " + std::to_string(info) + ")");
    lwork = static_cast<int>(work_query);
    liwork = iwork_query;
    std::vector<double> work(static_cast<std::size_t>(lwork));
    std::vector<int> iwork(static_cast<std::size_t>(liwork));
    dsyevr_("V", "I", "L", &n, a.data(), &n, &vl, &vu, &il, &iu, &abstol, &found, values.data(),
            vectors.data(), &n, isuppz.data(), work.data(), &lwork, iwork.data(), &liwork, &info, 1, 1, 1);
    if (info != 0 || found != count)
        throw NumericalError("eigensolver did not converge (info " + std::to_string(info) + ")");
    values.conservativeResize(count);
}

}  // namespace detail

inline SpectralBasis compute_basis(const WeightedGraph& graph, int n_eigs) {
    const int n = graph.size();
    if (n < 2) throw InputError("spectral basis needs at least 2 vertices");
    if (n_eigs < 1 || n_eigs > n - 1)
        throw InputError("n_eigs must be in [1, " + std::to_string(n - 1) + "], got " +
                         std::to_string(n_eigs));

    // Symmetric reduction: S^-1/2 (D - W) S^-1/2 v = lambda v, phi = S^-1/2 v.
    const Eigen::VectorXd inv_sqrt_mass = graph.vertex_weights().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd reduced =
        inv_sqrt_mass.asDiagonal() * graph.combinatorial_laplacian() * inv_sqrt_mass.asDiagonal();

    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    detail::lowest_eigenpairs(reduced, n_eigs + 1, values, vectors);

    SpectralBasis basis;
    basis.eigenvalues = std::move(values);
    basis.eigenvectors = inv_sqrt_mass.asDiagonal() * vectors;

    // lambda_max <= 2 max_i D_ii / S_ii bounds the spectrum's scale.
    const double top = std::max(1.0, 2.0 * reduced.diagonal().maxCoeff());
    if (basis.eigenvalues[1] <= 1e-10 * top)
        throw NumericalError("second eigenvalue is numerically zero; graph is (nearly) disconnected");

    const Eigen::VectorXd& mass = graph.vertex_weights();
    basis.eigenvalues[0] = 0.0;
    basis.eigenvectors.col(0).setConstant(1.0 / std::sqrt(graph.total_volume()));
    const Eigen::VectorXd phi0 = basis.eigenvectors.col(0);
    for (int k = 1; k <= n_eigs; ++k) {
        auto phi = basis.eigenvectors.col(k);
        phi -= phi.dot(mass.cwiseProduct(phi0)) * phi0;
        phi /= std::sqrt(phi.dot(mass.cwiseProduct(phi)));
        canonicalize_sign(phi);
    }
    return basis;
}

/// Crude manifold dimension from the Weyl law lambda_n ~ n^(2/dim): a least
/// squares line through (log n, log lambda_n) for n in [n_max/4, n_max].
/// `eigenvalues` includes lambda_0.
inline double estimate_dimension(std::span<const double> eigenvalues) {
    const int n_max = static_cast<int>(eigenvalues.size()) - 1;
    if (n_max < 20) throw InputError("dimension estimate needs at least 20 nonzero eigenvalues");
    const int lo = std::max(1, n_max / 4);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (int k = lo; k <= n_max; ++k) {
        if (!(eigenvalues[k] > 0.0)) throw InputError("nonpositive eigenvalue in fit window");
        const double x = std::log(static_cast<double>(k));
        const double y = std::log(eigenvalues[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    if (!(slope > 0.0)) return 10.0;
    return std::clamp(2.0 / slope, 1.0, 10.0);
}

inline double estimate_dimension(const SpectralBasis& basis) {
    return estimate_dimension(
        std::span<const double>(basis.eigenvalues.data(), basis.eigenvalues.size()));
}

/// Picks the kernel exponent and stores it in `basis`. Without a user value
/// p = max(2, round(dimension estimate)), so the embedding denominators grow
/// at least linearly.
inline double choose_p(SpectralBasis& basis, std::optional<double> user_p = std::nullopt) {
    if (user_p) {
        if (!(*user_p > 0.0) || !std::isfinite(*user_p)) throw InputError("p must be positive");
        basis.p = *user_p;
    } else {
        basis.p = std::max(2.0, std::round(estimate_dimension(basis)));
    }
    return basis.p;
}

/// p-harmonic embedding: coordinate n-1 of vertex i is phi_n(i) / lambda_n^(p/2),
/// n = 1 .. n_max.
inline Embedding embed(const SpectralBasis& basis) {
    const int k = basis.n_max();
    Embedding e;
    e.p = basis.p;
    e.coords.resize(basis.vertex_count(), k);
    for (int n = 1; n <= k; ++n)
        e.coords.col(n - 1) = basis.eigenvectors.col(n) / std::pow(basis.eigenvalues[n], basis.p / 2.0);
    return e;
}

inline double green_kernel(const Embedding& emb, int i, int j) {
    return emb.coords.row(i).dot(emb.coords.row(j));
}

/// sum_{i in region} S_ii H(i).
inline Eigen::VectorXd weighted_embedding_sum(const Embedding& emb, std::span<const int> region,
                                              const WeightedGraph& graph) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(emb.dimension());
    for (int i : region) sum += graph.vertex_weight(i) * emb.coords.row(i).transpose();
    return sum;
}

/// sum_{i in A} sum_{j in B} S_ii S_jj G(i, j), in O((|A| + |B|) * dim).
inline double region_kernel_sum(const Embedding& emb, std::span<const int> a, std::span<const int> b,
                                const WeightedGraph& graph) {
    if (a.empty() || b.empty()) throw InputError("kernel sum over an empty region");
    return weighted_embedding_sum(emb, a, graph).dot(weighted_embedding_sum(emb, b, graph));
}

}  // namespace aiw
