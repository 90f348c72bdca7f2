#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aiw/detail/symmetric_indefinite.hpp"
#include "aiw/error.hpp"
#include "aiw/graph.hpp"
#include "aiw/spectral.hpp"

namespace aiw {

/// Everything the interpolation system needs to know about one region:
/// its volume, sum_i S_ii H(i), and sum_i S_ii phi_q(i) for each moment
/// function of the embedding.
struct RegionSummary {
    double volume = 0.0;
    Eigen::VectorXd embedding_sum;
    Eigen::VectorXd moment_sum;
};

inline RegionSummary summarize(std::span<const int> region, const WeightedGraph& graph,
                               const Embedding& emb) {
    if (region.empty()) throw InputError("cannot summarize an empty region");
    RegionSummary s;
    s.embedding_sum = Eigen::VectorXd::Zero(emb.dimension());
    s.moment_sum = Eigen::VectorXd::Zero(emb.moment_count());
    for (int i : region) {
        const double w = graph.vertex_weight(i);
        s.volume += w;
        s.embedding_sum += w * emb.coords.row(i).transpose();
        if (emb.moment_count() > 0) s.moment_sum += w * emb.moment_functions.row(i).transpose();
    }
    return s;
}

/// Prescribed averages `betas[r]` over disjoint regions; region 0 is the
/// region being refined, the rest are its neighbors.
struct InterpolationProblem {
    std::vector<Region> regions;
    std::vector<double> betas;
};

struct InterpolationOptions {
    /// Adds ridge * trace(A) / m to the kernel block diagonal when > 0.
    double ridge = 0.0;
    /// Number of moment functions of the embedding to enforce; negative
    /// means all of them.
    int moments = -1;
    /// Reported in SingularSystemError.
    int region_id = -1;
    double max_condition = 1e12;
};

/// Energy-minimizing interpolant
///
///   pi(i) = c0 + sum_q c_{-q} phi_q(i) + sum_r c_r sum_{j in Omega_r} S_jj G(i, j),
///
/// with the kernel evaluated on the embedding shifted by `center`. The shift
/// changes only c0, because sum_r c_r Vol(Omega_r) = 0; it keeps the system
/// free of the large common component of nearby embedding vectors.
struct Interpolant {
    double c0 = 0.0;
    Eigen::VectorXd coeffs;         // c_1 .. c_m
    Eigen::VectorXd moment_coeffs;  // c_{-1} .. c_{-q}
    Eigen::VectorXd center;
    Eigen::VectorXd direction;      // sum_r c_r (embedding_sum_r - Vol_r * center)
    std::vector<Region> regions;    // empty when solved from summaries
    std::vector<double> betas;
    std::vector<double> volumes;
    double condition = 0.0;
    double constraint_residual = 0.0;  // max_r |Ave{pi|Omega_r} - beta_r| / max_r |beta_r|
    double zero_sum_residual = 0.0;    // |sum c_r Vol_r| / sum |c_r| Vol_r

    int active_moments() const { return static_cast<int>(moment_coeffs.size()); }
};

/// Bordered matrix [[0, 0, a^T], [0, 0, Phi^T], [a, Phi, A]] and right side
/// (0; 0; b) with A_rr' = region_kernel_sum(Omega_r, Omega_r'), a_r = Vol,
/// Phi_rq = sum S phi_q over Omega_r and b_r = beta_r Vol. Unknown order is
/// (c0, c_{-1..-q}, c_1..c_m).
struct BorderedSystem {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd rhs;
};

namespace detail {

inline void check_problem(const InterpolationProblem& problem, const WeightedGraph& graph) {
    if (problem.regions.empty()) throw InputError("interpolation problem has no regions");
    if (problem.regions.size() != problem.betas.size())
        throw InputError("interpolation problem: region and average counts differ");
    std::vector<char> used(static_cast<std::size_t>(graph.size()), 0);
    for (std::size_t r = 0; r < problem.regions.size(); ++r) {
        if (problem.regions[r].empty()) throw InputError("interpolation region is empty");
        if (!std::isfinite(problem.betas[r])) throw InputError("non-finite prescribed average");
        for (int v : problem.regions[r]) {
            if (v < 0 || v >= graph.size()) throw InputError("region vertex out of range");
            if (used[v]) throw InputError("interpolation regions overlap");
            used[v] = 1;
        }
    }
}

}  // namespace detail

inline BorderedSystem assemble_system(const InterpolationProblem& problem, const WeightedGraph& graph,
                                      const Embedding& emb) {
    detail::check_problem(problem, graph);
    const int m = static_cast<int>(problem.regions.size());
    const int q = emb.moment_count();
    std::vector<RegionSummary> sums;
    for (const Region& r : problem.regions) sums.push_back(summarize(r, graph, emb));

    const int size = 1 + q + m;
    BorderedSystem sys{Eigen::MatrixXd::Zero(size, size), Eigen::VectorXd::Zero(size)};
    for (int r = 0; r < m; ++r) {
        const int row = 1 + q + r;
        sys.matrix(0, row) = sys.matrix(row, 0) = sums[r].volume;
        for (int k = 0; k < q; ++k) sys.matrix(1 + k, row) = sys.matrix(row, 1 + k) = sums[r].moment_sum[k];
        for (int s = 0; s < m; ++s)
            sys.matrix(row, 1 + q + s) = sums[r].embedding_sum.dot(sums[s].embedding_sum);
        sys.rhs[row] = problem.betas[r] * sums[r].volume;
    }
    return sys;
}

/// Solves the bordered system for regions given by their summaries.
///
/// The averages are shifted by betas[0] before solving and the shift is added
/// back to c0, so equal averages give c0 = beta exactly and all other
/// coefficients exactly zero.
inline Interpolant solve_interpolant(std::span<const RegionSummary> regions,
                                     std::span<const double> betas,
                                     const InterpolationOptions& options = {}) {
    const int m = static_cast<int>(regions.size());
    if (m == 0) throw InputError("interpolation problem has no regions");
    if (static_cast<int>(betas.size()) != m)
        throw InputError("interpolation problem: region and average counts differ");
    const int available = static_cast<int>(regions[0].moment_sum.size());
    const int q = options.moments < 0 ? available : options.moments;
    if (q > available) throw InputError("more moments requested than the embedding provides");
    if (m < q + 1)
        throw InputError("interpolation needs at least " + std::to_string(q + 1) +
                         " regions for " + std::to_string(q) + " extra vanishing moments, got " +
                         std::to_string(m));
    const int dim = static_cast<int>(regions[0].embedding_sum.size());

    double total_volume = 0.0;
    Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
    for (const RegionSummary& s : regions) {
        total_volume += s.volume;
        center += s.embedding_sum;
    }
    center /= total_volume;

    Eigen::MatrixXd centered(dim, m);
    for (int r = 0; r < m; ++r) centered.col(r) = regions[r].embedding_sum - regions[r].volume * center;

    const int size = 1 + q + m;
    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(size, size);
    Eigen::MatrixXd kernel_block = centered.transpose() * centered;
    if (options.ridge > 0.0) kernel_block.diagonal().array() += options.ridge * kernel_block.trace() / m;
    sys.bottomRightCorner(m, m) = kernel_block;
    for (int r = 0; r < m; ++r) {
        sys(0, 1 + q + r) = sys(1 + q + r, 0) = regions[r].volume;
        for (int k = 0; k < q; ++k)
            sys(1 + k, 1 + q + r) = sys(1 + q + r, 1 + k) = regions[r].moment_sum[k];
    }

    const double shift = betas[0];
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size);
    for (int r = 0; r < m; ++r) rhs[1 + q + r] = (betas[r] - shift) * regions[r].volume;

    // Symmetric equilibration: unit kernel diagonal, unit-sized border rows.
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(size);
    for (int r = 0; r < m; ++r) {
        const double diag = kernel_block(r, r);
        scale[1 + q + r] = diag > 0.0 ? 1.0 / std::sqrt(diag) : 1.0 / regions[r].volume;
    }
    for (int k = 0; k < 1 + q; ++k) {
        double biggest = 0.0;
        for (int r = 0; r < m; ++r) biggest = std::max(biggest, std::abs(sys(k, 1 + q + r)) * scale[1 + q + r]);
        scale[k] = biggest > 0.0 ? 1.0 / biggest : 1.0;
    }
    const Eigen::MatrixXd scaled = scale.asDiagonal() * sys * scale.asDiagonal();

    const detail::SymmetricIndefiniteLDLT ldlt(scaled);
    const double cond = ldlt.condition_estimate();
    if (ldlt.singular() || !(cond <= options.max_condition))
        throw SingularSystemError("interpolation system for region " + std::to_string(options.region_id) +
                                      " is singular or ill-conditioned (condition estimate " +
                                      std::to_string(cond) + "); increase the neighbor order or n_eigs",
                                  options.region_id, cond);

    Eigen::VectorXd x = scale.asDiagonal() * ldlt.solve(scale.asDiagonal() * rhs);
    const Eigen::VectorXd residual = rhs - sys * x;
    if (residual.lpNorm<Eigen::Infinity>() > 0.0) x += scale.asDiagonal() * ldlt.solve(scale.asDiagonal() * residual);

    Interpolant out;
    out.c0 = x[0] + shift;
    out.moment_coeffs = x.segment(1, q);
    out.coeffs = x.tail(m);
    out.center = std::move(center);
    out.direction = centered * out.coeffs;
    out.betas.assign(betas.begin(), betas.end());
    out.condition = cond;
    out.volumes.resize(static_cast<std::size_t>(m));

    double beta_scale = 0.0;
    for (int r = 0; r < m; ++r) beta_scale = std::max(beta_scale, std::abs(betas[r]));
    double worst = 0.0, signed_sum = 0.0, abs_sum = 0.0;
    for (int r = 0; r < m; ++r) {
        const RegionSummary& s = regions[r];
        out.volumes[r] = s.volume;
        double integral = out.c0 * s.volume + out.direction.dot(centered.col(r));
        for (int k = 0; k < q; ++k) integral += out.moment_coeffs[k] * s.moment_sum[k];
        worst = std::max(worst, std::abs(integral / s.volume - betas[r]));
        signed_sum += out.coeffs[r] * s.volume;
        abs_sum += std::abs(out.coeffs[r]) * s.volume;
    }
    out.constraint_residual = beta_scale > 0.0 ? worst / beta_scale : worst;
    out.zero_sum_residual = abs_sum > 0.0 ? std::abs(signed_sum) / abs_sum : 0.0;
    return out;
}

inline Interpolant solve_interpolant(const InterpolationProblem& problem, const WeightedGraph& graph,
                                     const Embedding& emb, const InterpolationOptions& options = {}) {
    detail::check_problem(problem, graph);
    std::vector<RegionSummary> sums;
    sums.reserve(problem.regions.size());
    for (const Region& r : problem.regions) sums.push_back(summarize(r, graph, emb));
    Interpolant out = solve_interpolant(sums, problem.betas, options);
    out.regions = problem.regions;
    return out;
}

/// Ave{pi | region} from the region's summary.
inline double interpolant_average(const Interpolant& interp, const RegionSummary& region) {
    double value = interp.c0 + interp.direction.dot(region.embedding_sum - region.volume * interp.center) / region.volume;
    for (int k = 0; k < interp.active_moments(); ++k)
        value += interp.moment_coeffs[k] * region.moment_sum[k] / region.volume;
    return value;
}

/// Averages of pi over the children of region 0, adjusted by a common
/// offset so that their volume-weighted mean equals betas[0] exactly.
inline std::vector<double> predict_children(const Interpolant& interp,
                                            std::span<const RegionSummary> children) {
    std::vector<double> out(children.size());
    double weighted = 0.0, vol = 0.0;
    for (std::size_t c = 0; c < children.size(); ++c) {
        out[c] = interpolant_average(interp, children[c]);
        weighted += out[c] * children[c].volume;
        vol += children[c].volume;
    }
    const double offset = interp.betas.front() - weighted / vol;
    for (double& v : out) v += offset;
    return out;
}

/// pi at the requested vertices.
inline Eigen::VectorXd evaluate_interpolant(const Interpolant& interp, std::span<const int> vertices,
                                            const Embedding& emb) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(vertices.size()));
    for (std::size_t t = 0; t < vertices.size(); ++t) {
        const int i = vertices[t];
        double v = interp.c0 + interp.direction.dot(emb.coords.row(i).transpose() - interp.center);
        for (int k = 0; k < interp.active_moments(); ++k) v += interp.moment_coeffs[k] * emb.moment_functions(i, k);
        out[static_cast<Eigen::Index>(t)] = v;
    }
    return out;
}

/// Predicted averages on the two children of the interpolant's first region.
inline std::pair<double, double> predicted_child_averages(const Interpolant& interp,
                                                          std::span<const int> child_a,
                                                          std::span<const int> child_b,
                                                          const WeightedGraph& graph,
                                                          const Embedding& emb) {
    if (interp.regions.empty()) throw InputError("interpolant does not record its regions");
    Region merged(child_a.begin(), child_a.end());
    merged.insert(merged.end(), child_b.begin(), child_b.end());
    std::sort(merged.begin(), merged.end());
    Region parent = interp.regions.front();
    std::sort(parent.begin(), parent.end());
    if (merged != parent) throw InputError("children do not partition the parent region");
    const RegionSummary sums[2] = {summarize(child_a, graph, emb), summarize(child_b, graph, emb)};
    const std::vector<double> p = predict_children(interp, sums);
    return {p[0], p[1]};
}

/// Embedding for `moment_count` extra vanishing moments: phi_1..phi_q move
/// to `moment_functions` and coordinate n > q is
///
///   phi_n / (lambda_n * prod_{k<=q} (lambda_n - lambda_k))^(p / (2 (q + 1))),
///
/// so the kernel weight is 1 / (lambda_n^(p/2) (lambda_n - lambda_1)^(p/2))
/// for one moment and the plain p-harmonic weight for none.
inline Embedding higher_moment_kernel(const SpectralBasis& basis, int moment_count) {
    if (moment_count < 0) throw InputError("moment count must be nonnegative");
    if (moment_count == 0) return embed(basis);
    const int n_max = basis.n_max();
    if (moment_count >= n_max)
        throw InputError("moment count must be below the number of nonzero eigenvalues");
    const double lq = basis.eigenvalues[moment_count];
    const double next = basis.eigenvalues[moment_count + 1];
    if (next - lq < 1e-9 * next)
        throw NumericalError("eigenvalue " + std::to_string(moment_count) +
                             " is not simple; its multiplicity exceeds the requested moments");

    Embedding e;
    e.p = basis.p;
    e.moment_functions = basis.eigenvectors.middleCols(1, moment_count);
    e.coords.resize(basis.vertex_count(), n_max - moment_count);
    const double exponent = basis.p / (2.0 * (moment_count + 1));
    for (int n = moment_count + 1; n <= n_max; ++n) {
        const double lam = basis.eigenvalues[n];
        double weight = lam;
        for (int k = 1; k <= moment_count; ++k) weight *= lam - basis.eigenvalues[k];
        e.coords.col(n - moment_count - 1) = basis.eigenvectors.col(n) / std::pow(weight, exponent);
    }
    return e;
}

}  // namespace aiw
