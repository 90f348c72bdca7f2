#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "aiw/aiw.hpp"
#include "support.hpp"

using namespace aiw;

namespace {

struct Fixture {
    WeightedGraph graph;
    SpectralBasis basis;
    Embedding emb;
};

Fixture full_basis(int n, std::uint64_t seed, double p = 2.0) {
    Fixture f{aiw_test::random_graph(n, seed), {}, {}};
    f.basis = compute_basis(f.graph, n - 1);
    choose_p(f.basis, p);
    f.emb = embed(f.basis);
    return f;
}

InterpolationProblem random_problem(const WeightedGraph& g, int m, std::uint64_t seed, bool cover = false) {
    auto parts = aiw_test::random_regions(g.size(), cover ? m : m + 2, seed);
    parts.resize(static_cast<std::size_t>(m));
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    InterpolationProblem prob{parts, {}};
    for (int r = 0; r < m; ++r) prob.betas.push_back(rng.normal());
    return prob;
}

Eigen::VectorXd evaluate_all(const Interpolant& interp, const Embedding& emb, int n) {
    return evaluate_interpolant(interp, aiw_test::all_vertices(n), emb);
}

}  // namespace

TEST(AssembleSystem, Structure) {
    const Fixture f = full_basis(20, 1);
    InterpolationProblem prob = random_problem(f.graph, 4, 2);
    const BorderedSystem sys = assemble_system(prob, f.graph, f.emb);
    ASSERT_EQ(sys.matrix.rows(), 5);
    EXPECT_EQ((sys.matrix - sys.matrix.transpose()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(sys.matrix(0, 0), 0.0);
    for (int r = 0; r < 4; ++r) {
        EXPECT_DOUBLE_EQ(sys.matrix(0, 1 + r), volume(prob.regions[r], f.graph));
        for (int s = 0; s < 4; ++s)
            EXPECT_NEAR(sys.matrix(1 + r, 1 + s), region_kernel_sum(f.emb, prob.regions[r], prob.regions[s], f.graph),
                        1e-12);
    }
    for (double& b : prob.betas) b = 0.0;
    EXPECT_EQ(assemble_system(prob, f.graph, f.emb).rhs.cwiseAbs().maxCoeff(), 0.0);
}

TEST(AssembleSystem, SingletonRegions) {
    const Fixture f = full_basis(15, 3);
    const InterpolationProblem prob{{{2}, {9}}, {1.0, -1.0}};
    const BorderedSystem sys = assemble_system(prob, f.graph, f.emb);
    const double s2 = f.graph.vertex_weight(2), s9 = f.graph.vertex_weight(9);
    EXPECT_NEAR(sys.matrix(1, 2), s2 * s9 * green_kernel(f.emb, 2, 9), 1e-13);
    EXPECT_NEAR(sys.matrix(1, 1), s2 * s2 * green_kernel(f.emb, 2, 2), 1e-13);
}

TEST(AssembleSystem, MomentBorder) {
    const Fixture f = full_basis(20, 4);
    const Embedding hm = higher_moment_kernel(f.basis, 2);
    const InterpolationProblem prob = random_problem(f.graph, 5, 5);
    EXPECT_EQ(assemble_system(prob, f.graph, f.emb).matrix.rows(), 6);
    EXPECT_EQ(assemble_system(prob, f.graph, hm).matrix.rows(), 8);
}

TEST(SolveInterpolant, ConstantAverages) {
    const Fixture f = full_basis(25, 6);
    InterpolationProblem prob = random_problem(f.graph, 5, 7);
    for (double& b : prob.betas) b = 5.0;
    const Interpolant interp = solve_interpolant(prob, f.graph, f.emb);
    EXPECT_EQ(interp.c0, 5.0);
    EXPECT_EQ(interp.coeffs.cwiseAbs().maxCoeff(), 0.0);
    const Eigen::VectorXd pi = evaluate_all(interp, f.emb, 25);
    EXPECT_EQ((pi.array() - 5.0).abs().maxCoeff(), 0.0);
}

TEST(SolveInterpolant, WholeVertexSet) {
    const Fixture f = full_basis(25, 8);
    const InterpolationProblem prob{{aiw_test::all_vertices(25)}, {-3.25}};
    const Interpolant interp = solve_interpolant(prob, f.graph, f.emb);
    const Eigen::VectorXd pi = evaluate_all(interp, f.emb, 25);
    EXPECT_LT((pi.array() + 3.25).abs().maxCoeff(), 1e-12);
}

TEST(SolveInterpolant, MatchesCoefficientSpaceOracle) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const int n = 12 + static_cast<int>(seed) * 2;
        const Fixture f = full_basis(n, 100 + seed, seed % 2 ? 2.0 : 3.0);
        const InterpolationProblem prob = random_problem(f.graph, 3 + static_cast<int>(seed % 4), 200 + seed);
        const Interpolant interp = solve_interpolant(prob, f.graph, f.emb);
        const aiw_test::OracleBasis ob = aiw_test::oracle_basis(f.graph);
        const aiw_test::OracleInterpolant oracle =
            aiw_test::oracle_interpolant(f.graph, ob, f.basis.p, prob.regions, prob.betas);
        const Eigen::VectorXd ours = aiw_test::coefficients_of(evaluate_all(interp, f.emb, n), f.graph, ob);
        EXPECT_LE((ours - oracle.coefficients).norm(), 1e-6 * oracle.coefficients.norm()) << "seed " << seed;
    }
}

TEST(SolveInterpolant, ConstraintsAndZeroSum) {
    const Fixture f = full_basis(30, 9);
    const InterpolationProblem prob = random_problem(f.graph, 6, 10);
    const Interpolant interp = solve_interpolant(prob, f.graph, f.emb);
    const Eigen::VectorXd pi = evaluate_all(interp, f.emb, 30);
    for (std::size_t r = 0; r < prob.regions.size(); ++r)
        EXPECT_NEAR(weighted_average(pi, prob.regions[r], f.graph), prob.betas[r], 1e-9);
    double sum = 0.0, scale = 0.0;
    for (int r = 0; r < 6; ++r) {
        sum += interp.coeffs[r] * interp.volumes[r];
        scale += std::abs(interp.coeffs[r]) * interp.volumes[r];
    }
    EXPECT_LE(std::abs(sum), 1e-8 * scale);
    EXPECT_LE(interp.constraint_residual, 1e-9);
    EXPECT_LE(interp.zero_sum_residual, 1e-8);
}

TEST(SolveInterpolant, ShiftAndScaleEquivariance) {
    const Fixture f = full_basis(28, 11);
    const InterpolationProblem prob = random_problem(f.graph, 5, 12);
    InterpolationProblem shifted = prob, scaled = prob;
    for (double& b : shifted.betas) b += 2.5;
    for (double& b : scaled.betas) b *= -3.0;
    const Interpolant a = solve_interpolant(prob, f.graph, f.emb);
    const Interpolant s = solve_interpolant(shifted, f.graph, f.emb);
    const Interpolant t = solve_interpolant(scaled, f.graph, f.emb);
    const Eigen::VectorXd pa = evaluate_all(a, f.emb, 28);
    EXPECT_LT((evaluate_all(s, f.emb, 28).array() - pa.array() - 2.5).abs().maxCoeff(), 1e-8);
    EXPECT_LT((s.coeffs - a.coeffs).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + a.coeffs.cwiseAbs().maxCoeff()));
    EXPECT_LT((evaluate_all(t, f.emb, 28) + 3.0 * pa).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((t.coeffs + 3.0 * a.coeffs).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + a.coeffs.cwiseAbs().maxCoeff()));
}

TEST(SolveInterpolant, SingularSystemReported) {
    // A path of 6 with only 2 eigenpairs: 4 regions cannot be told apart.
    const SynthResult d = synth(SynthKind::interval, 6, 0);
    SpectralBasis b = compute_basis(*d.graph, 1);
    choose_p(b, 2.0);
    const Embedding e = embed(b);
    const InterpolationProblem prob{{{0}, {1}, {2}, {3}}, {0.0, 1.0, 0.0, 1.0}};
    try {
        solve_interpolant(prob, *d.graph, e, InterpolationOptions{0.0, -1, 7, 1e12});
        FAIL() << "expected SingularSystemError";
    } catch (const SingularSystemError& err) {
        EXPECT_EQ(err.region(), 7);
        EXPECT_GT(err.condition(), 1e12);
    }
    // The ridge makes it solvable.
    EXPECT_NO_THROW(solve_interpolant(prob, *d.graph, e, InterpolationOptions{1e-6, -1, 7, 1e12}));
}

TEST(SolveInterpolant, Errors) {
    const Fixture f = full_basis(10, 13);
    EXPECT_THROW(solve_interpolant(InterpolationProblem{{{0, 1}, {1, 2}}, {0.0, 1.0}}, f.graph, f.emb), InputError);
    EXPECT_THROW(solve_interpolant(InterpolationProblem{{{0, 1}}, {0.0, 1.0}}, f.graph, f.emb), InputError);
    EXPECT_THROW(solve_interpolant(InterpolationProblem{{}, {}}, f.graph, f.emb), InputError);
    const Embedding hm = higher_moment_kernel(f.basis, 2);
    EXPECT_THROW(solve_interpolant(InterpolationProblem{{{0}, {1}}, {0.0, 1.0}}, f.graph, hm), InputError);
}

TEST(PredictedChildAverages, Properties) {
    const Fixture f = full_basis(30, 14);
    InterpolationProblem prob = random_problem(f.graph, 4, 15);
    const Region& parent = prob.regions[0];
    ASSERT_GE(parent.size(), 2u);
    const Region a(parent.begin(), parent.begin() + static_cast<long>(parent.size() / 2));
    const Region b(parent.begin() + static_cast<long>(parent.size() / 2), parent.end());
    const Interpolant interp = solve_interpolant(prob, f.graph, f.emb);
    const auto [pa, pb] = predicted_child_averages(interp, a, b, f.graph, f.emb);
    const double va = volume(a, f.graph), vb = volume(b, f.graph);
    EXPECT_NEAR((pa * va + pb * vb) / (va + vb), prob.betas[0], 1e-12);
    // Without the offset correction the predictions are the averages of pi.
    const Eigen::VectorXd pi = evaluate_all(interp, f.emb, 30);
    EXPECT_NEAR(pa, weighted_average(pi, a, f.graph), 1e-9);
    EXPECT_NEAR(pb, weighted_average(pi, b, f.graph), 1e-9);

    for (double& beta : prob.betas) beta = 1.5;
    const Interpolant flat = solve_interpolant(prob, f.graph, f.emb);
    const auto [fa, fb] = predicted_child_averages(flat, a, b, f.graph, f.emb);
    EXPECT_EQ(fa, 1.5);
    EXPECT_EQ(fb, 1.5);

    const Region wrong(a.begin(), a.end());
    EXPECT_THROW(predicted_child_averages(interp, wrong, wrong, f.graph, f.emb), InputError);
}

TEST(HigherMomentKernel, ZeroMomentsIsStandardEmbedding) {
    const Fixture f = full_basis(20, 16);
    const Embedding hm = higher_moment_kernel(f.basis, 0);
    EXPECT_TRUE((hm.coords.array() == f.emb.coords.array()).all());
    EXPECT_EQ(hm.moment_count(), 0);
}

TEST(HigherMomentKernel, OneMomentWeights) {
    const Fixture f = full_basis(20, 17);
    const Embedding hm = higher_moment_kernel(f.basis, 1);
    ASSERT_EQ(hm.dimension(), 18);
    // Kernel weight of eigenvector n is 1 / (lambda_n^(p/2) (lambda_n - lambda_1)^(p/2)).
    const double p = f.basis.p;
    for (int n = 2; n <= 19; ++n) {
        const double lam = f.basis.eigenvalues[n], l1 = f.basis.eigenvalues[1];
        const double weight = 1.0 / (std::pow(lam, p / 2) * std::pow(lam - l1, p / 2));
        const Eigen::VectorXd col = hm.coords.col(n - 2);
        const double got = col.squaredNorm() / f.basis.eigenvectors.col(n).squaredNorm();
        EXPECT_NEAR(got, weight, 1e-10 * weight);
    }
}

TEST(HigherMomentKernel, ReproducesFirstEigenvector) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Fixture f = full_basis(26, 300 + seed);
        const Embedding hm = higher_moment_kernel(f.basis, 1);
        InterpolationProblem prob = random_problem(f.graph, 4, 400 + seed);
        const Eigen::VectorXd target = 0.7 * Eigen::VectorXd::Ones(26) + 2.0 * f.basis.eigenvectors.col(1);
        for (std::size_t r = 0; r < prob.regions.size(); ++r)
            prob.betas[r] = weighted_average(target, prob.regions[r], f.graph);
        const Interpolant interp = solve_interpolant(prob, f.graph, hm);
        EXPECT_EQ(interp.active_moments(), 1);
        EXPECT_LT((evaluate_all(interp, hm, 26) - target).cwiseAbs().maxCoeff(), 1e-6) << "seed " << seed;
    }
}

TEST(HigherMomentKernel, TwoMomentsReproduceSpan) {
    const Fixture f = full_basis(24, 18);
    const Embedding hm = higher_moment_kernel(f.basis, 2);
    InterpolationProblem prob = random_problem(f.graph, 5, 19);
    const Eigen::VectorXd target = f.basis.eigenvectors.col(1) - 0.5 * f.basis.eigenvectors.col(2);
    for (std::size_t r = 0; r < prob.regions.size(); ++r)
        prob.betas[r] = weighted_average(target, prob.regions[r], f.graph);
    const Interpolant interp = solve_interpolant(prob, f.graph, hm);
    EXPECT_LT((evaluate_all(interp, hm, 24) - target).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(HigherMomentKernel, Errors) {
    const Fixture f = full_basis(10, 20);
    EXPECT_THROW(higher_moment_kernel(f.basis, -1), InputError);
    EXPECT_THROW(higher_moment_kernel(f.basis, 9), InputError);
}

TEST(SymmetricIndefiniteLdlt, SolvesRandomIndefiniteSystems) {
    Rng rng(5);
    for (int n : {1, 2, 5, 13}) {
        Eigen::MatrixXd a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.normal();
        if (n > 1) a(0, 0) = 0.0;
        Eigen::VectorXd b(n);
        for (int i = 0; i < n; ++i) b[i] = rng.normal();
        const detail::SymmetricIndefiniteLDLT ldlt(a);
        ASSERT_FALSE(ldlt.singular());
        EXPECT_LT((a * ldlt.solve(b) - b).norm(), 1e-10 * (1.0 + b.norm()) * ldlt.condition_estimate());
    }
    // Saddle point with a zero block.
    Eigen::MatrixXd k(3, 3);
    k << 0, 1, 1, 1, 2, 0.5, 1, 0.5, 3;
    const Eigen::Vector3d rhs(1, 2, 3);
    const detail::SymmetricIndefiniteLDLT ldlt(k);
    EXPECT_LT((k * ldlt.solve(rhs) - rhs).norm(), 1e-12);
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 2);
    EXPECT_TRUE(detail::SymmetricIndefiniteLDLT(z).singular());
}
