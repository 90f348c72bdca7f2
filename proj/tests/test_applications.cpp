#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "aiw/aiw.hpp"
#include "support.hpp"

using namespace aiw;

namespace {

double max_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Denoise, CutoffExtremes) {
    const aiw_test::Setup s = aiw_test::prepare(aiw_test::random_graph(100, 1));
    const Eigen::VectorXd f = aiw_test::random_signal(100, 2);
    EXPECT_LE(max_abs(denoise(f, s.tree, s.graph, s.emb, s.tree.max_level()) - f), 1e-8 * max_abs(f));
    const double mean = weighted_average(f, aiw_test::all_vertices(100), s.graph);
    const Eigen::VectorXd flat = denoise(f, s.tree, s.graph, s.emb, 0);
    EXPECT_LT((flat.array() - mean).abs().maxCoeff(), 1e-10);
    EXPECT_THROW(denoise(f, s.tree, s.graph, s.emb, -1), InputError);
    EXPECT_THROW(denoise(f, s.tree, s.graph, s.emb, s.tree.max_level() + 1), InputError);
}

TEST(Denoise, IdempotentAndLinear) {
    const aiw_test::Setup s = aiw_test::prepare(aiw_test::random_graph(120, 3));
    const Eigen::VectorXd f = aiw_test::random_signal(120, 4), g = aiw_test::random_signal(120, 5);
    const int c = default_cutoff_level(s.tree);
    const Eigen::VectorXd once = denoise(f, s.tree, s.graph, s.emb, c);
    EXPECT_LE(max_abs(denoise(once, s.tree, s.graph, s.emb, c) - once), 1e-8 * max_abs(once));
    const Eigen::VectorXd combo = denoise(1.5 * f + g, s.tree, s.graph, s.emb, c);
    const Eigen::VectorXd parts = 1.5 * once + denoise(g, s.tree, s.graph, s.emb, c);
    EXPECT_LE(max_abs(combo - parts), 1e-8 * max_abs(combo));
}

TEST(Denoise, DefaultCutoff) {
    const aiw_test::Setup s = aiw_test::prepare(aiw_test::random_graph(150, 6));
    EXPECT_EQ(default_cutoff_level(s.tree), s.tree.max_level() * 5 / 9);
}

TEST(Denoise, ThresholdVariantKeepsZeroSum) {
    const aiw_test::Setup s = aiw_test::prepare(aiw_test::random_graph(90, 7));
    const Eigen::VectorXd f = aiw_test::random_signal(90, 8);
    EXPECT_LE(max_abs(denoise_threshold(f, s.tree, s.graph, s.emb, 0.0) - f), 1e-8 * max_abs(f));
    WaveletPyramid pyr = forward(f, s.tree, s.graph, s.emb);
    for (double& a : pyr.alpha)
        if (std::abs(a) < 0.3) a = 0.0;
    reconcile(pyr, s.tree);
    for (const RegionNode& node : s.tree.nodes) {
        double sum = 0.0;
        for (int c : node.children) sum += pyr.alpha[c];
        EXPECT_NEAR(sum, 0.0, 1e-12);
    }
    EXPECT_THROW(denoise_threshold(f, s.tree, s.graph, s.emb, -1.0), InputError);
}

TEST(Reconcile, BinaryFormula) {
    const aiw_test::Setup s = aiw_test::prepare(aiw_test::random_graph(40, 9));
    WaveletPyramid pyr{0.0, std::vector<double>(s.tree.nodes.size(), 0.0)};
    const RegionNode& root = s.tree.node(0);
    ASSERT_EQ(root.children.size(), 2u);
    pyr.alpha[root.children[0]] = 3.0;
    pyr.alpha[root.children[1]] = 1.0;
    reconcile(pyr, s.tree);
    EXPECT_DOUBLE_EQ(pyr.alpha[root.children[0]], (3.0 - 1.0) / 2);
    EXPECT_DOUBLE_EQ(pyr.alpha[root.children[1]], (1.0 - 3.0) / 2);
}

TEST(Regress, FullSamplingIsExact) {
    const aiw_test::Setup s = aiw_test::prepare(aiw_test::random_graph(110, 10));
    const Eigen::VectorXd f = aiw_test::random_signal(110, 11);
    SampleSet set;
    for (int i = 0; i < 110; ++i) set.samples.emplace_back(i, f[i]);
    EXPECT_LE(max_abs(regress(set, s.tree, s.graph, s.emb) - f), 1e-8 * max_abs(f));
}

TEST(Regress, SingleSampleGivesConstant) {
    const aiw_test::Setup s = aiw_test::prepare(aiw_test::random_graph(80, 12));
    const Eigen::VectorXd g = regress(SampleSet{{{17, 0.75}}}, s.tree, s.graph, s.emb);
    EXPECT_LT((g.array() - 0.75).abs().maxCoeff(), 1e-12);
}

TEST(Regress, Errors) {
    const aiw_test::Setup s = aiw_test::prepare(aiw_test::random_graph(30, 13));
    EXPECT_THROW(regress(SampleSet{}, s.tree, s.graph, s.emb), InputError);
    EXPECT_THROW(regress(SampleSet{{{1, 0.0}, {1, 2.0}}}, s.tree, s.graph, s.emb), InputError);
    EXPECT_THROW(regress(SampleSet{{{30, 0.0}}}, s.tree, s.graph, s.emb), InputError);
}

TEST(Metrics, SnrDb) {
    Eigen::VectorXd ref(4);
    ref << 1, -1, 1, -1;
    EXPECT_EQ(snr_db(ref, ref), std::numeric_limits<double>::infinity());
    EXPECT_NEAR(snr_db(ref, Eigen::VectorXd::Zero(4)), 0.0, 1e-12);
    EXPECT_NEAR(snr_db(ref, ref + Eigen::VectorXd::Constant(4, 0.1)), 20.0, 1e-12);
    EXPECT_THROW(snr_db(ref, Eigen::VectorXd::Zero(3)), InputError);
}

TEST(Metrics, Nrmse) {
    Eigen::VectorXd ref(2), est(2);
    ref << 0, 1;
    est << 0.1, 0.9;
    EXPECT_NEAR(nrmse(ref, est), 0.1, 1e-12);
    EXPECT_EQ(nrmse(ref, ref), 0.0);
    EXPECT_NEAR(nrmse(ref, ref.array() + 1.0), 1.0, 1e-12);
    EXPECT_THROW(nrmse(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(3)), InputError);
}

TEST(Synth, IntervalStencil) {
    const SynthResult d = synth(SynthKind::interval, 16, 0);
    const Eigen::MatrixXd lap = aiw_test::dense_laplacian(*d.graph);
    for (int i = 1; i < 15; ++i) {
        EXPECT_EQ(lap(i, i - 1), -1.0);
        EXPECT_EQ(lap(i, i), 2.0);
        EXPECT_EQ(lap(i, i + 1), -1.0);
        EXPECT_EQ(lap.row(i).cwiseAbs().sum(), 4.0);
    }
    EXPECT_DOUBLE_EQ(d.signal[15], 1.0);
}

TEST(Synth, SphereOnUnitSphere) {
    const SynthResult d = synth(SynthKind::sphere, 300, 1);
    ASSERT_TRUE(d.cloud.has_value());
    for (int i = 0; i < 300; ++i) EXPECT_NEAR(d.cloud->points().row(i).norm(), 1.0, 1e-14);
    const double z = d.cloud->points()(5, 2);
    EXPECT_NEAR(d.signal[5], 0.5 * (5 * z * z * z - 3 * z), 1e-14);
}

TEST(Synth, SwissRollUnrollsUniformly) {
    const int n = 4000;
    const SynthResult d = synth(SynthKind::swiss_roll, n, 2);
    const double s0 = detail::spiral_arc_length(kSwissRollStart);
    const double length = detail::spiral_arc_length(kSwissRollEnd) - s0;
    // Invert from the 3-D points alone: the spiral radius equals t.
    constexpr int bins = 8;
    std::vector<double> counts(bins * bins, 0.0);
    for (int i = 0; i < n; ++i) {
        const Eigen::RowVectorXd p = d.cloud->points().row(i);
        const double t = std::hypot(p[0], p[2]);
        const double arc = detail::spiral_arc_length(t) - s0;
        EXPECT_NEAR(arc, d.intrinsic(i, 0), 1e-9);
        const int a = std::min(bins - 1, static_cast<int>(arc / length * bins));
        const int h = std::min(bins - 1, static_cast<int>(p[1] / kSwissRollHeight * bins));
        counts[a * bins + h] += 1.0;
    }
    const double expected = static_cast<double>(n) / (bins * bins);
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    const boost::math::chi_squared dist(bins * bins - 1);
    EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 0.01);
}

TEST(Synth, SManifoldAndBulbs) {
    const SynthResult s = synth(SynthKind::s_manifold, 400, 3);
    for (int i = 0; i < 400; ++i) {
        EXPECT_GE(s.signal[i], 0.0);
        EXPECT_LT(s.signal[i], 1.0);
    }
    const SynthResult b = synth(SynthKind::planar_bulbs, 400, 4);
    EXPECT_EQ(b.cloud->dimension(), 2);
    for (int i = 0; i < 400; ++i) {
        const double x = b.cloud->points()(i, 0), y = b.cloud->points()(i, 1);
        const bool inside = (x + 2) * (x + 2) + y * y <= 1 || (x - 2) * (x - 2) + y * y <= 1 ||
                            (std::abs(x) <= 2 && std::abs(y) <= 0.15);
        EXPECT_TRUE(inside);
    }
}

TEST(Synth, Deterministic) {
    const SynthResult a = synth(SynthKind::sphere, 200, 9), b = synth(SynthKind::sphere, 200, 9);
    EXPECT_TRUE((a.cloud->points().array() == b.cloud->points().array()).all());
    const SynthResult c = synth(SynthKind::sphere, 200, 10);
    EXPECT_FALSE((a.cloud->points().array() == c.cloud->points().array()).all());
}

TEST(Synth, Errors) {
    EXPECT_THROW(synth(SynthKind::sphere, 5, 0), InputError);
    EXPECT_THROW(synth(SynthKind::interval, 1, 0), InputError);
    EXPECT_THROW(parse_synth_kind("torus"), InputError);
}
