#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aiw/error.hpp"
#include "aiw/graph.hpp"
#include "aiw/point_cloud.hpp"
#include "aiw/random.hpp"

namespace aiw {

enum class SynthKind { interval, swiss_roll, sphere, s_manifold, planar_bulbs };

inline SynthKind parse_synth_kind(const std::string& name) {
    if (name == "interval") return SynthKind::interval;
    if (name == "swiss_roll") return SynthKind::swiss_roll;
    if (name == "sphere") return SynthKind::sphere;
    if (name == "s_manifold") return SynthKind::s_manifold;
    if (name == "planar_bulbs") return SynthKind::planar_bulbs;
    throw InputError("unknown dataset kind '" + name + "'");
}

/// A generated dataset: a graph (interval) or a point cloud (everything
/// else), a smooth benchmark signal, and the intrinsic coordinates each
/// sample was drawn at.
struct SynthResult {
    SynthKind kind = SynthKind::interval;
    std::optional<WeightedGraph> graph;
    std::optional<PointCloud> cloud;
    Eigen::MatrixXd intrinsic;
    GraphSignal signal;
};

namespace detail {

// Arc length of the spiral (t cos t, t sin t) from 0 to t.
inline double spiral_arc_length(double t) { return 0.5 * (t * std::sqrt(1.0 + t * t) + std::asinh(t)); }

inline double spiral_parameter(double arc) {
    double t = std::sqrt(2.0 * arc);
    for (int it = 0; it < 60; ++it) {
        const double step = (spiral_arc_length(t) - arc) / std::sqrt(1.0 + t * t);
        t -= step;
        if (std::abs(step) < 1e-14 * std::max(1.0, t)) break;
    }
    return t;
}

}  // namespace detail

inline constexpr double kSwissRollStart = 1.5 * std::numbers::pi;
inline constexpr double kSwissRollEnd = 4.5 * std::numbers::pi;
inline constexpr double kSwissRollHeight = 21.0;

/// Datasets:
///  - interval(n): path graph, unit edge weights, unit vertex weights;
///    signal x = i / (n - 1).
///  - swiss_roll(n): (t cos t, h, t sin t), t in [1.5 pi, 4.5 pi], h in
///    [0, 21], uniform in (arc length, h); signal = normalized arc length.
///  - sphere(n): uniform on the unit sphere; signal = P3(z) = (5z^3 - 3z) / 2,
///    a degree-3 zonal harmonic.
///  - s_manifold(n): (sin t, 2v, sign(t)(cos t - 1)), t = 3 pi (u - 1/2),
///    u, v uniform in [0, 1] (t is arc length); signal = u.
///  - planar_bulbs(n): two unit discs centered at (+-2, 0) joined by the
///    strip |x| <= 2, |y| <= 0.15, uniform; signal = x.
inline SynthResult synth(SynthKind kind, int n, std::uint64_t seed) {
    SynthResult out;
    out.kind = kind;
    Rng rng(seed);
    if (kind == SynthKind::interval) {
        if (n < 2) throw InputError("interval needs at least 2 vertices");
        std::vector<Edge> edges;
        for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
        out.graph = WeightedGraph::from_edges(n, edges, VertexWeightMode::unit);
        out.intrinsic.resize(n, 1);
        out.signal.resize(n);
        for (int i = 0; i < n; ++i) out.intrinsic(i, 0) = out.signal[i] = static_cast<double>(i) / (n - 1);
        return out;
    }
    if (n <= kDefaultNeighbors)
        throw InputError("point cloud of " + std::to_string(n) + " points is too small for k=" +
                         std::to_string(kDefaultNeighbors) + " neighbors");

    Eigen::MatrixXd pts(n, kind == SynthKind::planar_bulbs ? 2 : 3);
    out.intrinsic.resize(n, 2);
    out.signal.resize(n);
    switch (kind) {
    case SynthKind::swiss_roll: {
        const double s0 = detail::spiral_arc_length(kSwissRollStart);
        const double s1 = detail::spiral_arc_length(kSwissRollEnd);
        for (int i = 0; i < n; ++i) {
            const double arc = rng.uniform(s0, s1);
            const double h = rng.uniform(0.0, kSwissRollHeight);
            const double t = detail::spiral_parameter(arc);
            pts.row(i) << t * std::cos(t), h, t * std::sin(t);
            out.intrinsic.row(i) << arc - s0, h;
            out.signal[i] = (arc - s0) / (s1 - s0);
        }
        break;
    }
    case SynthKind::sphere: {
        for (int i = 0; i < n; ++i) {
            Eigen::Vector3d v;
            do {
                v << rng.normal(), rng.normal(), rng.normal();
            } while (v.norm() < 1e-12);
            v.normalize();
            pts.row(i) = v.transpose();
            out.intrinsic.row(i) << v.z(), std::atan2(v.y(), v.x());
            out.signal[i] = 0.5 * (5.0 * v.z() * v.z() * v.z() - 3.0 * v.z());
        }
        break;
    }
    case SynthKind::s_manifold: {
        for (int i = 0; i < n; ++i) {
            const double u = rng.uniform();
            const double v = rng.uniform();
            const double t = 3.0 * std::numbers::pi * (u - 0.5);
            pts.row(i) << std::sin(t), 2.0 * v, (t < 0 ? -1.0 : 1.0) * (std::cos(t) - 1.0);
            out.intrinsic.row(i) << t + 1.5 * std::numbers::pi, 2.0 * v;
            out.signal[i] = u;
        }
        break;
    }
    case SynthKind::planar_bulbs: {
        int filled = 0;
        while (filled < n) {
            const double x = rng.uniform(-3.0, 3.0);
            const double y = rng.uniform(-1.0, 1.0);
            const bool left = (x + 2.0) * (x + 2.0) + y * y <= 1.0;
            const bool right = (x - 2.0) * (x - 2.0) + y * y <= 1.0;
            const bool strip = std::abs(x) <= 2.0 && std::abs(y) <= 0.15;
            if (!(left || right || strip)) continue;
            pts.row(filled) << x, y;
            out.intrinsic.row(filled) << x, y;
            out.signal[filled] = x;
            ++filled;
        }
        break;
    }
    case SynthKind::interval:
        break;
    }
    out.cloud = PointCloud(std::move(pts));
    return out;
}

}  // namespace aiw
