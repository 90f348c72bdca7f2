#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aiw/error.hpp"
#include "aiw/graph.hpp"
#include "aiw/partition.hpp"
#include "aiw/point_cloud.hpp"
#include "aiw/spectral.hpp"
#include "aiw/transform.hpp"

namespace aiw::io {

// ---------------------------------------------------------------- numbers

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& where) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    double value = 0.0;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw InputError(where + ": cannot parse number '" + std::string(text) + "'");
    return value;
}

inline long long parse_int(std::string_view text, const std::string& where) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    long long value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw InputError(where + ": cannot parse integer '" + std::string(text) + "'");
    return value;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::vector<std::string_view> split_whitespace(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && !(line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

inline bool blank(std::string_view line) {
    for (char c : line)
        if (c != ' ' && c != '\t' && c != '\r') return false;
    return true;
}

// ---------------------------------------------------------------- hashing

/// 64-bit FNV-1a.
class Fnv1a {
public:
    void add(const void* data, std::size_t size) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
    }
    void add(double x) { add(&x, sizeof x); }
    void add(std::int64_t x) { add(&x, sizeof x); }
    void add(std::string_view s) { add(s.data(), s.size()); }

    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline std::uint64_t graph_hash(const WeightedGraph& g) {
    Fnv1a h;
    h.add(static_cast<std::int64_t>(g.size()));
    for (const Edge& e : g.edges()) {
        h.add(static_cast<std::int64_t>(e.i));
        h.add(static_cast<std::int64_t>(e.j));
        h.add(e.w);
    }
    for (int i = 0; i < g.size(); ++i) h.add(g.vertex_weight(i));
    return h.value();
}

inline std::uint64_t tree_hash(const PartitionTree& tree) {
    Fnv1a h;
    for (const RegionNode& n : tree.nodes) {
        h.add(static_cast<std::int64_t>(n.id));
        h.add(static_cast<std::int64_t>(n.level));
        h.add(static_cast<std::int64_t>(n.parent));
        for (int c : n.children) h.add(static_cast<std::int64_t>(c));
        h.add(std::string_view("|"));
        for (int v : n.vertices) h.add(static_cast<std::int64_t>(v));
        h.add(std::string_view("|"));
        for (const NeighborRef& nb : n.neighbors) {
            h.add(static_cast<std::int64_t>(nb.region));
            h.add(static_cast<std::int64_t>(nb.order));
        }
        h.add(std::string_view("#"));
    }
    return h.value();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline std::uint64_t file_hash(const std::string& path) {
    Fnv1a h;
    h.add(std::string_view(read_file(path)));
    return h.value();
}

// ---------------------------------------------------------------- edge list

struct EdgeList {
    int n_vertices = 0;
    std::vector<Edge> edges;
};

/// `#vertices N` header, then one `i<TAB>j<TAB>w` line per edge (0-based).
inline EdgeList read_edge_list(std::istream& in, const std::string& name = "edge list") {
    EdgeList out;
    bool have_header = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        const std::string where = name + ":" + std::to_string(lineno);
        if (line.front() == '#') {
            const auto fields = split_whitespace(std::string_view(line).substr(1));
            if (fields.size() == 2 && fields[0] == "vertices") {
                out.n_vertices = static_cast<int>(parse_int(fields[1], where));
                have_header = true;
            }
            continue;
        }
        const auto fields = split_whitespace(line);
        if (fields.size() != 3) throw InputError(where + ": expected 'i<TAB>j<TAB>w'");
        out.edges.push_back({static_cast<int>(parse_int(fields[0], where)),
                             static_cast<int>(parse_int(fields[1], where)), parse_double(fields[2], where)});
    }
    if (!have_header) throw InputError(name + ": missing '#vertices N' header");
    return out;
}

inline void write_edge_list(std::ostream& out, const WeightedGraph& g) {
    out << "#vertices " << g.size() << '\n';
    for (const Edge& e : g.edges()) out << e.i << '\t' << e.j << '\t' << format_double(e.w) << '\n';
}

// ---------------------------------------------------------------- vectors

/// One real per line (vertex weights, signals).
inline Eigen::VectorXd read_values(std::istream& in, const std::string& name) {
    std::vector<double> values;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line) || line.front() == '#') continue;
        values.push_back(parse_double(line, name + ":" + std::to_string(lineno)));
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline void write_values(std::ostream& out, const Eigen::VectorXd& values) {
    for (Eigen::Index i = 0; i < values.size(); ++i) out << format_double(values[i]) << '\n';
}

// ---------------------------------------------------------------- point cloud

/// CSV, one point per row.
inline PointCloud read_point_cloud(std::istream& in, const std::string& name = "point cloud") {
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line) || line.front() == '#') continue;
        const std::string where = name + ":" + std::to_string(lineno);
        std::vector<double> row;
        for (std::string_view f : split(line, ',')) row.push_back(parse_double(f, where));
        if (!rows.empty() && row.size() != rows.front().size())
            throw InputError(where + ": inconsistent column count");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError(name + ": no points");
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) pts(i, j) = rows[i][j];
    return PointCloud(std::move(pts));
}

inline void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------- samples

/// CSV `vertex,value` per line.
inline std::vector<std::pair<int, double>> read_samples(std::istream& in, const std::string& name = "samples") {
    std::vector<std::pair<int, double>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line) || line.front() == '#') continue;
        const std::string where = name + ":" + std::to_string(lineno);
        const auto f = split(line, ',');
        if (f.size() != 2) throw InputError(where + ": expected 'vertex,value'");
        out.emplace_back(static_cast<int>(parse_int(f[0], where)), parse_double(f[1], where));
    }
    return out;
}

// ---------------------------------------------------------------- basis cache

inline constexpr char kBasisMagic[8] = {'A', 'I', 'W', 'B', 'A', 'S', 'I', 'S'};
inline constexpr std::uint32_t kBasisVersion = 1;

/// Binary eigenbasis cache: magic, version, graph hash, N, n_max, p,
/// eigenvalues, then eigenvectors column by column. Native little-endian.
inline void write_basis(std::ostream& out, const SpectralBasis& basis, std::uint64_t graph_hash) {
    const std::int64_t n = basis.vertex_count();
    const std::int64_t n_max = basis.n_max();
    out.write(kBasisMagic, sizeof kBasisMagic);
    out.write(reinterpret_cast<const char*>(&kBasisVersion), sizeof kBasisVersion);
    out.write(reinterpret_cast<const char*>(&graph_hash), sizeof graph_hash);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&n_max), sizeof n_max);
    out.write(reinterpret_cast<const char*>(&basis.p), sizeof basis.p);
    out.write(reinterpret_cast<const char*>(basis.eigenvalues.data()),
              static_cast<std::streamsize>(sizeof(double) * basis.eigenvalues.size()));
    out.write(reinterpret_cast<const char*>(basis.eigenvectors.data()),
              static_cast<std::streamsize>(sizeof(double) * basis.eigenvectors.size()));
}

struct CachedBasis {
    SpectralBasis basis;
    std::uint64_t graph_hash = 0;
};

inline CachedBasis read_basis(std::istream& in, const std::string& name = "basis cache") {
    char magic[sizeof kBasisMagic];
    std::uint32_t version = 0;
    CachedBasis out;
    std::int64_t n = 0, n_max = 0;
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kBasisMagic, sizeof magic) != 0)
        throw InputError(name + ": not an eigenbasis cache file");
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    if (!in || version != kBasisVersion)
        throw InputError(name + ": unsupported format version " + std::to_string(version));
    in.read(reinterpret_cast<char*>(&out.graph_hash), sizeof out.graph_hash);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&n_max), sizeof n_max);
    in.read(reinterpret_cast<char*>(&out.basis.p), sizeof out.basis.p);
    if (!in || n < 2 || n_max < 1 || n_max > n - 1) throw InputError(name + ": corrupt header");
    out.basis.eigenvalues.resize(n_max + 1);
    out.basis.eigenvectors.resize(n, n_max + 1);
    in.read(reinterpret_cast<char*>(out.basis.eigenvalues.data()),
            static_cast<std::streamsize>(sizeof(double) * out.basis.eigenvalues.size()));
    in.read(reinterpret_cast<char*>(out.basis.eigenvectors.data()),
            static_cast<std::streamsize>(sizeof(double) * out.basis.eigenvectors.size()));
    if (!in) throw InputError(name + ": truncated");
    return out;
}

// ---------------------------------------------------------------- tree dump

inline constexpr std::string_view kTreeHeader = "# aiw partition tree v1";

/// One `node` record per region:
///   node<TAB>id<TAB>level<TAB>parent<TAB>children<TAB>volume<TAB>vertices<TAB>neighbors
/// with comma-separated lists ("-" when empty) and neighbors as id:order.
inline void write_tree(std::ostream& out, const PartitionTree& tree) {
    auto join = [&](const auto& items, auto&& fmt) {
        if (items.empty()) {
            out << '-';
            return;
        }
        bool first = true;
        for (const auto& x : items) {
            if (!first) out << ',';
            first = false;
            fmt(x);
        }
    };
    out << kTreeHeader << '\n';
    out << "vertices\t" << tree.vertex_count() << '\n';
    out << "levels\t" << tree.max_level() << '\n';
    for (std::size_t l = 0; l < tree.level_volume_avg.size(); ++l)
        out << "volav\t" << l << '\t' << format_double(tree.level_volume_avg[l]) << '\n';
    for (const RegionNode& n : tree.nodes) {
        out << "node\t" << n.id << '\t' << n.level << '\t' << n.parent << '\t';
        join(n.children, [&](int c) { out << c; });
        out << '\t' << format_double(n.volume) << '\t';
        join(n.vertices, [&](int v) { out << v; });
        out << '\t';
        join(n.neighbors, [&](const NeighborRef& nb) { out << nb.region << ':' << nb.order; });
        out << '\n';
    }
}

inline PartitionTree read_tree(std::istream& in, const std::string& name = "tree") {
    std::string line;
    if (!std::getline(in, line) || line != kTreeHeader) throw InputError(name + ": not a partition tree dump");
    PartitionTree tree;
    int n_vertices = -1, l_max = -1;
    int lineno = 1;
    auto int_list = [&](std::string_view text, const std::string& where) {
        std::vector<int> out;
        if (text == "-") return out;
        for (std::string_view f : split(text, ',')) out.push_back(static_cast<int>(parse_int(f, where)));
        return out;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        const std::string where = name + ":" + std::to_string(lineno);
        const auto f = split(line, '\t');
        if (f[0] == "vertices" && f.size() == 2) {
            n_vertices = static_cast<int>(parse_int(f[1], where));
        } else if (f[0] == "levels" && f.size() == 2) {
            l_max = static_cast<int>(parse_int(f[1], where));
            if (l_max < 1) throw InputError(where + ": bad level count");
            tree.levels.assign(static_cast<std::size_t>(l_max + 1), {});
            tree.level_volume_avg.assign(static_cast<std::size_t>(l_max + 1), 0.0);
        } else if (f[0] == "volav" && f.size() == 3) {
            const auto l = parse_int(f[1], where);
            if (l < 0 || l > l_max) throw InputError(where + ": level out of range");
            tree.level_volume_avg[static_cast<std::size_t>(l)] = parse_double(f[2], where);
        } else if (f[0] == "node" && f.size() == 8) {
            RegionNode n;
            n.id = static_cast<int>(parse_int(f[1], where));
            n.level = static_cast<int>(parse_int(f[2], where));
            n.parent = static_cast<int>(parse_int(f[3], where));
            n.children = int_list(f[4], where);
            n.volume = parse_double(f[5], where);
            n.vertices = int_list(f[6], where);
            if (f[7] != "-")
                for (std::string_view item : split(f[7], ',')) {
                    const auto colon = item.find(':');
                    if (colon == std::string_view::npos) throw InputError(where + ": bad neighbor '" + std::string(item) + "'");
                    n.neighbors.push_back({static_cast<int>(parse_int(item.substr(0, colon), where)),
                                           static_cast<int>(parse_int(item.substr(colon + 1), where))});
                }
            if (n.id != static_cast<int>(tree.nodes.size())) throw InputError(where + ": node ids must be sequential");
            if (n.level < 0 || n.level > l_max) throw InputError(where + ": level out of range");
            tree.levels[static_cast<std::size_t>(n.level)].push_back(n.id);
            tree.nodes.push_back(std::move(n));
        } else {
            throw InputError(where + ": unrecognized record");
        }
    }
    if (tree.nodes.empty() || n_vertices < 1) throw InputError(name + ": no nodes");
    if (static_cast<int>(tree.nodes.front().vertices.size()) != n_vertices)
        throw InputError(name + ": root does not cover all vertices");
    for (const RegionNode& n : tree.nodes) {
        for (int c : n.children)
            if (c <= n.id || c >= static_cast<int>(tree.nodes.size()) || tree.nodes[c].parent != n.id)
                throw InputError(name + ": inconsistent children of node " + std::to_string(n.id));
        for (const NeighborRef& nb : n.neighbors)
            if (nb.region < 0 || nb.region >= static_cast<int>(tree.nodes.size()) ||
                tree.nodes[nb.region].level != n.level)
                throw InputError(name + ": bad neighbor of node " + std::to_string(n.id));
    }
    for (const auto& ids : tree.levels) {
        if (ids.empty()) throw InputError(name + ": empty level");
        for (std::size_t k = 1; k < ids.size(); ++k)
            if (ids[k] != ids[k - 1] + 1) throw InputError(name + ": node ids are not contiguous within a level");
    }
    return tree;
}

// ---------------------------------------------------------------- pyramid

inline constexpr std::string_view kPyramidHeader = "# aiw wavelet pyramid v1";

struct PyramidHeader {
    std::string graph_hash;
    std::string tree_hash;
    int moments = 0;
    double ridge = 0.0;
};

inline void write_pyramid(std::ostream& out, const WaveletPyramid& pyr, const PyramidHeader& header) {
    out << kPyramidHeader << '\n';
    out << "graph_hash\t" << header.graph_hash << '\n';
    out << "tree_hash\t" << header.tree_hash << '\n';
    out << "moments\t" << header.moments << '\n';
    out << "ridge\t" << format_double(header.ridge) << '\n';
    out << "root\t" << format_double(pyr.root_beta) << '\n';
    for (std::size_t id = 1; id < pyr.alpha.size(); ++id) out << id << '\t' << format_double(pyr.alpha[id]) << '\n';
}

inline std::pair<WaveletPyramid, PyramidHeader> read_pyramid(std::istream& in, const std::string& name = "pyramid") {
    std::string line;
    if (!std::getline(in, line) || line != kPyramidHeader) throw InputError(name + ": not a wavelet pyramid file");
    WaveletPyramid pyr;
    PyramidHeader header;
    bool have_root = false;
    std::vector<std::pair<long long, double>> entries;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        const std::string where = name + ":" + std::to_string(lineno);
        const auto f = split(line, '\t');
        if (f.size() != 2) throw InputError(where + ": expected two tab-separated fields");
        if (f[0] == "graph_hash") header.graph_hash = std::string(f[1]);
        else if (f[0] == "tree_hash") header.tree_hash = std::string(f[1]);
        else if (f[0] == "moments") header.moments = static_cast<int>(parse_int(f[1], where));
        else if (f[0] == "ridge") header.ridge = parse_double(f[1], where);
        else if (f[0] == "root") {
            pyr.root_beta = parse_double(f[1], where);
            have_root = true;
        } else {
            entries.emplace_back(parse_int(f[0], where), parse_double(f[1], where));
        }
    }
    if (!have_root) throw InputError(name + ": missing root average");
    pyr.alpha.assign(entries.size() + 1, 0.0);
    std::vector<char> seen(entries.size() + 1, 0);
    for (const auto& [id, a] : entries) {
        if (id < 1 || id > static_cast<long long>(entries.size()) || seen[id])
            throw InputError(name + ": bad or duplicate node id " + std::to_string(id));
        seen[id] = 1;
        pyr.alpha[id] = a;
    }
    return {std::move(pyr), std::move(header)};
}

}  // namespace aiw::io
