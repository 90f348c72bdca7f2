// aiw: command-line front end for the average-interpolating wavelet library.
//
// A graph bundle is a path prefix P with
//   P.edges     edge list (#vertices N header, i<TAB>j<TAB>w)
//   P.vweights  one vertex weight per line
//   P.basis     binary eigenbasis cache (written by `laplacian`)
//   P.coords    vertex coordinates, CSV (optional; used by `scaling`)
// Every command writes OUT.manifest next to its main output (P.synth.manifest
// and P.basis.manifest for the bundle-producing commands).

#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aiw/aiw.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kInput = 2, kNumerical = 3, kInternal = 4 };

// Outputs are written to temporaries and renamed only after the whole
// command succeeded, so a failed run leaves nothing behind.
class Outputs {
public:
    ~Outputs() {
        if (!committed_)
            for (const auto& [path, tmp] : staged_) {
                std::error_code ec;
                fs::remove(tmp, ec);
            }
    }

    std::ofstream& open(const std::string& path, bool binary = false) {
        const std::string tmp = path + ".tmp";
        staged_.emplace_back(path, tmp);
        auto& s = streams_.emplace_back(std::make_unique<std::ofstream>(
            tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc));
        if (!*s) throw aiw::InputError("cannot write '" + path + "'");
        return *s;
    }

    void commit() {
        for (auto& s : streams_) {
            s->close();
            if (!*s) throw aiw::InputError("write failed");
        }
        for (const auto& [path, tmp] : staged_) fs::rename(tmp, path);
        committed_ = true;
    }

    std::vector<std::string> paths() const {
        std::vector<std::string> out;
        for (const auto& [path, tmp] : staged_) out.push_back(path);
        return out;
    }

private:
    std::vector<std::pair<std::string, std::string>> staged_;
    std::vector<std::unique_ptr<std::ofstream>> streams_;
    bool committed_ = false;
};

struct Config {
    std::string command;
    // inputs
    std::string graph;
    std::string edges;
    std::string points;
    std::string vertex_weights = "auto";
    std::string tree;
    std::string signal;
    std::string pyramid;
    std::string samples;
    std::string kind;
    // parameters
    std::string p = "2";
    std::string n_eigs = "auto";
    std::string levels = "auto";
    int neighbor_order = 1;
    double cut_fraction = 0.125;
    int moments = 0;
    std::uint64_t seed = 0;
    int k = aiw::kDefaultNeighbors;
    double ridge = 0.0;
    int n = 512;
    int node = -1;
    std::string cutoff = "auto";
    std::optional<double> threshold;
    std::string out;
};

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw aiw::InputError("cannot open '" + path + "'");
    return in;
}

int parse_auto_int(const std::string& text, const std::string& flag) {
    return static_cast<int>(aiw::io::parse_int(text, "--" + flag));
}

// ------------------------------------------------------------ graph bundle

struct Bundle {
    std::optional<aiw::WeightedGraph> graph;
    std::optional<aiw::SpectralBasis> basis;
    std::optional<Eigen::MatrixXd> coords;
};

aiw::WeightedGraph load_graph(const std::string& prefix) {
    auto in = open_input(prefix + ".edges");
    const aiw::io::EdgeList list = aiw::io::read_edge_list(in, prefix + ".edges");
    auto win = open_input(prefix + ".vweights");
    const Eigen::VectorXd w = aiw::io::read_values(win, prefix + ".vweights");
    if (w.size() != list.n_vertices)
        throw aiw::InputError(prefix + ".vweights: expected " + std::to_string(list.n_vertices) + " values");
    const std::vector<double> wv(w.data(), w.data() + w.size());
    return aiw::WeightedGraph::from_edges(list.n_vertices, list.edges, aiw::VertexWeightMode::explicit_weights, wv);
}

Bundle load_bundle(const std::string& prefix) {
    Bundle b;
    b.graph = load_graph(prefix);
    std::ifstream in(prefix + ".basis", std::ios::binary);
    if (!in) throw aiw::InputError("missing eigenbasis cache '" + prefix + ".basis'; run `aiw laplacian` first");
    aiw::io::CachedBasis cached = aiw::io::read_basis(in, prefix + ".basis");
    if (cached.graph_hash != aiw::io::graph_hash(*b.graph) || cached.basis.vertex_count() != b.graph->size())
        throw aiw::InputError(prefix + ".basis: stale cache (graph hash mismatch)");
    b.basis = std::move(cached.basis);
    if (fs::exists(prefix + ".coords")) {
        auto cin = open_input(prefix + ".coords");
        b.coords = aiw::io::read_point_cloud(cin, prefix + ".coords").points();
    }
    return b;
}

void write_bundle_graph(Outputs& outs, const std::string& prefix, const aiw::WeightedGraph& g) {
    aiw::io::write_edge_list(outs.open(prefix + ".edges"), g);
    aiw::io::write_values(outs.open(prefix + ".vweights"), g.vertex_weights());
}

aiw::PartitionTree load_tree(const std::string& path, const aiw::WeightedGraph& g) {
    auto in = open_input(path);
    aiw::PartitionTree tree = aiw::io::read_tree(in, path);
    if (tree.vertex_count() != g.size()) throw aiw::InputError(path + ": tree does not match the graph");
    return tree;
}

aiw::Embedding interpolation_kernel(const aiw::SpectralBasis& basis, int moments) {
    if (moments < 0) throw aiw::InputError("--moments must be >= 0");
    return moments == 0 ? aiw::embed(basis) : aiw::higher_moment_kernel(basis, moments);
}

aiw::GraphSignal load_signal(const std::string& path, const aiw::WeightedGraph& g) {
    auto in = open_input(path);
    aiw::GraphSignal f = aiw::io::read_values(in, path);
    aiw::check_signal(g, f);
    return f;
}

// ---------------------------------------------------------------- manifest

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

void write_manifest(Outputs& outs, const std::string& out, const Config& c,
                    const std::map<std::string, std::string>& extra) {
    std::ostream& m = outs.open(out + ".manifest");
    m << "command=" << c.command << '\n';
    const std::vector<std::pair<std::string, std::string>> inputs = {
        {"graph", c.graph},   {"edges", c.edges},     {"points", c.points},   {"tree", c.tree},
        {"signal", c.signal}, {"pyramid", c.pyramid}, {"samples", c.samples},
    };
    for (const auto& [key, path] : inputs) {
        if (path.empty()) continue;
        m << key << '=' << path << '\n';
        if (key == "graph") {
            for (const char* ext : {".edges", ".vweights", ".basis"})
                if (fs::exists(path + ext))
                    m << key << ext << "_hash=" << aiw::io::hex(aiw::io::file_hash(path + ext)) << '\n';
        } else {
            m << key << "_hash=" << aiw::io::hex(aiw::io::file_hash(path)) << '\n';
        }
    }
    m << "kind=" << c.kind << '\n'
      << "n=" << c.n << '\n'
      << "vertex_weights=" << c.vertex_weights << '\n'
      << "p=" << c.p << '\n'
      << "n_eigs=" << c.n_eigs << '\n'
      << "levels=" << c.levels << '\n'
      << "neighbor_order=" << c.neighbor_order << '\n'
      << "cut_fraction=" << aiw::io::format_double(c.cut_fraction) << '\n'
      << "moments=" << c.moments << '\n'
      << "seed=" << c.seed << '\n'
      << "k=" << c.k << '\n'
      << "ridge=" << aiw::io::format_double(c.ridge) << '\n'
      << "node=" << c.node << '\n'
      << "cutoff=" << c.cutoff << '\n'
      << "threshold=" << (c.threshold ? aiw::io::format_double(*c.threshold) : std::string("none")) << '\n';
    for (const auto& [key, value] : extra) m << key << '=' << value << '\n';
    m << "output=" << out << '\n';
    m << "timestamp=" << timestamp() << '\n';
}

// ---------------------------------------------------------------- commands

aiw::SpectralBasis make_basis(const aiw::WeightedGraph& g, const Config& c, std::map<std::string, std::string>& extra) {
    const int n_eigs = c.n_eigs == "auto" ? aiw::default_n_eigs(g.size()) : parse_auto_int(c.n_eigs, "n-eigs");
    aiw::SpectralBasis basis = aiw::compute_basis(g, n_eigs);
    if (c.p == "auto") aiw::choose_p(basis);
    else aiw::choose_p(basis, aiw::io::parse_double(c.p, "--p"));
    extra["resolved_n_eigs"] = std::to_string(basis.n_max());
    extra["resolved_p"] = aiw::io::format_double(basis.p);
    return basis;
}

void run_synth(const Config& c, Outputs& outs) {
    const aiw::SynthResult data = aiw::synth(aiw::parse_synth_kind(c.kind), c.n, c.seed);
    const aiw::WeightedGraph g = data.graph ? *data.graph : aiw::point_cloud_graph(*data.cloud, c.k);
    write_bundle_graph(outs, c.out, g);
    aiw::io::write_values(outs.open(c.out + ".signal"), data.signal);
    aiw::io::write_matrix_csv(outs.open(c.out + ".coords"), data.cloud ? data.cloud->points() : data.intrinsic);
    aiw::io::write_matrix_csv(outs.open(c.out + ".intrinsic"), data.intrinsic);
    if (data.cloud) aiw::io::write_matrix_csv(outs.open(c.out + ".points"), data.cloud->points());
    write_manifest(outs, c.out + ".synth", c, {{"graph_hash", aiw::io::hex(aiw::io::graph_hash(g))}});
}

void run_laplacian(const Config& c, Outputs& outs) {
    std::map<std::string, std::string> extra;
    std::optional<aiw::WeightedGraph> g;
    if (!c.graph.empty()) {
        g = load_graph(c.graph);
    } else if (!c.edges.empty()) {
        auto in = open_input(c.edges);
        const aiw::io::EdgeList list = aiw::io::read_edge_list(in, c.edges);
        if (c.vertex_weights == "auto" || c.vertex_weights == "unit") {
            g = aiw::WeightedGraph::from_edges(list.n_vertices, list.edges, aiw::VertexWeightMode::unit);
        } else if (c.vertex_weights == "degree") {
            g = aiw::WeightedGraph::from_edges(list.n_vertices, list.edges, aiw::VertexWeightMode::degree);
        } else {
            auto win = open_input(c.vertex_weights);
            const Eigen::VectorXd w = aiw::io::read_values(win, c.vertex_weights);
            const std::vector<double> wv(w.data(), w.data() + w.size());
            g = aiw::WeightedGraph::from_edges(list.n_vertices, list.edges, aiw::VertexWeightMode::explicit_weights,
                                               wv);
        }
    } else if (!c.points.empty()) {
        auto in = open_input(c.points);
        const aiw::PointCloud cloud = aiw::io::read_point_cloud(in, c.points);
        g = aiw::point_cloud_graph(cloud, c.k);
        aiw::io::write_matrix_csv(outs.open(c.out + ".coords"), cloud.points());
    } else {
        throw aiw::InputError("laplacian needs one of --graph, --edges, --points");
    }
    const aiw::SpectralBasis basis = make_basis(*g, c, extra);
    const std::uint64_t h = aiw::io::graph_hash(*g);
    if (c.graph.empty() || c.graph != c.out) write_bundle_graph(outs, c.out, *g);
    aiw::io::write_basis(outs.open(c.out + ".basis", true), basis, h);
    extra["graph_hash"] = aiw::io::hex(h);
    extra["dimension_estimate"] = basis.n_max() >= 4 ? aiw::io::format_double(aiw::estimate_dimension(basis)) : "n/a";
    write_manifest(outs, c.out + ".basis", c, extra);
}

void run_partition(const Config& c, Outputs& outs) {
    const Bundle b = load_bundle(c.graph);
    aiw::TreeOptions opts;
    opts.seed = c.seed;
    if (c.levels != "auto") opts.max_level = parse_auto_int(c.levels, "levels");
    aiw::PartitionTree tree = aiw::build_tree(*b.graph, aiw::embed(*b.basis), opts);
    aiw::compute_neighbors(tree, *b.graph, c.neighbor_order, c.cut_fraction);
    aiw::io::write_tree(outs.open(c.out), tree);
    write_manifest(outs, c.out, c,
                   {{"tree_hash", aiw::io::hex(aiw::io::tree_hash(tree))},
                    {"max_level", std::to_string(tree.max_level())}});
}

struct Pipeline {
    Bundle bundle;
    aiw::PartitionTree tree;
    aiw::Embedding kernel;
    aiw::TransformOptions options;
};

Pipeline load_pipeline(const Config& c, int moments) {
    Pipeline p;
    p.bundle = load_bundle(c.graph);
    p.tree = load_tree(c.tree, *p.bundle.graph);
    p.kernel = interpolation_kernel(*p.bundle.basis, moments);
    p.options.ridge = c.ridge;
    return p;
}

aiw::io::PyramidHeader pyramid_header(const Pipeline& p, int moments, double ridge) {
    return {aiw::io::hex(aiw::io::graph_hash(*p.bundle.graph)), aiw::io::hex(aiw::io::tree_hash(p.tree)), moments,
            ridge};
}

void run_forward(const Config& c, Outputs& outs) {
    const Pipeline p = load_pipeline(c, c.moments);
    const aiw::GraphSignal f = load_signal(c.signal, *p.bundle.graph);
    const aiw::WaveletPyramid pyr = aiw::forward(f, p.tree, *p.bundle.graph, p.kernel, p.options);
    aiw::io::write_pyramid(outs.open(c.out), pyr, pyramid_header(p, c.moments, c.ridge));
    write_manifest(outs, c.out, c, {});
}

void run_inverse(const Config& c, Outputs& outs) {
    auto in = open_input(c.pyramid);
    const auto [pyr, header] = aiw::io::read_pyramid(in, c.pyramid);
    Config resolved = c;
    resolved.moments = header.moments;
    resolved.ridge = header.ridge;
    const Pipeline p = load_pipeline(resolved, header.moments);
    const aiw::io::PyramidHeader expect = pyramid_header(p, header.moments, header.ridge);
    if (header.graph_hash != expect.graph_hash) throw aiw::InputError(c.pyramid + ": pyramid was built on another graph");
    if (header.tree_hash != expect.tree_hash) throw aiw::InputError(c.pyramid + ": pyramid was built on another tree");
    if (pyr.alpha.size() != p.tree.nodes.size())
        throw aiw::InputError(c.pyramid + ": coefficient count does not match the tree");
    const aiw::GraphSignal f = aiw::inverse(pyr, p.tree, *p.bundle.graph, p.kernel, p.options);
    aiw::io::write_values(outs.open(c.out), f);
    write_manifest(outs, c.out, resolved, {});
}

void run_scaling(const Config& c, Outputs& outs) {
    const Pipeline p = load_pipeline(c, c.moments);
    aiw::GraphSignal f = aiw::scaling_function(p.tree, c.node, *p.bundle.graph, p.kernel, p.options);
    const double peak = f.cwiseAbs().maxCoeff();
    if (peak > 0.0) f /= peak;
    const aiw::RegionNode& target = p.tree.node(c.node);
    std::vector<char> inside(static_cast<std::size_t>(f.size()), 0);
    for (int v : target.vertices) inside[v] = 1;

    std::ostream& out = outs.open(c.out);
    const Eigen::Index dims = p.bundle.coords ? p.bundle.coords->cols() : 0;
    out << "vertex";
    for (Eigen::Index d = 0; d < dims; ++d) out << ",x" << d;
    out << ",value,in_region\n";
    for (Eigen::Index i = 0; i < f.size(); ++i) {
        out << i;
        for (Eigen::Index d = 0; d < dims; ++d) out << ',' << aiw::io::format_double((*p.bundle.coords)(i, d));
        out << ',' << aiw::io::format_double(f[i]) << ',' << int(inside[i]) << '\n';
    }
    write_manifest(outs, c.out, c,
                   {{"node_level", std::to_string(target.level)}, {"peak", aiw::io::format_double(peak)}});
}

void run_denoise(const Config& c, Outputs& outs) {
    const Pipeline p = load_pipeline(c, c.moments);
    const aiw::GraphSignal f = load_signal(c.signal, *p.bundle.graph);
    aiw::GraphSignal g;
    std::map<std::string, std::string> extra;
    if (c.threshold) {
        g = aiw::denoise_threshold(f, p.tree, *p.bundle.graph, p.kernel, *c.threshold, p.options);
    } else {
        const int cutoff = c.cutoff == "auto" ? aiw::default_cutoff_level(p.tree) : parse_auto_int(c.cutoff, "cutoff");
        extra["resolved_cutoff"] = std::to_string(cutoff);
        g = aiw::denoise(f, p.tree, *p.bundle.graph, p.kernel, cutoff, p.options);
    }
    aiw::io::write_values(outs.open(c.out), g);
    write_manifest(outs, c.out, c, extra);
}

void run_regress(const Config& c, Outputs& outs) {
    const Pipeline p = load_pipeline(c, c.moments);
    auto in = open_input(c.samples);
    aiw::SampleSet set{aiw::io::read_samples(in, c.samples)};
    const aiw::GraphSignal g = aiw::regress(set, p.tree, *p.bundle.graph, p.kernel, p.options);
    aiw::io::write_values(outs.open(c.out), g);
    write_manifest(outs, c.out, c, {{"sample_count", std::to_string(set.samples.size())}});
}

void fail(int code, const char* kind, const std::string& message) {
    std::string flat = message;
    for (char& ch : flat)
        if (ch == '\n') ch = ' ';
    std::cerr << "aiw: error code=" << code << " kind=" << kind << " message=\"" << flat << "\"\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Average-interpolating wavelets on graphs and point clouds"};
    app.require_subcommand(1);
    Config c;

    auto add_tree_flags = [&](CLI::App* s) {
        s->add_option("--graph", c.graph, "Graph bundle prefix")->required();
        s->add_option("--tree", c.tree, "Partition tree file")->required();
        s->add_option("--moments", c.moments, "Extra vanishing moments beyond constants")->capture_default_str();
        s->add_option("--ridge", c.ridge, "Ridge regularization of the kernel block")->capture_default_str();
        s->add_option("--out", c.out, "Output file")->required();
    };

    auto* synth = app.add_subcommand("synth", "Generate a benchmark dataset as a graph bundle");
    synth->add_option("kind", c.kind, "interval | swiss_roll | sphere | s_manifold | planar_bulbs")->required();
    synth->add_option("--n", c.n, "Number of vertices or points")->capture_default_str();
    synth->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    synth->add_option("--k", c.k, "Nearest neighbors for point clouds")->capture_default_str();
    synth->add_option("--out", c.out, "Output prefix")->required();

    auto* lap = app.add_subcommand("laplacian", "Build a graph and cache its eigenbasis");
    lap->add_option("--graph", c.graph, "Existing graph bundle prefix");
    lap->add_option("--edges", c.edges, "Edge list file");
    lap->add_option("--points", c.points, "Point cloud CSV");
    lap->add_option("--vertex-weights", c.vertex_weights, "unit | degree | FILE (edge-list input)")
        ->capture_default_str();
    lap->add_option("--k", c.k, "Nearest neighbors for point clouds")->capture_default_str();
    lap->add_option("--n-eigs", c.n_eigs, "Number of nonzero eigenpairs or 'auto'")->capture_default_str();
    lap->add_option("--p", c.p, "Kernel exponent or 'auto'")->capture_default_str();
    lap->add_option("--out", c.out, "Output bundle prefix")->required();

    auto* part = app.add_subcommand("partition", "Build the partition tree and neighbor lists");
    part->add_option("--graph", c.graph, "Graph bundle prefix")->required();
    part->add_option("--levels", c.levels, "Leaf level or 'auto'")->capture_default_str();
    part->add_option("--neighbor-order", c.neighbor_order, "Neighborhood order")->capture_default_str();
    part->add_option("--cut-fraction", c.cut_fraction, "Neighbor cut threshold")->capture_default_str();
    part->add_option("--seed", c.seed, "Seed for 2-means")->capture_default_str();
    part->add_option("--out", c.out, "Output tree file")->required();

    auto* fwd = app.add_subcommand("forward", "Signal to wavelet pyramid");
    add_tree_flags(fwd);
    fwd->add_option("--signal", c.signal, "Signal file")->required();

    auto* inv = app.add_subcommand("inverse", "Wavelet pyramid to signal");
    inv->add_option("--graph", c.graph, "Graph bundle prefix")->required();
    inv->add_option("--tree", c.tree, "Partition tree file")->required();
    inv->add_option("--pyramid", c.pyramid, "Pyramid file")->required();
    inv->add_option("--out", c.out, "Output signal file")->required();

    auto* scal = app.add_subcommand("scaling", "Scaling function of one node as plot-ready CSV");
    add_tree_flags(scal);
    scal->add_option("--node", c.node, "Node id")->required();

    auto* den = app.add_subcommand("denoise", "Level-truncation (or threshold) denoising");
    add_tree_flags(den);
    den->add_option("--signal", c.signal, "Noisy signal file")->required();
    den->add_option("--cutoff", c.cutoff, "First parent level to zero, or 'auto'")->capture_default_str();
    den->add_option("--threshold", c.threshold, "Hard threshold on |alpha| instead of a level cutoff");

    auto* reg = app.add_subcommand("regress", "Reconstruct a signal from sparse samples");
    add_tree_flags(reg);
    reg->add_option("--samples", c.samples, "CSV of vertex,value")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail(kInput, "usage", e.what());
        return kInput;
    }
    c.command = app.get_subcommands().front()->get_name();

    try {
        Outputs outs;
        if (c.command == "synth") run_synth(c, outs);
        else if (c.command == "laplacian") run_laplacian(c, outs);
        else if (c.command == "partition") run_partition(c, outs);
        else if (c.command == "forward") run_forward(c, outs);
        else if (c.command == "inverse") run_inverse(c, outs);
        else if (c.command == "scaling") run_scaling(c, outs);
        else if (c.command == "denoise") run_denoise(c, outs);
        else if (c.command == "regress") run_regress(c, outs);
        outs.commit();
        for (const std::string& path : outs.paths()) std::cout << path << '\n';
        return kOk;
    } catch (const aiw::InputError& e) {
        fail(kInput, "input", e.what());
        return kInput;
    } catch (const aiw::NumericalError& e) {
        fail(kNumerical, "numerical", e.what());
        return kNumerical;
    } catch (const std::exception& e) {
        fail(kInternal, "internal", e.what());
        return kInternal;
    }
}
