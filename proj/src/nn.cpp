#include "fxarb/nn.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "fxarb/rng.hpp"

namespace fxarb {

namespace {
constexpr double kStdFloor = 1e-8;

Mat col_std(const Mat& x, const Mat& mean) {
    if (x.rows() < 1) return Mat::Ones(1, x.cols());
    Mat centered = x.rowwise() - mean.row(0);
    Mat var = centered.array().square().colwise().sum() / std::max<double>(1.0, x.rows() - 1);
    return var.array().sqrt();
}
}  // namespace

FeatureScaler FeatureScaler::fit(const Mat& node_feats, const Mat& edge_feats) {
    FeatureScaler s;
    s.node_mean = node_feats.rows() > 0 ? Mat(node_feats.colwise().mean())
                                        : Mat(Mat::Zero(1, node_feats.cols()));
    s.edge_mean = edge_feats.rows() > 0 ? Mat(edge_feats.colwise().mean())
                                        : Mat(Mat::Zero(1, edge_feats.cols()));
    s.node_std = col_std(node_feats, s.node_mean);
    s.edge_std = col_std(edge_feats, s.edge_mean);
    for (Mat* m : {&s.node_std, &s.edge_std}) {
        for (Eigen::Index c = 0; c < m->cols(); ++c) {
            if ((*m)(0, c) < kStdFloor) {
                (*m)(0, c) = kStdFloor;
                ++s.floored_columns;
            }
        }
    }
    return s;
}

Mat FeatureScaler::scale_nodes(const Mat& x) const {
    if (x.cols() != node_mean.cols()) throw std::invalid_argument("node feature width mismatch");
    return (x.rowwise() - node_mean.row(0)).array().rowwise() / node_std.row(0).array();
}
Mat FeatureScaler::scale_edges(const Mat& x) const {
    if (x.cols() != edge_mean.cols()) throw std::invalid_argument("edge feature width mismatch");
    return (x.rowwise() - edge_mean.row(0)).array().rowwise() / edge_std.row(0).array();
}
Mat FeatureScaler::unscale_nodes(const Mat& x) const {
    return (x.array().rowwise() * node_std.row(0).array()).matrix().rowwise() + node_mean.row(0);
}
Mat FeatureScaler::unscale_edges(const Mat& x) const {
    return (x.array().rowwise() * edge_std.row(0).array()).matrix().rowwise() + edge_mean.row(0);
}

std::vector<Mat*> GnnParams::tensors() {
    std::vector<Mat*> out;
    for (auto& s : node_convs) {
        out.push_back(&s.W);
        out.push_back(&s.b);
    }
    for (auto& s : edge_convs) {
        out.push_back(&s.W);
        out.push_back(&s.b);
    }
    out.push_back(&head.W);
    out.push_back(&head.b);
    return out;
}

std::vector<const Mat*> GnnParams::tensors() const {
    auto mut = const_cast<GnnParams*>(this)->tensors();
    return {mut.begin(), mut.end()};
}

GnnParams GnnParams::init(int node_dim, int edge_dim, int hidden, int layers, GnnOutput mode,
                          std::uint64_t seed) {
    if (layers < 1) throw std::invalid_argument("need at least one conv layer");
    if (hidden < 1) throw std::invalid_argument("hidden width must be positive");
    GnnParams p;
    p.layers = layers;
    p.hidden = hidden;
    p.mode = mode;
    GaussianRng rng(seed);
    auto make = [&](int out, int in) {
        Slp s;
        s.W.resize(out, in);
        double a = std::sqrt(6.0 / (in + out));
        for (Eigen::Index r = 0; r < s.W.rows(); ++r)
            for (Eigen::Index c = 0; c < s.W.cols(); ++c)
                s.W(r, c) = a * (2.0 * rng.uniform() - 1.0);
        s.b = Mat::Zero(1, out);
        return s;
    };
    for (int l = 1; l <= layers; ++l) {
        int node_in = l == 1 ? 2 * node_dim + edge_dim : 3 * hidden;
        int edge_in = l == 1 ? 2 * hidden + edge_dim : 3 * hidden;
        p.node_convs.push_back(make(hidden, node_in));
        p.edge_convs.push_back(make(hidden, edge_in));
    }
    p.head = make(1, hidden);
    if (mode == GnnOutput::edge) {
        // start at the zero map: untrained edge outputs equal the random-walk
        // baseline, and best-validation tracking only keeps real improvements
        p.head.W.setZero();
    }
    // identity scaler until fitted
    p.scaler.node_mean = Mat::Zero(1, node_dim);
    p.scaler.node_std = Mat::Ones(1, node_dim);
    p.scaler.edge_mean = Mat::Zero(1, edge_dim);
    p.scaler.edge_std = Mat::Ones(1, edge_dim);
    return p;
}

GnnForward gnn_forward(Tape& t, const GnnParams& p, const GnnGraph& g) {
    if (static_cast<int>(g.src.size()) != g.n_edges() ||
        static_cast<int>(g.dst.size()) != g.n_edges())
        throw std::invalid_argument("edge index arrays must match edge count");

    GnnForward fw;
    std::vector<Tape::Ref> refs;
    auto reg = [&](const Mat& m) {
        Tape::Ref r = t.param(m);
        refs.push_back(r);
        return r;
    };
    std::vector<std::pair<Tape::Ref, Tape::Ref>> node_slp, edge_slp;
    for (int l = 0; l < p.layers; ++l) {
        Tape::Ref w = reg(p.node_convs[static_cast<size_t>(l)].W);
        Tape::Ref b = reg(p.node_convs[static_cast<size_t>(l)].b);
        node_slp.emplace_back(w, b);
    }
    for (int l = 0; l < p.layers; ++l) {
        Tape::Ref w = reg(p.edge_convs[static_cast<size_t>(l)].W);
        Tape::Ref b = reg(p.edge_convs[static_cast<size_t>(l)].b);
        edge_slp.emplace_back(w, b);
    }
    Tape::Ref head_w = reg(p.head.W);
    Tape::Ref head_b = reg(p.head.b);
    fw.param_refs = refs;

    Tape::Ref nodes = t.constant(p.scaler.scale_nodes(g.node_feats));
    Tape::Ref edges = t.constant(p.scaler.scale_edges(g.edge_feats));

    auto slp_apply = [&](Tape::Ref x, Tape::Ref W, Tape::Ref b, bool activation) {
        Tape::Ref lin = t.add_rowvec(t.matmul_nt(x, W), b);
        return activation ? t.leaky_relu(lin, p.leaky_slope) : lin;
    };

    for (int l = 0; l < p.layers; ++l) {
        // node conv: mean over in-edges (j -> i) of SLP([n_i ; e_ji ; n_j])
        Tape::Ref msg_in = t.concat_cols(
            {t.gather_rows(nodes, g.dst), edges, t.gather_rows(nodes, g.src)});
        Tape::Ref msg =
            slp_apply(msg_in, node_slp[static_cast<size_t>(l)].first,
                      node_slp[static_cast<size_t>(l)].second, true);
        Tape::Ref new_nodes = t.scatter_mean_rows(msg, g.dst, g.n_nodes());
        nodes = new_nodes;
        // edge conv: e_ij from [n_i ; e_ij ; n_j] with i = src, j = dst.
        // In node-output mode the final edge embedding feeds nothing; skip it.
        if (p.mode == GnnOutput::edge || l + 1 < p.layers) {
            Tape::Ref edge_in = t.concat_cols(
                {t.gather_rows(new_nodes, g.src), edges, t.gather_rows(new_nodes, g.dst)});
            edges = slp_apply(edge_in, edge_slp[static_cast<size_t>(l)].first,
                              edge_slp[static_cast<size_t>(l)].second, true);
        }
    }

    Tape::Ref base = p.mode == GnnOutput::edge ? edges : nodes;
    fw.output = slp_apply(base, head_w, head_b, false);
    return fw;
}

Eigen::VectorXd gnn_eval(const GnnParams& p, const GnnGraph& g) {
    Tape t;
    GnnForward fw = gnn_forward(t, p, g);
    return t.val(fw.output).col(0);
}

long gnn_param_count(int hidden, int layers, int node_dim, int edge_dim) {
    const long h = hidden;
    long total = 0;
    for (int l = 1; l <= layers; ++l) {
        long node_in = l == 1 ? 2L * node_dim + edge_dim : 3L * h;
        long edge_in = l == 1 ? 2L * h + edge_dim : 3L * h;
        total += h * node_in + h;  // node conv W + b
        total += h * edge_in + h;  // edge conv W + b
    }
    total += h + 1;  // head
    return total;
}

int width_for_budget(long param_budget, int layers, int node_dim, int edge_dim) {
    if (gnn_param_count(1, layers, node_dim, edge_dim) > param_budget)
        throw std::invalid_argument("parameter budget below minimal network size");
    int h = 1;
    while (gnn_param_count(h + 1, layers, node_dim, edge_dim) <= param_budget) ++h;
    return h;
}

// ------------------------------------------------------------
// Optimizer
// ------------------------------------------------------------

void AdamState::init_like(const std::vector<Mat*>& params) {
    m.clear();
    v.clear();
    for (const Mat* p : params) {
        m.emplace_back(Mat::Zero(p->rows(), p->cols()));
        v.emplace_back(Mat::Zero(p->rows(), p->cols()));
    }
    step_count = 0;
    rejected_steps = 0;
}

bool AdamState::step(std::vector<Mat*>& params, const std::vector<Mat>& grads) {
    if (params.size() != grads.size() || params.size() != m.size())
        throw std::invalid_argument("optimizer state/parameter shape mismatch");
    for (size_t k = 0; k < grads.size(); ++k) {
        if (!grads[k].allFinite()) {
            ++rejected_steps;
            return false;
        }
        if (grads[k].rows() != params[k]->rows() || grads[k].cols() != params[k]->cols())
            throw std::invalid_argument("gradient shape mismatch");
    }
    ++step_count;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (size_t k = 0; k < params.size(); ++k) {
        m[k] = beta1 * m[k] + (1.0 - beta1) * grads[k];
        v[k] = beta2 * v[k] + (1.0 - beta2) * grads[k].cwiseProduct(grads[k]);
        Mat mhat = m[k] / c1;
        Mat vhat = v[k] / c2;
        *params[k] -= lr * (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
    }
    return true;
}

// ------------------------------------------------------------
// Checkpoints
// ------------------------------------------------------------

namespace {

void write_mat(std::ostringstream& os, const std::string& name, const Mat& m) {
    os << name << " " << m.rows() << " " << m.cols();
    char buf[40];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), " %a", m(r, c));
            os << buf;
        }
    }
    os << "\n";
}

Mat read_mat(std::istringstream& is, const std::string& expect) {
    std::string name;
    Eigen::Index rows, cols;
    if (!(is >> name >> rows >> cols) || name != expect)
        throw std::runtime_error("checkpoint: expected tensor '" + expect + "'");
    Mat m(rows, cols);
    std::string tok;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!(is >> tok)) throw std::runtime_error("checkpoint: truncated tensor " + expect);
            m(r, c) = std::strtod(tok.c_str(), nullptr);
        }
    return m;
}

}  // namespace

std::string save_checkpoint(const GnnParams& p, std::uint64_t seed) {
    std::ostringstream os;
    os << "fxarb-gnn-checkpoint v1\n";
    os << "mode " << (p.mode == GnnOutput::edge ? "edge" : "node") << "\n";
    os << "layers " << p.layers << "\n";
    os << "hidden " << p.hidden << "\n";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", p.leaky_slope);
    os << "leaky " << buf << "\n";
    os << "seed " << seed << "\n";
    write_mat(os, "scaler_node_mean", p.scaler.node_mean);
    write_mat(os, "scaler_node_std", p.scaler.node_std);
    write_mat(os, "scaler_edge_mean", p.scaler.edge_mean);
    write_mat(os, "scaler_edge_std", p.scaler.edge_std);
    for (int l = 0; l < p.layers; ++l) {
        write_mat(os, "node_conv_" + std::to_string(l) + "_W", p.node_convs[static_cast<size_t>(l)].W);
        write_mat(os, "node_conv_" + std::to_string(l) + "_b", p.node_convs[static_cast<size_t>(l)].b);
    }
    for (int l = 0; l < p.layers; ++l) {
        write_mat(os, "edge_conv_" + std::to_string(l) + "_W", p.edge_convs[static_cast<size_t>(l)].W);
        write_mat(os, "edge_conv_" + std::to_string(l) + "_b", p.edge_convs[static_cast<size_t>(l)].b);
    }
    write_mat(os, "head_W", p.head.W);
    write_mat(os, "head_b", p.head.b);
    return os.str();
}

GnnParams load_checkpoint(const std::string& blob, std::uint64_t* seed_out) {
    std::istringstream is(blob);
    std::string magic, version;
    is >> magic >> version;
    if (magic != "fxarb-gnn-checkpoint" || version != "v1")
        throw std::runtime_error("unrecognized checkpoint header");
    GnnParams p;
    std::string key, mode;
    is >> key >> mode;
    if (key != "mode" || (mode != "edge" && mode != "node"))
        throw std::runtime_error("checkpoint: bad mode");
    p.mode = mode == "edge" ? GnnOutput::edge : GnnOutput::node;
    std::string tok;
    is >> key >> p.layers;
    if (key != "layers") throw std::runtime_error("checkpoint: bad layers");
    is >> key >> p.hidden;
    if (key != "hidden") throw std::runtime_error("checkpoint: bad hidden");
    is >> key >> tok;
    if (key != "leaky") throw std::runtime_error("checkpoint: bad leaky");
    p.leaky_slope = std::strtod(tok.c_str(), nullptr);
    std::uint64_t seed = 0;
    is >> key >> seed;
    if (key != "seed") throw std::runtime_error("checkpoint: bad seed");
    if (seed_out) *seed_out = seed;
    p.scaler.node_mean = read_mat(is, "scaler_node_mean");
    p.scaler.node_std = read_mat(is, "scaler_node_std");
    p.scaler.edge_mean = read_mat(is, "scaler_edge_mean");
    p.scaler.edge_std = read_mat(is, "scaler_edge_std");
    for (int l = 0; l < p.layers; ++l) {
        Slp s;
        s.W = read_mat(is, "node_conv_" + std::to_string(l) + "_W");
        s.b = read_mat(is, "node_conv_" + std::to_string(l) + "_b");
        p.node_convs.push_back(std::move(s));
    }
    for (int l = 0; l < p.layers; ++l) {
        Slp s;
        s.W = read_mat(is, "edge_conv_" + std::to_string(l) + "_W");
        s.b = read_mat(is, "edge_conv_" + std::to_string(l) + "_b");
        p.edge_convs.push_back(std::move(s));
    }
    p.head.W = read_mat(is, "head_W");
    p.head.b = read_mat(is, "head_b");
    return p;
}

}  // namespace fxarb
