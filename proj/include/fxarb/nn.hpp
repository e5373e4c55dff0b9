#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fxarb/tape.hpp"

namespace fxarb {

// Single-layer feedforward block. Hidden SLPs use LeakyReLU; the head none.
struct Slp {
    Mat W;  // out x in
    Mat b;  // 1 x out
};

enum class GnnOutput { edge, node };

// Per-dimension standardization fitted on a training period and frozen.
struct FeatureScaler {
    Mat node_mean, node_std;  // 1 x d
    Mat edge_mean, edge_std;
    int floored_columns = 0;  // columns whose std hit the 1e-8 floor

    static FeatureScaler fit(const Mat& node_feats, const Mat& edge_feats);
    Mat scale_nodes(const Mat& x) const;
    Mat scale_edges(const Mat& x) const;
    Mat unscale_nodes(const Mat& x) const;
    Mat unscale_edges(const Mat& x) const;
};

struct GnnParams {
    int layers = 0;
    int hidden = 0;
    GnnOutput mode = GnnOutput::edge;
    double leaky_slope = 0.01;
    std::vector<Slp> node_convs;
    std::vector<Slp> edge_convs;
    Slp head;
    FeatureScaler scaler;

    std::vector<Mat*> tensors();
    std::vector<const Mat*> tensors() const;

    static GnnParams init(int node_dim, int edge_dim, int hidden, int layers, GnnOutput mode,
                          std::uint64_t seed);
};

// Numeric graph fed to the network. Batched inputs are stacked with node
// indices offset per component graph.
struct GnnGraph {
    Mat node_feats;        // N x dn
    Mat edge_feats;        // M x de
    std::vector<int> src;  // directed edge (src -> dst); rows into node_feats
    std::vector<int> dst;

    int n_nodes() const { return static_cast<int>(node_feats.rows()); }
    int n_edges() const { return static_cast<int>(edge_feats.rows()); }
};

struct GnnForward {
    Tape::Ref output = -1;                // column vector: per edge or per node
    std::vector<Tape::Ref> param_refs;    // aligned with GnnParams::tensors()
};

// Records the full forward on the tape: scale -> L x (node conv, edge conv)
// -> linear head over final edge (edge mode) or node (node mode) embeddings.
GnnForward gnn_forward(Tape& t, const GnnParams& p, const GnnGraph& g);

// Plain forward without a tape (inference convenience).
Eigen::VectorXd gnn_eval(const GnnParams& p, const GnnGraph& g);

// Hyperparameter grid point: total parameter budget and conv depth.
struct GridPoint {
    long param_budget = 10000;
    int layers = 2;
};

// Trainable-parameter count of the L-layer network at hidden width h.
long gnn_param_count(int hidden, int layers, int node_dim, int edge_dim);
// Largest width whose parameter count fits the budget; throws if the budget
// cannot fit width 1.
int width_for_budget(long param_budget, int layers, int node_dim, int edge_dim);

// ============================================================
// Adaptive moment optimizer
// ============================================================
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step_count = 0;
    int rejected_steps = 0;
    std::vector<Mat> m, v;

    void init_like(const std::vector<Mat*>& params);
    // Applies one update; returns false and leaves everything untouched when
    // any gradient entry is non-finite.
    bool step(std::vector<Mat*>& params, const std::vector<Mat>& grads);
};

// ============================================================
// Checkpoints: versioned text blob, exact (hexfloat) round-trip.
// ============================================================
std::string save_checkpoint(const GnnParams& p, std::uint64_t seed);
GnnParams load_checkpoint(const std::string& blob, std::uint64_t* seed_out = nullptr);

}  // namespace fxarb
