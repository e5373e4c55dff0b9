#pragma once

#include <map>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fxarb/panels.hpp"

namespace fxarb {

// ============================================================
// Per-date edge structure
// ============================================================

// Boolean adjacency over currency indices for one date.
struct LinkSet {
    int n = 0;
    std::vector<char> adj;

    LinkSet() = default;
    explicit LinkSet(int n_currencies) : n(n_currencies), adj(static_cast<size_t>(n) * n, 0) {}

    bool has(int i, int j) const { return adj[static_cast<size_t>(i) * n + j] != 0; }
    void set(int i, int j, bool v = true) { adj[static_cast<size_t>(i) * n + j] = v ? 1 : 0; }

    LinkSet intersect(const LinkSet& o) const;
    int count() const;
    // (i, j) pairs in row-major order; the canonical link ordering everywhere.
    std::vector<std::pair<int, int>> ordered_pairs() const;
};

// E_t: directed pairs quotable at t.
LinkSet tradable_edges(const FxView& fx, int t);
// L_t = {(i,j) in E_t : (j,i) in E_t}.
LinkSet reciprocal_edges(const LinkSet& e);
LinkSet reciprocal_links(const FxView& fx, int t);
// U_t = L_t ∩ L_{t-1} ∩ L_{t-2}.
LinkSet prediction_edge_set(const FxView& fx, int t);

// ============================================================
// Currency-value MLE
// ============================================================

struct CurrencyValues {
    Eigen::VectorXd log_values;  // mean-zero (per connected component)
    // residual per undirected link (i<j): logX - (logV_i - logV_j)
    std::vector<std::tuple<int, int, double>> residuals;
    std::vector<int> component;  // component id per currency; -1 = isolated
    int n_components = 0;
    int isolated_count = 0;
    bool disconnected = false;
};

// Least-squares solution of logV_i - logV_j = logX_ij over the given
// undirected links (i<j), with zero mean per connected component. Isolated
// currencies get log-value 0 and are flagged.
CurrencyValues currency_values(const std::vector<std::tuple<int, int, double>>& log_rates,
                               int n_currencies);

// Undirected (i<j) log-rate list from a panel date restricted to L_t.
std::vector<std::tuple<int, int, double>> link_log_rates(const FxView& fx, int t,
                                                         const LinkSet& links);

// ============================================================
// Feature engineering
// ============================================================

struct LookbackWindows {
    std::vector<int> windows{1, 3, 5, 10, 15, 20};

    void validate() const;
    int count() const { return static_cast<int>(windows.size()); }
    int max() const { return windows.empty() ? 0 : windows.back(); }
};

// Memoized per-date currency values on the shadow panel.
class ValueCache {
public:
    explicit ValueCache(int n_currencies) : n_(n_currencies) {}
    const Eigen::VectorXd& log_values(const FxView& shadow, int t);
    void clear() { cache_.clear(); }

private:
    int n_;
    std::map<int, Eigen::VectorXd> cache_;
};

struct EdgeFeatures {
    std::vector<std::pair<int, int>> edges;  // L_t ∩ L_{t-1}, canonical order
    Eigen::MatrixXd feats;                   // |edges| x |windows|
    int empty_mask_count = 0;
};

// x_tij,w = masked mean of log(X_t''/X_t''-1) over dates t'' in [t-w+1 : t]
// where (i,j) is in L_t'' ∩ L_t''-1. Empty mask -> 0.
EdgeFeatures edge_momentum_features(const FxView& fx, int t, const LookbackWindows& w);

struct NodeFeatures {
    std::vector<int> nodes;  // currency indices with complete features
    Eigen::MatrixXd feats;   // |nodes| x 2|windows|, concat [y ; v]
    std::vector<int> excluded;
};

NodeFeatures node_features(const IrView& ir, const FxView& shadow, ValueCache& values, int t,
                           const LookbackWindows& w);

struct FeatureGraph {
    int t = 0;                               // date the features are indexed at
    std::vector<int> nodes;                  // currency indices
    std::vector<std::pair<int, int>> edges;  // (i,j) currency pairs
    Eigen::MatrixXd node_feats;              // |nodes| x 2|windows|
    Eigen::MatrixXd edge_feats;              // |edges| x |windows|
    int empty_mask_count = 0;
    std::vector<int> excluded_nodes;
};

// Graph snapshot at date t (callers pass decision_date - 1): edge set
// L_t ∩ L_{t-1} restricted to nodes with complete features.
FeatureGraph build_feature_graph(const FxView& fx, const IrView& ir, const FxView& shadow,
                                 ValueCache& values, int t, const LookbackWindows& w);

// ============================================================
// Target scaling
// ============================================================

inline double scale_target(double x_next, double x_prev) {
    if (!(x_prev > 0.0)) throw std::domain_error("previous-day rate must be positive");
    return std::log(x_next / x_prev);
}

inline double unscale_prediction(double z, double x_prev) {
    if (!(x_prev > 0.0)) throw std::domain_error("previous-day rate must be positive");
    return x_prev * std::exp(z);
}

}  // namespace fxarb
