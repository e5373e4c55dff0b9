#pragma once

#include <deque>
#include <map>
#include <string>
#include <vector>

#include "fxarb/graph.hpp"
#include "fxarb/nn.hpp"
#include "fxarb/tape.hpp"

namespace fxarb {

// ============================================================
// Tradable link set U'_t with its canonical variable ordering.
// ============================================================
struct TradableLinks {
    int n_currencies = 0;
    int home = 0;
    std::vector<std::pair<int, int>> links;  // row-major canonical order
    std::map<std::pair<int, int>, int> index;

    bool empty() const { return links.empty(); }
    int size() const { return static_cast<int>(links.size()); }
    int find(int i, int j) const {
        auto it = index.find({i, j});
        return it == index.end() ? -1 : it->second;
    }
    // currencies touched by at least one link (home always included)
    std::vector<int> touched_currencies() const;
};

// Maximal symmetric subset of U_t whose links satisfy the home-currency
// convertibility conditions: (o,i),(o,j) in U_t ∪ {(o,o)} and
// (i,o),(j,o) in E_t ∪ {(o,o)}.
TradableLinks tradable_links(const LinkSet& u, const LinkSet& e, int home);

// ============================================================
// Symmetrized predictions
// ============================================================
struct SymmetrizedPredictions {
    Mat xhat;  // n x n; 1 on the diagonal; NaN where unavailable
    int dropped_single_direction = 0;
};

// X̂'_ij = sqrt(X̂_ij / X̂_ji); pairs predicted in one direction are dropped.
SymmetrizedPredictions symmetrize_predictions(const Mat& xhat_raw);

// Links whose predictions are unavailable are removed (with pair closure).
TradableLinks restrict_links_to_predictions(const TradableLinks& links, const Mat& xhat_sym);

// ============================================================
// Constraint system and projection
// ============================================================
struct ConstraintSystem {
    TradableLinks links;
    Mat a;           // constraint rows x |links|
    Mat basis;       // |links| x dim, orthonormal columns spanning ker(a)
    Mat projection;  // basis * basis^T

    int kernel_dim() const { return static_cast<int>(basis.cols()); }
};

// Rows: flow conservation per non-home currency, plus one symmetry row per
// unordered link pair. Kernel basis via SVD with singular tolerance
// 1e-10 * (largest row norm).
ConstraintSystem build_constraints(const TradableLinks& links, const Mat& xhat_sym);

// ============================================================
// Trade plans
// ============================================================
struct TradePlan {
    std::vector<std::pair<int, int>> links;
    int home = 0;
    Eigen::VectorXd w;  // aligned with links; all zero when degenerate
    bool degenerate = true;
    std::string reason;

    // certificates
    double cert_weight_sum = 0.0;
    double cert_max_direct_arb = 0.0;
    double cert_max_offhome_holding = 0.0;
    int relu_boundary_hits = 0;

    double hhi() const { return degenerate ? 0.0 : w.squaredNorm(); }
};

// u = P̂ u'; w = [u]+ / sum [u]+ when the positive mass clears the floor,
// otherwise a degenerate (no-trade) plan.
TradePlan h_so(const ConstraintSystem& sys, const Eigen::VectorXd& u_raw, const Mat& xhat_sym,
               double degenerate_floor = 1e-12);

// Ĥ_i = sum_{j:(j,i)} X̂'_ji X̂'_oj w_ji - sum_{j:(i,j)} X̂'_oi w_ij
Eigen::VectorXd holdings_hat(const TradableLinks& links, const Eigen::VectorXd& w,
                             const Mat& xhat_sym);

struct RealizedDay {
    Eigen::VectorXd holdings;  // H̃ per currency (all currencies, zero untouched)
    double gain = 0.0;
    double holdings_abs = 0.0;       // sum_i |H̃_i X̃_t,i,o|
    double holdings_abs_pred = 0.0;  // same with predicted rates
    bool evaluable = false;
    std::string reason;
};

// Realized holdings and present-value gain of one day's plan.
RealizedDay realized_gain(const TradableLinks& links, const Eigen::VectorXd& w,
                          const Mat& xhat_sym, const FxView& fx, const IrView& ir, int t);

// G̃(w) = coef . w for fixed realized rates; ok=false when rates are missing.
Eigen::VectorXd realized_gain_coefficients(const TradableLinks& links, const Mat& xhat_sym,
                                           const FxView& fx, const IrView& ir, int t, bool* ok);

// Predicted-gain functional Ĝ(w) = coef . w using X̂' and the latest observed
// daily rates as the IR estimate.
Eigen::VectorXd predicted_gain_coefficients(const TradableLinks& links, const Mat& xhat_sym,
                                            const IrView& ir, int t_ir, bool* ok);

// ============================================================
// Batch statistics and the FXSA loss
// ============================================================
struct BatchStats {
    Eigen::VectorXd gains;
    double mu = 0.0;
    double sigma2 = 0.0;  // unbiased, |B|-1 denominator
};

BatchStats batch_stats(const std::vector<double>& gains);  // throws if |B| < 2

// -mu^2 / max(sigma^2, eps_var) when mu > 0, else -mu.
double fxsa_loss(const BatchStats& stats, double eps_var = 1e-12);

// Tape twin over a column of gains.
Tape::Ref fxsa_loss_tape(Tape& t, Tape::Ref gains, double eps_var = 1e-12);

// ============================================================
// Proposition-1 verifiers
// ============================================================
struct C1Report {
    bool ok = false;
    double weight_sum_err = 0.0;
    double min_weight = 0.0;
    double max_direct_arb = 0.0;
    double max_offhome_holding = 0.0;
    std::string violation;
};

C1Report verify_c1(const TradableLinks& links, const Eigen::VectorXd& w, const Mat& xhat_sym,
                   double tol_sum = 1e-12, double tol_holding = 1e-9);

// u_ij = w_ij 1{w_ij>0} - (X̂'_oj X̂'_ji / X̂'_oi) w_ji 1{w_ij<=0}
Eigen::VectorXd c1_to_u(const TradableLinks& links, const Eigen::VectorXd& w,
                        const Mat& xhat_sym);

// ============================================================
// Estimated arbitrage residuals and the exchange-level graph
// ============================================================
struct ArbResiduals {
    Eigen::VectorXd log_v;  // per currency
    Eigen::VectorXd alpha;  // per link, aligned with the link order; antisymmetric
};

ArbResiduals arbitrage_residuals(const TradableLinks& links, const Mat& xhat_sym);

// Everything date-t the stage-2 model needs, cached by the driver.
struct StatArbDay {
    int t = 0;
    TradableLinks links;
    Mat xhat_sym;
    ConstraintSystem system;
    Eigen::VectorXd alpha;
};

struct StatArbGraph {
    std::vector<std::pair<int, int>> exchanges;  // nodes, one per link of U'_t
    Mat node_feats;                              // |exchanges| x |windows|
    Mat edge_feats;                              // |edges| x |windows|
    std::vector<int> src, dst;
    int absent_feature_flags = 0;
};

// history holds per-date records ascending in t; back() is the current date.
// Nodes: exchanges of the current U'. Node features: window averages of
// alpha over dates the link exists. Edges: |P̂_t entry| > eps_s; features:
// window averages of the matching P̂ entries.
StatArbGraph build_statarb_graph(const std::deque<const StatArbDay*>& history,
                                 const LookbackWindows& w, double eps_s);

// ============================================================
// Differentiable batch objective for training f_S
// ============================================================
struct FxsaDay {
    const StatArbDay* day = nullptr;
    StatArbGraph graph;
    Eigen::VectorXd gain_coef;  // realized-gain functional
};

struct FxsaBatchResult {
    Tape::Ref loss = -1;          // -1 when fewer than 2 evaluable days
    GnnForward forward;
    int evaluable_days = 0;
    int degenerate_days = 0;
};

FxsaBatchResult fxsa_batch_loss(Tape& t, const GnnParams& p, const std::vector<const FxsaDay*>& days,
                                double eps_var, double degenerate_floor);

// Inference: one day's plan from a trained stage-2 model.
TradePlan decide_trades(const GnnParams& p, const FxsaDay& day, double degenerate_floor = 1e-12);

// ============================================================
// Stage-2 training
// ============================================================
struct FxsaTrainConfig {
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    double leaky_slope = 0.01;
    int max_epochs = 50;
    int patience = 10;
    double lr_decay = 0.5;
    int lr_decay_every = 60;
    int batch_size = 64;
    double eps_var = 1e-12;
    double degenerate_floor = 1e-12;
    std::uint64_t seed = 0;
};

struct FxsaTrained {
    GnnParams params;
    int grid_index = -1;
    double validation_loss = 0.0;
    int epochs_run = 0;
    std::vector<std::pair<GridPoint, double>> validation_table;
};

// Mini-batch optimization of the batch objective with early stopping on the
// validation loss (full validation period as one batch). Aborts with a
// diagnostic when every training batch degenerates.
FxsaTrained train_fxsa(const std::vector<const FxsaDay*>& train_days,
                       const std::vector<const FxsaDay*>& val_days,
                       const std::vector<GridPoint>& grid, const FxsaTrainConfig& cfg);

}  // namespace fxarb
