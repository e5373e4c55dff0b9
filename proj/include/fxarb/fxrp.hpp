#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fxarb/graph.hpp"
#include "fxarb/nn.hpp"
#include "fxarb/panels.hpp"

namespace fxarb {

// ============================================================
// Walk-forward refit schedule
// ============================================================
enum class RefitFrequency { quarterly, monthly };

struct ScheduleConfig {
    int start_year = 2015;
    RefitFrequency frequency = RefitFrequency::quarterly;
    int n_fit = 40;
    int n_sy = 5;
    double t_exec = 0.5;  // informational only: features use data through t-1
};

struct FitSchedule {
    int t0 = 1;
    std::vector<int> refit_dates;  // t_k for k = 1..n_fit
    int n_fit = 0;
    int n_sy = 0;
    double t_exec = 0.5;
    int horizon_end = 0;  // last trading index of the calendar

    int t1() const { return refit_dates.front(); }
    int t_k(int k) const { return refit_dates.at(static_cast<size_t>(k - 1)); }
    // test era [t_k, t_{k+1}); the last era runs to the horizon end
    int test_begin(int k) const { return t_k(k); }
    int test_end(int k) const {
        return k < n_fit ? t_k(k + 1) : horizon_end + 1;
    }
};

FitSchedule build_schedule(const TradingCalendar& cal, const ScheduleConfig& cfg);

// ============================================================
// Train/validation splits
// ============================================================
struct DateRange {
    int begin = 0, end = 0;  // [begin, end)
    bool contains(int t) const { return t >= begin && t < end; }
    int size() const { return end - begin; }
};

struct Split {
    std::vector<DateRange> train;
    DateRange validation;
};

struct SplitSpec {
    std::vector<Split> stage_p;  // index k-1
    std::vector<Split> stage_s;
};

// Stage P, k <= n_sy: validation = k-th of n_sy consecutive blocks tiling
// [t0, t1). Otherwise: trailing val_fraction of [t0, t_k).
SplitSpec make_splits(const FitSchedule& sched, double val_fraction);

// min k with t in the stage-P validation period of refit k (t in [t0, t1))
int k_star(const FitSchedule& sched, int t);

// ============================================================
// Prediction store
// ============================================================
class PredictionStore {
public:
    void put(int t, Mat xhat, int provenance_k);
    bool has(int t) const { return entries_.count(t) > 0; }
    const Mat& xhat(int t) const;
    int provenance(int t) const;
    std::string serialize(const std::vector<std::string>& currencies) const;
    size_t size() const { return entries_.size(); }

private:
    std::map<int, std::pair<Mat, int>> entries_;
};

// ============================================================
// Stage-1 dataset and training
// ============================================================
struct FxrpDay {
    int t = 0;            // prediction date; features indexed at t-1
    GnnGraph graph;       // raw (unscaled) features
    std::vector<std::pair<int, int>> graph_edges;  // currency pair per edge row
    std::vector<int> target_rows;  // edge rows belonging to U_t
    Eigen::VectorXd targets;       // h_PO^{-1} targets aligned with target_rows
    std::vector<double> prev_rates;  // X̃_{t-1,ij} per target row (for unscaling)
    std::vector<std::pair<int, int>> target_edges;
};

// Returns nullopt when features are unavailable (insufficient history or
// empty usable edge set). Guarded views enforce the information horizon.
std::optional<FxrpDay> build_fxrp_day(const FxView& fx, const IrView& ir, const FxView& shadow,
                                      ValueCache& values, int t, const LookbackWindows& w,
                                      bool with_targets);

struct FxrpTrainConfig {
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    int max_epochs = 500;
    int patience = 20;        // epochs without validation improvement before stopping
    double lr_decay = 0.5;    // step-decay factor
    int lr_decay_every = 60;  // epochs per decay step
    double leaky_slope = 0.01;
    std::uint64_t seed = 0;
};

struct FxrpTrained {
    GnnParams params;
    int grid_index = -1;
    double validation_mse = 0.0;
    int epochs_run = 0;
    std::vector<std::pair<GridPoint, double>> validation_table;
};

// Full-batch MSE training with early stopping; selects the grid point with
// the lowest validation MSE (ties: smaller budget, then fewer layers).
FxrpTrained train_fxrp(const std::vector<const FxrpDay*>& train_days,
                       const std::vector<const FxrpDay*>& val_days,
                       const std::vector<GridPoint>& grid, const FxrpTrainConfig& cfg,
                       int threads = 1);

// Mean over days of the per-day MSE.
double fxrp_mse(const GnnParams& p, const std::vector<const FxrpDay*>& days);

// X̂_t as an n x n matrix on U_t (NaN elsewhere), positive by construction.
Mat predict_day(const GnnParams& p, const FxrpDay& day, int n_currencies);

// Random-walk baseline: X̂ = X̃_{t-1} on the same edge set.
Mat baseline_random_walk(const FxrpDay& day, int n_currencies);

}  // namespace fxarb
