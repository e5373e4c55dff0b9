#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fxarb/config.hpp"
#include "fxarb/fxrp.hpp"
#include "fxarb/lp.hpp"
#include "fxarb/metrics.hpp"
#include "fxarb/statarb.hpp"

namespace fxarb {

struct DailyRecord {
    int t = 0;
    int refit_k = 0;
    std::string strategy;  // "gnn" | "lp"
    bool evaluable = false;
    bool degenerate = true;
    double gain = 0.0;
    double holdings_abs = 0.0;
    double holdings_abs_pred = 0.0;
    double hhi = 0.0;
    double predicted_gain = 0.0;  // shared predicted-gain functional at the plan
    double cert_weight_sum = 0.0;
    double cert_max_direct_arb = 0.0;
    double cert_max_offhome_holding = 0.0;
};

struct StrategySummary {
    int evaluated_days = 0;
    int degenerate_days = 0;
    MetricValue ir, sortino, ann_return, ann_vol;
    double mdd = 0.0;
    double mean_holdings = 0.0;
    double mean_hhi = 0.0;
};

struct EraMse {
    int k = 0;
    double gnn = 0.0;
    double random_walk = 0.0;
    long n_predictions = 0;
};

struct BacktestReport {
    std::vector<DailyRecord> records;
    std::map<std::string, StrategySummary> summary;
    std::map<std::string, std::vector<std::pair<Date, MetricValue>>> rolling_ir;
    std::map<std::string, std::vector<std::pair<Date, MetricValue>>> rolling_holdings;
    std::vector<EraMse> fxrp_mse_by_era;
    PredictionStore predictions;
    int certificate_violations = 0;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

struct MarketData {
    TradingCalendar calendar;
    FxPanel fx;         // symmetrized rates
    FxPanel fx_shadow;  // forward-filled copy for the value solver
    IrPanel ir;         // cleaned rates
    CleaningLog cleaning_log;
    int home = 0;
};

// Build panels per the config (synthetic generation or file ingestion),
// symmetrize, clean.
MarketData prepare_market(const RunConfig& cfg);

// The full two-stage walk-forward: per refit k train f_P, stitch predictions,
// train f_S for k >= n_sy, evaluate strategies daily on the test era.
BacktestReport run_walk_forward(const RunConfig& cfg, const MarketData& mkt);

// Report files (summary, daily records, rolling series, plans, predictions);
// every file carries the config hash + seed header. Returns written paths.
std::vector<std::string> write_report(const BacktestReport& rep, const RunConfig& cfg,
                                      const MarketData& mkt, const std::string& out_dir);

}  // namespace fxarb
