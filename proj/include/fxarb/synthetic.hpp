#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fxarb/panels.hpp"
#include "fxarb/rng.hpp"

namespace fxarb {

struct SyntheticConfig {
    int n_currencies = 10;
    int n_days = 2000;
    double sigma_alpha = 0.005;      // std-dev of per-pair arbitrage noise
    double signal_strength = 0.0;    // AR(1) coefficient of log-value increments
    double ir_level = 0.02;          // mean annualized 1y rate
    double ir_vol = 0.0005;          // daily shock on the annualized rate
    double missing_prob = 0.0;       // per unordered pair per day
    std::uint64_t seed = 1;
    Date start = {2010, 1, 1};

    void validate() const;
};

struct GroundTruth {
    Eigen::MatrixXd log_values;  // n_days x n_currencies
    Eigen::MatrixXd increments;  // n_days x n_currencies (AR(1) state)
    // alpha(t, i, j) for i<j; antisymmetric by construction
    double alpha(int t, int i, int j) const;
    std::vector<double> alpha_flat;  // internal layout: (t-1)*n*n + i*n + j
    int n = 0;
};

struct SyntheticMarket {
    TradingCalendar calendar;
    FxPanel fx;
    IrPanel ir;
    GroundTruth truth;
};

// Pure function of the config: identical seeds give bit-identical panels.
SyntheticMarket generate_synthetic(const SyntheticConfig& cfg);

}  // namespace fxarb
