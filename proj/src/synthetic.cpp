#include "fxarb/synthetic.hpp"

#include <cmath>
#include <cstdio>

namespace fxarb {

namespace {
// Daily std-dev of log-value innovations, chosen near typical G10 FX vol.
constexpr double kInnovationStd = 0.004;
constexpr double kInitialValueStd = 0.05;
}  // namespace

void SyntheticConfig::validate() const {
    if (n_currencies < 2) throw std::invalid_argument("need at least 2 currencies");
    if (n_days < 1) throw std::invalid_argument("need at least 1 day");
    if (sigma_alpha < 0) throw std::invalid_argument("sigma_alpha must be >= 0");
    if (std::abs(signal_strength) >= 1.0)
        throw std::invalid_argument("|signal_strength| must be < 1");
    if (missing_prob < 0 || missing_prob >= 1.0)
        throw std::invalid_argument("missing_prob must be in [0,1)");
    if (ir_level <= 0) throw std::invalid_argument("ir_level must be positive");
}

double GroundTruth::alpha(int t, int i, int j) const {
    return alpha_flat[(static_cast<size_t>(t) - 1) * n * n + static_cast<size_t>(i) * n + j];
}

SyntheticMarket generate_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    const int n = cfg.n_currencies;
    const int T = cfg.n_days;

    std::vector<std::string> codes;
    codes.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "C%02d", i);
        codes.emplace_back(buf);
    }

    SyntheticMarket mkt{TradingCalendar::weekdays_from(cfg.start, T), FxPanel(codes, T),
                        IrPanel(codes, T), {}};
    mkt.truth.n = n;
    mkt.truth.log_values.setZero(T, n);
    mkt.truth.increments.setZero(T, n);
    mkt.truth.alpha_flat.assign(static_cast<size_t>(T) * n * n, 0.0);

    GaussianRng rng(cfg.seed);

    // Initial log values and IR levels.
    Eigen::VectorXd log_v(n), eps(n), ir_1y(n);
    for (int i = 0; i < n; ++i) log_v(i) = kInitialValueStd * rng.gaussian();
    eps.setZero();
    for (int i = 0; i < n; ++i) ir_1y(i) = cfg.ir_level * (0.5 + rng.uniform());

    for (int t = 1; t <= T; ++t) {
        if (t > 1) {
            for (int i = 0; i < n; ++i) {
                eps(i) = cfg.signal_strength * eps(i) + kInnovationStd * rng.gaussian();
                log_v(i) += eps(i);
            }
        }
        mkt.truth.log_values.row(t - 1) = log_v.transpose();
        mkt.truth.increments.row(t - 1) = eps.transpose();

        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                double a = cfg.sigma_alpha > 0 ? cfg.sigma_alpha * rng.gaussian() : 0.0;
                bool missing = cfg.missing_prob > 0 && rng.uniform() < cfg.missing_prob;
                if (missing) continue;
                size_t base = (static_cast<size_t>(t) - 1) * n * n;
                mkt.truth.alpha_flat[base + static_cast<size_t>(i) * n + j] = a;
                mkt.truth.alpha_flat[base + static_cast<size_t>(j) * n + i] = -a;
                double x = std::exp(log_v(i) - log_v(j) + a);
                mkt.fx.set(t, i, j, x);
                mkt.fx.set(t, j, i, 1.0 / x);
            }
        }

        for (int i = 0; i < n; ++i) {
            if (t > 1) {
                ir_1y(i) = std::max(ir_1y(i) + cfg.ir_vol * rng.gaussian(), 1e-4);
            }
            for (size_t m = 0; m < IrPanel::kMaturities.size(); ++m) {
                // mild upward term structure
                double r = ir_1y(i) + 0.002 * std::log(IrPanel::kMaturities[m]);
                mkt.ir.set(t, i, static_cast<int>(m), r);
            }
        }
    }

    return mkt;
}

}  // namespace fxarb
