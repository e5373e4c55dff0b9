#include "fxarb/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace fxarb {

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (static_cast<double>(v.size()) - 1.0));
}

}  // namespace

MetricValue information_ratio(const std::vector<double>& gains, double annualization) {
    if (gains.size() < 2) return {};
    double sd = sample_std(gains);
    if (sd == 0.0) return {};
    return {mean_of(gains) / sd * std::sqrt(annualization), true};
}

MetricValue sortino_ratio(const std::vector<double>& gains, double annualization) {
    if (gains.size() < 2) return {};
    double down = 0;
    for (double x : gains) {
        double d = std::min(x, 0.0);
        down += d * d;
    }
    down = std::sqrt(down / static_cast<double>(gains.size()));
    if (down == 0.0) return {};
    return {mean_of(gains) / down * std::sqrt(annualization), true};
}

MetricValue annual_return(const std::vector<double>& gains, double annualization) {
    if (gains.empty()) return {};
    return {annualization * mean_of(gains), true};
}

MetricValue annual_volatility(const std::vector<double>& gains, double annualization) {
    if (gains.size() < 2) return {};
    return {std::sqrt(annualization) * sample_std(gains), true};
}

double max_drawdown(const std::vector<double>& gains) {
    double path = 0.0, peak = 0.0, mdd = 0.0;
    for (double g : gains) {
        path += g;
        peak = std::max(peak, path);
        mdd = std::max(mdd, peak - path);
    }
    return mdd;
}

std::vector<MetricValue> rolling_metric(const std::vector<DatedValue>& series,
                                        MetricValue (*metric)(const std::vector<double>&, double),
                                        double annualization, int window_days) {
    std::vector<MetricValue> out(series.size());
    size_t lo = 0;
    std::vector<double> window;
    for (size_t k = 0; k < series.size(); ++k) {
        while (lo < k && days_between(series[lo].date, series[k].date) >= window_days) ++lo;
        window.clear();
        for (size_t i = lo; i <= k; ++i) window.push_back(series[i].value);
        out[k] = metric(window, annualization);
    }
    return out;
}

}  // namespace fxarb
