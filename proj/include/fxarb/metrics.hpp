#pragma once

#include <vector>

#include "fxarb/calendar.hpp"

namespace fxarb {

// Metrics with a zero denominator are reported as undefined, not 0 or inf.
struct MetricValue {
    double value = 0.0;
    bool defined = false;
};

// mean / sample std, zero benchmark, annualized by sqrt(annualization)
MetricValue information_ratio(const std::vector<double>& gains, double annualization = 252.0);
// mean / downside deviation (rms of the negative parts), annualized
MetricValue sortino_ratio(const std::vector<double>& gains, double annualization = 252.0);
MetricValue annual_return(const std::vector<double>& gains, double annualization = 252.0);
MetricValue annual_volatility(const std::vector<double>& gains, double annualization = 252.0);

// Max peak-to-trough drop of the cumulative-sum path started at 0.
double max_drawdown(const std::vector<double>& gains);

// Rolling metric over a 365-calendar-day window (t - 365, t].
struct DatedValue {
    Date date;
    double value = 0.0;
};
std::vector<MetricValue> rolling_metric(
    const std::vector<DatedValue>& series,
    MetricValue (*metric)(const std::vector<double>&, double), double annualization = 252.0,
    int window_days = 365);

}  // namespace fxarb
