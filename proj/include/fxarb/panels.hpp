#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fxarb/calendar.hpp"

namespace fxarb {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Thrown when pipeline code reads panel data beyond its information horizon.
struct LeakError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ============================================================
// FX rate panel: (t, i, j) -> units of j per unit of i.
// Missing cells are NaN. Trading-date index t is 1-based.
// ============================================================
class FxPanel {
public:
    FxPanel() = default;
    FxPanel(std::vector<std::string> currencies, int n_dates);

    int n_currencies() const { return static_cast<int>(ccy_.size()); }
    int n_dates() const { return n_dates_; }
    const std::vector<std::string>& currencies() const { return ccy_; }
    int currency_index(const std::string& code) const;  // -1 if unknown

    bool has(int t, int i, int j) const { return std::isfinite(at(t, i, j)); }
    double rate(int t, int i, int j) const { return at(t, i, j); }
    void set(int t, int i, int j, double v) { at(t, i, j) = v; }
    void clear(int t, int i, int j) { at(t, i, j) = kMissing; }

    // Pairs seen in one direction only on some date (excluded from reciprocal
    // edge sets by construction; kept here for diagnostics).
    int single_direction_flags = 0;

private:
    double& at(int t, int i, int j);
    const double& at(int t, int i, int j) const;

    std::vector<std::string> ccy_;
    int n_dates_ = 0;
    std::vector<double> vals_;
};

// ============================================================
// Interest-rate panel: (t, i, maturity) -> annualized decimal rate.
// Maturities are the fixed ladder {1, 2, 5, 10} years.
// ============================================================
class IrPanel {
public:
    static constexpr std::array<double, 4> kMaturities = {1.0, 2.0, 5.0, 10.0};
    static int maturity_index(double years);  // -1 if not on the ladder

    IrPanel() = default;
    IrPanel(std::vector<std::string> currencies, int n_dates);

    int n_currencies() const { return static_cast<int>(ccy_.size()); }
    int n_dates() const { return n_dates_; }
    const std::vector<std::string>& currencies() const { return ccy_; }
    int currency_index(const std::string& code) const;

    bool has(int t, int i, int m) const { return std::isfinite(at(t, i, m)); }
    double rate(int t, int i, int m) const { return at(t, i, m); }
    void set(int t, int i, int m, double v) { at(t, i, m) = v; }
    void clear(int t, int i, int m) { at(t, i, m) = kMissing; }

    // Per-day rate derived from the 1-year rate; NaN when the 1y cell is missing.
    double daily_rate(int t, int i) const {
        double r = at(t, i, 0);
        return std::isfinite(r) ? r / 365.0 : kMissing;
    }

private:
    double& at(int t, int i, int m);
    const double& at(int t, int i, int m) const;

    std::vector<std::string> ccy_;
    int n_dates_ = 0;
    std::vector<double> vals_;
};

// ============================================================
// Guarded read-only views. Pipeline code that builds features or
// trade plans for decision date t receives views limited to t-1
// (rate values) and t (same-day tradability). Any read past the
// limit throws LeakError.
// ============================================================
class FxView {
public:
    FxView(const FxPanel& p, int value_limit, int edge_limit)
        : p_(&p), value_limit_(value_limit), edge_limit_(edge_limit) {}
    static FxView unrestricted(const FxPanel& p) {
        return FxView(p, p.n_dates(), p.n_dates());
    }

    double rate(int t, int i, int j) const {
        check_value(t);
        return p_->rate(t, i, j);
    }
    bool has(int t, int i, int j) const {
        check_value(t);
        return p_->has(t, i, j);
    }
    bool tradable(int t, int i, int j) const {
        if (t > edge_limit_)
            throw LeakError("edge-set read at t=" + std::to_string(t) +
                            " beyond limit " + std::to_string(edge_limit_));
        return p_->has(t, i, j);
    }

    int n_currencies() const { return p_->n_currencies(); }
    int n_dates() const { return p_->n_dates(); }
    int value_limit() const { return value_limit_; }
    int edge_limit() const { return edge_limit_; }
    const FxPanel& panel() const { return *p_; }

private:
    void check_value(int t) const {
        if (t > value_limit_)
            throw LeakError("rate read at t=" + std::to_string(t) +
                            " beyond limit " + std::to_string(value_limit_));
    }

    const FxPanel* p_;
    int value_limit_;
    int edge_limit_;
};

class IrView {
public:
    IrView(const IrPanel& p, int value_limit) : p_(&p), value_limit_(value_limit) {}
    static IrView unrestricted(const IrPanel& p) { return IrView(p, p.n_dates()); }

    double daily_rate(int t, int i) const {
        check(t);
        return p_->daily_rate(t, i);
    }
    double rate(int t, int i, int m) const {
        check(t);
        return p_->rate(t, i, m);
    }
    int n_currencies() const { return p_->n_currencies(); }
    int n_dates() const { return p_->n_dates(); }
    int value_limit() const { return value_limit_; }

private:
    void check(int t) const {
        if (t > value_limit_)
            throw LeakError("IR read at t=" + std::to_string(t) +
                            " beyond limit " + std::to_string(value_limit_));
    }

    const IrPanel* p_;
    int value_limit_;
};

// ============================================================
// Ingestion
// ============================================================
struct LoadResult {
    FxPanel fx;
    IrPanel ir;
    int fx_rows_dropped = 0;  // rows dated off the trading calendar
    int ir_rows_dropped = 0;
};

// Files: `date,base,quote,rate` and `date,currency,maturity_years,rate`,
// ISO-8601 dates, decimal rates, one header line each.
LoadResult load_panels(const std::string& fx_path, const std::string& ir_path,
                       const TradingCalendar& calendar);

// X'_tij = sqrt(X_tij / X_tji) for pairs quoted in both directions;
// single-direction entries are left as-is and counted.
FxPanel symmetrize_rates(const FxPanel& panel);

// ============================================================
// Cleaning
// ============================================================
struct OutlierRule {
    std::string base;
    std::string quote;
    Date from;
    Date to;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

struct CleaningConfig {
    int fx_ffill_limit = 7;
    int ir_ffill_limit = 30;
    std::vector<double> scale_factors;  // permissible magnitude-correction multipliers
    std::vector<OutlierRule> outlier_rules;
};

struct CleanAction {
    int t = 0;
    std::string field;   // e.g. "fx:USD/JPY", "ir:SEK@2y"
    std::string action;  // rescale | remove | ffill | impute | unfilled
    double value = 0.0;
};

struct CleaningLog {
    std::vector<CleanAction> actions;
    std::string to_lines() const;  // `t,field,action,value` records
};

struct CleanedPanels {
    FxPanel fx;
    FxPanel fx_shadow;  // forward-filled copy consumed only by the currency-value solver
    IrPanel ir;
    CleaningLog log;
};

CleanedPanels clean_panels(const FxPanel& fx, const IrPanel& ir, const CleaningConfig& cfg,
                           const TradingCalendar& calendar);

}  // namespace fxarb
