#include "fxarb/panels.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace fxarb {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
}

double parse_rate(const std::string& s, int line_no) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing chars");
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad numeric field '" + s + "'");
    }
}

}  // namespace

// ------------------------------------------------------------
// FxPanel / IrPanel storage
// ------------------------------------------------------------

FxPanel::FxPanel(std::vector<std::string> currencies, int n_dates)
    : ccy_(std::move(currencies)), n_dates_(n_dates) {
    vals_.assign(static_cast<size_t>(n_dates_) * ccy_.size() * ccy_.size(), kMissing);
}

int FxPanel::currency_index(const std::string& code) const {
    auto it = std::find(ccy_.begin(), ccy_.end(), code);
    return it == ccy_.end() ? -1 : static_cast<int>(it - ccy_.begin());
}

double& FxPanel::at(int t, int i, int j) {
    const int n = n_currencies();
    return vals_[(static_cast<size_t>(t) - 1) * n * n + static_cast<size_t>(i) * n + j];
}
const double& FxPanel::at(int t, int i, int j) const {
    return const_cast<FxPanel*>(this)->at(t, i, j);
}

int IrPanel::maturity_index(double years) {
    for (size_t k = 0; k < kMaturities.size(); ++k) {
        if (std::abs(years - kMaturities[k]) < 1e-9) return static_cast<int>(k);
    }
    return -1;
}

IrPanel::IrPanel(std::vector<std::string> currencies, int n_dates)
    : ccy_(std::move(currencies)), n_dates_(n_dates) {
    vals_.assign(static_cast<size_t>(n_dates_) * ccy_.size() * kMaturities.size(), kMissing);
}

int IrPanel::currency_index(const std::string& code) const {
    auto it = std::find(ccy_.begin(), ccy_.end(), code);
    return it == ccy_.end() ? -1 : static_cast<int>(it - ccy_.begin());
}

double& IrPanel::at(int t, int i, int m) {
    const size_t nm = kMaturities.size();
    return vals_[(static_cast<size_t>(t) - 1) * ccy_.size() * nm + static_cast<size_t>(i) * nm + m];
}
const double& IrPanel::at(int t, int i, int m) const {
    return const_cast<IrPanel*>(this)->at(t, i, m);
}

// ------------------------------------------------------------
// Ingestion
// ------------------------------------------------------------

LoadResult load_panels(const std::string& fx_path, const std::string& ir_path,
                       const TradingCalendar& calendar) {
    struct FxRow {
        int t;
        std::string base, quote;
        double rate;
    };
    struct IrRow {
        int t;
        std::string ccy;
        int m;
        double rate;
    };

    std::ifstream fx_file(fx_path);
    if (!fx_file) throw IngestError("cannot open FX file: " + fx_path);
    std::ifstream ir_file(ir_path);
    if (!ir_file) throw IngestError("cannot open IR file: " + ir_path);

    std::vector<FxRow> fx_rows;
    std::vector<IrRow> ir_rows;
    std::set<std::string> codes;
    int fx_dropped = 0, ir_dropped = 0;

    std::string line;
    int line_no = 0;
    std::getline(fx_file, line);  // header
    ++line_no;
    while (std::getline(fx_file, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != 4)
            throw ParseError("fx line " + std::to_string(line_no) + ": expected 4 fields, got " +
                             std::to_string(cells.size()));
        Date d;
        try {
            d = Date::parse_iso(cells[0]);
        } catch (const std::exception& e) {
            throw ParseError("fx line " + std::to_string(line_no) + ": " + e.what());
        }
        double rate = parse_rate(cells[3], line_no);
        auto t = calendar.index_of(d);
        if (!t) {
            ++fx_dropped;
            continue;
        }
        fx_rows.push_back({*t, cells[1], cells[2], rate});
        codes.insert(cells[1]);
        codes.insert(cells[2]);
    }

    line_no = 0;
    std::getline(ir_file, line);  // header
    ++line_no;
    while (std::getline(ir_file, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != 4)
            throw ParseError("ir line " + std::to_string(line_no) + ": expected 4 fields, got " +
                             std::to_string(cells.size()));
        Date d;
        try {
            d = Date::parse_iso(cells[0]);
        } catch (const std::exception& e) {
            throw ParseError("ir line " + std::to_string(line_no) + ": " + e.what());
        }
        double years = parse_rate(cells[2], line_no);
        int m = IrPanel::maturity_index(years);
        if (m < 0)
            throw ParseError("ir line " + std::to_string(line_no) + ": maturity " + cells[2] +
                             " not in {1,2,5,10}");
        double rate = parse_rate(cells[3], line_no);
        auto t = calendar.index_of(d);
        if (!t) {
            ++ir_dropped;
            continue;
        }
        ir_rows.push_back({*t, cells[1], m, rate});
        codes.insert(cells[1]);
    }

    std::vector<std::string> universe(codes.begin(), codes.end());
    LoadResult res{FxPanel(universe, calendar.size()), IrPanel(universe, calendar.size()),
                   fx_dropped, ir_dropped};

    for (const auto& r : fx_rows) {
        int i = res.fx.currency_index(r.base);
        int j = res.fx.currency_index(r.quote);
        if (res.fx.has(r.t, i, j))
            throw IngestError("duplicate FX key (" + calendar.date(r.t).iso() + "," + r.base +
                              "," + r.quote + ")");
        res.fx.set(r.t, i, j, r.rate);
    }
    for (const auto& r : ir_rows) {
        int i = res.ir.currency_index(r.ccy);
        if (res.ir.has(r.t, i, r.m))
            throw IngestError("duplicate IR key (" + calendar.date(r.t).iso() + "," + r.ccy +
                              "," + std::to_string(IrPanel::kMaturities[r.m]) + "y)");
        res.ir.set(r.t, i, r.m, r.rate);
    }
    return res;
}

// ------------------------------------------------------------
// Symmetrization
// ------------------------------------------------------------

FxPanel symmetrize_rates(const FxPanel& panel) {
    FxPanel out = panel;
    const int n = panel.n_currencies();
    for (int t = 1; t <= panel.n_dates(); ++t) {
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                bool fwd = panel.has(t, i, j), bwd = panel.has(t, j, i);
                if (fwd && bwd) {
                    double xij = panel.rate(t, i, j), xji = panel.rate(t, j, i);
                    if (xij <= 0.0 || xji <= 0.0)
                        throw std::domain_error("non-positive FX rate at t=" + std::to_string(t));
                    double s = std::sqrt(xij / xji);
                    out.set(t, i, j, s);
                    out.set(t, j, i, 1.0 / s);
                } else if (fwd || bwd) {
                    ++out.single_direction_flags;
                }
            }
        }
    }
    return out;
}

// ------------------------------------------------------------
// Cleaning
// ------------------------------------------------------------

std::string CleaningLog::to_lines() const {
    std::string out;
    char buf[64];
    for (const auto& a : actions) {
        std::snprintf(buf, sizeof(buf), "%.17g", a.value);
        out += std::to_string(a.t) + "," + a.field + "," + a.action + "," + buf + "\n";
    }
    return out;
}

CleanedPanels clean_panels(const FxPanel& fx, const IrPanel& ir, const CleaningConfig& cfg,
                           const TradingCalendar& calendar) {
    if (cfg.fx_ffill_limit < 0 || cfg.ir_ffill_limit < 0)
        throw std::invalid_argument("negative forward-fill limit");

    CleanedPanels out{fx, FxPanel(), ir, {}};
    const int n = fx.n_currencies();
    const int T = fx.n_dates();

    auto fx_field = [&](int i, int j) {
        return "fx:" + fx.currencies()[i] + "/" + fx.currencies()[j];
    };

    // Magnitude corrections: rate jumping by a configured factor relative to
    // the previous observation is rescaled back.
    if (!cfg.scale_factors.empty()) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                double last = kMissing;
                for (int t = 1; t <= T; ++t) {
                    if (!out.fx.has(t, i, j)) continue;
                    double v = out.fx.rate(t, i, j);
                    if (std::isfinite(last) && last > 0.0 && v > 0.0) {
                        double ratio = v / last;
                        for (double f : cfg.scale_factors) {
                            if (ratio > f / 1.5 && ratio < f * 1.5) {
                                v /= f;
                                out.fx.set(t, i, j, v);
                                out.log.actions.push_back({t, fx_field(i, j), "rescale", v});
                                break;
                            }
                            if (ratio > 1.0 / (f * 1.5) && ratio < 1.5 / f) {
                                v *= f;
                                out.fx.set(t, i, j, v);
                                out.log.actions.push_back({t, fx_field(i, j), "rescale", v});
                                break;
                            }
                        }
                    }
                    last = v;
                }
            }
        }
    }

    // Configured outlier removals.
    for (const auto& rule : cfg.outlier_rules) {
        int i = out.fx.currency_index(rule.base);
        int j = out.fx.currency_index(rule.quote);
        if (i < 0 || j < 0) continue;
        for (int t = 1; t <= T; ++t) {
            const Date& d = calendar.date(t);
            if (d < rule.from || rule.to < d) continue;
            if (!out.fx.has(t, i, j)) continue;
            double v = out.fx.rate(t, i, j);
            if (v < rule.lo || v > rule.hi) {
                out.fx.clear(t, i, j);
                out.log.actions.push_back({t, fx_field(i, j), "remove", v});
            }
        }
    }

    // Shadow FX panel: forward-fill up to fx_ffill_limit days. Consumed only
    // by the currency-value solver, never by returns or features.
    out.fx_shadow = out.fx;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double last = kMissing;
            int last_t = -1;
            for (int t = 1; t <= T; ++t) {
                if (out.fx_shadow.has(t, i, j)) {
                    last = out.fx_shadow.rate(t, i, j);
                    last_t = t;
                } else if (last_t > 0 && t - last_t <= cfg.fx_ffill_limit) {
                    out.fx_shadow.set(t, i, j, last);
                    out.log.actions.push_back({t, fx_field(i, j), "ffill", last});
                }
            }
        }
    }

    // IR forward-fill up to ir_ffill_limit days.
    const int nm = static_cast<int>(IrPanel::kMaturities.size());
    auto ir_field = [&](int i, int m) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "%g", IrPanel::kMaturities[m]);
        return "ir:" + ir.currencies()[i] + "@" + buf + "y";
    };
    for (int i = 0; i < ir.n_currencies(); ++i) {
        for (int m = 0; m < nm; ++m) {
            double last = kMissing;
            int last_t = -1;
            for (int t = 1; t <= T; ++t) {
                if (out.ir.has(t, i, m)) {
                    last = out.ir.rate(t, i, m);
                    last_t = t;
                } else if (last_t > 0 && t - last_t <= cfg.ir_ffill_limit) {
                    out.ir.set(t, i, m, last);
                    out.log.actions.push_back({t, ir_field(i, m), "ffill", last});
                }
            }
        }
    }

    // Remaining IR gaps: per (t, i), least squares of rate on log(maturity)
    // across the observed ladder points when at least two exist.
    for (int t = 1; t <= T; ++t) {
        for (int i = 0; i < ir.n_currencies(); ++i) {
            int observed = 0, missing = 0;
            for (int m = 0; m < nm; ++m) (out.ir.has(t, i, m) ? observed : missing)++;
            if (missing == 0) continue;
            if (observed < 2) {
                for (int m = 0; m < nm; ++m)
                    if (!out.ir.has(t, i, m))
                        out.log.actions.push_back({t, ir_field(i, m), "unfilled", 0.0});
                continue;
            }
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (int m = 0; m < nm; ++m) {
                if (!out.ir.has(t, i, m)) continue;
                double x = std::log(IrPanel::kMaturities[m]);
                double y = out.ir.rate(t, i, m);
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            double denom = observed * sxx - sx * sx;
            double slope = denom != 0.0 ? (observed * sxy - sx * sy) / denom : 0.0;
            double intercept = (sy - slope * sx) / observed;
            for (int m = 0; m < nm; ++m) {
                if (out.ir.has(t, i, m)) continue;
                double v = intercept + slope * std::log(IrPanel::kMaturities[m]);
                out.ir.set(t, i, m, v);
                out.log.actions.push_back({t, ir_field(i, m), "impute", v});
            }
        }
    }

    return out;
}

}  // namespace fxarb
