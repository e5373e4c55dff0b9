#include "fxarb/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fxarb/rng.hpp"

namespace fxarb {

MarketData prepare_market(const RunConfig& cfg) {
    MarketData mkt;
    FxPanel raw_fx;
    IrPanel raw_ir;
    if (cfg.mode == "synthetic") {
        SyntheticConfig sc = cfg.synth;
        sc.seed = cfg.seed;
        SyntheticMarket sm = generate_synthetic(sc);
        mkt.calendar = std::move(sm.calendar);
        raw_fx = std::move(sm.fx);
        raw_ir = std::move(sm.ir);
    } else {
        mkt.calendar = TradingCalendar::weekdays_between(cfg.calendar_start, cfg.calendar_end);
        LoadResult lr = load_panels(cfg.fx_path, cfg.ir_path, mkt.calendar);
        raw_fx = std::move(lr.fx);
        raw_ir = std::move(lr.ir);
    }

    FxPanel sym = symmetrize_rates(raw_fx);
    CleanedPanels cleaned = clean_panels(sym, raw_ir, cfg.cleaning, mkt.calendar);
    mkt.fx = std::move(cleaned.fx);
    mkt.fx_shadow = std::move(cleaned.fx_shadow);
    mkt.ir = std::move(cleaned.ir);
    mkt.cleaning_log = std::move(cleaned.log);

    mkt.home = mkt.fx.currency_index(cfg.home);
    if (mkt.home < 0)
        throw ConfigError("home currency '" + cfg.home + "' not present in the data");
    return mkt;
}

namespace {

// Lazily built per-date state shared across refits. All feature/plan inputs
// are read through guarded views pinned to the decision date.
class Driver {
public:
    Driver(const RunConfig& cfg, const MarketData& mkt)
        : cfg_(cfg),
          mkt_(mkt),
          sched_(build_schedule(mkt.calendar, cfg.schedule)),
          splits_(make_splits(sched_, cfg.val_fraction)),
          values_(mkt.fx.n_currencies()) {
        usable_start_ = cfg_.windows.max() + 2;
    }

    BacktestReport run();

private:
    const FxrpDay* fxrp_day(int t);
    const Eigen::VectorXd* fxrp_targets(int t);
    const StatArbDay* sa_day(int t);
    const FxsaDay* fxsa_day(int t);

    std::vector<const FxrpDay*> collect_fxrp(const std::vector<DateRange>& ranges,
                                             bool with_targets, int limit_end);
    std::vector<const FxsaDay*> collect_fxsa(const std::vector<DateRange>& ranges, int max_t,
                                             bool need_gain);

    void evaluate_era(int k, const GnnParams* theta_s, BacktestReport& rep);

    const RunConfig& cfg_;
    const MarketData& mkt_;
    FitSchedule sched_;
    SplitSpec splits_;
    ValueCache values_;
    int usable_start_ = 0;

    std::map<int, std::unique_ptr<FxrpDay>> fxrp_days_;
    std::map<int, bool> fxrp_missing_;
    std::map<int, Eigen::VectorXd> targets_;
    PredictionStore store_;
    std::map<int, std::unique_ptr<StatArbDay>> sa_days_;
    std::map<int, bool> sa_missing_;
    std::map<int, std::unique_ptr<FxsaDay>> fxsa_days_;
    std::map<int, bool> fxsa_gain_ok_;
};

const FxrpDay* Driver::fxrp_day(int t) {
    auto it = fxrp_days_.find(t);
    if (it != fxrp_days_.end()) return it->second.get();
    if (fxrp_missing_.count(t)) return nullptr;

    FxView fx(mkt_.fx, t - 1, t);
    FxView shadow(mkt_.fx_shadow, t - 1, t);
    IrView ir(mkt_.ir, t - 1);
    auto day = build_fxrp_day(fx, ir, shadow, values_, t, cfg_.windows, false);
    if (!day) {
        fxrp_missing_[t] = true;
        return nullptr;
    }
    auto owned = std::make_unique<FxrpDay>(std::move(*day));
    const FxrpDay* ptr = owned.get();
    fxrp_days_[t] = std::move(owned);
    return ptr;
}

const Eigen::VectorXd* Driver::fxrp_targets(int t) {
    auto it = targets_.find(t);
    if (it != targets_.end()) return &it->second;
    const FxrpDay* day = fxrp_day(t);
    if (!day) return nullptr;
    // labels for date t become readable at date t's close
    FxView fx(mkt_.fx, t, t);
    Eigen::VectorXd tg(static_cast<Eigen::Index>(day->target_edges.size()));
    for (size_t r = 0; r < day->target_edges.size(); ++r) {
        auto [i, j] = day->target_edges[r];
        tg(static_cast<Eigen::Index>(r)) = std::log(fx.rate(t, i, j) / day->prev_rates[r]);
    }
    return &targets_.emplace(t, std::move(tg)).first->second;
}

const StatArbDay* Driver::sa_day(int t) {
    auto it = sa_days_.find(t);
    if (it != sa_days_.end()) return it->second.get();
    if (sa_missing_.count(t)) return nullptr;
    if (!store_.has(t)) {
        sa_missing_[t] = true;
        return nullptr;
    }

    FxView fx(mkt_.fx, t - 1, t);
    auto day = std::make_unique<StatArbDay>();
    day->t = t;
    LinkSet u = prediction_edge_set(fx, t);
    LinkSet e = tradable_edges(fx, t);
    SymmetrizedPredictions sp = symmetrize_predictions(store_.xhat(t));
    day->xhat_sym = std::move(sp.xhat);
    TradableLinks raw = tradable_links(u, e, mkt_.home);
    day->links = restrict_links_to_predictions(raw, day->xhat_sym);
    if (day->links.empty()) {
        day->system.links = day->links;
        day->alpha.resize(0);
    } else {
        day->system = build_constraints(day->links, day->xhat_sym);
        day->alpha = arbitrage_residuals(day->links, day->xhat_sym).alpha;
    }
    const StatArbDay* ptr = day.get();
    sa_days_[t] = std::move(day);
    return ptr;
}

const FxsaDay* Driver::fxsa_day(int t) {
    auto it = fxsa_days_.find(t);
    if (it != fxsa_days_.end()) return it->second.get();
    const StatArbDay* sd = sa_day(t);
    if (!sd || sd->links.empty()) return nullptr;

    auto day = std::make_unique<FxsaDay>();
    day->day = sd;
    std::deque<const StatArbDay*> history;
    for (int tt = std::max(usable_start_, t - cfg_.windows.max() + 1); tt <= t; ++tt) {
        const StatArbDay* h = tt == t ? sd : (sa_days_.count(tt) ? sa_days_.at(tt).get() : nullptr);
        if (h && !h->links.empty()) history.push_back(h);
    }
    day->graph = build_statarb_graph(history, cfg_.windows, cfg_.epsilon_s);

    // realized labels: rates at t and t+1 (used for training and evaluation
    // only; decide_trades never touches gain_coef)
    bool ok = false;
    if (t + 1 <= mkt_.fx.n_dates()) {
        FxView fx(mkt_.fx, t + 1, t + 1);
        IrView ir(mkt_.ir, t);
        day->gain_coef = realized_gain_coefficients(sd->links, sd->xhat_sym, fx, ir, t, &ok);
    }
    if (!ok) day->gain_coef = Eigen::VectorXd::Zero(sd->links.size());
    fxsa_gain_ok_[t] = ok;

    const FxsaDay* ptr = day.get();
    fxsa_days_[t] = std::move(day);
    return ptr;
}

std::vector<const FxrpDay*> Driver::collect_fxrp(const std::vector<DateRange>& ranges,
                                                 bool with_targets, int limit_end) {
    std::vector<const FxrpDay*> out;
    for (const DateRange& r : ranges) {
        for (int t = std::max(r.begin, usable_start_); t < std::min(r.end, limit_end); ++t) {
            FxrpDay* day = const_cast<FxrpDay*>(fxrp_day(t));
            if (!day) continue;
            if (with_targets) {
                const Eigen::VectorXd* tg = fxrp_targets(t);
                if (!tg) continue;
                day->targets = *tg;
            }
            out.push_back(day);
        }
    }
    return out;
}

std::vector<const FxsaDay*> Driver::collect_fxsa(const std::vector<DateRange>& ranges, int max_t,
                                                 bool need_gain) {
    std::vector<const FxsaDay*> out;
    for (const DateRange& r : ranges) {
        for (int t = std::max(r.begin, usable_start_); t < std::min(r.end, max_t + 1); ++t) {
            const FxsaDay* day = fxsa_day(t);
            if (!day) continue;
            if (day->day->system.kernel_dim() == 0) continue;
            if (need_gain && !fxsa_gain_ok_[t]) continue;
            out.push_back(day);
        }
    }
    return out;
}

void Driver::evaluate_era(int k, const GnnParams* theta_s, BacktestReport& rep) {
    const bool want_gnn = cfg_.strategy != "lp" && theta_s != nullptr;
    const bool want_lp = cfg_.strategy != "gnn";

    EraMse era_mse;
    era_mse.k = k;

    for (int t = sched_.test_begin(k); t < sched_.test_end(k); ++t) {
        const StatArbDay* sd = sa_day(t);
        if (!sd) continue;

        // stage-1 test error on this date (evaluation only, full access)
        if (const FxrpDay* day = fxrp_day(t); day && store_.has(t)) {
            FxView fx = FxView::unrestricted(mkt_.fx);
            const Mat& xh = store_.xhat(t);
            for (size_t r = 0; r < day->target_edges.size(); ++r) {
                auto [i, j] = day->target_edges[r];
                if (!std::isfinite(xh(i, j))) continue;
                double realized = std::log(fx.rate(t, i, j));
                double zg = std::log(xh(i, j)) - realized;
                double zr = std::log(day->prev_rates[r]) - realized;
                era_mse.gnn += zg * zg;
                era_mse.random_walk += zr * zr;
                ++era_mse.n_predictions;
            }
        }

        FxView fx_eval = FxView::unrestricted(mkt_.fx);
        IrView ir_eval = IrView::unrestricted(mkt_.ir);
        IrView ir_info(mkt_.ir, t - 1);

        bool pred_ok = false;
        Eigen::VectorXd pred_coef;
        if (!sd->links.empty())
            pred_coef = predicted_gain_coefficients(sd->links, sd->xhat_sym, ir_info, t - 1,
                                                    &pred_ok);

        auto record_plan = [&](const std::string& name, const TradePlan& plan) {
            DailyRecord rec;
            rec.t = t;
            rec.refit_k = k;
            rec.strategy = name;
            rec.degenerate = plan.degenerate;
            rec.cert_weight_sum = plan.cert_weight_sum;
            rec.cert_max_direct_arb = plan.cert_max_direct_arb;
            rec.cert_max_offhome_holding = plan.cert_max_offhome_holding;
            rec.hhi = plan.hhi();
            if (!plan.degenerate) {
                RealizedDay day = realized_gain(sd->links, plan.w, sd->xhat_sym, fx_eval,
                                                ir_eval, t);
                rec.evaluable = day.evaluable;
                if (day.evaluable) {
                    rec.gain = day.gain;
                    rec.holdings_abs = day.holdings_abs;
                    rec.holdings_abs_pred = day.holdings_abs_pred;
                }
                if (pred_ok) rec.predicted_gain = pred_coef.dot(plan.w);
            } else {
                rec.evaluable = true;  // a degenerate day realizes zero gain
                rec.gain = 0.0;
            }
            rep.records.push_back(rec);
        };

        if (want_gnn) {
            const FxsaDay* fd = fxsa_day(t);
            TradePlan plan;
            if (fd && fd->day->system.kernel_dim() > 0) {
                plan = decide_trades(*theta_s, *fd, cfg_.degenerate_floor);
            } else {
                plan.links = sd->links.links;
                plan.home = mkt_.home;
                plan.w = Eigen::VectorXd::Zero(sd->links.size());
                plan.reason = "no feasible directions";
            }
            if (!plan.degenerate) {
                C1Report c1 = verify_c1(sd->links, plan.w, sd->xhat_sym);
                if (!c1.ok) ++rep.certificate_violations;
            }
            record_plan("gnn", plan);
        }
        if (want_lp) {
            TradePlan plan;
            if (!sd->links.empty()) {
                plan = arbitrage_lp(sd->links, sd->xhat_sym, ir_info, t - 1);
            } else {
                plan.home = mkt_.home;
                plan.w = Eigen::VectorXd::Zero(0);
                plan.reason = "no tradable links";
            }
            record_plan("lp", plan);
        }
    }

    if (era_mse.n_predictions > 0) {
        era_mse.gnn /= static_cast<double>(era_mse.n_predictions);
        era_mse.random_walk /= static_cast<double>(era_mse.n_predictions);
    }
    rep.fxrp_mse_by_era.push_back(era_mse);
}

BacktestReport Driver::run() {
    BacktestReport rep;
    rep.config_hash = cfg_.hash();
    rep.seed = cfg_.seed;

    const int n = mkt_.fx.n_currencies();
    std::map<int, FxrpTrained> trained_p;
    std::map<int, FxsaTrained> trained_s;

    for (int k = 1; k <= sched_.n_fit; ++k) {
        const int tk = sched_.t_k(k);

        // ---- stage 1: train f_P on [t0, t_k) ----
        const Split& ps = splits_.stage_p[static_cast<size_t>(k - 1)];
        auto train_days = collect_fxrp(ps.train, true, tk);
        auto val_days = collect_fxrp({ps.validation}, true, tk);
        if (train_days.empty()) throw std::runtime_error("refit " + std::to_string(k) +
                                                         ": no usable stage-1 training dates");
        if (val_days.empty()) throw std::runtime_error("refit " + std::to_string(k) +
                                                       ": no usable stage-1 validation dates");
        FxrpTrainConfig pc;
        pc.lr = cfg_.lr;
        pc.beta1 = cfg_.beta1;
        pc.beta2 = cfg_.beta2;
        pc.adam_eps = cfg_.adam_eps;
        pc.max_epochs = cfg_.fxrp_max_epochs;
        pc.patience = cfg_.fxrp_patience;
        pc.leaky_slope = cfg_.leaky_slope;
        pc.seed = derive_seed(cfg_.seed, 1000 + static_cast<std::uint64_t>(k));
        trained_p[k] = train_fxrp(train_days, val_days, cfg_.grid, pc, cfg_.threads);

        // ---- test-era predictions with theta_P_k ----
        for (int t = sched_.test_begin(k); t < sched_.test_end(k); ++t) {
            if (const FxrpDay* day = fxrp_day(t))
                store_.put(t, predict_day(trained_p[k].params, *day, n), k);
        }

        // ---- once all covering refits exist, stitch the pre-test era ----
        if (k == sched_.n_sy) {
            for (int t = usable_start_; t < sched_.t1(); ++t) {
                if (const FxrpDay* day = fxrp_day(t)) {
                    int kk = k_star(sched_, t);
                    store_.put(t, predict_day(trained_p[kk].params, *day, n), kk);
                }
            }
        }

        // ---- stage 2 ----
        const GnnParams* theta_s = nullptr;
        if (k >= sched_.n_sy && cfg_.strategy != "lp") {
            const Split& ss = splits_.stage_s[static_cast<size_t>(k - 1)];
            // training labels need rates at t+1 <= t_k - 1
            auto s_train = collect_fxsa(ss.train, tk - 2, true);
            auto s_val = collect_fxsa({ss.validation}, tk - 2, true);
            if (s_train.size() < 2 || s_val.size() < 2)
                throw std::runtime_error("refit " + std::to_string(k) +
                                         ": fewer than 2 evaluable stage-2 dates");
            FxsaTrainConfig sc;
            sc.lr = cfg_.lr;
            sc.beta1 = cfg_.beta1;
            sc.beta2 = cfg_.beta2;
            sc.adam_eps = cfg_.adam_eps;
            sc.leaky_slope = cfg_.leaky_slope;
            sc.max_epochs = cfg_.fxsa_max_epochs;
            sc.patience = cfg_.fxsa_patience;
            sc.batch_size = cfg_.batch_size;
            sc.eps_var = cfg_.epsilon_var;
            sc.degenerate_floor = cfg_.degenerate_floor;
            sc.seed = derive_seed(cfg_.seed, 2000 + static_cast<std::uint64_t>(k));
            trained_s[k] = train_fxsa(s_train, s_val, cfg_.grid, sc);
            theta_s = &trained_s[k].params;
        }

        // ---- daily evaluation on the era ----
        evaluate_era(k, theta_s, rep);
    }
    rep.predictions = store_;

    // ---- summaries ----
    for (const char* name : {"gnn", "lp"}) {
        std::vector<double> gains, hold, hhi;
        std::vector<DatedValue> gain_series, hold_series;
        StrategySummary sum;
        for (const DailyRecord& r : rep.records) {
            if (r.strategy != name || !r.evaluable) continue;
            ++sum.evaluated_days;
            if (r.degenerate) ++sum.degenerate_days;
            gains.push_back(r.gain);
            gain_series.push_back({mkt_.calendar.date(r.t), r.gain});
            if (!r.degenerate) {
                hold.push_back(r.holdings_abs);
                hold_series.push_back({mkt_.calendar.date(r.t), r.holdings_abs});
                hhi.push_back(r.hhi);
            }
        }
        if (sum.evaluated_days == 0) continue;
        sum.ir = information_ratio(gains, cfg_.annualization);
        sum.sortino = sortino_ratio(gains, cfg_.annualization);
        sum.ann_return = annual_return(gains, cfg_.annualization);
        sum.ann_vol = annual_volatility(gains, cfg_.annualization);
        sum.mdd = max_drawdown(gains);
        sum.mean_holdings =
            hold.empty() ? 0.0
                         : std::accumulate(hold.begin(), hold.end(), 0.0) /
                               static_cast<double>(hold.size());
        sum.mean_hhi = hhi.empty() ? 0.0
                                   : std::accumulate(hhi.begin(), hhi.end(), 0.0) /
                                         static_cast<double>(hhi.size());
        rep.summary[name] = sum;

        auto ir_roll = rolling_metric(gain_series, information_ratio, cfg_.annualization, 365);
        auto mean_metric = +[](const std::vector<double>& v, double) {
            MetricValue m;
            if (v.empty()) return m;
            m.value = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            m.defined = true;
            return m;
        };
        auto hold_roll = rolling_metric(hold_series, mean_metric, cfg_.annualization, 365);
        for (size_t i = 0; i < gain_series.size(); ++i)
            rep.rolling_ir[name].emplace_back(gain_series[i].date, ir_roll[i]);
        for (size_t i = 0; i < hold_series.size(); ++i)
            rep.rolling_holdings[name].emplace_back(hold_series[i].date, hold_roll[i]);
    }
    return rep;
}

}  // namespace

BacktestReport run_walk_forward(const RunConfig& cfg, const MarketData& mkt) {
    Driver driver(cfg, mkt);
    return driver.run();
}

// ------------------------------------------------------------
// Report files
// ------------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt(const MetricValue& m) { return m.defined ? fmt(m.value) : "NA"; }

}  // namespace

std::vector<std::string> write_report(const BacktestReport& rep, const RunConfig& cfg,
                                      const MarketData& mkt, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> written;

    auto open = [&](const std::string& name) {
        std::string path = out_dir + "/" + name;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + path);
        f << "# config_hash=" << rep.config_hash << "\n# seed=" << rep.seed << "\n";
        written.push_back(path);
        return f;
    };

    {
        auto f = open("summary.csv");
        f << "strategy,days,degenerate_days,information_ratio,sortino,annual_return,"
             "annual_vol,mdd,mean_holdings,mean_hhi\n";
        for (const auto& [name, s] : rep.summary) {
            f << name << "," << s.evaluated_days << "," << s.degenerate_days << ","
              << fmt(s.ir) << "," << fmt(s.sortino) << "," << fmt(s.ann_return) << ","
              << fmt(s.ann_vol) << "," << fmt(s.mdd) << "," << fmt(s.mean_holdings) << ","
              << fmt(s.mean_hhi) << "\n";
        }
        f << "# certificate_violations=" << rep.certificate_violations << "\n";
    }
    {
        auto f = open("daily.csv");
        f << "t,date,strategy,k,evaluable,degenerate,gain,holdings_abs,holdings_abs_pred,"
             "hhi,predicted_gain,cert_weight_sum,cert_max_direct_arb,cert_max_offhome\n";
        for (const DailyRecord& r : rep.records) {
            f << r.t << "," << mkt.calendar.date(r.t).iso() << "," << r.strategy << ","
              << r.refit_k << "," << (r.evaluable ? 1 : 0) << "," << (r.degenerate ? 1 : 0)
              << "," << fmt(r.gain) << "," << fmt(r.holdings_abs) << ","
              << fmt(r.holdings_abs_pred) << "," << fmt(r.hhi) << "," << fmt(r.predicted_gain)
              << "," << fmt(r.cert_weight_sum) << "," << fmt(r.cert_max_direct_arb) << ","
              << fmt(r.cert_max_offhome_holding) << "\n";
        }
    }
    for (const auto& [name, series] : rep.rolling_ir) {
        auto f = open("rolling_ir_" + name + ".csv");
        f << "date,rolling_ir\n";
        for (const auto& [date, m] : series) f << date.iso() << "," << fmt(m) << "\n";
    }
    for (const auto& [name, series] : rep.rolling_holdings) {
        auto f = open("rolling_holdings_" + name + ".csv");
        f << "date,rolling_holdings\n";
        for (const auto& [date, m] : series) f << date.iso() << "," << fmt(m) << "\n";
    }
    {
        auto f = open("fxrp_mse.csv");
        f << "k,gnn_mse,random_walk_mse,n_predictions\n";
        for (const EraMse& e : rep.fxrp_mse_by_era)
            f << e.k << "," << fmt(e.gnn) << "," << fmt(e.random_walk) << ","
              << e.n_predictions << "\n";
    }
    {
        auto f = open("predictions.csv");
        f << "t,base,quote,xhat,provenance_k\n";
        f << rep.predictions.serialize(mkt.fx.currencies());
    }
    {
        // exact copy of the canonical config for provenance
        std::string path = out_dir + "/run_config.echo";
        std::ofstream f(path, std::ios::binary);
        f << cfg.canonical();
        written.push_back(path);
    }
    return written;
}

}  // namespace fxarb
