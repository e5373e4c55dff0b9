// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Runtime-limited criteria carry wall-clock assertions.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "fxarb/backtest.hpp"
#include "fxarb/verify.hpp"

using namespace fxarb;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(int criterion, bool ok, const std::string& what, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion, what.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// ------------------------------------------------------------
// 1. currency-value MLE
// ------------------------------------------------------------
void criterion_1() {
    auto start = Clock::now();
    bool ok = true;
    std::string detail;

    std::vector<std::tuple<int, int, double>> rates = {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}};
    CurrencyValues cv = currency_values(rates, 3);
    ok &= std::abs(cv.log_values(0) - 2.0 / 3) < 1e-12;
    ok &= std::abs(cv.log_values(1)) < 1e-12;
    ok &= std::abs(cv.log_values(2) + 2.0 / 3) < 1e-12;
    ok &= std::abs(std::get<2>(cv.residuals[0]) - 1.0 / 3) < 1e-12;  // (0,1)
    ok &= std::abs(std::get<2>(cv.residuals[1]) + 1.0 / 3) < 1e-12;  // (0,2)
    ok &= std::abs(std::get<2>(cv.residuals[2]) - 1.0 / 3) < 1e-12;  // (1,2)

    // arbitrage-free synthetic recovery at |C| = 10 over 5000 dates
    SyntheticConfig cfg;
    cfg.n_currencies = 10;
    cfg.n_days = 5000;
    cfg.sigma_alpha = 0.0;
    cfg.signal_strength = 0.3;
    cfg.seed = 17;
    SyntheticMarket mkt = generate_synthetic(cfg);
    FxView fx = FxView::unrestricted(mkt.fx);
    auto solve_start = Clock::now();
    double worst = 0.0;
    for (int t = 1; t <= cfg.n_days; ++t) {
        CurrencyValues day = currency_values(link_log_rates(fx, t, reciprocal_links(fx, t)), 10);
        Eigen::VectorXd planted = mkt.truth.log_values.row(t - 1).transpose();
        planted.array() -= planted.mean();
        worst = std::max(worst, (day.log_values - planted).lpNorm<Eigen::Infinity>());
    }
    double solve_time = seconds_since(solve_start);
    ok &= worst < 1e-10;
    ok &= solve_time < 1.0;

    char buf[160];
    std::snprintf(buf, sizeof(buf), "recovery err %.2e, 5000 solves in %.2fs, total %.1fs",
                  worst, solve_time, seconds_since(start));
    report(1, ok, "currency-value MLE: hand triangle, synthetic recovery, runtime", buf);
}

// ------------------------------------------------------------
// 2. projection laws
// ------------------------------------------------------------
void criterion_2() {
    auto start = Clock::now();
    std::mt19937_64 pick(2024);
    double worst = 0.0;
    GaussianRng rng(55);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = 3 + static_cast<int>(pick() % 4);  // |C| in {3..6}
        RandomSystem rs = random_constraint_system(40000 + static_cast<std::uint64_t>(trial), n);
        const Mat& p = rs.system.projection;
        worst = std::max(worst, (p - p.transpose()).cwiseAbs().maxCoeff());
        worst = std::max(worst, (p * p - p).cwiseAbs().maxCoeff());
        Eigen::VectorXd u(rs.links.size());
        for (int k = 0; k < rs.links.size(); ++k) u(k) = rng.gaussian();
        worst = std::max(worst, (rs.system.a * (p * u)).lpNorm<Eigen::Infinity>());
    }
    double elapsed = seconds_since(start);
    bool ok = worst < 1e-10 && elapsed < 10.0;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "max residual %.2e over 1000 systems in %.2fs", worst,
                  elapsed);
    report(2, ok, "projection laws: symmetry, idempotence, kernel membership", buf);
}

// ------------------------------------------------------------
// 3. h_SO guarantee
// ------------------------------------------------------------
void criterion_3() {
    std::mt19937_64 pick(3030);
    GaussianRng rng(66);
    bool ok = true;
    double worst_sum = 0.0, worst_h = 0.0;
    int checked = 0, trial = 0;
    while (checked < 1000 && trial < 5000) {
        int n = 3 + static_cast<int>(pick() % 4);
        RandomSystem rs = random_constraint_system(50000 + static_cast<std::uint64_t>(trial), n);
        ++trial;
        Eigen::VectorXd u(rs.links.size());
        for (int k = 0; k < rs.links.size(); ++k) u(k) = rng.gaussian();
        TradePlan plan = h_so(rs.system, u, rs.xhat);
        if (plan.degenerate) continue;
        ++checked;
        worst_sum = std::max(worst_sum, std::abs(plan.w.sum() - 1.0));
        ok &= plan.w.minCoeff() >= 0.0;
        ok &= plan.cert_max_direct_arb == 0.0;
        worst_h = std::max(worst_h, plan.cert_max_offhome_holding);
    }
    ok &= checked == 1000 && worst_sum < 1e-12 && worst_h <= 1e-9;

    // the 3-currency unit-rate instance gives exactly the equal-thirds cycle
    LinkSet full(3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) full.set(i, j);
    TradableLinks links = tradable_links(full, full, 0);
    Mat ones = Mat::Ones(3, 3);
    ConstraintSystem sys = build_constraints(links, ones);
    Eigen::VectorXd impulse = Eigen::VectorXd::Zero(6);
    impulse(0) = 1.0;
    TradePlan cyc = h_so(sys, impulse, ones);
    ok &= !cyc.degenerate;
    ok &= std::abs(cyc.w(0) - 1.0 / 3) < 1e-12 && std::abs(cyc.w(3) - 1.0 / 3) < 1e-12 &&
          std::abs(cyc.w(4) - 1.0 / 3) < 1e-12;
    ok &= cyc.w(1) == 0.0 && cyc.w(2) == 0.0 && cyc.w(5) == 0.0;

    char buf[120];
    std::snprintf(buf, sizeof(buf), "sum err %.2e, |H| %.2e over %d plans", worst_sum, worst_h,
                  checked);
    report(3, ok, "h_SO guarantee: weights, signs, direct-arb, holdings, hand cycle", buf);
}

// ------------------------------------------------------------
// 4. Proposition-1 round trip
// ------------------------------------------------------------
void criterion_4() {
    std::mt19937_64 pick(4040);
    GaussianRng rng(77);
    bool ok = true;
    double worst_w = 0.0, worst_row = 0.0;
    int checked = 0, trial = 0;
    while (checked < 1000 && trial < 5000) {
        int n = 3 + static_cast<int>(pick() % 4);
        RandomSystem rs = random_constraint_system(60000 + static_cast<std::uint64_t>(trial), n);
        ++trial;
        Eigen::VectorXd u(rs.links.size());
        for (int k = 0; k < rs.links.size(); ++k) u(k) = rng.gaussian();
        TradePlan plan = h_so(rs.system, u, rs.xhat);
        if (plan.degenerate) continue;
        ++checked;
        Eigen::VectorXd u2 = c1_to_u(rs.links, plan.w, rs.xhat);
        worst_row = std::max(worst_row, (rs.system.a * u2).lpNorm<Eigen::Infinity>());
        TradePlan round = h_so(rs.system, u2, rs.xhat);
        ok &= !round.degenerate;
        if (!round.degenerate)
            worst_w = std::max(worst_w, (round.w - plan.w).lpNorm<Eigen::Infinity>());
    }
    ok &= checked == 1000 && worst_w < 1e-12 && worst_row < 1e-10;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "plan err %.2e, row err %.2e over %d plans", worst_w,
                  worst_row, checked);
    report(4, ok, "Proposition-1 round trip through the explicit u construction", buf);
}

// ------------------------------------------------------------
// 5. gradient correctness
// ------------------------------------------------------------
void criterion_5() {
    auto start = Clock::now();
    VerifyOptions opts;
    opts.seed = 5;
    std::string d1, d2;
    bool ok = true;
    std::vector<VerifyResult> results = run_verification_battery(opts);
    double worst = 0.0;
    for (const auto& r : results) {
        if (r.name.find("gradients") == std::string::npos) continue;
        ok &= r.passed;
        double v = 0.0;
        if (std::sscanf(r.detail.c_str(), "max rel err %lg", &v) == 1) worst = std::max(worst, v);
    }
    double elapsed = seconds_since(start);
    ok &= elapsed < 120.0;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "max rel err %.2e, %.1fs", worst, elapsed);
    report(5, ok, "finite-difference agreement through both training paths", buf);
}

// ------------------------------------------------------------
// 6. loss hand cases
// ------------------------------------------------------------
void criterion_6() {
    double l1 = fxsa_loss(batch_stats({0.01, 0.03}));
    double l2 = fxsa_loss(batch_stats({-0.01, -0.03}));
    double b1 = fxsa_loss(batch_stats({1e-6 + 0.01, 1e-6 - 0.01}));
    double b2 = fxsa_loss(batch_stats({-1e-6 + 0.01, -1e-6 - 0.01}));
    bool ok = std::abs(l1 + 2.0) < 1e-12 && std::abs(l2 - 0.02) < 1e-12 &&
              std::abs(b1) <= 1e-4 && std::abs(b2) <= 1e-4;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "loss(+)=%.17g loss(-)=%.17g branch %.2e/%.2e", l1, l2,
                  std::abs(b1), std::abs(b2));
    report(6, ok, "objective hand values and branch continuity", buf);
}

// ------------------------------------------------------------
// 7. LP benchmark
// ------------------------------------------------------------
RunConfig small_e2e_config(std::uint64_t seed) {
    RunConfig cfg = RunConfig::parse("schema_version = 1\n");
    cfg.synth.n_currencies = 6;
    cfg.synth.n_days = 560;
    cfg.synth.sigma_alpha = 0.004;
    cfg.synth.signal_strength = 0.3;
    cfg.schedule.start_year = 2011;
    cfg.schedule.frequency = RefitFrequency::monthly;
    cfg.schedule.n_fit = 3;
    cfg.schedule.n_sy = 2;
    cfg.grid = {{600, 1}};
    cfg.fxrp_max_epochs = 8;
    cfg.fxrp_patience = 8;
    cfg.fxsa_max_epochs = 3;
    cfg.fxsa_patience = 3;
    cfg.batch_size = 32;
    cfg.epsilon_s = 0.05;
    cfg.seed = seed;
    return cfg;
}

void criterion_7() {
    bool ok = true;
    std::string note;

    // simplex vs brute-force enumeration
    GaussianRng rng(70);
    double worst_gap = 0.0;
    int compared = 0;
    for (int trial = 0; trial < 300; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform() * 5.0);
        int m = 1 + static_cast<int>(rng.uniform() * std::min(3, n - 1));
        LpProblem p;
        p.c.resize(n);
        p.a_eq.resize(m, n);
        for (int j = 0; j < n; ++j) p.c(j) = rng.gaussian();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) p.a_eq(i, j) = rng.gaussian();
        Eigen::VectorXd x0(n);
        for (int j = 0; j < n; ++j) x0(j) = rng.uniform();
        p.b_eq = p.a_eq * x0;
        double oracle = 0.0;
        if (!enumerate_lp_optimum(p.c, p.a_eq, p.b_eq, &oracle)) continue;
        SimplexResult res = simplex_solve(p);
        if (res.status == SimplexStatus::unbounded) continue;
        ok &= res.status == SimplexStatus::optimal;
        worst_gap = std::max(worst_gap,
                             std::abs(res.objective - oracle) / std::max(1.0, std::abs(oracle)));
        ++compared;
    }
    ok &= worst_gap < 1e-9 && compared > 150;

    // planted 3-currency cycle
    LinkSet full(3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) full.set(i, j);
    TradableLinks links = tradable_links(full, full, 0);
    Mat x = Mat::Ones(3, 3);
    x(1, 2) = 1.01;
    x(2, 1) = 1.0 / 1.01;
    std::vector<std::string> codes{"A", "B", "C"};
    IrPanel zero_ir(codes, 2);
    for (int t = 1; t <= 2; ++t)
        for (int i = 0; i < 3; ++i)
            for (int m = 0; m < 4; ++m) zero_ir.set(t, i, m, 0.0);
    double value = 0.0;
    TradePlan cyc = arbitrage_lp(links, x, IrView::unrestricted(zero_ir), 1, &value);
    ok &= !cyc.degenerate;
    ok &= std::abs(cyc.w(0) - 1.0 / 3.01) < 1e-9 && std::abs(cyc.w(3) - 1.0 / 3.01) < 1e-9 &&
          std::abs(cyc.w(4) - 1.01 / 3.01) < 1e-9;
    ok &= std::abs(value - 0.01 / 3.01) < 1e-9;

    // per-date dominance on the shared dates of a small walk-forward
    RunConfig cfg = small_e2e_config(31);
    MarketData mkt = prepare_market(cfg);
    BacktestReport rep = run_walk_forward(cfg, mkt);
    std::map<int, double> gnn_pred, lp_pred;
    for (const DailyRecord& r : rep.records) {
        if (r.degenerate || !r.evaluable) continue;
        (r.strategy == "gnn" ? gnn_pred : lp_pred)[r.t] = r.predicted_gain;
    }
    int shared = 0, dominated = 0;
    for (const auto& [t, g] : gnn_pred) {
        auto it = lp_pred.find(t);
        if (it == lp_pred.end()) continue;
        ++shared;
        if (it->second >= g - 1e-7) ++dominated;
    }
    ok &= shared > 0 && dominated == shared;

    char buf[160];
    std::snprintf(buf, sizeof(buf), "enum gap %.2e (%d LPs), cycle value %.8f, dominance %d/%d",
                  worst_gap, compared, value, dominated, shared);
    report(7, ok, "LP benchmark: enumeration oracle, planted cycle, dominance", buf);
}

// ------------------------------------------------------------
// 8. stage-1 signal recovery
// ------------------------------------------------------------
void criterion_8() {
    auto start = Clock::now();
    int wins = 0;
    double mean_gnn = 0.0, mean_rw = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SyntheticConfig sc;
        sc.n_currencies = 10;
        sc.n_days = 3000;
        sc.sigma_alpha = 0.005;
        sc.signal_strength = 0.3;
        sc.seed = seed;
        SyntheticMarket mkt = generate_synthetic(sc);
        ValueCache values(10);
        LookbackWindows w;

        std::vector<FxrpDay> days;
        for (int t = w.max() + 2; t <= sc.n_days; ++t) {
            FxView fx(mkt.fx, t, t);
            FxView shadow(mkt.fx, t - 1, t);
            IrView ir(mkt.ir, t - 1);
            auto day = build_fxrp_day(fx, ir, shadow, values, t, w, true);
            if (day) days.push_back(std::move(*day));
        }
        auto slice = [&](size_t a, size_t b) {
            std::vector<const FxrpDay*> out;
            for (size_t k = a; k < std::min(b, days.size()); ++k) out.push_back(&days[k]);
            return out;
        };
        size_t n = days.size();
        auto train = slice(0, n * 7 / 10);
        auto val = slice(n * 7 / 10, n * 85 / 100);
        auto test = slice(n * 85 / 100, n);

        FxrpTrainConfig cfg;
        cfg.lr = 5e-3;
        cfg.max_epochs = 150;
        cfg.patience = 25;
        cfg.seed = derive_seed(seed, 808);
        std::vector<GridPoint> grid{{1500, 2}};
        FxrpTrained trained = train_fxrp(train, val, grid, cfg);

        double gnn_mse = fxrp_mse(trained.params, test);
        double rw_mse = 0.0;
        for (const FxrpDay* d : test)
            rw_mse += d->targets.squaredNorm() / static_cast<double>(d->targets.size());
        rw_mse /= static_cast<double>(test.size());
        mean_gnn += gnn_mse;
        mean_rw += rw_mse;
        if (gnn_mse < rw_mse) ++wins;
    }
    double elapsed = seconds_since(start);
    bool ok = wins >= 8 && elapsed < 600.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "wins %d/10, mean MSE %.3e vs RW %.3e, %.0fs", wins,
                  mean_gnn / 10, mean_rw / 10, elapsed);
    report(8, ok, "trained predictor beats the random walk on planted signal", buf);
}

// ------------------------------------------------------------
// 9. end-to-end walk-forward
// ------------------------------------------------------------
RunConfig e2e_config(std::uint64_t seed) {
    RunConfig cfg = RunConfig::parse("schema_version = 1\n");
    cfg.synth.n_currencies = 10;
    cfg.synth.n_days = 2000;
    cfg.synth.sigma_alpha = 0.005;
    cfg.synth.signal_strength = 0.3;
    cfg.synth.start = {2010, 1, 1};
    cfg.schedule.start_year = 2015;
    cfg.schedule.frequency = RefitFrequency::quarterly;
    cfg.schedule.n_fit = 8;
    cfg.schedule.n_sy = 2;
    cfg.grid = {{1200, 2}};  // reduced grid
    cfg.lr = 5e-3;
    cfg.fxrp_max_epochs = 30;
    cfg.fxrp_patience = 6;
    cfg.fxsa_max_epochs = 3;
    cfg.fxsa_patience = 3;
    cfg.batch_size = 64;
    cfg.epsilon_s = 0.08;
    cfg.seed = seed;
    return cfg;
}

void criterion_9() {
    auto start = Clock::now();
    int hhi_wins = 0, holdings_wins = 0, violations = 0, completed = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RunConfig cfg = e2e_config(seed);
        MarketData mkt = prepare_market(cfg);
        BacktestReport rep = run_walk_forward(cfg, mkt);
        ++completed;
        violations += rep.certificate_violations;

        // shared non-degenerate dates
        std::map<int, const DailyRecord*> gnn, lp;
        for (const DailyRecord& r : rep.records) {
            if (r.degenerate || !r.evaluable) continue;
            (r.strategy == "gnn" ? gnn : lp)[r.t] = &r;
        }
        double hhi_g = 0, hhi_l = 0, hold_g = 0, hold_l = 0;
        int shared = 0;
        for (const auto& [t, rg] : gnn) {
            auto it = lp.find(t);
            if (it == lp.end()) continue;
            ++shared;
            hhi_g += rg->hhi;
            hhi_l += it->second->hhi;
            hold_g += rg->holdings_abs;
            hold_l += it->second->holdings_abs;
        }
        if (shared > 0) {
            if (hhi_g < hhi_l) ++hhi_wins;
            if (hold_g <= hold_l) ++holdings_wins;
        }
        std::printf("    seed %llu: shared %d, mean hhi %.4f vs %.4f, mean holdings %.4f vs "
                    "%.4f, violations %d\n",
                    static_cast<unsigned long long>(seed), shared,
                    shared ? hhi_g / shared : 0.0, shared ? hhi_l / shared : 0.0,
                    shared ? hold_g / shared : 0.0, shared ? hold_l / shared : 0.0,
                    rep.certificate_violations);
        std::fflush(stdout);
    }
    double elapsed = seconds_since(start);
    bool ok = completed == 10 && violations == 0 && hhi_wins >= 7 && holdings_wins >= 7 &&
              elapsed < 1800.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "hhi wins %d/10, holdings wins %d/10, violations %d, %.0fs",
                  hhi_wins, holdings_wins, violations, elapsed);
    report(9, ok, "end-to-end walk-forward: diversification and exposure directions", buf);
}

// ------------------------------------------------------------
// 10. determinism
// ------------------------------------------------------------
void criterion_10() {
    namespace fs = std::filesystem;
    RunConfig cfg = small_e2e_config(5);
    MarketData mkt = prepare_market(cfg);
    BacktestReport rep1 = run_walk_forward(cfg, mkt);
    BacktestReport rep2 = run_walk_forward(cfg, mkt);
    fs::remove_all("/tmp/fxarb_acc_a");
    fs::remove_all("/tmp/fxarb_acc_b");
    auto f1 = write_report(rep1, cfg, mkt, "/tmp/fxarb_acc_a");
    auto f2 = write_report(rep2, cfg, mkt, "/tmp/fxarb_acc_b");
    bool ok = f1.size() == f2.size();
    int files = 0;
    for (size_t k = 0; ok && k < f1.size(); ++k) {
        ok &= slurp(f1[k]) == slurp(f2[k]);
        ++files;
    }
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%d report files byte-identical", files);
    report(10, ok, "identical config+seed reproduce byte-identical reports", buf);
}

// ------------------------------------------------------------
// 11. leakage guard
// ------------------------------------------------------------
void criterion_11() {
    bool ok = true;
    std::string note;

    // a guarded view aborts any read at or past the decision date
    SyntheticConfig sc;
    sc.n_currencies = 5;
    sc.n_days = 60;
    sc.seed = 23;
    SyntheticMarket mkt = generate_synthetic(sc);
    const int t = 40;
    FxView guarded(mkt.fx, t - 1, t);
    bool threw = false;
    try {
        (void)guarded.rate(t, 0, 1);
    } catch (const LeakError&) {
        threw = true;
    }
    ok &= threw;
    bool threw_edge = false;
    try {
        (void)guarded.tradable(t + 1, 0, 1);
    } catch (const LeakError&) {
        threw_edge = true;
    }
    ok &= threw_edge;

    // plant a sentinel at the decision date: predictions must not move
    RunConfig cfg = small_e2e_config(11);
    MarketData clean_mkt = prepare_market(cfg);
    FitSchedule sched = build_schedule(clean_mkt.calendar, cfg.schedule);
    const int target = sched.t1() + 5;
    BacktestReport clean = run_walk_forward(cfg, clean_mkt);

    MarketData poisoned = clean_mkt;
    for (int i = 0; i < poisoned.fx.n_currencies(); ++i)
        for (int j = 0; j < poisoned.fx.n_currencies(); ++j)
            if (i != j && poisoned.fx.has(target, i, j))
                poisoned.fx.set(target, i, j, poisoned.fx.rate(target, i, j) * 1e6);
    BacktestReport dirty = run_walk_forward(cfg, poisoned);

    ok &= clean.predictions.has(target) && dirty.predictions.has(target);
    if (ok) {
        const Mat& a = clean.predictions.xhat(target);
        const Mat& b = dirty.predictions.xhat(target);
        for (int i = 0; i < a.rows(); ++i)
            for (int j = 0; j < a.cols(); ++j)
                if (std::isfinite(a(i, j))) ok &= a(i, j) == b(i, j);
    }

    // feature construction that would need date-t values aborts
    ValueCache values(5);
    LookbackWindows w;
    FxView fx(mkt.fx, t - 1, t);
    IrView ir(mkt.ir, t - 1);
    bool threw_build = false;
    try {
        (void)build_fxrp_day(fx, ir, fx, values, t, w, /*with_targets=*/true);
    } catch (const LeakError&) {
        threw_build = true;
    }
    ok &= threw_build;

    report(11, ok, "access guard aborts future reads; sentinel cannot reach decisions",
           "guarded reads throw, sentinel-date predictions bit-identical");
}

}  // namespace

int main() {
    std::printf("acceptance suite\n================\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    std::printf("================\n%s (%d failing)\n", g_failures == 0 ? "ALL PASS" : "FAILURES",
                g_failures);
    return g_failures == 0 ? 0 : 1;
}
