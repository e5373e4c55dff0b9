// Command-line workbench: synthetic data generation, ingestion, stage-1
// training, walk-forward backtests and the invariant battery.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fxarb/backtest.hpp"
#include "fxarb/verify.hpp"

namespace fs = std::filesystem;
using namespace fxarb;

namespace {

// flag > environment > config file
void apply_env_overrides(RunConfig& cfg) {
    if (const char* v = std::getenv("FXARB_SEED")) cfg.seed = std::strtoull(v, nullptr, 10);
    if (const char* v = std::getenv("FXARB_OUT")) cfg.out_dir = v;
    if (const char* v = std::getenv("FXARB_THREADS")) cfg.threads = std::atoi(v);
    if (const char* v = std::getenv("FXARB_STRATEGY")) cfg.strategy = v;
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    int threads = -1;
    std::string strategy;
};

RunConfig load_config(const CommonArgs& args) {
    RunConfig cfg = args.config_path.empty() ? RunConfig{} : RunConfig::parse_file(args.config_path);
    apply_env_overrides(cfg);
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.threads >= 0) cfg.threads = args.threads;
    if (!args.strategy.empty()) cfg.strategy = args.strategy;
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key = value config file");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "master seed");
    cmd->add_option("--threads", args.threads, "parallelism degree (0 = cores)");
}

// removes partial outputs when a command fails mid-way
class OutputGuard {
public:
    void track(const std::vector<std::string>& paths) {
        for (const auto& p : paths) paths_.push_back(p);
    }
    void track(const std::string& path) { paths_.push_back(path); }
    void commit() { paths_.clear(); }
    ~OutputGuard() {
        for (const auto& p : paths_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

private:
    std::vector<std::string> paths_;
};

int cmd_synth(const RunConfig& cfg) {
    SyntheticConfig sc = cfg.synth;
    sc.seed = cfg.seed;
    SyntheticMarket mkt = generate_synthetic(sc);
    fs::create_directories(cfg.out_dir);
    OutputGuard guard;

    std::string fx_path = cfg.out_dir + "/fx.csv";
    std::string ir_path = cfg.out_dir + "/ir.csv";
    guard.track(fx_path);
    guard.track(ir_path);

    std::ofstream fx(fx_path, std::ios::binary);
    fx << "date,base,quote,rate\n";
    char buf[40];
    for (int t = 1; t <= mkt.calendar.size(); ++t) {
        for (int i = 0; i < mkt.fx.n_currencies(); ++i) {
            for (int j = 0; j < mkt.fx.n_currencies(); ++j) {
                if (i == j || !mkt.fx.has(t, i, j)) continue;
                std::snprintf(buf, sizeof(buf), "%.17g", mkt.fx.rate(t, i, j));
                fx << mkt.calendar.date(t).iso() << "," << mkt.fx.currencies()[i] << ","
                   << mkt.fx.currencies()[j] << "," << buf << "\n";
            }
        }
    }
    std::ofstream ir(ir_path, std::ios::binary);
    ir << "date,currency,maturity_years,rate\n";
    for (int t = 1; t <= mkt.calendar.size(); ++t) {
        for (int i = 0; i < mkt.ir.n_currencies(); ++i) {
            for (size_t m = 0; m < IrPanel::kMaturities.size(); ++m) {
                if (!mkt.ir.has(t, i, static_cast<int>(m))) continue;
                std::snprintf(buf, sizeof(buf), "%.17g", mkt.ir.rate(t, i, static_cast<int>(m)));
                ir << mkt.calendar.date(t).iso() << "," << mkt.ir.currencies()[i] << ","
                   << IrPanel::kMaturities[m] << "," << buf << "\n";
            }
        }
    }
    guard.commit();
    std::cout << "wrote " << fx_path << " and " << ir_path << " (" << mkt.calendar.size()
              << " trading days)\n";
    return 0;
}

int cmd_ingest(const RunConfig& cfg) {
    MarketData mkt = prepare_market(cfg);
    fs::create_directories(cfg.out_dir);
    OutputGuard guard;
    std::string log_path = cfg.out_dir + "/cleaning_log.csv";
    guard.track(log_path);
    std::ofstream log(log_path, std::ios::binary);
    log << "# config_hash=" << cfg.hash() << "\n# seed=" << cfg.seed << "\n";
    log << "t,field,action,value\n" << mkt.cleaning_log.to_lines();
    guard.commit();
    std::cout << "panels: " << mkt.fx.n_currencies() << " currencies x "
              << mkt.fx.n_dates() << " days; cleaning actions: "
              << mkt.cleaning_log.actions.size() << "\n"
              << "wrote " << log_path << "\n";
    return 0;
}

int cmd_train_fxrp(const RunConfig& cfg) {
    MarketData mkt = prepare_market(cfg);
    FitSchedule sched = build_schedule(mkt.calendar, cfg.schedule);
    SplitSpec splits = make_splits(sched, cfg.val_fraction);
    ValueCache values(mkt.fx.n_currencies());

    fs::create_directories(cfg.out_dir);
    OutputGuard guard;
    std::string table_path = cfg.out_dir + "/fxrp_validation.csv";
    guard.track(table_path);
    std::ofstream table(table_path, std::ios::binary);
    table << "# config_hash=" << cfg.hash() << "\n# seed=" << cfg.seed << "\n";
    table << "k,budget,layers,validation_mse,selected\n";

    const int usable_start = cfg.windows.max() + 2;
    for (int k = 1; k <= sched.n_fit; ++k) {
        const Split& ps = splits.stage_p[static_cast<size_t>(k - 1)];
        std::vector<FxrpDay> storage;
        auto build_range = [&](const std::vector<DateRange>& ranges) {
            std::vector<FxrpDay> out;
            for (const DateRange& r : ranges) {
                for (int t = std::max(r.begin, usable_start); t < r.end; ++t) {
                    FxView fx(mkt.fx, t, t);  // training: labels at t are known
                    FxView shadow(mkt.fx_shadow, t - 1, t);
                    IrView ir(mkt.ir, t - 1);
                    auto day = build_fxrp_day(fx, ir, shadow, values, t, cfg.windows, true);
                    if (day) out.push_back(std::move(*day));
                }
            }
            return out;
        };
        auto train_store = build_range(ps.train);
        auto val_store = build_range({ps.validation});
        std::vector<const FxrpDay*> train_days, val_days;
        for (const auto& d : train_store) train_days.push_back(&d);
        for (const auto& d : val_store) val_days.push_back(&d);
        if (train_days.empty() || val_days.empty())
            throw std::runtime_error("refit " + std::to_string(k) + ": no usable dates");

        FxrpTrainConfig pc;
        pc.lr = cfg.lr;
        pc.beta1 = cfg.beta1;
        pc.beta2 = cfg.beta2;
        pc.adam_eps = cfg.adam_eps;
        pc.max_epochs = cfg.fxrp_max_epochs;
        pc.patience = cfg.fxrp_patience;
        pc.leaky_slope = cfg.leaky_slope;
        pc.seed = derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(k));
        FxrpTrained trained = train_fxrp(train_days, val_days, cfg.grid, pc, cfg.threads);

        for (size_t gi = 0; gi < trained.validation_table.size(); ++gi) {
            const auto& [gp, mse] = trained.validation_table[gi];
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", mse);
            table << k << "," << gp.param_budget << "," << gp.layers << "," << buf << ","
                  << (static_cast<int>(gi) == trained.grid_index ? 1 : 0) << "\n";
        }
        std::string ckpt_path = cfg.out_dir + "/fxrp_k" + std::to_string(k) + ".ckpt";
        guard.track(ckpt_path);
        std::ofstream ckpt(ckpt_path, std::ios::binary);
        ckpt << save_checkpoint(trained.params, pc.seed);
        std::cout << "refit " << k << ": validation MSE " << trained.validation_mse << " -> "
                  << ckpt_path << "\n";
    }
    guard.commit();
    return 0;
}

int cmd_backtest(const RunConfig& cfg) {
    MarketData mkt = prepare_market(cfg);
    BacktestReport rep = run_walk_forward(cfg, mkt);
    OutputGuard guard;
    guard.track(write_report(rep, cfg, mkt, cfg.out_dir));
    guard.commit();
    for (const auto& [name, s] : rep.summary) {
        std::cout << name << ": days=" << s.evaluated_days
                  << " IR=" << (s.ir.defined ? std::to_string(s.ir.value) : "NA")
                  << " sortino=" << (s.sortino.defined ? std::to_string(s.sortino.value) : "NA")
                  << " mdd=" << s.mdd << " mean_hhi=" << s.mean_hhi
                  << " mean_holdings=" << s.mean_holdings << "\n";
    }
    std::cout << "certificate violations: " << rep.certificate_violations << "\n";
    return rep.certificate_violations == 0 ? 0 : 1;
}

int cmd_verify(const RunConfig& cfg) {
    VerifyOptions opts;
    opts.seed = cfg.seed;
    std::vector<VerifyResult> results = run_verification_battery(opts);
    bool all_ok = true;
    for (const auto& r : results) {
        std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name;
        if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
        std::cout << "\n";
        all_ok = all_ok && r.passed;
    }
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FX graph-learning statistical-arbitrage workbench"};
    app.require_subcommand(1);

    CommonArgs args;
    auto* synth = app.add_subcommand("synth", "generate synthetic market data files");
    add_common(synth, args);
    auto* ingest = app.add_subcommand("ingest", "load, symmetrize and clean panels");
    add_common(ingest, args);
    auto* train = app.add_subcommand("train-fxrp", "train stage-1 models per refit");
    add_common(train, args);
    auto* backtest = app.add_subcommand("backtest", "run the two-stage walk-forward");
    add_common(backtest, args);
    backtest->add_option("--strategy", args.strategy, "gnn, lp or both");
    auto* verify = app.add_subcommand("verify", "run the invariant battery");
    add_common(verify, args);

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(args);
        if (synth->parsed()) return cmd_synth(cfg);
        if (ingest->parsed()) return cmd_ingest(cfg);
        if (train->parsed()) return cmd_train_fxrp(cfg);
        if (backtest->parsed()) return cmd_backtest(cfg);
        if (verify->parsed()) return cmd_verify(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
