#include "fxarb/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fxarb {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(trim(tok));
    return out;
}

long to_long(const std::string& v, const std::string& key) {
    try {
        size_t pos;
        long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw ConfigError("bad integer for " + key + ": '" + v + "'");
    }
}

double to_double(const std::string& v, const std::string& key) {
    try {
        size_t pos;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw ConfigError("bad number for " + key + ": '" + v + "'");
    }
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig cfg;
    bool saw_version = false;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));

        if (key == "schema_version") {
            if (to_long(val, key) != 1)
                throw ConfigError("unsupported schema_version " + val);
            saw_version = true;
        } else if (key == "mode") {
            if (val != "synthetic" && val != "files")
                throw ConfigError("mode must be synthetic or files");
            cfg.mode = val;
        } else if (key == "fx_path") {
            cfg.fx_path = val;
        } else if (key == "ir_path") {
            cfg.ir_path = val;
        } else if (key == "calendar_start") {
            cfg.calendar_start = Date::parse_iso(val);
        } else if (key == "calendar_end") {
            cfg.calendar_end = Date::parse_iso(val);
        } else if (key == "home") {
            cfg.home = val;
        } else if (key == "synth.currencies") {
            cfg.synth.n_currencies = static_cast<int>(to_long(val, key));
        } else if (key == "synth.days") {
            cfg.synth.n_days = static_cast<int>(to_long(val, key));
        } else if (key == "synth.sigma_alpha") {
            cfg.synth.sigma_alpha = to_double(val, key);
        } else if (key == "synth.signal_strength") {
            cfg.synth.signal_strength = to_double(val, key);
        } else if (key == "synth.ir_level") {
            cfg.synth.ir_level = to_double(val, key);
        } else if (key == "synth.ir_vol") {
            cfg.synth.ir_vol = to_double(val, key);
        } else if (key == "synth.missing_prob") {
            cfg.synth.missing_prob = to_double(val, key);
        } else if (key == "synth.start") {
            cfg.synth.start = Date::parse_iso(val);
        } else if (key == "clean.fx_ffill_limit") {
            cfg.cleaning.fx_ffill_limit = static_cast<int>(to_long(val, key));
        } else if (key == "clean.ir_ffill_limit") {
            cfg.cleaning.ir_ffill_limit = static_cast<int>(to_long(val, key));
        } else if (key == "clean.scale_factors") {
            cfg.cleaning.scale_factors.clear();
            if (!val.empty())
                for (const auto& tok : split(val, ','))
                    cfg.cleaning.scale_factors.push_back(to_double(tok, key));
        } else if (key == "clean.outlier_rule") {
            // pair,from,to,lo,hi  (lo/hi may be "-" for unbounded)
            auto parts = split(val, ',');
            if (parts.size() != 5) throw ConfigError("outlier_rule needs pair,from,to,lo,hi");
            auto pair = split(parts[0], '/');
            if (pair.size() != 2) throw ConfigError("outlier_rule pair must be BASE/QUOTE");
            OutlierRule r;
            r.base = pair[0];
            r.quote = pair[1];
            r.from = Date::parse_iso(parts[1]);
            r.to = Date::parse_iso(parts[2]);
            if (parts[3] != "-") r.lo = to_double(parts[3], key);
            if (parts[4] != "-") r.hi = to_double(parts[4], key);
            cfg.cleaning.outlier_rules.push_back(r);
        } else if (key == "schedule.start_year") {
            cfg.schedule.start_year = static_cast<int>(to_long(val, key));
        } else if (key == "schedule.frequency") {
            if (val == "quarterly")
                cfg.schedule.frequency = RefitFrequency::quarterly;
            else if (val == "monthly")
                cfg.schedule.frequency = RefitFrequency::monthly;
            else
                throw ConfigError("schedule.frequency must be quarterly or monthly");
        } else if (key == "schedule.n_fit") {
            cfg.schedule.n_fit = static_cast<int>(to_long(val, key));
        } else if (key == "schedule.n_sy") {
            cfg.schedule.n_sy = static_cast<int>(to_long(val, key));
        } else if (key == "schedule.t_exec") {
            cfg.schedule.t_exec = to_double(val, key);
        } else if (key == "val_fraction") {
            cfg.val_fraction = to_double(val, key);
        } else if (key == "windows") {
            cfg.windows.windows.clear();
            for (const auto& tok : split(val, ','))
                cfg.windows.windows.push_back(static_cast<int>(to_long(tok, key)));
        } else if (key == "grid") {
            cfg.grid.clear();
            for (const auto& tok : split(val, ',')) {
                auto parts = split(tok, ':');
                if (parts.size() != 2) throw ConfigError("grid entries are budget:layers");
                cfg.grid.push_back({to_long(parts[0], key),
                                    static_cast<int>(to_long(parts[1], key))});
            }
        } else if (key == "train.lr") {
            cfg.lr = to_double(val, key);
        } else if (key == "train.beta1") {
            cfg.beta1 = to_double(val, key);
        } else if (key == "train.beta2") {
            cfg.beta2 = to_double(val, key);
        } else if (key == "train.adam_eps") {
            cfg.adam_eps = to_double(val, key);
        } else if (key == "train.leaky_slope") {
            cfg.leaky_slope = to_double(val, key);
        } else if (key == "train.fxrp_max_epochs") {
            cfg.fxrp_max_epochs = static_cast<int>(to_long(val, key));
        } else if (key == "train.fxrp_patience") {
            cfg.fxrp_patience = static_cast<int>(to_long(val, key));
        } else if (key == "train.fxsa_max_epochs") {
            cfg.fxsa_max_epochs = static_cast<int>(to_long(val, key));
        } else if (key == "train.fxsa_patience") {
            cfg.fxsa_patience = static_cast<int>(to_long(val, key));
        } else if (key == "train.batch_size") {
            cfg.batch_size = static_cast<int>(to_long(val, key));
        } else if (key == "statarb.epsilon_s") {
            cfg.epsilon_s = to_double(val, key);
        } else if (key == "statarb.epsilon_var") {
            cfg.epsilon_var = to_double(val, key);
        } else if (key == "statarb.degenerate_floor") {
            cfg.degenerate_floor = to_double(val, key);
        } else if (key == "report.annualization") {
            cfg.annualization = to_double(val, key);
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(to_long(val, key));
        } else if (key == "threads") {
            cfg.threads = static_cast<int>(to_long(val, key));
        } else if (key == "out_dir") {
            cfg.out_dir = val;
        } else if (key == "strategy") {
            if (val != "gnn" && val != "lp" && val != "both")
                throw ConfigError("strategy must be gnn, lp or both");
            cfg.strategy = val;
        } else {
            throw ConfigError("unknown config key '" + key + "' (line " +
                              std::to_string(line_no) + ")");
        }
    }
    if (!saw_version) throw ConfigError("config must declare schema_version = 1");
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

void RunConfig::validate() const {
    if (mode == "files" && (fx_path.empty() || ir_path.empty()))
        throw ConfigError("files mode requires fx_path and ir_path");
    windows.validate();
    if (grid.empty()) throw ConfigError("hyperparameter grid must not be empty");
    for (const auto& g : grid) {
        if (g.param_budget < 10) throw ConfigError("grid budget too small");
        if (g.layers < 1) throw ConfigError("grid layers must be >= 1");
    }
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw ConfigError("val_fraction must lie in (0,1)");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
    if (!(epsilon_s > 0.0)) throw ConfigError("epsilon_s must be positive");
    if (epsilon_var < 0.0 || degenerate_floor < 0.0)
        throw ConfigError("floors must be non-negative");
    if (fxrp_max_epochs < 1 || fxsa_max_epochs < 1) throw ConfigError("epochs must be >= 1");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    if (cleaning.fx_ffill_limit < 0 || cleaning.ir_ffill_limit < 0)
        throw ConfigError("forward-fill limits must be >= 0");
}

std::string RunConfig::canonical() const {
    std::ostringstream os;
    char buf[48];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    os << "schema_version = 1\n";
    os << "mode = " << mode << "\n";
    if (!fx_path.empty()) os << "fx_path = " << fx_path << "\n";
    if (!ir_path.empty()) os << "ir_path = " << ir_path << "\n";
    os << "calendar_start = " << calendar_start.iso() << "\n";
    os << "calendar_end = " << calendar_end.iso() << "\n";
    os << "home = " << home << "\n";
    os << "synth.currencies = " << synth.n_currencies << "\n";
    os << "synth.days = " << synth.n_days << "\n";
    os << "synth.sigma_alpha = " << num(synth.sigma_alpha) << "\n";
    os << "synth.signal_strength = " << num(synth.signal_strength) << "\n";
    os << "synth.ir_level = " << num(synth.ir_level) << "\n";
    os << "synth.ir_vol = " << num(synth.ir_vol) << "\n";
    os << "synth.missing_prob = " << num(synth.missing_prob) << "\n";
    os << "synth.start = " << synth.start.iso() << "\n";
    os << "clean.fx_ffill_limit = " << cleaning.fx_ffill_limit << "\n";
    os << "clean.ir_ffill_limit = " << cleaning.ir_ffill_limit << "\n";
    if (!cleaning.scale_factors.empty()) {
        os << "clean.scale_factors = ";
        for (size_t k = 0; k < cleaning.scale_factors.size(); ++k)
            os << (k ? "," : "") << num(cleaning.scale_factors[k]);
        os << "\n";
    }
    for (const auto& r : cleaning.outlier_rules) {
        os << "clean.outlier_rule = " << r.base << "/" << r.quote << "," << r.from.iso() << ","
           << r.to.iso() << ",";
        os << (std::isfinite(r.lo) ? num(r.lo) : std::string("-")) << ",";
        os << (std::isfinite(r.hi) ? num(r.hi) : std::string("-")) << "\n";
    }
    os << "schedule.start_year = " << schedule.start_year << "\n";
    os << "schedule.frequency = "
       << (schedule.frequency == RefitFrequency::quarterly ? "quarterly" : "monthly") << "\n";
    os << "schedule.n_fit = " << schedule.n_fit << "\n";
    os << "schedule.n_sy = " << schedule.n_sy << "\n";
    os << "schedule.t_exec = " << num(schedule.t_exec) << "\n";
    os << "val_fraction = " << num(val_fraction) << "\n";
    os << "windows = ";
    for (size_t k = 0; k < windows.windows.size(); ++k)
        os << (k ? "," : "") << windows.windows[k];
    os << "\n";
    os << "grid = ";
    for (size_t k = 0; k < grid.size(); ++k)
        os << (k ? "," : "") << grid[k].param_budget << ":" << grid[k].layers;
    os << "\n";
    os << "train.lr = " << num(lr) << "\n";
    os << "train.beta1 = " << num(beta1) << "\n";
    os << "train.beta2 = " << num(beta2) << "\n";
    os << "train.adam_eps = " << num(adam_eps) << "\n";
    os << "train.leaky_slope = " << num(leaky_slope) << "\n";
    os << "train.fxrp_max_epochs = " << fxrp_max_epochs << "\n";
    os << "train.fxrp_patience = " << fxrp_patience << "\n";
    os << "train.fxsa_max_epochs = " << fxsa_max_epochs << "\n";
    os << "train.fxsa_patience = " << fxsa_patience << "\n";
    os << "train.batch_size = " << batch_size << "\n";
    os << "statarb.epsilon_s = " << num(epsilon_s) << "\n";
    os << "statarb.epsilon_var = " << num(epsilon_var) << "\n";
    os << "statarb.degenerate_floor = " << num(degenerate_floor) << "\n";
    os << "report.annualization = " << num(annualization) << "\n";
    os << "seed = " << seed << "\n";
    os << "threads = " << threads << "\n";
    os << "out_dir = " << out_dir << "\n";
    os << "strategy = " << strategy << "\n";
    return os.str();
}

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t RunConfig::hash() const { return fnv1a(canonical()); }

}  // namespace fxarb
