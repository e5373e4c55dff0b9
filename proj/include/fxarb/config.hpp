#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fxarb/fxrp.hpp"
#include "fxarb/graph.hpp"
#include "fxarb/panels.hpp"
#include "fxarb/synthetic.hpp"

namespace fxarb {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat `key = value` text config with mandatory schema versioning.
// Unknown keys are errors.
struct RunConfig {
    int schema_version = 1;
    std::string mode = "synthetic";  // synthetic | files
    std::string fx_path, ir_path;
    Date calendar_start{2010, 1, 1};
    Date calendar_end{2024, 12, 31};
    std::string home = "C00";

    SyntheticConfig synth;
    CleaningConfig cleaning;
    ScheduleConfig schedule{2015, RefitFrequency::quarterly, 8, 2, 0.5};
    double val_fraction = 0.2;
    LookbackWindows windows;
    std::vector<GridPoint> grid{{10000, 2}};

    // training
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    double leaky_slope = 0.01;
    int fxrp_max_epochs = 500;
    int fxrp_patience = 20;
    int fxsa_max_epochs = 50;
    int fxsa_patience = 10;
    int batch_size = 64;

    // statarb
    double epsilon_s = 1e-8;
    double epsilon_var = 1e-12;
    double degenerate_floor = 1e-12;

    double annualization = 252.0;
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = hardware default
    std::string out_dir = "out";
    std::string strategy = "both";  // gnn | lp | both

    static RunConfig parse(const std::string& text);
    static RunConfig parse_file(const std::string& path);
    void validate() const;

    // stable serialization used for hashing and provenance
    std::string canonical() const;
    std::uint64_t hash() const;
};

std::uint64_t fnv1a(const std::string& data);

}  // namespace fxarb
