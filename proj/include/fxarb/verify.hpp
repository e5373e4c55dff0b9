#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fxarb/statarb.hpp"

namespace fxarb {

struct VerifyOptions {
    std::uint64_t seed = 1;
    int n_systems = 1000;      // random constraint systems
    int n_plans = 1000;        // random non-degenerate plans
    int n_lp_instances = 200;  // random small LPs vs vertex enumeration
};

struct VerifyResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

// Constraint, projection, Proposition-1, gradient, loss and LP checks.
// Each property prints one pass/fail line through the CLI.
std::vector<VerifyResult> run_verification_battery(const VerifyOptions& opts);

// Random constraint-system generator shared by the battery and tests.
struct RandomSystem {
    TradableLinks links;
    Mat xhat;
    ConstraintSystem system;
};
RandomSystem random_constraint_system(std::uint64_t seed, int n_currencies);

// Brute-force LP oracle: enumerate basic solutions of {A x = b, x >= 0}.
// Returns false when no feasible basic solution exists.
bool enumerate_lp_optimum(const Eigen::VectorXd& c, const Mat& a, const Eigen::VectorXd& b,
                          double* best_value);

}  // namespace fxarb
