#pragma once

#include <string>

#include <Eigen/Dense>

#include "fxarb/statarb.hpp"

namespace fxarb {

enum class SimplexStatus { optimal, infeasible, unbounded, breakdown };

// max c.x  s.t.  A x = b, x >= 0
struct LpProblem {
    Eigen::VectorXd c;
    Mat a_eq;
    Eigen::VectorXd b_eq;
};

struct SimplexResult {
    SimplexStatus status = SimplexStatus::breakdown;
    Eigen::VectorXd x;
    double objective = 0.0;
    int iterations = 0;
    double feasibility_residual = 0.0;
    std::string diagnostics;
};

// Two-phase dense-tableau primal simplex with Bland's anti-cycling rule.
SimplexResult simplex_solve(const LpProblem& p);

// Fixed-layout LP text dump for debugging.
std::string lp_debug_dump(const LpProblem& p);

// The benchmark: maximize the predicted present-value gain subject to
// zero predicted off-home holdings, unit weight sum and nonnegativity.
// t_ir is the information date for the IR estimate (decision date - 1).
TradePlan arbitrage_lp(const TradableLinks& links, const Mat& xhat_sym, const IrView& ir,
                       int t_ir, double* predicted_value = nullptr);

}  // namespace fxarb
