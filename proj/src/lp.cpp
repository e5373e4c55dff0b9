#include "fxarb/lp.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace fxarb {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr int kMaxIterations = 100000;

// Tableau rows: 0..m-1 constraints, row m = objective (minimization form).
struct Tableau {
    Mat d;                   // (m+1) x (n+1); last column = rhs
    std::vector<int> basis;  // basic variable per constraint row
    int m, n;
};

// One Bland-rule pivot round; returns false when optimal, throws on breakdown.
bool pivot_once(Tableau& tab, bool& unbounded) {
    int enter = -1;
    for (int j = 0; j < tab.n; ++j) {
        if (tab.d(tab.m, j) < -kPivotTol) {
            enter = j;
            break;  // Bland: lowest index
        }
    }
    if (enter < 0) return false;  // optimal

    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < tab.m; ++i) {
        if (tab.d(i, enter) > kPivotTol) {
            double ratio = tab.d(i, tab.n) / tab.d(i, enter);
            if (leave < 0 || ratio < best_ratio - kPivotTol ||
                (std::abs(ratio - best_ratio) <= kPivotTol &&
                 tab.basis[static_cast<size_t>(i)] < tab.basis[static_cast<size_t>(leave)])) {
                leave = i;
                best_ratio = ratio;
            }
        }
    }
    if (leave < 0) {
        unbounded = true;
        return false;
    }

    double piv = tab.d(leave, enter);
    tab.d.row(leave) /= piv;
    for (int i = 0; i <= tab.m; ++i) {
        if (i == leave) continue;
        double f = tab.d(i, enter);
        if (f != 0.0) tab.d.row(i) -= f * tab.d.row(leave);
    }
    tab.basis[static_cast<size_t>(leave)] = enter;
    return true;
}

SimplexStatus run_simplex(Tableau& tab, int* iterations) {
    bool unbounded = false;
    int it = 0;
    while (pivot_once(tab, unbounded)) {
        if (++it > kMaxIterations) return SimplexStatus::breakdown;
    }
    *iterations += it;
    return unbounded ? SimplexStatus::unbounded : SimplexStatus::optimal;
}

}  // namespace

SimplexResult simplex_solve(const LpProblem& p) {
    SimplexResult res;
    const int n = static_cast<int>(p.c.size());
    const int m = static_cast<int>(p.b_eq.size());
    if (p.a_eq.rows() != m || p.a_eq.cols() != n)
        throw std::invalid_argument("LP dimensions inconsistent");
    if (!p.c.allFinite() || !p.a_eq.allFinite() || !p.b_eq.allFinite())
        throw std::invalid_argument("LP entries must be finite");

    // ---- phase 1: minimize the sum of artificials ----
    Tableau tab;
    tab.m = m;
    tab.n = n + m;
    tab.d = Mat::Zero(m + 1, tab.n + 1);
    for (int i = 0; i < m; ++i) {
        double sign = p.b_eq(i) >= 0 ? 1.0 : -1.0;
        tab.d.block(i, 0, 1, n) = sign * p.a_eq.row(i);
        tab.d(i, n + i) = 1.0;
        tab.d(i, tab.n) = sign * p.b_eq(i);
        tab.basis.push_back(n + i);
    }
    // phase-1 cost row: sum of artificial rows, negated into reduced costs
    for (int i = 0; i < m; ++i) tab.d.row(m) -= tab.d.row(i);
    tab.d.block(m, n, 1, m).setZero();  // artificial columns carry zero reduced cost

    res.iterations = 0;
    SimplexStatus s1 = run_simplex(tab, &res.iterations);
    if (s1 == SimplexStatus::breakdown) {
        res.status = SimplexStatus::breakdown;
        res.diagnostics = "phase-1 iteration cap";
        return res;
    }
    double phase1 = -tab.d(m, tab.n);
    if (phase1 > 1e-7) {
        res.status = SimplexStatus::infeasible;
        return res;
    }

    // drive remaining artificials out of the basis
    for (int i = 0; i < m; ++i) {
        if (tab.basis[static_cast<size_t>(i)] < n) continue;
        int enter = -1;
        for (int j = 0; j < n; ++j) {
            if (std::abs(tab.d(i, j)) > kPivotTol) {
                enter = j;
                break;
            }
        }
        if (enter < 0) continue;  // redundant row; harmless to leave
        double piv = tab.d(i, enter);
        tab.d.row(i) /= piv;
        for (int r = 0; r <= m; ++r) {
            if (r == i) continue;
            double f = tab.d(r, enter);
            if (f != 0.0) tab.d.row(r) -= f * tab.d.row(i);
        }
        tab.basis[static_cast<size_t>(i)] = enter;
    }

    // ---- phase 2 on the original (maximization) objective ----
    Tableau t2;
    t2.m = m;
    t2.n = n;
    t2.d = Mat::Zero(m + 1, n + 1);
    t2.d.block(0, 0, m, n) = tab.d.block(0, 0, m, n);
    t2.d.col(n).head(m) = tab.d.col(tab.n).head(m);
    t2.basis = tab.basis;
    // minimize -c.x
    for (int j = 0; j < n; ++j) t2.d(m, j) = -p.c(j);
    // make reduced costs of basic columns zero
    for (int i = 0; i < m; ++i) {
        int b = t2.basis[static_cast<size_t>(i)];
        if (b < n && std::abs(t2.d(m, b)) > 0.0) t2.d.row(m) -= t2.d(m, b) * t2.d.row(i);
    }

    SimplexStatus s2 = run_simplex(t2, &res.iterations);
    if (s2 == SimplexStatus::breakdown) {
        res.status = SimplexStatus::breakdown;
        res.diagnostics = "phase-2 iteration cap";
        return res;
    }
    if (s2 == SimplexStatus::unbounded) {
        res.status = SimplexStatus::unbounded;
        return res;
    }

    res.x = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i) {
        int b = t2.basis[static_cast<size_t>(i)];
        if (b < n) res.x(b) = t2.d(i, n);
    }
    // clamp pivot dust
    for (int j = 0; j < n; ++j)
        if (res.x(j) < 0.0 && res.x(j) > -1e-9) res.x(j) = 0.0;
    res.objective = p.c.dot(res.x);
    res.feasibility_residual = (p.a_eq * res.x - p.b_eq).lpNorm<Eigen::Infinity>();
    res.status = res.feasibility_residual <= 1e-9 * std::max(1.0, p.b_eq.lpNorm<Eigen::Infinity>())
                     ? SimplexStatus::optimal
                     : SimplexStatus::breakdown;
    if (res.status == SimplexStatus::breakdown) res.diagnostics = "feasibility residual too large";
    return res;
}

std::string lp_debug_dump(const LpProblem& p) {
    std::ostringstream os;
    os << "maximize\n ";
    for (int j = 0; j < p.c.size(); ++j) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), " %+.12g x%d", p.c(j), j);
        os << buf;
    }
    os << "\nsubject to\n";
    for (int i = 0; i < p.a_eq.rows(); ++i) {
        os << " ";
        for (int j = 0; j < p.a_eq.cols(); ++j) {
            char buf[48];
            std::snprintf(buf, sizeof(buf), " %+.12g x%d", p.a_eq(i, j), j);
            os << buf;
        }
        char rhs[40];
        std::snprintf(rhs, sizeof(rhs), " = %.12g\n", p.b_eq(i));
        os << rhs;
    }
    os << "bounds\n x >= 0\n";
    return os.str();
}

TradePlan arbitrage_lp(const TradableLinks& links, const Mat& xhat_sym, const IrView& ir,
                       int t_ir, double* predicted_value) {
    TradePlan plan;
    plan.links = links.links;
    plan.home = links.home;
    plan.w = Eigen::VectorXd::Zero(links.size());
    if (predicted_value) *predicted_value = 0.0;
    if (links.empty()) {
        plan.reason = "no tradable links";
        return plan;
    }

    bool ok = false;
    Eigen::VectorXd obj = predicted_gain_coefficients(links, xhat_sym, ir, t_ir, &ok);
    if (!ok) {
        plan.reason = "missing IR estimate";
        return plan;
    }

    const int m_links = links.size();
    const int o = links.home;
    auto xh = [&](int a, int b) { return a == b ? 1.0 : xhat_sym(a, b); };

    std::vector<int> touched = links.touched_currencies();
    std::vector<int> offhome;
    for (int i : touched)
        if (i != o) offhome.push_back(i);

    LpProblem p;
    p.c = obj;
    p.a_eq = Mat::Zero(static_cast<int>(offhome.size()) + 1, m_links);
    p.b_eq = Eigen::VectorXd::Zero(static_cast<int>(offhome.size()) + 1);
    for (size_t r = 0; r < offhome.size(); ++r) {
        int i = offhome[r];
        for (size_t k = 0; k < links.links.size(); ++k) {
            auto [a, b] = links.links[k];
            double coef = 0.0;
            if (a == i) coef -= xh(o, a);
            if (b == i) coef += xh(a, b) * xh(o, a);
            p.a_eq(static_cast<int>(r), static_cast<int>(k)) = coef;
        }
    }
    p.a_eq.row(static_cast<int>(offhome.size())).setOnes();
    p.b_eq(static_cast<int>(offhome.size())) = 1.0;

    SimplexResult res = simplex_solve(p);
    if (res.status != SimplexStatus::optimal) {
        plan.reason = res.status == SimplexStatus::infeasible ? "LP infeasible"
                       : res.status == SimplexStatus::unbounded ? "LP unbounded"
                                                                : "LP breakdown";
        return plan;
    }

    plan.degenerate = false;
    plan.w = res.x;
    plan.cert_weight_sum = plan.w.sum();
    plan.cert_max_direct_arb = 0.0;
    for (size_t k = 0; k < links.links.size(); ++k) {
        auto [i, j] = links.links[k];
        if (i > j) continue;
        int back = links.find(j, i);
        plan.cert_max_direct_arb =
            std::max(plan.cert_max_direct_arb, plan.w(static_cast<int>(k)) * plan.w(back));
    }
    Eigen::VectorXd h = holdings_hat(links, plan.w, xhat_sym);
    plan.cert_max_offhome_holding = 0.0;
    for (int i = 0; i < links.n_currencies; ++i)
        if (i != o) plan.cert_max_offhome_holding = std::max(plan.cert_max_offhome_holding,
                                                             std::abs(h(i)));
    if (predicted_value) *predicted_value = res.objective;
    return plan;
}

}  // namespace fxarb
