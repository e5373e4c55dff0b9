#include "fxarb/verify.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include "fxarb/lp.hpp"
#include "fxarb/rng.hpp"

namespace fxarb {

RandomSystem random_constraint_system(std::uint64_t seed, int n_currencies) {
    GaussianRng rng(seed);
    RandomSystem rs;
    const int n = n_currencies;
    rs.xhat = Mat::Constant(n, n, kMissing);
    for (int i = 0; i < n; ++i) rs.xhat(i, i) = 1.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double x = std::exp(0.25 * rng.gaussian());
            rs.xhat(i, j) = x;
            rs.xhat(j, i) = 1.0 / x;
        }
    }
    LinkSet full(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) full.set(i, j);
    rs.links = tradable_links(full, full, 0);
    rs.system = build_constraints(rs.links, rs.xhat);
    return rs;
}

bool enumerate_lp_optimum(const Eigen::VectorXd& c, const Mat& a, const Eigen::VectorXd& b,
                          double* best_value) {
    const int n = static_cast<int>(c.size());
    const int m = static_cast<int>(b.size());
    bool found = false;
    double best = 0.0;

    std::vector<int> pick(static_cast<size_t>(m));
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == m) {
            Mat basis(m, m);
            for (int r = 0; r < m; ++r) basis.col(r) = a.col(pick[static_cast<size_t>(r)]);
            Eigen::FullPivLU<Mat> lu(basis);
            if (!lu.isInvertible()) return;
            Eigen::VectorXd xb = lu.solve(b);
            if ((xb.array() < -1e-9).any()) return;
            Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
            for (int r = 0; r < m; ++r) x(pick[static_cast<size_t>(r)]) = std::max(xb(r), 0.0);
            if ((a * x - b).lpNorm<Eigen::Infinity>() > 1e-7) return;
            double v = c.dot(x);
            if (!found || v > best) best = v;
            found = true;
            return;
        }
        for (int j = start; j < n; ++j) {
            pick[static_cast<size_t>(depth)] = j;
            rec(j + 1, depth + 1);
        }
    };
    if (m == 0) {
        // only x = 0 is basic
        best = 0.0;
        found = true;
    } else {
        rec(0, 0);
    }
    if (found && best_value) *best_value = best;
    return found;
}

namespace {

struct Check {
    std::string name;
    std::function<bool(std::string&)> fn;
};

bool projector_laws(const VerifyOptions& opts, std::string& detail) {
    GaussianRng rng(derive_seed(opts.seed, 11));
    double worst = 0.0;
    for (int trial = 0; trial < opts.n_systems; ++trial) {
        int n = 3 + static_cast<int>(rng.uniform() * 4.0);
        RandomSystem rs = random_constraint_system(derive_seed(opts.seed, 100 + trial), n);
        const Mat& p = rs.system.projection;
        const int m = rs.links.size();
        worst = std::max(worst, (p - p.transpose()).cwiseAbs().maxCoeff());
        worst = std::max(worst, (p * p - p).cwiseAbs().maxCoeff());
        Eigen::VectorXd u(m);
        for (int k = 0; k < m; ++k) u(k) = rng.gaussian();
        if (rs.system.a.rows() > 0)
            worst = std::max(worst, (rs.system.a * (p * u)).lpNorm<Eigen::Infinity>());
        // vectors already in the kernel are fixed points
        if (rs.system.kernel_dim() > 0) {
            Eigen::VectorXd z(rs.system.kernel_dim());
            for (int k = 0; k < rs.system.kernel_dim(); ++k) z(k) = rng.gaussian();
            Eigen::VectorXd d = rs.system.basis * z;
            worst = std::max(worst, (p * d - d).lpNorm<Eigen::Infinity>());
        }
        worst = std::max(worst,
                         (rs.system.basis.transpose() * rs.system.basis -
                          Mat::Identity(rs.system.kernel_dim(), rs.system.kernel_dim()))
                             .cwiseAbs()
                             .maxCoeff());
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max residual %.3g", worst);
    detail = buf;
    return worst < 1e-10;
}

bool hso_guarantee(const VerifyOptions& opts, std::string& detail) {
    GaussianRng rng(derive_seed(opts.seed, 21));
    int checked = 0;
    double worst_sum = 0.0, worst_h = 0.0;
    int trial = 0;
    while (checked < opts.n_plans) {
        int n = 3 + static_cast<int>(rng.uniform() * 4.0);
        RandomSystem rs = random_constraint_system(derive_seed(opts.seed, 5000 + trial), n);
        ++trial;
        Eigen::VectorXd u(rs.links.size());
        for (int k = 0; k < rs.links.size(); ++k) u(k) = rng.gaussian();
        TradePlan plan = h_so(rs.system, u, rs.xhat);
        if (plan.degenerate) continue;
        ++checked;
        worst_sum = std::max(worst_sum, std::abs(plan.w.sum() - 1.0));
        if (plan.w.minCoeff() < 0.0) {
            detail = "negative weight";
            return false;
        }
        if (plan.cert_max_direct_arb != 0.0) {
            detail = "direct-arbitrage product not exactly zero";
            return false;
        }
        worst_h = std::max(worst_h, plan.cert_max_offhome_holding);
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "sum err %.3g, max |H| %.3g over %d plans", worst_sum,
                  worst_h, checked);
    detail = buf;
    return worst_sum < 1e-12 && worst_h < 1e-9;
}

bool prop1_round_trip(const VerifyOptions& opts, std::string& detail) {
    GaussianRng rng(derive_seed(opts.seed, 31));
    int checked = 0, trial = 0;
    double worst_w = 0.0, worst_row = 0.0;
    while (checked < opts.n_plans) {
        int n = 3 + static_cast<int>(rng.uniform() * 4.0);
        RandomSystem rs = random_constraint_system(derive_seed(opts.seed, 9000 + trial), n);
        ++trial;
        Eigen::VectorXd u(rs.links.size());
        for (int k = 0; k < rs.links.size(); ++k) u(k) = rng.gaussian();
        TradePlan plan = h_so(rs.system, u, rs.xhat);
        if (plan.degenerate) continue;
        ++checked;
        Eigen::VectorXd u2 = c1_to_u(rs.links, plan.w, rs.xhat);
        if (rs.system.a.rows() > 0)
            worst_row = std::max(worst_row, (rs.system.a * u2).lpNorm<Eigen::Infinity>());
        TradePlan plan2 = h_so(rs.system, u2, rs.xhat);
        if (plan2.degenerate) {
            detail = "round trip degenerated";
            return false;
        }
        worst_w = std::max(worst_w, (plan2.w - plan.w).lpNorm<Eigen::Infinity>());
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "plan err %.3g, row err %.3g over %d plans", worst_w,
                  worst_row, checked);
    detail = buf;
    return worst_w < 1e-12 && worst_row < 1e-10;
}

bool homogeneity(const VerifyOptions& opts, std::string& detail) {
    GaussianRng rng(derive_seed(opts.seed, 41));
    for (int trial = 0; trial < 100; ++trial) {
        RandomSystem rs = random_constraint_system(derive_seed(opts.seed, 4000 + trial), 4);
        Eigen::VectorXd u(rs.links.size());
        for (int k = 0; k < rs.links.size(); ++k) u(k) = rng.gaussian();
        TradePlan a = h_so(rs.system, u, rs.xhat);
        TradePlan b = h_so(rs.system, (4.0 * u).eval(), rs.xhat);  // power of two: exact
        if (a.degenerate != b.degenerate) {
            detail = "scaling flipped degeneracy";
            return false;
        }
        if (!a.degenerate && (a.w - b.w).lpNorm<Eigen::Infinity>() != 0.0) {
            detail = "power-of-two scaling changed weights";
            return false;
        }
        TradePlan c = h_so(rs.system, (3.7 * u).eval(), rs.xhat);
        if (!a.degenerate && (a.w - c.w).lpNorm<Eigen::Infinity>() > 1e-12) {
            detail = "general positive scaling moved weights beyond 1e-12";
            return false;
        }
    }
    return true;
}

bool loss_cases(const VerifyOptions&, std::string& detail) {
    double l1 = fxsa_loss(batch_stats({0.01, 0.03}));
    double l2 = fxsa_loss(batch_stats({-0.01, -0.03}));
    double l3 = fxsa_loss(batch_stats({0.0, 0.0}));
    double b1 = fxsa_loss(batch_stats({1e-6 + 0.01, 1e-6 - 0.01}));
    double b2 = fxsa_loss(batch_stats({-1e-6 + 0.01, -1e-6 - 0.01}));
    char buf[96];
    std::snprintf(buf, sizeof(buf), "loss values %.17g / %.17g / %.3g", l1, l2, l3);
    detail = buf;
    return std::abs(l1 - (-2.0)) < 1e-12 && std::abs(l2 - 0.02) < 1e-12 && l3 == 0.0 &&
           std::abs(b1) <= 1e-4 && std::abs(b2) <= 1e-4;
}

double fd_relative_error(std::function<double(double)> f, double at, double analytic) {
    const double h = 1e-5;
    double fd = (f(at + h) - f(at - h)) / (2 * h);
    double denom = std::max({1e-8, std::abs(fd), std::abs(analytic)});
    return std::abs(fd - analytic) / denom;
}

bool gradient_stage1(const VerifyOptions& opts, std::string& detail) {
    GaussianRng rng(derive_seed(opts.seed, 51));
    GnnGraph g;
    const int n_nodes = 5, nd = 4, ed = 3;
    g.node_feats.resize(n_nodes, nd);
    for (int i = 0; i < n_nodes; ++i)
        for (int c = 0; c < nd; ++c) g.node_feats(i, c) = rng.gaussian();
    for (int i = 0; i < n_nodes; ++i)
        for (int j = 0; j < n_nodes; ++j)
            if (i != j && rng.uniform() < 0.7) {
                g.src.push_back(i);
                g.dst.push_back(j);
            }
    g.edge_feats.resize(static_cast<int>(g.src.size()), ed);
    for (int e = 0; e < g.n_edges(); ++e)
        for (int c = 0; c < ed; ++c) g.edge_feats(e, c) = rng.gaussian();
    Mat targets(g.n_edges(), 1);
    for (int e = 0; e < g.n_edges(); ++e) targets(e, 0) = rng.gaussian();

    GnnParams params = GnnParams::init(nd, ed, 3, 2, GnnOutput::edge, derive_seed(opts.seed, 52));
    for (Eigen::Index c = 0; c < params.head.W.cols(); ++c) params.head.W(0, c) = rng.gaussian();
    auto loss_of = [&](const GnnParams& p) {
        Tape t;
        GnnForward fw = gnn_forward(t, p, g);
        Tape::Ref diff = t.sub(fw.output, t.constant(targets));
        return t.scalar(t.scale(t.sum_all(t.mul(diff, diff)), 1.0 / g.n_edges()));
    };
    Tape t;
    GnnForward fw = gnn_forward(t, params, g);
    Tape::Ref diff = t.sub(fw.output, t.constant(targets));
    Tape::Ref loss = t.scale(t.sum_all(t.mul(diff, diff)), 1.0 / g.n_edges());
    t.backward(loss);

    double worst = 0.0;
    auto tensors = params.tensors();
    for (size_t k = 0; k < tensors.size(); ++k) {
        Mat analytic = t.grad(fw.param_refs[k]);
        for (Eigen::Index r = 0; r < tensors[k]->rows(); ++r)
            for (Eigen::Index c = 0; c < tensors[k]->cols(); ++c) {
                double* cell = &(*tensors[k])(r, c);
                double saved = *cell;
                worst = std::max(worst, fd_relative_error(
                                            [&](double v) {
                                                *cell = v;
                                                double out = loss_of(params);
                                                *cell = saved;
                                                return out;
                                            },
                                            saved, analytic(r, c)));
            }
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max rel err %.3g", worst);
    detail = buf;
    return worst < 1e-5;
}

bool gradient_stage2(const VerifyOptions& opts, std::string& detail) {
    GaussianRng rng(derive_seed(opts.seed, 61));
    // two small days with planted gains
    std::vector<StatArbDay> sa;
    std::vector<FxsaDay> days;
    LookbackWindows w;
    w.windows = {1, 2};
    for (int d = 0; d < 3; ++d) {
        StatArbDay day;
        RandomSystem rs = random_constraint_system(derive_seed(opts.seed, 700 + d), 4);
        day.t = 10 + d;
        day.links = rs.links;
        day.xhat_sym = rs.xhat;
        day.system = rs.system;
        day.alpha = arbitrage_residuals(rs.links, rs.xhat).alpha;
        sa.push_back(std::move(day));
    }
    for (int d = 0; d < 3; ++d) {
        FxsaDay fd;
        fd.day = &sa[static_cast<size_t>(d)];
        std::deque<const StatArbDay*> hist;
        for (int h = 0; h <= d; ++h) hist.push_back(&sa[static_cast<size_t>(h)]);
        fd.graph = build_statarb_graph(hist, w, 1e-8);
        fd.gain_coef.resize(sa[static_cast<size_t>(d)].links.size());
        for (int k = 0; k < fd.gain_coef.size(); ++k) fd.gain_coef(k) = 0.05 * rng.gaussian();
        days.push_back(std::move(fd));
    }
    std::vector<const FxsaDay*> ptrs{&days[0], &days[1], &days[2]};

    GnnParams params = GnnParams::init(2, 2, 3, 2, GnnOutput::node, derive_seed(opts.seed, 62));
    auto loss_of = [&](const GnnParams& p) {
        Tape t;
        FxsaBatchResult r = fxsa_batch_loss(t, p, ptrs, 1e-12, 1e-12);
        if (r.loss < 0) return 0.0;
        return t.scalar(r.loss);
    };
    Tape t;
    FxsaBatchResult r = fxsa_batch_loss(t, params, ptrs, 1e-12, 1e-12);
    if (r.loss < 0) {
        detail = "all days degenerate at the test point";
        return false;
    }
    // genericity: keep away from relu boundaries and the loss branch point
    t.backward(r.loss);

    double worst = 0.0;
    auto tensors = params.tensors();
    for (size_t k = 0; k < tensors.size(); ++k) {
        Mat analytic = t.grad_or_zero(r.forward.param_refs[k]);
        for (Eigen::Index rr = 0; rr < tensors[k]->rows(); ++rr)
            for (Eigen::Index cc = 0; cc < tensors[k]->cols(); ++cc) {
                double* cell = &(*tensors[k])(rr, cc);
                double saved = *cell;
                worst = std::max(worst, fd_relative_error(
                                            [&](double v) {
                                                *cell = v;
                                                double out = loss_of(params);
                                                *cell = saved;
                                                return out;
                                            },
                                            saved, analytic(rr, cc)));
            }
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max rel err %.3g", worst);
    detail = buf;
    return worst < 1e-5;
}

bool simplex_vs_enumeration(const VerifyOptions& opts, std::string& detail) {
    GaussianRng rng(derive_seed(opts.seed, 71));
    double worst = 0.0;
    int compared = 0;
    for (int trial = 0; trial < opts.n_lp_instances; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform() * 5.0);  // <= 6 vars
        int m = 1 + static_cast<int>(rng.uniform() * std::min(3, n - 1));
        LpProblem p;
        p.c.resize(n);
        p.a_eq.resize(m, n);
        p.b_eq.resize(m);
        for (int j = 0; j < n; ++j) p.c(j) = rng.gaussian();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) p.a_eq(i, j) = rng.gaussian();
        Eigen::VectorXd x0(n);
        for (int j = 0; j < n; ++j) x0(j) = rng.uniform();  // nonneg -> feasible rhs
        p.b_eq = p.a_eq * x0;

        double oracle = 0.0;
        bool feasible = enumerate_lp_optimum(p.c, p.a_eq, p.b_eq, &oracle);
        SimplexResult res = simplex_solve(p);
        if (!feasible) {
            if (res.status == SimplexStatus::infeasible) continue;
            detail = "oracle infeasible but simplex disagrees";
            return false;
        }
        if (res.status == SimplexStatus::unbounded) {
            // enumeration cannot certify unboundedness; skip
            continue;
        }
        if (res.status != SimplexStatus::optimal) {
            detail = "simplex failed on a feasible instance";
            return false;
        }
        ++compared;
        worst = std::max(worst, std::abs(res.objective - oracle) /
                                    std::max(1.0, std::abs(oracle)));
    }
    char buf[80];
    std::snprintf(buf, sizeof(buf), "max rel gap %.3g over %d instances", worst, compared);
    detail = buf;
    return worst < 1e-9;
}

}  // namespace

std::vector<VerifyResult> run_verification_battery(const VerifyOptions& opts) {
    std::vector<Check> checks = {
        {"projector laws (P sym/idem, A.Pu = 0, P fixes kernel)",
         [&](std::string& d) { return projector_laws(opts, d); }},
        {"h_SO constraint guarantee (sum, sign, direct-arb, holdings)",
         [&](std::string& d) { return hso_guarantee(opts, d); }},
        {"Proposition-1 round trip (plan -> u -> plan)",
         [&](std::string& d) { return prop1_round_trip(opts, d); }},
        {"h_SO positive homogeneity",
         [&](std::string& d) { return homogeneity(opts, d); }},
        {"loss hand values and branch limits",
         [&](std::string& d) { return loss_cases(opts, d); }},
        {"stage-1 gradients vs finite differences",
         [&](std::string& d) { return gradient_stage1(opts, d); }},
        {"stage-2 gradients vs finite differences",
         [&](std::string& d) { return gradient_stage2(opts, d); }},
        {"simplex vs basic-solution enumeration",
         [&](std::string& d) { return simplex_vs_enumeration(opts, d); }},
    };
    std::vector<VerifyResult> results;
    for (auto& c : checks) {
        VerifyResult r;
        r.name = c.name;
        try {
            r.passed = c.fn(r.detail);
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
        }
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace fxarb
