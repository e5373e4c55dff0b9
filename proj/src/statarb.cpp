#include "fxarb/statarb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "fxarb/rng.hpp"

namespace fxarb {

// ------------------------------------------------------------
// Link sets
// ------------------------------------------------------------

std::vector<int> TradableLinks::touched_currencies() const {
    std::set<int> s{home};
    for (const auto& [i, j] : links) {
        s.insert(i);
        s.insert(j);
    }
    return {s.begin(), s.end()};
}

TradableLinks tradable_links(const LinkSet& u, const LinkSet& e, int home) {
    if (u.n != e.n) throw std::invalid_argument("link-set sizes differ");
    TradableLinks out;
    out.n_currencies = u.n;
    out.home = home;

    auto ok_u = [&](int a, int b) { return a == b ? a == home : u.has(a, b); };
    auto ok_e = [&](int a, int b) { return a == b ? a == home : e.has(a, b); };

    LinkSet kept(u.n);
    for (int i = 0; i < u.n; ++i) {
        for (int j = 0; j < u.n; ++j) {
            if (i == j || !u.has(i, j)) continue;
            if (ok_u(home, i) && ok_u(home, j) && ok_e(i, home) && ok_e(j, home))
                kept.set(i, j);
        }
    }
    // close under pair reciprocity
    for (int i = 0; i < u.n; ++i)
        for (int j = i + 1; j < u.n; ++j)
            if (kept.has(i, j) != kept.has(j, i)) {
                kept.set(i, j, false);
                kept.set(j, i, false);
            }

    out.links = kept.ordered_pairs();
    for (size_t k = 0; k < out.links.size(); ++k)
        out.index[out.links[k]] = static_cast<int>(k);
    return out;
}

// ------------------------------------------------------------
// Predictions
// ------------------------------------------------------------

SymmetrizedPredictions symmetrize_predictions(const Mat& xhat_raw) {
    if (xhat_raw.rows() != xhat_raw.cols())
        throw std::invalid_argument("prediction matrix must be square");
    const int n = static_cast<int>(xhat_raw.rows());
    SymmetrizedPredictions out;
    out.xhat = Mat::Constant(n, n, kMissing);
    for (int i = 0; i < n; ++i) out.xhat(i, i) = 1.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            bool fwd = std::isfinite(xhat_raw(i, j));
            bool bwd = std::isfinite(xhat_raw(j, i));
            if (fwd && bwd) {
                if (!(xhat_raw(i, j) > 0.0 && xhat_raw(j, i) > 0.0))
                    throw std::domain_error("non-positive prediction");
                double s = std::sqrt(xhat_raw(i, j) / xhat_raw(j, i));
                out.xhat(i, j) = s;
                out.xhat(j, i) = 1.0 / s;
            } else if (fwd || bwd) {
                ++out.dropped_single_direction;
            }
        }
    }
    return out;
}

TradableLinks restrict_links_to_predictions(const TradableLinks& links, const Mat& xhat_sym) {
    TradableLinks out;
    out.n_currencies = links.n_currencies;
    out.home = links.home;
    const int o = links.home;
    auto have = [&](int a, int b) { return a == b || std::isfinite(xhat_sym(a, b)); };
    LinkSet kept(links.n_currencies);
    for (const auto& [i, j] : links.links) {
        if (have(i, j) && have(o, i) && have(o, j)) kept.set(i, j);
    }
    for (int i = 0; i < kept.n; ++i)
        for (int j = i + 1; j < kept.n; ++j)
            if (kept.has(i, j) != kept.has(j, i)) {
                kept.set(i, j, false);
                kept.set(j, i, false);
            }
    out.links = kept.ordered_pairs();
    for (size_t k = 0; k < out.links.size(); ++k)
        out.index[out.links[k]] = static_cast<int>(k);
    return out;
}

// ------------------------------------------------------------
// Constraint system
// ------------------------------------------------------------

ConstraintSystem build_constraints(const TradableLinks& links, const Mat& xhat_sym) {
    ConstraintSystem sys;
    sys.links = links;
    const int m = links.size();
    if (m == 0) {
        sys.a.resize(0, 0);
        sys.basis.resize(0, 0);
        sys.projection.resize(0, 0);
        return sys;
    }
    const int o = links.home;
    auto xh = [&](int a, int b) {
        double v = xhat_sym(a, b);
        if (!std::isfinite(v)) throw std::invalid_argument("prediction missing for link rate");
        return v;
    };

    std::vector<int> touched = links.touched_currencies();
    std::vector<Eigen::RowVectorXd> rows;

    // flow conservation per non-home currency
    for (int i : touched) {
        if (i == o) continue;
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(m);
        bool any = false;
        for (size_t k = 0; k < links.links.size(); ++k) {
            if (links.links[k].first == i) {
                row(static_cast<int>(k)) = 1.0;
                any = true;
            }
        }
        if (any) rows.push_back(row);
    }
    // direct-arbitrage symmetry per unordered pair
    for (size_t k = 0; k < links.links.size(); ++k) {
        auto [i, j] = links.links[k];
        if (i > j) continue;
        int back = links.find(j, i);
        if (back < 0) throw std::logic_error("link set not closed under reciprocity");
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(m);
        row(static_cast<int>(k)) = xh(o, i);
        row(back) = xh(o, j) * xh(j, i);
        rows.push_back(row);
    }

    sys.a.resize(static_cast<int>(rows.size()), m);
    for (size_t r = 0; r < rows.size(); ++r) sys.a.row(static_cast<int>(r)) = rows[r];

    double max_row_norm = 0.0;
    for (Eigen::Index r = 0; r < sys.a.rows(); ++r)
        max_row_norm = std::max(max_row_norm, sys.a.row(r).norm());

    if (sys.a.rows() == 0 || max_row_norm == 0.0) {
        sys.basis = Mat::Identity(m, m);
    } else {
        Eigen::JacobiSVD<Mat> svd(sys.a, Eigen::ComputeFullV);
        const double tol = 1e-10 * max_row_norm;
        int rank = 0;
        for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k)
            if (svd.singularValues()(k) > tol) ++rank;
        sys.basis = svd.matrixV().rightCols(m - rank);
    }
    sys.projection = sys.basis * sys.basis.transpose();
    // exact symmetry (P is mathematically symmetric; make it bitwise so)
    sys.projection = ((sys.projection + sys.projection.transpose()) / 2.0).eval();
    return sys;
}

// ------------------------------------------------------------
// h_SO and plan certificates
// ------------------------------------------------------------

Eigen::VectorXd holdings_hat(const TradableLinks& links, const Eigen::VectorXd& w,
                             const Mat& xhat_sym) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(links.n_currencies);
    const int o = links.home;
    auto xh = [&](int a, int b) { return a == b ? 1.0 : xhat_sym(a, b); };
    for (size_t k = 0; k < links.links.size(); ++k) {
        auto [i, j] = links.links[k];
        double wk = w(static_cast<int>(k));
        h(i) -= xh(o, i) * wk;
        h(j) += xh(i, j) * xh(o, i) * wk;
    }
    return h;
}

TradePlan h_so(const ConstraintSystem& sys, const Eigen::VectorXd& u_raw, const Mat& xhat_sym,
               double degenerate_floor) {
    TradePlan plan;
    plan.links = sys.links.links;
    plan.home = sys.links.home;
    const int m = sys.links.size();
    plan.w = Eigen::VectorXd::Zero(m);
    if (m == 0 || sys.kernel_dim() == 0) {
        plan.reason = "empty feasible direction space";
        return plan;
    }
    if (u_raw.size() != m) throw std::invalid_argument("raw output size mismatch");
    if (!u_raw.allFinite()) throw std::invalid_argument("raw outputs must be finite");

    Eigen::VectorXd u = sys.projection * u_raw;

    // The symmetry rows force u_ij * u_ji <= 0 in exact arithmetic; numerical
    // noise can leave both marginally positive. Zero the smaller so the
    // direct-arbitrage certificate holds exactly.
    for (size_t k = 0; k < sys.links.links.size(); ++k) {
        auto [i, j] = sys.links.links[k];
        if (i > j) continue;
        int back = sys.links.find(j, i);
        double& a = u(static_cast<int>(k));
        double& b = u(back);
        if (a > 0.0 && b > 0.0) {
            (a < b ? a : b) = 0.0;
            ++plan.relu_boundary_hits;
        }
    }

    for (int k = 0; k < m; ++k)
        if (u(k) == 0.0) ++plan.relu_boundary_hits;

    Eigen::VectorXd upos = u.cwiseMax(0.0);
    double total = upos.sum();
    if (total <= degenerate_floor) {
        plan.reason = "projected outputs have no positive mass";
        return plan;
    }
    plan.degenerate = false;
    plan.w = upos / total;
    plan.cert_weight_sum = plan.w.sum();
    plan.cert_max_direct_arb = 0.0;
    for (size_t k = 0; k < sys.links.links.size(); ++k) {
        auto [i, j] = sys.links.links[k];
        if (i > j) continue;
        int back = sys.links.find(j, i);
        plan.cert_max_direct_arb = std::max(
            plan.cert_max_direct_arb, plan.w(static_cast<int>(k)) * plan.w(back));
    }
    Eigen::VectorXd h = holdings_hat(sys.links, plan.w, xhat_sym);
    plan.cert_max_offhome_holding = 0.0;
    for (int i = 0; i < sys.links.n_currencies; ++i)
        if (i != sys.links.home)
            plan.cert_max_offhome_holding = std::max(plan.cert_max_offhome_holding,
                                                     std::abs(h(i)));
    return plan;
}

// ------------------------------------------------------------
// Realized evaluation
// ------------------------------------------------------------

RealizedDay realized_gain(const TradableLinks& links, const Eigen::VectorXd& w,
                          const Mat& xhat_sym, const FxView& fx, const IrView& ir, int t) {
    RealizedDay day;
    const int n = links.n_currencies;
    const int o = links.home;
    day.holdings = Eigen::VectorXd::Zero(n);
    if (t + 1 > fx.n_dates()) {
        day.reason = "no next-day rates";
        return day;
    }
    auto xh = [&](int a, int b) { return a == b ? 1.0 : xhat_sym(a, b); };

    for (size_t k = 0; k < links.links.size(); ++k) {
        auto [i, j] = links.links[k];
        double wk = w(static_cast<int>(k));
        double x_t = fx.rate(t, i, j);
        if (!std::isfinite(x_t)) {
            day.reason = "missing same-day rate on a traded link";
            return day;
        }
        day.holdings(i) -= xh(o, i) * wk;
        day.holdings(j) += x_t * xh(o, i) * wk;
    }

    double y_o = ir.daily_rate(t, o);
    if (!std::isfinite(y_o)) {
        day.reason = "missing home daily rate";
        return day;
    }
    double gain = 0.0, habs = 0.0, habs_pred = 0.0;
    Eigen::VectorXd hhat = holdings_hat(links, w, xhat_sym);
    for (int i = 0; i < n; ++i) {
        if (day.holdings(i) == 0.0 && hhat(i) == 0.0) continue;
        double y_i = ir.daily_rate(t, i);
        double x_next = i == o ? 1.0 : fx.rate(t + 1, i, o);
        double x_now = i == o ? 1.0 : fx.rate(t, i, o);
        if (!std::isfinite(y_i) || !std::isfinite(x_next) || !std::isfinite(x_now)) {
            day.reason = "missing realized rate for held currency " + std::to_string(i);
            return day;
        }
        gain += (1.0 + y_i) / (1.0 + y_o) * x_next * day.holdings(i);
        habs += std::abs(day.holdings(i) * x_now);
        habs_pred += std::abs(hhat(i) * xh(i, o));
    }
    day.gain = gain;
    day.holdings_abs = habs;
    day.holdings_abs_pred = habs_pred;
    day.evaluable = true;
    return day;
}

Eigen::VectorXd realized_gain_coefficients(const TradableLinks& links, const Mat& xhat_sym,
                                           const FxView& fx, const IrView& ir, int t, bool* ok) {
    const int m = links.size();
    const int o = links.home;
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(m);
    *ok = false;
    if (t + 1 > fx.n_dates()) return coef;
    double y_o = ir.daily_rate(t, o);
    if (!std::isfinite(y_o)) return coef;

    auto gamma = [&](int i, bool* g_ok) {
        double y_i = ir.daily_rate(t, i);
        double x_next = i == o ? 1.0 : fx.rate(t + 1, i, o);
        if (!std::isfinite(y_i) || !std::isfinite(x_next)) {
            *g_ok = false;
            return 0.0;
        }
        return (1.0 + y_i) / (1.0 + y_o) * x_next;
    };
    auto xh = [&](int a, int b) { return a == b ? 1.0 : xhat_sym(a, b); };

    bool good = true;
    std::map<int, double> g;
    for (int i : links.touched_currencies()) g[i] = gamma(i, &good);
    if (!good) return coef;

    for (size_t k = 0; k < links.links.size(); ++k) {
        auto [i, j] = links.links[k];
        double x_t = fx.rate(t, i, j);
        if (!std::isfinite(x_t)) return coef;
        coef(static_cast<int>(k)) = xh(o, i) * (g[j] * x_t - g[i]);
    }
    *ok = true;
    return coef;
}

Eigen::VectorXd predicted_gain_coefficients(const TradableLinks& links, const Mat& xhat_sym,
                                            const IrView& ir, int t_ir, bool* ok) {
    const int m = links.size();
    const int o = links.home;
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(m);
    *ok = false;
    double y_o = ir.daily_rate(t_ir, o);
    if (!std::isfinite(y_o)) return coef;
    auto xh = [&](int a, int b) { return a == b ? 1.0 : xhat_sym(a, b); };

    std::map<int, double> g;
    for (int i : links.touched_currencies()) {
        double y_i = ir.daily_rate(t_ir, i);
        if (!std::isfinite(y_i)) return coef;
        g[i] = (1.0 + y_i) / (1.0 + y_o) * xh(i, o);
    }
    for (size_t k = 0; k < links.links.size(); ++k) {
        auto [i, j] = links.links[k];
        coef(static_cast<int>(k)) = xh(o, i) * (g[j] * xh(i, j) - g[i]);
    }
    *ok = true;
    return coef;
}

// ------------------------------------------------------------
// Loss
// ------------------------------------------------------------

BatchStats batch_stats(const std::vector<double>& gains) {
    if (gains.size() < 2) throw std::invalid_argument("batch needs at least 2 gains");
    BatchStats s;
    s.gains = Eigen::Map<const Eigen::VectorXd>(gains.data(),
                                                static_cast<Eigen::Index>(gains.size()));
    s.mu = s.gains.mean();
    s.sigma2 = (s.gains.array() - s.mu).square().sum() /
               (static_cast<double>(gains.size()) - 1.0);
    return s;
}

double fxsa_loss(const BatchStats& stats, double eps_var) {
    if (stats.mu > 0.0) return -(stats.mu * stats.mu) / std::max(stats.sigma2, eps_var);
    return -stats.mu;
}

Tape::Ref fxsa_loss_tape(Tape& t, Tape::Ref gains, double eps_var) {
    const Eigen::Index n = t.val(gains).rows();
    if (n < 2) throw std::invalid_argument("batch needs at least 2 gains");
    Tape::Ref mean = t.scale(t.sum_all(gains), 1.0 / static_cast<double>(n));
    if (t.scalar(mean) > 0.0) {
        Tape::Ref centered = t.sub_scalar(gains, mean);
        Tape::Ref var = t.scale(t.sum_all(t.mul(centered, centered)),
                                1.0 / (static_cast<double>(n) - 1.0));
        Tape::Ref denom = t.scalar(var) > eps_var ? var : t.constant(Mat::Constant(1, 1, eps_var));
        return t.scale(t.div_scalar(t.mul(mean, mean), denom), -1.0);
    }
    return t.scale(mean, -1.0);
}

// ------------------------------------------------------------
// Proposition-1 verifiers
// ------------------------------------------------------------

C1Report verify_c1(const TradableLinks& links, const Eigen::VectorXd& w, const Mat& xhat_sym,
                   double tol_sum, double tol_holding) {
    C1Report rep;
    rep.weight_sum_err = std::abs(w.sum() - 1.0);
    rep.min_weight = w.size() > 0 ? w.minCoeff() : 0.0;
    rep.max_direct_arb = 0.0;
    for (size_t k = 0; k < links.links.size(); ++k) {
        auto [i, j] = links.links[k];
        if (i > j) continue;
        int back = links.find(j, i);
        rep.max_direct_arb =
            std::max(rep.max_direct_arb, std::abs(w(static_cast<int>(k)) * w(back)));
    }
    Eigen::VectorXd h = holdings_hat(links, w, xhat_sym);
    rep.max_offhome_holding = 0.0;
    for (int i = 0; i < links.n_currencies; ++i)
        if (i != links.home)
            rep.max_offhome_holding = std::max(rep.max_offhome_holding, std::abs(h(i)));

    double scale = 1.0;
    for (const auto& [i, j] : links.links) scale = std::max(scale, std::abs(xhat_sym(i, j)));

    if (rep.weight_sum_err > tol_sum)
        rep.violation = "weight sum differs from 1";
    else if (rep.min_weight < 0.0)
        rep.violation = "negative weight";
    else if (rep.max_direct_arb != 0.0)
        rep.violation = "direct-arbitrage pair active";
    else if (rep.max_offhome_holding > tol_holding * scale)
        rep.violation = "non-zero expected off-home holding";
    rep.ok = rep.violation.empty();
    return rep;
}

Eigen::VectorXd c1_to_u(const TradableLinks& links, const Eigen::VectorXd& w,
                        const Mat& xhat_sym) {
    const int o = links.home;
    auto xh = [&](int a, int b) { return a == b ? 1.0 : xhat_sym(a, b); };
    Eigen::VectorXd u = Eigen::VectorXd::Zero(links.size());
    for (size_t k = 0; k < links.links.size(); ++k) {
        auto [i, j] = links.links[k];
        double wij = w(static_cast<int>(k));
        if (wij > 0.0) {
            u(static_cast<int>(k)) = wij;
        } else {
            int back = links.find(j, i);
            u(static_cast<int>(k)) = -(xh(o, j) * xh(j, i) / xh(o, i)) * w(back);
        }
    }
    return u;
}

// ------------------------------------------------------------
// Arbitrage residuals and the exchange graph
// ------------------------------------------------------------

ArbResiduals arbitrage_residuals(const TradableLinks& links, const Mat& xhat_sym) {
    std::vector<std::tuple<int, int, double>> rates;
    for (const auto& [i, j] : links.links) {
        if (i < j) rates.emplace_back(i, j, std::log(xhat_sym(i, j)));
    }
    CurrencyValues cv = currency_values(rates, links.n_currencies);
    ArbResiduals out;
    out.log_v = cv.log_values;
    out.alpha.resize(links.size());
    for (size_t k = 0; k < links.links.size(); ++k) {
        auto [i, j] = links.links[k];
        out.alpha(static_cast<int>(k)) =
            std::log(xhat_sym(i, j)) - (cv.log_values(i) - cv.log_values(j));
    }
    return out;
}

StatArbGraph build_statarb_graph(const std::deque<const StatArbDay*>& history,
                                 const LookbackWindows& w, double eps_s) {
    if (history.empty()) throw std::invalid_argument("empty history");
    if (!(eps_s > 0.0)) throw std::invalid_argument("eps_s must be positive");
    w.validate();
    const StatArbDay& today = *history.back();
    const int t = today.t;
    const int nw = w.count();
    const int wmax = w.max();
    const int m = today.links.size();

    StatArbGraph g;
    g.exchanges = today.links.links;
    g.node_feats.setZero(m, nw);
    // relevant history slice: dates in [t - wmax + 1, t]
    std::vector<const StatArbDay*> span;
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
        if ((*it)->t < t - wmax + 1) break;
        span.push_back(*it);  // descending t
    }

    // node features: window averages of alpha where the link exists
    for (int k = 0; k < m; ++k) {
        const auto link = g.exchanges[static_cast<size_t>(k)];
        // per history day (descending): alpha or NaN
        std::vector<double> series;
        series.reserve(span.size());
        std::vector<int> ages;
        for (const StatArbDay* d : span) {
            int idx = d->links.find(link.first, link.second);
            series.push_back(idx >= 0 ? d->alpha(idx) : kMissing);
            ages.push_back(t - d->t);  // 0 = today
        }
        for (int wi = 0; wi < nw; ++wi) {
            const int spanw = w.windows[static_cast<size_t>(wi)];
            double sum = 0.0;
            int cnt = 0;
            for (size_t s = 0; s < series.size(); ++s) {
                if (ages[s] >= spanw) break;
                if (std::isfinite(series[s])) {
                    sum += series[s];
                    ++cnt;
                }
            }
            if (cnt > 0)
                g.node_feats(k, wi) = sum / cnt;
            else
                ++g.absent_feature_flags;
        }
    }

    // edges: current projection entries above threshold
    const Mat& proj = today.system.projection;
    std::vector<std::array<int, 2>> edges;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            if (std::abs(proj(a, b)) > eps_s) edges.push_back({a, b});

    g.edge_feats.setZero(static_cast<int>(edges.size()), nw);
    g.src.reserve(edges.size());
    g.dst.reserve(edges.size());
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto link_a = g.exchanges[static_cast<size_t>(edges[e][0])];
        const auto link_b = g.exchanges[static_cast<size_t>(edges[e][1])];
        g.src.push_back(edges[e][0]);
        g.dst.push_back(edges[e][1]);
        std::vector<double> series;
        std::vector<int> ages;
        for (const StatArbDay* d : span) {
            int ia = d->links.find(link_a.first, link_a.second);
            int ib = d->links.find(link_b.first, link_b.second);
            series.push_back(ia >= 0 && ib >= 0 ? d->system.projection(ia, ib) : kMissing);
            ages.push_back(t - d->t);
        }
        for (int wi = 0; wi < nw; ++wi) {
            const int spanw = w.windows[static_cast<size_t>(wi)];
            double sum = 0.0;
            int cnt = 0;
            for (size_t s = 0; s < series.size(); ++s) {
                if (ages[s] >= spanw) break;
                if (std::isfinite(series[s])) {
                    sum += series[s];
                    ++cnt;
                }
            }
            if (cnt > 0)
                g.edge_feats(static_cast<int>(e), wi) = sum / cnt;
            else
                ++g.absent_feature_flags;
        }
    }
    return g;
}

// ------------------------------------------------------------
// Differentiable batch objective
// ------------------------------------------------------------

namespace {
GnnGraph to_gnn_graph(const StatArbGraph& g) {
    GnnGraph out;
    out.node_feats = g.node_feats;
    out.edge_feats = g.edge_feats;
    out.src = g.src;
    out.dst = g.dst;
    return out;
}
}  // namespace

FxsaBatchResult fxsa_batch_loss(Tape& t, const GnnParams& p,
                                const std::vector<const FxsaDay*>& days, double eps_var,
                                double degenerate_floor) {
    if (days.empty()) throw std::invalid_argument("empty batch");
    if (p.mode != GnnOutput::node)
        throw std::invalid_argument("stage-2 model must emit per-node outputs");
    FxsaBatchResult res;

    // assemble one block graph
    GnnGraph big;
    std::vector<int> offsets{0};
    int node_off = 0;
    long total_edges = 0;
    long total_nodes = 0;
    for (const FxsaDay* d : days) {
        total_edges += static_cast<long>(d->graph.src.size());
        total_nodes += d->graph.node_feats.rows();
    }
    big.node_feats.resize(total_nodes, p.scaler.node_mean.cols());
    big.edge_feats.resize(total_edges, p.scaler.edge_mean.cols());
    big.src.reserve(static_cast<size_t>(total_edges));
    big.dst.reserve(static_cast<size_t>(total_edges));

    long edge_off = 0;
    for (const FxsaDay* d : days) {
        const int nn = static_cast<int>(d->graph.node_feats.rows());
        big.node_feats.middleRows(node_off, nn) = d->graph.node_feats;
        const int ne = static_cast<int>(d->graph.edge_feats.rows());
        big.edge_feats.middleRows(edge_off, ne) = d->graph.edge_feats;
        for (int e = 0; e < ne; ++e) {
            big.src.push_back(d->graph.src[static_cast<size_t>(e)] + node_off);
            big.dst.push_back(d->graph.dst[static_cast<size_t>(e)] + node_off);
        }
        node_off += nn;
        edge_off += ne;
        offsets.push_back(node_off);
    }

    res.forward = gnn_forward(t, p, big);

    // per-day projection (constant in backprop: depends on predictions only)
    std::vector<Mat> blocks;
    blocks.reserve(days.size());
    for (const FxsaDay* d : days) blocks.push_back(d->day->system.projection);
    Tape::Ref u = t.apply_block_const(res.forward.output, std::move(blocks), offsets);
    Tape::Ref upos = t.relu(u);
    Tape::Ref sums = t.segment_sum_rows(upos, offsets);

    // identify degenerate days; give them a harmless denominator
    const int n_days = static_cast<int>(days.size());
    Mat denom_fix = Mat::Zero(n_days, 1);
    std::vector<int> keep;
    for (int d = 0; d < n_days; ++d) {
        if (t.val(sums)(d, 0) <= degenerate_floor) {
            denom_fix(d, 0) = 1.0;
            ++res.degenerate_days;
        } else {
            keep.push_back(d);
        }
    }
    res.evaluable_days = static_cast<int>(keep.size());
    if (res.evaluable_days < 2) return res;  // loss stays -1

    Tape::Ref safe_sums = t.add(sums, t.constant(denom_fix));
    Tape::Ref w_all = t.div_rows_by_segment(upos, safe_sums, offsets);

    Mat coef(node_off, 1);
    {
        int off = 0;
        for (const FxsaDay* d : days) {
            coef.middleRows(off, d->gain_coef.size()) = d->gain_coef;
            off += static_cast<int>(d->gain_coef.size());
        }
    }
    Tape::Ref gains_all = t.segment_sum_rows(t.mul_const(w_all, coef), offsets);
    Tape::Ref gains = t.gather_rows(gains_all, keep);
    res.loss = fxsa_loss_tape(t, gains, eps_var);
    return res;
}

FxsaTrained train_fxsa(const std::vector<const FxsaDay*>& train_days,
                       const std::vector<const FxsaDay*>& val_days,
                       const std::vector<GridPoint>& grid, const FxsaTrainConfig& cfg) {
    if (train_days.size() < 2) throw std::invalid_argument("fewer than 2 evaluable training dates");
    if (val_days.size() < 2) throw std::invalid_argument("fewer than 2 evaluable validation dates");
    if (grid.empty()) throw std::invalid_argument("empty hyperparameter grid");

    const int node_dim = static_cast<int>(train_days[0]->graph.node_feats.cols());
    const int edge_dim = static_cast<int>(train_days[0]->graph.edge_feats.cols());

    // scaler over the stacked training features
    long nodes = 0, edges = 0;
    for (const FxsaDay* d : train_days) {
        nodes += d->graph.node_feats.rows();
        edges += d->graph.edge_feats.rows();
    }
    Mat all_nodes(nodes, node_dim), all_edges(edges, edge_dim);
    {
        long no = 0, eo = 0;
        for (const FxsaDay* d : train_days) {
            all_nodes.middleRows(no, d->graph.node_feats.rows()) = d->graph.node_feats;
            all_edges.middleRows(eo, d->graph.edge_feats.rows()) = d->graph.edge_feats;
            no += d->graph.node_feats.rows();
            eo += d->graph.edge_feats.rows();
        }
    }
    FeatureScaler scaler = FeatureScaler::fit(all_nodes, all_edges);

    auto validation_loss = [&](const GnnParams& p) {
        Tape t;
        FxsaBatchResult r = fxsa_batch_loss(t, p, val_days, cfg.eps_var, cfg.degenerate_floor);
        return r.loss >= 0 ? t.scalar(r.loss) : std::numeric_limits<double>::infinity();
    };

    FxsaTrained best;
    GridPoint best_gp{};
    bool have_best = false;

    for (size_t gi = 0; gi < grid.size(); ++gi) {
        const GridPoint& gp = grid[gi];
        int hidden = width_for_budget(gp.param_budget, gp.layers, node_dim, edge_dim);
        GnnParams params = GnnParams::init(node_dim, edge_dim, hidden, gp.layers,
                                           GnnOutput::node, derive_seed(cfg.seed, gi));
        params.leaky_slope = cfg.leaky_slope;
        params.scaler = scaler;

        AdamState opt;
        opt.lr = cfg.lr;
        opt.beta1 = cfg.beta1;
        opt.beta2 = cfg.beta2;
        opt.eps = cfg.adam_eps;
        auto tensors = params.tensors();
        opt.init_like(tensors);

        GnnParams best_epoch_params = params;
        double best_val = validation_loss(params);
        int since_best = 0;
        int epoch = 0;
        std::vector<int> order(train_days.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        GaussianRng shuffler(derive_seed(cfg.seed, 7000 + gi));

        for (; epoch < cfg.max_epochs; ++epoch) {
            opt.lr = cfg.lr * std::pow(cfg.lr_decay, epoch / cfg.lr_decay_every);
            // Fisher-Yates with our own RNG keeps the order toolchain-independent
            for (size_t i = order.size(); i > 1; --i) {
                size_t j = static_cast<size_t>(shuffler.uniform() * static_cast<double>(i));
                if (j >= i) j = i - 1;
                std::swap(order[i - 1], order[j]);
            }
            int usable_batches = 0;
            for (size_t b0 = 0; b0 < order.size(); b0 += static_cast<size_t>(cfg.batch_size)) {
                std::vector<const FxsaDay*> batch;
                for (size_t i = b0; i < std::min(order.size(), b0 + static_cast<size_t>(cfg.batch_size)); ++i)
                    batch.push_back(train_days[static_cast<size_t>(order[i])]);
                Tape t;
                FxsaBatchResult r = fxsa_batch_loss(t, params, batch, cfg.eps_var,
                                                    cfg.degenerate_floor);
                if (r.loss < 0) continue;  // too few evaluable days in this batch
                t.backward(r.loss);
                std::vector<Mat> grads;
                grads.reserve(r.forward.param_refs.size());
                for (Tape::Ref ref : r.forward.param_refs) grads.push_back(t.grad_or_zero(ref));
                opt.step(tensors, grads);
                ++usable_batches;
            }
            if (usable_batches == 0)
                throw std::runtime_error(
                    "stage-2 training aborted: every batch degenerate (no positive "
                    "projected mass on any training date)");

            double v = validation_loss(params);
            if (v < best_val) {
                best_val = v;
                best_epoch_params = params;
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                break;
            }
        }

        best.validation_table.emplace_back(gp, best_val);
        bool better = !have_best || best_val < best.validation_loss ||
                      (best_val == best.validation_loss &&
                       (gp.param_budget < best_gp.param_budget ||
                        (gp.param_budget == best_gp.param_budget && gp.layers < best_gp.layers)));
        if (better) {
            auto table = std::move(best.validation_table);
            best.params = best_epoch_params;
            best.grid_index = static_cast<int>(gi);
            best.validation_loss = best_val;
            best.epochs_run = epoch;
            best.validation_table = std::move(table);
            best_gp = gp;
            have_best = true;
        }
    }
    return best;
}

TradePlan decide_trades(const GnnParams& p, const FxsaDay& day, double degenerate_floor) {
    if (day.day->links.empty() || day.day->system.kernel_dim() == 0) {
        TradePlan plan;
        plan.links = day.day->links.links;
        plan.home = day.day->links.home;
        plan.w = Eigen::VectorXd::Zero(day.day->links.size());
        plan.reason = "no feasible trade directions";
        return plan;
    }
    Eigen::VectorXd u_raw = gnn_eval(p, to_gnn_graph(day.graph));
    return h_so(day.day->system, u_raw, day.day->xhat_sym, degenerate_floor);
}

}  // namespace fxarb
