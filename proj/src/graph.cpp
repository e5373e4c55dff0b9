#include "fxarb/graph.hpp"

#include <algorithm>
#include <numeric>

namespace fxarb {

// ------------------------------------------------------------
// Link sets
// ------------------------------------------------------------

LinkSet LinkSet::intersect(const LinkSet& o) const {
    LinkSet out(n);
    for (size_t k = 0; k < adj.size(); ++k) out.adj[k] = adj[k] & o.adj[k];
    return out;
}

int LinkSet::count() const {
    return static_cast<int>(std::count(adj.begin(), adj.end(), 1));
}

std::vector<std::pair<int, int>> LinkSet::ordered_pairs() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && has(i, j)) out.emplace_back(i, j);
    return out;
}

LinkSet tradable_edges(const FxView& fx, int t) {
    const int n = fx.n_currencies();
    LinkSet e(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && fx.tradable(t, i, j)) e.set(i, j);
    return e;
}

LinkSet reciprocal_edges(const LinkSet& e) {
    LinkSet l(e.n);
    for (int i = 0; i < e.n; ++i)
        for (int j = 0; j < e.n; ++j)
            if (i != j && e.has(i, j) && e.has(j, i)) l.set(i, j);
    return l;
}

LinkSet reciprocal_links(const FxView& fx, int t) {
    return reciprocal_edges(tradable_edges(fx, t));
}

LinkSet prediction_edge_set(const FxView& fx, int t) {
    if (t < 3) throw std::invalid_argument("prediction edge set needs t >= 3");
    return reciprocal_links(fx, t)
        .intersect(reciprocal_links(fx, t - 1))
        .intersect(reciprocal_links(fx, t - 2));
}

// ------------------------------------------------------------
// Currency-value MLE
// ------------------------------------------------------------

CurrencyValues currency_values(const std::vector<std::tuple<int, int, double>>& log_rates,
                               int n_currencies) {
    CurrencyValues cv;
    cv.log_values.setZero(n_currencies);
    cv.component.assign(static_cast<size_t>(n_currencies), -1);

    // Connected components over the undirected link graph (union-find).
    std::vector<int> parent(static_cast<size_t>(n_currencies));
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<char> touched(static_cast<size_t>(n_currencies), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& [i, j, lx] : log_rates) {
        (void)lx;
        if (i == j || i > j) throw std::invalid_argument("links must satisfy i < j");
        touched[i] = touched[j] = 1;
        parent[find(i)] = find(j);
    }

    std::map<int, int> root_to_comp;
    for (int i = 0; i < n_currencies; ++i) {
        if (!touched[i]) {
            ++cv.isolated_count;
            continue;
        }
        int r = find(i);
        auto [it, inserted] = root_to_comp.try_emplace(r, static_cast<int>(root_to_comp.size()));
        cv.component[i] = it->second;
    }
    cv.n_components = static_cast<int>(root_to_comp.size());
    cv.disconnected = cv.n_components > 1 || cv.isolated_count > 0;

    // Per component: least squares of the stacked difference rows plus one
    // mean-zero row. The all-ones direction is orthogonal to the difference
    // rows, so the normal equations solve the constrained problem exactly.
    for (int c = 0; c < cv.n_components; ++c) {
        std::vector<int> members;
        for (int i = 0; i < n_currencies; ++i)
            if (cv.component[i] == c) members.push_back(i);
        const int k = static_cast<int>(members.size());
        std::vector<int> local(static_cast<size_t>(n_currencies), -1);
        for (int m = 0; m < k; ++m) local[members[m]] = m;

        Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(k, k);
        Eigen::VectorXd atb = Eigen::VectorXd::Zero(k);
        for (const auto& [i, j, lx] : log_rates) {
            if (cv.component[i] != c) continue;
            int a = local[i], b = local[j];
            ata(a, a) += 1.0;
            ata(b, b) += 1.0;
            ata(a, b) -= 1.0;
            ata(b, a) -= 1.0;
            atb(a) += lx;
            atb(b) -= lx;
        }
        const double w = 1.0 / k;  // mean row with unit weight
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) ata(a, b) += w * w;

        Eigen::VectorXd v = ata.ldlt().solve(atb);
        for (int m = 0; m < k; ++m) cv.log_values(members[m]) = v(m);
    }

    for (const auto& [i, j, lx] : log_rates) {
        cv.residuals.emplace_back(i, j, lx - (cv.log_values(i) - cv.log_values(j)));
    }
    return cv;
}

std::vector<std::tuple<int, int, double>> link_log_rates(const FxView& fx, int t,
                                                         const LinkSet& links) {
    std::vector<std::tuple<int, int, double>> out;
    for (int i = 0; i < links.n; ++i) {
        for (int j = i + 1; j < links.n; ++j) {
            if (!links.has(i, j)) continue;
            double x = fx.rate(t, i, j);
            if (!(x > 0.0)) throw std::domain_error("non-positive rate in link set");
            out.emplace_back(i, j, std::log(x));
        }
    }
    return out;
}

// ------------------------------------------------------------
// Features
// ------------------------------------------------------------

void LookbackWindows::validate() const {
    if (windows.empty()) throw std::invalid_argument("empty look-back window set");
    for (size_t k = 0; k < windows.size(); ++k) {
        if (windows[k] < 1) throw std::invalid_argument("windows must be >= 1");
        if (k > 0 && windows[k] <= windows[k - 1])
            throw std::invalid_argument("windows must be sorted and distinct");
    }
}

const Eigen::VectorXd& ValueCache::log_values(const FxView& shadow, int t) {
    auto it = cache_.find(t);
    if (it != cache_.end()) return it->second;
    LinkSet links = reciprocal_links(shadow, t);
    CurrencyValues cv = currency_values(link_log_rates(shadow, t, links), n_);
    return cache_.emplace(t, std::move(cv.log_values)).first->second;
}

EdgeFeatures edge_momentum_features(const FxView& fx, int t, const LookbackWindows& w) {
    w.validate();
    const int wmax = w.max();
    EdgeFeatures out;

    // Link sets for the whole span once.
    std::map<int, LinkSet> l;
    for (int s = std::max(1, t - wmax); s <= t; ++s) l.emplace(s, reciprocal_links(fx, s));
    if (t >= 2 && l.find(t - 1) == l.end()) l.emplace(t - 1, reciprocal_links(fx, t - 1));

    if (t < 2) return out;
    LinkSet eligible = l.at(t).intersect(l.at(t - 1));
    out.edges = eligible.ordered_pairs();
    out.feats.setZero(static_cast<int>(out.edges.size()), w.count());

    for (size_t e = 0; e < out.edges.size(); ++e) {
        auto [i, j] = out.edges[e];
        for (int wi = 0; wi < w.count(); ++wi) {
            const int span = w.windows[static_cast<size_t>(wi)];
            double sum = 0.0;
            int cnt = 0;
            for (int tt = std::max(2, t - span + 1); tt <= t; ++tt) {
                if (!l.at(tt).has(i, j)) continue;
                auto prev = l.find(tt - 1);
                if (prev == l.end() || !prev->second.has(i, j)) continue;
                sum += std::log(fx.rate(tt, i, j) / fx.rate(tt - 1, i, j));
                ++cnt;
            }
            if (cnt > 0) {
                out.feats(static_cast<int>(e), wi) = sum / cnt;
            } else {
                ++out.empty_mask_count;
            }
        }
    }
    return out;
}

NodeFeatures node_features(const IrView& ir, const FxView& shadow, ValueCache& values, int t,
                           const LookbackWindows& w) {
    w.validate();
    const int n = ir.n_currencies();
    const int nw = w.count();
    const int wmax = w.max();
    if (t - wmax < 1) throw std::invalid_argument("insufficient history for node features");

    // Pull daily IR and log-value series for the span [t-wmax : t].
    Eigen::MatrixXd y_diff(wmax, n);   // row k: date t-wmax+1+k's log IR difference
    Eigen::MatrixXd v_diff(wmax, n);
    std::vector<std::vector<char>> y_ok(static_cast<size_t>(wmax),
                                        std::vector<char>(static_cast<size_t>(n), 0));
    for (int k = 0; k < wmax; ++k) {
        const int tt = t - wmax + 1 + k;
        const Eigen::VectorXd& v_now = values.log_values(shadow, tt);
        const Eigen::VectorXd& v_prev = values.log_values(shadow, tt - 1);
        for (int i = 0; i < n; ++i) {
            double r_now = ir.daily_rate(tt, i);
            double r_prev = ir.daily_rate(tt - 1, i);
            if (std::isfinite(r_now) && std::isfinite(r_prev)) {
                y_diff(k, i) = std::log((1.0 + r_now) / (1.0 + r_prev));
                y_ok[static_cast<size_t>(k)][static_cast<size_t>(i)] = 1;
            } else {
                y_diff(k, i) = 0.0;
            }
            v_diff(k, i) = v_now(i) - v_prev(i);
        }
    }

    NodeFeatures out;
    out.feats.resize(0, 2 * nw);
    std::vector<Eigen::VectorXd> rows;
    for (int i = 0; i < n; ++i) {
        bool usable = true;
        Eigen::VectorXd row(2 * nw);
        for (int wi = 0; wi < nw && usable; ++wi) {
            const int span = w.windows[static_cast<size_t>(wi)];
            double ys = 0.0, vs = 0.0;
            for (int k = wmax - span; k < wmax; ++k) {
                if (!y_ok[static_cast<size_t>(k)][static_cast<size_t>(i)]) {
                    usable = false;
                    break;
                }
                ys += y_diff(k, i);
                vs += v_diff(k, i);
            }
            row(wi) = ys / span;
            row(nw + wi) = vs / span;
        }
        if (usable) {
            out.nodes.push_back(i);
            rows.push_back(row);
        } else {
            out.excluded.push_back(i);
        }
    }
    out.feats.resize(static_cast<int>(rows.size()), 2 * nw);
    for (size_t r = 0; r < rows.size(); ++r) out.feats.row(static_cast<int>(r)) = rows[r];
    return out;
}

FeatureGraph build_feature_graph(const FxView& fx, const IrView& ir, const FxView& shadow,
                                 ValueCache& values, int t, const LookbackWindows& w) {
    w.validate();
    if (t - w.max() < 1)
        throw std::invalid_argument("insufficient history: first usable feature date is t=" +
                                    std::to_string(w.max() + 1));

    FeatureGraph g;
    g.t = t;

    NodeFeatures nf = node_features(ir, shadow, values, t, w);
    EdgeFeatures ef = edge_momentum_features(fx, t, w);
    g.empty_mask_count = ef.empty_mask_count;
    g.excluded_nodes = nf.excluded;
    g.nodes = nf.nodes;
    g.node_feats = nf.feats;

    std::vector<char> present(static_cast<size_t>(fx.n_currencies()), 0);
    for (int i : g.nodes) present[static_cast<size_t>(i)] = 1;

    std::vector<int> keep;
    for (size_t e = 0; e < ef.edges.size(); ++e) {
        auto [i, j] = ef.edges[e];
        if (present[static_cast<size_t>(i)] && present[static_cast<size_t>(j)])
            keep.push_back(static_cast<int>(e));
    }
    g.edges.reserve(keep.size());
    g.edge_feats.resize(static_cast<int>(keep.size()), w.count());
    for (size_t r = 0; r < keep.size(); ++r) {
        g.edges.push_back(ef.edges[static_cast<size_t>(keep[r])]);
        g.edge_feats.row(static_cast<int>(r)) = ef.feats.row(keep[r]);
    }
    return g;
}

}  // namespace fxarb
