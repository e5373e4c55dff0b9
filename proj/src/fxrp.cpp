#include "fxarb/fxrp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "fxarb/rng.hpp"

namespace fxarb {

// ------------------------------------------------------------
// Schedule
// ------------------------------------------------------------

FitSchedule build_schedule(const TradingCalendar& cal, const ScheduleConfig& cfg) {
    if (cfg.n_fit < 2) throw std::invalid_argument("n_fit must be at least 2");
    if (cfg.n_sy < 1 || cfg.n_sy >= cfg.n_fit)
        throw std::invalid_argument("need 1 <= n_sy < n_fit");
    if (!(cfg.t_exec > 0.0 && cfg.t_exec < 1.0))
        throw std::invalid_argument("t_exec must lie in (0,1)");

    FitSchedule s;
    s.n_fit = cfg.n_fit;
    s.n_sy = cfg.n_sy;
    s.t_exec = cfg.t_exec;
    s.horizon_end = cal.size();

    int year = cfg.start_year;
    int month = 1;
    const int step = cfg.frequency == RefitFrequency::quarterly ? 3 : 1;
    for (int k = 1; k <= cfg.n_fit; ++k) {
        auto t = cal.first_on_or_after(Date{year, month, 1});
        if (!t)
            throw std::invalid_argument("calendar horizon shorter than " +
                                        std::to_string(cfg.n_fit) + " refit periods");
        s.refit_dates.push_back(*t);
        month += step;
        if (month > 12) {
            month -= 12;
            ++year;
        }
    }
    for (size_t k = 1; k < s.refit_dates.size(); ++k)
        if (s.refit_dates[k] <= s.refit_dates[k - 1])
            throw std::invalid_argument("refit dates must be strictly increasing");
    if (s.t1() <= s.t0) throw std::invalid_argument("no training era before the first refit");
    return s;
}

// ------------------------------------------------------------
// Splits
// ------------------------------------------------------------

SplitSpec make_splits(const FitSchedule& sched, double val_fraction) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw std::invalid_argument("val_fraction must lie in (0,1)");
    const int t0 = sched.t0;
    const int t1 = sched.t1();
    const int n = t1 - t0;
    if (n < sched.n_sy)
        throw std::invalid_argument("pre-test era too short for the covering blocks");

    auto block_bound = [&](int k) {
        return t0 + static_cast<int>((static_cast<long>(k) * n) / sched.n_sy);
    };

    SplitSpec spec;
    for (int k = 1; k <= sched.n_fit; ++k) {
        const int tk = sched.t_k(k);
        Split p;
        if (k <= sched.n_sy) {
            DateRange va{block_bound(k - 1), block_bound(k)};
            p.validation = va;
            if (va.begin > t0) p.train.push_back({t0, va.begin});
            if (tk > va.end) p.train.push_back({va.end, tk});
        } else {
            int v = std::max(1, static_cast<int>(std::lround(val_fraction * (tk - t0))));
            p.validation = {tk - v, tk};
            p.train.push_back({t0, tk - v});
        }
        spec.stage_p.push_back(p);

        Split sp;
        int v = std::max(1, static_cast<int>(std::lround(val_fraction * (tk - t0))));
        sp.validation = {tk - v, tk};
        sp.train.push_back({t0, tk - v});
        spec.stage_s.push_back(sp);
    }
    return spec;
}

int k_star(const FitSchedule& sched, int t) {
    const int t0 = sched.t0;
    const int t1 = sched.t1();
    if (t < t0 || t >= t1) throw std::invalid_argument("k_star defined on [t0, t1)");
    const int n = t1 - t0;
    for (int k = 1; k <= sched.n_sy; ++k) {
        int lo = t0 + static_cast<int>((static_cast<long>(k - 1) * n) / sched.n_sy);
        int hi = t0 + static_cast<int>((static_cast<long>(k) * n) / sched.n_sy);
        if (t >= lo && t < hi) return k;
    }
    throw std::logic_error("covering violated: date not in any validation block");
}

// ------------------------------------------------------------
// Prediction store
// ------------------------------------------------------------

void PredictionStore::put(int t, Mat xhat, int provenance_k) {
    entries_[t] = {std::move(xhat), provenance_k};
}

const Mat& PredictionStore::xhat(int t) const {
    auto it = entries_.find(t);
    if (it == entries_.end()) throw std::out_of_range("no prediction for t=" + std::to_string(t));
    return it->second.first;
}

int PredictionStore::provenance(int t) const {
    auto it = entries_.find(t);
    if (it == entries_.end()) throw std::out_of_range("no prediction for t=" + std::to_string(t));
    return it->second.second;
}

std::string PredictionStore::serialize(const std::vector<std::string>& currencies) const {
    std::ostringstream os;
    char buf[40];
    for (const auto& [t, entry] : entries_) {
        const Mat& m = entry.first;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                if (i == j || !std::isfinite(m(i, j))) continue;
                std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
                os << t << "," << currencies[static_cast<size_t>(i)] << ","
                   << currencies[static_cast<size_t>(j)] << "," << buf << "," << entry.second
                   << "\n";
            }
        }
    }
    return os.str();
}

// ------------------------------------------------------------
// Dataset
// ------------------------------------------------------------

std::optional<FxrpDay> build_fxrp_day(const FxView& fx, const IrView& ir, const FxView& shadow,
                                      ValueCache& values, int t, const LookbackWindows& w,
                                      bool with_targets) {
    if (t - 1 < w.max() + 1 || t < 3) return std::nullopt;

    FxrpDay day;
    day.t = t;
    FeatureGraph g = build_feature_graph(fx, ir, shadow, values, t - 1, w);
    if (g.edges.empty()) return std::nullopt;

    std::vector<int> node_pos(static_cast<size_t>(fx.n_currencies()), -1);
    for (size_t r = 0; r < g.nodes.size(); ++r)
        node_pos[static_cast<size_t>(g.nodes[r])] = static_cast<int>(r);

    day.graph.node_feats = g.node_feats;
    day.graph.edge_feats = g.edge_feats;
    day.graph_edges = g.edges;
    for (const auto& [i, j] : g.edges) {
        day.graph.src.push_back(node_pos[static_cast<size_t>(i)]);
        day.graph.dst.push_back(node_pos[static_cast<size_t>(j)]);
    }

    LinkSet u = prediction_edge_set(fx, t);
    std::vector<double> targets;
    for (size_t r = 0; r < g.edges.size(); ++r) {
        auto [i, j] = g.edges[r];
        if (!u.has(i, j)) continue;
        double prev = fx.rate(t - 1, i, j);
        if (!(prev > 0.0)) continue;
        day.target_rows.push_back(static_cast<int>(r));
        day.prev_rates.push_back(prev);
        day.target_edges.emplace_back(i, j);
        if (with_targets) {
            double next = fx.rate(t, i, j);
            targets.push_back(std::log(next / prev));
        }
    }
    if (day.target_rows.empty()) return std::nullopt;
    if (with_targets)
        day.targets = Eigen::Map<Eigen::VectorXd>(targets.data(),
                                                  static_cast<Eigen::Index>(targets.size()));
    return day;
}

// ------------------------------------------------------------
// Training
// ------------------------------------------------------------

namespace {

struct BatchedDays {
    GnnGraph graph;
    std::vector<int> target_rows;  // global edge rows
    Mat targets;                   // column
    std::vector<int> day_offsets;  // into target_rows, size n_days+1
    Mat inv_counts;                // per-day 1/|targets|
};

BatchedDays assemble(const std::vector<const FxrpDay*>& days) {
    BatchedDays b;
    long nodes = 0, edges = 0, targets = 0;
    for (const FxrpDay* d : days) {
        nodes += d->graph.node_feats.rows();
        edges += d->graph.edge_feats.rows();
        targets += static_cast<long>(d->target_rows.size());
    }
    b.graph.node_feats.resize(nodes, days[0]->graph.node_feats.cols());
    b.graph.edge_feats.resize(edges, days[0]->graph.edge_feats.cols());
    b.targets.resize(targets, 1);
    b.inv_counts.resize(static_cast<Eigen::Index>(days.size()), 1);
    b.day_offsets.push_back(0);

    int node_off = 0, edge_off = 0, tgt_off = 0;
    for (size_t d = 0; d < days.size(); ++d) {
        const FxrpDay* day = days[d];
        const int nn = static_cast<int>(day->graph.node_feats.rows());
        const int ne = static_cast<int>(day->graph.edge_feats.rows());
        b.graph.node_feats.middleRows(node_off, nn) = day->graph.node_feats;
        b.graph.edge_feats.middleRows(edge_off, ne) = day->graph.edge_feats;
        for (int e = 0; e < ne; ++e) {
            b.graph.src.push_back(day->graph.src[static_cast<size_t>(e)] + node_off);
            b.graph.dst.push_back(day->graph.dst[static_cast<size_t>(e)] + node_off);
        }
        for (size_t r = 0; r < day->target_rows.size(); ++r) {
            b.target_rows.push_back(day->target_rows[r] + edge_off);
            b.targets(tgt_off + static_cast<int>(r), 0) = day->targets(static_cast<Eigen::Index>(r));
        }
        tgt_off += static_cast<int>(day->target_rows.size());
        b.day_offsets.push_back(tgt_off);
        b.inv_counts(static_cast<Eigen::Index>(d), 0) =
            1.0 / static_cast<double>(day->target_rows.size());
        node_off += nn;
        edge_off += ne;
    }
    return b;
}

// mean over days of per-day MSE
Tape::Ref batched_loss(Tape& t, const GnnParams& p, const BatchedDays& b, GnnForward* fw_out) {
    GnnForward fw = gnn_forward(t, p, b.graph);
    Tape::Ref pred = t.gather_rows(fw.output, b.target_rows);
    Tape::Ref diff = t.sub(pred, t.constant(b.targets));
    Tape::Ref sq = t.mul(diff, diff);
    Tape::Ref per_day = t.mul_const(t.segment_sum_rows(sq, b.day_offsets), b.inv_counts);
    Tape::Ref loss = t.scale(t.sum_all(per_day), 1.0 / static_cast<double>(b.inv_counts.rows()));
    if (fw_out) *fw_out = fw;
    return loss;
}

}  // namespace

double fxrp_mse(const GnnParams& p, const std::vector<const FxrpDay*>& days) {
    if (days.empty()) throw std::invalid_argument("no days to evaluate");
    double total = 0.0;
    for (const FxrpDay* d : days) {
        Eigen::VectorXd out = gnn_eval(p, d->graph);
        double mse = 0.0;
        for (size_t r = 0; r < d->target_rows.size(); ++r) {
            double z = out(d->target_rows[r]) - d->targets(static_cast<Eigen::Index>(r));
            mse += z * z;
        }
        total += mse / static_cast<double>(d->target_rows.size());
    }
    return total / static_cast<double>(days.size());
}

FxrpTrained train_fxrp(const std::vector<const FxrpDay*>& train_days,
                       const std::vector<const FxrpDay*>& val_days,
                       const std::vector<GridPoint>& grid, const FxrpTrainConfig& cfg,
                       int threads) {
    (void)threads;  // grid points are few; sequential keeps determinism trivial
    if (train_days.empty()) throw std::invalid_argument("no usable training dates");
    if (val_days.empty()) throw std::invalid_argument("no usable validation dates");
    if (grid.empty()) throw std::invalid_argument("empty hyperparameter grid");

    const int node_dim = static_cast<int>(train_days[0]->graph.node_feats.cols());
    const int edge_dim = static_cast<int>(train_days[0]->graph.edge_feats.cols());

    BatchedDays train_batch = assemble(train_days);
    BatchedDays val_batch = assemble(val_days);
    FeatureScaler scaler = FeatureScaler::fit(train_batch.graph.node_feats,
                                              train_batch.graph.edge_feats);

    FxrpTrained best;
    GridPoint best_gp{};
    bool have_best = false;

    for (size_t gi = 0; gi < grid.size(); ++gi) {
        const GridPoint& gp = grid[gi];
        int hidden = width_for_budget(gp.param_budget, gp.layers, node_dim, edge_dim);
        GnnParams params = GnnParams::init(node_dim, edge_dim, hidden, gp.layers,
                                           GnnOutput::edge, derive_seed(cfg.seed, gi));
        params.leaky_slope = cfg.leaky_slope;
        params.scaler = scaler;

        AdamState opt;
        opt.lr = cfg.lr;
        opt.beta1 = cfg.beta1;
        opt.beta2 = cfg.beta2;
        opt.eps = cfg.adam_eps;
        auto tensors = params.tensors();
        opt.init_like(tensors);

        auto val_mse = [&](const GnnParams& p) {
            Tape t;
            return t.scalar(batched_loss(t, p, val_batch, nullptr));
        };

        GnnParams best_epoch_params = params;
        double best_val = val_mse(params);
        int since_best = 0;
        int epoch = 0;
        for (; epoch < cfg.max_epochs; ++epoch) {
            // step decay keeps the terminal wobble of the adaptive steps small
            opt.lr = cfg.lr * std::pow(cfg.lr_decay, epoch / cfg.lr_decay_every);
            Tape t;
            GnnForward fw;
            Tape::Ref loss = batched_loss(t, params, train_batch, &fw);
            t.backward(loss);
            std::vector<Mat> grads;
            grads.reserve(fw.param_refs.size());
            for (Tape::Ref r : fw.param_refs) grads.push_back(t.grad_or_zero(r));
            opt.step(tensors, grads);

            double v = val_mse(params);
            if (v < best_val) {
                best_val = v;
                best_epoch_params = params;
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                break;
            }
        }

        best.validation_table.emplace_back(gp, best_val);
        bool better = !have_best || best_val < best.validation_mse ||
                      (best_val == best.validation_mse &&
                       (gp.param_budget < best_gp.param_budget ||
                        (gp.param_budget == best_gp.param_budget && gp.layers < best_gp.layers)));
        if (better) {
            auto table = std::move(best.validation_table);
            best.params = best_epoch_params;
            best.grid_index = static_cast<int>(gi);
            best.validation_mse = best_val;
            best.epochs_run = epoch;
            best.validation_table = std::move(table);
            best_gp = gp;
            have_best = true;
        }
    }
    return best;
}

Mat predict_day(const GnnParams& p, const FxrpDay& day, int n_currencies) {
    Eigen::VectorXd out = gnn_eval(p, day.graph);
    Mat xhat = Mat::Constant(n_currencies, n_currencies, kMissing);
    for (size_t r = 0; r < day.target_rows.size(); ++r) {
        auto [i, j] = day.target_edges[r];
        xhat(i, j) = unscale_prediction(out(day.target_rows[r]), day.prev_rates[r]);
    }
    return xhat;
}

Mat baseline_random_walk(const FxrpDay& day, int n_currencies) {
    Mat xhat = Mat::Constant(n_currencies, n_currencies, kMissing);
    for (size_t r = 0; r < day.target_edges.size(); ++r) {
        auto [i, j] = day.target_edges[r];
        xhat(i, j) = day.prev_rates[r];
    }
    return xhat;
}

}  // namespace fxarb
