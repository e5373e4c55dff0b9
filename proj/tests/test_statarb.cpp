#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <deque>
#include <random>

#include "fxarb/statarb.hpp"
#include "fxarb/verify.hpp"

using namespace fxarb;

namespace {

// All-ones prediction matrix over n currencies.
Mat unit_xhat(int n) {
    Mat x = Mat::Ones(n, n);
    return x;
}

LinkSet full_links(int n) {
    LinkSet l(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) l.set(i, j);
    return l;
}

// The canonical 3-currency unit-rate system with home = 0.
ConstraintSystem three_currency_system() {
    TradableLinks links = tradable_links(full_links(3), full_links(3), 0);
    return build_constraints(links, unit_xhat(3));
}

}  // namespace

TEST_CASE("tradable links: fully tradable 10-currency market keeps 90 pairs") {
    TradableLinks links = tradable_links(full_links(10), full_links(10), 0);
    CHECK(links.size() == 90);
    CHECK(links.links.size() % 2 == 0);
}

TEST_CASE("tradable links: a missing (i,o) edge removes every link touching i") {
    LinkSet u = full_links(4);
    LinkSet e = full_links(4);
    e.set(2, 0, false);  // currency 2 cannot convert back to home
    TradableLinks links = tradable_links(u, e, 0);
    for (const auto& [i, j] : links.links) {
        CHECK(i != 2);
        CHECK(j != 2);
    }
    CHECK(links.size() == 6);  // links among {0,1,3}
}

TEST_CASE("tradable links: pair closure keeps the link count even") {
    std::mt19937 gen(5);
    for (int trial = 0; trial < 20; ++trial) {
        LinkSet u(5), e(5);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j)
                if (i != j) {
                    if (gen() % 3) u.set(i, j);
                    if (gen() % 2) e.set(i, j);
                }
        TradableLinks links = tradable_links(u, e, 0);
        CHECK(links.size() % 2 == 0);
        for (const auto& [i, j] : links.links) CHECK(links.find(j, i) >= 0);
    }
}

TEST_CASE("symmetrize predictions: consistent pair unchanged, sqrt for skewed") {
    Mat raw = Mat::Constant(2, 2, kMissing);
    raw(0, 1) = 1.1;
    raw(1, 0) = 1.0;
    auto sp = symmetrize_predictions(raw);
    CHECK(sp.xhat(0, 1) == doctest::Approx(std::sqrt(1.1)).epsilon(1e-12));
    CHECK(std::sqrt(1.1) == doctest::Approx(1.0488088).epsilon(1e-6));
    CHECK(sp.xhat(0, 1) * sp.xhat(1, 0) == doctest::Approx(1.0).epsilon(1e-14));

    Mat consistent = Mat::Constant(2, 2, kMissing);
    consistent(0, 1) = 2.0;
    consistent(1, 0) = 0.5;
    auto sp2 = symmetrize_predictions(consistent);
    CHECK(sp2.xhat(0, 1) == doctest::Approx(2.0).epsilon(1e-14));

    Mat single = Mat::Constant(2, 2, kMissing);
    single(0, 1) = 2.0;
    auto sp3 = symmetrize_predictions(single);
    CHECK(sp3.dropped_single_direction == 1);
    CHECK_FALSE(std::isfinite(sp3.xhat(0, 1)));
}

TEST_CASE("two-currency system forces u = 0 and every day degenerate") {
    TradableLinks links = tradable_links(full_links(2), full_links(2), 0);
    REQUIRE(links.size() == 2);
    ConstraintSystem sys = build_constraints(links, unit_xhat(2));
    CHECK(sys.kernel_dim() == 0);
    Eigen::VectorXd u(2);
    u << 1.0, -0.5;
    TradePlan plan = h_so(sys, u, unit_xhat(2));
    CHECK(plan.degenerate);
    CHECK(plan.w.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("three-currency unit-rate system has the known 1-dim kernel") {
    ConstraintSystem sys = three_currency_system();
    REQUIRE(sys.links.size() == 6);
    CHECK(sys.kernel_dim() == 1);
    // canonical link order: (0,1),(0,2),(1,0),(1,2),(2,0),(2,1)
    Eigen::VectorXd d(6);
    d << 1, -1, -1, 1, 1, -1;
    // basis spans d (up to sign)
    Eigen::VectorXd b = sys.basis.col(0);
    double dot = std::abs(b.dot(d) / (b.norm() * d.norm()));
    CHECK(dot == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((sys.a * d).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("h_SO hand example: unit impulse becomes the equal-thirds cycle") {
    ConstraintSystem sys = three_currency_system();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(6);
    u(0) = 1.0;  // u'_{01} = 1
    TradePlan plan = h_so(sys, u, unit_xhat(3));
    REQUIRE_FALSE(plan.degenerate);
    // w = (1/3, 0, 0, 1/3, 1/3, 0): cycle 0 -> 1 -> 2 -> 0
    CHECK(plan.w(0) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(plan.w(1) == 0.0);
    CHECK(plan.w(2) == 0.0);
    CHECK(plan.w(3) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(plan.w(4) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(plan.w(5) == 0.0);
    CHECK(plan.cert_weight_sum == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(plan.cert_max_direct_arb == 0.0);
    CHECK(plan.cert_max_offhome_holding < 1e-12);
}

TEST_CASE("h_SO fixes vectors already in the kernel") {
    ConstraintSystem sys = three_currency_system();
    Eigen::VectorXd d(6);
    d << 1, -1, -1, 1, 1, -1;
    Eigen::VectorXd proj = sys.projection * d;
    CHECK((proj - d).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("h_SO on outputs orthogonal to the kernel degenerates") {
    ConstraintSystem sys = three_currency_system();
    // (1,1,1,1,1,1) is orthogonal to (1,-1,-1,1,1,-1)
    Eigen::VectorXd u = Eigen::VectorXd::Ones(6);
    TradePlan plan = h_so(sys, u, unit_xhat(3));
    CHECK(plan.degenerate);
}

TEST_CASE("holdings of the hand cycle vanish everywhere") {
    ConstraintSystem sys = three_currency_system();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(6);
    u(0) = 1.0;
    TradePlan plan = h_so(sys, u, unit_xhat(3));
    Eigen::VectorXd h = holdings_hat(sys.links, plan.w, unit_xhat(3));
    CHECK(std::abs(h(0)) < 1e-12);  // home
    CHECK(std::abs(h(1)) < 1e-12);
    CHECK(std::abs(h(2)) < 1e-12);

    Eigen::VectorXd zero = Eigen::VectorXd::Zero(6);
    CHECK(holdings_hat(sys.links, zero, unit_xhat(3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("realized gain hand example: one mispriced leg yields 0.01") {
    // cycle plan, all rates 1 except realized X(t,1,2) = 1.03, zero IRs
    ConstraintSystem sys = three_currency_system();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(6);
    u(0) = 1.0;
    TradePlan plan = h_so(sys, u, unit_xhat(3));

    FxPanel fx({"A", "B", "C"}, 3);
    for (int t = 1; t <= 3; ++t)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (i != j) fx.set(t, i, j, 1.0);
    fx.set(2, 1, 2, 1.03);  // the 1 -> 2 leg realizes rich
    IrPanel ir({"A", "B", "C"}, 3);
    for (int t = 1; t <= 3; ++t)
        for (int i = 0; i < 3; ++i)
            for (int m = 0; m < 4; ++m) ir.set(t, i, m, 0.0);

    RealizedDay day = realized_gain(sys.links, plan.w, unit_xhat(3),
                                    FxView::unrestricted(fx), IrView::unrestricted(ir), 2);
    REQUIRE(day.evaluable);
    CHECK(day.holdings(2) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(day.gain == doctest::Approx(0.01).epsilon(1e-12));

    // prediction-perfect case: realized == predicted, all ones -> zero gain
    fx.set(2, 1, 2, 1.0);
    RealizedDay flat = realized_gain(sys.links, plan.w, unit_xhat(3),
                                     FxView::unrestricted(fx), IrView::unrestricted(ir), 2);
    CHECK(std::abs(flat.gain) < 1e-14);
    CHECK(flat.holdings.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("realized gain coefficients agree with the direct evaluation") {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> uni(0.8, 1.25);
    FxPanel fx({"A", "B", "C", "D"}, 5);
    IrPanel ir({"A", "B", "C", "D"}, 5);
    for (int t = 1; t <= 5; ++t)
        for (int i = 0; i < 4; ++i) {
            for (int j = i + 1; j < 4; ++j) {
                double x = uni(gen);
                fx.set(t, i, j, x);
                fx.set(t, j, i, 1 / x);
            }
            for (int m = 0; m < 4; ++m) ir.set(t, i, m, 0.02 + 0.01 * uni(gen));
        }
    RandomSystem rs = random_constraint_system(42, 4);
    Eigen::VectorXd u(rs.links.size());
    for (int k = 0; k < rs.links.size(); ++k) u(k) = uni(gen) - 1.0;
    TradePlan plan = h_so(rs.system, u, rs.xhat);
    REQUIRE_FALSE(plan.degenerate);

    bool ok = false;
    Eigen::VectorXd coef = realized_gain_coefficients(
        rs.links, rs.xhat, FxView::unrestricted(fx), IrView::unrestricted(ir), 3, &ok);
    REQUIRE(ok);
    RealizedDay day = realized_gain(rs.links, plan.w, rs.xhat, FxView::unrestricted(fx),
                                    IrView::unrestricted(ir), 3);
    REQUIRE(day.evaluable);
    CHECK(coef.dot(plan.w) == doctest::Approx(day.gain).epsilon(1e-12));
}

TEST_CASE("degenerate day evaluates to zero gain") {
    ConstraintSystem sys = three_currency_system();
    TradePlan plan = h_so(sys, Eigen::VectorXd::Ones(6), unit_xhat(3));
    REQUIRE(plan.degenerate);
    CHECK(plan.w.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fxsa loss hand values") {
    CHECK(fxsa_loss(batch_stats({0.01, 0.03})) == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(fxsa_loss(batch_stats({-0.01, -0.03})) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(fxsa_loss(batch_stats({0.0, 0.0})) == 0.0);
    CHECK_THROWS_AS(batch_stats({0.5}), std::invalid_argument);

    // both branches tend to 0 near the switch
    CHECK(std::abs(fxsa_loss(batch_stats({1e-6 + 0.01, 1e-6 - 0.01}))) <= 1e-4);
    CHECK(std::abs(fxsa_loss(batch_stats({-1e-6 + 0.01, -1e-6 - 0.01}))) <= 1e-4);

    BatchStats s = batch_stats({0.01, 0.03});
    CHECK(s.mu == doctest::Approx(0.02).epsilon(1e-15));
    CHECK(s.sigma2 == doctest::Approx(0.0002).epsilon(1e-12));
}

TEST_CASE("fxsa loss tape matches the plain evaluation and differentiates") {
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> uni(-0.02, 0.04);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> gains;
        for (int k = 0; k < 6; ++k) gains.push_back(uni(gen));
        Tape t;
        Mat g(6, 1);
        for (int k = 0; k < 6; ++k) g(k, 0) = gains[static_cast<size_t>(k)];
        Tape::Ref gr = t.param(g);
        Tape::Ref loss = fxsa_loss_tape(t, gr);
        CHECK(t.scalar(loss) == doctest::Approx(fxsa_loss(batch_stats(gains))).epsilon(1e-14));

        t.backward(loss);
        Mat analytic = t.grad(gr);
        for (int k = 0; k < 6; ++k) {
            auto f = [&](double v) {
                auto g2 = gains;
                g2[static_cast<size_t>(k)] = v;
                return fxsa_loss(batch_stats(g2));
            };
            double h = 1e-7;
            double fd = (f(gains[static_cast<size_t>(k)] + h) -
                         f(gains[static_cast<size_t>(k)] - h)) /
                        (2 * h);
            CHECK(analytic(k, 0) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
        }
    }
}

TEST_CASE("verify_c1 accepts h_SO outputs and rejects uniform weights") {
    ConstraintSystem sys = three_currency_system();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(6);
    u(0) = 1.0;
    TradePlan plan = h_so(sys, u, unit_xhat(3));
    CHECK(verify_c1(sys.links, plan.w, unit_xhat(3)).ok);

    Eigen::VectorXd uniform = Eigen::VectorXd::Constant(6, 1.0 / 6);
    C1Report rep = verify_c1(sys.links, uniform, unit_xhat(3));
    CHECK_FALSE(rep.ok);
    CHECK(rep.max_direct_arb > 0.0);
}

TEST_CASE("c1_to_u reproduces the hand cycle and satisfies the constraint rows") {
    ConstraintSystem sys = three_currency_system();
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(6);
    u0(0) = 1.0;
    TradePlan plan = h_so(sys, u0, unit_xhat(3));
    Eigen::VectorXd u = c1_to_u(sys.links, plan.w, unit_xhat(3));
    CHECK((sys.a * u).lpNorm<Eigen::Infinity>() < 1e-10);
    // sign pattern matches the kernel direction (1,-1,-1,1,1,-1)/3
    Eigen::VectorXd expect(6);
    expect << 1.0 / 3, -1.0 / 3, -1.0 / 3, 1.0 / 3, 1.0 / 3, -1.0 / 3;
    CHECK((u - expect).lpNorm<Eigen::Infinity>() < 1e-12);

    TradePlan round = h_so(sys, u, unit_xhat(3));
    REQUIRE_FALSE(round.degenerate);
    CHECK((round.w - plan.w).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("prop-1 round trip holds over random plans") {
    std::mt19937 gen(13);
    std::normal_distribution<double> nrm(0.0, 1.0);
    int checked = 0;
    for (int trial = 0; checked < 1000 && trial < 3000; ++trial) {
        int n = 3 + static_cast<int>(gen() % 4);
        RandomSystem rs = random_constraint_system(10000 + static_cast<std::uint64_t>(trial), n);
        Eigen::VectorXd u(rs.links.size());
        for (int k = 0; k < rs.links.size(); ++k) u(k) = nrm(gen);
        TradePlan plan = h_so(rs.system, u, rs.xhat);
        if (plan.degenerate) continue;
        ++checked;
        Eigen::VectorXd u2 = c1_to_u(rs.links, plan.w, rs.xhat);
        CHECK((rs.system.a * u2).lpNorm<Eigen::Infinity>() < 1e-10);
        TradePlan round = h_so(rs.system, u2, rs.xhat);
        REQUIRE_FALSE(round.degenerate);
        CHECK((round.w - plan.w).lpNorm<Eigen::Infinity>() < 1e-12);
    }
    CHECK(checked == 1000);
}

TEST_CASE("arbitrage residuals: consistent predictions give zero alpha") {
    RandomSystem rs = random_constraint_system(3, 4);
    // make predictions exactly consistent from a potential
    Eigen::VectorXd v(4);
    v << 0.2, -0.1, 0.05, -0.15;
    Mat x(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) x(i, j) = std::exp(v(i) - v(j));
    ArbResiduals res = arbitrage_residuals(rs.links, x);
    CHECK(res.alpha.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("arbitrage residuals: inconsistent triangle and antisymmetry") {
    TradableLinks links = tradable_links(full_links(3), full_links(3), 0);
    Mat x(3, 3);
    x.setOnes();
    x(0, 1) = std::exp(1.0);
    x(1, 0) = std::exp(-1.0);
    x(0, 2) = std::exp(1.0);
    x(2, 0) = std::exp(-1.0);
    x(1, 2) = std::exp(1.0);
    x(2, 1) = std::exp(-1.0);
    ArbResiduals res = arbitrage_residuals(links, x);
    // links order (0,1),(0,2),(1,0),(1,2),(2,0),(2,1)
    CHECK(res.alpha(0) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(res.alpha(1) == doctest::Approx(-1.0 / 3).epsilon(1e-12));
    CHECK(res.alpha(3) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    for (size_t k = 0; k < links.links.size(); ++k) {
        auto [i, j] = links.links[k];
        int back = links.find(j, i);
        CHECK(std::abs(res.alpha(static_cast<int>(k)) + res.alpha(back)) < 1e-12);
    }
}

namespace {

StatArbDay make_day(int t, std::uint64_t seed, int n) {
    RandomSystem rs = random_constraint_system(seed, n);
    StatArbDay day;
    day.t = t;
    day.links = rs.links;
    day.xhat_sym = rs.xhat;
    day.system = rs.system;
    day.alpha = arbitrage_residuals(rs.links, rs.xhat).alpha;
    return day;
}

}  // namespace

TEST_CASE("statarb graph: static market averages equal single-date values") {
    StatArbDay day = make_day(30, 77, 4);
    std::deque<const StatArbDay*> hist;
    std::vector<StatArbDay> copies;
    for (int k = 0; k < 25; ++k) {
        StatArbDay c = day;
        c.t = 6 + k;
        copies.push_back(std::move(c));
    }
    for (const auto& c : copies) hist.push_back(&c);
    LookbackWindows w;
    StatArbGraph g = build_statarb_graph(hist, w, 1e-8);
    REQUIRE(g.exchanges.size() == static_cast<size_t>(day.links.size()));
    for (int k = 0; k < static_cast<int>(g.exchanges.size()); ++k)
        for (int wi = 0; wi < w.count(); ++wi)
            CHECK(g.node_feats(k, wi) == doctest::Approx(day.alpha(k)).epsilon(1e-12));
    // edge features equal the current projection entries
    for (size_t e = 0; e < g.src.size(); ++e) {
        double p = day.system.projection(g.src[e], g.dst[e]);
        for (int wi = 0; wi < w.count(); ++wi)
            CHECK(g.edge_feats(static_cast<int>(e), wi) == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("statarb graph: eps above the max projection entry empties the edges") {
    StatArbDay day = make_day(10, 78, 4);
    std::deque<const StatArbDay*> hist{&day};
    LookbackWindows w;
    StatArbGraph g = build_statarb_graph(hist, w, 10.0);
    CHECK(g.src.empty());
    CHECK(g.node_feats.rows() == day.links.size());
}

TEST_CASE("statarb graph features match a brute-force masked average") {
    // history with changing link membership (different systems per day)
    std::vector<StatArbDay> days;
    for (int k = 0; k < 10; ++k) days.push_back(make_day(20 + k, 200 + static_cast<std::uint64_t>(k), 4));
    std::deque<const StatArbDay*> hist;
    for (const auto& d : days) hist.push_back(&d);
    LookbackWindows w;
    w.windows = {1, 3, 7};
    StatArbGraph g = build_statarb_graph(hist, w, 1e-8);
    const StatArbDay& today = days.back();

    for (int k = 0; k < static_cast<int>(g.exchanges.size()); ++k) {
        auto link = g.exchanges[static_cast<size_t>(k)];
        for (int wi = 0; wi < w.count(); ++wi) {
            int span = w.windows[static_cast<size_t>(wi)];
            double sum = 0.0;
            int cnt = 0;
            for (const auto& d : days) {
                if (d.t < today.t - span + 1 || d.t > today.t) continue;
                int idx = d.links.find(link.first, link.second);
                if (idx < 0) continue;
                sum += d.alpha(idx);
                ++cnt;
            }
            double expect = cnt ? sum / cnt : 0.0;
            CHECK(g.node_feats(k, wi) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("fxsa batch loss: gradients match finite differences through h_SO") {
    // small generic instance; also pins the loss-branch genericity
    std::vector<StatArbDay> sa;
    for (int d = 0; d < 4; ++d) sa.push_back(make_day(50 + d, 900 + static_cast<std::uint64_t>(d), 4));
    LookbackWindows w;
    w.windows = {1, 2};
    std::vector<FxsaDay> days;
    std::mt19937 gen(17);
    std::normal_distribution<double> nrm(0.0, 0.03);
    for (int d = 0; d < 4; ++d) {
        FxsaDay fd;
        fd.day = &sa[static_cast<size_t>(d)];
        std::deque<const StatArbDay*> hist;
        for (int h = std::max(0, d - 1); h <= d; ++h) hist.push_back(&sa[static_cast<size_t>(h)]);
        fd.graph = build_statarb_graph(hist, w, 1e-8);
        fd.gain_coef.resize(sa[static_cast<size_t>(d)].links.size());
        for (int k = 0; k < fd.gain_coef.size(); ++k) fd.gain_coef(k) = nrm(gen);
        days.push_back(std::move(fd));
    }
    std::vector<const FxsaDay*> ptrs;
    for (const auto& d : days) ptrs.push_back(&d);

    GnnParams params = GnnParams::init(2, 2, 3, 2, GnnOutput::node, 5);
    auto loss_of = [&]() {
        Tape t;
        FxsaBatchResult r = fxsa_batch_loss(t, params, ptrs, 1e-12, 1e-12);
        REQUIRE(r.loss >= 0);
        return t.scalar(r.loss);
    };
    Tape t;
    FxsaBatchResult r = fxsa_batch_loss(t, params, ptrs, 1e-12, 1e-12);
    REQUIRE(r.loss >= 0);
    t.backward(r.loss);

    auto tensors = params.tensors();
    const double h = 1e-5;
    for (size_t k = 0; k < tensors.size(); ++k) {
        Mat analytic = t.grad_or_zero(r.forward.param_refs[k]);
        for (Eigen::Index rr = 0; rr < tensors[k]->rows(); ++rr) {
            for (Eigen::Index cc = 0; cc < tensors[k]->cols(); ++cc) {
                double saved = (*tensors[k])(rr, cc);
                (*tensors[k])(rr, cc) = saved + h;
                double up = loss_of();
                (*tensors[k])(rr, cc) = saved - h;
                double dn = loss_of();
                (*tensors[k])(rr, cc) = saved;
                double fd = (up - dn) / (2 * h);
                double denom = std::max({1e-7, std::abs(fd), std::abs(analytic(rr, cc))});
                CHECK(std::abs(analytic(rr, cc) - fd) / denom < 1e-5);
            }
        }
    }
}

TEST_CASE("decide_trades with a zero-parameter model emits a valid plan") {
    std::vector<StatArbDay> sa;
    sa.push_back(make_day(40, 321, 4));
    LookbackWindows w;
    w.windows = {1};
    FxsaDay fd;
    fd.day = &sa[0];
    std::deque<const StatArbDay*> hist{&sa[0]};
    fd.graph = build_statarb_graph(hist, w, 1e-8);
    fd.gain_coef = Eigen::VectorXd::Zero(sa[0].links.size());

    GnnParams p = GnnParams::init(1, 1, 2, 1, GnnOutput::node, 1);
    for (Mat* m : p.tensors()) m->setZero();
    p.head.b(0, 0) = 1.0;  // constant positive raw output
    TradePlan plan = decide_trades(p, fd);
    // constant vector projected through P; either degenerate or certified
    if (!plan.degenerate) {
        CHECK(verify_c1(sa[0].links, plan.w, sa[0].xhat_sym).ok);
    }
}

TEST_CASE("train_fxsa learns on a planted persistent-arbitrage market") {
    // one fixed system, constant planted gains favoring a specific link
    std::vector<StatArbDay> sa;
    for (int d = 0; d < 40; ++d) {
        StatArbDay day = make_day(10 + d, 1234, 4);  // same seed: static market, kernel dim 3
        day.t = 10 + d;
        sa.push_back(std::move(day));
    }
    LookbackWindows w;
    w.windows = {1, 3};
    std::vector<FxsaDay> days;
    std::mt19937 gen(31);
    std::normal_distribution<double> noise(0.0, 0.001);
    for (size_t d = 0; d < sa.size(); ++d) {
        FxsaDay fd;
        fd.day = &sa[d];
        std::deque<const StatArbDay*> hist;
        for (size_t h = d >= 3 ? d - 3 : 0; h <= d; ++h) hist.push_back(&sa[h]);
        fd.graph = build_statarb_graph(hist, w, 1e-8);
        fd.gain_coef.resize(sa[d].links.size());
        // persistent signal: the kernel direction pays
        Eigen::VectorXd pay = sa[d].system.basis.col(0);
        for (int k = 0; k < fd.gain_coef.size(); ++k)
            fd.gain_coef(k) = 0.01 * pay(k) + noise(gen);
        days.push_back(std::move(fd));
    }
    std::vector<const FxsaDay*> train, val;
    for (size_t d = 0; d < days.size(); ++d)
        (d < 30 ? train : val).push_back(&days[d]);

    FxsaTrainConfig cfg;
    cfg.max_epochs = 30;
    cfg.patience = 30;
    cfg.batch_size = 8;
    cfg.seed = 3;
    std::vector<GridPoint> grid{{400, 1}};
    FxsaTrained trained = train_fxsa(train, val, grid, cfg);

    // a persistent planted signal should push the loss into the profitable
    // (negative) branch
    CHECK(trained.validation_loss < 0.0);
    auto eval = [&](const GnnParams& p) {
        Tape t;
        FxsaBatchResult r = fxsa_batch_loss(t, p, val, 1e-12, 1e-12);
        REQUIRE(r.loss >= 0);
        return t.scalar(r.loss);
    };
    CHECK(trained.validation_loss == doctest::Approx(eval(trained.params)).epsilon(1e-12));

    // determinism
    FxsaTrained again = train_fxsa(train, val, grid, cfg);
    auto ta = trained.params.tensors();
    auto tb = again.params.tensors();
    for (size_t k = 0; k < ta.size(); ++k)
        CHECK((*ta[k] - *tb[k]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("h_SO positive homogeneity") {
    std::mt19937 gen(41);
    std::normal_distribution<double> nrm(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        RandomSystem rs = random_constraint_system(6000 + static_cast<std::uint64_t>(trial), 4);
        Eigen::VectorXd u(rs.links.size());
        for (int k = 0; k < rs.links.size(); ++k) u(k) = nrm(gen);
        TradePlan a = h_so(rs.system, u, rs.xhat);
        TradePlan b = h_so(rs.system, (2.0 * u).eval(), rs.xhat);  // exact scaling
        CHECK(a.degenerate == b.degenerate);
        if (!a.degenerate) CHECK((a.w - b.w).lpNorm<Eigen::Infinity>() == 0.0);
    }
}
