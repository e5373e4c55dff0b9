#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fxarb/graph.hpp"
#include "fxarb/synthetic.hpp"

using namespace fxarb;

TEST_CASE("no-noise no-signal construction is arbitrage-free") {
    SyntheticConfig cfg;
    cfg.n_currencies = 5;
    cfg.n_days = 50;
    cfg.sigma_alpha = 0.0;
    cfg.signal_strength = 0.0;
    cfg.seed = 7;
    auto mkt = generate_synthetic(cfg);
    for (int t = 1; t <= cfg.n_days; ++t) {
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j)
                for (int k = 0; k < 5; ++k) {
                    if (i == j || j == k || k == i) continue;
                    double prod = mkt.fx.rate(t, i, j) * mkt.fx.rate(t, j, k) *
                                  mkt.fx.rate(t, k, i);
                    CHECK(std::abs(prod - 1.0) < 1e-12);
                }
    }
}

TEST_CASE("same seed twice gives bit-identical panels") {
    SyntheticConfig cfg;
    cfg.n_currencies = 6;
    cfg.n_days = 120;
    cfg.sigma_alpha = 0.01;
    cfg.signal_strength = 0.2;
    cfg.missing_prob = 0.05;
    cfg.seed = 42;
    auto a = generate_synthetic(cfg);
    auto b = generate_synthetic(cfg);
    for (int t = 1; t <= cfg.n_days; ++t) {
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) {
                if (i == j) continue;
                CHECK(a.fx.has(t, i, j) == b.fx.has(t, i, j));
                if (a.fx.has(t, i, j)) {
                    // bit-identical, not approximately equal
                    CHECK(a.fx.rate(t, i, j) == b.fx.rate(t, i, j));
                }
            }
            CHECK(a.ir.rate(t, i, 0) == b.ir.rate(t, i, 0));
        }
    }
}

TEST_CASE("different seeds differ") {
    SyntheticConfig cfg;
    cfg.n_currencies = 4;
    cfg.n_days = 10;
    cfg.seed = 1;
    auto a = generate_synthetic(cfg);
    cfg.seed = 2;
    auto b = generate_synthetic(cfg);
    CHECK(a.fx.rate(1, 0, 1) != b.fx.rate(1, 0, 1));
}

TEST_CASE("planted arbitrage noise is recovered by the value solver") {
    // sigma_alpha = 0.01; the pooled dof-corrected residual std must land
    // within 10% over >= 1e4 links.
    SyntheticConfig cfg;
    cfg.n_currencies = 10;
    cfg.n_days = 300;  // 45 links/day -> 13500 links
    cfg.sigma_alpha = 0.01;
    cfg.signal_strength = 0.0;
    cfg.seed = 99;
    auto mkt = generate_synthetic(cfg);
    FxView fx = FxView::unrestricted(mkt.fx);
    double rss = 0.0;
    long dof = 0;
    long n_links = 0;
    for (int t = 1; t <= cfg.n_days; ++t) {
        LinkSet links = reciprocal_links(fx, t);
        auto rates = link_log_rates(fx, t, links);
        auto cv = currency_values(rates, cfg.n_currencies);
        int touched = 0;
        for (int i = 0; i < cfg.n_currencies; ++i)
            if (cv.component[i] >= 0) ++touched;
        for (const auto& [i, j, r] : cv.residuals) {
            (void)i;
            (void)j;
            rss += r * r;
        }
        n_links += static_cast<long>(cv.residuals.size());
        dof += static_cast<long>(cv.residuals.size()) - (touched - cv.n_components);
    }
    REQUIRE(n_links >= 10000);
    double est = std::sqrt(rss / dof);
    CHECK(est > 0.009);
    CHECK(est < 0.011);
}

TEST_CASE("IR series are positive and slowly varying") {
    SyntheticConfig cfg;
    cfg.n_currencies = 3;
    cfg.n_days = 500;
    cfg.seed = 5;
    auto mkt = generate_synthetic(cfg);
    for (int t = 1; t <= cfg.n_days; ++t) {
        for (int i = 0; i < 3; ++i) {
            CHECK(mkt.ir.rate(t, i, 0) > 0.0);
            if (t > 1)
                CHECK(std::abs(mkt.ir.rate(t, i, 0) - mkt.ir.rate(t - 1, i, 0)) < 0.01);
        }
    }
}

TEST_CASE("config validation") {
    SyntheticConfig cfg;
    cfg.signal_strength = 1.0;
    CHECK_THROWS_AS(generate_synthetic(cfg), std::invalid_argument);
    cfg = SyntheticConfig{};
    cfg.sigma_alpha = -1;
    CHECK_THROWS_AS(generate_synthetic(cfg), std::invalid_argument);
    cfg = SyntheticConfig{};
    cfg.n_currencies = 1;
    CHECK_THROWS_AS(generate_synthetic(cfg), std::invalid_argument);
}

TEST_CASE("missing_prob removes both directions of a pair") {
    SyntheticConfig cfg;
    cfg.n_currencies = 8;
    cfg.n_days = 60;
    cfg.missing_prob = 0.3;
    cfg.seed = 11;
    auto mkt = generate_synthetic(cfg);
    int missing = 0, present = 0;
    for (int t = 1; t <= cfg.n_days; ++t)
        for (int i = 0; i < 8; ++i)
            for (int j = i + 1; j < 8; ++j) {
                CHECK(mkt.fx.has(t, i, j) == mkt.fx.has(t, j, i));
                (mkt.fx.has(t, i, j) ? present : missing)++;
            }
    CHECK(missing > 0);
    CHECK(present > 0);
}
