#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "nsw/control_limits.hpp"
#include "nsw/dfewma.hpp"

using nsw::DfewmaConfig;
using nsw::ObservationMatrix;
using nsw::RankCentering;

namespace {

DfewmaConfig config(std::size_t p, std::size_t W, double lambda, RankCentering c) {
    DfewmaConfig cfg;
    cfg.p = p;
    cfg.window_W = W;
    cfg.lambda = lambda;
    cfg.centering = c;
    return cfg;
}

ObservationMatrix rounded_normals(std::uint64_t seed, std::size_t rows, std::size_t p) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    ObservationMatrix x(rows, p);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t r = 0; r < p; ++r) x(i, r) = std::round(4.0 * normal(rng)) / 4.0;  // ties
    return x;
}

}  // namespace

TEST_CASE("rank table") {
    const ObservationMatrix reference(3, 1, {0.5, 2.5, 4.5});
    const ObservationMatrix stream(4, 1, {1.0, 3.0, 5.0, 2.0});
    const auto t = nsw::rank_table(reference.view(), stream.view());
    CHECK(t(0, 0) == 2.0);
    CHECK(t(1, 0) == 5.0);
    CHECK(t(2, 0) == 7.0);
    CHECK(t(3, 0) == 3.0);

    SUBCASE("ties get average ranks") {
        const ObservationMatrix ref(2, 1, {1.0, 2.0});
        const ObservationMatrix s(2, 1, {2.0, 2.0});
        const auto u = nsw::rank_table(ref.view(), s.view());
        CHECK(u(0, 0) == 3.0);  // positions 2, 3, 4 share rank 3
        CHECK(u(1, 0) == 3.0);
    }

    SUBCASE("pooled ranks sum to N(N+1)/2") {
        const auto ref = rounded_normals(1, 30, 3);
        const auto s = rounded_normals(2, 25, 3);
        const auto stream_ranks = nsw::rank_table(ref.view(), s.view());
        const auto ref_ranks = nsw::rank_table(s.view(), ref.view());
        for (std::size_t r = 0; r < 3; ++r) {
            double sum = 0.0;
            for (std::size_t i = 0; i < 25; ++i) sum += stream_ranks(i, r);
            for (std::size_t i = 0; i < 30; ++i) sum += ref_ranks(i, r);
            CHECK(sum == 55.0 * 56.0 / 2.0);
        }
    }
}

TEST_CASE("hand-computed statistic, m0 = 3, n = 4, W = 3") {
    const ObservationMatrix reference(3, 1, {0.5, 2.5, 4.5});
    const ObservationMatrix stream(4, 1, {1.0, 3.0, 5.0, 2.0});
    // window ranks 5, 7, 3 with weights 0.25, 0.5, 1; N = 7; D = sqrt(3 * 8 * 4 / 12) = sqrt(8)
    const auto per_rank = config(1, 3, 0.5, RankCentering::kPerRank);
    // (0.25 * 1 + 0.5 * 3 + 1 * (-1))^2 / 8
    CHECK(nsw::dfewma_statistic(reference.view(), stream.view(), per_rank) ==
          doctest::Approx(0.5625 / 8.0).epsilon(1e-14));
    const auto window_sum = config(1, 3, 0.5, RankCentering::kWindowSum);
    // (0.25 * (5 - 12) + 0.5 * (7 - 12) + 1 * (3 - 12))^2 / 8
    CHECK(nsw::dfewma_statistic(reference.view(), stream.view(), window_sum) ==
          doctest::Approx(13.25 * 13.25 / 8.0).epsilon(1e-14));
}

TEST_CASE("lambda = 1 keeps only the newest rank") {
    const auto ref = rounded_normals(3, 20, 2);
    const auto s = rounded_normals(4, 12, 2);
    const auto cfg = config(2, 5, 1.0, RankCentering::kPerRank);
    const auto ranks = nsw::rank_table(ref.view(), s.view());
    const double N = 32.0;
    const double D = std::sqrt(5.0 * (N + 1.0) * (N - 5.0) / 12.0);
    double expected = 0.0;
    for (std::size_t r = 0; r < 2; ++r) {
        const double t = (ranks(11, r) - (N + 1.0) / 2.0) / D;
        expected += t * t;
    }
    CHECK(nsw::dfewma_statistic(ref.view(), s.view(), cfg) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("statistic is rank-based") {
    const auto ref = rounded_normals(5, 40, 3);
    const auto s = rounded_normals(6, 30, 3);
    auto transform = [](const ObservationMatrix& x) {
        ObservationMatrix y = x;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            y(i, 0) = std::exp(x(i, 0));
            y(i, 2) = 10.0 * x(i, 2) * x(i, 2) * x(i, 2) - 7.0;
        }
        return y;
    };
    const auto cfg = config(3, 10, 0.2, RankCentering::kPerRank);
    CHECK(nsw::dfewma_statistic(transform(ref).view(), transform(s).view(), cfg) ==
          nsw::dfewma_statistic(ref.view(), s.view(), cfg));
}

TEST_CASE("tracker matches the from-scratch statistic") {
    for (const auto c : {RankCentering::kPerRank, RankCentering::kWindowSum}) {
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            const std::size_t p = 1 + seed % 3;
            const std::size_t W = 3 + seed;
            const auto ref = rounded_normals(seed, 15 + seed, p);
            const auto s = rounded_normals(seed + 100, 40, p);
            const auto cfg = config(p, W, 0.15, c);
            nsw::DfewmaTracker tracker(ref.view(), cfg);
            for (std::size_t n = 1; n <= 40; ++n) {
                const auto t = tracker.observe(s.row(n - 1));
                if (n < W) {
                    CHECK_FALSE(t.has_value());
                    CHECK_THROWS_AS((void)nsw::dfewma_statistic(ref.view(), s.rows_slice(0, n), cfg),
                                    std::invalid_argument);
                    continue;
                }
                REQUIRE(t.has_value());
                const double expected = nsw::dfewma_statistic(ref.view(), s.rows_slice(0, n), cfg);
                CHECK(*t == doctest::Approx(expected).epsilon(1e-12));
                CHECK(*t >= 0.0);
            }
        }
    }
}

TEST_CASE("constant stream keeps a constant centered rank") {
    // Every stream value c sits above L = 4 reference values, so each window
    // rank is L + (n + 1) / 2 and the per-rank centred value is L - m0 / 2.
    const ObservationMatrix ref(10, 1, {-5, -4, -3, -2, 1, 2, 3, 4, 5, 6});
    const auto cfg = config(1, 4, 0.3, RankCentering::kPerRank);
    const ObservationMatrix stream(30, 1, std::vector<double>(30, 0.0));
    const double weight_sum = 1.0 + 0.7 + 0.49 + 0.343;
    std::vector<double> expected;
    for (std::size_t n = 4; n <= 30; ++n) {
        const double N = 10.0 + static_cast<double>(n);
        const double D = std::sqrt(4.0 * (N + 1.0) * (N - 4.0) / 12.0);
        const double t = weight_sum * (4.0 - 5.0) / D;
        expected.push_back(t * t);
        CHECK(nsw::dfewma_statistic(ref.view(), stream.rows_slice(0, n), cfg) ==
              doctest::Approx(t * t).epsilon(1e-12));
    }
    // the alarm is the first n whose statistic exceeds h
    auto with_limit = cfg;
    with_limit.limit_h = 0.5 * (expected[0] + expected[1]);
    const auto alarm = nsw::dfewma_monitor(ref.view(), stream.view(), with_limit);
    REQUIRE(alarm.has_value());
    CHECK(alarm->alarm_time_n == 4);
    with_limit.limit_h = expected[0];  // strict exceedance: no later value is larger
    CHECK_FALSE(nsw::dfewma_monitor(ref.view(), stream.view(), with_limit).has_value());
}

TEST_CASE("config validation") {
    auto cfg = config(2, 5, 0.1, RankCentering::kPerRank);
    CHECK_NOTHROW(cfg.validate());
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.lambda = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = config(0, 5, 0.1, RankCentering::kPerRank);
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK(DfewmaConfig{}.centering == RankCentering::kPerRank);
}

TEST_CASE("calibrated limit holds its false-alarm rate") {
    auto cfg = config(5, 10, 0.1, RankCentering::kPerRank);
    cfg.m0 = 50;
    const std::size_t horizon = 60;
    const auto maxima = nsw::dfewma_null_maxima(cfg, horizon, 1000, 21);
    CHECK(maxima == nsw::dfewma_null_maxima(cfg, horizon, 1000, 21, 3));
    cfg.limit_h = nsw::calibrate_dfewma_limit(cfg, horizon, 1000, 21);
    CHECK(cfg.limit_h == nsw::empirical_quantile(maxima, 0.99));

    const auto fresh = nsw::dfewma_null_maxima(cfg, horizon, 1000, 22);
    const auto alarms = std::count_if(fresh.begin(), fresh.end(),
                                      [&](double m) { return m > cfg.limit_h; });
    const double fap = static_cast<double>(alarms) / 1000.0;
    CHECK(fap >= 0.002);
    CHECK(fap <= 0.03);
}

TEST_CASE("scenario runs") {
    nsw::ScenarioSpec spec;
    spec.p = 10;
    spec.window_W = 10;
    spec.tau = 30;
    spec.horizon_n = 60;
    spec.delta = 2.0;
    spec.sparsity_v = 0.2;
    spec.replications_R = 100;

    auto cfg = config(10, 10, 0.1, RankCentering::kPerRank);
    cfg.m0 = 50;
    cfg.limit_h = nsw::calibrate_dfewma_limit(cfg, spec.horizon_n, 500, 3);
    const auto m = nsw::run_dfewma_scenario(spec, {}, cfg, 1);
    CHECK(m.dr > 0.9);
    CHECK(m.ced > 0.0);
    CHECK(std::isnan(m.cpe));
    CHECK(std::isnan(m.drv));
    const auto again = nsw::run_dfewma_scenario(spec, {}, cfg, 3);
    CHECK(again.dr == m.dr);
    CHECK(again.ced == m.ced);

    SUBCASE("the window-sum centering cannot see an upward shift") {
        auto printed = cfg;
        printed.centering = RankCentering::kWindowSum;
        printed.limit_h = nsw::calibrate_dfewma_limit(printed, spec.horizon_n, 500, 3);
        const auto p = nsw::run_dfewma_scenario(spec, {}, printed, 1);
        // every IC run already tops out at n = W, before the change
        CHECK(p.dr < 0.1);
    }
}
