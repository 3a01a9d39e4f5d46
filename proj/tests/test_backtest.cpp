#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>

#include "test_util.hpp"

using namespace covden;

namespace {

WalkForwardConfig small_config(Index window, Date split) {
    WalkForwardConfig c;
    c.t_in = window;
    c.t_out = window;
    c.delta_t = window;
    c.split_date = split;
    return c;
}

// Returns with a common factor so the covariance is far from diagonal.
ReturnsPanel factor_panel(Index p, Index days, std::uint64_t seed) {
    ReturnsPanel r = testutil::gaussian_panel(p, days, seed, 0.01);
    RandomStream rng(seed + 1);
    const Matrix f = rng.gaussian_matrix(1, days);
    for (Index i = 0; i < p; ++i) r.returns.row(i) += (0.005 * static_cast<double>(i + 1)) * f;
    return r;
}

}  // namespace

TEST(Schedule, RebalanceRows) {
    const ReturnsPanel r = testutil::gaussian_panel(2, 200, 1);
    const auto rows = rebalance_schedule(r, small_config(30, testutil::day(20)));
    EXPECT_EQ(rows, (std::vector<Index>{20, 50, 80, 110, 140, 170}));
    EXPECT_EQ(split_index(r, testutil::day(20)), 20);
    EXPECT_EQ(split_index(r, testutil::day(500)), 200);
    EXPECT_THROW(rebalance_schedule(r, small_config(30, testutil::day(180))), InvalidParameter);
}

TEST(Schedule, PaperCalendarHasSevenRebalances) {
    const Date start = parse_date("2020-08-02");
    const Date end = parse_date("2025-07-31");
    const auto days = static_cast<Index>((end - start).count() + 1);
    EXPECT_EQ(days, 1825);
    const ReturnsPanel r = testutil::gaussian_panel(2, days, 1, 0.02, start);
    WalkForwardConfig c;
    c.split_date = parse_date("2021-11-09");
    const auto rows = rebalance_schedule(r, c);
    ASSERT_EQ(rows.size(), 7u);
    EXPECT_EQ(rows.front(), 464);
    EXPECT_EQ(format_date(r.dates[static_cast<std::size_t>(rows.back() + 182 - 1)]), "2025-05-05");
}

TEST(WalkForward, SingleAssetHoldsEverything) {
    const ReturnsPanel r = testutil::gaussian_panel(1, 120, 2);
    const BacktestReport b = walk_forward(r, small_config(20, testutil::day(40)));
    ASSERT_EQ(b.weight_history.size(), 4u);
    for (const auto& w : b.weight_history) EXPECT_EQ(w(0), 1.0);
    ASSERT_EQ(b.daily_returns.size(), 80);
    for (Index t = 0; t < 80; ++t) EXPECT_NEAR(b.daily_returns(t), std::expm1(r.returns(0, 40 + t)), 1e-15);
    EXPECT_EQ(b.metrics.turnover, 0.0);
}

TEST(WalkForward, NaiveMatchesDirectLongOnlySolve) {
    const ReturnsPanel r = factor_panel(5, 150, 3);
    WalkForwardConfig c = small_config(30, testutil::day(60));
    c.seriation_per_window = false;
    const BacktestReport b = walk_forward(r, c);
    const auto rows = rebalance_schedule(r, c);
    ASSERT_EQ(b.weight_history.size(), rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const Matrix s = window_covariance(r.returns.middleCols(rows[k] - 30, 30)).values();
        EXPECT_EQ(b.weight_history[k].weights, mvp_plus_solve(s).weights.weights);
    }
}

TEST(WalkForward, SeriationDoesNotChangeNaiveWeights) {
    const ReturnsPanel r = factor_panel(6, 150, 4);
    WalkForwardConfig on = small_config(30, testutil::day(60));
    WalkForwardConfig off = on;
    off.seriation_per_window = false;
    const BacktestReport a = walk_forward(r, on);
    const BacktestReport b = walk_forward(r, off);
    for (std::size_t k = 0; k < a.weight_history.size(); ++k) {
        EXPECT_LT((a.weight_history[k].weights - b.weight_history[k].weights).cwiseAbs().maxCoeff(), 1e-9);
    }
    EXPECT_TRUE(a.windows[0].seriated);
    EXPECT_FALSE(b.windows[0].seriated);
}

TEST(WalkForward, NoLookAhead) {
    const ReturnsPanel r = factor_panel(4, 160, 5);
    const WalkForwardConfig c = small_config(30, testutil::day(40));
    const BacktestReport base = walk_forward(r, c);
    const auto rows = rebalance_schedule(r, c);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        ReturnsPanel changed = r;
        changed.returns.rightCols(r.day_count() - rows[k]) *= -3.0;
        const BacktestReport b = walk_forward(changed, c);
        for (std::size_t j = 0; j <= k; ++j) EXPECT_EQ(b.weight_history[j].weights, base.weight_history[j].weights);
    }
}

TEST(WalkForward, EveryEstimatorGivesFeasibleWeights) {
    const ReturnsPanel r = factor_panel(8, 140, 6);
    for (EstimatorId id : {EstimatorId::naive, EstimatorId::lp, EstimatorId::alca, EstimatorId::two_step_lp}) {
        WalkForwardConfig c = small_config(40, testutil::day(50));
        c.estimator = id;
        const BacktestReport b = walk_forward(r, c);
        EXPECT_EQ(b.strategy, to_string(id));
        for (const auto& w : b.weight_history) {
            EXPECT_GE(w.weights.minCoeff(), 0.0);
            EXPECT_NEAR(w.weights.sum(), 1.0, 1e-12);
        }
        for (const auto& d : b.windows) EXPECT_LE(d.kkt_residual, 1e-9);
        EXPECT_GE(b.metrics.turnover, 0.0);
        EXPECT_LE(b.metrics.turnover, 2.0);
    }
}

TEST(WalkForward, TrainedEstimatorRetrainsPerWindow) {
    const ReturnsPanel r = factor_panel(3, 140, 7);
    WalkForwardConfig c = small_config(20, testutil::day(80));
    c.estimator = EstimatorId::two_step_hybrid;
    nn::DenoiserConfig d;
    d.num_blocks = 1;
    d.num_filters = 2;
    d.epochs = 1;
    d.batch_size = 4;
    c.denoiser = d;
    c.train_window_count = 5;
    c.pre_history_days = 30;
    const BacktestReport b = walk_forward(r, c);
    ASSERT_EQ(b.windows.size(), 3u);
    for (const auto& w : b.windows) EXPECT_EQ(w.train_loss.size(), 1u);
    EXPECT_EQ(walk_forward(r, c).daily_returns, b.daily_returns);

    c.pre_history_days = 10;  // 30 days of history, rolling windows need 2 * 20 + 4
    EXPECT_THROW(walk_forward(r, c), InvalidParameter);
    c.pre_history_days = 30;
    c.denoiser.reset();
    EXPECT_THROW(walk_forward(r, c), InvalidParameter);
}

TEST(WalkForward, ShortHistoryIsReported) {
    const ReturnsPanel r = testutil::gaussian_panel(3, 100, 1);
    try {
        walk_forward(r, small_config(30, testutil::day(20)));
        FAIL() << "expected InvalidParameter";
    } catch (const InvalidParameter& e) {
        EXPECT_NE(std::string(e.what()).find("short by 10"), std::string::npos);
    }
}

TEST(WalkForward, DegenerateWindowNamesTheWindow) {
    ReturnsPanel r = factor_panel(3, 100, 1);
    r.returns.block(1, 40, 1, 20).setZero();
    try {
        walk_forward(r, small_config(20, testutil::day(20)));
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("window 2"), std::string::npos) << e.what();
    }
}

TEST(Baselines, UniformSingleAssetEqualsBuyAndHold) {
    const ReturnsPanel r = testutil::gaussian_panel(1, 100, 3);
    const WalkForwardConfig c = small_config(20, testutil::day(20));
    const BacktestReport u = uniform_portfolio(r, c);
    const BacktestReport h = buy_and_hold(r, "A0", c);
    EXPECT_EQ(u.daily_returns, h.daily_returns);
    EXPECT_EQ(h.strategy, "buy-and-hold:A0");
    EXPECT_EQ(h.weight_history.size(), 1u);
    EXPECT_THROW(buy_and_hold(r, "BTC", c), InvalidParameter);
}

TEST(Baselines, UniformOnIdenticalAssetsTracksOneAsset) {
    ReturnsPanel r = testutil::gaussian_panel(3, 90, 4);
    r.returns.row(1) = r.returns.row(0);
    r.returns.row(2) = r.returns.row(0);
    const BacktestReport u = uniform_portfolio(r, small_config(30, testutil::day(30)));
    for (Index t = 0; t < u.daily_returns.size(); ++t) EXPECT_NEAR(u.daily_returns(t), std::expm1(r.returns(0, 30 + t)), 1e-15);
}

TEST(Baselines, UniformDriftsWithinAPeriod) {
    const ReturnsPanel r = testutil::gaussian_panel(2, 60, 5);
    const BacktestReport u = uniform_portfolio(r, small_config(30, testutil::day(30)));
    const double expected = 0.5 * (std::exp(r.returns.row(0).tail(30).sum()) + std::exp(r.returns.row(1).tail(30).sum()));
    EXPECT_NEAR(u.metrics.cumulative_return, expected, 1e-12);
    EXPECT_EQ(u.metrics.turnover, 0.0);
}

TEST(Baselines, UniformVarianceOfIndependentAssets) {
    const ReturnsPanel r = testutil::gaussian_panel(4, 4000, 6, 0.02);
    const BacktestReport u = uniform_portfolio(r, small_config(100, testutil::day(100)));
    const Vector d = u.daily_returns;
    const double var = (d.array() - d.mean()).square().sum() / static_cast<double>(d.size() - 1);
    EXPECT_NEAR(var / (0.0004 / 4.0), 1.0, 0.1);
}

TEST(Baselines, LogModeBooksExpOfWeightedLogReturn) {
    const ReturnsPanel r = testutil::gaussian_panel(2, 60, 7);
    WalkForwardConfig c = small_config(30, testutil::day(30));
    c.return_mode = ReturnMode::log;
    const BacktestReport u = uniform_portfolio(r, c);
    for (Index t = 0; t < 30; ++t) {
        EXPECT_NEAR(u.daily_returns(t), std::expm1(0.5 * (r.returns(0, 30 + t) + r.returns(1, 30 + t))), 1e-15);
    }
    EXPECT_EQ(parse_return_mode("log"), ReturnMode::log);
    EXPECT_THROW(parse_return_mode("arith"), InvalidParameter);
}

TEST(Report, DeterministicOutputs) {
    const ReturnsPanel r = factor_panel(5, 150, 8);
    WalkForwardConfig c = small_config(30, testutil::day(60));
    c.estimator = EstimatorId::two_step_lp;
    const BacktestReport a = walk_forward(r, c);
    const BacktestReport b = walk_forward(r, c);
    EXPECT_EQ(backtest_metrics_json(a), backtest_metrics_json(b));
    EXPECT_EQ(backtest_weights_csv(a), backtest_weights_csv(b));
    EXPECT_EQ(backtest_daily_csv(a), backtest_daily_csv(b));
    EXPECT_EQ(a.drift_turnover, b.drift_turnover);
}

TEST(Report, FilesAndLayout) {
    const ReturnsPanel r = factor_panel(3, 120, 9);
    const BacktestReport b = walk_forward(r, small_config(30, testutil::day(30)));
    const auto dir = std::filesystem::temp_directory_path() / "covden_test_backtest";
    std::filesystem::create_directories(dir);
    write_backtest_report(b, dir);
    for (const char* f : {"metrics.json", "weights.csv", "daily_returns.csv", "wealth.csv"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    const auto j = nlohmann::json::parse(io::read_file(dir / "metrics.json"));
    EXPECT_EQ(j["strategy"], "naive");
    EXPECT_EQ(j["rebalances"], 3);
    EXPECT_EQ(j["days"], 90);
    EXPECT_EQ(j["windows"].size(), 3u);
    EXPECT_TRUE(j["metrics"].contains("sharpe"));
    const std::string weights = backtest_weights_csv(b);
    EXPECT_EQ(weights.substr(0, weights.find('\n')), "date,A0,A1,A2");
    const std::string wealth = backtest_wealth_csv(b);
    EXPECT_EQ(std::count(wealth.begin(), wealth.end(), '\n'), 91);
    std::filesystem::remove_all(dir);
}
