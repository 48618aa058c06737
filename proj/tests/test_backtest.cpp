#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "factornet/backtest.hpp"
#include "factornet/errors.hpp"
#include "support/oracles.hpp"

using namespace factornet;

TEST_CASE("information_ratio: portfolio equal to benchmark gives 0") {
    std::vector<double> r = {0.01, -0.02, 0.005, 0.01};
    auto ir = information_ratio(r, r);
    CHECK(ir.value == 0.0);
    CHECK_FALSE(ir.unbounded);
}

TEST_CASE("information_ratio: constant positive active return is flagged unbounded") {
    std::vector<double> port(24, 0.02), bench(24, 0.01);
    auto ir = information_ratio(port, bench);
    CHECK(ir.unbounded);
    CHECK(ir.value > 0.0);
}

TEST_CASE("information_ratio: alternating +/- 1% over 24 months has zero mean") {
    std::vector<double> port, bench(24, 0.0);
    for (int i = 0; i < 24; ++i) port.push_back(i % 2 == 0 ? 0.01 : -0.01);
    auto ir = information_ratio(port, bench);
    CHECK(ir.value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("information_ratio: sign equals sign of mean active return") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> port, bench;
        for (int i = 0; i < 30; ++i) {
            port.push_back(rng.normal(0.0, 0.02));
            bench.push_back(rng.normal(0.0, 0.02));
        }
        double mean = 0.0;
        for (std::size_t i = 0; i < port.size(); ++i) mean += port[i] - bench[i];
        auto ir = information_ratio(port, bench);
        if (mean > 0) CHECK(ir.value > 0.0);
        if (mean < 0) CHECK(ir.value < 0.0);
    }
}

TEST_CASE("information_ratio validates lengths") {
    std::vector<double> a(5, 0.0), b(4, 0.0);
    CHECK_THROWS_AS(information_ratio(a, b), ValidationError);
}

TEST_CASE("select_top_n: basic, ties, full universe") {
    Eigen::VectorXd p(3);
    p << 3.0, 1.0, 2.0;
    CHECK(select_top_n(p, 2) == std::vector<int>{0, 2});
    Eigen::VectorXd q = Eigen::VectorXd::Constant(4, 1.0);
    CHECK(select_top_n(q, 2) == std::vector<int>{0, 1});  // stable tie rule
    CHECK(select_top_n(p, 3) == std::vector<int>{0, 1, 2});
    CHECK_THROWS_AS(select_top_n(p, 0), ValidationError);
    CHECK_THROWS_AS(select_top_n(p, 4), ValidationError);
}

TEST_CASE("select_top_n: membership invariant under increasing transforms") {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd p(12);
        for (int i = 0; i < 12; ++i) p(i) = rng.normal();
        auto base = select_top_n(p, 4);
        Eigen::VectorXd q = (3.0 * p).array().exp();  // strictly increasing
        CHECK(select_top_n(q, 4) == base);
    }
}

namespace {

BacktestConfig small_config(BacktestMode mode, std::uint64_t seed) {
    BacktestConfig cfg;
    cfg.window = 8;
    cfg.portfolio_sizes = {3, 5};
    cfg.mode = mode;
    cfg.seed = seed;
    cfg.train.epochs = 60;
    cfg.train.seed = seed;
    cfg.train.record_loss_trace = false;
    cfg.n_random_trials = 50;
    return cfg;
}

}  // namespace

TEST_CASE("run_backtest: perfect foresight dominates every other mode") {
    FactorPanel panel = gen_het_panel(20, 15, 3, {}, 5);
    auto perfect = run_backtest(panel, small_config(BacktestMode::perfect_foresight, 1));
    auto linear = run_backtest(panel, small_config(BacktestMode::linear, 1));
    auto random = run_backtest(panel, small_config(BacktestMode::random, 1));
    for (int n : {3, 5}) {
        CHECK(perfect.information_ratios[n].value > linear.information_ratios[n].value);
        CHECK(perfect.information_ratios[n].value > random.random_median_ir[n]);
    }
}

TEST_CASE("run_backtest: random mode brackets zero skill") {
    FactorPanel panel = gen_het_panel(30, 20, 3, {}, 8);
    auto cfg = small_config(BacktestMode::random, 2);
    cfg.n_random_trials = 200;
    auto result = run_backtest(panel, cfg);
    for (int n : {3, 5}) {
        const auto& irs = result.random_trial_irs[n];
        REQUIRE(irs.size() == 200);
        auto mm = std::minmax_element(irs.begin(), irs.end());
        CHECK(*mm.first < 0.0);
        CHECK(*mm.second > 0.0);
        CHECK(std::abs(result.random_median_ir[n]) < 1.0);
    }
}

TEST_CASE("run_backtest: model mode beats linear mode on the nonlinear panel") {
    HetPanelOptions opts;
    opts.interaction_coef = 0.02;
    opts.noise = NoiseProfile::ramp(0.01, 0.04);
    FactorPanel panel = gen_het_panel(40, 30, 3, opts, 13);
    auto model_cfg = small_config(BacktestMode::model, 4);
    model_cfg.window = 12;
    model_cfg.architecture.hidden = {8};
    model_cfg.train.epochs = 150;
    auto linear_cfg = small_config(BacktestMode::linear, 4);
    linear_cfg.window = 12;
    linear_cfg.train.epochs = 150;
    auto model = run_backtest(panel, model_cfg);
    auto linear = run_backtest(panel, linear_cfg);
    CHECK(model.information_ratios[3].value > linear.information_ratios[3].value);
}

TEST_CASE("run_backtest: no-look-ahead, a future-only signal is not exploitable") {
    // returns are i.i.d. noise; factor 0 at date t carries the return of
    // date t+1. A leak of future returns into window fitting would turn
    // that factor into a perfect predictor.
    const int T = 40, N = 25, K = 3;
    Rng rng(17);
    FactorPanel panel = gen_het_panel(T, N, K, {}, 99);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < N; ++i) panel.returns(t, i) = 0.02 * rng.normal();
    for (int t = 0; t + 1 < T; ++t) {
        Eigen::VectorXd next = panel.returns.row(t + 1).transpose();
        const double mean = next.mean();
        const double sd = std::sqrt((next.array() - mean).square().mean());
        panel.exposures[t].col(0) = (next.array() - mean) / sd;
    }

    auto cfg = small_config(BacktestMode::linear, 6);
    cfg.window = 12;
    cfg.train.epochs = 120;
    auto model = run_backtest(panel, cfg);

    auto rnd_cfg = small_config(BacktestMode::random, 6);
    rnd_cfg.window = 12;
    rnd_cfg.n_random_trials = 200;
    auto random = run_backtest(panel, rnd_cfg);

    for (int n : {3, 5}) {
        std::vector<double> irs = random.random_trial_irs[n];
        std::sort(irs.begin(), irs.end());
        const double lo = irs[static_cast<std::size_t>(0.005 * irs.size())];
        const double hi = irs[static_cast<std::size_t>(0.995 * (irs.size() - 1))];
        CHECK(model.information_ratios[n].value >= lo);
        CHECK(model.information_ratios[n].value <= hi);
    }
}

TEST_CASE("run_backtest: threading does not change results") {
    FactorPanel panel = gen_het_panel(18, 12, 3, {}, 23);
    auto cfg = small_config(BacktestMode::model, 7);
    cfg.architecture.hidden = {4};
    auto serial = run_backtest(panel, cfg);
    cfg.threads = 4;
    auto parallel = run_backtest(panel, cfg);
    CHECK((serial.predictions - parallel.predictions).cwiseAbs().maxCoeff() == 0.0);
    for (int n : {3, 5})
        CHECK(serial.information_ratios[n].value == parallel.information_ratios[n].value);
}

TEST_CASE("run_backtest: explicit benchmark series is honored") {
    FactorPanel panel = gen_het_panel(16, 10, 2, {}, 31);
    auto cfg = small_config(BacktestMode::perfect_foresight, 3);
    cfg.benchmark.assign(16, 0.0);  // zero benchmark: active = raw portfolio return
    auto result = run_backtest(panel, cfg);
    for (double a : result.active_returns[3]) CHECK(std::isfinite(a));
    // top-3 perfect-foresight portfolio must beat the zero benchmark on average
    double mean = 0.0;
    for (double a : result.active_returns[3]) mean += a;
    CHECK(mean > 0.0);
}

TEST_CASE("run_backtest validation") {
    FactorPanel panel = gen_het_panel(10, 8, 2, {}, 37);
    auto cfg = small_config(BacktestMode::model, 1);
    cfg.window = 10;  // must exceed window
    CHECK_THROWS_AS(run_backtest(panel, cfg), ValidationError);
    cfg.window = 5;
    cfg.portfolio_sizes = {9};  // > N
    CHECK_THROWS_AS(run_backtest(panel, cfg), ValidationError);
    cfg.portfolio_sizes = {2};
    cfg.benchmark.assign(3, 0.0);  // misaligned
    CHECK_THROWS_AS(run_backtest(panel, cfg), ValidationError);
}

TEST_CASE("backtest CSV exports") {
    FactorPanel panel = gen_het_panel(14, 6, 2, {}, 41);
    auto cfg = small_config(BacktestMode::linear, 9);
    cfg.portfolio_sizes = {2};
    auto result = run_backtest(panel, cfg);
    auto pred = predictions_csv(result, panel);
    CHECK(pred.find("date,asset,y_hat,y_real") == 0);
    auto port = portfolio_csv(result);
    CHECK(port.find("date,n,active_return") == 0);
    auto summary = summary_csv(result, cfg);
    CHECK(summary.find("n,ir,mode") == 0);
    CHECK(summary.find("linear") != std::string::npos);
}
