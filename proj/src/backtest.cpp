#include "factornet/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "factornet/errors.hpp"
#include "factornet/rng.hpp"
#include "factornet/text_io.hpp"

namespace factornet {

IrValue information_ratio(const std::vector<double>& portfolio_returns,
                          const std::vector<double>& benchmark_returns) {
    if (portfolio_returns.size() != benchmark_returns.size())
        throw ValidationError("information_ratio: series lengths differ");
    const std::size_t n = portfolio_returns.size();
    if (n < 2) throw ValidationError("information_ratio: need at least 2 periods");

    std::vector<double> active(n);
    for (std::size_t i = 0; i < n; ++i) active[i] = portfolio_returns[i] - benchmark_returns[i];
    const double mean = std::accumulate(active.begin(), active.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double a : active) var += (a - mean) * (a - mean);
    var /= static_cast<double>(n - 1);
    const double sd = std::sqrt(var);

    IrValue ir;
    // a tracking error 12 orders below the mean is zero up to rounding
    if (sd <= std::abs(mean) * 1e-12) {
        if (mean == 0.0) return ir;  // flat zero active returns
        ir.unbounded = true;
        ir.value = mean > 0.0 ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity();
        return ir;
    }
    ir.value = std::sqrt(12.0) * mean / sd;
    return ir;
}

std::vector<int> select_top_n(const Eigen::VectorXd& predictions, int n) {
    const int N = static_cast<int>(predictions.size());
    if (n < 1 || n > N)
        throw ValidationError("select_top_n: n=" + std::to_string(n) + " out of range for N=" +
                              std::to_string(N));
    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return predictions(a) > predictions(b); });
    order.resize(n);
    std::sort(order.begin(), order.end());
    return order;
}

const char* to_string(BacktestMode mode) {
    switch (mode) {
        case BacktestMode::model: return "model";
        case BacktestMode::linear: return "linear";
        case BacktestMode::random: return "random";
        case BacktestMode::perfect_foresight: return "perfect_foresight";
    }
    return "model";
}

BacktestMode backtest_mode_from_string(const std::string& name) {
    if (name == "model") return BacktestMode::model;
    if (name == "linear") return BacktestMode::linear;
    if (name == "random") return BacktestMode::random;
    if (name == "perfect_foresight") return BacktestMode::perfect_foresight;
    throw ValidationError("unknown backtest mode '" + name + "'");
}

namespace {

struct WindowOutcome {
    bool skipped = false;
    Eigen::VectorXd predictions;
    double in_sample_wmse = 0.0;
    double out_sample_wmse = 0.0;
};

WindowOutcome fit_window(const FactorPanel& panel, const BacktestConfig& config,
                         const Architecture& arch, int t) {
    const int N = panel.n_assets();
    WindowOutcome out;
    FactorPanel window = panel.window(t - config.window + 1, config.window);
    TrainConfig train_cfg = config.train;
    train_cfg.record_loss_trace = false;
    // one stream per window so threading cannot change results
    train_cfg.seed = Rng(config.seed, static_cast<std::uint64_t>(t)).next_bits();

    GlsFitResult fit;
    try {
        fit = fit_two_step(window, arch, train_cfg, config.two_step);
    } catch (const NumericalError&) {
        out.skipped = true;
        return out;
    }

    out.predictions.resize(N);
    for (int i = 0; i < N; ++i)
        out.predictions(i) = predict(fit.params, panel.exposures[t + 1].row(i).transpose());

    const Eigen::VectorXd inv_var = fit.covariance_refined.variances.cwiseInverse();
    Eigen::MatrixXd wx;
    Eigen::VectorXd wy;
    pool_window(window, &wx, &wy);
    Eigen::VectorXd pooled_weights(wx.rows());
    for (int tt = 0; tt < window.n_dates(); ++tt)
        pooled_weights.segment(static_cast<Eigen::Index>(tt) * N, N) = inv_var;
    out.in_sample_wmse = weighted_mse(fit.params, wx, wy, pooled_weights);

    double oos = 0.0;
    for (int i = 0; i < N; ++i) {
        const double r = panel.returns(t + 1, i) - out.predictions(i);
        oos += inv_var(i) * r * r;
    }
    out.out_sample_wmse = oos / static_cast<double>(N);
    return out;
}

}  // namespace

BacktestResult run_backtest(const FactorPanel& panel, const BacktestConfig& config) {
    panel.validate();
    const int T = panel.n_dates();
    const int N = panel.n_assets();
    if (config.window < 2) throw ValidationError("backtest window must be >= 2");
    if (T <= config.window)
        throw ValidationError("panel length " + std::to_string(T) +
                              " must exceed window " + std::to_string(config.window));
    if (config.portfolio_sizes.empty())
        throw ValidationError("backtest needs at least one portfolio size");
    for (int n : config.portfolio_sizes)
        if (n < 1 || n > N)
            throw ValidationError("portfolio size " + std::to_string(n) +
                                  " out of range for N=" + std::to_string(N));
    if (!config.benchmark.empty() && static_cast<int>(config.benchmark.size()) != T)
        throw ValidationError("benchmark series must align to panel dates");

    const int n_oos = T - config.window;
    BacktestResult result;
    result.predictions.resize(n_oos, N);
    result.realized.resize(n_oos, N);
    result.oos_dates.reserve(n_oos);
    result.benchmark.reserve(n_oos);
    for (int s = 0; s < n_oos; ++s) {
        const int date = config.window + s;
        result.oos_dates.push_back(panel.dates[date]);
        result.realized.row(s) = panel.returns.row(date);
        result.benchmark.push_back(config.benchmark.empty()
                                       ? panel.returns.row(date).mean()
                                       : config.benchmark[static_cast<std::size_t>(date)]);
    }

    Architecture arch = config.architecture;
    if (config.mode == BacktestMode::linear) arch.hidden.clear();

    if (config.mode == BacktestMode::model || config.mode == BacktestMode::linear) {
        std::vector<WindowOutcome> outcomes(n_oos);
        const int threads = std::max(1, config.threads);
        if (threads == 1) {
            for (int s = 0; s < n_oos; ++s)
                outcomes[s] = fit_window(panel, config, arch, config.window - 1 + s);
        } else {
            std::vector<std::thread> pool;
            std::atomic<int> next{0};
            for (int w = 0; w < threads; ++w)
                pool.emplace_back([&]() {
                    int s;
                    while ((s = next.fetch_add(1)) < n_oos)
                        outcomes[s] = fit_window(panel, config, arch, config.window - 1 + s);
                });
            for (auto& th : pool) th.join();
        }
        for (int s = 0; s < n_oos; ++s) {
            if (outcomes[s].skipped) {
                result.skipped_windows.push_back(config.window - 1 + s);
                result.predictions.row(s).setZero();
                result.in_sample_wmse.push_back(std::numeric_limits<double>::quiet_NaN());
                result.out_sample_wmse.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            result.predictions.row(s) = outcomes[s].predictions.transpose();
            result.in_sample_wmse.push_back(outcomes[s].in_sample_wmse);
            result.out_sample_wmse.push_back(outcomes[s].out_sample_wmse);
        }
    } else if (config.mode == BacktestMode::perfect_foresight) {
        result.predictions = result.realized;
    } else {
        // random mode fills predictions per trial below; the stored
        // prediction matrix holds the first trial for inspection
        result.predictions.setZero();
    }

    auto is_skipped = [&](int s) {
        return std::find(result.skipped_windows.begin(), result.skipped_windows.end(),
                         config.window - 1 + s) != result.skipped_windows.end();
    };

    if (config.mode == BacktestMode::random) {
        if (config.n_random_trials < 1)
            throw ValidationError("random mode needs n_random_trials >= 1");
        for (int n : config.portfolio_sizes) result.random_trial_irs[n] = {};
        for (int trial = 0; trial < config.n_random_trials; ++trial) {
            Rng rng(config.seed, 1000003ULL * static_cast<std::uint64_t>(trial));
            Eigen::MatrixXd preds(n_oos, N);
            for (int s = 0; s < n_oos; ++s)
                for (int i = 0; i < N; ++i) preds(s, i) = rng.uniform();
            if (trial == 0) result.predictions = preds;
            for (int n : config.portfolio_sizes) {
                std::vector<double> port, bench;
                for (int s = 0; s < n_oos; ++s) {
                    const std::vector<int> sel = select_top_n(preds.row(s).transpose(), n);
                    double r = 0.0;
                    for (int idx : sel) r += result.realized(s, idx);
                    port.push_back(r / static_cast<double>(n));
                    bench.push_back(result.benchmark[static_cast<std::size_t>(s)]);
                }
                result.random_trial_irs[n].push_back(information_ratio(port, bench).value);
            }
        }
        for (int n : config.portfolio_sizes) {
            std::vector<double> irs = result.random_trial_irs[n];
            std::sort(irs.begin(), irs.end());
            const std::size_t m = irs.size();
            result.random_median_ir[n] =
                m % 2 == 1 ? irs[m / 2] : 0.5 * (irs[m / 2 - 1] + irs[m / 2]);
            result.information_ratios[n] = IrValue{result.random_median_ir[n], false};
        }
        return result;
    }

    for (int s = 0; s < n_oos; ++s)
        if (!is_skipped(s)) result.used_oos.push_back(s);

    for (int n : config.portfolio_sizes) {
        std::vector<double> port, bench;
        for (int s : result.used_oos) {
            const std::vector<int> sel = select_top_n(result.predictions.row(s).transpose(), n);
            double r = 0.0;
            for (int idx : sel) r += result.realized(s, idx);
            port.push_back(r / static_cast<double>(n));
            bench.push_back(result.benchmark[static_cast<std::size_t>(s)]);
        }
        result.active_returns[n] = {};
        for (std::size_t i = 0; i < port.size(); ++i)
            result.active_returns[n].push_back(port[i] - bench[i]);
        result.information_ratios[n] = information_ratio(port, bench);
    }
    return result;
}

std::string predictions_csv(const BacktestResult& result, const FactorPanel& panel) {
    std::ostringstream out;
    out << "date,asset,y_hat,y_real\n";
    for (std::size_t s = 0; s < result.oos_dates.size(); ++s)
        for (int i = 0; i < panel.n_assets(); ++i)
            out << result.oos_dates[s] << "," << panel.assets[i] << ","
                << fmt_g17(result.predictions(static_cast<Eigen::Index>(s), i)) << ","
                << fmt_g17(result.realized(static_cast<Eigen::Index>(s), i)) << "\n";
    return out.str();
}

std::string portfolio_csv(const BacktestResult& result) {
    std::ostringstream out;
    out << "date,n,active_return\n";
    for (const auto& [n, series] : result.active_returns)
        for (std::size_t k = 0; k < series.size(); ++k)
            out << result.oos_dates[static_cast<std::size_t>(result.used_oos[k])] << "," << n
                << "," << fmt_g17(series[k]) << "\n";
    return out.str();
}

std::string summary_csv(const BacktestResult& result, const BacktestConfig& config) {
    std::ostringstream out;
    out << "n,ir,mode\n";
    for (const auto& [n, ir] : result.information_ratios) {
        out << n << ",";
        if (ir.unbounded)
            out << (ir.value > 0 ? "unbounded" : "-unbounded");
        else
            out << fmt_g17(ir.value);
        out << "," << to_string(config.mode) << "\n";
    }
    return out.str();
}

}  // namespace factornet
