#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "factornet/data.hpp"
#include "factornet/gls.hpp"
#include "factornet/train.hpp"

namespace factornet {

struct IrValue {
    double value = 0.0;
    bool unbounded = false;  // nonzero mean active return with zero tracking error
};

// Annualized mean active return over annualized tracking error
// (monthly series: sqrt(12) * mean / std). All-zero active returns give 0.
IrValue information_ratio(const std::vector<double>& portfolio_returns,
                          const std::vector<double>& benchmark_returns);

// Indices of the n largest predictions, ties broken by ascending index.
std::vector<int> select_top_n(const Eigen::VectorXd& predictions, int n);

enum class BacktestMode {
    model,             // the configured architecture under two-step GLS
    linear,            // zero-hidden-layer comparator, same procedure
    random,            // no model: random selections, repeated over trials
    perfect_foresight  // test hook: predictions := realized returns
};

const char* to_string(BacktestMode mode);
BacktestMode backtest_mode_from_string(const std::string& name);

struct BacktestConfig {
    int window = 24;  // m
    std::vector<int> portfolio_sizes;
    Architecture architecture;
    TrainConfig train;
    TwoStepOptions two_step;
    // aligned to panel dates; empty = equal-weighted universe mean
    std::vector<double> benchmark;
    BacktestMode mode = BacktestMode::model;
    int n_random_trials = 100;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct BacktestResult {
    std::vector<std::string> oos_dates;  // dates m..T-1 (0-based: window..T-1)
    Eigen::MatrixXd predictions;         // n_oos x N
    Eigen::MatrixXd realized;            // n_oos x N
    std::vector<double> benchmark;       // aligned to oos_dates
    std::map<int, std::vector<double>> active_returns;  // per portfolio size
    std::map<int, IrValue> information_ratios;
    std::vector<double> in_sample_wmse;   // refined fit on its window
    std::vector<double> out_sample_wmse;  // refined fit at the next date
    std::vector<int> skipped_windows;     // training diverged; excluded, logged
    std::vector<int> used_oos;            // indices into oos_dates that produced portfolios
    // random mode: IR per trial per portfolio size, and the median
    std::map<int, std::vector<double>> random_trial_irs;
    std::map<int, double> random_median_ir;
};

// For each t in [m-1, T-2] (0-based): fit two-step GLS on the m dates
// ending at t, predict date t+1 from its exposures, then form equal-
// weighted top-n portfolios and active returns against the benchmark.
// Fitting never sees data past t.
BacktestResult run_backtest(const FactorPanel& panel, const BacktestConfig& config);

std::string predictions_csv(const BacktestResult& result, const FactorPanel& panel);
std::string portfolio_csv(const BacktestResult& result);
std::string summary_csv(const BacktestResult& result, const BacktestConfig& config);

}  // namespace factornet
