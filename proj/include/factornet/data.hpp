#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace factornet {

// Feature matrix plus scalar target, as produced by the synthetic
// generators and consumed by train/interpret.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> feature_names;
};

// y = x1 + x2 + eps, all standard normal (noise_sigma scales eps)
Dataset gen_linear2(int n, std::uint64_t seed, double noise_sigma = 1.0);

// y = sum_{i=1..10} i*x_i + u, x_i ~ U(0,1), u ~ U(-h, h)
Dataset gen_step10(int n, std::uint64_t seed, double noise_half_width = 0.5);

// y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5 + N(0, sigma^2),
// ten U(0,1) features of which five are inert
Dataset gen_friedman(int n, double sigma, std::uint64_t seed);

// Cross-sectional panel: T dates, N assets, K standardized factor
// exposures per (date, asset), one return per (date, asset).
struct FactorPanel {
    std::vector<std::string> dates;        // ISO-8601, ascending
    std::vector<std::string> assets;       // length N
    Eigen::MatrixXd returns;               // T x N
    std::vector<Eigen::MatrixXd> exposures;  // T entries of N x K
    std::vector<std::string> factor_names;   // length K

    int n_dates() const { return static_cast<int>(dates.size()); }
    int n_assets() const { return static_cast<int>(assets.size()); }
    int n_factors() const { return static_cast<int>(factor_names.size()); }

    FactorPanel window(int start, int length) const;
    void validate() const;
};

struct NoiseProfile {
    enum class Kind { constant, ramp, spike };
    Kind kind = Kind::constant;
    double base = 0.05;         // constant level, or ramp low end
    double high = 0.05;         // ramp high end
    int spike_index = 0;        // spike: asset whose sigma is multiplied
    double spike_multiplier = 10.0;

    static NoiseProfile constant(double sigma);
    static NoiseProfile ramp(double lo, double hi);
    static NoiseProfile spike(double sigma, int asset, double multiplier);

    std::vector<double> asset_sigmas(int n_assets) const;
};

struct HetPanelOptions {
    NoiseProfile noise = NoiseProfile::ramp(0.02, 0.08);
    double linear_coef = 0.010;       // on the first two factors
    double interaction_coef = 0.008;  // on x1*x2
    double square_coef = 0.004;       // on x3^2 - 1
    double intercept = 0.005;
};

// Desk-scale synthetic panel with a known smooth nonlinear ground truth
// (one interaction term) and per-asset heteroscedastic noise.
FactorPanel gen_het_panel(int T, int N, int K, const HetPanelOptions& options,
                          std::uint64_t seed);

struct PanelLoadReport {
    std::vector<std::string> dropped_assets;  // coverage below threshold
    long forward_filled = 0;
    long median_filled = 0;
};

// Schema: header `date,asset,ret,<factor...>`, ISO dates, empty fields
// for missing values, one row per (date, asset). Assets below
// min_coverage are dropped; remaining gaps are forward-filled in date
// order, then filled with the cross-sectional median.
FactorPanel load_panel_csv(const std::filesystem::path& path, double min_coverage = 0.9,
                           PanelLoadReport* report = nullptr);
void save_panel_csv(const FactorPanel& panel, const std::filesystem::path& path);

// Per date, per factor: subtract the cross-sectional mean and divide by
// the population std. A zero-variance factor maps to zeros and a warning.
FactorPanel standardize(const FactorPanel& panel, std::vector<std::string>* warnings = nullptr,
                        bool population_std = true);

Dataset load_dataset_csv(const std::filesystem::path& path);
void save_dataset_csv(const Dataset& data, const std::filesystem::path& path);

// "2000-01-01", "2000-02-01", ... used by the synthetic panel generator
std::vector<std::string> monthly_dates(int count, int start_year = 2000);

}  // namespace factornet
