#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "factornet/network.hpp"

namespace factornet {

// A relu-network Jacobian entry written as a weighted sum of indicator
// variables: J = sum_k a_k 1_k with activation probabilities p_k. For the
// scalar-input case the indicators partition the input line at the
// thresholds and the a_k are cumulative weight products.
struct ReluJacobianSpec {
    Eigen::VectorXd coefficients;              // a_k
    Eigen::VectorXd probabilities;             // p_k in (0, 1]
    std::optional<Eigen::VectorXd> thresholds;  // x_k for the partition case

    void validate(bool partition = false) const;
};

// E[J] = sum a_k p_k
double relu_jacobian_mean(const ReluJacobianSpec& spec);

// sum a_k p_k (1 - p_k), the closed form as printed; it drops the square
// on a_k and any cross terms, so it matches Monte Carlo only when every
// a_k is 1 (see relu_jacobian_variance_true)
double relu_jacobian_variance_paper(const ReluJacobianSpec& spec);

enum class IndicatorModel {
    independent_bernoulli,  // J = sum a_k B_k, B_k independent
    interval_partition      // indicators mutually exclusive, sum p <= 1
};

// exact variance under the stated indicator model
double relu_jacobian_variance_true(const ReluJacobianSpec& spec, IndicatorModel model);

struct NormalDist {
    double mean = 0.0;
    double sd = 1.0;
};

double normal_cdf(double x, const NormalDist& dist = {});

// Interval-partition spec for a single-hidden-layer relu network with
// scalar input and positive first-layer weights: thresholds -b_k/w_k
// ascending, coefficients the cumulative sums of W2_k * W1_k.
ReluJacobianSpec partition_spec_from_network(const NetworkParams& params,
                                             const NormalDist& input_dist);

struct McMoments {
    double mean = 0.0;
    double variance = 0.0;
};

// Samples the input distribution and evaluates J through the indicator
// decomposition sum_k c_k H(z_k); single hidden relu layer required.
McMoments relu_jacobian_variance_mc(const NetworkParams& params, const NormalDist& input_dist,
                                    std::int64_t n_samples, std::uint64_t seed);

struct TailBound {
    double mu = 0.0;
    double deviation = 0.0;  // delta (upper) or gamma (lower)
    double bound_value = 0.0;
};

// Pr[J > (1+delta) mu] <= [ e^delta / (1+delta)^(1+delta) ]^mu
TailBound chernoff_upper(double mu, double delta);
// deviations below the mean, gamma in (0, 1], same closed form
TailBound chernoff_lower(double mu, double gamma);

struct BoundSweepRow {
    double mu = 0.0;
    double delta = 0.0;
    double bound = 0.0;
};

std::vector<BoundSweepRow> bound_sweep(const std::vector<double>& mu_values,
                                       const std::vector<double>& delta_grid);
std::string bound_sweep_csv(const std::vector<BoundSweepRow>& rows);

// empirical Pr[J > (1+delta) mu] for independent Bernoulli indicators
double chernoff_tail_mc(const ReluJacobianSpec& spec, double delta, std::int64_t n_samples,
                        std::uint64_t seed);

// Rescale coefficients into (0, 1] by max |a_k| (the Chernoff statement
// needs that range); returns the spec and the scale factor applied.
std::pair<ReluJacobianSpec, double> normalize_coefficients(const ReluJacobianSpec& spec);

}  // namespace factornet
