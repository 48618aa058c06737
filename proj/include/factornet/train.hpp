#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "factornet/network.hpp"
#include "factornet/rng.hpp"

namespace factornet {

enum class InitRule { glorot_uniform, uniform_scale };

struct TrainConfig {
    double learning_rate = 0.01;
    int epochs = 500;
    int batch_size = 32;
    double l1_lambda = 0.0;
    double l2_lambda = 0.0;
    std::uint64_t seed = 0;
    InitRule init_scale_rule = InitRule::glorot_uniform;
    double init_scale = 0.05;  // only used with InitRule::uniform_scale

    // The intercept alpha lives in the biases, so they are left out of
    // the penalty unless explicitly opted in.
    bool penalize_bias = false;

    // full-data loss evaluation per epoch; disable in hot loops
    bool record_loss_trace = true;

    void validate() const;
};

struct Architecture {
    std::vector<int> hidden;  // hidden widths; empty means a linear (affine) model
    Activation hidden_activation = Activation::tanh;
    Activation output_activation = Activation::identity;
};

// Gradient with the same shape as the parameters it differentiates.
struct ParamGradient {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> bias;
};

// Gradient of (1/N) sum_i w_i (y_i - yhat_i)^2 + l1*sum|W| + l2*sum W^2
// over the batch, N = batch rows. w_i are inverse residual variances
// (all ones for the homoscedastic fit). L1 subgradient at 0 is 0.
ParamGradient backprop(const NetworkParams& params, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& sample_weights,
                       double l1_lambda, double l2_lambda, bool penalize_bias = false);

// (1/N) sum_i w_i (y_i - yhat_i)^2, no penalty term
double weighted_mse(const NetworkParams& params, const Eigen::MatrixXd& X,
                    const Eigen::VectorXd& y, const Eigen::VectorXd& sample_weights);

double penalty_value(const NetworkParams& params, double l1_lambda, double l2_lambda,
                     bool penalize_bias = false);

NetworkParams init_network(Eigen::Index input_dim, const Architecture& arch,
                           const TrainConfig& config, Rng& rng);

struct TrainResult {
    NetworkParams params;
    std::vector<double> loss_trace;  // per-epoch training loss incl. penalty
};

// Minibatch SGD with a fixed learning rate. Deterministic given the seed:
// initialization and the per-epoch shuffle come from one Rng stream.
// loss_weights, when provided, has one entry per training row.
// Throws NumericalError naming the last finite epoch if the loss diverges.
TrainResult train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Architecture& arch,
                  const TrainConfig& config, const Eigen::VectorXd* loss_weights = nullptr);

// SGD from given starting parameters (warm start); the seed drives the
// shuffle stream only.
TrainResult train_from(const NetworkParams& initial, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y, const TrainConfig& config,
                       const Eigen::VectorXd* loss_weights = nullptr);

}  // namespace factornet
