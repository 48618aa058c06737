#include "factornet/train.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "factornet/errors.hpp"

namespace factornet {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
    if (epochs <= 0) throw ValidationError("epochs must be positive");
    if (batch_size <= 0) throw ValidationError("batch_size must be positive");
    if (l1_lambda < 0.0) throw ValidationError("l1_lambda must be nonnegative");
    if (l2_lambda < 0.0) throw ValidationError("l2_lambda must be nonnegative");
    if (init_scale_rule == InitRule::uniform_scale && !(init_scale > 0.0))
        throw ValidationError("init_scale must be positive");
}

namespace {

void check_batch(const NetworkParams& params, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& w) {
    if (X.rows() == 0) throw ValidationError("empty batch");
    if (X.cols() != params.input_dim())
        throw ValidationError("batch has " + std::to_string(X.cols()) +
                              " features, network expects " + std::to_string(params.input_dim()));
    if (y.size() != X.rows() || w.size() != X.rows())
        throw ValidationError("batch rows, targets and weights must agree in length");
    if ((w.array() <= 0.0).any()) throw ValidationError("sample weights must be strictly positive");
}

}  // namespace

ParamGradient backprop(const NetworkParams& params, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& sample_weights,
                       double l1_lambda, double l2_lambda, bool penalize_bias) {
    check_batch(params, X, y, sample_weights);
    const auto L = params.layers.size();
    ParamGradient grad;
    grad.weights.reserve(L);
    grad.bias.reserve(L);
    for (const auto& layer : params.layers) {
        grad.weights.emplace_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
        grad.bias.emplace_back(Eigen::VectorXd::Zero(layer.bias.size()));
    }

    const double inv_n = 1.0 / static_cast<double>(X.rows());
    std::vector<Eigen::VectorXd> activations(L + 1);
    std::vector<Eigen::VectorXd> pre(L);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        activations[0] = X.row(i).transpose();
        for (std::size_t l = 0; l < L; ++l) {
            const auto& layer = params.layers[l];
            pre[l] = layer.weights * activations[l] + layer.bias;
            activations[l + 1] =
                pre[l].unaryExpr([&](double v) { return activate(layer.activation, v); });
        }
        const double yhat = activations[L](0);
        // d/dyhat of (1/N) w (y - yhat)^2
        const double dloss = 2.0 * inv_n * sample_weights(i) * (yhat - y(i));
        Eigen::VectorXd delta(1);
        delta(0) = dloss * activate_deriv(params.layers[L - 1].activation, pre[L - 1](0));
        for (std::size_t l = L; l-- > 0;) {
            grad.weights[l].noalias() += delta * activations[l].transpose();
            grad.bias[l] += delta;
            if (l > 0) {
                Eigen::VectorXd back = params.layers[l].weights.transpose() * delta;
                delta = back.cwiseProduct(pre[l - 1].unaryExpr([&](double v) {
                    return activate_deriv(params.layers[l - 1].activation, v);
                }));
            }
        }
    }

    if (l1_lambda > 0.0 || l2_lambda > 0.0) {
        for (std::size_t l = 0; l < L; ++l) {
            const auto& W = params.layers[l].weights;
            if (l1_lambda > 0.0)
                grad.weights[l] += l1_lambda * W.unaryExpr([](double w) {
                    return w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
                });
            if (l2_lambda > 0.0) grad.weights[l] += 2.0 * l2_lambda * W;
            if (penalize_bias) {
                const auto& b = params.layers[l].bias;
                if (l1_lambda > 0.0)
                    grad.bias[l] += l1_lambda * b.unaryExpr([](double w) {
                        return w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
                    });
                if (l2_lambda > 0.0) grad.bias[l] += 2.0 * l2_lambda * b;
            }
        }
    }
    return grad;
}

double weighted_mse(const NetworkParams& params, const Eigen::MatrixXd& X,
                    const Eigen::VectorXd& y, const Eigen::VectorXd& sample_weights) {
    check_batch(params, X, y, sample_weights);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double r = y(i) - predict(params, X.row(i).transpose());
        acc += sample_weights(i) * r * r;
    }
    return acc / static_cast<double>(X.rows());
}

double penalty_value(const NetworkParams& params, double l1_lambda, double l2_lambda,
                     bool penalize_bias) {
    double acc = 0.0;
    for (const auto& layer : params.layers) {
        acc += l1_lambda * layer.weights.cwiseAbs().sum();
        acc += l2_lambda * layer.weights.squaredNorm();
        if (penalize_bias) {
            acc += l1_lambda * layer.bias.cwiseAbs().sum();
            acc += l2_lambda * layer.bias.squaredNorm();
        }
    }
    return acc;
}

NetworkParams init_network(Eigen::Index input_dim, const Architecture& arch,
                           const TrainConfig& config, Rng& rng) {
    if (input_dim <= 0) throw ValidationError("input_dim must be positive");
    for (int h : arch.hidden)
        if (h <= 0) throw ValidationError("hidden layer widths must be positive");

    std::vector<Eigen::Index> dims;
    dims.push_back(input_dim);
    for (int h : arch.hidden) dims.push_back(h);
    dims.push_back(1);

    NetworkParams params;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        LayerSpec layer;
        const Eigen::Index fan_in = dims[l];
        const Eigen::Index fan_out = dims[l + 1];
        const bool last = (l + 2 == dims.size());
        layer.activation = last ? arch.output_activation : arch.hidden_activation;
        const double s = config.init_scale_rule == InitRule::glorot_uniform
                             ? std::sqrt(6.0 / static_cast<double>(fan_in + fan_out))
                             : config.init_scale;
        layer.weights.resize(fan_out, fan_in);
        for (Eigen::Index r = 0; r < fan_out; ++r)
            for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = rng.uniform(-s, s);
        layer.bias = Eigen::VectorXd::Zero(fan_out);
        params.layers.push_back(std::move(layer));
    }
    if (arch.hidden.empty()) params.layers[0].activation = Activation::identity;
    params.validate();
    return params;
}

namespace {

TrainResult run_sgd(NetworkParams params, Rng rng, const Eigen::MatrixXd& X,
                    const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                    const TrainConfig& config) {
    TrainResult result;
    result.params = std::move(params);

    const Eigen::Index n = X.rows();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    Eigen::MatrixXd bx;
    Eigen::VectorXd by, bw;
    int last_finite_epoch = -1;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (Eigen::Index start = 0; start < n; start += config.batch_size) {
            const Eigen::Index m = std::min<Eigen::Index>(config.batch_size, n - start);
            bx.resize(m, X.cols());
            by.resize(m);
            bw.resize(m);
            for (Eigen::Index k = 0; k < m; ++k) {
                bx.row(k) = X.row(order[start + k]);
                by(k) = y(order[start + k]);
                bw(k) = w(order[start + k]);
            }
            ParamGradient grad = backprop(result.params, bx, by, bw, config.l1_lambda,
                                          config.l2_lambda, config.penalize_bias);
            for (std::size_t l = 0; l < result.params.layers.size(); ++l) {
                result.params.layers[l].weights -= config.learning_rate * grad.weights[l];
                result.params.layers[l].bias -= config.learning_rate * grad.bias[l];
            }
        }

        bool finite = true;
        for (const auto& layer : result.params.layers)
            if (!layer.weights.allFinite() || !layer.bias.allFinite()) finite = false;
        double loss = 0.0;
        if (finite && (config.record_loss_trace || epoch + 1 == config.epochs)) {
            loss = weighted_mse(result.params, X, y, w) +
                   penalty_value(result.params, config.l1_lambda, config.l2_lambda,
                                 config.penalize_bias);
            finite = std::isfinite(loss);
        }
        if (!finite)
            throw NumericalError("training loss diverged at epoch " + std::to_string(epoch) +
                                 "; last finite epoch " + std::to_string(last_finite_epoch));
        last_finite_epoch = epoch;
        if (config.record_loss_trace) result.loss_trace.push_back(loss);
    }
    return result;
}

Eigen::VectorXd resolve_weights(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const Eigen::VectorXd* loss_weights) {
    if (X.rows() == 0) throw ValidationError("training data is empty");
    if (y.size() != X.rows()) throw ValidationError("target length does not match data rows");
    Eigen::VectorXd w = loss_weights ? *loss_weights : Eigen::VectorXd::Ones(X.rows());
    if (w.size() != X.rows())
        throw ValidationError("loss_weights length " + std::to_string(w.size()) +
                              " does not match data rows " + std::to_string(X.rows()));
    if ((w.array() <= 0.0).any()) throw ValidationError("loss_weights must be strictly positive");
    return w;
}

}  // namespace

TrainResult train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Architecture& arch,
                  const TrainConfig& config, const Eigen::VectorXd* loss_weights) {
    config.validate();
    Eigen::VectorXd w = resolve_weights(X, y, loss_weights);
    Rng rng(config.seed);
    NetworkParams params = init_network(X.cols(), arch, config, rng);
    return run_sgd(std::move(params), std::move(rng), X, y, w, config);
}

TrainResult train_from(const NetworkParams& initial, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y, const TrainConfig& config,
                       const Eigen::VectorXd* loss_weights) {
    config.validate();
    initial.validate();
    Eigen::VectorXd w = resolve_weights(X, y, loss_weights);
    if (initial.input_dim() != X.cols())
        throw ValidationError("initial network input_dim does not match data");
    return run_sgd(initial, Rng(config.seed), X, y, w, config);
}

}  // namespace factornet
