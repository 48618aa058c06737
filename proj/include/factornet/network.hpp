#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace factornet {

enum class Activation { identity, tanh, relu };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

inline double activate(Activation a, double z) {
    switch (a) {
        case Activation::identity: return z;
        case Activation::tanh: return std::tanh(z);
        case Activation::relu: return z > 0.0 ? z : 0.0;
    }
    return z;
}

inline double activate_deriv(Activation a, double z) {
    switch (a) {
        case Activation::identity: return 1.0;
        case Activation::tanh: {
            double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

// second derivative; relu callers are rejected before reaching this
inline double activate_deriv2(Activation a, double z) {
    switch (a) {
        case Activation::identity: return 0.0;
        case Activation::tanh: {
            double t = std::tanh(z);
            return -2.0 * t * (1.0 - t * t);
        }
        case Activation::relu: return 0.0;
    }
    return 0.0;
}

// One semi-affine stage: elementwise activation of an affine map.
struct LayerSpec {
    Eigen::MatrixXd weights;  // out_dim x in_dim
    Eigen::VectorXd bias;     // out_dim
    Activation activation = Activation::identity;

    Eigen::Index in_dim() const { return weights.cols(); }
    Eigen::Index out_dim() const { return weights.rows(); }
};

struct NetworkParams {
    std::vector<LayerSpec> layers;

    Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
    int layer_count() const { return static_cast<int>(layers.size()); }
    int hidden_layer_count() const { return layer_count() - 1; }
    bool has_activation(Activation a) const;

    // Checks dimension chaining, scalar output, finiteness, and the
    // zero-hidden-layer convention (single identity layer). Throws
    // ValidationError naming the offending layer.
    void validate() const;
};

// Per-layer affine outputs Z^(l) and their activations.
struct LayerState {
    std::vector<Eigen::VectorXd> pre_activations;
    std::vector<Eigen::VectorXd> post_activations;
};

struct ForwardResult {
    double prediction = 0.0;
    LayerState state;
};

ForwardResult forward(const NetworkParams& params, const Eigen::VectorXd& x);

// forward pass without recording layer state
double predict(const NetworkParams& params, const Eigen::VectorXd& x);

Eigen::VectorXd predict_rows(const NetworkParams& params, const Eigen::MatrixXd& X);

// Versioned text format: per layer, activation name, dimensions,
// row-major weights, then biases. Values round-trip exactly.
std::string to_text(const NetworkParams& params);
NetworkParams network_from_text(const std::string& text);
void save_network(const NetworkParams& params, const std::filesystem::path& path);
NetworkParams load_network(const std::filesystem::path& path);

}  // namespace factornet
