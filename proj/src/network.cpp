#include "factornet/network.hpp"

#include <sstream>

#include "factornet/errors.hpp"
#include "factornet/text_io.hpp"

namespace factornet {

const char* to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
    }
    return "identity";
}

Activation activation_from_string(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    throw ValidationError("unknown activation '" + name + "'");
}

bool NetworkParams::has_activation(Activation a) const {
    for (const auto& layer : layers)
        if (layer.activation == a) return true;
    return false;
}

void NetworkParams::validate() const {
    if (layers.empty()) throw ValidationError("network has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        const std::string where = "layer " + std::to_string(l);
        if (layer.weights.rows() == 0 || layer.weights.cols() == 0)
            throw ValidationError(where + ": empty weight matrix");
        if (layer.bias.size() != layer.weights.rows())
            throw ValidationError(where + ": bias length " + std::to_string(layer.bias.size()) +
                                  " does not match out_dim " + std::to_string(layer.weights.rows()));
        if (!layer.weights.allFinite() || !layer.bias.allFinite())
            throw ValidationError(where + ": non-finite parameter");
        if (l + 1 < layers.size() && layers[l + 1].in_dim() != layer.out_dim())
            throw ValidationError(where + ": out_dim " + std::to_string(layer.out_dim()) +
                                  " does not chain into layer " + std::to_string(l + 1) +
                                  " in_dim " + std::to_string(layers[l + 1].in_dim()));
    }
    if (layers.back().out_dim() != 1)
        throw ValidationError("final layer must have out_dim 1, got " +
                              std::to_string(layers.back().out_dim()));
    if (layers.size() == 1 && layers[0].activation != Activation::identity)
        throw ValidationError("zero-hidden-layer network must use the identity activation");
}

ForwardResult forward(const NetworkParams& params, const Eigen::VectorXd& x) {
    if (params.layers.empty()) throw ValidationError("network has no layers");
    if (x.size() != params.input_dim())
        throw ValidationError("layer 0: input length " + std::to_string(x.size()) +
                              " does not match in_dim " + std::to_string(params.input_dim()));
    ForwardResult result;
    result.state.pre_activations.reserve(params.layers.size());
    result.state.post_activations.reserve(params.layers.size());
    Eigen::VectorXd a = x;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        if (a.size() != layer.in_dim())
            throw ValidationError("layer " + std::to_string(l) + ": input length " +
                                  std::to_string(a.size()) + " does not match in_dim " +
                                  std::to_string(layer.in_dim()));
        Eigen::VectorXd z = layer.weights * a + layer.bias;
        a = z.unaryExpr([&](double v) { return activate(layer.activation, v); });
        result.state.pre_activations.push_back(z);
        result.state.post_activations.push_back(a);
    }
    result.prediction = a(0);
    return result;
}

double predict(const NetworkParams& params, const Eigen::VectorXd& x) {
    Eigen::VectorXd a = x;
    for (const auto& layer : params.layers) {
        Eigen::VectorXd z = layer.weights * a + layer.bias;
        a = z.unaryExpr([&](double v) { return activate(layer.activation, v); });
    }
    return a(0);
}

Eigen::VectorXd predict_rows(const NetworkParams& params, const Eigen::MatrixXd& X) {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict(params, X.row(i).transpose());
    return out;
}

std::string to_text(const NetworkParams& params) {
    std::ostringstream out;
    out << "factornet-network v1\n";
    out << "layers " << params.layers.size() << "\n";
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        out << "layer " << l << " " << to_string(layer.activation) << " " << layer.out_dim()
            << " " << layer.in_dim() << "\n";
        out << "weights";
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
                out << " " << fmt_g17(layer.weights(r, c));
        out << "\nbias";
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) out << " " << fmt_g17(layer.bias(r));
        out << "\n";
    }
    return out.str();
}

NetworkParams network_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string header;
    std::getline(in, header);
    if (trim(header) != "factornet-network v1")
        throw ValidationError("unrecognized network header '" + trim(header) + "'");
    std::string tag;
    std::size_t n_layers = 0;
    if (!(in >> tag >> n_layers) || tag != "layers")
        throw ValidationError("network text: expected 'layers <count>'");
    NetworkParams params;
    params.layers.resize(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        std::size_t idx = 0;
        std::string act;
        Eigen::Index out_dim = 0, in_dim = 0;
        if (!(in >> tag >> idx >> act >> out_dim >> in_dim) || tag != "layer" || idx != l)
            throw ValidationError("network text: malformed layer header at layer " +
                                  std::to_string(l));
        if (out_dim <= 0 || in_dim <= 0)
            throw ValidationError("network text: non-positive dimension at layer " +
                                  std::to_string(l));
        LayerSpec layer;
        layer.activation = activation_from_string(act);
        layer.weights.resize(out_dim, in_dim);
        layer.bias.resize(out_dim);
        if (!(in >> tag) || tag != "weights")
            throw ValidationError("network text: expected 'weights' at layer " + std::to_string(l));
        for (Eigen::Index r = 0; r < out_dim; ++r)
            for (Eigen::Index c = 0; c < in_dim; ++c)
                if (!(in >> layer.weights(r, c)))
                    throw ValidationError("network text: truncated weights at layer " +
                                          std::to_string(l));
        if (!(in >> tag) || tag != "bias")
            throw ValidationError("network text: expected 'bias' at layer " + std::to_string(l));
        for (Eigen::Index r = 0; r < out_dim; ++r)
            if (!(in >> layer.bias(r)))
                throw ValidationError("network text: truncated bias at layer " + std::to_string(l));
        params.layers[l] = std::move(layer);
    }
    params.validate();
    return params;
}

void save_network(const NetworkParams& params, const std::filesystem::path& path) {
    write_file_atomic(path, to_text(params));
}

NetworkParams load_network(const std::filesystem::path& path) {
    return network_from_text(read_file(path));
}

}  // namespace factornet
