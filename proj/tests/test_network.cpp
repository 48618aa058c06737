#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "factornet/errors.hpp"
#include "factornet/network.hpp"
#include "support/oracles.hpp"

using namespace factornet;

namespace {

NetworkParams linear_net(std::vector<double> w, double b) {
    NetworkParams p;
    LayerSpec layer;
    layer.weights = Eigen::Map<Eigen::RowVectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    layer.bias = Eigen::VectorXd::Constant(1, b);
    layer.activation = Activation::identity;
    p.layers.push_back(layer);
    return p;
}

}  // namespace

TEST_CASE("forward: zero-hidden-layer net is the affine map") {
    NetworkParams p = linear_net({1.0184141, 1.02141815}, 0.02);
    Eigen::VectorXd x(2);
    x << 1.0, 1.0;
    auto r = forward(p, x);
    CHECK(r.prediction == doctest::Approx(2.05983225).epsilon(1e-12));
    // exactly w.x + b for the linear net
    Eigen::VectorXd x2(2);
    x2 << -0.37, 2.25;
    CHECK(forward(p, x2).prediction == 1.0184141 * -0.37 + 1.02141815 * 2.25 + 0.02);
}

TEST_CASE("forward: all-zero tanh network predicts zero") {
    NetworkParams p;
    LayerSpec h;
    h.weights = Eigen::MatrixXd::Zero(4, 3);
    h.bias = Eigen::VectorXd::Zero(4);
    h.activation = Activation::tanh;
    LayerSpec o;
    o.weights = Eigen::MatrixXd::Zero(1, 4);
    o.bias = Eigen::VectorXd::Zero(1);
    o.activation = Activation::identity;
    p.layers = {h, o};
    Eigen::VectorXd x(3);
    x << 1.0, -2.0, 0.5;
    CHECK(forward(p, x).prediction == 0.0);
}

TEST_CASE("forward: one tanh unit, hand-evaluated composition") {
    NetworkParams p;
    LayerSpec h;
    h.weights.resize(1, 2);
    h.weights << 1.0, 0.0;
    h.bias = Eigen::VectorXd::Zero(1);
    h.activation = Activation::tanh;
    LayerSpec o;
    o.weights.resize(1, 1);
    o.weights << 2.0;
    o.bias = Eigen::VectorXd::Constant(1, 0.5);
    o.activation = Activation::identity;
    p.layers = {h, o};
    Eigen::VectorXd x(2);
    x << 0.5, 9.0;
    auto r = forward(p, x);
    CHECK(r.prediction == doctest::Approx(2.0 * std::tanh(0.5) + 0.5).epsilon(1e-12));
    REQUIRE(r.state.pre_activations.size() == 2);
    CHECK(r.state.pre_activations[0](0) == doctest::Approx(0.5));
    CHECK(r.state.post_activations[0](0) == doctest::Approx(std::tanh(0.5)));
}

TEST_CASE("forward: dimension mismatch names the layer") {
    NetworkParams p = linear_net({1.0, 2.0}, 0.0);
    Eigen::VectorXd x(3);
    x << 1, 2, 3;
    CHECK_THROWS_WITH_AS(forward(p, x), doctest::Contains("layer 0"), ValidationError);
}

TEST_CASE("validate: invariant violations are named") {
    NetworkParams p;
    LayerSpec h;
    h.weights = Eigen::MatrixXd::Zero(2, 2);
    h.bias = Eigen::VectorXd::Zero(2);
    h.activation = Activation::tanh;
    p.layers = {h};  // final out_dim != 1
    CHECK_THROWS_AS(p.validate(), ValidationError);

    NetworkParams q = linear_net({1.0}, 0.0);
    q.layers[0].activation = Activation::tanh;  // zero-hidden must be identity
    CHECK_THROWS_AS(q.validate(), ValidationError);

    NetworkParams r = linear_net({1.0, 2.0}, 0.0);
    r.layers[0].weights(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(r.validate(), ValidationError);
}

TEST_CASE("serialization round-trips values exactly") {
    Rng rng(20240811);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = oracles::random_network(rng, 3, {5, 2}, Activation::tanh, 2.5);
        // exercise non-representable decimals
        p.layers[0].weights(0, 0) = 1.0 / 3.0;
        p.layers[1].bias(0) = -1e-17;
        NetworkParams q = network_from_text(to_text(p));
        REQUIRE(q.layers.size() == p.layers.size());
        for (std::size_t l = 0; l < p.layers.size(); ++l) {
            CHECK(q.layers[l].activation == p.layers[l].activation);
            REQUIRE(q.layers[l].weights.rows() == p.layers[l].weights.rows());
            REQUIRE(q.layers[l].weights.cols() == p.layers[l].weights.cols());
            CHECK(std::memcmp(q.layers[l].weights.data(), p.layers[l].weights.data(),
                              sizeof(double) * p.layers[l].weights.size()) == 0);
            CHECK(std::memcmp(q.layers[l].bias.data(), p.layers[l].bias.data(),
                              sizeof(double) * p.layers[l].bias.size()) == 0);
        }
    }
}

TEST_CASE("serialization rejects malformed documents") {
    CHECK_THROWS_AS(network_from_text("nonsense"), ValidationError);
    NetworkParams p = linear_net({1.0, 2.0}, 0.5);
    std::string text = to_text(p);
    CHECK_THROWS_AS(network_from_text(text.substr(0, text.size() / 2)), ValidationError);
}
