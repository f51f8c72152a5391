#include <stdexcept>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "jova/network.hpp"

using namespace jova;

namespace {

MlpNetwork identity_net(std::size_t width) {
    MlpNetwork net;
    Layer l;
    l.weight = DenseMatrix(width, width, 0.0);
    for (std::size_t i = 0; i < width; ++i) l.weight(i, i) = 1.0;
    l.bias.assign(width, 0.0);
    l.activation = Activation::linear;
    net.layers.push_back(std::move(l));
    return net;
}

DenseMatrix random_input(Rng& rng, std::size_t r, std::size_t c) {
    DenseMatrix m(r, c);
    for (double& v : m.data) v = 2.0 * rng.uniform() - 1.0;
    return m;
}

}  // namespace

TEST_CASE("forward: identity network reproduces the input") {
    MlpNetwork net = identity_net(3);
    Rng rng(1);
    const DenseMatrix x = random_input(rng, 4, 3);
    const DenseMatrix y = forward(net, x);
    CHECK(y.data == x.data);
}

TEST_CASE("forward: zero-weight sigmoid layer outputs 0.5 everywhere") {
    MlpNetwork net;
    Layer l;
    l.weight = DenseMatrix(3, 2, 0.0);
    l.bias.assign(2, 0.0);
    l.activation = Activation::sigmoid;
    net.layers.push_back(l);
    Rng rng(2);
    const DenseMatrix y = forward(net, random_input(rng, 5, 3));
    for (double v : y.data) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("forward: scalar tanh evaluation") {
    MlpNetwork net;
    Layer l;
    l.weight = DenseMatrix(1, 1, 1.0);
    l.bias.assign(1, 0.0);
    l.activation = Activation::tanh;
    net.layers.push_back(l);
    DenseMatrix x(1, 1, 0.5);
    CHECK(forward(net, x)(0, 0) == doctest::Approx(std::tanh(0.5)).epsilon(1e-12));
    CHECK(forward(net, x)(0, 0) == doctest::Approx(0.4621).epsilon(1e-4));
}

TEST_CASE("forward: input width mismatch is a hard error") {
    MlpNetwork net = identity_net(3);
    DenseMatrix x(2, 4, 1.0);
    CHECK_THROWS_AS(forward(net, x), std::invalid_argument);
}

TEST_CASE("backward: zero output gradient gives zero parameter gradients") {
    Rng rng(3);
    MlpNetwork net = make_mlp({4, 3, 2}, Activation::tanh, Activation::sigmoid, rng);
    GradientTape tape;
    const DenseMatrix out = forward(net, random_input(rng, 5, 4), &tape);
    const NetGradients grads = backward(net, tape, DenseMatrix(out.rows, out.cols, 0.0));
    for (const LayerGrad& lg : grads.layers) {
        for (double v : lg.weight.data) CHECK(v == 0.0);
        for (double v : lg.bias) CHECK(v == 0.0);
    }
}

TEST_CASE("backward: 1x1 linear layer hand chain rule") {
    MlpNetwork net;
    Layer l;
    l.weight = DenseMatrix(1, 1, 3.0);
    l.bias.assign(1, 0.5);
    l.activation = Activation::linear;
    net.layers.push_back(l);

    DenseMatrix x(1, 1, 2.0);
    GradientTape tape;
    forward(net, x, &tape);
    const NetGradients grads = backward(net, tape, DenseMatrix(1, 1, 1.0));
    CHECK(grads.layers[0].weight(0, 0) == doctest::Approx(2.0));
    CHECK(grads.layers[0].bias[0] == doctest::Approx(1.0));
    CHECK(grads.input(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("backward: tape reuse is a hard error") {
    Rng rng(4);
    MlpNetwork net = make_mlp({3, 2}, Activation::tanh, Activation::linear, rng);
    GradientTape tape;
    const DenseMatrix out = forward(net, random_input(rng, 2, 3), &tape);
    const DenseMatrix g(out.rows, out.cols, 1.0);
    backward(net, tape, g);
    CHECK_THROWS_AS(backward(net, tape, g), std::logic_error);
}

TEST_CASE("finite_diff_check: identity net with squared-error loss") {
    MlpNetwork net = identity_net(3);
    Rng rng(5);
    const DenseMatrix x = random_input(rng, 4, 3);
    const DenseMatrix target = random_input(rng, 4, 3);
    auto loss = [&](const DenseMatrix& y) {
        double s = 0.0;
        for (std::size_t i = 0; i < y.data.size(); ++i) {
            const double d = y.data[i] - target.data[i];
            s += d * d;
        }
        return 0.5 * s;
    };
    auto loss_grad = [&](const DenseMatrix& y) {
        DenseMatrix g(y.rows, y.cols);
        for (std::size_t i = 0; i < y.data.size(); ++i) g.data[i] = y.data[i] - target.data[i];
        return g;
    };
    CHECK(finite_diff_check(net, loss, loss_grad, x, 1e-5) < 1e-6);
}

TEST_CASE("finite_diff_check: mixed tanh/sigmoid net against cross-entropy-style loss") {
    Rng rng(6);
    MlpNetwork net = make_mlp({5, 4, 4, 3}, Activation::tanh, Activation::sigmoid, rng);
    const DenseMatrix x = random_input(rng, 6, 5);
    DenseMatrix target(6, 3);
    for (double& v : target.data) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    auto loss = [&](const DenseMatrix& y) {
        double s = 0.0;
        for (std::size_t i = 0; i < y.data.size(); ++i) {
            const double d = y.data[i] - target.data[i];
            s += d * d;
        }
        return 0.5 * s;
    };
    auto loss_grad = [&](const DenseMatrix& y) {
        DenseMatrix g(y.rows, y.cols);
        for (std::size_t i = 0; i < y.data.size(); ++i) g.data[i] = y.data[i] - target.data[i];
        return g;
    };
    CHECK(finite_diff_check(net, loss, loss_grad, x, 1e-5) < 1e-4);
}

TEST_CASE("finite_diff_check: h must be positive") {
    MlpNetwork net = identity_net(2);
    const DenseMatrix x(1, 2, 0.5);
    auto loss = [](const DenseMatrix& y) { return y(0, 0); };
    auto loss_grad = [](const DenseMatrix& y) { return DenseMatrix(y.rows, y.cols, 1.0); };
    CHECK_THROWS_AS(finite_diff_check(net, loss, loss_grad, x, 0.0), std::invalid_argument);
}

TEST_CASE("activation ranges on random inputs") {
    Rng rng(7);
    MlpNetwork sig = make_mlp({6, 5, 4}, Activation::tanh, Activation::sigmoid, rng);
    const DenseMatrix ys = forward(sig, random_input(rng, 20, 6));
    for (double v : ys.data) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    MlpNetwork th = make_mlp({6, 5, 4}, Activation::tanh, Activation::tanh, rng);
    const DenseMatrix yt = forward(th, random_input(rng, 20, 6));
    for (double v : yt.data) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("adam: zero gradient at t=1 leaves parameters unchanged") {
    Rng rng(8);
    MlpNetwork net = make_mlp({3, 2}, Activation::tanh, Activation::linear, rng);
    const std::vector<double> before = net.layers[0].weight.data;
    AdamState state = AdamState::for_network(net, 0.003);
    NetGradients zero;
    zero.layers.resize(1);
    zero.layers[0].weight = DenseMatrix(3, 2, 0.0);
    zero.layers[0].bias.assign(2, 0.0);
    adam_step(net, zero, state);
    CHECK(net.layers[0].weight.data == before);
    CHECK(state.step_count == 1);
}

TEST_CASE("adam: first step with unit gradient moves by about lr") {
    MlpNetwork net;
    Layer l;
    l.weight = DenseMatrix(1, 1, 1.0);
    l.bias.assign(1, 0.0);
    l.activation = Activation::linear;
    net.layers.push_back(l);

    AdamState state = AdamState::for_network(net, 0.003);
    NetGradients g;
    g.layers.resize(1);
    g.layers[0].weight = DenseMatrix(1, 1, 1.0);
    g.layers[0].bias.assign(1, 0.0);
    adam_step(net, g, state);
    // bias-corrected first step is lr * g / (|g| + eps)
    CHECK(net.layers[0].weight(0, 0) == doctest::Approx(1.0 - 0.003).epsilon(1e-6));
}

TEST_CASE("adam: opposite gradients partially cancel") {
    MlpNetwork net;
    Layer l;
    l.weight = DenseMatrix(1, 1, 0.0);
    l.bias.assign(1, 0.0);
    l.activation = Activation::linear;
    net.layers.push_back(l);

    AdamState state = AdamState::for_network(net, 0.003);
    NetGradients g;
    g.layers.resize(1);
    g.layers[0].weight = DenseMatrix(1, 1, 1.0);
    g.layers[0].bias.assign(1, 0.0);
    adam_step(net, g, state);
    const double after_one = std::fabs(net.layers[0].weight(0, 0));
    g.layers[0].weight(0, 0) = -1.0;
    adam_step(net, g, state);
    const double after_two = std::fabs(net.layers[0].weight(0, 0));
    CHECK(after_two < after_one);
}

TEST_CASE("adam: lr=0 leaves parameters bit-identical") {
    Rng rng(9);
    MlpNetwork net = make_mlp({4, 3, 2}, Activation::tanh, Activation::sigmoid, rng);
    const MlpNetwork before = net;
    AdamState state = AdamState::for_network(net, 0.0);
    GradientTape tape;
    const DenseMatrix out = forward(net, random_input(rng, 5, 4), &tape);
    const NetGradients grads = backward(net, tape, DenseMatrix(out.rows, out.cols, 1.0));
    adam_step(net, grads, state);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        CHECK(net.layers[i].weight.data == before.layers[i].weight.data);
        CHECK(net.layers[i].bias == before.layers[i].bias);
    }
}

TEST_CASE("adam: shape mismatch is a hard error") {
    Rng rng(10);
    MlpNetwork net = make_mlp({3, 2}, Activation::tanh, Activation::linear, rng);
    AdamState state = AdamState::for_network(net, 0.003);
    NetGradients bad;
    bad.layers.resize(1);
    bad.layers[0].weight = DenseMatrix(2, 2, 0.0);
    bad.layers[0].bias.assign(2, 0.0);
    CHECK_THROWS_AS(adam_step(net, bad, state), std::invalid_argument);
}

TEST_CASE("network serialization round-trips bit for bit") {
    Rng rng(11);
    MlpNetwork net = make_mlp({7, 5, 3}, Activation::tanh, Activation::sigmoid, rng);
    std::stringstream buf;
    save_mlp(buf, net, 424242);
    std::uint64_t seed = 0;
    const MlpNetwork loaded = load_mlp(buf, &seed);
    CHECK(seed == 424242);
    REQUIRE(loaded.layers.size() == net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        CHECK(loaded.layers[i].weight.data == net.layers[i].weight.data);
        CHECK(loaded.layers[i].bias == net.layers[i].bias);
        CHECK(loaded.layers[i].activation == net.layers[i].activation);
    }
    const DenseMatrix x = random_input(rng, 3, 7);
    CHECK(forward(loaded, x).data == forward(net, x).data);
}

TEST_CASE("load_mlp rejects a bad format tag") {
    std::stringstream buf;
    buf << "NOTAMODELFILE";
    CHECK_THROWS_AS(load_mlp(buf), std::runtime_error);
}
