#include "jova/network.hpp"

#include <cmath>
#include <stdexcept>

#include "jova/io_util.hpp"

namespace jova {

namespace {

constexpr char kMlpMagic[9] = "JOVANN01";

void apply_activation(DenseMatrix& m, Activation act) {
    switch (act) {
        case Activation::linear:
            break;
        case Activation::tanh:
            for (double& v : m.data) v = std::tanh(v);
            break;
        case Activation::sigmoid:
            for (double& v : m.data) v = 1.0 / (1.0 + std::exp(-v));
            break;
    }
}

// act'(z) expressed through the post-activation value y.
inline double activation_derivative(Activation act, double y) {
    switch (act) {
        case Activation::linear:
            return 1.0;
        case Activation::tanh:
            return 1.0 - y * y;
        case Activation::sigmoid:
            return y * (1.0 - y);
    }
    return 1.0;
}

NetGradients backward_impl(const MlpNetwork& net, GradientTape& tape,
                           const DenseMatrix& out_grad, bool grad_wrt_logits) {
    if (tape.consumed) {
        throw std::logic_error("backward: gradient tape already consumed");
    }
    if (out_grad.rows != tape.output.rows || out_grad.cols != tape.output.cols) {
        throw std::invalid_argument("backward: output gradient shape " + out_grad.shape_str() +
                                    " does not match forward output " + tape.output.shape_str());
    }
    tape.consumed = true;

    const std::size_t n_layers = net.layers.size();
    NetGradients grads;
    grads.layers.resize(n_layers);

    DenseMatrix delta;  // dL/d(pre-activation) of the current layer
    for (std::size_t li = n_layers; li-- > 0;) {
        const Layer& layer = net.layers[li];
        const bool last = (li == n_layers - 1);

        if (last) {
            delta = out_grad;
            if (!grad_wrt_logits && layer.activation != Activation::linear) {
                const DenseMatrix& y = tape.output;
                for (std::size_t i = 0; i < delta.data.size(); ++i) {
                    delta.data[i] *= activation_derivative(layer.activation, y.data[i]);
                }
            }
        } else {
            // delta currently holds dL/d(input of layer li+1) == dL/d(post of li)
            const DenseMatrix& y = tape.inputs[li + 1];
            if (layer.activation != Activation::linear) {
                for (std::size_t i = 0; i < delta.data.size(); ++i) {
                    delta.data[i] *= activation_derivative(layer.activation, y.data[i]);
                }
            }
        }

        const DenseMatrix& a = tape.inputs[li];
        LayerGrad& lg = grads.layers[li];
        lg.weight = matmul_tn(a, delta);
        lg.bias.assign(layer.output_width(), 0.0);
        for (std::size_t r = 0; r < delta.rows; ++r) {
            const double* drow = delta.row_ptr(r);
            for (std::size_t c = 0; c < delta.cols; ++c) lg.bias[c] += drow[c];
        }
        delta = matmul_nt(delta, layer.weight);  // dL/d(input of layer li)
    }
    grads.input = std::move(delta);
    return grads;
}

}  // namespace

std::size_t MlpNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.weight.data.size() + l.bias.size();
    return n;
}

MlpNetwork make_mlp(const std::vector<std::size_t>& widths, Activation hidden_act,
                    Activation output_act, Rng& rng) {
    if (widths.size() < 2) {
        throw std::invalid_argument("make_mlp: need at least input and output widths");
    }
    MlpNetwork net;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const std::size_t fan_in = widths[i];
        const std::size_t fan_out = widths[i + 1];
        if (fan_in == 0 || fan_out == 0) {
            throw std::invalid_argument("make_mlp: zero layer width");
        }
        Layer layer;
        layer.weight = DenseMatrix(fan_in, fan_out);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& w : layer.weight.data) w = (2.0 * rng.uniform() - 1.0) * limit;
        layer.bias.assign(fan_out, 0.0);
        layer.activation = (i + 2 == widths.size()) ? output_act : hidden_act;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

DenseMatrix forward(const MlpNetwork& net, const DenseMatrix& input, GradientTape* tape) {
    if (net.layers.empty()) throw std::invalid_argument("forward: empty network");
    if (input.cols != net.input_width()) {
        throw std::invalid_argument("forward: input width " + std::to_string(input.cols) +
                                    " does not match network input width " +
                                    std::to_string(net.input_width()));
    }
    if (tape) {
        tape->inputs.clear();
        tape->pre_acts.clear();
        tape->consumed = false;
    }
    DenseMatrix x = input;
    for (const Layer& layer : net.layers) {
        if (tape) tape->inputs.push_back(x);
        DenseMatrix z = matmul(x, layer.weight);
        for (std::size_t r = 0; r < z.rows; ++r) {
            double* zrow = z.row_ptr(r);
            for (std::size_t c = 0; c < z.cols; ++c) zrow[c] += layer.bias[c];
        }
        if (tape) tape->pre_acts.push_back(z);
        apply_activation(z, layer.activation);
        x = std::move(z);
    }
    if (tape) tape->output = x;
    return x;
}

void NetGradients::add(const NetGradients& other) {
    if (layers.size() != other.layers.size()) {
        throw std::invalid_argument("NetGradients::add: layer count mismatch");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        for (std::size_t j = 0; j < layers[i].weight.data.size(); ++j) {
            layers[i].weight.data[j] += other.layers[i].weight.data[j];
        }
        for (std::size_t j = 0; j < layers[i].bias.size(); ++j) {
            layers[i].bias[j] += other.layers[i].bias[j];
        }
    }
}

void NetGradients::scale(double s) {
    for (LayerGrad& lg : layers) {
        for (double& v : lg.weight.data) v *= s;
        for (double& v : lg.bias) v *= s;
    }
}

NetGradients backward(const MlpNetwork& net, GradientTape& tape, const DenseMatrix& output_grad) {
    return backward_impl(net, tape, output_grad, /*grad_wrt_logits=*/false);
}

NetGradients backward_from_logits(const MlpNetwork& net, GradientTape& tape,
                                  const DenseMatrix& logit_grad) {
    return backward_impl(net, tape, logit_grad, /*grad_wrt_logits=*/true);
}

AdamState AdamState::for_network(const MlpNetwork& net, double learning_rate) {
    AdamState state;
    state.learning_rate = learning_rate;
    for (const Layer& l : net.layers) {
        LayerGrad zero;
        zero.weight = DenseMatrix(l.weight.rows, l.weight.cols, 0.0);
        zero.bias.assign(l.bias.size(), 0.0);
        state.m.push_back(zero);
        state.v.push_back(zero);
    }
    return state;
}

void adam_step(MlpNetwork& net, const NetGradients& grads, AdamState& state) {
    if (grads.layers.size() != net.layers.size() || state.m.size() != net.layers.size()) {
        throw std::invalid_argument("adam_step: layer count mismatch");
    }
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));

    auto update = [&](double& p, double g, double& m, double& v) {
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        p -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    };

    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        Layer& layer = net.layers[li];
        const LayerGrad& g = grads.layers[li];
        if (!g.weight.same_shape(layer.weight) || g.bias.size() != layer.bias.size()) {
            throw std::invalid_argument("adam_step: gradient shape mismatch at layer " +
                                        std::to_string(li));
        }
        for (std::size_t j = 0; j < layer.weight.data.size(); ++j) {
            update(layer.weight.data[j], g.weight.data[j], state.m[li].weight.data[j],
                   state.v[li].weight.data[j]);
        }
        for (std::size_t j = 0; j < layer.bias.size(); ++j) {
            update(layer.bias[j], g.bias[j], state.m[li].bias[j], state.v[li].bias[j]);
        }
        for (double w : layer.weight.data) {
            if (!std::isfinite(w)) {
                throw std::runtime_error("adam_step: non-finite weight after update at layer " +
                                         std::to_string(li));
            }
        }
    }
}

std::vector<double*> parameter_pointers(MlpNetwork& net) {
    std::vector<double*> out;
    out.reserve(net.parameter_count());
    for (Layer& l : net.layers) {
        for (double& w : l.weight.data) out.push_back(&w);
        for (double& b : l.bias) out.push_back(&b);
    }
    return out;
}

std::vector<const double*> gradient_pointers(const NetGradients& grads) {
    std::vector<const double*> out;
    for (const LayerGrad& lg : grads.layers) {
        for (const double& w : lg.weight.data) out.push_back(&w);
        for (const double& b : lg.bias) out.push_back(&b);
    }
    return out;
}

double max_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                     double floor) {
    if (analytic.size() != numeric.size()) {
        throw std::invalid_argument("max_rel_error: size mismatch");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic[i];
        const double b = numeric[i];
        const double denom = std::max({std::fabs(a), std::fabs(b), floor});
        worst = std::max(worst, std::fabs(a - b) / denom);
    }
    return worst;
}

double finite_diff_check(MlpNetwork net, const std::function<double(const DenseMatrix&)>& loss,
                         const std::function<DenseMatrix(const DenseMatrix&)>& loss_grad,
                         const DenseMatrix& input, double h, double floor) {
    if (h <= 0) throw std::invalid_argument("finite_diff_check: h must be positive");

    GradientTape tape;
    const DenseMatrix out = forward(net, input, &tape);
    const NetGradients grads = backward(net, tape, loss_grad(out));

    std::vector<double*> params = parameter_pointers(net);
    std::vector<const double*> gptrs = gradient_pointers(grads);

    std::vector<double> analytic(params.size()), numeric(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        analytic[i] = *gptrs[i];
        const double saved = *params[i];
        *params[i] = saved + h;
        const double lp = loss(forward(net, input));
        *params[i] = saved - h;
        const double lm = loss(forward(net, input));
        *params[i] = saved;
        numeric[i] = (lp - lm) / (2.0 * h);
    }
    return max_rel_error(analytic, numeric, floor);
}

void write_mlp_body(std::ostream& out, const MlpNetwork& net) {
    io::write_u32(out, static_cast<std::uint32_t>(net.layers.size()));
    for (const Layer& l : net.layers) {
        io::write_u64(out, l.weight.rows);
        io::write_u64(out, l.weight.cols);
        io::write_u8(out, static_cast<std::uint8_t>(l.activation));
        io::write_f64_array(out, l.weight.data);
        io::write_f64_array(out, l.bias);
    }
}

MlpNetwork read_mlp_body(std::istream& in) {
    MlpNetwork net;
    const std::uint32_t n_layers = io::read_u32(in);
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        Layer l;
        const std::uint64_t rows = io::read_u64(in);
        const std::uint64_t cols = io::read_u64(in);
        const std::uint8_t act = io::read_u8(in);
        if (act > 2) throw std::runtime_error("model file: unknown activation tag");
        l.activation = static_cast<Activation>(act);
        l.weight.rows = rows;
        l.weight.cols = cols;
        l.weight.data = io::read_f64_array(in);
        if (l.weight.data.size() != rows * cols) {
            throw std::runtime_error("model file: weight array size mismatch");
        }
        l.bias = io::read_f64_array(in);
        if (l.bias.size() != cols) {
            throw std::runtime_error("model file: bias array size mismatch");
        }
        if (!net.layers.empty() && net.layers.back().output_width() != l.input_width()) {
            throw std::runtime_error("model file: layer widths do not chain");
        }
        net.layers.push_back(std::move(l));
    }
    if (net.layers.empty()) throw std::runtime_error("model file: no layers");
    return net;
}

void save_mlp(std::ostream& out, const MlpNetwork& net, std::uint64_t seed) {
    io::write_magic(out, kMlpMagic);
    io::write_u64(out, seed);
    write_mlp_body(out, net);
}

MlpNetwork load_mlp(std::istream& in, std::uint64_t* seed) {
    io::expect_magic(in, kMlpMagic, "network file");
    const std::uint64_t s = io::read_u64(in);
    if (seed) *seed = s;
    return read_mlp_body(in);
}

}  // namespace jova
