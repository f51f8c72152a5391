// Feed-forward networks: taped forward/backward, Adam, gradient checking,
// and a versioned binary serialization.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "jova/matrix.hpp"

namespace jova {

enum class Activation : std::uint8_t { linear = 0, tanh = 1, sigmoid = 2 };

struct Layer {
    DenseMatrix weight;         // in x out
    std::vector<double> bias;   // out
    Activation activation = Activation::linear;

    std::size_t input_width() const { return weight.rows; }
    std::size_t output_width() const { return weight.cols; }
};

struct MlpNetwork {
    std::vector<Layer> layers;

    std::size_t input_width() const { return layers.front().input_width(); }
    std::size_t output_width() const { return layers.back().output_width(); }
    std::size_t parameter_count() const;
};

// Glorot-uniform weights, zero biases. widths = {input, hidden..., output}.
MlpNetwork make_mlp(const std::vector<std::size_t>& widths, Activation hidden_act,
                    Activation output_act, Rng& rng);

// Forward intermediates for one pass; backward consumes it exactly once.
struct GradientTape {
    std::vector<DenseMatrix> inputs;    // input to each layer, batch x in_l
    std::vector<DenseMatrix> pre_acts;  // x*W + b per layer
    DenseMatrix output;                 // post final activation
    bool consumed = false;
};

// Batch forward (rows are samples). Fills the tape when given.
DenseMatrix forward(const MlpNetwork& net, const DenseMatrix& input, GradientTape* tape = nullptr);

struct LayerGrad {
    DenseMatrix weight;
    std::vector<double> bias;
};

struct NetGradients {
    std::vector<LayerGrad> layers;
    DenseMatrix input;  // dL/dinput, batch-shaped

    void add(const NetGradients& other);
    void scale(double s);
};

// Exact reverse-mode gradients for the scalar loss whose output-gradient is
// supplied. output_grad is dL/d(post-activation output).
NetGradients backward(const MlpNetwork& net, GradientTape& tape, const DenseMatrix& output_grad);

// Same, but logit_grad is dL/d(final pre-activation); the final activation
// derivative is skipped. Used with losses computed from logits.
NetGradients backward_from_logits(const MlpNetwork& net, GradientTape& tape,
                                  const DenseMatrix& logit_grad);

struct AdamState {
    double learning_rate = 0.003;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step_count = 0;
    std::vector<LayerGrad> m;  // first moments, parameter-shaped
    std::vector<LayerGrad> v;  // second moments

    static AdamState for_network(const MlpNetwork& net, double learning_rate);
};

// One Adam update with bias correction. Shapes of net/grads/state must agree.
void adam_step(MlpNetwork& net, const NetGradients& grads, AdamState& state);

// Flat parameter/gradient views in a fixed order (per layer: weights
// row-major, then bias). Used by the finite-difference machinery.
std::vector<double*> parameter_pointers(MlpNetwork& net);
std::vector<const double*> gradient_pointers(const NetGradients& grads);

// |a-b| / max(|a|, |b|, floor); comparisons below the floor magnitude are
// effectively absolute at floor*tolerance.
double max_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                     double floor = 1e-3);

// Compares backward() gradients against central differences, parameter by
// parameter. loss maps the network output to a scalar; loss_grad gives
// dL/d(output). Returns the max relative error.
double finite_diff_check(MlpNetwork net, const std::function<double(const DenseMatrix&)>& loss,
                         const std::function<DenseMatrix(const DenseMatrix&)>& loss_grad,
                         const DenseMatrix& input, double h, double floor = 1e-3);

// Versioned binary format: shapes, activations, parameters, training seed.
void save_mlp(std::ostream& out, const MlpNetwork& net, std::uint64_t seed);
MlpNetwork load_mlp(std::istream& in, std::uint64_t* seed = nullptr);

// Raw layer block without the file tag; shared by the model file writer.
void write_mlp_body(std::ostream& out, const MlpNetwork& net);
MlpNetwork read_mlp_body(std::istream& in);

}  // namespace jova
