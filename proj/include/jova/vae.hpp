// Variational autoencoder: Gaussian inference network, reparameterized
// sampling, logistic decoder, and the KL-weighted loss.
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "jova/network.hpp"

namespace jova {

struct VaeModel {
    MlpNetwork encoder;  // input_width -> ... -> 2*latent_dim, linear head
    MlpNetwork decoder;  // latent_dim -> ... -> input_width, sigmoid head
    std::size_t latent_dim = 0;

    std::size_t input_width() const { return encoder.input_width(); }
    void validate() const;  // throws if encoder/decoder widths do not cohere
};

// Encoder hidden layers tanh with a linear (mu, log-variance) head; decoder
// hidden layers tanh with a sigmoid output head.
VaeModel make_vae(std::size_t input_width, const std::vector<std::size_t>& hidden,
                  std::size_t latent_dim, Rng& rng);

// Splits the encoder output into (mu, log-variance) halves.
std::pair<DenseMatrix, DenseMatrix> encode(const VaeModel& vae, const DenseMatrix& x);

// z = mu + exp(0.5*logvar) .* eps, one Monte Carlo sample.
DenseMatrix reparameterize(const DenseMatrix& mu, const DenseMatrix& logvar, Rng& rng);
DenseMatrix reparameterize_with_eps(const DenseMatrix& mu, const DenseMatrix& logvar,
                                    const DenseMatrix& eps);

// Closed-form KL(q || N(0,I)) per row: 0.5 * sum_j (mu^2 + sigma^2 - 1 - log sigma^2).
std::vector<double> kl_divergence(const DenseMatrix& mu, const DenseMatrix& logvar);

// sum_i x_i*log sigmoid(o_i) + (1-x_i)*log(1-sigmoid(o_i)), over the whole
// matrix, computed from logits so saturated values never hit log(0).
double logistic_log_likelihood(const DenseMatrix& x, const DenseMatrix& logits);

// Same likelihood restricted to a column subset (nullptr = all columns).
double logistic_log_likelihood_masked(const DenseMatrix& x, const DenseMatrix& logits,
                                      const std::vector<std::uint32_t>* columns);

struct VaeForwardResult {
    DenseMatrix mu;
    DenseMatrix logvar;
    DenseMatrix eps;
    DenseMatrix z;
    DenseMatrix logits;          // decoder pre-sigmoid output
    DenseMatrix reconstruction;  // sigmoid(logits), entries in (0,1)
    GradientTape encoder_tape;
    GradientTape decoder_tape;
};

// One sampled encode/decode pass with tapes kept for backward.
VaeForwardResult vae_forward(const VaeModel& vae, const DenseMatrix& x, Rng& rng);

struct VaeGradients {
    NetGradients encoder;
    NetGradients decoder;

    void add(const VaeGradients& other) {
        encoder.add(other.encoder);
        decoder.add(other.decoder);
    }
};

// Backward through decoder, reparameterization, and encoder given the total
// gradient w.r.t. the decoder logits. alpha scales the KL gradient of every
// forward row (pass 0 for prediction-only paths). Consumes both tapes.
VaeGradients vae_backward(const VaeModel& vae, VaeForwardResult& fwd,
                          const DenseMatrix& logits_grad, double alpha);

struct VaeLossResult {
    double loss = 0.0;  // -log-likelihood + alpha * KL, summed over batch rows
    double nll = 0.0;
    double kl = 0.0;
    VaeGradients grads;
    VaeForwardResult forward;
};

// Loss and exact gradients for one batch; gradients flow through the
// reparameterization into both encoder and decoder.
VaeLossResult vae_loss(const VaeModel& vae, const DenseMatrix& x, double alpha, Rng& rng);

}  // namespace jova
