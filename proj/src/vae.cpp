#include "jova/vae.hpp"

#include <cmath>
#include <stdexcept>

namespace jova {

namespace {

// log(1 + exp(t)) without overflow.
inline double softplus(double t) {
    return std::max(t, 0.0) + std::log1p(std::exp(-std::fabs(t)));
}

}  // namespace

void VaeModel::validate() const {
    if (latent_dim == 0) throw std::invalid_argument("vae: latent_dim must be positive");
    if (encoder.output_width() != 2 * latent_dim) {
        throw std::invalid_argument("vae: encoder must output 2*latent_dim values");
    }
    if (decoder.input_width() != latent_dim) {
        throw std::invalid_argument("vae: decoder input width must equal latent_dim");
    }
    if (decoder.output_width() != encoder.input_width()) {
        throw std::invalid_argument("vae: decoder output width must equal encoder input width");
    }
}

VaeModel make_vae(std::size_t input_width, const std::vector<std::size_t>& hidden,
                  std::size_t latent_dim, Rng& rng) {
    VaeModel vae;
    vae.latent_dim = latent_dim;

    std::vector<std::size_t> enc_widths;
    enc_widths.push_back(input_width);
    enc_widths.insert(enc_widths.end(), hidden.begin(), hidden.end());
    enc_widths.push_back(2 * latent_dim);
    vae.encoder = make_mlp(enc_widths, Activation::tanh, Activation::linear, rng);

    std::vector<std::size_t> dec_widths;
    dec_widths.push_back(latent_dim);
    dec_widths.insert(dec_widths.end(), hidden.begin(), hidden.end());
    dec_widths.push_back(input_width);
    vae.decoder = make_mlp(dec_widths, Activation::tanh, Activation::sigmoid, rng);

    vae.validate();
    return vae;
}

std::pair<DenseMatrix, DenseMatrix> encode(const VaeModel& vae, const DenseMatrix& x) {
    const DenseMatrix out = forward(vae.encoder, x);
    const std::size_t d = vae.latent_dim;
    DenseMatrix mu(out.rows, d), logvar(out.rows, d);
    for (std::size_t r = 0; r < out.rows; ++r) {
        const double* orow = out.row_ptr(r);
        for (std::size_t j = 0; j < d; ++j) {
            mu(r, j) = orow[j];
            logvar(r, j) = orow[d + j];
        }
    }
    return {std::move(mu), std::move(logvar)};
}

DenseMatrix reparameterize_with_eps(const DenseMatrix& mu, const DenseMatrix& logvar,
                                    const DenseMatrix& eps) {
    if (!mu.same_shape(logvar) || !mu.same_shape(eps)) {
        throw std::invalid_argument("reparameterize: shape mismatch");
    }
    DenseMatrix z(mu.rows, mu.cols);
    for (std::size_t i = 0; i < z.data.size(); ++i) {
        z.data[i] = mu.data[i] + std::exp(0.5 * logvar.data[i]) * eps.data[i];
    }
    return z;
}

DenseMatrix reparameterize(const DenseMatrix& mu, const DenseMatrix& logvar, Rng& rng) {
    const DenseMatrix eps = sample_standard_normal(rng, mu.rows, mu.cols);
    return reparameterize_with_eps(mu, logvar, eps);
}

std::vector<double> kl_divergence(const DenseMatrix& mu, const DenseMatrix& logvar) {
    if (!mu.same_shape(logvar)) throw std::invalid_argument("kl_divergence: shape mismatch");
    std::vector<double> kl(mu.rows, 0.0);
    for (std::size_t r = 0; r < mu.rows; ++r) {
        const double* mrow = mu.row_ptr(r);
        const double* lrow = logvar.row_ptr(r);
        double acc = 0.0;
        for (std::size_t j = 0; j < mu.cols; ++j) {
            // expm1 keeps exp(lv) - 1 - lv nonnegative for tiny lv
            acc += mrow[j] * mrow[j] + std::expm1(lrow[j]) - lrow[j];
        }
        kl[r] = 0.5 * acc;
    }
    return kl;
}

double logistic_log_likelihood_masked(const DenseMatrix& x, const DenseMatrix& logits,
                                      const std::vector<std::uint32_t>* columns) {
    if (!x.same_shape(logits)) {
        throw std::invalid_argument("logistic_log_likelihood: shape mismatch " + x.shape_str() +
                                    " vs " + logits.shape_str());
    }
    double ll = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double* xrow = x.row_ptr(r);
        const double* orow = logits.row_ptr(r);
        if (columns) {
            for (std::uint32_t c : *columns) {
                ll += xrow[c] * orow[c] - softplus(orow[c]);
            }
        } else {
            for (std::size_t c = 0; c < x.cols; ++c) {
                ll += xrow[c] * orow[c] - softplus(orow[c]);
            }
        }
    }
    return ll;
}

double logistic_log_likelihood(const DenseMatrix& x, const DenseMatrix& logits) {
    return logistic_log_likelihood_masked(x, logits, nullptr);
}

VaeForwardResult vae_forward(const VaeModel& vae, const DenseMatrix& x, Rng& rng) {
    vae.validate();
    VaeForwardResult res;
    const DenseMatrix enc_out = forward(vae.encoder, x, &res.encoder_tape);

    const std::size_t d = vae.latent_dim;
    res.mu = DenseMatrix(enc_out.rows, d);
    res.logvar = DenseMatrix(enc_out.rows, d);
    for (std::size_t r = 0; r < enc_out.rows; ++r) {
        const double* orow = enc_out.row_ptr(r);
        for (std::size_t j = 0; j < d; ++j) {
            res.mu(r, j) = orow[j];
            res.logvar(r, j) = orow[d + j];
        }
    }
    res.eps = sample_standard_normal(rng, enc_out.rows, d);
    res.z = reparameterize_with_eps(res.mu, res.logvar, res.eps);
    res.reconstruction = forward(vae.decoder, res.z, &res.decoder_tape);
    res.logits = res.decoder_tape.pre_acts.back();
    return res;
}

VaeGradients vae_backward(const VaeModel& vae, VaeForwardResult& fwd,
                          const DenseMatrix& logits_grad, double alpha) {
    VaeGradients grads;
    grads.decoder = backward_from_logits(vae.decoder, fwd.decoder_tape, logits_grad);

    // Chain through z = mu + exp(0.5*logvar)*eps, then add the KL gradient.
    const DenseMatrix& dz = grads.decoder.input;
    const std::size_t d = vae.latent_dim;
    DenseMatrix enc_grad(dz.rows, 2 * d);
    for (std::size_t r = 0; r < dz.rows; ++r) {
        const double* dzrow = dz.row_ptr(r);
        double* grow = enc_grad.row_ptr(r);
        for (std::size_t j = 0; j < d; ++j) {
            const double sigma = std::exp(0.5 * fwd.logvar(r, j));
            grow[j] = dzrow[j] + alpha * fwd.mu(r, j);
            grow[d + j] = dzrow[j] * fwd.eps(r, j) * 0.5 * sigma +
                          alpha * 0.5 * std::expm1(fwd.logvar(r, j));
        }
    }
    grads.encoder = backward(vae.encoder, fwd.encoder_tape, enc_grad);
    return grads;
}

VaeLossResult vae_loss(const VaeModel& vae, const DenseMatrix& x, double alpha, Rng& rng) {
    if (alpha < 0) throw std::invalid_argument("vae_loss: alpha must be nonnegative");
    VaeLossResult res;
    res.forward = vae_forward(vae, x, rng);

    res.nll = -logistic_log_likelihood(x, res.forward.logits);
    for (double k : kl_divergence(res.forward.mu, res.forward.logvar)) res.kl += k;
    res.loss = res.nll + alpha * res.kl;

    // d(-ll)/d(logit) = sigmoid(logit) - x
    DenseMatrix dlogits(x.rows, x.cols);
    for (std::size_t i = 0; i < dlogits.data.size(); ++i) {
        dlogits.data[i] = res.forward.reconstruction.data[i] - x.data[i];
    }
    res.grads = vae_backward(vae, res.forward, dlogits, alpha);
    return res;
}

}  // namespace jova
