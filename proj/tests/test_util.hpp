// Shared helpers for the test suites: parameter flattening for whole-model
// finite differences, random binary matrices, and synthetic datasets.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "jova/data.hpp"
#include "jova/jova.hpp"
#include "jova/vae.hpp"

namespace jova::testutil {

inline std::vector<double*> vae_parameters(VaeModel& vae) {
    std::vector<double*> out = parameter_pointers(vae.encoder);
    const std::vector<double*> dec = parameter_pointers(vae.decoder);
    out.insert(out.end(), dec.begin(), dec.end());
    return out;
}

inline std::vector<double> vae_gradient_values(const VaeGradients& g) {
    std::vector<double> out;
    for (const double* p : gradient_pointers(g.encoder)) out.push_back(*p);
    for (const double* p : gradient_pointers(g.decoder)) out.push_back(*p);
    return out;
}

inline std::vector<double*> jova_parameters(JovaModel& model) {
    std::vector<double*> out = vae_parameters(model.user_vae);
    const std::vector<double*> item = vae_parameters(model.item_vae);
    out.insert(out.end(), item.begin(), item.end());
    return out;
}

// Central differences of a scalar function over the given parameters.
inline std::vector<double> central_differences(const std::vector<double*>& params,
                                               const std::function<double()>& f, double h) {
    std::vector<double> out(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = *params[i];
        *params[i] = saved + h;
        const double lp = f();
        *params[i] = saved - h;
        const double lm = f();
        *params[i] = saved;
        out[i] = (lp - lm) / (2.0 * h);
    }
    return out;
}

inline DenseMatrix random_binary_matrix(Rng& rng, std::size_t rows, std::size_t cols,
                                        double density = 0.4) {
    DenseMatrix m(rows, cols, 0.0);
    for (double& v : m.data) v = rng.uniform() < density ? 1.0 : 0.0;
    return m;
}

inline void zero_parameters(MlpNetwork& net) {
    for (Layer& l : net.layers) {
        for (double& w : l.weight.data) w = 0.0;
        for (double& b : l.bias) b = 0.0;
    }
}

inline void zero_parameters(VaeModel& vae) {
    zero_parameters(vae.encoder);
    zero_parameters(vae.decoder);
}

// Dataset from a dense 0/1 matrix, split 80/10/10.
inline InteractionMatrix dataset_from_dense(const DenseMatrix& r, std::uint64_t split_seed) {
    std::vector<RawRating> positives;
    for (std::size_t u = 0; u < r.rows; ++u) {
        for (std::size_t i = 0; i < r.cols; ++i) {
            if (r(u, i) != 0.0) {
                positives.push_back({"u" + std::to_string(u), "i" + std::to_string(i), 1.0});
            }
        }
    }
    Rng rng(split_seed);
    return split(positives, 0.8, 0.1, 0.1, rng);
}

// Users partitioned into communities, each interacting with a fixed number
// of uniformly chosen items from their own community's item pool.
inline std::vector<RawRating> community_interactions(std::size_t n_users, std::size_t n_items,
                                                     std::size_t communities,
                                                     std::size_t per_user, Rng& rng) {
    std::vector<RawRating> out;
    const std::size_t items_per_comm = n_items / communities;
    for (std::size_t u = 0; u < n_users; ++u) {
        const std::size_t comm = u % communities;
        const std::size_t base = comm * items_per_comm;
        std::vector<std::uint32_t> pool(items_per_comm);
        for (std::size_t i = 0; i < items_per_comm; ++i) {
            pool[i] = static_cast<std::uint32_t>(base + i);
        }
        for (std::size_t i = pool.size(); i > 1; --i) {
            const std::size_t j = rng.uniform_below(i);
            std::swap(pool[i - 1], pool[j]);
        }
        const std::size_t take = std::min(per_user, pool.size());
        for (std::size_t k = 0; k < take; ++k) {
            out.push_back({"u" + std::to_string(u), "i" + std::to_string(pool[k]), 1.0});
        }
    }
    return out;
}

inline InteractionMatrix community_dataset(std::size_t n_users, std::size_t n_items,
                                           std::size_t communities, std::size_t per_user,
                                           std::uint64_t seed) {
    Rng gen_rng(mix_seed(seed, 91));
    const std::vector<RawRating> inter =
        community_interactions(n_users, n_items, communities, per_user, gen_rng);
    Rng split_rng(mix_seed(seed, 92));
    return split(inter, 0.8, 0.1, 0.1, split_rng);
}

}  // namespace jova::testutil
