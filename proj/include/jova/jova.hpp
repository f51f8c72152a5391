// The two-sided VAE ensemble: user VAE over matrix rows, item VAE over
// columns, averaged predictions, the joint and hinge-augmented losses, block
// mini-batching, and the trainer with early stopping.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jova/data.hpp"
#include "jova/evaluation.hpp"
#include "jova/vae.hpp"

namespace jova {

enum class JovaMode : std::uint8_t { jova = 0, jova_hinge = 1, user_vae_only = 2 };

JovaMode parse_jova_mode(const std::string& name);
std::string jova_mode_name(JovaMode mode);

struct JovaHyperParams {
    double alpha = 0.01;   // KL weight
    double beta = 0.01;    // hinge weight
    double lambda = 0.15;  // hinge margin
    JovaMode mode = JovaMode::jova_hinge;
};

struct JovaModel {
    VaeModel user_vae;  // input width = item count
    VaeModel item_vae;  // input width = user count
    JovaHyperParams hp;
    std::uint64_t seed = 0;
    std::size_t n_users = 0;
    std::size_t n_items = 0;
};

JovaModel make_jova_model(std::size_t n_users, std::size_t n_items,
                          const std::vector<std::size_t>& hidden, std::size_t latent_dim,
                          const JovaHyperParams& hp, std::uint64_t seed);

struct HingePair {
    std::uint32_t user = 0;
    std::uint32_t pos_item = 0;
    std::uint32_t neg_item = 0;
};

// One mini-batch: which user rows and item columns to visit. The loss masks
// restrict which cells the reconstruction terms charge (so an epoch of
// blocks charges every cell exactly once); an absent mask means full width.
struct BlockBatch {
    std::vector<std::uint32_t> user_indices;
    std::vector<std::uint32_t> item_indices;
    std::optional<std::vector<std::uint32_t>> user_loss_items;  // columns charged on user rows
    std::optional<std::vector<std::uint32_t>> item_loss_users;  // rows charged on item columns
    std::vector<HingePair> pairs;
};

// Shuffles users and items, partitions each into chunks of at most the block
// size, and enumerates the chunk cross product in shuffled order. Loss masks
// are set to the block's own chunks.
std::vector<BlockBatch> make_blocks(std::size_t n_users, std::size_t n_items,
                                    std::size_t block_users, std::size_t block_items, Rng& rng);

// One uniform draw from the user's train-unobserved items per requested
// count (with replacement). Returns empty when every item is observed.
std::vector<std::uint32_t> sample_negatives(const InteractionMatrix& data, std::uint32_t user,
                                            std::size_t count, Rng& rng);

struct BlockLossResult {
    double total = 0.0;
    double user_vae = 0.0;  // user-side reconstruction + KL
    double item_vae = 0.0;
    double hinge = 0.0;  // unweighted pairwise hinge sum
    VaeGradients user_grads;
    VaeGradients item_grads;
    std::vector<double> pos_scores;  // training-time averaged scores per pair
    std::vector<double> neg_scores;
};

// VAE terms only (both sides; item side skipped in user_vae_only mode).
// noise_seed makes the sampled forward a deterministic function of the
// parameters, which the finite-difference checks rely on.
BlockLossResult jova_loss(const JovaModel& model, const InteractionMatrix& data,
                          const BlockBatch& batch, std::uint64_t noise_seed);

// VAE terms plus beta-weighted hinge over the batch pairs; requires
// jova_hinge mode. Hinge gradients reach both VAEs through the averaged
// prediction; the subgradient at the kink is zero.
BlockLossResult jova_hinge_loss(const JovaModel& model, const InteractionMatrix& data,
                                const BlockBatch& batch, std::uint64_t noise_seed);

// sum over aligned pairs of max(0, r_neg - r_pos + lambda).
double hinge_loss(const PredictionMatrix& predictions,
                  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& positives,
                  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& negatives,
                  double lambda);

// Noiseless (z = mu) averaged prediction for the requested users over all
// items: 0.5 * (user reconstruction + item reconstruction), or the user
// reconstruction alone in user_vae_only mode. Entries lie in [0,1].
PredictionMatrix predict(const JovaModel& model, const InteractionMatrix& data,
                         const std::vector<std::uint32_t>& users);

struct TrainConfig {
    double learning_rate = 0.003;
    std::size_t max_epochs = 200;
    std::size_t patience = 10;
    std::uint64_t seed = 1;
    std::size_t block_users = 1500;
    std::size_t block_items = 1500;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_ndcg10 = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> log;
    double best_val_ndcg10 = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
};

// Block-wise Adam training with per-epoch validation NDCG@10 and best-epoch
// parameter restore. Negatives are resampled each epoch. Aborts with a
// diagnostic naming epoch and block if the loss goes non-finite.
TrainResult train(JovaModel& model, const InteractionMatrix& data, const TrainConfig& cfg);

// Convenience: predict + evaluate for every evaluable user of the split.
EvalReport evaluate_model(const JovaModel& model, const InteractionMatrix& data, Split eval_split,
                          const EvalOptions& opts);

// Versioned binary model file: both VAEs, hyperparameters, seed, dimensions.
void save_model(const std::string& path, const JovaModel& model);
JovaModel load_model(const std::string& path);

}  // namespace jova
