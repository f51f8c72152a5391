#include "jova/jova.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "jova/io_util.hpp"

namespace jova {

namespace {

constexpr char kModelMagic[9] = "JOVAMD01";

// stream tags for deterministic seed derivation
constexpr std::uint64_t kUserInitStream = 101;
constexpr std::uint64_t kItemInitStream = 102;
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kNegativeStream = 2;
constexpr std::uint64_t kBlockStreamBase = 16;
constexpr std::uint64_t kUserNoise = 11;
constexpr std::uint64_t kItemNoise = 12;
constexpr std::uint64_t kHingeNoise = 13;

void shuffle_indices(std::vector<std::uint32_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_below(i);
        std::swap(v[i - 1], v[j]);
    }
}

// (reconstruction - x) on charged cells, zero elsewhere.
DenseMatrix masked_nll_grad(const DenseMatrix& x, const DenseMatrix& recon,
                            const std::optional<std::vector<std::uint32_t>>& columns) {
    DenseMatrix g(x.rows, x.cols, 0.0);
    if (columns) {
        for (std::size_t r = 0; r < x.rows; ++r) {
            const double* xr = x.row_ptr(r);
            const double* pr = recon.row_ptr(r);
            double* gr = g.row_ptr(r);
            for (std::uint32_t c : *columns) gr[c] = pr[c] - xr[c];
        }
    } else {
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            g.data[i] = recon.data[i] - x.data[i];
        }
    }
    return g;
}

struct SideForward {
    bool active = false;
    DenseMatrix x;
    VaeForwardResult fwd;
    DenseMatrix dlogits;
    double loss = 0.0;
    std::unordered_map<std::uint32_t, std::size_t> row_of;  // matrix index -> slab row
};

SideForward forward_side(const VaeModel& vae, const DenseMatrix& x,
                         const std::vector<std::uint32_t>& indices,
                         const std::optional<std::vector<std::uint32_t>>& loss_mask, double alpha,
                         Rng& rng) {
    SideForward side;
    if (indices.empty()) return side;
    side.active = true;
    side.x = x;
    side.fwd = vae_forward(vae, side.x, rng);
    const std::vector<std::uint32_t>* cols = loss_mask ? &*loss_mask : nullptr;
    side.loss = -logistic_log_likelihood_masked(side.x, side.fwd.logits, cols);
    for (double k : kl_divergence(side.fwd.mu, side.fwd.logvar)) side.loss += alpha * k;
    side.dlogits = masked_nll_grad(side.x, side.fwd.reconstruction, loss_mask);
    side.row_of.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) side.row_of.emplace(indices[r], r);
    return side;
}

BlockLossResult block_loss(const JovaModel& model, const InteractionMatrix& data,
                           const BlockBatch& batch, std::uint64_t noise_seed, bool include_hinge) {
    if (model.n_users != data.user_count() || model.n_items != data.item_count()) {
        throw std::invalid_argument("block loss: model dimensions do not match the matrix");
    }
    BlockLossResult res;
    Rng rng_user(mix_seed(noise_seed, kUserNoise));
    Rng rng_item(mix_seed(noise_seed, kItemNoise));
    Rng rng_hinge(mix_seed(noise_seed, kHingeNoise));

    SideForward user_side =
        batch.user_indices.empty()
            ? SideForward{}
            : forward_side(model.user_vae, data.dense_rows(batch.user_indices, Split::train),
                           batch.user_indices, batch.user_loss_items, model.hp.alpha, rng_user);
    res.user_vae = user_side.loss;

    const bool item_active = model.hp.mode != JovaMode::user_vae_only;
    SideForward item_side =
        (!item_active || batch.item_indices.empty())
            ? SideForward{}
            : forward_side(model.item_vae, data.dense_cols(batch.item_indices, Split::train),
                           batch.item_indices, batch.item_loss_users, model.hp.alpha, rng_item);
    res.item_vae = item_side.loss;

    // Hinge over the batch pairs, scored on the same sampled reconstructions.
    SideForward extra_side;  // item columns needed only as hinge negatives
    const bool hinge_active = include_hinge && model.hp.beta != 0.0 && !batch.pairs.empty();
    if (hinge_active) {
        if (!user_side.active) {
            throw std::invalid_argument("hinge loss: batch has pairs but no user rows");
        }
        std::vector<std::uint32_t> extra;
        if (item_side.active) {
            for (const HingePair& p : batch.pairs) {
                if (!item_side.row_of.count(p.neg_item)) extra.push_back(p.neg_item);
            }
            std::sort(extra.begin(), extra.end());
            extra.erase(std::unique(extra.begin(), extra.end()), extra.end());
            if (!extra.empty()) {
                // prediction-only forward: no reconstruction or KL terms charged
                DenseMatrix xe = data.dense_cols(extra, Split::train);
                extra_side.active = true;
                extra_side.x = std::move(xe);
                extra_side.fwd = vae_forward(model.item_vae, extra_side.x, rng_hinge);
                extra_side.dlogits =
                    DenseMatrix(extra.size(), data.user_count(), 0.0);
                for (std::size_t r = 0; r < extra.size(); ++r) {
                    extra_side.row_of.emplace(extra[r], r);
                }
            }
        }

        res.pos_scores.reserve(batch.pairs.size());
        res.neg_scores.reserve(batch.pairs.size());
        const double beta = model.hp.beta;
        for (const HingePair& p : batch.pairs) {
            const std::size_t ur = user_side.row_of.at(p.user);
            const double user_pos = user_side.fwd.reconstruction(ur, p.pos_item);
            const double user_neg = user_side.fwd.reconstruction(ur, p.neg_item);

            double pos_score = user_pos;
            double neg_score = user_neg;
            const std::size_t* pos_item_row = nullptr;
            const SideForward* neg_side = nullptr;
            std::size_t neg_item_row = 0;
            if (item_side.active) {
                pos_item_row = &item_side.row_of.at(p.pos_item);
                pos_score = 0.5 * (user_pos + item_side.fwd.reconstruction(*pos_item_row, p.user));
                const auto it = item_side.row_of.find(p.neg_item);
                if (it != item_side.row_of.end()) {
                    neg_side = &item_side;
                    neg_item_row = it->second;
                } else {
                    neg_side = &extra_side;
                    neg_item_row = extra_side.row_of.at(p.neg_item);
                }
                neg_score =
                    0.5 * (user_neg + neg_side->fwd.reconstruction(neg_item_row, p.user));
            }
            res.pos_scores.push_back(pos_score);
            res.neg_scores.push_back(neg_score);

            const double margin = neg_score - pos_score + model.hp.lambda;
            if (margin <= 0.0) continue;  // zero subgradient at and below the kink
            res.hinge += margin;

            // d r_hat / d logit = ensemble weight * sigmoid'(logit)
            const double w = item_side.active ? 0.5 : 1.0;
            auto add_grad = [&](DenseMatrix& dl, std::size_t row, std::size_t col, double rec,
                                double sign) {
                dl(row, col) += beta * sign * w * rec * (1.0 - rec);
            };
            add_grad(user_side.dlogits, ur, p.pos_item, user_pos, -1.0);
            add_grad(user_side.dlogits, ur, p.neg_item, user_neg, +1.0);
            if (item_side.active) {
                add_grad(item_side.dlogits, *pos_item_row, p.user,
                         item_side.fwd.reconstruction(*pos_item_row, p.user), -1.0);
                DenseMatrix& neg_dl = (neg_side == &item_side) ? item_side.dlogits
                                                               : extra_side.dlogits;
                add_grad(neg_dl, neg_item_row, p.user,
                         neg_side->fwd.reconstruction(neg_item_row, p.user), +1.0);
            }
        }
    }

    res.total = res.user_vae + res.item_vae + model.hp.beta * res.hinge;

    if (user_side.active) {
        res.user_grads =
            vae_backward(model.user_vae, user_side.fwd, user_side.dlogits, model.hp.alpha);
    }
    if (item_side.active) {
        res.item_grads =
            vae_backward(model.item_vae, item_side.fwd, item_side.dlogits, model.hp.alpha);
        if (extra_side.active) {
            res.item_grads.add(
                vae_backward(model.item_vae, extra_side.fwd, extra_side.dlogits, 0.0));
        }
    }
    return res;
}

DenseMatrix noiseless_reconstruction(const VaeModel& vae, const DenseMatrix& x) {
    const auto [mu, logvar] = encode(vae, x);
    (void)logvar;
    return forward(vae.decoder, mu);
}

}  // namespace

JovaMode parse_jova_mode(const std::string& name) {
    if (name == "jova") return JovaMode::jova;
    if (name == "jova_hinge" || name == "jova-hinge") return JovaMode::jova_hinge;
    if (name == "user_vae_only" || name == "user-vae-only") return JovaMode::user_vae_only;
    throw std::invalid_argument("unknown mode: " + name);
}

std::string jova_mode_name(JovaMode mode) {
    switch (mode) {
        case JovaMode::jova: return "jova";
        case JovaMode::jova_hinge: return "jova_hinge";
        case JovaMode::user_vae_only: return "user_vae_only";
    }
    return "jova";
}

JovaModel make_jova_model(std::size_t n_users, std::size_t n_items,
                          const std::vector<std::size_t>& hidden, std::size_t latent_dim,
                          const JovaHyperParams& hp, std::uint64_t seed) {
    if (n_users == 0 || n_items == 0) {
        throw std::invalid_argument("make_jova_model: empty matrix dimensions");
    }
    if (hp.alpha < 0 || hp.beta < 0 || hp.lambda < 0) {
        throw std::invalid_argument("make_jova_model: alpha, beta, lambda must be nonnegative");
    }
    JovaModel model;
    model.hp = hp;
    model.seed = seed;
    model.n_users = n_users;
    model.n_items = n_items;
    Rng base(seed);
    Rng user_rng = base.fork(kUserInitStream);
    Rng item_rng = base.fork(kItemInitStream);
    model.user_vae = make_vae(n_items, hidden, latent_dim, user_rng);
    model.item_vae = make_vae(n_users, hidden, latent_dim, item_rng);
    return model;
}

std::vector<BlockBatch> make_blocks(std::size_t n_users, std::size_t n_items,
                                    std::size_t block_users, std::size_t block_items, Rng& rng) {
    if (block_users == 0 || block_items == 0) {
        throw std::invalid_argument("make_blocks: block sizes must be positive");
    }
    std::vector<std::uint32_t> users(n_users), items(n_items);
    for (std::size_t i = 0; i < n_users; ++i) users[i] = static_cast<std::uint32_t>(i);
    for (std::size_t i = 0; i < n_items; ++i) items[i] = static_cast<std::uint32_t>(i);
    shuffle_indices(users, rng);
    shuffle_indices(items, rng);

    const std::size_t u_chunks = (n_users + block_users - 1) / block_users;
    const std::size_t i_chunks = (n_items + block_items - 1) / block_items;

    std::vector<std::uint32_t> order(u_chunks * i_chunks);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
    shuffle_indices(order, rng);

    std::vector<BlockBatch> blocks;
    blocks.reserve(order.size());
    for (std::uint32_t idx : order) {
        const std::size_t uc = idx / i_chunks;
        const std::size_t ic = idx % i_chunks;
        BlockBatch b;
        const std::size_t ub = uc * block_users;
        const std::size_t ue = std::min(ub + block_users, n_users);
        b.user_indices.assign(users.begin() + static_cast<std::ptrdiff_t>(ub),
                              users.begin() + static_cast<std::ptrdiff_t>(ue));
        const std::size_t ib = ic * block_items;
        const std::size_t ie = std::min(ib + block_items, n_items);
        b.item_indices.assign(items.begin() + static_cast<std::ptrdiff_t>(ib),
                              items.begin() + static_cast<std::ptrdiff_t>(ie));
        b.user_loss_items = b.item_indices;
        b.item_loss_users = b.user_indices;
        blocks.push_back(std::move(b));
    }
    return blocks;
}

std::vector<std::uint32_t> sample_negatives(const InteractionMatrix& data, std::uint32_t user,
                                            std::size_t count, Rng& rng) {
    const std::vector<std::uint32_t>& positives = data.items_of(user, Split::train);
    const std::size_t m = data.item_count();
    if (positives.size() >= m) return {};  // everything observed: no negatives exist

    std::vector<std::uint32_t> out;
    out.reserve(count);
    const std::size_t unobserved = m - positives.size();
    if (unobserved * 4 < m) {
        // dense user: materialize the complement and index into it
        std::vector<std::uint32_t> complement;
        complement.reserve(unobserved);
        std::size_t p = 0;
        for (std::uint32_t i = 0; i < m; ++i) {
            if (p < positives.size() && positives[p] == i) {
                ++p;
            } else {
                complement.push_back(i);
            }
        }
        for (std::size_t k = 0; k < count; ++k) {
            out.push_back(complement[rng.uniform_below(complement.size())]);
        }
    } else {
        for (std::size_t k = 0; k < count; ++k) {
            std::uint32_t candidate;
            do {
                candidate = static_cast<std::uint32_t>(rng.uniform_below(m));
            } while (std::binary_search(positives.begin(), positives.end(), candidate));
            out.push_back(candidate);
        }
    }
    return out;
}

BlockLossResult jova_loss(const JovaModel& model, const InteractionMatrix& data,
                          const BlockBatch& batch, std::uint64_t noise_seed) {
    return block_loss(model, data, batch, noise_seed, /*include_hinge=*/false);
}

BlockLossResult jova_hinge_loss(const JovaModel& model, const InteractionMatrix& data,
                                const BlockBatch& batch, std::uint64_t noise_seed) {
    if (model.hp.mode != JovaMode::jova_hinge) {
        throw std::logic_error("jova_hinge_loss: model mode is not jova_hinge");
    }
    return block_loss(model, data, batch, noise_seed, /*include_hinge=*/true);
}

double hinge_loss(const PredictionMatrix& predictions,
                  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& positives,
                  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& negatives,
                  double lambda) {
    if (positives.size() != negatives.size()) {
        throw std::invalid_argument("hinge_loss: positive/negative pair lists differ in length (" +
                                    std::to_string(positives.size()) + " vs " +
                                    std::to_string(negatives.size()) + ")");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < positives.size(); ++i) {
        const std::size_t pr = predictions.row_of(positives[i].first);
        const std::size_t nr = predictions.row_of(negatives[i].first);
        const double r_pos = predictions.scores(pr, positives[i].second);
        const double r_neg = predictions.scores(nr, negatives[i].second);
        total += std::max(0.0, r_neg - r_pos + lambda);
    }
    return total;
}

PredictionMatrix predict(const JovaModel& model, const InteractionMatrix& data,
                         const std::vector<std::uint32_t>& users) {
    if (model.n_users != data.user_count() || model.n_items != data.item_count()) {
        throw std::invalid_argument(
            "predict: model was trained for " + std::to_string(model.n_users) + "x" +
            std::to_string(model.n_items) + " but the matrix is " +
            std::to_string(data.user_count()) + "x" + std::to_string(data.item_count()));
    }
    if (users.empty()) throw std::invalid_argument("predict: no users requested");

    PredictionMatrix pred;
    pred.users = users;
    pred.scores = noiseless_reconstruction(model.user_vae, data.dense_rows(users, Split::train));

    if (model.hp.mode != JovaMode::user_vae_only) {
        std::vector<std::uint32_t> all_items(data.item_count());
        for (std::size_t i = 0; i < all_items.size(); ++i) {
            all_items[i] = static_cast<std::uint32_t>(i);
        }
        const DenseMatrix item_rec =
            noiseless_reconstruction(model.item_vae, data.dense_cols(all_items, Split::train));
        for (std::size_t r = 0; r < users.size(); ++r) {
            double* row = pred.scores.row_ptr(r);
            const std::uint32_t u = users[r];
            for (std::size_t i = 0; i < data.item_count(); ++i) {
                row[i] = 0.5 * (row[i] + item_rec(i, u));
            }
        }
    }
    return pred;
}

TrainResult train(JovaModel& model, const InteractionMatrix& data, const TrainConfig& cfg) {
    if (data.interactions.empty()) throw std::invalid_argument("train: empty interaction matrix");
    if (model.n_users != data.user_count() || model.n_items != data.item_count()) {
        throw std::invalid_argument("train: model dimensions do not match the dataset");
    }
    if (cfg.learning_rate < 0 || cfg.max_epochs == 0 || cfg.block_users == 0 ||
        cfg.block_items == 0) {
        throw std::invalid_argument("train: config values out of range");
    }

    const bool item_active = model.hp.mode != JovaMode::user_vae_only;
    const bool hinge_active = model.hp.mode == JovaMode::jova_hinge && model.hp.beta != 0.0;

    AdamState adam_user_enc = AdamState::for_network(model.user_vae.encoder, cfg.learning_rate);
    AdamState adam_user_dec = AdamState::for_network(model.user_vae.decoder, cfg.learning_rate);
    AdamState adam_item_enc = AdamState::for_network(model.item_vae.encoder, cfg.learning_rate);
    AdamState adam_item_dec = AdamState::for_network(model.item_vae.decoder, cfg.learning_rate);

    const std::vector<std::uint32_t> val_users = evaluable_users(data, Split::valid);
    EvalOptions val_opts;
    val_opts.ks = {10};
    val_opts.cold_start = false;
    val_opts.keep_user_details = false;

    TrainResult result;
    VaeModel best_user = model.user_vae;
    VaeModel best_item = model.item_vae;
    double best_val = -1.0;
    std::size_t epochs_since_best = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        Rng shuffle_rng(mix_seed(cfg.seed, epoch, kShuffleStream));
        std::vector<BlockBatch> blocks = make_blocks(
            data.user_count(), data.item_count(), cfg.block_users, cfg.block_items, shuffle_rng);

        std::vector<std::vector<std::uint32_t>> negatives;
        if (hinge_active) {
            Rng neg_rng(mix_seed(cfg.seed, epoch, kNegativeStream));
            negatives.resize(data.user_count());
            for (std::uint32_t u = 0; u < data.user_count(); ++u) {
                const std::size_t n_pos = data.items_of(u, Split::train).size();
                if (n_pos > 0) negatives[u] = sample_negatives(data, u, n_pos, neg_rng);
            }
            std::vector<char> in_block(data.item_count(), 0);
            for (BlockBatch& b : blocks) {
                for (std::uint32_t i : b.item_indices) in_block[i] = 1;
                for (std::uint32_t u : b.user_indices) {
                    const std::vector<std::uint32_t>& pos = data.items_of(u, Split::train);
                    if (negatives[u].empty()) continue;  // user has no unobserved items
                    for (std::size_t idx = 0; idx < pos.size(); ++idx) {
                        if (in_block[pos[idx]]) b.pairs.push_back({u, pos[idx], negatives[u][idx]});
                    }
                }
                for (std::uint32_t i : b.item_indices) in_block[i] = 0;
            }
        }

        double epoch_loss = 0.0;
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            const std::uint64_t noise_seed = mix_seed(cfg.seed, epoch, kBlockStreamBase + bi);
            const BlockLossResult res =
                block_loss(model, data, blocks[bi], noise_seed, hinge_active);
            if (!std::isfinite(res.total)) {
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", block " + std::to_string(bi));
            }
            epoch_loss += res.total;

            adam_step(model.user_vae.encoder, res.user_grads.encoder, adam_user_enc);
            adam_step(model.user_vae.decoder, res.user_grads.decoder, adam_user_dec);
            if (item_active && !blocks[bi].item_indices.empty()) {
                adam_step(model.item_vae.encoder, res.item_grads.encoder, adam_item_enc);
                adam_step(model.item_vae.decoder, res.item_grads.decoder, adam_item_dec);
            }
        }

        double val_ndcg = 0.0;
        if (!val_users.empty()) {
            const PredictionMatrix pred = predict(model, data, val_users);
            const EvalReport rep = evaluate(pred, data, Split::valid, val_opts);
            val_ndcg = rep.averages.at(10).ndcg;
        }

        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back({epoch, epoch_loss, val_ndcg, seconds});
        result.epochs_run = epoch;

        const bool improved = val_users.empty() || val_ndcg > best_val;
        if (improved) {
            best_val = val_ndcg;
            best_user = model.user_vae;
            best_item = model.item_vae;
            result.best_epoch = epoch;
            epochs_since_best = 0;
        } else if (++epochs_since_best >= cfg.patience) {
            break;
        }
    }

    model.user_vae = std::move(best_user);
    model.item_vae = std::move(best_item);
    result.best_val_ndcg10 = std::max(best_val, 0.0);
    return result;
}

EvalReport evaluate_model(const JovaModel& model, const InteractionMatrix& data, Split eval_split,
                          const EvalOptions& opts) {
    const std::vector<std::uint32_t> users = evaluable_users(data, eval_split);
    if (users.empty()) {
        throw std::runtime_error("evaluate: no users with positives in the requested split");
    }
    return evaluate(predict(model, data, users), data, eval_split, opts);
}

void save_model(const std::string& path, const JovaModel& model) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    io::write_magic(out, kModelMagic);
    io::write_u8(out, static_cast<std::uint8_t>(model.hp.mode));
    io::write_f64(out, model.hp.alpha);
    io::write_f64(out, model.hp.beta);
    io::write_f64(out, model.hp.lambda);
    io::write_u64(out, model.seed);
    io::write_u64(out, model.n_users);
    io::write_u64(out, model.n_items);
    io::write_u64(out, model.user_vae.latent_dim);
    write_mlp_body(out, model.user_vae.encoder);
    write_mlp_body(out, model.user_vae.decoder);
    write_mlp_body(out, model.item_vae.encoder);
    write_mlp_body(out, model.item_vae.decoder);
    if (!out) throw std::runtime_error("write failed: " + path);
}

JovaModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    io::expect_magic(in, kModelMagic, "model file");
    JovaModel model;
    const std::uint8_t mode = io::read_u8(in);
    if (mode > 2) throw std::runtime_error("model file: unknown mode tag");
    model.hp.mode = static_cast<JovaMode>(mode);
    model.hp.alpha = io::read_f64(in);
    model.hp.beta = io::read_f64(in);
    model.hp.lambda = io::read_f64(in);
    model.seed = io::read_u64(in);
    model.n_users = io::read_u64(in);
    model.n_items = io::read_u64(in);
    const std::uint64_t latent = io::read_u64(in);
    model.user_vae.latent_dim = latent;
    model.user_vae.encoder = read_mlp_body(in);
    model.user_vae.decoder = read_mlp_body(in);
    model.item_vae.latent_dim = latent;
    model.item_vae.encoder = read_mlp_body(in);
    model.item_vae.decoder = read_mlp_body(in);
    model.user_vae.validate();
    model.item_vae.validate();
    if (model.user_vae.input_width() != model.n_items ||
        model.item_vae.input_width() != model.n_users) {
        throw std::runtime_error("model file: stored dimensions are inconsistent");
    }
    return model;
}

}  // namespace jova
