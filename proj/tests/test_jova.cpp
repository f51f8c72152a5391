#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <unistd.h>

#include "doctest.h"
#include "jova/jova.hpp"
#include "test_util.hpp"

using namespace jova;
using namespace jova::testutil;
namespace fs = std::filesystem;

namespace {

JovaModel small_model(const InteractionMatrix& data, JovaMode mode, double beta = 0.01,
                      std::uint64_t seed = 5) {
    JovaHyperParams hp;
    hp.mode = mode;
    hp.beta = beta;
    return make_jova_model(data.user_count(), data.item_count(), {4}, 2, hp, seed);
}

BlockBatch full_batch(const InteractionMatrix& data) {
    BlockBatch b;
    for (std::uint32_t u = 0; u < data.user_count(); ++u) b.user_indices.push_back(u);
    for (std::uint32_t i = 0; i < data.item_count(); ++i) b.item_indices.push_back(i);
    return b;
}

void attach_pairs(BlockBatch& b, const InteractionMatrix& data, std::uint64_t seed) {
    Rng rng(seed);
    for (std::uint32_t u : b.user_indices) {
        const auto& pos = data.items_of(u, Split::train);
        if (pos.empty()) continue;
        const std::vector<std::uint32_t> negs = sample_negatives(data, u, pos.size(), rng);
        if (negs.empty()) continue;
        for (std::size_t i = 0; i < pos.size(); ++i) b.pairs.push_back({u, pos[i], negs[i]});
    }
}

std::vector<double> block_gradient_values(const BlockLossResult& res) {
    std::vector<double> out = vae_gradient_values(res.user_grads);
    const std::vector<double> item = vae_gradient_values(res.item_grads);
    out.insert(out.end(), item.begin(), item.end());
    return out;
}

// popularity baseline: items ranked by train interaction count
double popularity_ndcg10(const InteractionMatrix& data, Split eval_split) {
    std::vector<std::pair<std::size_t, std::uint32_t>> by_count;
    for (std::uint32_t i = 0; i < data.item_count(); ++i) {
        by_count.push_back({data.users_of(i, Split::train).size(), i});
    }
    std::sort(by_count.begin(), by_count.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });

    double sum = 0.0;
    std::size_t n = 0;
    for (std::uint32_t u = 0; u < data.user_count(); ++u) {
        const auto& relevant = data.items_of(u, eval_split);
        if (relevant.empty()) continue;
        std::vector<std::uint32_t> exclude = data.items_of(u, Split::train);
        if (eval_split == Split::test) {
            const auto& valid = data.items_of(u, Split::valid);
            exclude.insert(exclude.end(), valid.begin(), valid.end());
            std::sort(exclude.begin(), exclude.end());
        }
        std::vector<std::uint32_t> ranked;
        for (const auto& [count, item] : by_count) {
            if (ranked.size() == 10) break;
            if (!std::binary_search(exclude.begin(), exclude.end(), item)) {
                ranked.push_back(item);
            }
        }
        sum += ndcg_at_k(ranked, relevant, 10);
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace

TEST_CASE("predict: ensemble is the average of the two reconstructions") {
    Rng rng(20);
    const DenseMatrix dense = random_binary_matrix(rng, 8, 6, 0.5);
    const InteractionMatrix data = dataset_from_dense(dense, 2);

    JovaModel model = small_model(data, JovaMode::jova_hinge);
    std::vector<std::uint32_t> users = {0, 2, 5};
    const PredictionMatrix avg = predict(model, data, users);

    JovaModel user_only = model;
    user_only.hp.mode = JovaMode::user_vae_only;
    const PredictionMatrix user_pred = predict(user_only, data, users);

    std::vector<std::uint32_t> all_items(data.item_count());
    for (std::size_t i = 0; i < all_items.size(); ++i) all_items[i] = static_cast<std::uint32_t>(i);
    const auto [mu, lv] = encode(model.item_vae, data.dense_cols(all_items, Split::train));
    const DenseMatrix item_rec = forward(model.item_vae.decoder, mu);

    for (std::size_t r = 0; r < users.size(); ++r) {
        for (std::size_t i = 0; i < data.item_count(); ++i) {
            const double expected = 0.5 * (user_pred.scores(r, i) + item_rec(i, users[r]));
            CHECK(avg.scores(r, i) == doctest::Approx(expected).epsilon(1e-14));
            CHECK(avg.scores(r, i) >= 0.0);
            CHECK(avg.scores(r, i) <= 1.0);
        }
    }
}

TEST_CASE("predict: user_vae_only output is the user reconstruction alone") {
    Rng rng(21);
    const DenseMatrix dense = random_binary_matrix(rng, 6, 5, 0.5);
    const InteractionMatrix data = dataset_from_dense(dense, 3);
    JovaModel model = small_model(data, JovaMode::user_vae_only);

    std::vector<std::uint32_t> users = {1, 4};
    const PredictionMatrix pred = predict(model, data, users);
    const auto [mu, lv] = encode(model.user_vae, data.dense_rows(users, Split::train));
    const DenseMatrix rec = forward(model.user_vae.decoder, mu);
    CHECK(pred.scores.data == rec.data);
}

TEST_CASE("predict: bounds hold for arbitrary parameter magnitudes") {
    Rng rng(22);
    const DenseMatrix dense = random_binary_matrix(rng, 7, 5, 0.5);
    const InteractionMatrix data = dataset_from_dense(dense, 4);
    JovaModel model = small_model(data, JovaMode::jova);
    for (Layer& l : model.user_vae.decoder.layers) {
        for (double& w : l.weight.data) w *= 25.0;
    }
    for (Layer& l : model.item_vae.decoder.layers) {
        for (double& w : l.weight.data) w *= -25.0;
    }
    std::vector<std::uint32_t> users = {0, 1, 2, 3, 4, 5, 6};
    const PredictionMatrix pred = predict(model, data, users);
    for (double v : pred.scores.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("predict: dimension mismatch is a hard error") {
    Rng rng(23);
    const InteractionMatrix data = dataset_from_dense(random_binary_matrix(rng, 6, 5, 0.6), 5);
    const InteractionMatrix other = dataset_from_dense(random_binary_matrix(rng, 7, 5, 0.6), 5);
    JovaModel model = small_model(data, JovaMode::jova);
    CHECK_THROWS_AS(predict(model, other, {0}), std::invalid_argument);
}

TEST_CASE("hinge_loss: margin arithmetic") {
    PredictionMatrix pred;
    pred.users = {0};
    pred.scores = DenseMatrix(1, 2);

    auto pair_loss = [&](double r_pos, double r_neg, double lambda) {
        pred.scores(0, 0) = r_pos;
        pred.scores(0, 1) = r_neg;
        return hinge_loss(pred, {{0, 0}}, {{0, 1}}, lambda);
    };
    CHECK(pair_loss(0.9, 0.2, 0.15) == doctest::Approx(0.0));
    CHECK(pair_loss(0.4, 0.4, 0.15) == doctest::Approx(0.15));
    CHECK(pair_loss(0.3, 0.6, 0.15) == doctest::Approx(0.45));
}

TEST_CASE("hinge_loss: pair list length mismatch is a hard error") {
    PredictionMatrix pred;
    pred.users = {0};
    pred.scores = DenseMatrix(1, 3, 0.5);
    CHECK_THROWS_AS(hinge_loss(pred, {{0, 0}, {0, 1}}, {{0, 2}}, 0.15), std::invalid_argument);
}

TEST_CASE("hinge_loss: raising the positive score never increases the loss") {
    Rng rng(24);
    PredictionMatrix pred;
    pred.users = {0};
    pred.scores = DenseMatrix(1, 2);
    for (int trial = 0; trial < 200; ++trial) {
        const double r_neg = rng.uniform();
        const double lambda = 0.3 * rng.uniform();
        double prev = std::numeric_limits<double>::infinity();
        for (double r_pos : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            pred.scores(0, 0) = r_pos;
            pred.scores(0, 1) = r_neg;
            const double l = hinge_loss(pred, {{0, 0}}, {{0, 1}}, lambda);
            CHECK(l <= prev);
            prev = l;
        }
    }
}

TEST_CASE("jova_loss: zero weights give exactly 2 * cells * log 2") {
    // 4 users x 3 items, every cell present on both sides
    DenseMatrix dense(4, 3, 0.0);
    Rng rng(25);
    for (double& v : dense.data) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
    dense(0, 0) = 1.0;  // make sure the matrix is nonempty
    const InteractionMatrix data = dataset_from_dense(dense, 999);

    JovaModel model = small_model(data, JovaMode::jova);
    zero_parameters(model.user_vae);
    zero_parameters(model.item_vae);

    BlockBatch batch = full_batch(data);
    const BlockLossResult res = jova_loss(model, data, batch, 7);
    const double expected = 24.0 * std::log(2.0);
    CHECK(std::fabs(res.total - expected) < 1e-12);
    CHECK(res.total == doctest::Approx(16.6355).epsilon(1e-4));
}

TEST_CASE("jova_loss: empty item set reduces to the user-side sum") {
    Rng rng(26);
    const InteractionMatrix data = dataset_from_dense(random_binary_matrix(rng, 5, 4, 0.6), 6);
    JovaModel model = small_model(data, JovaMode::jova);

    BlockBatch batch;
    for (std::uint32_t u = 0; u < data.user_count(); ++u) batch.user_indices.push_back(u);
    const BlockLossResult res = jova_loss(model, data, batch, 8);
    CHECK(res.item_vae == 0.0);
    CHECK(res.total == res.user_vae);
    CHECK(res.total > 0.0);
}

TEST_CASE("jova_loss: gradients match central finite differences") {
    Rng rng(27);
    const InteractionMatrix data = dataset_from_dense(random_binary_matrix(rng, 5, 4, 0.5), 9);
    JovaModel model = small_model(data, JovaMode::jova, 0.0, 11);
    BlockBatch batch = full_batch(data);
    const std::uint64_t noise_seed = 1234;

    const BlockLossResult res = jova_loss(model, data, batch, noise_seed);
    const std::vector<double> analytic = block_gradient_values(res);
    auto loss_at = [&]() { return jova_loss(model, data, batch, noise_seed).total; };
    const std::vector<double> numeric = central_differences(jova_parameters(model), loss_at, 1e-5);
    CHECK(max_rel_error(analytic, numeric) < 1e-4);
}

TEST_CASE("jova_hinge_loss: requires jova_hinge mode") {
    Rng rng(28);
    const InteractionMatrix data = dataset_from_dense(random_binary_matrix(rng, 4, 4, 0.5), 10);
    JovaModel model = small_model(data, JovaMode::jova);
    BlockBatch batch = full_batch(data);
    CHECK_THROWS_AS(jova_hinge_loss(model, data, batch, 1), std::logic_error);
}

TEST_CASE("jova_hinge_loss: beta=0 is bit-equal to jova_loss") {
    Rng rng(29);
    const InteractionMatrix data = dataset_from_dense(random_binary_matrix(rng, 6, 5, 0.5), 11);
    JovaModel model = small_model(data, JovaMode::jova_hinge, 0.0);
    BlockBatch batch = full_batch(data);
    attach_pairs(batch, data, 55);
    REQUIRE(!batch.pairs.empty());

    const BlockLossResult with_hinge = jova_hinge_loss(model, data, batch, 77);
    const BlockLossResult without = jova_loss(model, data, batch, 77);
    CHECK(with_hinge.total == without.total);
    CHECK(block_gradient_values(with_hinge) == block_gradient_values(without));
}

TEST_CASE("jova_hinge_loss: margins exactly on the kink add no gradient") {
    // zero weights make every score 0.5; with lambda=0 each margin sits on
    // the kink, where the chosen subgradient is zero
    Rng rng(30);
    const InteractionMatrix data = dataset_from_dense(random_binary_matrix(rng, 5, 4, 0.6), 12);
    JovaModel model = small_model(data, JovaMode::jova_hinge, 0.5);
    model.hp.lambda = 0.0;
    zero_parameters(model.user_vae);
    zero_parameters(model.item_vae);

    BlockBatch batch = full_batch(data);
    attach_pairs(batch, data, 56);
    REQUIRE(!batch.pairs.empty());

    const BlockLossResult hinge_res = jova_hinge_loss(model, data, batch, 78);
    CHECK(hinge_res.hinge == 0.0);
    const BlockLossResult plain = jova_loss(model, data, batch, 78);
    CHECK(block_gradient_values(hinge_res) == block_gradient_values(plain));
}

TEST_CASE("jova_hinge_loss: gradients match central finite differences") {
    Rng rng(31);
    const InteractionMatrix data = dataset_from_dense(random_binary_matrix(rng, 5, 4, 0.5), 13);
    JovaModel model = small_model(data, JovaMode::jova_hinge, 0.05, 17);
    BlockBatch batch = full_batch(data);
    attach_pairs(batch, data, 57);
    REQUIRE(!batch.pairs.empty());
    const std::uint64_t noise_seed = 4321;

    const BlockLossResult res = jova_hinge_loss(model, data, batch, noise_seed);
    const std::vector<double> analytic = block_gradient_values(res);
    auto loss_at = [&]() { return jova_hinge_loss(model, data, batch, noise_seed).total; };
    const std::vector<double> numeric = central_differences(jova_parameters(model), loss_at, 1e-5);
    CHECK(max_rel_error(analytic, numeric) < 1e-4);
}

TEST_CASE("loss decomposition: hinge variant minus plain equals beta * hinge") {
    Rng meta(32);
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint64_t seed = mix_seed(9000, trial);
        Rng rng(seed);
        const std::size_t n_users = 4 + rng.uniform_below(5);
        const std::size_t n_items = 4 + rng.uniform_below(5);
        const InteractionMatrix data =
            dataset_from_dense(random_binary_matrix(rng, n_users, n_items, 0.5), seed);

        JovaHyperParams hp;
        hp.mode = JovaMode::jova_hinge;
        hp.beta = 0.001 + rng.uniform();
        hp.lambda = 0.3 * rng.uniform();
        JovaModel model =
            make_jova_model(data.user_count(), data.item_count(), {3}, 2, hp, seed + 1);

        BlockBatch batch = full_batch(data);
        attach_pairs(batch, data, seed + 2);
        const std::uint64_t noise_seed = seed + 3;

        const BlockLossResult with_hinge = jova_hinge_loss(model, data, batch, noise_seed);
        const BlockLossResult without = jova_loss(model, data, batch, noise_seed);

        // standalone hinge on the same scores, through the public surface
        PredictionMatrix pred;
        pred.users = batch.user_indices;
        pred.scores = DenseMatrix(data.user_count(), data.item_count(), 0.0);
        std::vector<std::pair<std::uint32_t, std::uint32_t>> pos, neg;
        for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
            const HingePair& p = batch.pairs[i];
            pred.scores(pred.row_of(p.user), p.pos_item) = with_hinge.pos_scores[i];
            pred.scores(pred.row_of(p.user), p.neg_item) = with_hinge.neg_scores[i];
            pos.push_back({p.user, p.pos_item});
            neg.push_back({p.user, p.neg_item});
        }
        const double h = hinge_loss(pred, pos, neg, hp.lambda);

        const double lhs = with_hinge.total - without.total;
        const double rhs = hp.beta * h;
        CHECK(std::fabs(lhs - rhs) <= 1e-10 * std::max(1.0, std::fabs(with_hinge.total)));
    }
}

TEST_CASE("sample_negatives: forced draw, membership, uniformity") {
    // user 0 interacted with every item but one
    std::vector<RawRating> inter;
    for (int i = 0; i + 1 < 12; ++i) inter.push_back({"u0", "i" + std::to_string(i), 1.0});
    for (int i = 0; i < 12; ++i) inter.push_back({"other", "i" + std::to_string(i), 1.0});
    Rng split_rng(33);
    const InteractionMatrix data = split(inter, 1.0, 0.0, 0.0, split_rng);

    const std::uint32_t u0 = data.user_index.at("u0");
    const auto& pos = data.items_of(u0, Split::train);
    REQUIRE(pos.size() == 11);
    std::uint32_t the_missing = 0;
    for (std::uint32_t i = 0; i < 12; ++i) {
        if (!std::binary_search(pos.begin(), pos.end(), i)) the_missing = i;
    }
    Rng rng(34);
    for (int t = 0; t < 50; ++t) {
        const auto negs = sample_negatives(data, u0, 1, rng);
        REQUIRE(negs.size() == 1);
        CHECK(negs[0] == the_missing);
    }

    // user with everything observed: no negatives, no error
    const std::uint32_t other = data.user_index.at("other");
    CHECK(sample_negatives(data, other, 1, rng).empty());
}

TEST_CASE("sample_negatives: uniform over the unobserved set") {
    std::vector<RawRating> inter;
    for (int i = 0; i < 4; ++i) inter.push_back({"u", "obs" + std::to_string(i), 1.0});
    for (int i = 0; i < 4; ++i) inter.push_back({"filler", "un" + std::to_string(i), 1.0});
    for (int i = 0; i < 4; ++i) inter.push_back({"filler", "obs" + std::to_string(i), 1.0});
    Rng split_rng(35);
    const InteractionMatrix data = split(inter, 1.0, 0.0, 0.0, split_rng);
    const std::uint32_t u = data.user_index.at("u");
    REQUIRE(data.items_of(u, Split::train).size() == 4);
    REQUIRE(data.item_count() == 8);

    Rng rng(36);
    std::vector<std::size_t> counts(data.item_count(), 0);
    const std::size_t draws = 100000;
    const auto negs = sample_negatives(data, u, draws, rng);
    REQUIRE(negs.size() == draws);
    for (std::uint32_t j : negs) {
        CHECK(data.dense_rows({u}, Split::train)(0, j) == 0.0);
        ++counts[j];
    }
    for (std::uint32_t i = 0; i < data.item_count(); ++i) {
        if (counts[i] == 0) continue;
        const double freq = static_cast<double>(counts[i]) / static_cast<double>(draws);
        CHECK(freq > 0.24);
        CHECK(freq < 0.26);
    }
}

TEST_CASE("make_blocks: single block when everything fits") {
    Rng rng(37);
    const auto blocks = make_blocks(10, 10, 1500, 1500, rng);
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].user_indices.size() == 10);
    CHECK(blocks[0].item_indices.size() == 10);
}

TEST_CASE("make_blocks: 3000x3000 with block 1500 gives 4 blocks, each user in 2") {
    Rng rng(38);
    const auto blocks = make_blocks(3000, 3000, 1500, 1500, rng);
    REQUIRE(blocks.size() == 4);
    std::vector<int> appearances(3000, 0);
    for (const BlockBatch& b : blocks) {
        CHECK(b.user_indices.size() == 1500);
        CHECK(b.item_indices.size() == 1500);
        for (std::uint32_t u : b.user_indices) ++appearances[u];
    }
    for (int a : appearances) CHECK(a == 2);
}

TEST_CASE("make_blocks: charged cells cover the matrix exactly once per epoch") {
    Rng rng(39);
    const std::size_t n = 30, m = 27;
    const auto blocks = make_blocks(n, m, 10, 10, rng);
    std::vector<int> user_side(n * m, 0), item_side(n * m, 0);
    for (const BlockBatch& b : blocks) {
        REQUIRE(b.user_loss_items.has_value());
        REQUIRE(b.item_loss_users.has_value());
        for (std::uint32_t u : b.user_indices) {
            for (std::uint32_t i : *b.user_loss_items) ++user_side[u * m + i];
        }
        for (std::uint32_t i : b.item_indices) {
            for (std::uint32_t u : *b.item_loss_users) ++item_side[u * m + i];
        }
    }
    for (int c : user_side) CHECK(c == 1);
    for (int c : item_side) CHECK(c == 1);
}

TEST_CASE("make_blocks: duplicate-free indices, block sizes respected") {
    Rng rng(40);
    const auto blocks = make_blocks(23, 17, 7, 5, rng);
    for (const BlockBatch& b : blocks) {
        CHECK(b.user_indices.size() <= 7);
        CHECK(b.item_indices.size() <= 5);
        auto users = b.user_indices;
        std::sort(users.begin(), users.end());
        CHECK(std::adjacent_find(users.begin(), users.end()) == users.end());
    }
}

TEST_CASE("train: lr=0 leaves parameters bit-identical") {
    Rng rng(41);
    const InteractionMatrix data = dataset_from_dense(random_binary_matrix(rng, 10, 8, 0.5), 14);
    JovaModel model = small_model(data, JovaMode::jova_hinge);
    const JovaModel before = model;
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.max_epochs = 3;
    cfg.seed = 7;
    train(model, data, cfg);
    for (std::size_t l = 0; l < before.user_vae.encoder.layers.size(); ++l) {
        CHECK(model.user_vae.encoder.layers[l].weight.data ==
              before.user_vae.encoder.layers[l].weight.data);
    }
    for (std::size_t l = 0; l < before.item_vae.decoder.layers.size(); ++l) {
        CHECK(model.item_vae.decoder.layers[l].weight.data ==
              before.item_vae.decoder.layers[l].weight.data);
    }
}

TEST_CASE("train: same seed and config reproduce the log and parameters") {
    Rng rng(42);
    const InteractionMatrix data = dataset_from_dense(random_binary_matrix(rng, 12, 9, 0.5), 15);
    TrainConfig cfg;
    cfg.max_epochs = 3;
    cfg.seed = 11;
    cfg.block_users = 5;  // force multiple blocks
    cfg.block_items = 4;

    JovaModel m1 = small_model(data, JovaMode::jova_hinge);
    JovaModel m2 = small_model(data, JovaMode::jova_hinge);
    const TrainResult r1 = train(m1, data, cfg);
    const TrainResult r2 = train(m2, data, cfg);

    REQUIRE(r1.log.size() == r2.log.size());
    for (std::size_t e = 0; e < r1.log.size(); ++e) {
        CHECK(r1.log[e].train_loss == r2.log[e].train_loss);
        CHECK(r1.log[e].val_ndcg10 == r2.log[e].val_ndcg10);
    }
    for (std::size_t l = 0; l < m1.user_vae.encoder.layers.size(); ++l) {
        CHECK(m1.user_vae.encoder.layers[l].weight.data ==
              m2.user_vae.encoder.layers[l].weight.data);
    }
}

TEST_CASE("train: jova and jova_hinge with beta=0 take identical steps") {
    Rng rng(43);
    const InteractionMatrix data = dataset_from_dense(random_binary_matrix(rng, 12, 9, 0.5), 16);
    TrainConfig cfg;
    cfg.max_epochs = 2;
    cfg.seed = 13;

    JovaModel plain = small_model(data, JovaMode::jova, 0.123);  // beta must be irrelevant
    JovaModel hinged = small_model(data, JovaMode::jova_hinge, 0.0);
    train(plain, data, cfg);
    train(hinged, data, cfg);
    for (std::size_t l = 0; l < plain.user_vae.encoder.layers.size(); ++l) {
        CHECK(plain.user_vae.encoder.layers[l].weight.data ==
              hinged.user_vae.encoder.layers[l].weight.data);
    }
    for (std::size_t l = 0; l < plain.item_vae.encoder.layers.size(); ++l) {
        CHECK(plain.item_vae.encoder.layers[l].weight.data ==
              hinged.item_vae.encoder.layers[l].weight.data);
    }
}

TEST_CASE("train: non-finite loss aborts with an epoch/block diagnostic") {
    Rng rng(44);
    const InteractionMatrix data = dataset_from_dense(random_binary_matrix(rng, 6, 5, 0.6), 17);
    JovaModel model = small_model(data, JovaMode::jova);
    model.user_vae.encoder.layers[0].weight(0, 0) = std::numeric_limits<double>::quiet_NaN();
    TrainConfig cfg;
    cfg.max_epochs = 1;
    CHECK_THROWS_WITH_AS(train(model, data, cfg), doctest::Contains("epoch"), std::runtime_error);
}

TEST_CASE("train: learned model beats the popularity baseline on community data") {
    const InteractionMatrix data = community_dataset(40, 20, 2, 7, 2024);
    JovaHyperParams hp;
    hp.mode = JovaMode::jova_hinge;
    JovaModel model = make_jova_model(data.user_count(), data.item_count(), {32}, 8, hp, 3);
    TrainConfig cfg;
    cfg.max_epochs = 60;
    cfg.patience = 15;
    cfg.seed = 3;
    const TrainResult result = train(model, data, cfg);

    const double baseline = popularity_ndcg10(data, Split::valid);
    CHECK(result.best_val_ndcg10 > baseline);
}

TEST_CASE("model file round-trips and reruns are byte-identical") {
    Rng rng(45);
    const InteractionMatrix data = dataset_from_dense(random_binary_matrix(rng, 8, 6, 0.5), 18);
    JovaModel model = small_model(data, JovaMode::jova_hinge, 0.02, 21);

    const fs::path dir = fs::temp_directory_path() /
                         ("jova_model_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::string p1 = (dir / "m1.bin").string();
    const std::string p2 = (dir / "m2.bin").string();
    save_model(p1, model);
    save_model(p2, model);

    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);

    const JovaModel loaded = load_model(p1);
    CHECK(loaded.seed == model.seed);
    CHECK(loaded.hp.beta == model.hp.beta);
    CHECK(loaded.hp.mode == model.hp.mode);
    CHECK(loaded.n_users == model.n_users);

    std::vector<std::uint32_t> users = {0, 1};
    CHECK(predict(loaded, data, users).scores.data == predict(model, data, users).scores.data);
}
