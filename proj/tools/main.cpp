// Batch CLI: prepare -> train -> evaluate -> recommend, stages communicating
// through files only.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "jova/config.hpp"
#include "jova/data.hpp"
#include "jova/jova.hpp"

namespace fs = std::filesystem;
using jova::RunConfig;

namespace {

std::string with_commas(std::size_t v) {
    std::string s = std::to_string(v);
    for (std::size_t pos = s.size(); pos > 3;) {
        pos -= 3;
        s.insert(pos, ",");
    }
    return s;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

void echo_resolved_config(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    jova::save_config((fs::path(cfg.out_dir) / "resolved_config.json").string(), cfg);
}

std::string dataset_path(const RunConfig& cfg) {
    return cfg.dataset_path.empty() ? (fs::path(cfg.out_dir) / "dataset.bin").string()
                                    : cfg.dataset_path;
}

std::string model_path(const RunConfig& cfg) {
    return cfg.model_path.empty() ? (fs::path(cfg.out_dir) / "model.bin").string()
                                  : cfg.model_path;
}

jova::Split parse_split(const std::string& name) {
    if (name == "test") return jova::Split::test;
    if (name == "valid" || name == "validation") return jova::Split::valid;
    throw std::runtime_error("eval_split must be 'test' or 'valid', got '" + name + "'");
}

jova::EvalOptions eval_options(const RunConfig& cfg) {
    jova::EvalOptions opts;
    opts.ks = cfg.ks;
    opts.paper_literal_idcg = cfg.paper_literal_idcg;
    opts.cold_start = cfg.cold_start;
    opts.cold_start_grid = cfg.cold_start_grid;
    return opts;
}

int cmd_prepare(const RunConfig& cfg) {
    if (cfg.input_path.empty()) throw std::runtime_error("prepare: input_path is required");

    jova::IngestOptions opts;
    opts.format = jova::parse_file_format(cfg.input_format);
    opts.has_header = cfg.has_header;
    opts.user_col = cfg.user_col;
    opts.item_col = cfg.item_col;
    opts.rating_col = cfg.rating_col;
    opts.max_malformed_fraction = cfg.max_malformed_fraction;

    const jova::IngestResult ingested = jova::ingest(cfg.input_path, opts);
    if (ingested.malformed > 0) {
        std::cerr << "warning: " << ingested.malformed << " malformed lines skipped\n";
    }

    std::vector<jova::RawRating> positives =
        jova::binarize(ingested.ratings, cfg.binarize_threshold);
    positives = jova::filter_min_interactions(positives, cfg.min_user_interactions);

    jova::Rng rng(cfg.seed);
    jova::InteractionMatrix matrix =
        jova::split(positives, cfg.train_ratio, cfg.valid_ratio, cfg.test_ratio, rng);
    matrix.binarize_threshold = cfg.binarize_threshold;
    matrix.min_user_interactions = cfg.min_user_interactions;

    echo_resolved_config(cfg);
    const std::string out_path = dataset_path(cfg);
    jova::save_dataset(out_path, matrix);

    const jova::DatasetStats s = jova::stats(matrix);
    char sparsity[32];
    std::snprintf(sparsity, sizeof(sparsity), "%.2f%%", s.sparsity * 100.0);
    std::size_t n_train = 0, n_valid = 0, n_test = 0;
    for (const jova::Interaction& it : matrix.interactions) {
        if (it.split == jova::Split::train) ++n_train;
        else if (it.split == jova::Split::valid) ++n_valid;
        else ++n_test;
    }
    std::cout << "users\t" << with_commas(s.users) << "\n"
              << "items\t" << with_commas(s.items) << "\n"
              << "interactions\t" << with_commas(s.interactions) << "\n"
              << "sparsity\t" << sparsity << "\n"
              << "split\t" << n_train << "/" << n_valid << "/" << n_test << "\n"
              << "dataset\t" << out_path << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    const jova::InteractionMatrix data = jova::load_dataset(dataset_path(cfg));

    jova::JovaHyperParams hp;
    hp.alpha = cfg.alpha;
    hp.beta = cfg.beta;
    hp.lambda = cfg.lambda;
    hp.mode = jova::parse_jova_mode(cfg.mode);

    jova::JovaModel model = jova::make_jova_model(data.user_count(), data.item_count(),
                                                  cfg.hidden, cfg.latent_dim, hp, cfg.seed);
    jova::TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.max_epochs = cfg.epochs;
    tc.patience = cfg.patience;
    tc.seed = cfg.seed;
    tc.block_users = cfg.block_users;
    tc.block_items = cfg.block_items;

    const jova::TrainResult result = jova::train(model, data, tc);

    echo_resolved_config(cfg);
    jova::save_model(model_path(cfg), model);

    std::ostringstream log;
    for (const jova::EpochRecord& rec : result.log) {
        nlohmann::ordered_json j;
        j["epoch"] = rec.epoch;
        j["train_loss"] = rec.train_loss;
        j["val_ndcg10"] = rec.val_ndcg10;
        j["seconds"] = rec.seconds;
        log << j.dump() << "\n";
    }
    write_text_file((fs::path(cfg.out_dir) / "training_log.jsonl").string(), log.str());

    std::cout << "epochs_run\t" << result.epochs_run << "\n"
              << "best_epoch\t" << result.best_epoch << "\n"
              << "best_val_ndcg10\t" << result.best_val_ndcg10 << "\n"
              << "model\t" << model_path(cfg) << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, bool per_user) {
    const jova::InteractionMatrix data = jova::load_dataset(dataset_path(cfg));
    const jova::JovaModel model = jova::load_model(model_path(cfg));

    const jova::EvalReport report =
        jova::evaluate_model(model, data, parse_split(cfg.eval_split), eval_options(cfg));

    echo_resolved_config(cfg);
    write_text_file((fs::path(cfg.out_dir) / "report.json").string(),
                    jova::report_to_json(report));
    const std::string table = jova::report_to_table(report);
    write_text_file((fs::path(cfg.out_dir) / "report.txt").string(), table);
    if (per_user) {
        write_text_file((fs::path(cfg.out_dir) / "per_user.csv").string(),
                        jova::report_user_details_csv(report));
    }
    std::cout << table;
    return 0;
}

int cmd_recommend(const RunConfig& cfg, const std::vector<std::string>& user_ids, std::size_t k,
                  const std::string& out_file) {
    const jova::InteractionMatrix data = jova::load_dataset(dataset_path(cfg));
    const jova::JovaModel model = jova::load_model(model_path(cfg));

    std::vector<std::uint32_t> users;
    users.reserve(user_ids.size());
    for (const std::string& id : user_ids) {
        const auto it = data.user_index.find(id);
        if (it == data.user_index.end()) {
            throw std::runtime_error("recommend: unknown user id '" + id + "'");
        }
        users.push_back(it->second);
    }
    if (users.empty()) throw std::runtime_error("recommend: no user ids given");

    echo_resolved_config(cfg);
    const jova::PredictionMatrix pred = jova::predict(model, data, users);

    std::ostringstream out;
    out << "user\trank\titem\tscore\n";
    for (std::uint32_t u : users) {
        std::vector<std::uint32_t> exclude;
        const auto& train_items = data.items_of(u, jova::Split::train);
        const auto& valid_items = data.items_of(u, jova::Split::valid);
        std::merge(train_items.begin(), train_items.end(), valid_items.begin(), valid_items.end(),
                   std::back_inserter(exclude));
        const jova::RankedList ranked = jova::top_k(pred, u, k, exclude);
        for (std::size_t r = 0; r < ranked.items.size(); ++r) {
            char score[32];
            std::snprintf(score, sizeof(score), "%.6f", ranked.scores[r]);
            out << data.user_ids[u] << "\t" << (r + 1) << "\t" << data.item_ids[ranked.items[r]]
                << "\t" << score << "\n";
        }
    }
    if (out_file.empty()) {
        std::cout << out.str();
    } else {
        write_text_file(out_file, out.str());
        std::cout << "recommendations\t" << out_file << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    // Load --config first so flags can override file values.
    RunConfig cfg;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                cfg = jova::load_config(argv[i + 1]);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            }
            break;
        }
    }

    CLI::App app{"jova: two-sided variational autoencoder recommender"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> rec_users;
    std::size_t rec_k = 10;
    std::string rec_out;
    bool per_user = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (loaded before flags)");
        cmd->add_option("--seed", cfg.seed, "RNG seed");
        cmd->add_option("--out", cfg.out_dir, "output directory");
        cmd->add_option("--dataset", cfg.dataset_path, "prepared dataset file");
    };

    CLI::App* prepare = app.add_subcommand("prepare", "ingest, binarize, filter, split");
    add_common(prepare);
    prepare->add_option("--input", cfg.input_path, "raw ratings file");
    prepare->add_option("--format", cfg.input_format, "csv | tsv | movielens-dat");
    prepare->add_flag("--header", cfg.has_header, "input has a header line");
    prepare->add_option("--user-col", cfg.user_col, "user column position");
    prepare->add_option("--item-col", cfg.item_col, "item column position");
    prepare->add_option("--rating-col", cfg.rating_col, "rating column (-1 = implicit)");
    prepare->add_option("--threshold", cfg.binarize_threshold, "positive rating threshold");
    prepare->add_option("--min-interactions", cfg.min_user_interactions,
                        "minimum positives per user");

    CLI::App* train_cmd = app.add_subcommand("train", "train on a prepared dataset");
    add_common(train_cmd);
    train_cmd->add_option("--model", cfg.model_path, "model file to write");
    train_cmd->add_option("--mode", cfg.mode, "jova | jova_hinge | user_vae_only");
    train_cmd->add_option("--latent", cfg.latent_dim, "latent dimension");
    train_cmd->add_option("--hidden", cfg.hidden, "hidden layer widths");
    train_cmd->add_option("--alpha", cfg.alpha, "KL weight");
    train_cmd->add_option("--beta", cfg.beta, "hinge weight");
    train_cmd->add_option("--lambda", cfg.lambda, "hinge margin");
    train_cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate");
    train_cmd->add_option("--epochs", cfg.epochs, "max epochs");
    train_cmd->add_option("--patience", cfg.patience, "early-stopping patience");
    train_cmd->add_option("--block-users", cfg.block_users, "mini-batch rows");
    train_cmd->add_option("--block-items", cfg.block_items, "mini-batch columns");

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "rank held-out items and report metrics");
    add_common(eval_cmd);
    eval_cmd->add_option("--model", cfg.model_path, "model file to read");
    eval_cmd->add_option("--ks", cfg.ks, "k values");
    eval_cmd->add_option("--eval-split", cfg.eval_split, "test | valid");
    eval_cmd->add_flag("!--no-cold-start", cfg.cold_start, "skip cold-start curves");
    eval_cmd->add_flag("--conventional-idcg{false}", cfg.paper_literal_idcg,
                       "normalize NDCG by min(k, |relevant|) terms");
    eval_cmd->add_flag("--per-user", per_user, "also write per-user metrics csv");

    CLI::App* rec_cmd = app.add_subcommand("recommend", "top-k lists for given users");
    add_common(rec_cmd);
    rec_cmd->add_option("--model", cfg.model_path, "model file to read");
    rec_cmd->add_option("--users", rec_users, "original user ids")->required();
    rec_cmd->add_option("-k,--k", rec_k, "list length");
    rec_cmd->add_option("--out-file", rec_out, "write lists here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare->parsed()) return cmd_prepare(cfg);
        if (train_cmd->parsed()) return cmd_train(cfg);
        if (eval_cmd->parsed()) return cmd_evaluate(cfg, per_user);
        if (rec_cmd->parsed()) return cmd_recommend(cfg, rec_users, rec_k, rec_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
