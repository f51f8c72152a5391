#include "jova/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace jova {

namespace {

using Json = nlohmann::ordered_json;

template <typename T>
void get_if_present(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string config_to_json(const RunConfig& cfg) {
    Json j;
    j["input_path"] = cfg.input_path;
    j["input_format"] = cfg.input_format;
    j["has_header"] = cfg.has_header;
    j["user_col"] = cfg.user_col;
    j["item_col"] = cfg.item_col;
    j["rating_col"] = cfg.rating_col;
    j["max_malformed_fraction"] = cfg.max_malformed_fraction;
    j["binarize_threshold"] = cfg.binarize_threshold;
    j["min_user_interactions"] = cfg.min_user_interactions;
    j["train_ratio"] = cfg.train_ratio;
    j["valid_ratio"] = cfg.valid_ratio;
    j["test_ratio"] = cfg.test_ratio;
    j["latent_dim"] = cfg.latent_dim;
    j["hidden"] = cfg.hidden;
    j["alpha"] = cfg.alpha;
    j["beta"] = cfg.beta;
    j["lambda"] = cfg.lambda;
    j["mode"] = cfg.mode;
    j["learning_rate"] = cfg.learning_rate;
    j["epochs"] = cfg.epochs;
    j["patience"] = cfg.patience;
    j["block_users"] = cfg.block_users;
    j["block_items"] = cfg.block_items;
    j["seed"] = cfg.seed;
    j["ks"] = cfg.ks;
    j["eval_split"] = cfg.eval_split;
    j["paper_literal_idcg"] = cfg.paper_literal_idcg;
    j["cold_start"] = cfg.cold_start;
    j["cold_start_grid"] = cfg.cold_start_grid;
    j["out_dir"] = cfg.out_dir;
    j["dataset_path"] = cfg.dataset_path;
    j["model_path"] = cfg.model_path;
    return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
    }
    RunConfig cfg;
    get_if_present(j, "input_path", cfg.input_path);
    get_if_present(j, "input_format", cfg.input_format);
    get_if_present(j, "has_header", cfg.has_header);
    get_if_present(j, "user_col", cfg.user_col);
    get_if_present(j, "item_col", cfg.item_col);
    get_if_present(j, "rating_col", cfg.rating_col);
    get_if_present(j, "max_malformed_fraction", cfg.max_malformed_fraction);
    get_if_present(j, "binarize_threshold", cfg.binarize_threshold);
    get_if_present(j, "min_user_interactions", cfg.min_user_interactions);
    get_if_present(j, "train_ratio", cfg.train_ratio);
    get_if_present(j, "valid_ratio", cfg.valid_ratio);
    get_if_present(j, "test_ratio", cfg.test_ratio);
    get_if_present(j, "latent_dim", cfg.latent_dim);
    get_if_present(j, "hidden", cfg.hidden);
    get_if_present(j, "alpha", cfg.alpha);
    get_if_present(j, "beta", cfg.beta);
    get_if_present(j, "lambda", cfg.lambda);
    get_if_present(j, "mode", cfg.mode);
    get_if_present(j, "learning_rate", cfg.learning_rate);
    get_if_present(j, "epochs", cfg.epochs);
    get_if_present(j, "patience", cfg.patience);
    get_if_present(j, "block_users", cfg.block_users);
    get_if_present(j, "block_items", cfg.block_items);
    get_if_present(j, "seed", cfg.seed);
    get_if_present(j, "ks", cfg.ks);
    get_if_present(j, "eval_split", cfg.eval_split);
    get_if_present(j, "paper_literal_idcg", cfg.paper_literal_idcg);
    get_if_present(j, "cold_start", cfg.cold_start);
    get_if_present(j, "cold_start_grid", cfg.cold_start_grid);
    get_if_present(j, "out_dir", cfg.out_dir);
    get_if_present(j, "dataset_path", cfg.dataset_path);
    get_if_present(j, "model_path", cfg.model_path);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

void save_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write config file: " + path);
    out << config_to_json(cfg);
}

}  // namespace jova
