// Run configuration shared by the CLI stages; JSON file with flag overrides.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace jova {

struct RunConfig {
    // input data and schema
    std::string input_path;
    std::string input_format = "csv";  // csv | tsv | movielens-dat
    bool has_header = false;
    int user_col = 0;
    int item_col = 1;
    int rating_col = 2;  // -1 for already-implicit data
    double max_malformed_fraction = 0.01;

    // preprocessing
    double binarize_threshold = 4.0;
    std::uint32_t min_user_interactions = 20;
    double train_ratio = 0.8;
    double valid_ratio = 0.1;
    double test_ratio = 0.1;

    // model
    std::size_t latent_dim = 80;
    std::vector<std::size_t> hidden = {320, 320};
    double alpha = 0.01;
    double beta = 0.01;
    double lambda = 0.15;
    std::string mode = "jova_hinge";

    // trainer
    double learning_rate = 0.003;
    std::size_t epochs = 200;
    std::size_t patience = 10;
    std::size_t block_users = 1500;
    std::size_t block_items = 1500;
    std::uint64_t seed = 1;

    // evaluation
    std::vector<std::size_t> ks = {1, 5, 10};
    std::string eval_split = "test";
    bool paper_literal_idcg = true;
    bool cold_start = true;
    std::vector<std::size_t> cold_start_grid = {10, 20, 40, 80, 160};

    // artifacts
    std::string out_dir = "out";
    std::string dataset_path;  // defaults to <out_dir>/dataset.bin when empty
    std::string model_path;    // defaults to <out_dir>/model.bin when empty
};

std::string config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const std::string& text);

RunConfig load_config(const std::string& path);
void save_config(const std::string& path, const RunConfig& cfg);

}  // namespace jova
