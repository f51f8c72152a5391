// Interaction data: ingestion of delimited rating files, binarization,
// user filtering, the train/validation/test split, and the dataset file.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "jova/matrix.hpp"

namespace jova {

struct RawRating {
    std::string user_id;
    std::string item_id;
    double value = 0.0;
};

enum class Split : std::uint8_t { train = 0, valid = 1, test = 2 };

struct Interaction {
    std::uint32_t user = 0;
    std::uint32_t item = 0;
    Split split = Split::train;
};

// Sparse binary user x item matrix with per-interaction split labels and a
// dense reindexing of the original ids. Immutable once built.
struct InteractionMatrix {
    std::vector<std::string> user_ids;  // dense index -> original id
    std::vector<std::string> item_ids;
    std::unordered_map<std::string, std::uint32_t> user_index;
    std::unordered_map<std::string, std::uint32_t> item_index;
    std::vector<Interaction> interactions;  // sorted by (user, item)

    // adjacency per split, sorted item/user lists
    std::array<std::vector<std::vector<std::uint32_t>>, 3> items_by_user;
    std::array<std::vector<std::vector<std::uint32_t>>, 3> users_by_item;

    std::uint64_t split_seed = 0;
    double binarize_threshold = 0.0;
    std::uint32_t min_user_interactions = 0;

    std::size_t user_count() const { return user_ids.size(); }
    std::size_t item_count() const { return item_ids.size(); }

    const std::vector<std::uint32_t>& items_of(std::uint32_t user, Split s) const {
        return items_by_user[static_cast<std::size_t>(s)][user];
    }
    const std::vector<std::uint32_t>& users_of(std::uint32_t item, Split s) const {
        return users_by_item[static_cast<std::size_t>(s)][item];
    }

    void rebuild_adjacency();

    // Dense 0/1 slab of the given users' rows (|users| x item_count).
    DenseMatrix dense_rows(const std::vector<std::uint32_t>& users, Split s) const;
    // Dense 0/1 slab of the given items' columns (|items| x user_count).
    DenseMatrix dense_cols(const std::vector<std::uint32_t>& items, Split s) const;
};

enum class FileFormat { csv, tsv, movielens_dat };

FileFormat parse_file_format(const std::string& name);  // "csv" | "tsv" | "movielens-dat"
std::string file_format_name(FileFormat f);

struct IngestOptions {
    FileFormat format = FileFormat::csv;
    bool has_header = false;
    int user_col = 0;
    int item_col = 1;
    int rating_col = 2;  // -1: already-implicit data, value fixed to 1
    double max_malformed_fraction = 0.01;
};

struct IngestResult {
    std::vector<RawRating> ratings;
    std::size_t total_lines = 0;
    std::size_t malformed = 0;
    std::vector<std::size_t> malformed_line_numbers;  // first few, 1-based
};

// Parses the file; throws on an unreadable path or when the malformed-line
// fraction exceeds the threshold (message carries line numbers).
IngestResult ingest(const std::string& path, const IngestOptions& opts);

// Keeps (user, item) with value >= threshold as positives, collapsing
// duplicates; everything else becomes unobserved.
std::vector<RawRating> binarize(const std::vector<RawRating>& ratings, double threshold = 4.0);

// Drops users holding fewer than min_count positives. Idempotent; throws if
// nothing survives.
std::vector<RawRating> filter_min_interactions(const std::vector<RawRating>& interactions,
                                               std::uint32_t min_count = 20);

// Global uniform split over interactions with exact rounded counts; builds
// the dense index maps (first-appearance order) and adjacency.
InteractionMatrix split(const std::vector<RawRating>& interactions, double train_ratio,
                        double valid_ratio, double test_ratio, Rng& rng);

struct DatasetStats {
    std::size_t users = 0;
    std::size_t items = 0;
    std::size_t interactions = 0;
    double sparsity = 0.0;  // 1 - interactions / (users*items)
};

DatasetStats stats(const InteractionMatrix& m);

// Versioned binary dataset file.
void save_dataset(const std::string& path, const InteractionMatrix& m);
InteractionMatrix load_dataset(const std::string& path);

}  // namespace jova
