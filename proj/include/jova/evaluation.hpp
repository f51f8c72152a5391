// Top-k ranking and the P@k / R@k / F1@k / NDCG@k metrics, averaged over
// evaluated users, plus cold-start bucket curves.
#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "jova/data.hpp"
#include "jova/matrix.hpp"

namespace jova {

// Scores for a set of users over all items; rows align with `users`.
struct PredictionMatrix {
    std::vector<std::uint32_t> users;  // row -> user index
    DenseMatrix scores;                // |users| x item_count

    std::size_t row_of(std::uint32_t user) const;  // throws if absent
};

struct RankedList {
    std::uint32_t user = 0;
    std::vector<std::uint32_t> items;  // scores descending, ties by index
    std::vector<double> scores;
    bool short_list = false;  // fewer than k candidates existed
};

// k highest-scoring items of the row, skipping `exclude` (sorted). Ties break
// by ascending item index.
RankedList top_k(const PredictionMatrix& predictions, std::uint32_t user, std::size_t k,
                 const std::vector<std::uint32_t>& exclude);

// relevant must be sorted ascending. ranked may be shorter than k after a
// short list; missing positions count as misses.
double precision_at_k(const std::vector<std::uint32_t>& ranked,
                      const std::vector<std::uint32_t>& relevant, std::size_t k);
double recall_at_k(const std::vector<std::uint32_t>& ranked,
                   const std::vector<std::uint32_t>& relevant, std::size_t k);
double f1_at_k(double precision, double recall);

// paper_literal_idcg: IDCG@k = sum_{i=1..k} 1/log2(i+1) regardless of the
// relevant-set size; otherwise the conventional min(k, |relevant|) terms.
double ndcg_at_k(const std::vector<std::uint32_t>& ranked,
                 const std::vector<std::uint32_t>& relevant, std::size_t k,
                 bool paper_literal_idcg = true);

struct MetricValues {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double ndcg = 0.0;
};

struct EvalOptions {
    std::vector<std::size_t> ks = {1, 5, 10};
    bool paper_literal_idcg = true;
    bool cold_start = true;
    std::vector<std::size_t> cold_start_grid = {10, 20, 40, 80, 160};  // plus unbounded
    bool keep_user_details = true;
};

struct UserEval {
    std::uint32_t user = 0;
    std::size_t train_positives = 0;
    std::size_t eval_positives = 0;
    std::map<std::size_t, MetricValues> by_k;
};

struct ColdStartBucket {
    std::size_t max_train_interactions = 0;  // SIZE_MAX = unbounded
    std::size_t users = 0;
    std::map<std::size_t, MetricValues> by_k;
};

struct EvalReport {
    Split eval_split = Split::test;
    std::vector<std::size_t> ks;
    bool paper_literal_idcg = true;
    std::size_t evaluated_users = 0;
    std::size_t skipped_users = 0;  // no positives in the eval split
    std::map<std::size_t, MetricValues> averages;
    std::vector<ColdStartBucket> cold_start;
    std::vector<UserEval> users;
};

// Users holding at least one positive in the split (the evaluable set).
std::vector<std::uint32_t> evaluable_users(const InteractionMatrix& data, Split eval_split);

// Ranks each evaluable user's non-excluded items and averages the metrics.
// Exclusions: train positives, plus validation positives when evaluating the
// test split. predictions must cover every evaluable user.
EvalReport evaluate(const PredictionMatrix& predictions, const InteractionMatrix& data,
                    Split eval_split, const EvalOptions& opts);

// Machine-readable report, aligned table, and per-user csv.
std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);
std::string report_user_details_csv(const EvalReport& report);

}  // namespace jova
