#include "jova/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace jova {

namespace {

bool contains(const std::vector<std::uint32_t>& sorted, std::uint32_t value) {
    return std::binary_search(sorted.begin(), sorted.end(), value);
}

std::size_t hits_at_k(const std::vector<std::uint32_t>& ranked,
                      const std::vector<std::uint32_t>& relevant, std::size_t k) {
    std::size_t hits = 0;
    const std::size_t limit = std::min(k, ranked.size());
    for (std::size_t i = 0; i < limit; ++i) {
        if (contains(relevant, ranked[i])) ++hits;
    }
    return hits;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::size_t PredictionMatrix::row_of(std::uint32_t user) const {
    for (std::size_t r = 0; r < users.size(); ++r) {
        if (users[r] == user) return r;
    }
    throw std::out_of_range("PredictionMatrix: user " + std::to_string(user) + " not present");
}

RankedList top_k(const PredictionMatrix& predictions, std::uint32_t user, std::size_t k,
                 const std::vector<std::uint32_t>& exclude) {
    if (k == 0) throw std::invalid_argument("top_k: k must be positive");
    const std::size_t row = predictions.row_of(user);
    const double* scores = predictions.scores.row_ptr(row);
    const std::size_t m = predictions.scores.cols;

    std::vector<std::uint32_t> candidates;
    candidates.reserve(m);
    for (std::uint32_t i = 0; i < m; ++i) {
        if (!contains(exclude, i)) candidates.push_back(i);
    }

    RankedList out;
    out.user = user;
    const std::size_t take = std::min(k, candidates.size());
    out.short_list = candidates.size() < k;
    const auto better = [scores](std::uint32_t a, std::uint32_t b) {
        return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
    };
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                      candidates.end(), better);
    candidates.resize(take);
    out.items = std::move(candidates);
    out.scores.reserve(take);
    for (std::uint32_t i : out.items) out.scores.push_back(scores[i]);
    return out;
}

double precision_at_k(const std::vector<std::uint32_t>& ranked,
                      const std::vector<std::uint32_t>& relevant, std::size_t k) {
    if (k == 0) throw std::invalid_argument("precision_at_k: k must be positive");
    return static_cast<double>(hits_at_k(ranked, relevant, k)) / static_cast<double>(k);
}

double recall_at_k(const std::vector<std::uint32_t>& ranked,
                   const std::vector<std::uint32_t>& relevant, std::size_t k) {
    if (relevant.empty()) {
        throw std::invalid_argument("recall_at_k: empty relevant set; exclude this user");
    }
    return static_cast<double>(hits_at_k(ranked, relevant, k)) /
           static_cast<double>(relevant.size());
}

double f1_at_k(double precision, double recall) {
    const double denom = precision + recall;
    return denom == 0.0 ? 0.0 : 2.0 * precision * recall / denom;
}

double ndcg_at_k(const std::vector<std::uint32_t>& ranked,
                 const std::vector<std::uint32_t>& relevant, std::size_t k,
                 bool paper_literal_idcg) {
    if (k == 0) throw std::invalid_argument("ndcg_at_k: k must be positive");
    double dcg = 0.0;
    const std::size_t limit = std::min(k, ranked.size());
    for (std::size_t i = 0; i < limit; ++i) {
        if (contains(relevant, ranked[i])) {
            dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
        }
    }
    const std::size_t ideal_terms = paper_literal_idcg ? k : std::min(k, relevant.size());
    double idcg = 0.0;
    for (std::size_t i = 0; i < ideal_terms; ++i) {
        idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    return idcg == 0.0 ? 0.0 : dcg / idcg;
}

std::vector<std::uint32_t> evaluable_users(const InteractionMatrix& data, Split eval_split) {
    std::vector<std::uint32_t> users;
    for (std::uint32_t u = 0; u < data.user_count(); ++u) {
        if (!data.items_of(u, eval_split).empty()) users.push_back(u);
    }
    return users;
}

EvalReport evaluate(const PredictionMatrix& predictions, const InteractionMatrix& data,
                    Split eval_split, const EvalOptions& opts) {
    if (opts.ks.empty()) throw std::invalid_argument("evaluate: no k values");
    EvalReport report;
    report.eval_split = eval_split;
    report.ks = opts.ks;
    report.paper_literal_idcg = opts.paper_literal_idcg;

    const std::size_t kmax = *std::max_element(opts.ks.begin(), opts.ks.end());
    std::map<std::size_t, MetricValues> sums;
    for (std::size_t k : opts.ks) sums[k] = {};

    for (std::uint32_t u = 0; u < data.user_count(); ++u) {
        const std::vector<std::uint32_t>& relevant = data.items_of(u, eval_split);
        if (relevant.empty()) {
            ++report.skipped_users;
            continue;
        }

        std::vector<std::uint32_t> exclude = data.items_of(u, Split::train);
        if (eval_split == Split::test) {
            const std::vector<std::uint32_t>& valid = data.items_of(u, Split::valid);
            std::vector<std::uint32_t> merged;
            merged.reserve(exclude.size() + valid.size());
            std::merge(exclude.begin(), exclude.end(), valid.begin(), valid.end(),
                       std::back_inserter(merged));
            exclude = std::move(merged);
        }
        if (exclude.size() >= data.item_count()) {
            ++report.skipped_users;  // nothing left to rank
            continue;
        }

        const RankedList ranked = top_k(predictions, u, kmax, exclude);

        UserEval ue;
        ue.user = u;
        ue.train_positives = data.items_of(u, Split::train).size();
        ue.eval_positives = relevant.size();
        for (std::size_t k : opts.ks) {
            MetricValues mv;
            mv.precision = precision_at_k(ranked.items, relevant, k);
            mv.recall = recall_at_k(ranked.items, relevant, k);
            mv.f1 = f1_at_k(mv.precision, mv.recall);
            mv.ndcg = ndcg_at_k(ranked.items, relevant, k, opts.paper_literal_idcg);
            ue.by_k[k] = mv;
            sums[k].precision += mv.precision;
            sums[k].recall += mv.recall;
            sums[k].f1 += mv.f1;
            sums[k].ndcg += mv.ndcg;
        }
        report.users.push_back(std::move(ue));
        ++report.evaluated_users;
    }

    if (report.evaluated_users == 0) {
        throw std::runtime_error("evaluate: no users with positives in the requested split");
    }

    const double n = static_cast<double>(report.evaluated_users);
    for (std::size_t k : opts.ks) {
        report.averages[k] = {sums[k].precision / n, sums[k].recall / n, sums[k].f1 / n,
                              sums[k].ndcg / n};
    }

    if (opts.cold_start) {
        std::vector<std::size_t> grid = opts.cold_start_grid;
        std::sort(grid.begin(), grid.end());
        grid.push_back(std::numeric_limits<std::size_t>::max());
        for (std::size_t L : grid) {
            ColdStartBucket bucket;
            bucket.max_train_interactions = L;
            std::map<std::size_t, MetricValues> bsums;
            for (std::size_t k : opts.ks) bsums[k] = {};
            for (const UserEval& ue : report.users) {
                if (ue.train_positives > L) continue;
                ++bucket.users;
                for (std::size_t k : opts.ks) {
                    const MetricValues& mv = ue.by_k.at(k);
                    bsums[k].precision += mv.precision;
                    bsums[k].recall += mv.recall;
                    bsums[k].f1 += mv.f1;
                    bsums[k].ndcg += mv.ndcg;
                }
            }
            if (bucket.users > 0) {
                const double bn = static_cast<double>(bucket.users);
                for (std::size_t k : opts.ks) {
                    bucket.by_k[k] = {bsums[k].precision / bn, bsums[k].recall / bn,
                                      bsums[k].f1 / bn, bsums[k].ndcg / bn};
                }
            }
            report.cold_start.push_back(std::move(bucket));
        }
    }

    if (!opts.keep_user_details) report.users.clear();
    return report;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["eval_split"] = report.eval_split == Split::test    ? "test"
                      : report.eval_split == Split::valid ? "valid"
                                                          : "train";
    j["idcg"] = report.paper_literal_idcg ? "paper" : "conventional";
    j["evaluated_users"] = report.evaluated_users;
    j["skipped_users"] = report.skipped_users;
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    for (const auto& [k, mv] : report.averages) {
        metrics[std::to_string(k)] = {{"precision", mv.precision},
                                      {"recall", mv.recall},
                                      {"f1", mv.f1},
                                      {"ndcg", mv.ndcg}};
    }
    j["metrics"] = metrics;
    if (!report.cold_start.empty()) {
        nlohmann::ordered_json buckets = nlohmann::ordered_json::array();
        for (const ColdStartBucket& b : report.cold_start) {
            nlohmann::ordered_json jb;
            if (b.max_train_interactions == std::numeric_limits<std::size_t>::max()) {
                jb["max_train_interactions"] = "inf";
            } else {
                jb["max_train_interactions"] = b.max_train_interactions;
            }
            jb["users"] = b.users;
            nlohmann::ordered_json bm = nlohmann::ordered_json::object();
            for (const auto& [k, mv] : b.by_k) {
                bm[std::to_string(k)] = {{"precision", mv.precision},
                                         {"recall", mv.recall},
                                         {"f1", mv.f1},
                                         {"ndcg", mv.ndcg}};
            }
            jb["metrics"] = bm;
            buckets.push_back(jb);
        }
        j["cold_start"] = buckets;
    }
    return j.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report) {
    std::ostringstream out;
    auto cell = [](const std::string& s, std::size_t width) {
        return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
    };
    const std::size_t w = 12;

    out << cell("metric", w);
    for (std::size_t k : report.ks) out << cell("k=" + std::to_string(k), w);
    out << "\n";
    const char* names[4] = {"precision", "recall", "f1", "ndcg"};
    for (int row = 0; row < 4; ++row) {
        out << cell(names[row], w);
        for (std::size_t k : report.ks) {
            const MetricValues& mv = report.averages.at(k);
            const double v = row == 0 ? mv.precision : row == 1 ? mv.recall
                                    : row == 2      ? mv.f1
                                                    : mv.ndcg;
            out << cell(format_double(v), w);
        }
        out << "\n";
    }
    out << "evaluated_users " << report.evaluated_users << "\n";
    out << "skipped_users " << report.skipped_users << "\n";
    if (!report.cold_start.empty()) {
        out << "\ncold-start (users with at most L training interactions)\n";
        out << cell("L", w) << cell("users", w);
        for (std::size_t k : report.ks) {
            out << cell("ndcg@" + std::to_string(k), w)
                << cell("recall@" + std::to_string(k), w);
        }
        out << "\n";
        for (const ColdStartBucket& b : report.cold_start) {
            if (b.max_train_interactions == std::numeric_limits<std::size_t>::max()) {
                out << cell("inf", w);
            } else {
                out << cell(std::to_string(b.max_train_interactions), w);
            }
            out << cell(std::to_string(b.users), w);
            for (std::size_t k : report.ks) {
                if (b.users == 0) {
                    out << cell("-", w) << cell("-", w);
                } else {
                    out << cell(format_double(b.by_k.at(k).ndcg), w)
                        << cell(format_double(b.by_k.at(k).recall), w);
                }
            }
            out << "\n";
        }
    }
    return out.str();
}

std::string report_user_details_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "user,train_positives,eval_positives";
    for (std::size_t k : report.ks) {
        out << ",p@" << k << ",r@" << k << ",f1@" << k << ",ndcg@" << k;
    }
    out << "\n";
    for (const UserEval& ue : report.users) {
        out << ue.user << "," << ue.train_positives << "," << ue.eval_positives;
        for (std::size_t k : report.ks) {
            const MetricValues& mv = ue.by_k.at(k);
            out << "," << format_double(mv.precision) << "," << format_double(mv.recall) << ","
                << format_double(mv.f1) << "," << format_double(mv.ndcg);
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace jova
