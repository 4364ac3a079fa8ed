#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kgfuse/graph/graph.hpp"
#include "kgfuse/metrics/embedding.hpp"
#include "kgfuse/util/error.hpp"

namespace kgfuse {

// Mean pairwise cosine over the cross product of the two entity lists,
// sum sim(m, n) / (|pred| * |gold|). Raw value in [-1, 1].
double similarity_score(std::span<const std::string> pred, std::span<const std::string> gold,
                        const EmbeddingProvider& provider);

// 100 * |{g in gold : g matches some pred entry after normalization}| / |gold|
double hit_rate(std::span<const std::string> pred, std::span<const std::string> gold);

template <typename T>
double accuracy(const std::vector<T>& preds, const std::vector<T>& golds) {
    if (preds.size() != golds.size())
        throw MetricError("accuracy: length mismatch (" + std::to_string(preds.size()) + " vs " +
                          std::to_string(golds.size()) + ")");
    if (preds.empty()) throw MetricError("accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == golds[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

struct Rating {
    std::string item_id;
    std::string rater_id;
    int score = 0;
};

struct RatingSheet {
    std::vector<Rating> items;
    int scale_min = 1;
    int scale_max = 3;
};

// CSV rows (item_id, rater_id, score). A first line whose third field is not
// an integer is treated as a header and skipped.
RatingSheet load_rating_sheet(const std::filesystem::path& path, int scale_min = 1,
                              int scale_max = 3);

struct RatingSummary {
    double mean = 0.0;
    double stddev = 0.0;  // population
    std::size_t count = 0;
};

RatingSummary rating_summary(std::span<const int> scores);
std::map<std::string, RatingSummary> rating_summary_by_rater(const RatingSheet& sheet);

// Cohen's kappa over two equal-length category vectors. When the expected
// agreement p_e reaches 1 the quotient is defined as 1.0 if the observed
// agreement is also 1, else 0.0.
double cohen_kappa(std::span<const int> a, std::span<const int> b);

// Mean entity-list length; 0.0 for no answers.
double entity_count_stats(const std::vector<std::vector<std::string>>& answers);

// Relation type -> percentage of stored triplets. Percentages sum to 100
// up to rounding.
std::map<RelationType, double> relation_distribution(const KnowledgeGraph& kg);

// task -> metric -> value. x100 display scales "similarity" entries from
// [-1, 1] into the 0-100 style; percentage metrics are untouched.
struct MetricsReport {
    std::map<std::string, std::map<std::string, double>> by_task;

    void set(const std::string& task, const std::string& metric, double value);
    std::string to_json(bool x100_similarity = false) const;
};

}  // namespace kgfuse
