#include "kgfuse/metrics/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include "vendor/json.hpp"

namespace kgfuse {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string{s.substr(b, e - b)};
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        fields.push_back(trim(std::string_view{line}.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

bool parse_int(const std::string& s, int& out) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) return false;
    for (std::size_t k = i; k < s.size(); ++k)
        if (!std::isdigit(static_cast<unsigned char>(s[k]))) return false;
    try {
        out = std::stoi(s);
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

}  // namespace

double similarity_score(std::span<const std::string> pred, std::span<const std::string> gold,
                        const EmbeddingProvider& provider) {
    if (pred.empty()) throw MetricError("similarity_score: predicted entity list is empty");
    if (gold.empty()) throw MetricError("similarity_score: gold entity list is empty");
    std::vector<std::vector<double>> pred_vecs, gold_vecs;
    pred_vecs.reserve(pred.size());
    gold_vecs.reserve(gold.size());
    for (const auto& m : pred) pred_vecs.push_back(provider.embed(m));
    for (const auto& n : gold) gold_vecs.push_back(provider.embed(n));
    double sum = 0.0;
    for (const auto& m : pred_vecs)
        for (const auto& n : gold_vecs) sum += cosine(m, n);
    return sum / (static_cast<double>(pred.size()) * static_cast<double>(gold.size()));
}

double hit_rate(std::span<const std::string> pred, std::span<const std::string> gold) {
    if (gold.empty()) throw MetricError("hit_rate: gold entity list is empty");
    std::set<std::string> pred_norm;
    for (const auto& p : pred) {
        try {
            pred_norm.insert(normalize_surface(p));
        } catch (const GraphError&) {
        }
    }
    std::size_t matched = 0;
    for (const auto& g : gold) {
        std::string norm;
        try {
            norm = normalize_surface(g);
        } catch (const GraphError&) {
            throw MetricError("hit_rate: empty gold entity");
        }
        if (pred_norm.count(norm)) ++matched;
    }
    return 100.0 * static_cast<double>(matched) / static_cast<double>(gold.size());
}

RatingSheet load_rating_sheet(const std::filesystem::path& path, int scale_min, int scale_max) {
    if (scale_min > scale_max) throw ConfigError("rating scale is inverted");
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open rating sheet: " + path.string());
    RatingSheet sheet;
    sheet.scale_min = scale_min;
    sheet.scale_max = scale_max;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& why) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != 3)
            fail("expected 3 fields (item_id, rater_id, score), got " +
                 std::to_string(fields.size()));
        int score = 0;
        if (!parse_int(fields[2], score)) {
            if (line_no == 1) continue;  // header row
            fail("score is not an integer: '" + fields[2] + "'");
        }
        if (fields[0].empty()) fail("empty item_id");
        if (fields[1].empty()) fail("empty rater_id");
        if (score < scale_min || score > scale_max)
            fail("score " + std::to_string(score) + " outside scale [" +
                 std::to_string(scale_min) + ", " + std::to_string(scale_max) + "]");
        if (!seen.insert({fields[0], fields[1]}).second)
            fail("duplicate (item_id, rater_id) pair ('" + fields[0] + "', '" + fields[1] + "')");
        sheet.items.push_back({fields[0], fields[1], score});
    }
    return sheet;
}

RatingSummary rating_summary(std::span<const int> scores) {
    if (scores.empty()) throw MetricError("rating_summary: no scores");
    double sum = 0.0;
    for (int s : scores) sum += s;
    double mean = sum / static_cast<double>(scores.size());
    double sq = 0.0;
    for (int s : scores) {
        double d = s - mean;
        sq += d * d;
    }
    return {mean, std::sqrt(sq / static_cast<double>(scores.size())), scores.size()};
}

std::map<std::string, RatingSummary> rating_summary_by_rater(const RatingSheet& sheet) {
    if (sheet.items.empty()) throw MetricError("rating_summary: empty sheet");
    std::map<std::string, std::vector<int>> grouped;
    for (const auto& r : sheet.items) grouped[r.rater_id].push_back(r.score);
    std::map<std::string, RatingSummary> out;
    for (const auto& [rater, scores] : grouped) out[rater] = rating_summary(scores);
    return out;
}

double cohen_kappa(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size())
        throw MetricError("cohen_kappa: length mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
    if (a.empty()) throw MetricError("cohen_kappa: empty ratings");
    const double n = static_cast<double>(a.size());
    std::size_t agree = 0;
    std::map<int, std::size_t> count_a, count_b;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) ++agree;
        ++count_a[a[i]];
        ++count_b[b[i]];
    }
    double p_o = static_cast<double>(agree) / n;
    double p_e = 0.0;
    for (const auto& [category, ca] : count_a) {
        auto it = count_b.find(category);
        if (it == count_b.end()) continue;
        p_e += (static_cast<double>(ca) / n) * (static_cast<double>(it->second) / n);
    }
    if (p_e >= 1.0 - 1e-12) return agree == a.size() ? 1.0 : 0.0;
    return (p_o - p_e) / (1.0 - p_e);
}

double entity_count_stats(const std::vector<std::vector<std::string>>& answers) {
    if (answers.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& list : answers) sum += static_cast<double>(list.size());
    return sum / static_cast<double>(answers.size());
}

std::map<RelationType, double> relation_distribution(const KnowledgeGraph& kg) {
    if (kg.empty()) throw MetricError("relation_distribution: empty graph");
    std::map<RelationType, std::size_t> counts;
    for (const auto& t : kg.triplets()) ++counts[t.relation];
    std::map<RelationType, double> out;
    for (const auto& [relation, count] : counts)
        out[relation] = 100.0 * static_cast<double>(count) / static_cast<double>(kg.size());
    return out;
}

void MetricsReport::set(const std::string& task, const std::string& metric, double value) {
    by_task[task][metric] = value;
}

std::string MetricsReport::to_json(bool x100_similarity) const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [task, metrics] : by_task) {
        nlohmann::json m = nlohmann::json::object();
        for (const auto& [metric, value] : metrics)
            m[metric] = (x100_similarity && metric == "similarity") ? value * 100.0 : value;
        j[task] = m;
    }
    return j.dump(2) + "\n";
}

}  // namespace kgfuse
