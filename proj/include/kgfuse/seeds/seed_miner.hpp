#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kgfuse/corpus/corpus.hpp"

namespace kgfuse {

struct SeedConfig {
    int n_clusters = 8;
    int terms_per_cluster = 10;
    int min_term_len = 3;
    int ngram_lo = 1;
    int ngram_hi = 3;
    int min_corpus_frequency = 2;
    int max_iterations = 50;
    std::uint64_t rng_seed = 42;
    std::set<std::string> stopwords;  // empty -> default_stopwords()
    bool drop_subsumed = true;  // drop terms fully absorbed by a longer phrase

    void validate() const;  // throws ConfigError listing every violation
};

const std::set<std::string>& default_stopwords();

struct SeedProvenance {
    int cluster_id = 0;
    double score = 0.0;
};

struct SeedList {
    std::vector<std::string> entities;  // score desc, then lexicographic
    std::map<std::string, SeedProvenance> provenance;
};

// Seeded k-means over L2-normalized TF-IDF document vectors. Returns one
// cluster id per document, deterministic for a fixed corpus and config.
std::vector<int> cluster_documents(const Corpus& corpus, const SeedConfig& config);

// score(t, c) = (count(t,c) / total_terms(c)) * ln(1 + A / f_t) where A is
// the average total term count per cluster and f_t the corpus frequency.
// Input and output vectors are indexed by cluster id.
std::map<std::string, std::vector<double>> ctf_idf(
    const std::map<std::string, std::vector<std::int64_t>>& counts);

SeedList generate_seed_entities(const Corpus& corpus, const SeedConfig& config);

std::string seed_list_to_text(const SeedList& seeds);
std::string seed_list_to_tsv(const SeedList& seeds);

}  // namespace kgfuse
