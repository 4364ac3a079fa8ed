#include "kgfuse/seeds/seed_miner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "kgfuse/corpus/tokenizer.hpp"
#include "kgfuse/kernels/vec_kernels.hpp"
#include "kgfuse/util/error.hpp"

namespace kgfuse {

const std::set<std::string>& default_stopwords() {
    static const std::set<std::string> words = {
        "a",       "about",   "above",  "after",  "again",   "against", "all",
        "also",    "am",      "an",     "and",    "any",     "are",     "as",
        "at",      "be",      "because","been",   "before",  "being",   "below",
        "between", "both",    "but",    "by",     "can",     "cannot",  "could",
        "did",     "do",      "does",   "doing",  "down",    "during",  "each",
        "few",     "for",     "from",   "further","had",     "has",     "have",
        "having",  "he",      "her",    "here",   "hers",    "him",     "his",
        "how",     "however", "i",      "if",     "in",      "into",    "is",
        "it",      "its",     "itself", "may",    "me",      "more",    "most",
        "my",      "new",     "no",     "nor",    "not",     "of",      "off",
        "on",      "once",    "one",    "only",   "or",      "other",   "our",
        "ours",    "out",     "over",   "own",    "paper",   "propose", "proposed",
        "results", "same",    "she",    "should", "show",    "shows",   "so",
        "some",    "such",    "than",   "that",   "the",     "their",   "theirs",
        "them",    "then",    "there",  "these",  "they",    "this",    "those",
        "through", "to",      "too",    "under",  "until",   "up",      "use",
        "used",    "using",   "very",   "was",    "we",      "were",    "what",
        "when",    "where",   "which",  "while",  "who",     "whom",    "why",
        "will",    "with",    "work",   "would",  "you",     "your",    "yours",
    };
    return words;
}

void SeedConfig::validate() const {
    std::vector<std::string> errors;
    if (n_clusters < 1) errors.push_back("n_clusters must be >= 1");
    if (terms_per_cluster < 0) errors.push_back("terms_per_cluster must be >= 0");
    if (min_term_len < 1) errors.push_back("min_term_len must be >= 1");
    if (ngram_lo < 1) errors.push_back("ngram_lo must be >= 1");
    if (ngram_hi < ngram_lo) errors.push_back("ngram_hi must be >= ngram_lo");
    if (ngram_hi > 4) errors.push_back("ngram_hi must be <= 4");
    if (min_corpus_frequency < 1) errors.push_back("min_corpus_frequency must be >= 1");
    if (max_iterations < 1) errors.push_back("max_iterations must be >= 1");
    if (!errors.empty()) {
        std::string msg = "invalid seed config:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
}

namespace {

const std::set<std::string>& effective_stopwords(const SeedConfig& config) {
    return config.stopwords.empty() ? default_stopwords() : config.stopwords;
}

struct SparseVec {
    std::vector<std::size_t> idx;
    std::vector<double> val;
};

double sparse_dot_dense(const SparseVec& x, const std::vector<double>& c) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.idx.size(); ++k) acc += x.val[k] * c[x.idx[k]];
    return acc;
}

// Deterministic Fisher-Yates; std::shuffle's ordering is not pinned down by
// the standard, raw engine outputs are.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 gen(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(gen() % i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

std::vector<SparseVec> tfidf_vectors(const Corpus& corpus,
                                     const std::set<std::string>& stop) {
    const std::size_t n_docs = corpus.size();

    std::map<std::string, std::size_t> df;
    for (std::size_t d = 0; d < n_docs; ++d) {
        std::set<std::string> seen;
        for (const std::string& t : corpus.doc_tokens(d))
            if (!stop.count(t)) seen.insert(t);
        for (const std::string& t : seen) ++df[t];
    }

    std::map<std::string, std::size_t> vocab;
    std::vector<double> idf;
    for (const auto& [term, d] : df) {
        vocab[term] = idf.size();
        idf.push_back(std::log(1.0 + static_cast<double>(n_docs) /
                                         static_cast<double>(d)));
    }

    std::vector<SparseVec> vecs(n_docs);
    for (std::size_t d = 0; d < n_docs; ++d) {
        std::map<std::size_t, std::size_t> counts;
        std::size_t kept = 0;
        for (const std::string& t : corpus.doc_tokens(d)) {
            auto it = vocab.find(t);
            if (it == vocab.end()) continue;
            ++counts[it->second];
            ++kept;
        }
        SparseVec& v = vecs[d];
        for (const auto& [i, c] : counts) {
            v.idx.push_back(i);
            v.val.push_back(static_cast<double>(c) /
                            static_cast<double>(std::max<std::size_t>(kept, 1)) *
                            idf[i]);
        }
        kernels::l2_normalize(v.val.data(), v.val.size());
    }
    return vecs;
}

std::size_t vocab_dimension(const std::vector<SparseVec>& vecs) {
    std::size_t dim = 0;
    for (const SparseVec& v : vecs)
        for (std::size_t i : v.idx) dim = std::max(dim, i + 1);
    return dim;
}

}  // namespace

std::vector<int> cluster_documents(const Corpus& corpus, const SeedConfig& config) {
    config.validate();
    if (corpus.empty()) throw ConfigError("cannot cluster an empty corpus");
    const std::size_t n_docs = corpus.size();
    const std::size_t k = static_cast<std::size_t>(config.n_clusters);
    if (k > n_docs)
        throw ConfigError("n_clusters (" + std::to_string(k) +
                          ") exceeds document count (" + std::to_string(n_docs) + ")");

    std::vector<SparseVec> vecs = tfidf_vectors(corpus, effective_stopwords(config));
    const std::size_t dim = vocab_dimension(vecs);
    if (dim == 0 || k == 1) return std::vector<int>(n_docs, 0);

    std::vector<std::size_t> order = shuffled_indices(n_docs, config.rng_seed);
    std::vector<std::vector<double>> centroids(k, std::vector<double>(dim, 0.0));
    for (std::size_t c = 0; c < k; ++c) {
        const SparseVec& v = vecs[order[c]];
        for (std::size_t j = 0; j < v.idx.size(); ++j)
            centroids[c][v.idx[j]] = v.val[j];
    }

    std::vector<int> assign(n_docs, -1);
    for (int iter = 0; iter < config.max_iterations; ++iter) {
        // Docs are unit vectors: dist^2 = 1 + |c|^2 - 2 x.c
        std::vector<double> cnorm(k);
        for (std::size_t c = 0; c < k; ++c)
            cnorm[c] = kernels::dot(centroids[c].data(), centroids[c].data(), dim);

        bool changed = false;
        for (std::size_t d = 0; d < n_docs; ++d) {
            int best = 0;
            double best_dist = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                double dist = 1.0 + cnorm[c] - 2.0 * sparse_dot_dense(vecs[d], centroids[c]);
                if (c == 0 || dist < best_dist - 1e-12) {
                    best = static_cast<int>(c);
                    best_dist = dist;
                }
            }
            if (assign[d] != best) {
                assign[d] = best;
                changed = true;
            }
        }
        if (!changed) break;

        std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> members(k, 0);
        for (std::size_t d = 0; d < n_docs; ++d) {
            std::size_t c = static_cast<std::size_t>(assign[d]);
            ++members[c];
            const SparseVec& v = vecs[d];
            for (std::size_t j = 0; j < v.idx.size(); ++j)
                next[c][v.idx[j]] += v.val[j];
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            if (members[c] == 0) {
                next[c] = centroids[c];  // keep an empty cluster's centroid
            } else {
                kernels::scale(next[c].data(), dim, 1.0 / static_cast<double>(members[c]));
            }
            shift += kernels::squared_distance(next[c].data(), centroids[c].data(), dim);
        }
        centroids = std::move(next);
        if (shift < 1e-18) break;
    }
    return assign;
}

std::map<std::string, std::vector<double>> ctf_idf(
    const std::map<std::string, std::vector<std::int64_t>>& counts) {
    if (counts.empty()) return {};
    std::size_t n_clusters = counts.begin()->second.size();
    if (n_clusters == 0) throw MetricError("ctf_idf: zero clusters");
    for (const auto& [term, row] : counts) {
        if (row.size() != n_clusters)
            throw MetricError("ctf_idf: ragged counts for term '" + term + "'");
        for (std::int64_t c : row)
            if (c < 0) throw MetricError("ctf_idf: negative count for term '" + term + "'");
    }

    std::vector<double> totals(n_clusters, 0.0);
    double grand_total = 0.0;
    for (const auto& [term, row] : counts) {
        for (std::size_t c = 0; c < n_clusters; ++c) {
            totals[c] += static_cast<double>(row[c]);
            grand_total += static_cast<double>(row[c]);
        }
    }
    const double avg_per_cluster = grand_total / static_cast<double>(n_clusters);

    std::map<std::string, std::vector<double>> scores;
    for (const auto& [term, row] : counts) {
        double freq = 0.0;
        for (std::int64_t c : row) freq += static_cast<double>(c);
        std::vector<double> out(n_clusters, 0.0);
        if (freq > 0.0) {
            double idf = std::log(1.0 + avg_per_cluster / freq);
            for (std::size_t c = 0; c < n_clusters; ++c) {
                if (totals[c] > 0.0 && row[c] > 0)
                    out[c] = static_cast<double>(row[c]) / totals[c] * idf;
            }
        }
        scores[term] = std::move(out);
    }
    return scores;
}

namespace {

struct CandidateTerm {
    std::vector<std::int64_t> per_cluster;
    std::size_t token_count = 0;
};

bool is_sub_ngram(const std::string& shorter, const std::string& longer) {
    if (shorter.size() >= longer.size()) return false;
    std::size_t pos = longer.find(shorter);
    while (pos != std::string::npos) {
        bool left_ok = pos == 0 || longer[pos - 1] == ' ';
        std::size_t end = pos + shorter.size();
        bool right_ok = end == longer.size() || longer[end] == ' ';
        if (left_ok && right_ok) return true;
        pos = longer.find(shorter, pos + 1);
    }
    return false;
}

}  // namespace

SeedList generate_seed_entities(const Corpus& corpus, const SeedConfig& config) {
    std::vector<int> assign = cluster_documents(corpus, config);
    const std::size_t k = static_cast<std::size_t>(config.n_clusters);
    const std::set<std::string>& stop = effective_stopwords(config);

    // Candidate n-grams must appear verbatim in a body: component tokens
    // adjacent, single-space separated, and flanked by word boundaries.
    std::map<std::string, CandidateTerm> terms;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        const std::string& lowered = corpus.lowered_body(d);
        std::vector<Token> toks = tokenize(lowered);
        const std::size_t cluster = static_cast<std::size_t>(assign[d]);
        for (std::size_t i = 0; i < toks.size(); ++i) {
            for (int n = config.ngram_lo; n <= config.ngram_hi; ++n) {
                const std::size_t len = static_cast<std::size_t>(n);
                if (i + len > toks.size()) break;
                bool adjacent = true;
                bool stopped = false;
                for (std::size_t j = 0; j < len; ++j) {
                    if (stop.count(toks[i + j].text)) {
                        stopped = true;
                        break;
                    }
                    if (j + 1 < len &&
                        !(toks[i + j + 1].begin == toks[i + j].end + 1 &&
                          lowered[toks[i + j].end] == ' ')) {
                        adjacent = false;
                        break;
                    }
                }
                if (stopped || !adjacent) continue;
                std::size_t begin = toks[i].begin;
                std::size_t end = toks[i + len - 1].end;
                if (!is_word_bounded(lowered, begin, end)) continue;
                std::string surface = lowered.substr(begin, end - begin);
                if (static_cast<int>(surface.size()) < config.min_term_len) continue;
                if (stop.count(surface)) continue;
                auto [it, inserted] =
                    terms.try_emplace(std::move(surface), CandidateTerm{});
                if (inserted) {
                    it->second.per_cluster.assign(k, 0);
                    it->second.token_count = len;
                }
                ++it->second.per_cluster[cluster];
            }
        }
    }

    // Corpus frequency filter.
    std::map<std::string, std::vector<std::int64_t>> counts;
    for (const auto& [term, cand] : terms) {
        std::int64_t freq = std::accumulate(cand.per_cluster.begin(),
                                            cand.per_cluster.end(), std::int64_t{0});
        if (freq >= config.min_corpus_frequency)
            counts[term] = cand.per_cluster;
    }

    // A term whose occurrences are fully absorbed by a longer retained phrase
    // (identical per-cluster counts) is redundant; keep the phrase.
    if (config.drop_subsumed) {
        std::vector<std::string> doomed;
        for (const auto& [shorter, row] : counts) {
            for (const auto& [longer, row2] : counts) {
                if (&row == &row2) continue;
                if (row == row2 && is_sub_ngram(shorter, longer)) {
                    doomed.push_back(shorter);
                    break;
                }
            }
        }
        for (const std::string& term : doomed) counts.erase(term);
    }

    std::map<std::string, std::vector<double>> scores = ctf_idf(counts);

    struct Scored {
        double score;
        std::string term;
    };
    SeedList seeds;
    std::map<std::string, SeedProvenance> best;
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<Scored> ranked;
        for (const auto& [term, row] : scores)
            if (row[c] > 0.0) ranked.push_back(Scored{row[c], term});
        std::sort(ranked.begin(), ranked.end(), [](const Scored& a, const Scored& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.term < b.term;
        });
        std::size_t take = std::min<std::size_t>(
            ranked.size(), static_cast<std::size_t>(config.terms_per_cluster));
        for (std::size_t r = 0; r < take; ++r) {
            const Scored& s = ranked[r];
            auto it = best.find(s.term);
            if (it == best.end() || s.score > it->second.score)
                best[s.term] = SeedProvenance{static_cast<int>(c), s.score};
        }
    }

    std::vector<Scored> ordered;
    for (const auto& [term, prov] : best) ordered.push_back(Scored{prov.score, term});
    std::sort(ordered.begin(), ordered.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.term < b.term;
    });
    for (const Scored& s : ordered) seeds.entities.push_back(s.term);
    seeds.provenance = std::move(best);
    return seeds;
}

std::string seed_list_to_text(const SeedList& seeds) {
    std::string out;
    for (const std::string& e : seeds.entities) {
        out += e;
        out += '\n';
    }
    return out;
}

std::string seed_list_to_tsv(const SeedList& seeds) {
    std::string out = "# entity\tcluster\tscore\n";
    char buf[64];
    for (const std::string& e : seeds.entities) {
        const SeedProvenance& p = seeds.provenance.at(e);
        std::snprintf(buf, sizeof(buf), "%.12g", p.score);
        out += e;
        out += '\t';
        out += std::to_string(p.cluster_id);
        out += '\t';
        out += buf;
        out += '\n';
    }
    return out;
}

}  // namespace kgfuse
