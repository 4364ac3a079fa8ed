#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kgfuse {

struct Document {
    std::string doc_id;
    std::string title;
    std::string body;  // whitespace-normalized abstract text
    std::optional<int> year;

    bool operator==(const Document&) const = default;
};

struct Posting {
    std::string doc_id;
    std::vector<std::size_t> positions;  // token positions of the term's first token
};

enum class CorpusFormat { jsonl, tsv };

std::optional<CorpusFormat> parse_corpus_format(std::string_view name);
std::string_view corpus_format_name(CorpusFormat format);

struct IngestReport {
    std::size_t ingested = 0;
    std::size_t skipped = 0;
    std::vector<std::string> reasons;  // one line per skipped record
};

class Corpus {
  public:
    // Throws CorpusError on duplicate doc_id or empty body.
    void add_document(Document doc);

    const std::vector<Document>& documents() const { return docs_; }
    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }

    const Document* find(const std::string& doc_id) const;

    // Term -> postings. Terms are lowercase unigrams plus space-joined 2-4
    // gram phrases over each document body.
    const std::map<std::string, std::vector<Posting>>& index() const { return index_; }

    const std::string& lowered_body(std::size_t doc_index) const;
    const std::vector<std::string>& doc_tokens(std::size_t doc_index) const;

    std::size_t phrase_frequency(std::size_t doc_index, std::string_view phrase) const;

    bool operator==(const Corpus& other) const { return docs_ == other.docs_; }

  private:
    std::vector<Document> docs_;
    std::map<std::string, std::size_t> by_id_;
    std::map<std::string, std::vector<Posting>> index_;
    std::vector<std::string> lowered_;
    std::vector<std::vector<std::string>> tokens_;
};

// JSONL records {"id", "title", "abstract", "year"} or TSV rows
// id<TAB>title<TAB>abstract[<TAB>year]. Malformed records are skipped and
// reported; duplicate ids abort the ingest.
Corpus ingest_corpus(const std::filesystem::path& path, CorpusFormat format,
                     IngestReport* report = nullptr);
Corpus ingest_corpus_text(std::string_view content, CorpusFormat format,
                          IngestReport* report = nullptr);

struct ContextBundle {
    std::string query;  // normalized query surface
    std::vector<std::pair<std::string, std::string>> snippets;  // (doc_id, text)
    std::size_t total_chars = 0;
    bool fallback_ranked = false;

    std::string joined(std::string_view sep = "\n\n") const;
};

// Exact-match ranking: word-bounded case-insensitive occurrences of the
// entity in document bodies, frequency desc then doc_id asc. When no body
// contains the entity, falls back to token-overlap ranking and flags the
// bundle. Snippets are truncated to fit max_chars; a truncated snippet that
// no longer contains the query is dropped.
ContextBundle retrieve_by_entity(const Corpus& corpus, const std::string& entity,
                                 std::size_t max_docs, std::size_t max_chars);

std::string corpus_to_json(const Corpus& corpus);
Corpus corpus_from_json(const std::string& content);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

}  // namespace kgfuse
