#include "kgfuse/corpus/corpus.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kgfuse/corpus/tokenizer.hpp"
#include "kgfuse/graph/graph.hpp"
#include "kgfuse/util/error.hpp"
#include "kgfuse/util/io.hpp"

namespace kgfuse {

namespace {

constexpr std::size_t kMaxPhraseLen = 4;

std::vector<std::string> split_tsv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == '\t') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

std::optional<CorpusFormat> parse_corpus_format(std::string_view name) {
    if (name == "jsonl") return CorpusFormat::jsonl;
    if (name == "tsv") return CorpusFormat::tsv;
    return std::nullopt;
}

std::string_view corpus_format_name(CorpusFormat format) {
    return format == CorpusFormat::jsonl ? "jsonl" : "tsv";
}

void Corpus::add_document(Document doc) {
    doc.title = collapse_whitespace(doc.title);
    doc.body = collapse_whitespace(doc.body);
    if (doc.doc_id.empty()) throw CorpusError("document has empty id");
    if (doc.body.empty())
        throw CorpusError("document '" + doc.doc_id + "' has empty body");
    if (by_id_.count(doc.doc_id))
        throw CorpusError("duplicate doc_id '" + doc.doc_id + "'");

    std::size_t doc_index = docs_.size();
    by_id_[doc.doc_id] = doc_index;
    lowered_.push_back(to_lower_ascii(doc.body));

    std::vector<Token> toks = tokenize(doc.body);
    std::vector<std::string> texts;
    texts.reserve(toks.size());
    for (const auto& t : toks) texts.push_back(t.text);

    std::map<std::string, std::vector<std::size_t>> local;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        std::string term = texts[i];
        local[term].push_back(i);
        for (std::size_t n = 2; n <= kMaxPhraseLen && i + n <= texts.size(); ++n) {
            term += ' ';
            term += texts[i + n - 1];
            local[term].push_back(i);
        }
    }
    for (auto& [term, positions] : local) {
        index_[term].push_back(Posting{doc.doc_id, std::move(positions)});
    }

    tokens_.push_back(std::move(texts));
    docs_.push_back(std::move(doc));
}

const Document* Corpus::find(const std::string& doc_id) const {
    auto it = by_id_.find(doc_id);
    if (it == by_id_.end()) return nullptr;
    return &docs_[it->second];
}

const std::string& Corpus::lowered_body(std::size_t doc_index) const {
    return lowered_.at(doc_index);
}

const std::vector<std::string>& Corpus::doc_tokens(std::size_t doc_index) const {
    return tokens_.at(doc_index);
}

std::size_t Corpus::phrase_frequency(std::size_t doc_index, std::string_view phrase) const {
    const std::string& lowered = lowered_.at(doc_index);
    if (phrase.empty()) return 0;
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = lowered.find(phrase, pos)) != std::string::npos) {
        if (is_word_bounded(lowered, pos, pos + phrase.size())) {
            ++count;
            pos += phrase.size();
        } else {
            ++pos;
        }
    }
    return count;
}

namespace {

void ingest_jsonl(std::string_view content, Corpus& corpus, IngestReport& report) {
    std::size_t line_no = 0;
    std::istringstream ss{std::string(content)};
    std::string line;
    while (std::getline(ss, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            ++report.skipped;
            report.reasons.push_back("line " + std::to_string(line_no) + ": invalid JSON");
            continue;
        }
        Document doc;
        if (rec.contains("id") && rec["id"].is_string()) {
            doc.doc_id = rec["id"].get<std::string>();
        } else if (rec.contains("id") && rec["id"].is_number_integer()) {
            doc.doc_id = std::to_string(rec["id"].get<long long>());
        } else {
            ++report.skipped;
            report.reasons.push_back("line " + std::to_string(line_no) + ": missing id");
            continue;
        }
        if (!rec.contains("abstract") || !rec["abstract"].is_string()) {
            ++report.skipped;
            report.reasons.push_back("line " + std::to_string(line_no) +
                                     ": missing abstract (id '" + doc.doc_id + "')");
            continue;
        }
        doc.body = rec["abstract"].get<std::string>();
        if (collapse_whitespace(doc.body).empty()) {
            ++report.skipped;
            report.reasons.push_back("line " + std::to_string(line_no) +
                                     ": empty abstract (id '" + doc.doc_id + "')");
            continue;
        }
        if (rec.contains("title") && rec["title"].is_string())
            doc.title = rec["title"].get<std::string>();
        if (rec.contains("year") && rec["year"].is_number_integer())
            doc.year = rec["year"].get<int>();
        corpus.add_document(std::move(doc));  // duplicate ids abort the ingest
        ++report.ingested;
    }
}

void ingest_tsv(std::string_view content, Corpus& corpus, IngestReport& report) {
    std::size_t line_no = 0;
    std::istringstream ss{std::string(content)};
    std::string line;
    while (std::getline(ss, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields = split_tsv_row(line);
        if (fields.size() < 3) {
            ++report.skipped;
            report.reasons.push_back("line " + std::to_string(line_no) +
                                     ": expected id<TAB>title<TAB>abstract");
            continue;
        }
        Document doc;
        doc.doc_id = fields[0];
        doc.title = fields[1];
        doc.body = fields[2];
        if (doc.doc_id.empty()) {
            ++report.skipped;
            report.reasons.push_back("line " + std::to_string(line_no) + ": empty id");
            continue;
        }
        if (collapse_whitespace(doc.body).empty()) {
            ++report.skipped;
            report.reasons.push_back("line " + std::to_string(line_no) +
                                     ": empty abstract (id '" + doc.doc_id + "')");
            continue;
        }
        if (fields.size() >= 4 && !fields[3].empty()) {
            try {
                doc.year = std::stoi(fields[3]);
            } catch (const std::exception&) {
                ++report.skipped;
                report.reasons.push_back("line " + std::to_string(line_no) +
                                         ": bad year '" + fields[3] + "'");
                continue;
            }
        }
        corpus.add_document(std::move(doc));
        ++report.ingested;
    }
}

}  // namespace

Corpus ingest_corpus_text(std::string_view content, CorpusFormat format,
                          IngestReport* report) {
    Corpus corpus;
    IngestReport local;
    IngestReport& rep = report ? *report : local;
    if (format == CorpusFormat::jsonl) {
        ingest_jsonl(content, corpus, rep);
    } else {
        ingest_tsv(content, corpus, rep);
    }
    return corpus;
}

Corpus ingest_corpus(const std::filesystem::path& path, CorpusFormat format,
                     IngestReport* report) {
    return ingest_corpus_text(read_file(path), format, report);
}

std::string ContextBundle::joined(std::string_view sep) const {
    std::string out;
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        if (i) out += sep;
        out += snippets[i].second;
    }
    return out;
}

namespace {

// Truncate to a byte budget without splitting a UTF-8 sequence.
std::string truncate_utf8(const std::string& text, std::size_t max_bytes) {
    if (text.size() <= max_bytes) return text;
    std::size_t end = max_bytes;
    while (end > 0 && (static_cast<unsigned char>(text[end]) & 0xC0) == 0x80) --end;
    return text.substr(0, end);
}

}  // namespace

ContextBundle retrieve_by_entity(const Corpus& corpus, const std::string& entity,
                                 std::size_t max_docs, std::size_t max_chars) {
    ContextBundle bundle;
    bundle.query = normalize_surface(entity);
    if (corpus.empty() || max_docs == 0) return bundle;

    std::vector<std::string> query_tokens = token_texts(bundle.query);

    // Candidate docs from the index, then verified with a word-bounded scan.
    std::set<std::string> candidate_ids;
    if (!query_tokens.empty() && query_tokens.size() <= kMaxPhraseLen) {
        std::string term;
        for (std::size_t i = 0; i < query_tokens.size(); ++i) {
            if (i) term += ' ';
            term += query_tokens[i];
        }
        auto it = corpus.index().find(term);
        if (it != corpus.index().end())
            for (const auto& posting : it->second) candidate_ids.insert(posting.doc_id);
    } else if (!query_tokens.empty()) {
        for (std::size_t d = 0; d < corpus.size(); ++d)
            candidate_ids.insert(corpus.documents()[d].doc_id);
    }

    struct Ranked {
        std::size_t freq;
        std::string doc_id;
        std::size_t doc_index;
    };
    std::vector<Ranked> exact;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        const Document& doc = corpus.documents()[d];
        if (!candidate_ids.count(doc.doc_id)) continue;
        std::size_t freq = corpus.phrase_frequency(d, bundle.query);
        if (freq > 0) exact.push_back(Ranked{freq, doc.doc_id, d});
    }
    std::sort(exact.begin(), exact.end(), [](const Ranked& a, const Ranked& b) {
        if (a.freq != b.freq) return a.freq > b.freq;
        return a.doc_id < b.doc_id;
    });

    auto pack = [&](const std::vector<Ranked>& ranked, bool require_phrase) {
        std::size_t budget = max_chars;
        for (const Ranked& r : ranked) {
            if (bundle.snippets.size() >= max_docs || budget == 0) break;
            const std::string& body = corpus.documents()[r.doc_index].body;
            std::string text = truncate_utf8(body, budget);
            if (text.empty()) break;
            if (require_phrase &&
                count_phrase_occurrences(text, bundle.query) == 0)
                continue;
            budget -= text.size();
            bundle.total_chars += text.size();
            bundle.snippets.emplace_back(r.doc_id, std::move(text));
        }
    };

    if (!exact.empty()) {
        pack(exact, true);
        return bundle;
    }

    // Fallback: token-overlap ranking, flagged.
    std::set<std::string> query_set(query_tokens.begin(), query_tokens.end());
    std::vector<Ranked> overlap;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        const std::vector<std::string>& toks = corpus.doc_tokens(d);
        std::set<std::string> doc_set(toks.begin(), toks.end());
        std::size_t shared = 0;
        for (const std::string& q : query_set)
            if (doc_set.count(q)) ++shared;
        if (shared > 0)
            overlap.push_back(Ranked{shared, corpus.documents()[d].doc_id, d});
    }
    std::sort(overlap.begin(), overlap.end(), [](const Ranked& a, const Ranked& b) {
        if (a.freq != b.freq) return a.freq > b.freq;
        return a.doc_id < b.doc_id;
    });
    if (!overlap.empty()) {
        bundle.fallback_ranked = true;
        pack(overlap, false);
    }
    return bundle;
}

std::string corpus_to_json(const Corpus& corpus) {
    nlohmann::json root;
    root["format"] = "kgfuse-corpus";
    root["version"] = 1;
    nlohmann::json docs = nlohmann::json::array();
    for (const Document& doc : corpus.documents()) {
        nlohmann::json rec;
        rec["id"] = doc.doc_id;
        rec["title"] = doc.title;
        rec["abstract"] = doc.body;
        if (doc.year) rec["year"] = *doc.year;
        docs.push_back(std::move(rec));
    }
    root["documents"] = std::move(docs);
    return root.dump(2) + "\n";
}

Corpus corpus_from_json(const std::string& content) {
    nlohmann::json root = nlohmann::json::parse(content, nullptr, false);
    if (root.is_discarded() || !root.is_object())
        throw CorpusError("corpus file is not valid JSON");
    if (root.value("format", "") != std::string("kgfuse-corpus"))
        throw CorpusError("corpus file has unknown format tag");
    int version = root.value("version", 0);
    if (version != 1)
        throw CorpusError("unsupported corpus version " + std::to_string(version));
    Corpus corpus;
    for (const auto& rec : root.at("documents")) {
        Document doc;
        doc.doc_id = rec.at("id").get<std::string>();
        doc.title = rec.value("title", "");
        doc.body = rec.at("abstract").get<std::string>();
        if (rec.contains("year")) doc.year = rec["year"].get<int>();
        corpus.add_document(std::move(doc));
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    write_file(path, corpus_to_json(corpus));
}

Corpus load_corpus(const std::filesystem::path& path) {
    return corpus_from_json(read_file(path));
}

}  // namespace kgfuse
