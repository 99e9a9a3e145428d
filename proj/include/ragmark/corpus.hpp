#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ragmark/jsonl.hpp"

namespace ragmark {

struct ParagraphRef {
    std::string doc_id;
    int ordinal = 0;

    auto operator<=>(const ParagraphRef &) const = default;
};

struct Document {
    std::string id;
    std::string title;
    std::string body;
    std::map<std::string, std::string> source_meta;
};

struct Paragraph {
    std::string doc_id;
    int ordinal = 0;
    std::string text;
    int token_count = 0;
    // Set when an oversize sentence had to be cut at a token boundary.
    bool hard_split = false;
};

/// `ordinal` counts sentences within their paragraph.
struct Sentence {
    std::string doc_id;
    int paragraph_ordinal = 0;
    int ordinal = 0;
    std::string text;
    int word_count = 0;
};

class TokenCounter {
  public:
    virtual ~TokenCounter() = default;
    virtual std::string name() const = 0;
    virtual std::size_t count(std::string_view text) const = 0;
};

/// Word-character runs count as one token each, every ASCII punctuation mark
/// counts as one token.
class WhitespacePunctCounter final : public TokenCounter {
  public:
    std::string name() const override { return "whitespace_punct"; }
    std::size_t count(std::string_view text) const override;
};

using CounterSet = std::vector<std::shared_ptr<const TokenCounter>>;

CounterSet default_counters();

/// The largest count any registered counter reports.
std::size_t max_token_count(const CounterSet &counters, std::string_view text);

/// Longest prefix of `text`, cut at a token boundary, whose max-over-counters
/// count is within `budget`. With `whitespace_cuts` the cut is placed at a
/// token end followed by whitespace when any such prefix fits.
std::string truncate_to_budget(std::string_view text, const CounterSet &counters,
                               std::size_t budget, bool whitespace_cuts = false);

// CORD-19 ingestion ---------------------------------------------------------

enum class Cord19Reject { malformed, missing_abstract, not_pmc, missing_arxiv_id, latex_detected };

std::string_view to_string(Cord19Reject reason);

struct Cord19Rejection {
    std::size_t index = 0;
    std::string paper_id;
    Cord19Reject reason = Cord19Reject::malformed;
};

struct Cord19FilterResult {
    std::vector<Document> documents;
    std::vector<Cord19Rejection> rejections;
};

/// Markers whose presence in a body marks it as LaTeX source.
const std::vector<std::string> &latex_markers();

/// Keeps records that have an abstract, belong to PubMed Central, carry an
/// arXiv id, and contain no LaTeX markers. `records` must be a JSON array;
/// any element that cannot be read is rejected as malformed.
Cord19FilterResult filter_cord19(const json &records);

/// Inverse of the document mapping performed by filter_cord19.
json to_cord19_record(const Document &doc);

Document load_text_document(const std::filesystem::path &path);

// Splitting ----------------------------------------------------------------

/// Blank-line paragraphs, further split at sentence boundaries (and as a last
/// resort at token boundaries) until every piece fits `budget` under every
/// counter.
std::vector<Paragraph> split_paragraphs(const Document &doc, const CounterSet &counters,
                                        std::size_t budget = 256);

/// Records the ordinals of hard-split paragraphs under source_meta["hard_split"].
void flag_hard_splits(Document &doc, const std::vector<Paragraph> &paragraphs);

std::vector<std::string> split_sentences(std::string_view text);

std::vector<Sentence> extract_sentences(const std::vector<Paragraph> &paragraphs);

/// Keeps sentences whose word count lies in the closed range [min_words, max_words].
std::vector<Sentence> filter_sentences(const std::vector<Sentence> &sentences, int min_words = 10,
                                       int max_words = 30);

json to_json(const Paragraph &p);
json to_json(const Sentence &s);
Paragraph paragraph_from_json(const json &j);
Sentence sentence_from_json(const json &j);

} // namespace ragmark
