#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ragmark/corpus.hpp"
#include "ragmark/embed.hpp"
#include "ragmark/qagen.hpp"

namespace ragmark {

/// Sentence-keyed (payload = the sentence) or question-keyed
/// (payload = the parent paragraph).
enum class IndexKind { sentences, questions };

std::string_view to_string(IndexKind kind);
IndexKind index_kind_from_string(std::string_view s);

struct IndexEntry {
    EmbeddingVector key_vector;
    std::string key_text;
    std::string payload_text;
    ParagraphRef paragraph_ref;

    bool operator==(const IndexEntry &o) const {
        return key_vector.values == o.key_vector.values && key_text == o.key_text &&
               payload_text == o.payload_text && paragraph_ref == o.paragraph_ref;
    }
};

/// Immutable once built. Key vectors are stored at float32 precision so a
/// saved index reloads bit-identically.
struct IndexedDataset {
    IndexKind kind = IndexKind::sentences;
    std::vector<IndexEntry> entries;
    std::string embedder_name;
    std::size_t dim = 0;

    bool operator==(const IndexedDataset &) const = default;
};

struct RetrievalHit {
    double score = 0.0;
    std::size_t entry = 0;

    bool operator==(const RetrievalHit &) const = default;
};

struct IndexBuild {
    IndexedDataset dataset;
    std::vector<std::string> warnings;
};

IndexBuild build_sentence_index(const std::vector<Sentence> &sentences, const Embedder &embedder);
IndexBuild build_question_index(const QADataset &qa, const Embedder &embedder);

/// Scores within this distance below the threshold still pass, so a
/// threshold of 1.0 accepts exact directional matches despite rounding.
inline constexpr double kScoreTolerance = 1e-9;

/// Exact scan. An entry passes when score >= threshold (up to
/// kScoreTolerance); threshold 0 passes every entry, negative scores included.
/// Hits are ordered by score descending, ties by insertion order.
std::vector<RetrievalHit> search(const IndexedDataset &ds, const EmbeddingVector &query, double threshold);

inline constexpr int kIndexFormatVersion = 1;

std::string serialize_index(const IndexedDataset &ds);
IndexedDataset parse_index(std::string_view contents);

void save_index(const IndexedDataset &ds, const std::filesystem::path &path);
IndexedDataset load_index(const std::filesystem::path &path);

} // namespace ragmark
