#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ragmark/corpus.hpp"
#include "ragmark/http.hpp"

namespace ragmark {

struct QAPair {
    std::string question;
    ParagraphRef paragraph_ref;
    std::string answer_text;
    // The question is the fallback, not a generator output.
    bool synthetic = false;

    bool operator==(const QAPair &) const = default;
};

struct QADataset {
    std::string name;
    std::vector<QAPair> pairs;

    std::size_t paragraph_count() const;
    std::size_t question_count() const { return pairs.size(); }
};

class QuestionGenClient {
  public:
    virtual ~QuestionGenClient() = default;
    virtual std::string name() const = 0;
    /// At most k questions about `text`.
    virtual std::vector<std::string> generate(const std::string &text, std::size_t k) const = 0;
};

/// Offline stand-in for a question generator: question i pairs a phrase from a
/// fixed pool (selected by seed + i) with sentence i of the passage. Clients
/// with seeds that differ by 5 (mod 10) never share a phrase when k <= 5.
class MockQuestionGenClient final : public QuestionGenClient {
  public:
    explicit MockQuestionGenClient(std::uint64_t seed = 0) : seed_(seed) {}

    std::string name() const override { return "mock-qg-" + std::to_string(seed_); }
    std::vector<std::string> generate(const std::string &text, std::size_t k) const override;

  private:
    std::uint64_t seed_;
};

struct HttpQgConfig {
    std::string endpoint;
    http::Options http;
};

/// Client for POST /generate_questions.
class HttpQuestionGenClient final : public QuestionGenClient {
  public:
    explicit HttpQuestionGenClient(HttpQgConfig config);

    std::string name() const override { return "http-qg:" + config_.endpoint; }
    std::vector<std::string> generate(const std::string &text, std::size_t k) const override;

  private:
    HttpQgConfig config_;
};

inline constexpr std::string_view kFallbackQuestion = "What does the following passage describe?";

/// Lowercase, collapse whitespace, strip terminal question marks.
std::string normalize_question(std::string_view question);

struct GeneratedQuestions {
    std::vector<std::string> questions;
    bool synthetic = false;
};

/// Deduplicated generator output, capped at k. A paragraph with no usable
/// question gets the fallback question with `synthetic` set. Client errors
/// are rethrown with the paragraph reference appended.
GeneratedQuestions generate_questions(const Paragraph &paragraph, const QuestionGenClient &client, std::size_t k = 5);

struct QaBuild {
    QADataset dataset;
    std::vector<ParagraphRef> skipped;
    std::vector<std::string> warnings;
};

QaBuild build_qa_dataset(const std::vector<Paragraph> &paragraphs, const QuestionGenClient &client,
                         std::size_t k = 5, std::size_t max_inflight = 4, std::string name = "qa");

struct TrainValidationSplit {
    QADataset train;
    QADataset validation;
    std::vector<std::string> warnings;
};

/// Validation pairs come only from paragraphs with at least two questions,
/// and every such paragraph keeps at least one question in train.
TrainValidationSplit split_train_validation(const QADataset &ds, double ratio, std::uint64_t seed);

json to_json(const QAPair &pair);
QAPair qa_pair_from_json(const json &j);

std::vector<json> to_jsonl(const QADataset &ds);
QADataset qa_dataset_from_jsonl(const std::vector<json> &records, std::string name = "qa");

} // namespace ragmark
