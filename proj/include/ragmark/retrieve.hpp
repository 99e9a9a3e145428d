#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ragmark/corpus.hpp"
#include "ragmark/embed.hpp"
#include "ragmark/error.hpp"
#include "ragmark/generate.hpp"
#include "ragmark/index.hpp"

namespace ragmark {

struct PackedContext {
    std::string text;
    /// Hits whose payload made it into `text`, in packing order.
    std::vector<RetrievalHit> included;
    /// Length of the prefix of the hit list that was examined.
    std::size_t hits_consumed = 0;
    bool truncated = false;
    std::size_t token_count = 0;
};

/// Joins payloads with '\n' in hit order, skipping repeated payloads. Each
/// separator is charged one token. The first payload that does not fit is cut
/// at a token boundary to use up the remaining budget and packing stops there.
PackedContext pack_context(const std::vector<RetrievalHit> &hits, const IndexedDataset &ds,
                           const CounterSet &counters, std::size_t budget);

inline constexpr std::string_view kDefaultPromptTemplate = "Context:\n{context}\n\nQuestion: {question}\nAnswer:";

/// A prompt with `{context}` and `{question}` placeholders. With an empty
/// context the blank-line-delimited block holding `{context}` is dropped.
class PromptTemplate {
  public:
    PromptTemplate() : PromptTemplate(std::string(kDefaultPromptTemplate)) {}
    explicit PromptTemplate(std::string tpl);
    static PromptTemplate from_file(const std::filesystem::path &path);

    std::string render(std::string_view context, std::string_view question) const;
    /// Tokens the prompt costs besides the context itself.
    std::size_t overhead_tokens(std::string_view question, const CounterSet &counters) const;

    const std::string &source() const { return tpl_; }

  private:
    std::string fill(std::string_view tpl, std::string_view context, std::string_view question) const;

    std::string tpl_;
    std::string no_context_;
};

struct Budgets {
    std::size_t model_max_input = 4096;
    std::size_t answer_reserve = 256;
};

struct RagAnswer {
    std::string question;
    std::vector<RetrievalHit> hits;
    PackedContext context;
    std::string prompt;
    std::optional<std::string> generated_text;
    double threshold = 0.0;
    IndexKind dataset_kind = IndexKind::sentences;
};

/// Raised when generation fails; the retrieval artifacts stay available.
class GenerationFailure : public Error {
  public:
    GenerationFailure(const Error &cause, RagAnswer partial)
        : Error(ErrorCode::generation_failed, cause.what()), cause_code_(cause.code()), partial_(std::move(partial)) {}

    ErrorCode cause_code() const noexcept { return cause_code_; }
    const RagAnswer &partial() const noexcept { return partial_; }

  private:
    ErrorCode cause_code_;
    RagAnswer partial_;
};

struct RagSettings {
    Budgets budgets;
    PromptTemplate prompt_template;
    CounterSet counters = default_counters();
    int max_new_tokens = 256;
    double temperature = 0.0;
};

/// Retrieval and prompt assembly only: search, pack within the budget left
/// after the template, the question and the answer reserve, then render.
RagAnswer prepare_answer(const std::string &question, const EmbeddingVector &query, const IndexedDataset &ds,
                         double threshold, const RagSettings &settings);

/// Full pipeline: embed, search, pack, render, generate.
RagAnswer answer(const std::string &question, const IndexedDataset &ds, double threshold, const Embedder &embedder,
                 const GenerationClient &gen, const RagSettings &settings = {});

/// Generation step for an already prepared answer.
void complete_answer(RagAnswer &ans, const GenerationClient &gen, const RagSettings &settings);

} // namespace ragmark
