#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ragmark/embed.hpp"
#include "ragmark/jsonl.hpp"

namespace ragmark {

struct ScoreRow {
    std::string question_id;
    double rouge = 0.0;
    double meteor = 0.0;
    double bleu = 0.0;
    double cs = 0.0;
    double rouge1_recall = 0.0;

    bool operator==(const ScoreRow &) const = default;
};

/// Lowercased word and punctuation tokens; the tokenization every text
/// metric here shares.
std::vector<std::string> metric_tokens(std::string_view s);

/// Sentence-level BLEU against one reference. Levels where the candidate has
/// no n-grams are left out of the geometric mean; a level with n-grams but no
/// matches contributes a precision of kBleuPrecisionFloor.
double bleu(std::string_view candidate, std::string_view reference, int max_n = 4);

inline constexpr double kBleuPrecisionFloor = 1e-9;

struct RougeScores {
    double lcs_f1 = 0.0;
    double rouge1_recall = 0.0;
};

RougeScores rouge_scores(std::string_view candidate, std::string_view reference);

/// ROUGE-L F1.
inline double rouge(std::string_view candidate, std::string_view reference) {
    return rouge_scores(candidate, reference).lcs_f1;
}

/// Strips one of -ing, -es, -ed, -ly, -s (first that applies) when at least
/// three characters remain.
std::string meteor_stem(std::string_view word);

struct MeteorDetail {
    std::size_t matches = 0;
    std::size_t chunks = 0;
    double precision = 0.0;
    double recall = 0.0;
    double fmean = 0.0;
    double penalty = 0.0;
    double score = 0.0;
};

/// Exact-then-stem unigram alignment, F_mean = 10PR / (R + 9P),
/// penalty = 0.5 (chunks / m)^3. No synonym stage.
MeteorDetail meteor_detail(std::string_view candidate, std::string_view reference);

inline double meteor(std::string_view candidate, std::string_view reference) {
    return meteor_detail(candidate, reference).score;
}

/// Pairwise cosines between generated sentences (rows) and reference
/// sentences (columns). Pairs involving a sentence that embeds to zero score 0.
struct CsMatrix {
    std::vector<std::string> g_sentences;
    std::vector<std::string> r_sentences;
    std::vector<std::vector<double>> values;
};

CsMatrix cs_matrix(std::string_view generated, std::string_view reference, const Embedder &embedder);

/// Mean over generated sentences of the best cosine against any reference
/// sentence. Throws Error{empty_reference} when the reference has no
/// sentences; returns 0 (with a warning) when the generated text has none.
double cs_score(std::string_view generated, std::string_view reference, const Embedder &embedder,
                std::vector<std::string> *warnings = nullptr);

/// All four scores. Never throws for bad text: an empty generation gives a
/// zero row, and a failing CS computation leaves cs at 0, each with a warning.
ScoreRow score_row(std::string question_id, std::string_view generated, std::string_view reference,
                   const Embedder &embedder, std::vector<std::string> *warnings = nullptr);

inline constexpr std::string_view kScoreCsvHeader = "question_id,rouge,meteor,bleu,cs";

std::string rows_to_csv(const std::vector<ScoreRow> &rows);
std::vector<ScoreRow> rows_from_csv(std::string_view csv);

json to_json(const ScoreRow &row);
ScoreRow score_row_from_json(const json &j);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

/// Minimal RFC 4180 helpers shared by the CSV writers.
std::string csv_quote(std::string_view field);
std::vector<std::vector<std::string>> parse_csv(std::string_view csv);

} // namespace ragmark
