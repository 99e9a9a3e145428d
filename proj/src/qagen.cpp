#include "ragmark/qagen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <unordered_set>

#include "ragmark/error.hpp"
#include "ragmark/parallel.hpp"
#include "ragmark/random.hpp"
#include "ragmark/text.hpp"

namespace ragmark {

std::size_t QADataset::paragraph_count() const {
    std::set<ParagraphRef> refs;
    for (const auto &p : pairs) refs.insert(p.paragraph_ref);
    return refs.size();
}

namespace {

constexpr std::string_view kMockPhrases[] = {
    "What is known about the claim that",
    "Explain why",
    "Describe how",
    "What evidence supports the statement that",
    "Summarize the point that",
    "Why is it stated that",
    "How does the text justify that",
    "What follows from the observation that",
    "In what context is it said that",
    "What is the significance of the remark that",
};

std::string question_body(std::string sentence) {
    while (!sentence.empty() && (sentence.back() == '.' || sentence.back() == '!' || sentence.back() == '?'))
        sentence.pop_back();
    sentence = text::trim(sentence);
    if (sentence.size() > 1 && std::isupper(static_cast<unsigned char>(sentence[0])) &&
        !std::isupper(static_cast<unsigned char>(sentence[1])))
        sentence[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(sentence[0])));
    return sentence;
}

std::string ref_string(const ParagraphRef &ref) { return ref.doc_id + "#" + std::to_string(ref.ordinal); }

} // namespace

std::vector<std::string> MockQuestionGenClient::generate(const std::string &text, std::size_t k) const {
    auto sentences = split_sentences(text);
    if (sentences.empty()) return {};
    constexpr std::size_t pool = std::size(kMockPhrases);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) {
        const auto &phrase = kMockPhrases[(seed_ + i) % pool];
        out.push_back(std::string(phrase) + " " + question_body(sentences[i % sentences.size()]) + "?");
    }
    return out;
}

HttpQuestionGenClient::HttpQuestionGenClient(HttpQgConfig config) : config_(std::move(config)) {
    http::validate(config_.http);
    if (config_.endpoint.empty()) throw Error(ErrorCode::config, "qg.endpoint is empty");
}

std::vector<std::string> HttpQuestionGenClient::generate(const std::string &text, std::size_t k) const {
    const auto res = http::post_json(config_.endpoint, "/generate_questions", json{{"text", text}, {"k", k}},
                                     config_.http);
    if (!res.contains("questions") || !res["questions"].is_array())
        throw Error(ErrorCode::malformed_response, "/generate_questions response lacks 'questions'");
    std::vector<std::string> out;
    for (const auto &q : res["questions"]) {
        if (!q.is_string()) throw Error(ErrorCode::malformed_response, "non-string question");
        out.push_back(q.get<std::string>());
    }
    return out;
}

std::string normalize_question(std::string_view question) {
    auto q = text::normalize_whitespace(text::to_lower(question));
    while (!q.empty() && q.back() == '?') q.pop_back();
    return text::trim(q);
}

GeneratedQuestions generate_questions(const Paragraph &paragraph, const QuestionGenClient &client, std::size_t k) {
    if (k < 1) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
    std::vector<std::string> raw;
    try {
        raw = client.generate(paragraph.text, k);
    } catch (const Error &e) {
        throw Error(e.code(), std::string(e.what()) + " [paragraph " +
                                  ref_string({paragraph.doc_id, paragraph.ordinal}) + "]");
    }
    GeneratedQuestions out;
    std::unordered_set<std::string> seen;
    for (const auto &q : raw) {
        const auto key = normalize_question(q);
        if (key.empty() || !seen.insert(key).second) continue;
        out.questions.push_back(text::trim(q));
        if (out.questions.size() == k) break;
    }
    if (out.questions.empty()) {
        out.questions.emplace_back(kFallbackQuestion);
        out.synthetic = true;
    }
    return out;
}

QaBuild build_qa_dataset(const std::vector<Paragraph> &paragraphs, const QuestionGenClient &client, std::size_t k,
                         std::size_t max_inflight, std::string name) {
    if (paragraphs.empty()) throw Error(ErrorCode::invalid_argument, "no paragraphs to generate questions for");
    std::vector<std::optional<GeneratedQuestions>> results(paragraphs.size());
    std::vector<std::string> failures(paragraphs.size());
    parallel_for_bounded(paragraphs.size(), max_inflight, [&](std::size_t i) {
        try {
            results[i] = generate_questions(paragraphs[i], client, k);
        } catch (const Error &e) {
            failures[i] = e.what();
        }
    });

    QaBuild build;
    build.dataset.name = std::move(name);
    for (std::size_t i = 0; i < paragraphs.size(); ++i) {
        const auto &p = paragraphs[i];
        const ParagraphRef ref{p.doc_id, p.ordinal};
        if (!results[i]) {
            build.skipped.push_back(ref);
            build.warnings.push_back("skipped paragraph " + ref_string(ref) + ": " + failures[i]);
            continue;
        }
        if (results[i]->synthetic) build.warnings.push_back("synthetic fallback question for " + ref_string(ref));
        for (const auto &q : results[i]->questions)
            build.dataset.pairs.push_back({q, ref, p.text, results[i]->synthetic});
    }
    if (build.skipped.size() == paragraphs.size())
        throw Error(ErrorCode::all_paragraphs_skipped, "question generation failed for every paragraph");
    return build;
}

TrainValidationSplit split_train_validation(const QADataset &ds, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorCode::invalid_argument, "ratio must lie in (0, 1)");

    std::map<ParagraphRef, std::size_t> per_paragraph;
    for (const auto &p : ds.pairs) ++per_paragraph[p.paragraph_ref];

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < ds.pairs.size(); ++i)
        if (per_paragraph[ds.pairs[i].paragraph_ref] >= 2) eligible.push_back(i);
    if (eligible.empty()) throw Error(ErrorCode::no_eligible_pairs, "no paragraph has two or more questions");

    std::size_t capacity = 0;
    for (const auto &[ref, n] : per_paragraph)
        if (n >= 2) capacity += n - 1;

    TrainValidationSplit split;
    auto target = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(ds.pairs.size())));
    if (capacity < target) {
        split.warnings.push_back("eligible pool holds " + std::to_string(capacity) + " pairs, fewer than the " +
                                 std::to_string(target) + " requested; using the whole pool");
        target = capacity;
    }

    std::mt19937_64 rng(seed);
    seeded_shuffle(eligible, rng);
    std::map<ParagraphRef, std::size_t> taken;
    std::vector<bool> in_validation(ds.pairs.size(), false);
    std::size_t chosen = 0;
    for (std::size_t idx : eligible) {
        if (chosen == target) break;
        const auto &ref = ds.pairs[idx].paragraph_ref;
        if (taken[ref] + 1 >= per_paragraph[ref]) continue;
        ++taken[ref];
        in_validation[idx] = true;
        ++chosen;
    }

    split.train.name = ds.name + ".train";
    split.validation.name = ds.name + ".validation";
    for (std::size_t i = 0; i < ds.pairs.size(); ++i)
        (in_validation[i] ? split.validation : split.train).pairs.push_back(ds.pairs[i]);
    return split;
}

json to_json(const QAPair &pair) {
    json j{{"question", pair.question},
           {"doc_id", pair.paragraph_ref.doc_id},
           {"paragraph_ordinal", pair.paragraph_ref.ordinal},
           {"answer_text", pair.answer_text}};
    if (pair.synthetic) j["synthetic"] = true;
    return j;
}

QAPair qa_pair_from_json(const json &j) {
    try {
        QAPair p;
        p.question = j.at("question").get<std::string>();
        p.paragraph_ref.doc_id = j.at("doc_id").get<std::string>();
        p.paragraph_ref.ordinal = j.at("paragraph_ordinal").get<int>();
        p.answer_text = j.at("answer_text").get<std::string>();
        p.synthetic = j.value("synthetic", false);
        return p;
    } catch (const json::exception &e) {
        throw Error(ErrorCode::malformed_file, std::string("QA record: ") + e.what());
    }
}

std::vector<json> to_jsonl(const QADataset &ds) {
    std::vector<json> out;
    out.reserve(ds.pairs.size());
    for (const auto &p : ds.pairs) out.push_back(to_json(p));
    return out;
}

QADataset qa_dataset_from_jsonl(const std::vector<json> &records, std::string name) {
    QADataset ds;
    ds.name = std::move(name);
    for (const auto &r : records) ds.pairs.push_back(qa_pair_from_json(r));
    return ds;
}

} // namespace ragmark
