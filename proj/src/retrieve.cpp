#include "ragmark/retrieve.hpp"

#include <unordered_set>

#include "ragmark/text.hpp"

namespace ragmark {

PackedContext pack_context(const std::vector<RetrievalHit> &hits, const IndexedDataset &ds,
                           const CounterSet &counters, std::size_t budget) {
    if (budget < 1) throw Error(ErrorCode::invalid_argument, "context budget must be >= 1");
    PackedContext ctx;
    std::vector<std::string> parts;
    std::unordered_set<std::string_view> seen;
    std::size_t used = 0;
    for (const auto &hit : hits) {
        if (hit.entry >= ds.entries.size()) throw Error(ErrorCode::invalid_argument, "hit refers past the index");
        ++ctx.hits_consumed;
        const std::string &payload = ds.entries[hit.entry].payload_text;
        if (!seen.insert(payload).second) continue;
        const std::size_t sep = parts.empty() ? 0 : 1;
        const std::size_t cost = max_token_count(counters, payload);
        if (used + sep + cost <= budget) {
            parts.push_back(payload);
            ctx.included.push_back(hit);
            used += sep + cost;
            continue;
        }
        ctx.truncated = true;
        if (used + sep < budget) {
            auto piece = text::trim(truncate_to_budget(payload, counters, budget - used - sep));
            if (!piece.empty()) {
                parts.push_back(std::move(piece));
                ctx.included.push_back(hit);
            }
        }
        break;
    }
    ctx.text = text::join(parts, "\n");
    ctx.token_count = max_token_count(counters, ctx.text);
    if (ctx.token_count > budget) {
        // Only reachable with counters that are not additive over line breaks.
        ctx.text = text::trim(truncate_to_budget(ctx.text, counters, budget));
        ctx.token_count = max_token_count(counters, ctx.text);
        ctx.truncated = true;
    }
    return ctx;
}

namespace {

constexpr std::string_view kContextSlot = "{context}";
constexpr std::string_view kQuestionSlot = "{question}";

void replace_all(std::string &s, std::string_view from, std::string_view to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
}

std::string drop_context_block(const std::string &tpl) {
    const auto slot = tpl.find(kContextSlot);
    auto begin = tpl.rfind("\n\n", slot);
    begin = begin == std::string::npos ? 0 : begin;
    auto end = tpl.find("\n\n", slot);
    if (begin == 0) {
        end = end == std::string::npos ? tpl.size() : end + 2;
        return tpl.substr(end);
    }
    return tpl.substr(0, begin) + (end == std::string::npos ? std::string() : tpl.substr(end));
}

} // namespace

PromptTemplate::PromptTemplate(std::string tpl) : tpl_(std::move(tpl)) {
    if (tpl_.find(kContextSlot) == std::string::npos || tpl_.find(kQuestionSlot) == std::string::npos)
        throw Error(ErrorCode::config, "prompt template needs both {context} and {question}");
    no_context_ = drop_context_block(tpl_);
    if (no_context_.find(kQuestionSlot) == std::string::npos)
        throw Error(ErrorCode::config, "{question} must not share a blank-line block with {context}");
}

PromptTemplate PromptTemplate::from_file(const std::filesystem::path &path) { return PromptTemplate(read_file(path)); }

std::string PromptTemplate::fill(std::string_view tpl, std::string_view context, std::string_view question) const {
    // Substitute the question last so question text containing "{context}" is left alone.
    std::string out(tpl);
    replace_all(out, kContextSlot, context);
    replace_all(out, kQuestionSlot, question);
    return out;
}

std::string PromptTemplate::render(std::string_view context, std::string_view question) const {
    if (context.empty()) return fill(no_context_, "", question);
    return fill(tpl_, context, question);
}

std::size_t PromptTemplate::overhead_tokens(std::string_view question, const CounterSet &counters) const {
    return max_token_count(counters, fill(tpl_, "", question));
}

RagAnswer prepare_answer(const std::string &question, const EmbeddingVector &query, const IndexedDataset &ds,
                         double threshold, const RagSettings &settings) {
    const auto &b = settings.budgets;
    if (b.answer_reserve >= b.model_max_input)
        throw Error(ErrorCode::config, "answer_reserve leaves no room in model_max_input");
    const std::size_t prompt_limit = b.model_max_input - b.answer_reserve;

    RagAnswer ans;
    ans.question = question;
    ans.threshold = threshold;
    ans.dataset_kind = ds.kind;
    ans.hits = search(ds, query, threshold);

    const auto &tpl = settings.prompt_template;
    const std::size_t overhead = tpl.overhead_tokens(question, settings.counters);
    std::size_t budget = overhead < prompt_limit ? prompt_limit - overhead : 0;
    while (true) {
        ans.context = budget > 0 ? pack_context(ans.hits, ds, settings.counters, budget) : PackedContext{};
        ans.prompt = tpl.render(ans.context.text, question);
        const std::size_t used = max_token_count(settings.counters, ans.prompt);
        if (used <= prompt_limit) break;
        if (ans.context.text.empty())
            throw Error(ErrorCode::invalid_argument, "question alone exceeds the model input budget");
        const std::size_t excess = used - prompt_limit;
        budget = budget > excess ? budget - excess : 0;
    }
    return ans;
}

void complete_answer(RagAnswer &ans, const GenerationClient &gen, const RagSettings &settings) {
    GenerationRequest req;
    req.prompt = ans.prompt;
    req.max_new_tokens = settings.max_new_tokens;
    req.temperature = settings.temperature;
    try {
        ans.generated_text = gen.generate(req);
    } catch (const Error &e) {
        throw GenerationFailure(e, ans);
    }
}

RagAnswer answer(const std::string &question, const IndexedDataset &ds, double threshold, const Embedder &embedder,
                 const GenerationClient &gen, const RagSettings &settings) {
    auto query = embedder.embed(question);
    if (query.is_zero()) throw Error(ErrorCode::zero_vector, "question embeds to a zero vector");
    auto ans = prepare_answer(question, query, ds, threshold, settings);
    complete_answer(ans, gen, settings);
    return ans;
}

} // namespace ragmark
