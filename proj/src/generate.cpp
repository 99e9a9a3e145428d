#include "ragmark/generate.hpp"

#include <chrono>

#include "ragmark/corpus.hpp"
#include "ragmark/error.hpp"

namespace ragmark {

void validate(const GenerationRequest &req) {
    if (req.max_new_tokens < 1) throw Error(ErrorCode::invalid_argument, "max_new_tokens must be >= 1");
    if (!(req.temperature >= 0.0)) throw Error(ErrorCode::invalid_argument, "temperature must be >= 0");
}

namespace {

std::string apply_stops(std::string text, const std::vector<std::string> &stops) {
    std::size_t cut = text.size();
    for (const auto &s : stops)
        if (!s.empty()) cut = std::min(cut, text.find(s));
    text.resize(std::min(cut, text.size()));
    return text;
}

} // namespace

std::string generate_mock_extractive(const GenerationRequest &req) {
    const auto &prompt = req.prompt;
    const auto at = prompt.find(kContextLabel);
    if (at == std::string::npos) return std::string(kUnknownAnswer);
    const auto begin = at + kContextLabel.size();
    auto end = prompt.find("\n\n", begin);
    if (end == std::string::npos) end = prompt.size();
    const auto sentences = split_sentences(std::string_view(prompt).substr(begin, end - begin));
    if (sentences.empty()) return std::string(kUnknownAnswer);
    return apply_stops(sentences.front(), req.stop_sequences);
}

std::string MockExtractiveGenerator::generate(const GenerationRequest &req) const {
    validate(req);
    return generate_mock_extractive(req);
}

std::string EchoGenerator::generate(const GenerationRequest &req) const {
    validate(req);
    return req.prompt;
}

RemoteGenerationClient::RemoteGenerationClient(RemoteGenConfig config) : config_(std::move(config)) {
    http::validate(config_.http);
    if (config_.endpoint.empty()) throw Error(ErrorCode::config, "gen.endpoint is empty");
}

std::string RemoteGenerationClient::generate(const GenerationRequest &req) const {
    validate(req);
    const json body{{"prompt", req.prompt},
                    {"max_new_tokens", req.max_new_tokens},
                    {"temperature", req.temperature},
                    {"stop", req.stop_sequences}};
    const WhitespacePunctCounter counter;
    const auto started = std::chrono::steady_clock::now();
    auto record = [&](bool ok, std::size_t completion_tokens) {
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        std::lock_guard lock(mutex_);
        ++usage_.calls;
        if (!ok) ++usage_.failures;
        usage_.total_latency_ms += ms;
        usage_.prompt_tokens += counter.count(req.prompt);
        usage_.completion_tokens += completion_tokens;
    };
    json res;
    try {
        res = http::post_json(config_.endpoint, "/generate", body, config_.http);
        if (!res.contains("text") || !res["text"].is_string())
            throw Error(ErrorCode::malformed_response, "/generate response lacks 'text'");
    } catch (...) {
        record(false, 0);
        throw;
    }
    auto text = res["text"].get<std::string>();
    record(true, counter.count(text));
    return text;
}

std::optional<GenerationUsage> RemoteGenerationClient::usage() const {
    std::lock_guard lock(mutex_);
    return usage_;
}

std::string generate_remote(const GenerationRequest &req, const RemoteGenConfig &config) {
    return RemoteGenerationClient(config).generate(req);
}

} // namespace ragmark
