#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ragmark/http.hpp"

namespace ragmark {

struct GenerationRequest {
    std::string prompt;
    int max_new_tokens = 256;
    double temperature = 0.0;
    std::vector<std::string> stop_sequences;
};

/// Throws Error{invalid_argument} when max_new_tokens < 1 or temperature < 0.
void validate(const GenerationRequest &req);

struct GenerationUsage {
    std::size_t calls = 0;
    std::size_t failures = 0;
    double total_latency_ms = 0.0;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

/// Any text-generation endpoint. At temperature 0 repeated calls with the
/// same request must return the same text.
class GenerationClient {
  public:
    virtual ~GenerationClient() = default;
    virtual std::string name() const = 0;
    virtual std::string generate(const GenerationRequest &req) const = 0;
    virtual std::optional<GenerationUsage> usage() const { return std::nullopt; }
};

/// Marks the start of the retrieved-context block in a rendered prompt.
inline constexpr std::string_view kContextLabel = "Context:\n";
inline constexpr std::string_view kUnknownAnswer = "I do not know.";

/// First sentence of the prompt's context block, or kUnknownAnswer when the
/// prompt has none.
std::string generate_mock_extractive(const GenerationRequest &req);

class MockExtractiveGenerator final : public GenerationClient {
  public:
    std::string name() const override { return "mock:extractive"; }
    std::string generate(const GenerationRequest &req) const override;
};

/// Returns the prompt verbatim.
class EchoGenerator final : public GenerationClient {
  public:
    std::string name() const override { return "mock:echo"; }
    std::string generate(const GenerationRequest &req) const override;
};

struct RemoteGenConfig {
    std::string endpoint;
    http::Options http;
};

/// Client for POST /generate. Keeps call counts, latency and token usage.
class RemoteGenerationClient final : public GenerationClient {
  public:
    explicit RemoteGenerationClient(RemoteGenConfig config);

    std::string name() const override { return "http:" + config_.endpoint; }
    std::string generate(const GenerationRequest &req) const override;
    std::optional<GenerationUsage> usage() const override;

  private:
    RemoteGenConfig config_;
    mutable std::mutex mutex_;
    mutable GenerationUsage usage_;
};

std::string generate_remote(const GenerationRequest &req, const RemoteGenConfig &config);

} // namespace ragmark
