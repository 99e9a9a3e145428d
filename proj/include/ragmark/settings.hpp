#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ragmark/embed.hpp"
#include "ragmark/generate.hpp"
#include "ragmark/qagen.hpp"
#include "ragmark/retrieve.hpp"
#include "ragmark/testgen.hpp"

namespace ragmark {

struct ConfigKey {
    std::string key;
    std::string module;
    std::string default_value;
    std::string description;
};

/// Every recognised key, each owned by exactly one module.
const std::vector<ConfigKey> &config_registry();

/// Flat `key = value` configuration. Lines starting with '#' are comments.
/// Lookups fall back to the registry default and are recorded so callers can
/// check which keys a run actually consumed.
class Config {
  public:
    Config() = default;
    Config(const Config &other);
    Config &operator=(const Config &other);

    static Config parse(std::string_view contents);
    static Config from_file(const std::filesystem::path &path);

    /// Throws Error{config} for a key missing from the registry.
    void set(const std::string &key, const std::string &value);
    bool is_set(const std::string &key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string &key) const;
    double get_double(const std::string &key) const;
    long get_int(const std::string &key) const;
    bool get_bool(const std::string &key) const;

    std::set<std::string> consumed() const;
    const std::map<std::string, std::string> &explicit_values() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
    mutable std::mutex mutex_;
    mutable std::set<std::string> consumed_;
};

// Per-module builders. Each reads only keys of its own module.

struct CorpusSettings {
    std::size_t paragraph_budget = 256;
    int min_words = 10;
    int max_words = 30;
};
CorpusSettings corpus_settings(const Config &cfg);

struct QaSettings {
    std::size_t k = 5;
    std::size_t max_inflight = 4;
    double validation_ratio = 0.2;
    std::uint64_t split_seed = 0;
};
QaSettings qa_settings(const Config &cfg);
/// Remote client when qg.endpoint is set, otherwise the seeded mock.
std::unique_ptr<QuestionGenClient> make_question_client(const Config &cfg);

/// Remote client when embed.endpoint is set, otherwise the local hashed embedder.
std::unique_ptr<Embedder> make_embedder(const Config &cfg);

struct GenSettings {
    std::size_t max_inflight = 2;
    int max_new_tokens = 256;
    double temperature = 0.0;
};
GenSettings gen_settings(const Config &cfg);
/// "mock:extractive" and "mock:echo" select the offline generators.
std::unique_ptr<GenerationClient> make_generation_client(const Config &cfg);

/// Budgets and template; generation settings are filled in from `gen`.
RagSettings rag_settings(const Config &cfg, const GenSettings &gen);

TestGenParams testgen_params(const Config &cfg);

} // namespace ragmark
