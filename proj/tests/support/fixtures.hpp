#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"

#include "ragmark/corpus.hpp"
#include "ragmark/embed.hpp"
#include "ragmark/index.hpp"
#include "ragmark/qagen.hpp"
#include "ragmark/testgen.hpp"

namespace fixtures {

// Three (or four) topics with disjoint vocabularies.
const std::vector<std::vector<std::string>> &topic_vocabularies();

// One sentence of `words` distinct words from topic `topic`, capitalized, ending in '.'.
std::string topic_sentence(std::size_t topic, std::size_t words, std::mt19937_64 &rng);

struct TopicSpec {
    std::size_t paragraphs = 2;
    std::size_t sentences_per_paragraph = 4;
    std::size_t min_words = 12;
    std::size_t max_words = 16;
};

// One document per topic, blank-line separated paragraphs.
std::vector<ragmark::Document> topic_corpus(std::uint64_t seed, const std::vector<TopicSpec> &topics);

// The standard desk-scale fixture: three topics of two 4-sentence paragraphs.
std::vector<ragmark::Document> three_topic_corpus(std::uint64_t seed = 7);

struct Pipeline {
    std::vector<ragmark::Paragraph> paragraphs;
    std::vector<ragmark::Sentence> sentences;
    ragmark::QADataset qa;
};

Pipeline ingest(const std::vector<ragmark::Document> &docs, const ragmark::QuestionGenClient &qg);

inline constexpr std::size_t kEmbedDim = 256;

// Three-topic corpus indexed both ways, with a clustered test set whose
// questions come from a different mock seed than the ID_q keys.
struct DeskScale {
    Pipeline pipeline;
    ragmark::IndexedDataset ds_s;
    ragmark::IndexedDataset ds_q;
    ragmark::TestSet testset;
};

DeskScale desk_scale(std::uint64_t corpus_seed = 7);

// Scratch directory removed on destruction.
class TempDir {
  public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;
    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

// httplib server on an ephemeral localhost port, serving on a background thread.
class MockServer {
  public:
    MockServer();
    ~MockServer();
    MockServer(const MockServer &) = delete;
    MockServer &operator=(const MockServer &) = delete;

    httplib::Server &server() { return server_; }
    // Binds and starts serving; call after registering handlers.
    void start();
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

  private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

// Every file under `root` with its size and content hash, for no-write checks.
std::vector<std::string> tree_snapshot(const std::filesystem::path &root);

} // namespace fixtures
