#include "fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ragmark/random.hpp"
#include "ragmark/text.hpp"

namespace fixtures {

const std::vector<std::vector<std::string>> &topic_vocabularies() {
    static const std::vector<std::vector<std::string>> vocab{
        {"galaxy", "nebula", "telescope", "orbit", "comet", "planet", "stellar", "quasar",
         "pulsar", "asteroid", "meteor", "lunar", "solar", "eclipse", "cosmic", "gravity",
         "photon", "spectrum", "redshift", "supernova", "rocket", "satellite", "crater", "horizon"},
        {"flour", "butter", "sugar", "oven", "whisk", "dough", "pastry", "simmer",
         "garlic", "onion", "pepper", "ladle", "skillet", "broth", "sauce", "knead",
         "yeast", "bake", "recipe", "spice", "vanilla", "cream", "batter", "grill"},
        {"coral", "reef", "tide", "kelp", "dolphin", "whale", "shark", "plankton",
         "lagoon", "current", "salinity", "estuary", "mangrove", "seabed", "trench", "anemone",
         "octopus", "squid", "urchin", "sponge", "harbor", "buoy", "tsunami", "shoal"},
        {"violin", "cello", "melody", "rhythm", "tempo", "chord", "sonata", "choir",
         "trumpet", "oboe", "harmony", "concerto", "lyric", "octave", "ballad", "drummer",
         "piano", "flute", "overture", "refrain", "chorus", "anthem", "cadence", "bassoon"},
    };
    return vocab;
}

std::string topic_sentence(std::size_t topic, std::size_t words, std::mt19937_64 &rng) {
    auto pool = topic_vocabularies().at(topic);
    if (words > pool.size()) throw std::invalid_argument("sentence longer than the topic vocabulary");
    ragmark::seeded_shuffle(pool, rng);
    pool.resize(words);
    pool.front()[0] = static_cast<char>(pool.front()[0] - 'a' + 'A');
    return ragmark::text::join(pool, " ") + ".";
}

std::vector<ragmark::Document> topic_corpus(std::uint64_t seed, const std::vector<TopicSpec> &topics) {
    std::mt19937_64 rng(seed);
    std::vector<ragmark::Document> docs;
    for (std::size_t t = 0; t < topics.size(); ++t) {
        const auto &spec = topics[t];
        std::vector<std::string> paragraphs;
        for (std::size_t p = 0; p < spec.paragraphs; ++p) {
            std::vector<std::string> sentences;
            for (std::size_t s = 0; s < spec.sentences_per_paragraph; ++s) {
                const auto span = spec.max_words - spec.min_words + 1;
                const auto words = spec.min_words + ragmark::uniform_below(rng, span);
                sentences.push_back(topic_sentence(t, words, rng));
            }
            paragraphs.push_back(ragmark::text::join(sentences, " "));
        }
        ragmark::Document d;
        d.id = "topic" + std::to_string(t);
        d.title = topic_vocabularies()[t].front();
        d.body = ragmark::text::join(paragraphs, "\n\n");
        docs.push_back(std::move(d));
    }
    return docs;
}

std::vector<ragmark::Document> three_topic_corpus(std::uint64_t seed) {
    return topic_corpus(seed, {TopicSpec{}, TopicSpec{}, TopicSpec{}});
}

Pipeline ingest(const std::vector<ragmark::Document> &docs, const ragmark::QuestionGenClient &qg) {
    Pipeline p;
    const auto counters = ragmark::default_counters();
    for (const auto &d : docs) {
        auto paragraphs = ragmark::split_paragraphs(d, counters);
        p.paragraphs.insert(p.paragraphs.end(), paragraphs.begin(), paragraphs.end());
    }
    p.sentences = ragmark::filter_sentences(ragmark::extract_sentences(p.paragraphs));
    p.qa = ragmark::build_qa_dataset(p.paragraphs, qg).dataset;
    return p;
}

DeskScale desk_scale(std::uint64_t corpus_seed) {
    DeskScale d;
    d.pipeline = ingest(three_topic_corpus(corpus_seed), ragmark::MockQuestionGenClient(0));
    const ragmark::LocalTestEmbedder embedder(kEmbedDim);
    d.ds_s = ragmark::build_sentence_index(d.pipeline.sentences, embedder).dataset;
    d.ds_q = ragmark::build_question_index(d.pipeline.qa, embedder).dataset;
    d.testset = ragmark::assemble_test_set(d.ds_s, ragmark::PcaReducer{}, ragmark::DbscanClusterer{},
                                           ragmark::default_counters(), ragmark::MockQuestionGenClient(5));
    return d;
}

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("ragmark-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

MockServer::MockServer() = default;

void MockServer::start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("mock server could not bind");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
}

MockServer::~MockServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
}

std::vector<std::string> tree_snapshot(const std::filesystem::path &root) {
    std::vector<std::string> out;
    for (const auto &e : std::filesystem::recursive_directory_iterator(root)) {
        std::string line = std::filesystem::relative(e.path(), root).string();
        if (e.is_regular_file()) {
            std::ifstream in(e.path(), std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            line += " " + std::to_string(ragmark::fnv1a64(ss.str()));
        }
        out.push_back(line);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace fixtures
