#include "ragmark/settings.hpp"

#include <charconv>
#include <sstream>

#include "ragmark/error.hpp"
#include "ragmark/text.hpp"

namespace ragmark {

const std::vector<ConfigKey> &config_registry() {
    static const std::vector<ConfigKey> registry{
        {"corpus.paragraph_budget", "corpus", "256", "token cap per paragraph under every counter"},
        {"corpus.min_words", "corpus", "10", "shortest sentence kept in the sentence index"},
        {"corpus.max_words", "corpus", "30", "longest sentence kept in the sentence index"},

        {"qg.endpoint", "qagen", "", "question generator base URL; empty selects the seeded mock"},
        {"qg.timeout_ms", "qagen", "30000", "per-request timeout"},
        {"qg.retries", "qagen", "2", "retries after a failed request"},
        {"qg.k", "qagen", "5", "questions requested per paragraph"},
        {"qg.max_inflight", "qagen", "4", "concurrent generator requests"},
        {"qg.seed", "qagen", "0", "seed of the mock question generator"},
        {"qg.validation_ratio", "qagen", "0.2", "share of pairs moved to validation"},
        {"qg.split_seed", "qagen", "0", "seed of the validation draw"},

        {"embed.endpoint", "embed", "", "embedding service base URL; empty selects the local hashed embedder"},
        {"embed.batch_size", "embed", "64", "texts per /embed request"},
        {"embed.timeout_ms", "embed", "30000", "per-request timeout"},
        {"embed.retries", "embed", "2", "retries after a failed request"},
        {"embed.max_inflight", "embed", "4", "concurrent /embed requests"},
        {"embed.local_dim", "embed", "64", "dimension of the local hashed embedder"},

        {"gen.endpoint", "generate", "mock:extractive", "generation base URL, or mock:extractive / mock:echo"},
        {"gen.timeout_ms", "generate", "60000", "per-request timeout"},
        {"gen.retries", "generate", "2", "retries after a failed request"},
        {"gen.max_inflight", "generate", "2", "concurrent generation requests"},
        {"gen.max_new_tokens", "generate", "256", "generation length cap"},
        {"gen.temperature", "generate", "0", "sampling temperature"},

        {"rag.model_max_input", "retrieve", "4096", "model input size in tokens"},
        {"rag.answer_reserve", "retrieve", "256", "tokens held back for the answer"},
        {"rag.template_path", "retrieve", "", "prompt template file; empty selects the built-in template"},

        {"testgen.target_dim", "testgen", "2", "dimension after reduction"},
        {"testgen.eps", "testgen", "0", "DBSCAN radius; 0 picks one from the data"},
        {"testgen.min_pts", "testgen", "6", "DBSCAN core-point neighbourhood size"},
        {"testgen.max_clusters", "testgen", "15", "clusters kept before smallest-first merging"},
        {"testgen.token_cap", "testgen", "256", "largest cluster text kept, in tokens"},

        {"experiment.testset", "experiment", "", "test-set JSONL"},
        {"experiment.index_s", "experiment", "", "sentence index (ID_s); empty skips that arm"},
        {"experiment.index_q", "experiment", "", "question index (ID_q); empty skips that arm"},
        {"experiment.thresholds", "experiment", "", "comma-separated thresholds; empty means 0.0..1.0 step 0.1"},
        {"experiment.seed", "experiment", "0", "run seed recorded in the report"},
        {"experiment.output_dir", "experiment", "report", "where report files go"},
        {"experiment.failure_budget", "experiment", "0.2", "fraction of failed questions that aborts an arm"},
        {"experiment.svg", "experiment", "true", "also render radar.svg"},
    };
    return registry;
}

namespace {

const ConfigKey *find_key(const std::string &key) {
    for (const auto &k : config_registry())
        if (k.key == key) return &k;
    return nullptr;
}

} // namespace

Config::Config(const Config &other) {
    std::lock_guard lock(other.mutex_);
    values_ = other.values_;
    consumed_ = other.consumed_;
}

Config &Config::operator=(const Config &other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mutex_, other.mutex_);
    values_ = other.values_;
    consumed_ = other.consumed_;
    return *this;
}

Config Config::parse(std::string_view contents) {
    Config cfg;
    std::istringstream in{std::string(contents)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::config, "line " + std::to_string(lineno) + ": expected key = value");
        cfg.set(text::trim(std::string_view(t).substr(0, eq)), text::trim(std::string_view(t).substr(eq + 1)));
    }
    return cfg;
}

Config Config::from_file(const std::filesystem::path &path) { return parse(read_file(path)); }

void Config::set(const std::string &key, const std::string &value) {
    if (!find_key(key)) throw Error(ErrorCode::config, "unknown config key '" + key + "'");
    values_[key] = value;
}

std::string Config::get_string(const std::string &key) const {
    const auto *k = find_key(key);
    if (!k) throw Error(ErrorCode::config, "unknown config key '" + key + "'");
    {
        std::lock_guard lock(mutex_);
        consumed_.insert(key);
    }
    auto it = values_.find(key);
    return it == values_.end() ? k->default_value : it->second;
}

double Config::get_double(const std::string &key) const {
    const auto s = get_string(key);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw Error(ErrorCode::config, key + ": '" + s + "' is not a number");
    return v;
}

long Config::get_int(const std::string &key) const {
    const auto s = get_string(key);
    long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw Error(ErrorCode::config, key + ": '" + s + "' is not an integer");
    return v;
}

bool Config::get_bool(const std::string &key) const {
    const auto s = text::to_lower(get_string(key));
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw Error(ErrorCode::config, key + ": '" + s + "' is not a boolean");
}

std::set<std::string> Config::consumed() const {
    std::lock_guard lock(mutex_);
    return consumed_;
}

namespace {

std::size_t positive(const Config &cfg, const std::string &key) {
    const long v = cfg.get_int(key);
    if (v < 1) throw Error(ErrorCode::config, key + " must be >= 1");
    return static_cast<std::size_t>(v);
}

std::size_t non_negative(const Config &cfg, const std::string &key) {
    const long v = cfg.get_int(key);
    if (v < 0) throw Error(ErrorCode::config, key + " must be >= 0");
    return static_cast<std::size_t>(v);
}

http::Options http_options(const Config &cfg, const std::string &prefix) {
    http::Options o;
    o.timeout_ms = static_cast<int>(cfg.get_int(prefix + ".timeout_ms"));
    o.retries = static_cast<int>(cfg.get_int(prefix + ".retries"));
    http::validate(o);
    return o;
}

} // namespace

CorpusSettings corpus_settings(const Config &cfg) {
    CorpusSettings s;
    s.paragraph_budget = positive(cfg, "corpus.paragraph_budget");
    s.min_words = static_cast<int>(cfg.get_int("corpus.min_words"));
    s.max_words = static_cast<int>(cfg.get_int("corpus.max_words"));
    if (s.min_words > s.max_words) throw Error(ErrorCode::config, "corpus.min_words exceeds corpus.max_words");
    return s;
}

QaSettings qa_settings(const Config &cfg) {
    QaSettings s;
    s.k = positive(cfg, "qg.k");
    s.max_inflight = positive(cfg, "qg.max_inflight");
    s.validation_ratio = cfg.get_double("qg.validation_ratio");
    s.split_seed = non_negative(cfg, "qg.split_seed");
    if (!(s.validation_ratio > 0.0 && s.validation_ratio < 1.0))
        throw Error(ErrorCode::config, "qg.validation_ratio must lie in (0, 1)");
    return s;
}

std::unique_ptr<QuestionGenClient> make_question_client(const Config &cfg) {
    const auto endpoint = cfg.get_string("qg.endpoint");
    const auto opts = http_options(cfg, "qg");
    const auto seed = non_negative(cfg, "qg.seed");
    if (endpoint.empty()) return std::make_unique<MockQuestionGenClient>(seed);
    return std::make_unique<HttpQuestionGenClient>(HttpQgConfig{endpoint, opts});
}

std::unique_ptr<Embedder> make_embedder(const Config &cfg) {
    RemoteEmbedConfig rc;
    rc.endpoint = cfg.get_string("embed.endpoint");
    rc.batch_size = positive(cfg, "embed.batch_size");
    rc.max_inflight = positive(cfg, "embed.max_inflight");
    rc.http = http_options(cfg, "embed");
    const auto local_dim = positive(cfg, "embed.local_dim");
    if (rc.endpoint.empty()) return std::make_unique<LocalTestEmbedder>(local_dim);
    return std::make_unique<RemoteEmbedder>(rc);
}

GenSettings gen_settings(const Config &cfg) {
    GenSettings s;
    s.max_inflight = positive(cfg, "gen.max_inflight");
    s.max_new_tokens = static_cast<int>(positive(cfg, "gen.max_new_tokens"));
    s.temperature = cfg.get_double("gen.temperature");
    if (!(s.temperature >= 0.0)) throw Error(ErrorCode::config, "gen.temperature must be >= 0");
    return s;
}

std::unique_ptr<GenerationClient> make_generation_client(const Config &cfg) {
    const auto endpoint = cfg.get_string("gen.endpoint");
    const auto opts = http_options(cfg, "gen");
    if (endpoint == "mock:extractive") return std::make_unique<MockExtractiveGenerator>();
    if (endpoint == "mock:echo") return std::make_unique<EchoGenerator>();
    return std::make_unique<RemoteGenerationClient>(RemoteGenConfig{endpoint, opts});
}

RagSettings rag_settings(const Config &cfg, const GenSettings &gen) {
    RagSettings s;
    s.budgets.model_max_input = positive(cfg, "rag.model_max_input");
    s.budgets.answer_reserve = non_negative(cfg, "rag.answer_reserve");
    if (s.budgets.answer_reserve >= s.budgets.model_max_input)
        throw Error(ErrorCode::config, "rag.answer_reserve must be below rag.model_max_input");
    const auto tpl = cfg.get_string("rag.template_path");
    if (!tpl.empty()) s.prompt_template = PromptTemplate::from_file(tpl);
    s.max_new_tokens = gen.max_new_tokens;
    s.temperature = gen.temperature;
    return s;
}

TestGenParams testgen_params(const Config &cfg) {
    TestGenParams p;
    p.target_dim = positive(cfg, "testgen.target_dim");
    p.cluster.eps = cfg.get_double("testgen.eps");
    p.cluster.min_pts = positive(cfg, "testgen.min_pts");
    p.cluster.max_clusters = positive(cfg, "testgen.max_clusters");
    p.token_cap = positive(cfg, "testgen.token_cap");
    return p;
}

} // namespace ragmark
