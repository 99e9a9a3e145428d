#include "doctest.h"

#include <cmath>
#include <random>

#include <zlib.h>

#include "fixtures.hpp"
#include "ragmark/error.hpp"
#include "ragmark/index.hpp"

using namespace ragmark;

namespace {

// Hand-built embedder: returns the vector registered for each text.
class TableEmbedder final : public Embedder {
  public:
    std::map<std::string, std::vector<double>> table;
    std::size_t d = 2;
    std::string name() const override { return "table"; }
    std::size_t dim() const override { return d; }
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string> &texts) const override {
        std::vector<EmbeddingVector> out;
        for (const auto &t : texts) out.push_back({table.at(t)});
        return out;
    }
};

std::vector<double> at_angle_with_cos(double c) { return {c, std::sqrt(1.0 - c * c)}; }

Sentence sent(const std::string &text, int para = 0) { return {"d", para, 0, text, 3}; }

IndexedDataset random_index(std::mt19937_64 &rng, std::size_t n, std::size_t dim) {
    std::normal_distribution<double> nd(0.0, 1.0);
    IndexedDataset ds{IndexKind::sentences, {}, "rand", dim};
    for (std::size_t i = 0; i < n; ++i) {
        EmbeddingVector v;
        for (std::size_t k = 0; k < dim; ++k) v.values.push_back(nd(rng));
        // occasional exact duplicates to exercise ties
        if (i > 0 && rng() % 10 == 0) v = ds.entries[rng() % i].key_vector;
        ds.entries.push_back({v, "k" + std::to_string(i), "p" + std::to_string(i), {"d", static_cast<int>(i)}});
    }
    return ds;
}

} // namespace

TEST_CASE("sentence index: one entry per sentence") {
    LocalTestEmbedder e(64);
    std::vector<Sentence> s;
    for (int i = 0; i < 5; ++i) s.push_back(sent("sentence number " + std::to_string(i)));
    const auto b = build_sentence_index(s, e);
    CHECK(b.dataset.kind == IndexKind::sentences);
    REQUIRE(b.dataset.entries.size() == 5);
    CHECK(b.dataset.entries[3].payload_text == s[3].text);
    CHECK(b.dataset.entries[3].key_text == s[3].text);
    CHECK(b.dataset.dim == 64);
    CHECK(b.dataset.embedder_name == e.name());
    CHECK_THROWS_WITH_AS(build_sentence_index({}, e), doctest::Contains("empty_index"), Error);
}

TEST_CASE("zero-vector sentences are skipped with a warning") {
    LocalTestEmbedder e(64);
    const auto b = build_sentence_index({sent("real words"), sent("?!"), sent("more words")}, e);
    CHECK(b.dataset.entries.size() == 2);
    CHECK(b.warnings.size() == 1);
    CHECK_THROWS_AS(build_sentence_index({sent("...")}, e), Error);
}

TEST_CASE("question index: payload is the parent paragraph") {
    LocalTestEmbedder e(64);
    QADataset qa{"qa", {}};
    for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 2; ++q)
            qa.pairs.push_back({"question " + std::to_string(p) + " variant " + std::to_string(q), {"d", p},
                                "paragraph " + std::to_string(p), false});
    const auto b = build_question_index(qa, e);
    CHECK(b.dataset.kind == IndexKind::questions);
    REQUIRE(b.dataset.entries.size() == 6);
    CHECK(b.dataset.entries[0].payload_text == b.dataset.entries[1].payload_text);
    CHECK(b.dataset.entries[2].payload_text == "paragraph 1");
    CHECK(b.dataset.entries[2].key_text == "question 1 variant 0");
}

TEST_CASE("duplicate questions for distinct paragraphs are both kept, tie order stable") {
    LocalTestEmbedder e(64);
    QADataset qa{"qa", {{"Same question?", {"d", 0}, "first", false}, {"Same question?", {"d", 1}, "second", false}}};
    const auto ds = build_question_index(qa, e).dataset;
    REQUIRE(ds.entries.size() == 2);
    const auto hits = search(ds, e.embed("same question"), 0.5);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].score == hits[1].score);
    CHECK(hits[0].entry == 0);
    CHECK(hits[1].entry == 1);
}

TEST_CASE("search: 0.9 / 0.5 / 0.3 at threshold 0.5") {
    TableEmbedder e;
    e.table = {{"a", at_angle_with_cos(0.3)}, {"b", at_angle_with_cos(0.9)}, {"c", at_angle_with_cos(0.5)}, {"q", {1, 0}}};
    const auto ds = build_sentence_index({sent("a"), sent("b"), sent("c")}, e).dataset;
    const auto hits = search(ds, e.embed("q"), 0.5);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].entry == 1);
    CHECK(hits[1].entry == 2);
    CHECK(hits[0].score == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(hits[1].score == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("search: threshold 0 returns everything, negative scores included") {
    TableEmbedder e;
    e.table = {{"pos", {1, 0}}, {"neg", {-1, 0.1}}, {"orth", {0, 1}}, {"q", {1, 0}}};
    const auto ds = build_sentence_index({sent("pos"), sent("neg"), sent("orth")}, e).dataset;
    const auto hits = search(ds, e.embed("q"), 0.0);
    REQUIRE(hits.size() == 3);
    CHECK(hits.back().entry == 1);
    CHECK(hits.back().score < 0.0);
}

TEST_CASE("search: threshold 1 keeps only exact direction matches") {
    TableEmbedder e;
    e.table = {{"same", {2, 0}}, {"close", at_angle_with_cos(0.999999)}, {"q", {1, 0}}};
    const auto ds = build_sentence_index({sent("same"), sent("close")}, e).dataset;
    const auto hits = search(ds, e.embed("q"), 1.0);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].entry == 0);
    CHECK(hits[0].score >= 1.0 - 1e-9);
}

TEST_CASE("search errors") {
    LocalTestEmbedder e(64);
    const auto ds = build_sentence_index({sent("words here")}, e).dataset;
    CHECK_THROWS_WITH_AS(search(ds, EmbeddingVector{{1.0, 0.0}}, 0.5), doctest::Contains("dim_mismatch"), Error);
    CHECK_THROWS_AS(search(ds, e.embed("words"), 1.5), Error);
    CHECK_THROWS_AS(search(ds, e.embed("words"), -0.1), Error);
}

TEST_CASE("search properties: sorted, stable, monotone in threshold, equals brute force") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t dim = 2 + rng() % 8;
        const auto ds = random_index(rng, 200, dim);
        EmbeddingVector q;
        for (std::size_t k = 0; k < dim; ++k) q.values.push_back(nd(rng));
        std::size_t previous = ds.entries.size() + 1;
        for (int t = 0; t <= 10; ++t) {
            const double tau = t / 10.0;
            const auto hits = search(ds, q, tau);
            CHECK(hits.size() <= previous);
            previous = hits.size();
            for (std::size_t i = 1; i < hits.size(); ++i) {
                CHECK(hits[i - 1].score >= hits[i].score);
                if (hits[i - 1].score == hits[i].score) CHECK(hits[i - 1].entry < hits[i].entry);
            }
            // brute force: all passing (score, index) pairs sorted by (-score, index)
            std::vector<RetrievalHit> oracle;
            for (std::size_t i = 0; i < ds.entries.size(); ++i) {
                const auto &k = ds.entries[i].key_vector.values;
                double dot = 0, qq = 0, kk = 0;
                for (std::size_t d = 0; d < dim; ++d) {
                    dot += q.values[d] * k[d];
                    qq += q.values[d] * q.values[d];
                    kk += k[d] * k[d];
                }
                const double s = std::clamp(dot / (std::sqrt(qq) * std::sqrt(kk)), -1.0, 1.0);
                if (tau == 0.0 || s >= tau - 1e-9) oracle.push_back({s, i});
            }
            std::sort(oracle.begin(), oracle.end(), [](const RetrievalHit &a, const RetrievalHit &b) {
                return a.score != b.score ? a.score > b.score : a.entry < b.entry;
            });
            CHECK(hits == oracle);
        }
    }
}

TEST_CASE("index save/load round trip") {
    LocalTestEmbedder e(32);
    const auto ds = build_sentence_index({sent("alpha beta", 0), sent("gamma delta", 1), sent("epsilon \"quoted\" text", 2)}, e)
                        .dataset;
    fixtures::TempDir dir;
    save_index(ds, dir / "idx.jsonl");
    const auto back = load_index(dir / "idx.jsonl");
    CHECK(back.kind == ds.kind);
    CHECK(back.dim == ds.dim);
    CHECK(back.embedder_name == ds.embedder_name);
    CHECK(back.entries == ds.entries);
    CHECK(serialize_index(back) == serialize_index(ds));
}

TEST_CASE("index round trip on random float data") {
    std::mt19937_64 rng(12);
    auto ds = random_index(rng, 40, 7);
    for (auto &e : ds.entries)
        for (auto &x : e.key_vector.values) x = static_cast<double>(static_cast<float>(x));
    ds.kind = IndexKind::questions;
    const auto back = parse_index(serialize_index(ds));
    CHECK(back.entries == ds.entries);
    CHECK(back.kind == IndexKind::questions);
}

TEST_CASE("index keys are stored at float precision so unit norm survives") {
    LocalTestEmbedder e(64);
    const auto ds = build_sentence_index({sent("one two three four five")}, e).dataset;
    CHECK(std::abs(ds.entries[0].key_vector.norm() - 1.0) < 1e-6);
    const auto q = e.embed("one two three four five");
    CHECK(search(ds, q, 1.0).size() == 1);
}

TEST_CASE("corrupt index files") {
    LocalTestEmbedder e(16);
    const auto ds = build_sentence_index({sent("a b"), sent("c d"), sent("e f")}, e).dataset;
    const auto good = serialize_index(ds);

    SUBCASE("truncated file fails the checksum") {
        CHECK_THROWS_WITH_AS(parse_index(good.substr(0, good.size() / 2)), doctest::Contains("checksum"), Error);
        const auto last_line = good.rfind('\n', good.size() - 2);
        CHECK_THROWS_WITH_AS(parse_index(good.substr(0, last_line + 1)), doctest::Contains("checksum"), Error);
    }
    SUBCASE("flipped byte fails the checksum") {
        auto bad = good;
        bad[bad.find("c d")] = 'x';
        CHECK_THROWS_WITH_AS(parse_index(bad), doctest::Contains("checksum"), Error);
    }
    SUBCASE("other format versions are refused") {
        auto body = good.substr(0, good.rfind('\n', good.size() - 2) + 1);
        const auto at = body.find("\"format_version\":1");
        REQUIRE(at != std::string::npos);
        body.replace(at, 18, "\"format_version\":2");
        std::string trailer = "{\"crc32\":" + std::to_string(crc32(0L, reinterpret_cast<const Bytef *>(body.data()),
                                                                       static_cast<uInt>(body.size()))) +
                              ",\"type\":\"trailer\"}\n";
        CHECK_THROWS_WITH_AS(parse_index(body + trailer), doctest::Contains("version_mismatch"), Error);
    }
    SUBCASE("missing file") { CHECK_THROWS_WITH_AS(load_index("/nonexistent/idx.jsonl"), doctest::Contains("io"), Error); }
}

TEST_CASE("index kind is surfaced to the caller") {
    LocalTestEmbedder e(16);
    const auto ds = build_sentence_index({sent("a b")}, e).dataset;
    const auto back = parse_index(serialize_index(ds));
    CHECK(to_string(back.kind) == "ID_s");
    CHECK(index_kind_from_string("ID_q") == IndexKind::questions);
    CHECK_THROWS_AS(index_kind_from_string("ID_x"), Error);
}
