#include "doctest.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ragmark/error.hpp"
#include "ragmark/metrics.hpp"
#include "ragmark/text.hpp"

using namespace ragmark;

namespace {

const LocalTestEmbedder &embedder() {
    static const LocalTestEmbedder e(4096);
    return e;
}

std::string random_text(std::mt19937_64 &rng, std::size_t max_len) {
    static const std::vector<std::string> vocab{"the", "cat", "sat", "on", "mat", "a", "dog", "ran", ",", "."};
    std::string s;
    const std::size_t n = rng() % (max_len + 1);
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + vocab[rng() % vocab.size()];
    return s;
}

} // namespace

TEST_CASE("bleu examples") {
    CHECK(bleu("the quick brown fox jumps", "the quick brown fox jumps") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bleu("alpha beta gamma delta", "one two three four") <= 1e-9);
    CHECK(std::abs(bleu("the cat sat", "the cat sat down", 3) - 0.71653) < 1e-5);
    CHECK(std::abs(bleu("the cat sat", "the cat sat down", 3) - std::exp(1.0 - 4.0 / 3.0)) < 1e-12);
    CHECK(bleu("", "anything") == 0.0);
    CHECK_THROWS_AS(bleu("a", "a", 0), Error);
}

TEST_CASE("bleu and rouge agree with the exhaustive oracle on short sequences") {
    const auto seqs = oracles::all_sequences({"a", "b", "c"}, 5);
    std::size_t compared = 0;
    for (std::size_t i = 0; i < seqs.size(); i += 3)
        for (std::size_t j = 0; j < seqs.size(); j += 2) {
            const auto c = oracles::join(seqs[i]), r = oracles::join(seqs[j]);
            REQUIRE(std::abs(bleu(c, r) - oracles::bleu(seqs[i], seqs[j])) <= 1e-12);
            REQUIRE(std::abs(rouge(c, r) - oracles::rouge_l(seqs[i], seqs[j])) <= 1e-12);
            ++compared;
        }
    CHECK(compared > 10000);
}

TEST_CASE("rouge examples") {
    CHECK(rouge("a b c d", "a c d e") == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(rouge("same words here", "same words here") == 1.0);
    CHECK(rouge("x y", "p q") == 0.0);
    CHECK(rouge("", "p q") == 0.0);
    CHECK(rouge("p q", "") == 0.0);
    const auto r = rouge_scores("a b", "a b c d");
    CHECK(r.rouge1_recall == 0.5);
}

TEST_CASE("meteor examples") {
    CHECK(std::abs(meteor("one two three four five six", "one two three four five six") - 0.9976852) < 1e-6);
    CHECK(meteor("alpha beta", "gamma delta") == 0.0);
    CHECK(meteor("", "x") == 0.0);
    const auto d = meteor_detail("sat cat the", "the cat sat");
    CHECK(d.matches == 3);
    CHECK(d.chunks == 3);
    CHECK(d.fmean == 1.0);
    CHECK(d.score == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("meteor stem stage and stemmer") {
    CHECK(meteor_stem("running") == "runn");
    CHECK(meteor_stem("boxes") == "box");
    CHECK(meteor_stem("jumped") == "jump");
    CHECK(meteor_stem("quickly") == "quick");
    CHECK(meteor_stem("cats") == "cat");
    CHECK(meteor_stem("is") == "is");
    CHECK(meteor_stem("sing") == "sing");
    const auto d = meteor_detail("the cats jumped", "the cat jumps");
    CHECK(d.matches == 3);
    CHECK(d.chunks == 1);
}

TEST_CASE("cs examples") {
    const auto &e = embedder();
    CHECK(std::abs(cs_score("The sky is blue. Grass grows.", "The sky is blue. Grass grows.", e) - 1.0) <= 1e-6);
    CHECK(std::abs(cs_score("Grass grows.", "Rain falls today. Grass grows. Wind blows.", e) - 1.0) <= 1e-9);
    // alpha/beta vs alpha/gamma share one of two words: cosine 1/2
    for (auto w : {"alpha", "beta", "gamma"})
        for (auto v : {"alpha", "beta", "gamma"})
            if (std::string(w) != v) REQUIRE(fnv1a64(w) % 4096 != fnv1a64(v) % 4096);
    CHECK(std::abs(cs_score("Alpha beta. Alpha gamma.", "Alpha beta.", e) - 0.75) <= 1e-9);
    const auto m = cs_matrix("Alpha beta. Alpha gamma.", "Alpha beta.", e);
    CHECK(m.g_sentences.size() == 2);
    CHECK(m.r_sentences.size() == 1);
    CHECK(std::abs(m.values[1][0] - 0.5) <= 1e-12);
}

TEST_CASE("cs errors and edge cases") {
    const auto &e = embedder();
    CHECK_THROWS_WITH_AS(cs_score("Something.", "", e), doctest::Contains("empty_reference"), Error);
    std::vector<std::string> warnings;
    CHECK(cs_score("", "Reference here.", e, &warnings) == 0.0);
    CHECK(warnings.size() == 1);
    // a sentence that embeds to zero scores 0 against everything
    struct ZeroForSome final : Embedder {
        LocalTestEmbedder inner{64};
        std::string name() const override { return "zero-for-some"; }
        std::size_t dim() const override { return 64; }
        std::vector<EmbeddingVector> embed_batch(const std::vector<std::string> &texts) const override {
            auto out = inner.embed_batch(texts);
            for (std::size_t i = 0; i < texts.size(); ++i)
                if (texts[i].find("Void") != std::string::npos) out[i].values.assign(64, 0.0);
            return out;
        }
    } z;
    const auto m = cs_matrix("Alpha beta. Void here.", "Alpha beta.", z);
    REQUIRE(m.values.size() == 2);
    CHECK(m.values[1][0] == 0.0);
    CHECK(cs_score("Alpha beta. Void here.", "Alpha beta.", z) == doctest::Approx(0.5));
}

TEST_CASE("cs is not symmetric") {
    const auto &e = embedder();
    const std::string a = "Alpha beta.", b = "Alpha beta. Gamma delta.";
    CHECK(cs_score(a, b, e) == doctest::Approx(1.0));
    CHECK(cs_score(b, a, e) < 0.9);
}

TEST_CASE("cs properties: reference permutation and superset") {
    const auto &e = embedder();
    std::mt19937_64 rng(5);
    const std::vector<std::string> pool{"Alpha beta gamma.", "Delta echo.", "Beta foxtrot golf.", "Hotel alpha.",
                                        "India juliet kilo.", "Gamma gamma lima."};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> g, r;
        for (int i = 0; i < 1 + static_cast<int>(rng() % 3); ++i) g.push_back(pool[rng() % pool.size()]);
        for (int i = 0; i < 1 + static_cast<int>(rng() % 4); ++i) r.push_back(pool[rng() % pool.size()]);
        const auto gen = text::join(g, " ");
        const double base = cs_score(gen, text::join(r, " "), e);
        auto shuffled = r;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(std::abs(cs_score(gen, text::join(shuffled, " "), e) - base) <= 1e-12);
        r.push_back(pool[rng() % pool.size()]);
        CHECK(cs_score(gen, text::join(r, " "), e) >= base - 1e-12);
    }
}

TEST_CASE("text metrics ignore case and trailing whitespace") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 300; ++trial) {
        const auto c = random_text(rng, 8), r = random_text(rng, 8);
        auto C = c;
        for (auto &ch : C) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        C += "  \n";
        const auto R = r + "\t ";
        CHECK(bleu(C, R) == bleu(c, r));
        CHECK(rouge(C, R) == rouge(c, r));
        CHECK(meteor(C, R) == meteor(c, r));
        for (double v : {bleu(c, r), rouge(c, r), meteor(c, r)}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("score_row") {
    const auto &e = embedder();
    const std::string t = "One two three four five six.";
    const auto row = score_row("q1", t, t, e);
    CHECK(row.question_id == "q1");
    CHECK(row.rouge == 1.0);
    CHECK(row.bleu == doctest::Approx(1.0));
    CHECK(row.cs == doctest::Approx(1.0));
    // 7 tokens with the full stop
    CHECK(row.meteor == doctest::Approx(1.0 - 0.5 / 343.0).epsilon(1e-12));
    std::vector<std::string> warnings;
    const auto zero = score_row("q2", "  ", t, e, &warnings);
    CHECK(zero == ScoreRow{"q2", 0, 0, 0, 0, 0});
    CHECK(warnings.size() == 1);
    const auto no_ref = score_row("q3", "Something.", "", e, &warnings);
    CHECK(no_ref.cs == 0.0);
    CHECK(warnings.size() == 2);
}

TEST_CASE("score rows round-trip through CSV and JSON") {
    std::vector<ScoreRow> rows{{"q1", 0.1, 1.0 / 3.0, 1e-9, -0.25, 0.0}, {"needs,\"quoting\"", 1, 0, 0.5, 0.75, 0.0}};
    const auto csv = rows_to_csv(rows);
    CHECK(csv.rfind("question_id,rouge,meteor,bleu,cs\n", 0) == 0);
    CHECK(rows_from_csv(csv) == rows);
    for (const auto &r : rows) CHECK(score_row_from_json(to_json(r)) == r);
    CHECK_THROWS_AS(rows_from_csv("id,x\n"), Error);
    CHECK_THROWS_AS(rows_from_csv("question_id,rouge,meteor,bleu,cs\nq,1,2\n"), Error);
    CHECK_THROWS_AS(rows_from_csv("question_id,rouge,meteor,bleu,cs\nq,1,2,x,4\n"), Error);
}

TEST_CASE("format_double reads back exactly") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng);
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
}
