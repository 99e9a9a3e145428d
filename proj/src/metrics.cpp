#include "ragmark/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "ragmark/corpus.hpp"
#include "ragmark/error.hpp"
#include "ragmark/text.hpp"

namespace ragmark {

std::vector<std::string> metric_tokens(std::string_view s) { return text::tokens(text::to_lower(s)); }

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(const std::vector<std::string> &toks, std::size_t n) {
    std::map<Ngram, std::size_t> counts;
    if (toks.size() < n) return counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) ++counts[Ngram(toks.begin() + i, toks.begin() + i + n)];
    return counts;
}

} // namespace

double bleu(std::string_view candidate, std::string_view reference, int max_n) {
    if (max_n < 1) throw Error(ErrorCode::invalid_argument, "max_n must be >= 1");
    const auto cand = metric_tokens(candidate);
    const auto ref = metric_tokens(reference);
    if (cand.empty()) return 0.0;

    double log_sum = 0.0;
    double p_min = 1.0;
    double p_max = 0.0;
    int levels = 0;
    for (std::size_t n = 1; n <= static_cast<std::size_t>(max_n); ++n) {
        if (cand.size() < n) break;
        const auto c_counts = ngram_counts(cand, n);
        const auto r_counts = ngram_counts(ref, n);
        std::size_t matched = 0;
        for (const auto &[gram, cnt] : c_counts) {
            auto it = r_counts.find(gram);
            if (it != r_counts.end()) matched += std::min(cnt, it->second);
        }
        const double total = static_cast<double>(cand.size() - n + 1);
        const double p = matched > 0 ? static_cast<double>(matched) / total : kBleuPrecisionFloor;
        log_sum += std::log(p);
        p_min = std::min(p_min, p);
        p_max = std::max(p_max, p);
        ++levels;
    }
    const double c = static_cast<double>(cand.size());
    const double r = static_cast<double>(ref.size());
    const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
    // exp/log round-off can push the mean an ulp outside its inputs
    return bp * std::clamp(std::exp(log_sum / levels), p_min, p_max);
}

RougeScores rouge_scores(std::string_view candidate, std::string_view reference) {
    const auto cand = metric_tokens(candidate);
    const auto ref = metric_tokens(reference);
    RougeScores out;
    if (cand.empty() || ref.empty()) return out;

    std::vector<std::size_t> prev(ref.size() + 1, 0);
    std::vector<std::size_t> cur(ref.size() + 1, 0);
    for (std::size_t i = 1; i <= cand.size(); ++i) {
        for (std::size_t j = 1; j <= ref.size(); ++j)
            cur[j] = cand[i - 1] == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    const std::size_t lcs = prev[ref.size()];
    if (lcs > 0) {
        const double p = static_cast<double>(lcs) / static_cast<double>(cand.size());
        const double r = static_cast<double>(lcs) / static_cast<double>(ref.size());
        out.lcs_f1 = 2.0 * p * r / (p + r);
    }

    std::map<std::string, std::size_t> ref_counts;
    for (const auto &t : ref) ++ref_counts[t];
    std::size_t overlap = 0;
    for (const auto &t : cand) {
        auto it = ref_counts.find(t);
        if (it != ref_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    out.rouge1_recall = static_cast<double>(overlap) / static_cast<double>(ref.size());
    return out;
}

std::string meteor_stem(std::string_view word) {
    static constexpr std::string_view kSuffixes[] = {"ing", "es", "ed", "ly", "s"};
    for (auto suffix : kSuffixes) {
        if (word.size() >= suffix.size() + 3 && word.substr(word.size() - suffix.size()) == suffix)
            return std::string(word.substr(0, word.size() - suffix.size()));
    }
    return std::string(word);
}

namespace {

constexpr std::size_t kUnaligned = static_cast<std::size_t>(-1);

// One matching stage: candidate tokens left to right; a token continues the
// previous token's chunk when it can, otherwise takes the first free slot.
template <typename Key>
void align_stage(const std::vector<std::string> &cand, const std::vector<std::string> &ref, Key key,
                 std::vector<std::size_t> &align, std::vector<bool> &ref_used) {
    for (std::size_t i = 0; i < cand.size(); ++i) {
        if (align[i] != kUnaligned) continue;
        const auto k = key(cand[i]);
        std::size_t pick = kUnaligned;
        if (i > 0 && align[i - 1] != kUnaligned) {
            const std::size_t next = align[i - 1] + 1;
            if (next < ref.size() && !ref_used[next] && key(ref[next]) == k) pick = next;
        }
        for (std::size_t j = 0; pick == kUnaligned && j < ref.size(); ++j)
            if (!ref_used[j] && key(ref[j]) == k) pick = j;
        if (pick != kUnaligned) {
            align[i] = pick;
            ref_used[pick] = true;
        }
    }
}

} // namespace

MeteorDetail meteor_detail(std::string_view candidate, std::string_view reference) {
    const auto cand = metric_tokens(candidate);
    const auto ref = metric_tokens(reference);
    MeteorDetail d;
    if (cand.empty() || ref.empty()) return d;

    std::vector<std::size_t> align(cand.size(), kUnaligned);
    std::vector<bool> ref_used(ref.size(), false);
    align_stage(cand, ref, [](const std::string &w) { return w; }, align, ref_used);
    align_stage(cand, ref, [](const std::string &w) { return meteor_stem(w); }, align, ref_used);

    for (std::size_t i = 0; i < cand.size(); ++i) {
        if (align[i] == kUnaligned) continue;
        ++d.matches;
        const bool continues = i > 0 && align[i - 1] != kUnaligned && align[i] == align[i - 1] + 1;
        if (!continues) ++d.chunks;
    }
    if (d.matches == 0) return d;

    const double m = static_cast<double>(d.matches);
    d.precision = m / static_cast<double>(cand.size());
    d.recall = m / static_cast<double>(ref.size());
    d.fmean = 10.0 * d.precision * d.recall / (d.recall + 9.0 * d.precision);
    d.penalty = 0.5 * std::pow(static_cast<double>(d.chunks) / m, 3.0);
    d.score = d.fmean * (1.0 - d.penalty);
    return d;
}

CsMatrix cs_matrix(std::string_view generated, std::string_view reference, const Embedder &embedder) {
    CsMatrix cs;
    cs.g_sentences = split_sentences(generated);
    cs.r_sentences = split_sentences(reference);
    if (cs.g_sentences.empty() || cs.r_sentences.empty()) return cs;

    std::vector<std::string> all = cs.g_sentences;
    all.insert(all.end(), cs.r_sentences.begin(), cs.r_sentences.end());
    const auto vecs = embedder.embed_batch(all);
    const std::size_t ng = cs.g_sentences.size();
    cs.values.assign(ng, std::vector<double>(cs.r_sentences.size(), 0.0));
    for (std::size_t i = 0; i < ng; ++i) {
        for (std::size_t j = 0; j < cs.r_sentences.size(); ++j) {
            const auto &g = vecs[i];
            const auto &r = vecs[ng + j];
            cs.values[i][j] = (g.is_zero() || r.is_zero()) ? 0.0 : cosine(g, r);
        }
    }
    return cs;
}

double cs_score(std::string_view generated, std::string_view reference, const Embedder &embedder,
                std::vector<std::string> *warnings) {
    const auto cs = cs_matrix(generated, reference, embedder);
    if (cs.r_sentences.empty()) throw Error(ErrorCode::empty_reference, "reference text has no sentences");
    if (cs.g_sentences.empty()) {
        if (warnings) warnings->push_back("generated text has no sentences; CS set to 0");
        return 0.0;
    }
    double total = 0.0;
    for (const auto &row : cs.values) total += *std::max_element(row.begin(), row.end());
    return total / static_cast<double>(cs.values.size());
}

ScoreRow score_row(std::string question_id, std::string_view generated, std::string_view reference,
                   const Embedder &embedder, std::vector<std::string> *warnings) {
    ScoreRow row;
    row.question_id = std::move(question_id);
    if (text::trim(generated).empty()) {
        if (warnings) warnings->push_back(row.question_id + ": empty generation scored as zero");
        return row;
    }
    const auto r = rouge_scores(generated, reference);
    row.rouge = r.lcs_f1;
    row.rouge1_recall = r.rouge1_recall;
    row.meteor = meteor(generated, reference);
    row.bleu = bleu(generated, reference);
    try {
        row.cs = cs_score(generated, reference, embedder, warnings);
    } catch (const Error &e) {
        if (warnings) warnings->push_back(row.question_id + ": CS not computed: " + e.what());
        row.cs = 0.0;
    }
    return row;
}

// Serialization -------------------------------------------------------------------

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string &s) {
    if (s == "nan") return std::nan("");
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw Error(ErrorCode::malformed_file, "not a number: '" + s + "'");
    return v;
}

} // namespace

std::string csv_quote(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view csv) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < csv.size(); ++i) {
        const char c = csv[i];
        if (quoted) {
            if (c == '"' && i + 1 < csv.size() && csv[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < csv.size() && csv[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw Error(ErrorCode::malformed_file, "unterminated quoted CSV field");
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string rows_to_csv(const std::vector<ScoreRow> &rows) {
    std::string out(kScoreCsvHeader);
    out += '\n';
    for (const auto &r : rows) {
        out += csv_quote(r.question_id) + "," + format_double(r.rouge) + "," + format_double(r.meteor) + "," +
               format_double(r.bleu) + "," + format_double(r.cs) + "\n";
    }
    return out;
}

std::vector<ScoreRow> rows_from_csv(std::string_view csv) {
    const auto table = parse_csv(csv);
    if (table.empty() || text::join(table.front(), ",") != kScoreCsvHeader)
        throw Error(ErrorCode::malformed_file, "score CSV header must be '" + std::string(kScoreCsvHeader) + "'");
    std::vector<ScoreRow> rows;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const auto &f = table[i];
        if (f.size() != 5) throw Error(ErrorCode::malformed_file, "score CSV row with " + std::to_string(f.size()) + " fields");
        rows.push_back({f[0], parse_double(f[1]), parse_double(f[2]), parse_double(f[3]), parse_double(f[4]), 0.0});
    }
    return rows;
}

json to_json(const ScoreRow &row) {
    return json{{"question_id", row.question_id}, {"rouge", row.rouge}, {"meteor", row.meteor},
                {"bleu", row.bleu},               {"cs", row.cs},       {"rouge1_recall", row.rouge1_recall}};
}

ScoreRow score_row_from_json(const json &j) {
    try {
        ScoreRow r;
        r.question_id = j.at("question_id").get<std::string>();
        r.rouge = j.at("rouge").get<double>();
        r.meteor = j.at("meteor").get<double>();
        r.bleu = j.at("bleu").get<double>();
        r.cs = j.at("cs").get<double>();
        r.rouge1_recall = j.value("rouge1_recall", 0.0);
        return r;
    } catch (const json::exception &e) {
        throw Error(ErrorCode::malformed_file, std::string("score record: ") + e.what());
    }
}

} // namespace ragmark
