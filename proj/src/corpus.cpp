#include "ragmark/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

#include "ragmark/error.hpp"
#include "ragmark/text.hpp"

namespace ragmark {

std::size_t WhitespacePunctCounter::count(std::string_view text) const {
    return text::token_spans(text).size();
}

CounterSet default_counters() { return {std::make_shared<WhitespacePunctCounter>()}; }

std::size_t max_token_count(const CounterSet &counters, std::string_view text) {
    std::size_t best = 0;
    for (const auto &c : counters) best = std::max(best, c->count(text));
    return best;
}

namespace {

// Largest index into `ends` whose prefix fits; -1 when none does. Assumes the
// counters are monotone in prefix length.
long largest_fitting(std::string_view text, const std::vector<std::size_t> &ends,
                     const CounterSet &counters, std::size_t budget) {
    long lo = 0;
    long hi = static_cast<long>(ends.size()) - 1;
    long found = -1;
    while (lo <= hi) {
        const long mid = lo + (hi - lo) / 2;
        if (max_token_count(counters, text.substr(0, ends[mid])) <= budget) {
            found = mid;
            lo = mid + 1;
        } else {
            hi = mid - 1;
        }
    }
    return found;
}

} // namespace

std::string truncate_to_budget(std::string_view text, const CounterSet &counters,
                               std::size_t budget, bool whitespace_cuts) {
    if (max_token_count(counters, text) <= budget) return std::string(text);
    const auto spans = text::token_spans(text);
    std::vector<std::size_t> all_ends;
    std::vector<std::size_t> space_ends;
    for (const auto &sp : spans) {
        all_ends.push_back(sp.end);
        if (sp.end == text.size() || text::is_space(text[sp.end])) space_ends.push_back(sp.end);
    }
    if (whitespace_cuts) {
        const long i = largest_fitting(text, space_ends, counters, budget);
        if (i >= 0) return std::string(text.substr(0, space_ends[i]));
    }
    const long i = largest_fitting(text, all_ends, counters, budget);
    if (i < 0) return {};
    return std::string(text.substr(0, all_ends[i]));
}

// CORD-19 ---------------------------------------------------------------------

std::string_view to_string(Cord19Reject reason) {
    switch (reason) {
    case Cord19Reject::malformed: return "malformed";
    case Cord19Reject::missing_abstract: return "missing_abstract";
    case Cord19Reject::not_pmc: return "not_pmc";
    case Cord19Reject::missing_arxiv_id: return "missing_arxiv_id";
    case Cord19Reject::latex_detected: return "latex_detected";
    }
    return "unknown";
}

const std::vector<std::string> &latex_markers() {
    static const std::vector<std::string> markers{"\\begin{", "\\end{", "$$", "\\cite{", "\\frac"};
    return markers;
}

namespace {

// CORD-19 stores abstract and body either as a string or as a list of
// {"text": ...} sections.
std::string section_text(const json &value) {
    if (value.is_null()) return {};
    if (value.is_string()) return value.get<std::string>();
    if (value.is_array()) {
        std::vector<std::string> parts;
        for (const auto &sec : value) {
            if (sec.is_string()) {
                parts.push_back(sec.get<std::string>());
            } else if (sec.is_object() && sec.contains("text") && sec["text"].is_string()) {
                parts.push_back(sec["text"].get<std::string>());
            } else {
                throw std::invalid_argument("section without text");
            }
        }
        return text::join(parts, "\n\n");
    }
    throw std::invalid_argument("unsupported section type");
}

std::string optional_string(const json &rec, const char *key) {
    if (!rec.contains(key) || rec[key].is_null()) return {};
    if (!rec[key].is_string()) throw std::invalid_argument(std::string(key) + " is not a string");
    return rec[key].get<std::string>();
}

bool is_pmc(const std::string &repository) {
    const auto r = text::to_lower(repository);
    return r.find("pmc") != std::string::npos || r.find("pubmed central") != std::string::npos;
}

} // namespace

Cord19FilterResult filter_cord19(const json &records) {
    if (!records.is_array()) throw Error(ErrorCode::invalid_argument, "CORD-19 records must be a JSON array");
    Cord19FilterResult result;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto &rec = records[i];
        Document doc;
        std::string abstract;
        std::string repository;
        std::string arxiv_id;
        try {
            if (!rec.is_object()) throw std::invalid_argument("record is not an object");
            doc.id = optional_string(rec, "paper_id");
            if (doc.id.empty()) throw std::invalid_argument("missing paper_id");
            doc.title = optional_string(rec, "title");
            abstract = text::trim(section_text(rec.value("abstract", json())));
            doc.body = section_text(rec.value("body_text", json()));
            repository = optional_string(rec, "repository");
            arxiv_id = text::trim(optional_string(rec, "arxiv_id"));
        } catch (const std::exception &) {
            std::string pid;
            if (rec.is_object() && rec.contains("paper_id") && rec["paper_id"].is_string())
                pid = rec["paper_id"].get<std::string>();
            result.rejections.push_back({i, pid, Cord19Reject::malformed});
            continue;
        }

        auto reject = [&](Cord19Reject why) { result.rejections.push_back({i, doc.id, why}); };
        if (abstract.empty()) {
            reject(Cord19Reject::missing_abstract);
            continue;
        }
        if (!is_pmc(repository)) {
            reject(Cord19Reject::not_pmc);
            continue;
        }
        if (arxiv_id.empty()) {
            reject(Cord19Reject::missing_arxiv_id);
            continue;
        }
        const bool latex = std::any_of(latex_markers().begin(), latex_markers().end(),
                                       [&](const std::string &m) { return doc.body.find(m) != std::string::npos; });
        if (latex) {
            reject(Cord19Reject::latex_detected);
            continue;
        }
        if (text::trim(doc.body).empty()) {
            result.rejections.push_back({i, doc.id, Cord19Reject::malformed});
            continue;
        }
        doc.source_meta = {{"format", "cord19"},
                           {"has_abstract", "true"},
                           {"abstract", abstract},
                           {"repository", repository},
                           {"arxiv_id", arxiv_id}};
        result.documents.push_back(std::move(doc));
    }
    return result;
}

json to_cord19_record(const Document &doc) {
    auto meta = [&](const char *k) {
        auto it = doc.source_meta.find(k);
        return it == doc.source_meta.end() ? std::string() : it->second;
    };
    return json{{"paper_id", doc.id},      {"title", doc.title},
                {"abstract", meta("abstract")}, {"body_text", doc.body},
                {"repository", meta("repository")}, {"arxiv_id", meta("arxiv_id")}};
}

Document load_text_document(const std::filesystem::path &path) {
    Document doc;
    doc.id = path.stem().string();
    doc.title = doc.id;
    doc.body = read_file(path);
    doc.source_meta = {{"format", "plain_text"}, {"path", path.string()}};
    return doc;
}

// Splitting ---------------------------------------------------------------------

namespace {

std::vector<std::string> blank_line_blocks(std::string_view body) {
    std::vector<std::string> blocks;
    std::string current;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        std::size_t nl = body.find('\n', pos);
        if (nl == std::string_view::npos) nl = body.size();
        const auto line = body.substr(pos, nl - pos);
        if (text::trim(line).empty()) {
            if (!current.empty()) blocks.push_back(text::normalize_whitespace(current));
            current.clear();
        } else {
            current += line;
            current += '\n';
        }
        pos = nl + 1;
    }
    if (!current.empty()) blocks.push_back(text::normalize_whitespace(current));
    return blocks;
}

bool starts_sentence(char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isupper(u) || std::isdigit(u);
}

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

const std::array<std::string_view, 26> kAbbreviations{
    "dr.",  "mr.",  "mrs.",  "ms.",   "prof.", "sr.",  "jr.",  "st.",   "vs.",
    "e.g.", "i.e.", "fig.",  "figs.", "al.",   "no.",  "inc.", "ltd.",  "co.",
    "approx.", "eq.", "ref.", "vol.", "dept.", "u.s.", "cf.",  "nos."};

bool is_abbreviation(std::string_view text, std::size_t dot) {
    std::size_t b = dot;
    while (b > 0 && !text::is_space(text[b - 1])) --b;
    const auto word = text::to_lower(text.substr(b, dot + 1 - b));
    return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

} // namespace

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    std::size_t i = 0;
    auto emit = [&](std::size_t end) {
        auto s = text::trim(text.substr(start, end - start));
        if (!s.empty()) out.push_back(std::move(s));
        start = end;
    };
    while (i < text.size()) {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?') {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?' || is_closer(text[j]))) ++j;
        if (j < text.size() && text::is_space(text[j])) {
            std::size_t k = j;
            while (k < text.size() && text::is_space(text[k])) ++k;
            const bool guarded = c == '.' && j == i + 1 && is_abbreviation(text, i);
            if (k < text.size() && starts_sentence(text[k]) && !guarded) emit(j);
        }
        i = j;
    }
    emit(text.size());
    return out;
}

std::vector<Paragraph> split_paragraphs(const Document &doc, const CounterSet &counters, std::size_t budget) {
    if (budget < 16) throw Error(ErrorCode::invalid_argument, "paragraph budget must be >= 16");
    if (counters.empty()) throw Error(ErrorCode::invalid_argument, "no token counter registered");
    const auto blocks = blank_line_blocks(doc.body);
    if (blocks.empty()) throw Error(ErrorCode::empty_document, "document '" + doc.id + "' has no text");

    std::vector<Paragraph> out;
    auto emit = [&](std::string t, bool hard) {
        Paragraph p;
        p.doc_id = doc.id;
        p.ordinal = static_cast<int>(out.size());
        p.token_count = static_cast<int>(max_token_count(counters, t));
        p.text = std::move(t);
        p.hard_split = hard;
        out.push_back(std::move(p));
    };

    for (const auto &block : blocks) {
        if (max_token_count(counters, block) <= budget) {
            emit(block, false);
            continue;
        }
        std::string current;
        auto flush = [&] {
            if (!current.empty()) emit(std::move(current), false);
            current.clear();
        };
        for (const auto &sentence : split_sentences(block)) {
            if (max_token_count(counters, sentence) > budget) {
                flush();
                std::string rest = sentence;
                while (!rest.empty()) {
                    auto piece = truncate_to_budget(rest, counters, budget, true);
                    if (piece.empty()) {
                        throw Error(ErrorCode::invalid_argument,
                                    "a single token exceeds the paragraph budget in '" + doc.id + "'");
                    }
                    rest = text::trim(std::string_view(rest).substr(piece.size()));
                    emit(text::trim(piece), true);
                }
                continue;
            }
            std::string candidate = current.empty() ? sentence : current + " " + sentence;
            if (max_token_count(counters, candidate) <= budget) {
                current = std::move(candidate);
            } else {
                flush();
                current = sentence;
            }
        }
        flush();
    }
    return out;
}

void flag_hard_splits(Document &doc, const std::vector<Paragraph> &paragraphs) {
    std::vector<std::string> ordinals;
    for (const auto &p : paragraphs)
        if (p.hard_split && p.doc_id == doc.id) ordinals.push_back(std::to_string(p.ordinal));
    if (!ordinals.empty()) doc.source_meta["hard_split"] = text::join(ordinals, ",");
}

std::vector<Sentence> extract_sentences(const std::vector<Paragraph> &paragraphs) {
    std::vector<Sentence> out;
    for (const auto &p : paragraphs) {
        int ordinal = 0;
        for (auto &s : split_sentences(p.text)) {
            Sentence sent;
            sent.doc_id = p.doc_id;
            sent.paragraph_ordinal = p.ordinal;
            sent.ordinal = ordinal++;
            sent.word_count = static_cast<int>(text::split_whitespace(s).size());
            sent.text = std::move(s);
            out.push_back(std::move(sent));
        }
    }
    return out;
}

std::vector<Sentence> filter_sentences(const std::vector<Sentence> &sentences, int min_words, int max_words) {
    if (min_words > max_words) throw Error(ErrorCode::invalid_argument, "min_words > max_words");
    std::vector<Sentence> out;
    std::copy_if(sentences.begin(), sentences.end(), std::back_inserter(out), [&](const Sentence &s) {
        return s.word_count >= min_words && s.word_count <= max_words;
    });
    return out;
}

json to_json(const Paragraph &p) {
    return json{{"doc_id", p.doc_id}, {"ordinal", p.ordinal}, {"text", p.text}, {"token_count", p.token_count}};
}

json to_json(const Sentence &s) {
    return json{{"doc_id", s.doc_id},
                {"ordinal", s.ordinal},
                {"paragraph_ordinal", s.paragraph_ordinal},
                {"text", s.text},
                {"word_count", s.word_count}};
}

Paragraph paragraph_from_json(const json &j) {
    try {
        Paragraph p;
        p.doc_id = j.at("doc_id").get<std::string>();
        p.ordinal = j.at("ordinal").get<int>();
        p.text = j.at("text").get<std::string>();
        p.token_count = j.at("token_count").get<int>();
        return p;
    } catch (const json::exception &e) {
        throw Error(ErrorCode::malformed_file, std::string("paragraph record: ") + e.what());
    }
}

Sentence sentence_from_json(const json &j) {
    try {
        Sentence s;
        s.doc_id = j.at("doc_id").get<std::string>();
        s.ordinal = j.at("ordinal").get<int>();
        s.paragraph_ordinal = j.at("paragraph_ordinal").get<int>();
        s.text = j.at("text").get<std::string>();
        s.word_count = j.at("word_count").get<int>();
        return s;
    } catch (const json::exception &e) {
        throw Error(ErrorCode::malformed_file, std::string("sentence record: ") + e.what());
    }
}

} // namespace ragmark
