#include "ragmark/index.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <sstream>

#include <zlib.h>

#include "ragmark/error.hpp"

namespace ragmark {

std::string_view to_string(IndexKind kind) { return kind == IndexKind::sentences ? "ID_s" : "ID_q"; }

IndexKind index_kind_from_string(std::string_view s) {
    if (s == "ID_s" || s == "s" || s == "sentences") return IndexKind::sentences;
    if (s == "ID_q" || s == "q" || s == "questions") return IndexKind::questions;
    throw Error(ErrorCode::invalid_argument, "unknown index kind '" + std::string(s) + "'");
}

namespace {

EmbeddingVector to_float_precision(EmbeddingVector v) {
    for (auto &x : v.values) x = static_cast<double>(static_cast<float>(x));
    return v;
}

IndexBuild build_index(IndexKind kind, const std::vector<std::string> &keys, const std::vector<std::string> &payloads,
                       const std::vector<ParagraphRef> &refs, const Embedder &embedder) {
    if (keys.empty()) throw Error(ErrorCode::empty_index, "nothing to index");
    auto vectors = embedder.embed_batch(keys);
    if (vectors.size() != keys.size())
        throw Error(ErrorCode::malformed_response, "embedder returned the wrong number of vectors");

    IndexBuild build;
    build.dataset.kind = kind;
    build.dataset.embedder_name = embedder.name();
    build.dataset.dim = vectors.front().dim();
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (vectors[i].dim() != build.dataset.dim)
            throw Error(ErrorCode::embedder_changed, "embedding dimension changed within one build");
        if (vectors[i].is_zero()) {
            build.warnings.push_back("skipped entry " + std::to_string(i) + " with zero embedding: '" + keys[i] + "'");
            continue;
        }
        if (payloads[i].empty()) {
            build.warnings.push_back("skipped entry " + std::to_string(i) + " with empty payload");
            continue;
        }
        build.dataset.entries.push_back({to_float_precision(std::move(vectors[i])), keys[i], payloads[i], refs[i]});
    }
    if (build.dataset.entries.empty()) throw Error(ErrorCode::empty_index, "every entry was skipped");
    return build;
}

} // namespace

IndexBuild build_sentence_index(const std::vector<Sentence> &sentences, const Embedder &embedder) {
    std::vector<std::string> keys;
    std::vector<ParagraphRef> refs;
    for (const auto &s : sentences) {
        keys.push_back(s.text);
        refs.push_back({s.doc_id, s.paragraph_ordinal});
    }
    return build_index(IndexKind::sentences, keys, keys, refs, embedder);
}

IndexBuild build_question_index(const QADataset &qa, const Embedder &embedder) {
    std::vector<std::string> keys;
    std::vector<std::string> payloads;
    std::vector<ParagraphRef> refs;
    for (const auto &p : qa.pairs) {
        keys.push_back(p.question);
        payloads.push_back(p.answer_text);
        refs.push_back(p.paragraph_ref);
    }
    return build_index(IndexKind::questions, keys, payloads, refs, embedder);
}

std::vector<RetrievalHit> search(const IndexedDataset &ds, const EmbeddingVector &query, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw Error(ErrorCode::invalid_argument, "threshold must lie in [0, 1]");
    if (query.dim() != ds.dim)
        throw Error(ErrorCode::dim_mismatch,
                    "query dim " + std::to_string(query.dim()) + " vs index dim " + std::to_string(ds.dim));
    std::vector<RetrievalHit> hits;
    for (std::size_t i = 0; i < ds.entries.size(); ++i) {
        const double score = cosine(query, ds.entries[i].key_vector);
        if (threshold == 0.0 || score + kScoreTolerance >= threshold) hits.push_back({score, i});
    }
    std::stable_sort(hits.begin(), hits.end(),
                     [](const RetrievalHit &a, const RetrievalHit &b) { return a.score > b.score; });
    return hits;
}

// Persistence -------------------------------------------------------------------

namespace {

constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<std::uint8_t> &bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += kB64[(n >> 18) & 63];
        out += kB64[(n >> 12) & 63];
        out += kB64[(n >> 6) & 63];
        out += kB64[n & 63];
    }
    if (i + 1 == bytes.size()) {
        const std::uint32_t n = bytes[i] << 16;
        out += kB64[(n >> 18) & 63];
        out += kB64[(n >> 12) & 63];
        out += "==";
    } else if (i + 2 == bytes.size()) {
        const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out += kB64[(n >> 18) & 63];
        out += kB64[(n >> 12) & 63];
        out += kB64[(n >> 6) & 63];
        out += '=';
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view s) {
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (s.size() % 4 != 0) throw Error(ErrorCode::malformed_file, "base64 length is not a multiple of 4");
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < s.size(); i += 4) {
        std::uint32_t n = 0;
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = s[i + k];
            int v = 0;
            if (c == '=') {
                ++pad;
            } else {
                v = value(c);
                if (v < 0 || pad) throw Error(ErrorCode::malformed_file, "invalid base64");
            }
            n = (n << 6) | static_cast<std::uint32_t>(v);
        }
        out.push_back(static_cast<std::uint8_t>(n >> 16));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>(n >> 8));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(n));
    }
    return out;
}

std::string encode_vector(const EmbeddingVector &v) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(v.values.size() * 4);
    for (double x : v.values) {
        auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(x));
        for (int k = 0; k < 4; ++k) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
    }
    return base64_encode(bytes);
}

EmbeddingVector decode_vector(std::string_view b64, std::size_t dim) {
    const auto bytes = base64_decode(b64);
    if (bytes.size() != dim * 4) throw Error(ErrorCode::malformed_file, "vector length does not match dim");
    EmbeddingVector v;
    v.values.reserve(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        std::uint32_t bits = 0;
        for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(bytes[i * 4 + k]) << (8 * k);
        v.values.push_back(static_cast<double>(std::bit_cast<float>(bits)));
    }
    return v;
}

std::uint32_t crc_of(std::string_view data) {
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef *>(data.data()), static_cast<uInt>(data.size())));
}

} // namespace

std::string serialize_index(const IndexedDataset &ds) {
    std::string body;
    body += dump_line(json{{"type", "header"},
                           {"format_version", kIndexFormatVersion},
                           {"kind", to_string(ds.kind)},
                           {"embedder_name", ds.embedder_name},
                           {"dim", ds.dim},
                           {"count", ds.entries.size()}});
    body += '\n';
    for (const auto &e : ds.entries) {
        body += dump_line(json{{"type", "entry"},
                               {"key_text", e.key_text},
                               {"payload_text", e.payload_text},
                               {"doc_id", e.paragraph_ref.doc_id},
                               {"paragraph_ordinal", e.paragraph_ref.ordinal},
                               {"vec_b64", encode_vector(e.key_vector)}});
        body += '\n';
    }
    body += dump_line(json{{"type", "trailer"}, {"crc32", crc_of(body)}});
    body += '\n';
    return body;
}

IndexedDataset parse_index(std::string_view contents) {
    // The trailer is the last non-empty line; the checksum covers every byte before it.
    std::size_t end = contents.size();
    while (end > 0 && (contents[end - 1] == '\n' || contents[end - 1] == '\r')) --end;
    const std::size_t trailer_start = contents.rfind('\n', end == 0 ? 0 : end - 1);
    if (trailer_start == std::string_view::npos) throw Error(ErrorCode::checksum, "index file has no trailer");
    const auto body = contents.substr(0, trailer_start + 1);

    json trailer;
    try {
        trailer = json::parse(contents.substr(trailer_start + 1, end - trailer_start - 1));
    } catch (const json::parse_error &) {
        throw Error(ErrorCode::checksum, "index trailer unreadable (truncated file?)");
    }
    if (!trailer.is_object() || trailer.value("type", "") != "trailer" || !trailer.contains("crc32"))
        throw Error(ErrorCode::checksum, "index trailer missing (truncated file?)");
    if (trailer["crc32"].get<std::uint32_t>() != crc_of(body))
        throw Error(ErrorCode::checksum, "index checksum mismatch");

    std::istringstream in{std::string(body)};
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::malformed_file, "index file is empty");
    IndexedDataset ds;
    std::size_t count = 0;
    try {
        const auto header = json::parse(line);
        if (header.value("type", "") != "header") throw Error(ErrorCode::malformed_file, "missing header record");
        const int version = header.at("format_version").get<int>();
        if (version != kIndexFormatVersion)
            throw Error(ErrorCode::version_mismatch, "index format version " + std::to_string(version) +
                                                         ", expected " + std::to_string(kIndexFormatVersion));
        ds.kind = index_kind_from_string(header.at("kind").get<std::string>());
        ds.embedder_name = header.at("embedder_name").get<std::string>();
        ds.dim = header.at("dim").get<std::size_t>();
        count = header.at("count").get<std::size_t>();
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto rec = json::parse(line);
            if (rec.value("type", "") != "entry") throw Error(ErrorCode::malformed_file, "unexpected record type");
            IndexEntry e;
            e.key_text = rec.at("key_text").get<std::string>();
            e.payload_text = rec.at("payload_text").get<std::string>();
            e.paragraph_ref = {rec.at("doc_id").get<std::string>(), rec.at("paragraph_ordinal").get<int>()};
            e.key_vector = decode_vector(rec.at("vec_b64").get<std::string>(), ds.dim);
            ds.entries.push_back(std::move(e));
        }
    } catch (const json::exception &e) {
        throw Error(ErrorCode::malformed_file, std::string("index record: ") + e.what());
    }
    if (ds.entries.size() != count)
        throw Error(ErrorCode::malformed_file, "header count " + std::to_string(count) + " but " +
                                                   std::to_string(ds.entries.size()) + " entries");
    return ds;
}

void save_index(const IndexedDataset &ds, const std::filesystem::path &path) { write_file(path, serialize_index(ds)); }

IndexedDataset load_index(const std::filesystem::path &path) { return parse_index(read_file(path)); }

} // namespace ragmark
