#include "ragmark/embed.hpp"

#include <algorithm>
#include <cmath>

#include "ragmark/error.hpp"
#include "ragmark/parallel.hpp"
#include "ragmark/text.hpp"

namespace ragmark {

double EmbeddingVector::norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

double cosine(const EmbeddingVector &x, const EmbeddingVector &y) {
    if (x.dim() != y.dim())
        throw Error(ErrorCode::dim_mismatch, std::to_string(x.dim()) + " vs " + std::to_string(y.dim()));
    double dot = 0.0;
    double xx = 0.0;
    double yy = 0.0;
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        dot += x.values[i] * y.values[i];
        xx += x.values[i] * x.values[i];
        yy += y.values[i] * y.values[i];
    }
    if (xx == 0.0 || yy == 0.0) throw Error(ErrorCode::zero_vector, "cosine of a zero vector");
    const double c = dot / (std::sqrt(xx) * std::sqrt(yy));
    return std::clamp(c, -1.0, 1.0);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

LocalTestEmbedder::LocalTestEmbedder(std::size_t dim) : dim_(dim) {
    if (dim < 8) throw Error(ErrorCode::invalid_argument, "local embedder dim must be >= 8");
}

std::vector<EmbeddingVector> LocalTestEmbedder::embed_batch(const std::vector<std::string> &texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto &t : texts) {
        EmbeddingVector v;
        v.values.assign(dim_, 0.0);
        for (const auto &w : text::words(t)) v.values[fnv1a64(w) % dim_] += 1.0;
        const double n = v.norm();
        if (n > 0.0)
            for (auto &x : v.values) x /= n;
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<EmbeddingVector> embed_local_test(const std::vector<std::string> &texts, std::size_t dim) {
    auto out = LocalTestEmbedder(dim).embed_batch(texts);
    for (std::size_t i = 0; i < out.size(); ++i)
        if (out[i].is_zero()) throw Error(ErrorCode::zero_vector, "text " + std::to_string(i) + " has no words");
    return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedConfig config) : config_(std::move(config)) {
    http::validate(config_.http);
    if (config_.endpoint.empty()) throw Error(ErrorCode::config, "embed.endpoint is empty");
    if (config_.batch_size == 0) throw Error(ErrorCode::config, "embed.batch_size must be >= 1");
}

std::string RemoteEmbedder::name() const {
    std::lock_guard lock(name_mutex_);
    return model_.empty() ? "remote:" + config_.endpoint : model_;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_one_batch(const std::vector<std::string> &texts) const {
    ++requests_;
    const auto res = http::post_json(config_.endpoint, "/embed", json{{"texts", texts}}, config_.http);
    if (!res.contains("vectors") || !res["vectors"].is_array())
        throw Error(ErrorCode::malformed_response, "/embed response lacks 'vectors'");
    const auto &vecs = res["vectors"];
    if (vecs.size() != texts.size())
        throw Error(ErrorCode::malformed_response, "/embed returned " + std::to_string(vecs.size()) +
                                                       " vectors for " + std::to_string(texts.size()) + " texts");
    std::vector<EmbeddingVector> out;
    out.reserve(vecs.size());
    try {
        for (const auto &v : vecs) out.push_back({v.get<std::vector<double>>()});
    } catch (const json::exception &e) {
        throw Error(ErrorCode::malformed_response, e.what());
    }
    std::size_t dim = out.empty() ? 0 : out.front().dim();
    if (res.contains("dim")) {
        if (!res["dim"].is_number_unsigned()) throw Error(ErrorCode::malformed_response, "'dim' is not a count");
        dim = res["dim"].get<std::size_t>();
    }
    for (const auto &v : out) {
        if (v.dim() != dim) throw Error(ErrorCode::malformed_response, "vector length disagrees with declared dim");
        for (double x : v.values)
            if (!std::isfinite(x)) throw Error(ErrorCode::malformed_response, "non-finite vector component");
    }
    std::size_t expected = 0;
    if (!dim_.compare_exchange_strong(expected, dim) && expected != dim)
        throw Error(ErrorCode::embedder_changed,
                    "dimension changed from " + std::to_string(expected) + " to " + std::to_string(dim));
    if (res.contains("model") && res["model"].is_string()) {
        std::lock_guard lock(name_mutex_);
        const auto model = res["model"].get<std::string>();
        if (!model_.empty() && model_ != model)
            throw Error(ErrorCode::embedder_changed, "model changed from " + model_ + " to " + model);
        model_ = model;
    }
    return out;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(const std::vector<std::string> &texts) const {
    const std::size_t n_batches = (texts.size() + config_.batch_size - 1) / config_.batch_size;
    std::vector<std::vector<EmbeddingVector>> parts(n_batches);
    parallel_for_bounded(n_batches, config_.max_inflight, [&](std::size_t b) {
        const auto first = texts.begin() + static_cast<std::ptrdiff_t>(b * config_.batch_size);
        const auto last = texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), (b + 1) * config_.batch_size));
        parts[b] = embed_one_batch(std::vector<std::string>(first, last));
    });
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (auto &p : parts)
        for (auto &v : p) out.push_back(std::move(v));
    return out;
}

std::vector<EmbeddingVector> embed_batch_remote(const std::vector<std::string> &texts,
                                                const RemoteEmbedConfig &config) {
    for (const auto &t : texts)
        if (t.empty()) throw Error(ErrorCode::invalid_argument, "cannot embed an empty string");
    return RemoteEmbedder(config).embed_batch(texts);
}

} // namespace ragmark
