#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "ragmark/http.hpp"

namespace ragmark {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    double norm() const;
    bool is_zero() const { return norm() == 0.0; }
};

/// Cosine similarity. Throws Error{dim_mismatch} or Error{zero_vector}.
double cosine(const EmbeddingVector &x, const EmbeddingVector &y);

/// Implementations must be deterministic and callable from several threads.
class Embedder {
  public:
    virtual ~Embedder() = default;
    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    /// One vector per input text, same order. A text with no embeddable
    /// content yields an all-zero vector.
    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string> &texts) const = 0;

    EmbeddingVector embed(const std::string &text) const { return embed_batch({text}).front(); }
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view s);

/// Hashed bag of words: every lowercase word lands in bucket
/// fnv1a64(word) % dim, counts are accumulated and the vector is L2-normalized.
class LocalTestEmbedder final : public Embedder {
  public:
    explicit LocalTestEmbedder(std::size_t dim = 64);

    std::string name() const override { return "local-hash-bow-" + std::to_string(dim_); }
    std::size_t dim() const override { return dim_; }
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string> &texts) const override;

  private:
    std::size_t dim_;
};

/// Like LocalTestEmbedder::embed_batch but throws Error{zero_vector} for any
/// text without words.
std::vector<EmbeddingVector> embed_local_test(const std::vector<std::string> &texts, std::size_t dim = 64);

struct RemoteEmbedConfig {
    std::string endpoint;
    std::size_t batch_size = 64;
    std::size_t max_inflight = 4;
    http::Options http;
};

/// Client for POST /embed. The dimension and model name are learned from the
/// first response; any later response with a different dimension raises
/// Error{embedder_changed}.
class RemoteEmbedder final : public Embedder {
  public:
    explicit RemoteEmbedder(RemoteEmbedConfig config);

    std::string name() const override;
    std::size_t dim() const override { return dim_.load(); }
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string> &texts) const override;

    std::size_t requests_sent() const { return requests_.load(); }

  private:
    std::vector<EmbeddingVector> embed_one_batch(const std::vector<std::string> &texts) const;

    RemoteEmbedConfig config_;
    mutable std::atomic<std::size_t> dim_{0};
    mutable std::atomic<std::size_t> requests_{0};
    mutable std::mutex name_mutex_;
    mutable std::string model_;
};

std::vector<EmbeddingVector> embed_batch_remote(const std::vector<std::string> &texts,
                                                const RemoteEmbedConfig &config);

} // namespace ragmark
