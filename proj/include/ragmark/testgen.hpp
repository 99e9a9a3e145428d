#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ragmark/corpus.hpp"
#include "ragmark/embed.hpp"
#include "ragmark/index.hpp"
#include "ragmark/qagen.hpp"

namespace ragmark {

using Point = std::vector<double>;

// Dimensionality reduction ---------------------------------------------------

class Reducer {
  public:
    virtual ~Reducer() = default;
    virtual std::string name() const = 0;
    virtual std::vector<Point> reduce(const std::vector<EmbeddingVector> &vectors, std::size_t target_dim) const = 0;
};

struct PcaResult {
    std::vector<Point> points;
    /// target_dim rows of length dim, ordered by decreasing variance.
    std::vector<std::vector<double>> components;
    std::vector<double> mean;
    std::vector<double> explained_variance_ratio;
};

/// Exact PCA through the covariance eigendecomposition. Each component is
/// signed so that its largest-magnitude coordinate is positive.
PcaResult pca(const std::vector<EmbeddingVector> &vectors, std::size_t target_dim);

class PcaReducer final : public Reducer {
  public:
    std::string name() const override { return "pca"; }
    std::vector<Point> reduce(const std::vector<EmbeddingVector> &vectors, std::size_t target_dim) const override {
        return pca(vectors, target_dim).points;
    }
};

std::vector<Point> reduce_dim(const std::vector<EmbeddingVector> &vectors, std::size_t target_dim = 2,
                              const Reducer &reducer = PcaReducer{});

// Clustering --------------------------------------------------------------------

/// eps <= 0 selects eps automatically as twice the median distance to the
/// (min_pts - 1)-th nearest neighbour.
struct ClusterParams {
    double eps = 0.0;
    std::size_t min_pts = 6;
    std::size_t max_clusters = 15;
};

struct Clustering {
    /// Member indices ascending; clusters ordered by their first member.
    std::vector<std::vector<std::size_t>> clusters;
    std::vector<std::size_t> outliers;
    double eps_used = 0.0;
};

class Clusterer {
  public:
    virtual ~Clusterer() = default;
    virtual std::string name() const = 0;
    virtual Clustering cluster(const std::vector<Point> &points, const ClusterParams &params) const = 0;
};

/// DBSCAN, then smallest-first merging into the nearest centroid while more
/// than max_clusters remain.
class DbscanClusterer final : public Clusterer {
  public:
    std::string name() const override { return "dbscan"; }
    Clustering cluster(const std::vector<Point> &points, const ClusterParams &params) const override;
};

double auto_eps(const std::vector<Point> &points, std::size_t min_pts);

/// Throws Error{no_clusters} when every point is an outlier.
Clustering cluster_points(const std::vector<Point> &points, const ClusterParams &params,
                          const Clusterer &clusterer = DbscanClusterer{});

// Test-set assembly -----------------------------------------------------------------

struct TestGenParams {
    std::size_t target_dim = 2;
    ClusterParams cluster;
    std::size_t token_cap = 256;
    std::size_t questions_per_cluster = 5;
};

struct TestCluster {
    int id = 0;
    std::vector<std::size_t> entries;
    std::string concatenated_text;
    std::size_t token_count = 0;
};

struct TestPair {
    std::string question;
    std::string answer_text;
    int cluster_id = 0;
    bool synthetic = false;

    bool operator==(const TestPair &) const = default;
};

struct TestSet {
    std::vector<TestPair> pairs;
    json params = json::object();
    std::vector<TestCluster> clusters;
    std::vector<TestCluster> dropped;
    std::vector<std::string> warnings;
};

/// reduce -> cluster -> drop outliers -> join each cluster's sentences in
/// corpus order -> drop clusters over the token cap -> generate questions.
TestSet assemble_test_set(const IndexedDataset &ds, const Reducer &reducer, const Clusterer &clusterer,
                          const CounterSet &counters, const QuestionGenClient &qg, const TestGenParams &params = {});

std::vector<json> to_jsonl(const TestSet &ts);
TestSet testset_from_jsonl(const std::vector<json> &records);
void save_testset(const TestSet &ts, const std::filesystem::path &path);
TestSet load_testset(const std::filesystem::path &path);

} // namespace ragmark
