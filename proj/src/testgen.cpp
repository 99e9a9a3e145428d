#include "ragmark/testgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "ragmark/error.hpp"
#include "ragmark/text.hpp"

namespace ragmark {

PcaResult pca(const std::vector<EmbeddingVector> &vectors, std::size_t target_dim) {
    if (target_dim < 1) throw Error(ErrorCode::invalid_argument, "target_dim must be >= 1");
    if (vectors.size() < target_dim + 1)
        throw Error(ErrorCode::invalid_argument, "PCA to " + std::to_string(target_dim) + " dims needs at least " +
                                                     std::to_string(target_dim + 1) + " vectors");
    const std::size_t dim = vectors.front().dim();
    if (dim < target_dim) throw Error(ErrorCode::invalid_argument, "target_dim exceeds the input dimension");
    const auto n = static_cast<Eigen::Index>(vectors.size());
    const auto d = static_cast<Eigen::Index>(dim);

    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto &v = vectors[static_cast<std::size_t>(i)];
        if (v.dim() != dim) throw Error(ErrorCode::dim_mismatch, "PCA input vectors differ in dimension");
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = v.values[static_cast<std::size_t>(j)];
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
    const double total = cov.trace();
    if (!(total > 1e-12)) throw Error(ErrorCode::degenerate_cloud, "all input vectors coincide");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::degenerate_cloud, "eigendecomposition failed");
    const auto &evals = solver.eigenvalues();   // ascending
    const auto &evecs = solver.eigenvectors();

    PcaResult out;
    out.mean.assign(mean.data(), mean.data() + d);
    Eigen::MatrixXd basis(d, static_cast<Eigen::Index>(target_dim));
    for (std::size_t k = 0; k < target_dim; ++k) {
        const Eigen::Index col = d - 1 - static_cast<Eigen::Index>(k);
        Eigen::VectorXd v = evecs.col(col);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        basis.col(static_cast<Eigen::Index>(k)) = v;
        out.components.emplace_back(v.data(), v.data() + d);
        out.explained_variance_ratio.push_back(std::max(0.0, evals(col)) / total);
    }
    const Eigen::MatrixXd projected = x * basis;
    out.points.resize(vectors.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        auto &p = out.points[static_cast<std::size_t>(i)];
        p.resize(target_dim);
        for (std::size_t k = 0; k < target_dim; ++k) p[k] = projected(i, static_cast<Eigen::Index>(k));
    }
    return out;
}

std::vector<Point> reduce_dim(const std::vector<EmbeddingVector> &vectors, std::size_t target_dim,
                              const Reducer &reducer) {
    auto points = reducer.reduce(vectors, target_dim);
    if (points.size() != vectors.size())
        throw Error(ErrorCode::invalid_argument, "reducer " + reducer.name() + " changed the point count");
    return points;
}

// Clustering ------------------------------------------------------------------------

namespace {

double dist2(const Point &a, const Point &b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

// Radius queries; a uniform grid with cell size eps for 2-D points, a scan otherwise.
class NeighborIndex {
  public:
    NeighborIndex(const std::vector<Point> &points, double eps) : points_(points), eps_(eps) {
        grid_ = !points.empty() && points.front().size() == 2;
        if (!grid_) return;
        for (std::size_t i = 0; i < points.size(); ++i) cells_[cell_of(points[i])].push_back(i);
    }

    std::vector<std::size_t> within(std::size_t p) const {
        std::vector<std::size_t> out;
        const double e2 = eps_ * eps_;
        if (!grid_) {
            for (std::size_t q = 0; q < points_.size(); ++q)
                if (dist2(points_[p], points_[q]) <= e2) out.push_back(q);
            return out;
        }
        const auto [cx, cy] = cell_of(points_[p]);
        for (long dx = -1; dx <= 1; ++dx) {
            for (long dy = -1; dy <= 1; ++dy) {
                auto it = cells_.find({cx + dx, cy + dy});
                if (it == cells_.end()) continue;
                for (std::size_t q : it->second)
                    if (dist2(points_[p], points_[q]) <= e2) out.push_back(q);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

  private:
    std::pair<long, long> cell_of(const Point &p) const {
        return {static_cast<long>(std::floor(p[0] / eps_)), static_cast<long>(std::floor(p[1] / eps_))};
    }

    const std::vector<Point> &points_;
    double eps_;
    bool grid_ = false;
    std::map<std::pair<long, long>, std::vector<std::size_t>> cells_;
};

Point centroid(const std::vector<Point> &points, const std::vector<std::size_t> &members) {
    Point c(points[members.front()].size(), 0.0);
    for (auto m : members)
        for (std::size_t k = 0; k < c.size(); ++k) c[k] += points[m][k];
    for (auto &v : c) v /= static_cast<double>(members.size());
    return c;
}

} // namespace

double auto_eps(const std::vector<Point> &points, std::size_t min_pts) {
    if (points.size() < 2) return 1.0;
    const std::size_t k = std::clamp<std::size_t>(min_pts > 1 ? min_pts - 1 : 1, 1, points.size() - 1);
    std::vector<double> kdist;
    kdist.reserve(points.size());
    std::vector<double> d;
    for (std::size_t i = 0; i < points.size(); ++i) {
        d.clear();
        for (std::size_t j = 0; j < points.size(); ++j)
            if (j != i) d.push_back(dist2(points[i], points[j]));
        std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
        kdist.push_back(std::sqrt(d[k - 1]));
    }
    std::nth_element(kdist.begin(), kdist.begin() + static_cast<std::ptrdiff_t>(kdist.size() / 2), kdist.end());
    const double eps = 2.0 * kdist[kdist.size() / 2];
    return eps > 0.0 ? eps : 1e-9;
}

Clustering DbscanClusterer::cluster(const std::vector<Point> &points, const ClusterParams &params) const {
    if (params.min_pts < 1) throw Error(ErrorCode::invalid_argument, "min_pts must be >= 1");
    if (params.max_clusters < 1) throw Error(ErrorCode::invalid_argument, "max_clusters must be >= 1");
    Clustering out;
    out.eps_used = params.eps > 0.0 ? params.eps : auto_eps(points, params.min_pts);

    constexpr int kUnvisited = -2;
    constexpr int kNoise = -1;
    std::vector<int> label(points.size(), kUnvisited);
    const NeighborIndex index(points, out.eps_used);
    int next_id = 0;
    for (std::size_t p = 0; p < points.size(); ++p) {
        if (label[p] != kUnvisited) continue;
        auto seeds = index.within(p);
        if (seeds.size() < params.min_pts) {
            label[p] = kNoise;
            continue;
        }
        const int id = next_id++;
        label[p] = id;
        std::vector<bool> queued(points.size(), false);
        for (auto q : seeds) queued[q] = true;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const std::size_t q = seeds[s];
            if (label[q] == kNoise) label[q] = id;
            if (label[q] != kUnvisited) continue;
            label[q] = id;
            const auto more = index.within(q);
            if (more.size() < params.min_pts) continue;
            for (auto r : more) {
                if (queued[r]) continue;
                queued[r] = true;
                seeds.push_back(r);
            }
        }
    }

    std::vector<std::vector<std::size_t>> clusters(static_cast<std::size_t>(next_id));
    for (std::size_t p = 0; p < points.size(); ++p) {
        if (label[p] >= 0) clusters[static_cast<std::size_t>(label[p])].push_back(p);
        else out.outliers.push_back(p);
    }

    while (clusters.size() > params.max_clusters) {
        std::size_t smallest = 0;
        for (std::size_t c = 1; c < clusters.size(); ++c)
            if (clusters[c].size() < clusters[smallest].size()) smallest = c;
        const auto from = centroid(points, clusters[smallest]);
        std::size_t nearest = smallest == 0 ? 1 : 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            if (c == smallest) continue;
            const double d = dist2(from, centroid(points, clusters[c]));
            if (d < best) {
                best = d;
                nearest = c;
            }
        }
        auto &into = clusters[nearest];
        into.insert(into.end(), clusters[smallest].begin(), clusters[smallest].end());
        std::sort(into.begin(), into.end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(smallest));
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const auto &a, const auto &b) { return a.front() < b.front(); });
    out.clusters = std::move(clusters);
    return out;
}

Clustering cluster_points(const std::vector<Point> &points, const ClusterParams &params, const Clusterer &clusterer) {
    if (points.size() < params.min_pts)
        throw Error(ErrorCode::invalid_argument, "fewer points than min_pts");
    auto result = clusterer.cluster(points, params);
    if (result.clusters.empty()) throw Error(ErrorCode::no_clusters, "every point is an outlier");
    return result;
}

// Test-set assembly ------------------------------------------------------------------

TestSet assemble_test_set(const IndexedDataset &ds, const Reducer &reducer, const Clusterer &clusterer,
                          const CounterSet &counters, const QuestionGenClient &qg, const TestGenParams &params) {
    if (ds.kind != IndexKind::sentences)
        throw Error(ErrorCode::invalid_argument, "test sets are built from a sentence index (ID_s)");
    if (counters.empty()) throw Error(ErrorCode::invalid_argument, "no token counter registered");

    std::vector<EmbeddingVector> vectors;
    vectors.reserve(ds.entries.size());
    for (const auto &e : ds.entries) vectors.push_back(e.key_vector);
    const auto points = reduce_dim(vectors, params.target_dim, reducer);
    const auto clustering = cluster_points(points, params.cluster, clusterer);

    TestSet ts;
    std::vector<std::string> counter_names;
    for (const auto &c : counters) counter_names.push_back(c->name());
    ts.params = json{{"reducer", reducer.name()},
                     {"target_dim", params.target_dim},
                     {"clusterer", clusterer.name()},
                     {"eps", clustering.eps_used},
                     {"min_pts", params.cluster.min_pts},
                     {"max_clusters", params.cluster.max_clusters},
                     {"token_cap", params.token_cap},
                     {"questions_per_cluster", params.questions_per_cluster},
                     {"question_generator", qg.name()},
                     {"token_counters", counter_names},
                     {"embedder_name", ds.embedder_name},
                     {"index_entries", ds.entries.size()},
                     {"clusters_found", clustering.clusters.size()},
                     {"outliers", clustering.outliers.size()}};

    for (std::size_t c = 0; c < clustering.clusters.size(); ++c) {
        TestCluster cl;
        cl.id = static_cast<int>(c);
        cl.entries = clustering.clusters[c];
        std::vector<std::string> parts;
        for (auto e : cl.entries) parts.push_back(text::trim(ds.entries[e].payload_text));
        cl.concatenated_text = text::join(parts, " ");
        cl.token_count = max_token_count(counters, cl.concatenated_text);
        if (cl.token_count > params.token_cap) {
            ts.warnings.push_back("dropped cluster " + std::to_string(cl.id) + " with " +
                                  std::to_string(cl.token_count) + " tokens");
            ts.dropped.push_back(std::move(cl));
        } else {
            ts.clusters.push_back(std::move(cl));
        }
    }
    if (ts.clusters.empty())
        throw Error(ErrorCode::no_surviving_clusters, "every cluster exceeds " + std::to_string(params.token_cap) + " tokens");

    for (const auto &cl : ts.clusters) {
        Paragraph pseudo;
        pseudo.doc_id = "cluster";
        pseudo.ordinal = cl.id;
        pseudo.text = cl.concatenated_text;
        pseudo.token_count = static_cast<int>(cl.token_count);
        const auto generated = generate_questions(pseudo, qg, params.questions_per_cluster);
        for (const auto &q : generated.questions)
            ts.pairs.push_back({q, cl.concatenated_text, cl.id, generated.synthetic});
    }
    ts.params["pairs"] = ts.pairs.size();
    ts.params["clusters_kept"] = ts.clusters.size();
    return ts;
}

std::vector<json> to_jsonl(const TestSet &ts) {
    std::vector<json> out;
    out.push_back(json{{"params", ts.params}});
    for (const auto &p : ts.pairs) {
        json j{{"question", p.question}, {"answer_text", p.answer_text}, {"cluster_id", p.cluster_id}};
        if (p.synthetic) j["synthetic"] = true;
        out.push_back(std::move(j));
    }
    return out;
}

TestSet testset_from_jsonl(const std::vector<json> &records) {
    TestSet ts;
    try {
        for (const auto &r : records) {
            if (r.contains("params")) {
                ts.params = r["params"];
                continue;
            }
            ts.pairs.push_back({r.at("question").get<std::string>(), r.at("answer_text").get<std::string>(),
                                r.at("cluster_id").get<int>(), r.value("synthetic", false)});
        }
    } catch (const json::exception &e) {
        throw Error(ErrorCode::malformed_file, std::string("test-set record: ") + e.what());
    }
    return ts;
}

void save_testset(const TestSet &ts, const std::filesystem::path &path) { write_jsonl(path, to_jsonl(ts)); }

TestSet load_testset(const std::filesystem::path &path) { return testset_from_jsonl(read_jsonl(path)); }

} // namespace ragmark
