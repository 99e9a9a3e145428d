#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ragmark/embed.hpp"
#include "ragmark/generate.hpp"
#include "ragmark/index.hpp"
#include "ragmark/metrics.hpp"
#include "ragmark/retrieve.hpp"
#include "ragmark/settings.hpp"
#include "ragmark/testgen.hpp"

namespace ragmark {

/// 0.0, 0.1, ..., 1.0.
std::vector<double> default_thresholds();

struct RunOptions {
    std::size_t max_inflight = 2;
    double failure_budget = 0.2;
    RagSettings rag;
};

struct ExperimentConfig {
    std::filesystem::path testset;
    std::filesystem::path index_s;
    std::filesystem::path index_q;
    std::vector<double> thresholds = default_thresholds();
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "report";
    bool svg = true;
    RunOptions run;
};

/// Throws Error{config} unless thresholds lie in [0, 1] and strictly increase.
void validate(const ExperimentConfig &cfg);

/// Reads the experiment.* keys only; `run.rag` and `run.max_inflight` keep
/// their defaults for the caller to fill from gen_settings/rag_settings.
ExperimentConfig experiment_config(const Config &cfg);

/// "q00000", "q00001", ...; lexicographic order equals test-set order.
std::string question_id(std::size_t index);

struct ArmRun {
    std::vector<ScoreRow> rows;
    std::size_t failures = 0;
    std::vector<std::string> warnings;
};

/// Every test question without any context block. A failed generation scores
/// as a zero row; more failures than the budget allows raise Error{aborted}.
ArmRun run_baseline(const TestSet &ts, const GenerationClient &gen, const Embedder &embedder, const RunOptions &opts);

struct ThresholdRun {
    double threshold = 0.0;
    ArmRun run;
};

struct SweepRun {
    IndexKind kind = IndexKind::sentences;
    std::vector<ThresholdRun> by_threshold;
};

/// Retrieval-augmented answers for every question at every threshold.
SweepRun run_sweep(const TestSet &ts, const IndexedDataset &ds, const std::vector<double> &thresholds,
                   const GenerationClient &gen, const Embedder &embedder, const RunOptions &opts);

// Reporting ----------------------------------------------------------------------------

struct RowGroup {
    std::optional<double> threshold;
    std::vector<ScoreRow> rows;
};

struct ArmRows {
    std::string label;
    std::vector<RowGroup> groups;
};

ArmRows baseline_arm(std::string label, const ArmRun &run);
ArmRows sweep_arm(std::string label, const SweepRun &run);

struct MetricMeans {
    std::size_t n = 0;
    double rouge = 0.0;
    double meteor = 0.0;
    double bleu = 0.0;
    double cs = 0.0;

    bool operator==(const MetricMeans &) const = default;
};

/// Arithmetic means accumulated in question_id order.
MetricMeans mean_scores(std::vector<ScoreRow> rows);

struct ThresholdMeans {
    double threshold = 0.0;
    MetricMeans means;

    bool operator==(const ThresholdMeans &) const = default;
};

struct ArmSummary {
    std::string label;
    MetricMeans overall;
    std::vector<ThresholdMeans> per_threshold;
    /// Highest mean CS; the lower threshold wins a tie.
    std::optional<double> best_threshold;

    bool operator==(const ArmSummary &) const = default;
};

/// (numerator - denominator) / denominator for each metric. METEOR is also
/// given over the numerator, (numerator - denominator) / numerator.
struct RelativeDelta {
    std::string numerator;
    std::string denominator;
    double rouge = 0.0;
    double meteor = 0.0;
    double bleu = 0.0;
    double cs = 0.0;
    double meteor_over_numerator = 0.0;

    /// A delta over a zero mean is nan; two nans compare equal here so
    /// round-tripped reports can be checked for identity.
    bool operator==(const RelativeDelta &o) const {
        auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
        return numerator == o.numerator && denominator == o.denominator && same(rouge, o.rouge) &&
               same(meteor, o.meteor) && same(bleu, o.bleu) && same(cs, o.cs) &&
               same(meteor_over_numerator, o.meteor_over_numerator);
    }
};

struct ReportTable {
    std::vector<ArmSummary> arms;
    /// Every ordered pair of distinct arms; empty for a single arm.
    std::vector<RelativeDelta> deltas;

    bool operator==(const ReportTable &) const = default;

    const ArmSummary *arm(const std::string &label) const;
    const RelativeDelta *delta(const std::string &numerator, const std::string &denominator) const;
};

ReportTable summarize(const std::vector<ArmRows> &arms);

std::string report_csv(const ReportTable &table);
ReportTable report_from_csv(std::string_view csv);
json report_json(const ReportTable &table, const json &metadata = json::object());
ReportTable report_from_json(const json &j);
json radar_json(const ReportTable &table);
std::string radar_svg(const ReportTable &table);

struct ReportFiles {
    std::filesystem::path csv;
    std::filesystem::path json;
    std::filesystem::path radar;
    std::optional<std::filesystem::path> svg;
};

/// Writes report.csv, report.json, radar.json and optionally radar.svg.
ReportFiles emit_report(const ReportTable &table, const std::filesystem::path &dir, bool svg,
                        const json &metadata = json::object());

/// Score rows tagged with arm and threshold, one per line.
std::vector<json> rows_to_jsonl(const std::vector<ArmRows> &arms);
std::vector<ArmRows> rows_from_jsonl(const std::vector<json> &records);

struct ExperimentResult {
    std::vector<ArmRows> arms;
    ReportTable table;
    std::vector<std::string> warnings;
};

/// Baseline plus a sweep for each configured index.
ExperimentResult run_experiment(const ExperimentConfig &cfg, const GenerationClient &gen, const Embedder &embedder);

} // namespace ragmark
