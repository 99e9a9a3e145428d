#include "ragmark/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "ragmark/error.hpp"
#include "ragmark/parallel.hpp"
#include "ragmark/text.hpp"

namespace ragmark {

std::vector<double> default_thresholds() {
    std::vector<double> t;
    for (int i = 0; i <= 10; ++i) t.push_back(i / 10.0);
    return t;
}

void validate(const ExperimentConfig &cfg) {
    if (cfg.thresholds.empty()) throw Error(ErrorCode::config, "no thresholds configured");
    for (std::size_t i = 0; i < cfg.thresholds.size(); ++i) {
        const double t = cfg.thresholds[i];
        if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::config, "threshold " + format_double(t) + " outside [0, 1]");
        if (i > 0 && !(t > cfg.thresholds[i - 1]))
            throw Error(ErrorCode::config, "thresholds must be strictly increasing");
    }
    if (!(cfg.run.failure_budget >= 0.0 && cfg.run.failure_budget <= 1.0))
        throw Error(ErrorCode::config, "failure budget must lie in [0, 1]");
}

ExperimentConfig experiment_config(const Config &cfg) {
    ExperimentConfig ec;
    ec.testset = cfg.get_string("experiment.testset");
    ec.index_s = cfg.get_string("experiment.index_s");
    ec.index_q = cfg.get_string("experiment.index_q");
    const auto thresholds = cfg.get_string("experiment.thresholds");
    if (!thresholds.empty()) {
        ec.thresholds.clear();
        std::string list = thresholds;
        std::replace(list.begin(), list.end(), ',', ' ');
        for (const auto &f : text::split_whitespace(list)) {
            try {
                std::size_t used = 0;
                ec.thresholds.push_back(std::stod(f, &used));
                if (used != f.size()) throw std::invalid_argument(f);
            } catch (const std::exception &) {
                throw Error(ErrorCode::config, "experiment.thresholds: '" + f + "' is not a number");
            }
        }
    }
    const long seed = cfg.get_int("experiment.seed");
    if (seed < 0) throw Error(ErrorCode::config, "experiment.seed must be >= 0");
    ec.seed = static_cast<std::uint64_t>(seed);
    ec.output_dir = cfg.get_string("experiment.output_dir");
    ec.run.failure_budget = cfg.get_double("experiment.failure_budget");
    ec.svg = cfg.get_bool("experiment.svg");
    validate(ec);
    return ec;
}

std::string question_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "q%05zu", index);
    return buf;
}

namespace {

void check_failures(ArmRun &run, std::size_t total, double budget, const std::string &what) {
    if (static_cast<double>(run.failures) > budget * static_cast<double>(total))
        throw Error(ErrorCode::aborted, what + ": " + std::to_string(run.failures) + " of " + std::to_string(total) +
                                            " questions failed, over the " + format_double(budget) + " budget");
}

// Runs `answer_one` for each question; failures become zero rows.
template <typename Fn>
ArmRun score_all(const TestSet &ts, const Embedder &embedder, const RunOptions &opts, Fn &&answer_one) {
    const std::size_t n = ts.pairs.size();
    ArmRun run;
    run.rows.resize(n);
    std::vector<std::vector<std::string>> notes(n);
    std::vector<char> failed(n, 0);
    parallel_for_bounded(n, opts.max_inflight, [&](std::size_t i) {
        const auto qid = question_id(i);
        try {
            const std::string generated = answer_one(i);
            run.rows[i] = score_row(qid, generated, ts.pairs[i].answer_text, embedder, &notes[i]);
        } catch (const Error &e) {
            run.rows[i] = ScoreRow{qid};
            failed[i] = 1;
            notes[i].push_back(qid + ": " + e.what());
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        run.failures += failed[i];
        for (auto &w : notes[i]) run.warnings.push_back(std::move(w));
    }
    return run;
}

} // namespace

ArmRun run_baseline(const TestSet &ts, const GenerationClient &gen, const Embedder &embedder, const RunOptions &opts) {
    auto run = score_all(ts, embedder, opts, [&](std::size_t i) {
        GenerationRequest req;
        req.prompt = opts.rag.prompt_template.render("", ts.pairs[i].question);
        req.max_new_tokens = opts.rag.max_new_tokens;
        req.temperature = opts.rag.temperature;
        return gen.generate(req);
    });
    check_failures(run, ts.pairs.size(), opts.failure_budget, "baseline");
    return run;
}

SweepRun run_sweep(const TestSet &ts, const IndexedDataset &ds, const std::vector<double> &thresholds,
                   const GenerationClient &gen, const Embedder &embedder, const RunOptions &opts) {
    std::vector<std::string> questions;
    for (const auto &p : ts.pairs) questions.push_back(p.question);
    const auto queries = questions.empty() ? std::vector<EmbeddingVector>{} : embedder.embed_batch(questions);
    if (!queries.empty() && queries.front().dim() != ds.dim)
        throw Error(ErrorCode::dim_mismatch, "embedder dim " + std::to_string(queries.front().dim()) +
                                                 " does not match index dim " + std::to_string(ds.dim));
    SweepRun sweep;
    sweep.kind = ds.kind;
    for (double tau : thresholds) {
        auto run = score_all(ts, embedder, opts, [&](std::size_t i) {
            auto ans = prepare_answer(questions[i], queries[i], ds, tau, opts.rag);
            complete_answer(ans, gen, opts.rag);
            return *ans.generated_text;
        });
        check_failures(run, ts.pairs.size(), opts.failure_budget,
                       std::string(to_string(ds.kind)) + " at threshold " + format_double(tau));
        sweep.by_threshold.push_back({tau, std::move(run)});
    }
    return sweep;
}

// Summaries -------------------------------------------------------------------------------

ArmRows baseline_arm(std::string label, const ArmRun &run) { return {std::move(label), {{std::nullopt, run.rows}}}; }

ArmRows sweep_arm(std::string label, const SweepRun &run) {
    ArmRows arm{std::move(label), {}};
    for (const auto &t : run.by_threshold) arm.groups.push_back({t.threshold, t.run.rows});
    return arm;
}

MetricMeans mean_scores(std::vector<ScoreRow> rows) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ScoreRow &a, const ScoreRow &b) { return a.question_id < b.question_id; });
    MetricMeans m;
    m.n = rows.size();
    if (rows.empty()) return m;
    for (const auto &r : rows) {
        m.rouge += r.rouge;
        m.meteor += r.meteor;
        m.bleu += r.bleu;
        m.cs += r.cs;
    }
    const double n = static_cast<double>(rows.size());
    m.rouge /= n;
    m.meteor /= n;
    m.bleu /= n;
    m.cs /= n;
    return m;
}

const ArmSummary *ReportTable::arm(const std::string &label) const {
    for (const auto &a : arms)
        if (a.label == label) return &a;
    return nullptr;
}

const RelativeDelta *ReportTable::delta(const std::string &numerator, const std::string &denominator) const {
    for (const auto &d : deltas)
        if (d.numerator == numerator && d.denominator == denominator) return &d;
    return nullptr;
}

namespace {

double relative(double a, double b, double base) {
    return base == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (a - b) / base;
}

double relative(double a, double b) { return relative(a, b, b); }

// Fills best thresholds and deltas from the per-arm means.
void finalize(ReportTable &table) {
    for (auto &arm : table.arms) {
        arm.best_threshold.reset();
        double best_cs = -std::numeric_limits<double>::infinity();
        for (const auto &t : arm.per_threshold) {
            if (t.means.cs > best_cs) {
                best_cs = t.means.cs;
                arm.best_threshold = t.threshold;
            }
        }
    }
    table.deltas.clear();
    for (const auto &a : table.arms) {
        for (const auto &b : table.arms) {
            if (&a == &b) continue;
            table.deltas.push_back({a.label, b.label, relative(a.overall.rouge, b.overall.rouge),
                                    relative(a.overall.meteor, b.overall.meteor),
                                    relative(a.overall.bleu, b.overall.bleu), relative(a.overall.cs, b.overall.cs),
                                    relative(a.overall.meteor, b.overall.meteor, a.overall.meteor)});
        }
    }
}

} // namespace

ReportTable summarize(const std::vector<ArmRows> &arms) {
    ReportTable table;
    for (const auto &arm : arms) {
        ArmSummary s;
        s.label = arm.label;
        std::vector<ScoreRow> all;
        auto groups = arm.groups;
        std::stable_sort(groups.begin(), groups.end(), [](const RowGroup &a, const RowGroup &b) {
            return a.threshold.value_or(-1.0) < b.threshold.value_or(-1.0);
        });
        for (const auto &g : groups) {
            all.insert(all.end(), g.rows.begin(), g.rows.end());
            if (g.threshold) s.per_threshold.push_back({*g.threshold, mean_scores(g.rows)});
        }
        s.overall = mean_scores(std::move(all));
        table.arms.push_back(std::move(s));
    }
    finalize(table);
    return table;
}

// Report files ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kReportCsvHeader = "arm,threshold,n,rouge,meteor,bleu,cs";

std::string means_csv(const std::string &label, const std::string &threshold, const MetricMeans &m) {
    return csv_quote(label) + "," + threshold + "," + std::to_string(m.n) + "," + format_double(m.rouge) + "," +
           format_double(m.meteor) + "," + format_double(m.bleu) + "," + format_double(m.cs) + "\n";
}

double parse_number(const std::string &s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception &) {
    }
    throw Error(ErrorCode::malformed_file, "not a number: '" + s + "'");
}

json means_json(const MetricMeans &m) {
    return json{{"n", m.n}, {"rouge", m.rouge}, {"meteor", m.meteor}, {"bleu", m.bleu}, {"cs", m.cs}};
}

MetricMeans means_from_json(const json &j) {
    auto num = [&](const char *k) { return j.at(k).is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at(k).get<double>(); };
    return {j.at("n").get<std::size_t>(), num("rouge"), num("meteor"), num("bleu"), num("cs")};
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

const std::vector<std::string> kRadarAxes{"ROUGE", "METEOR", "BLEU", "CS"};

std::vector<double> axis_values(const MetricMeans &m) { return {m.rouge, m.meteor, m.bleu, m.cs}; }

// Each axis scaled by its largest value across arms.
std::vector<std::vector<double>> normalized_series(const ReportTable &table) {
    std::vector<double> max(kRadarAxes.size(), 0.0);
    for (const auto &a : table.arms) {
        const auto v = axis_values(a.overall);
        for (std::size_t k = 0; k < v.size(); ++k) max[k] = std::max(max[k], v[k]);
    }
    std::vector<std::vector<double>> out;
    for (const auto &a : table.arms) {
        auto v = axis_values(a.overall);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = max[k] > 0.0 ? std::max(0.0, v[k]) / max[k] : 0.0;
        out.push_back(std::move(v));
    }
    return out;
}

} // namespace

std::string report_csv(const ReportTable &table) {
    std::string out(kReportCsvHeader);
    out += '\n';
    for (const auto &a : table.arms) {
        out += means_csv(a.label, "all", a.overall);
        for (const auto &t : a.per_threshold) out += means_csv(a.label, format_double(t.threshold), t.means);
    }
    return out;
}

ReportTable report_from_csv(std::string_view csv) {
    const auto rows = parse_csv(csv);
    if (rows.empty() || text::join(rows.front(), ",") != kReportCsvHeader)
        throw Error(ErrorCode::malformed_file, "report CSV header must be '" + std::string(kReportCsvHeader) + "'");
    ReportTable table;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto &f = rows[i];
        if (f.size() != 7) throw Error(ErrorCode::malformed_file, "report CSV row with wrong field count");
        if (table.arms.empty() || table.arms.back().label != f[0]) table.arms.push_back({f[0], {}, {}, std::nullopt});
        const MetricMeans m{static_cast<std::size_t>(std::stoull(f[2])), parse_number(f[3]), parse_number(f[4]),
                            parse_number(f[5]), parse_number(f[6])};
        if (f[1] == "all") table.arms.back().overall = m;
        else table.arms.back().per_threshold.push_back({parse_number(f[1]), m});
    }
    finalize(table);
    return table;
}

json report_json(const ReportTable &table, const json &metadata) {
    json arms = json::array();
    for (const auto &a : table.arms) {
        json per = json::array();
        for (const auto &t : a.per_threshold) {
            auto j = means_json(t.means);
            j["threshold"] = t.threshold;
            per.push_back(std::move(j));
        }
        json arm{{"label", a.label}, {"overall", means_json(a.overall)}, {"per_threshold", per}};
        arm["best_threshold"] = a.best_threshold ? json(*a.best_threshold) : json(nullptr);
        arms.push_back(std::move(arm));
    }
    json deltas = json::array();
    for (const auto &d : table.deltas) {
        deltas.push_back(json{{"numerator", d.numerator}, {"denominator", d.denominator}, {"rouge", d.rouge},
                              {"meteor", d.meteor}, {"bleu", d.bleu}, {"cs", d.cs},
                              {"meteor_over_numerator", d.meteor_over_numerator}});
    }
    return json{{"arms", arms},
                {"deltas", deltas},
                {"delta_convention", "(numerator - denominator) / denominator"},
                {"best_threshold_metric", "cs"},
                {"metadata", metadata}};
}

ReportTable report_from_json(const json &j) {
    ReportTable table;
    try {
        for (const auto &a : j.at("arms")) {
            ArmSummary s;
            s.label = a.at("label").get<std::string>();
            s.overall = means_from_json(a.at("overall"));
            for (const auto &t : a.at("per_threshold"))
                s.per_threshold.push_back({t.at("threshold").get<double>(), means_from_json(t)});
            table.arms.push_back(std::move(s));
        }
    } catch (const json::exception &e) {
        throw Error(ErrorCode::malformed_file, std::string("report JSON: ") + e.what());
    }
    finalize(table);
    return table;
}

json radar_json(const ReportTable &table) {
    const auto norm = normalized_series(table);
    json series = json::array();
    for (std::size_t i = 0; i < table.arms.size(); ++i) {
        series.push_back(json{{"label", table.arms[i].label},
                              {"values", axis_values(table.arms[i].overall)},
                              {"normalized", norm[i]}});
    }
    return json{{"axes", kRadarAxes}, {"series", series}};
}

std::string radar_svg(const ReportTable &table) {
    static const char *kColors[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1"};
    constexpr double cx = 260.0;
    constexpr double cy = 240.0;
    constexpr double radius = 170.0;
    const std::size_t axes = kRadarAxes.size();
    auto at = [&](std::size_t k, double r) {
        const double angle = -M_PI / 2.0 + 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(axes);
        return std::pair{cx + r * radius * std::cos(angle), cy + r * radius * std::sin(angle)};
    };

    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n"
                      "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    for (double ring : {0.25, 0.5, 0.75, 1.0}) {
        svg += "<polygon fill=\"none\" stroke=\"#cccccc\" points=\"";
        for (std::size_t k = 0; k < axes; ++k) {
            const auto [x, y] = at(k, ring);
            svg += fixed(x) + "," + fixed(y) + " ";
        }
        svg += "\"/>\n";
    }
    for (std::size_t k = 0; k < axes; ++k) {
        const auto [x, y] = at(k, 1.0);
        const auto [lx, ly] = at(k, 1.12);
        svg += "<line x1=\"" + fixed(cx) + "\" y1=\"" + fixed(cy) + "\" x2=\"" + fixed(x) + "\" y2=\"" + fixed(y) +
               "\" stroke=\"#999999\"/>\n";
        svg += "<text x=\"" + fixed(lx) + "\" y=\"" + fixed(ly) +
               "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" + kRadarAxes[k] + "</text>\n";
    }
    const auto norm = normalized_series(table);
    for (std::size_t i = 0; i < table.arms.size(); ++i) {
        const char *color = kColors[i % std::size(kColors)];
        svg += "<polygon fill=\"" + std::string(color) + "\" fill-opacity=\"0.15\" stroke=\"" + color +
               "\" stroke-width=\"2\" points=\"";
        for (std::size_t k = 0; k < axes; ++k) {
            const auto [x, y] = at(k, norm[i][k]);
            svg += fixed(x) + "," + fixed(y) + " ";
        }
        svg += "\"/>\n";
        const double ly = 30.0 + 20.0 * static_cast<double>(i);
        svg += "<rect x=\"470\" y=\"" + fixed(ly - 10) + "\" width=\"12\" height=\"12\" fill=\"" + color + "\"/>\n";
        svg += "<text x=\"488\" y=\"" + fixed(ly) + "\" font-family=\"sans-serif\" font-size=\"12\">" +
               xml_escape(table.arms[i].label) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

ReportFiles emit_report(const ReportTable &table, const std::filesystem::path &dir, bool svg, const json &metadata) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
    ReportFiles files{dir / "report.csv", dir / "report.json", dir / "radar.json", std::nullopt};
    write_file(files.csv, report_csv(table));
    write_file(files.json, report_json(table, metadata).dump(2) + "\n");
    write_file(files.radar, radar_json(table).dump(2) + "\n");
    if (svg) {
        files.svg = dir / "radar.svg";
        write_file(*files.svg, radar_svg(table));
    }
    return files;
}

std::vector<json> rows_to_jsonl(const std::vector<ArmRows> &arms) {
    std::vector<json> out;
    for (const auto &arm : arms) {
        for (const auto &g : arm.groups) {
            for (const auto &r : g.rows) {
                auto j = to_json(r);
                j["arm"] = arm.label;
                j["threshold"] = g.threshold ? json(*g.threshold) : json(nullptr);
                out.push_back(std::move(j));
            }
        }
    }
    return out;
}

std::vector<ArmRows> rows_from_jsonl(const std::vector<json> &records) {
    std::vector<ArmRows> arms;
    std::map<std::string, std::size_t> arm_at;
    for (const auto &r : records) {
        std::string label;
        std::optional<double> tau;
        try {
            label = r.at("arm").get<std::string>();
            if (!r.at("threshold").is_null()) tau = r.at("threshold").get<double>();
        } catch (const json::exception &e) {
            throw Error(ErrorCode::malformed_file, std::string("row record: ") + e.what());
        }
        auto [it, fresh] = arm_at.try_emplace(label, arms.size());
        if (fresh) arms.push_back({label, {}});
        auto &groups = arms[it->second].groups;
        auto g = std::find_if(groups.begin(), groups.end(), [&](const RowGroup &x) { return x.threshold == tau; });
        if (g == groups.end()) {
            groups.push_back({tau, {}});
            g = groups.end() - 1;
        }
        g->rows.push_back(score_row_from_json(r));
    }
    return arms;
}

ExperimentResult run_experiment(const ExperimentConfig &cfg, const GenerationClient &gen, const Embedder &embedder) {
    validate(cfg);
    if (cfg.testset.empty()) throw Error(ErrorCode::config, "experiment.testset is not set");
    const auto ts = load_testset(cfg.testset);
    if (ts.pairs.empty()) throw Error(ErrorCode::invalid_argument, "test set has no question-answer pairs");

    ExperimentResult result;
    auto base = run_baseline(ts, gen, embedder, cfg.run);
    result.warnings.insert(result.warnings.end(), base.warnings.begin(), base.warnings.end());
    result.arms.push_back(baseline_arm("Baseline", base));

    for (const auto &path : {cfg.index_s, cfg.index_q}) {
        if (path.empty()) continue;
        const auto ds = load_index(path);
        const auto sweep = run_sweep(ts, ds, cfg.thresholds, gen, embedder, cfg.run);
        for (const auto &t : sweep.by_threshold)
            result.warnings.insert(result.warnings.end(), t.run.warnings.begin(), t.run.warnings.end());
        result.arms.push_back(sweep_arm("RAG " + std::string(to_string(ds.kind)), sweep));
    }
    result.table = summarize(result.arms);
    return result;
}

} // namespace ragmark
