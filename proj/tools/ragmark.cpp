// ragmark: command-line front end for the retrieval evaluation pipeline.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ragmark/corpus.hpp"
#include "ragmark/embed.hpp"
#include "ragmark/error.hpp"
#include "ragmark/experiment.hpp"
#include "ragmark/generate.hpp"
#include "ragmark/index.hpp"
#include "ragmark/metrics.hpp"
#include "ragmark/qagen.hpp"
#include "ragmark/retrieve.hpp"
#include "ragmark/settings.hpp"
#include "ragmark/testgen.hpp"

namespace fs = std::filesystem;
using namespace ragmark;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitAborted = 2;
constexpr int kExitIo = 3;

struct Globals {
    std::string config_path;
    std::vector<std::string> overrides;
    bool dry_run = false;
    int verbosity = 0;
};

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::config:
    case ErrorCode::invalid_argument:
        return kExitUsage;
    case ErrorCode::io:
    case ErrorCode::checksum:
    case ErrorCode::version_mismatch:
    case ErrorCode::malformed_file:
        return kExitIo;
    default:
        return kExitAborted;
    }
}

void report_warnings(const Globals &g, const std::vector<std::string> &warnings) {
    if (warnings.empty()) return;
    if (g.verbosity > 0) {
        for (const auto &w : warnings) std::cerr << "warning: " << w << "\n";
    } else {
        std::cerr << warnings.size() << " warning(s); rerun with -v to list them\n";
    }
}

void require_file(const std::string &what, const fs::path &path) {
    if (path.empty()) throw Error(ErrorCode::config, what + " is not set");
    if (!fs::is_regular_file(path)) throw Error(ErrorCode::io, what + ": no such file " + path.string());
}

void plan_write(const fs::path &path) { std::cout << "would write " << path.string() << "\n"; }

// Flags override --set, which overrides the config file, which overrides defaults.
Config load_config(const Globals &g) {
    std::string path = g.config_path;
    if (path.empty()) {
        if (const char *env = std::getenv("RAGMARK_CONFIG")) path = env;
    }
    Config cfg = path.empty() ? Config{} : Config::from_file(path);
    for (const auto &kv : g.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::config, "--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

void set_if(Config &cfg, const std::string &key, const std::optional<std::string> &value) {
    if (value) cfg.set(key, *value);
}

// ingest ------------------------------------------------------------------------------

struct IngestArgs {
    std::vector<std::string> inputs;
    std::string out_dir = "corpus";
};

std::vector<fs::path> expand_inputs(const std::vector<std::string> &inputs) {
    std::vector<fs::path> files;
    for (const auto &in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto &e : fs::directory_iterator(p)) {
                const auto ext = e.path().extension();
                if (e.is_regular_file() && (ext == ".txt" || ext == ".md" || ext == ".json")) found.push_back(e.path());
            }
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else if (fs::is_regular_file(p)) {
            files.push_back(p);
        } else {
            throw Error(ErrorCode::io, "no such input " + in);
        }
    }
    return files;
}

int run_ingest(const Globals &g, const IngestArgs &a) {
    const auto cfg = load_config(g);
    const auto settings = corpus_settings(cfg);
    const auto files = expand_inputs(a.inputs);
    const fs::path out(a.out_dir);
    if (g.dry_run) {
        std::cout << "ingest " << files.size() << " input file(s), paragraph budget " << settings.paragraph_budget
                  << "\n";
        plan_write(out / "paragraphs.jsonl");
        plan_write(out / "sentences.jsonl");
        return 0;
    }

    std::vector<Document> docs;
    std::vector<json> rejections;
    for (const auto &f : files) {
        if (f.extension() == ".json") {
            json records;
            try {
                records = json::parse(read_file(f));
            } catch (const json::parse_error &e) {
                throw Error(ErrorCode::malformed_file, f.string() + ": " + e.what());
            }
            auto filtered = filter_cord19(records);
            for (auto &d : filtered.documents) docs.push_back(std::move(d));
            for (const auto &r : filtered.rejections)
                rejections.push_back(
                    json{{"file", f.string()}, {"index", r.index}, {"paper_id", r.paper_id}, {"reason", to_string(r.reason)}});
        } else {
            docs.push_back(load_text_document(f));
        }
    }

    const auto counters = default_counters();
    std::vector<json> paragraph_records;
    std::vector<json> sentence_records;
    std::vector<std::string> warnings;
    std::size_t hard_splits = 0;
    for (auto &doc : docs) {
        std::vector<Paragraph> paragraphs;
        try {
            paragraphs = split_paragraphs(doc, counters, settings.paragraph_budget);
        } catch (const Error &e) {
            if (e.code() != ErrorCode::empty_document) throw;
            warnings.push_back(doc.id + ": " + e.what());
            continue;
        }
        flag_hard_splits(doc, paragraphs);
        for (const auto &p : paragraphs) {
            hard_splits += p.hard_split;
            paragraph_records.push_back(to_json(p));
        }
        for (const auto &s : filter_sentences(extract_sentences(paragraphs), settings.min_words, settings.max_words))
            sentence_records.push_back(to_json(s));
    }
    write_jsonl(out / "paragraphs.jsonl", paragraph_records);
    write_jsonl(out / "sentences.jsonl", sentence_records);
    if (!rejections.empty()) write_jsonl(out / "rejections.jsonl", rejections);
    std::cout << docs.size() << " document(s), " << paragraph_records.size() << " paragraph(s) (" << hard_splits
              << " hard split), " << sentence_records.size() << " sentence(s), " << rejections.size()
              << " rejected record(s) -> " << out.string() << "\n";
    report_warnings(g, warnings);
    return 0;
}

// qa-gen ------------------------------------------------------------------------------

struct QaGenArgs {
    std::string paragraphs = "corpus/paragraphs.jsonl";
    std::string out_dir = "qa";
    std::optional<std::string> endpoint;
    std::optional<std::string> k;
};

int run_qa_gen(const Globals &g, const QaGenArgs &a) {
    auto cfg = load_config(g);
    set_if(cfg, "qg.endpoint", a.endpoint);
    set_if(cfg, "qg.k", a.k);
    const auto settings = qa_settings(cfg);
    const auto client = make_question_client(cfg);
    require_file("--paragraphs", a.paragraphs);
    const fs::path out(a.out_dir);
    if (g.dry_run) {
        std::cout << "generate up to " << settings.k << " question(s) per paragraph with " << client->name() << "\n";
        for (const char *f : {"qa.jsonl", "train.jsonl", "validation.jsonl"}) plan_write(out / f);
        return 0;
    }

    std::vector<Paragraph> paragraphs;
    for (const auto &r : read_jsonl(a.paragraphs)) paragraphs.push_back(paragraph_from_json(r));
    auto build = build_qa_dataset(paragraphs, *client, settings.k, settings.max_inflight);
    auto split = split_train_validation(build.dataset, settings.validation_ratio, settings.split_seed);
    write_jsonl(out / "qa.jsonl", to_jsonl(build.dataset));
    write_jsonl(out / "train.jsonl", to_jsonl(split.train));
    write_jsonl(out / "validation.jsonl", to_jsonl(split.validation));
    std::cout << build.dataset.question_count() << " question(s) over " << build.dataset.paragraph_count()
              << " paragraph(s); train " << split.train.question_count() << ", validation "
              << split.validation.question_count() << ", skipped " << build.skipped.size() << "\n";
    auto warnings = build.warnings;
    warnings.insert(warnings.end(), split.warnings.begin(), split.warnings.end());
    report_warnings(g, warnings);
    return 0;
}

// index -------------------------------------------------------------------------------

struct IndexArgs {
    std::string kind = "ID_s";
    std::string input;
    std::string out;
    std::optional<std::string> endpoint;
};

int run_index(const Globals &g, const IndexArgs &a) {
    auto cfg = load_config(g);
    set_if(cfg, "embed.endpoint", a.endpoint);
    const auto kind = index_kind_from_string(a.kind);
    const auto embedder = make_embedder(cfg);
    require_file("--input", a.input);
    const fs::path out = a.out.empty() ? fs::path(kind == IndexKind::sentences ? "index_s.jsonl" : "index_q.jsonl")
                                       : fs::path(a.out);
    if (g.dry_run) {
        std::cout << "embed " << a.input << " with " << embedder->name() << " into a " << to_string(kind) << " index\n";
        plan_write(out);
        return 0;
    }

    const auto records = read_jsonl(a.input);
    IndexBuild build;
    if (kind == IndexKind::sentences) {
        std::vector<Sentence> sentences;
        for (const auto &r : records) sentences.push_back(sentence_from_json(r));
        build = build_sentence_index(sentences, *embedder);
    } else {
        build = build_question_index(qa_dataset_from_jsonl(records), *embedder);
    }
    save_index(build.dataset, out);
    std::cout << build.dataset.entries.size() << " " << to_string(kind) << " entries, dim " << build.dataset.dim
              << " -> " << out.string() << "\n";
    report_warnings(g, build.warnings);
    return 0;
}

// testgen -----------------------------------------------------------------------------

struct TestgenArgs {
    std::string index = "index_s.jsonl";
    std::string out = "testset.jsonl";
    std::optional<std::string> endpoint;
};

int run_testgen(const Globals &g, const TestgenArgs &a) {
    auto cfg = load_config(g);
    set_if(cfg, "qg.endpoint", a.endpoint);
    const auto params = testgen_params(cfg);
    const auto client = make_question_client(cfg);
    require_file("--index", a.index);
    if (g.dry_run) {
        std::cout << "reduce to " << params.target_dim << " dim(s), cluster with min_pts " << params.cluster.min_pts
                  << ", question generator " << client->name() << "\n";
        plan_write(a.out);
        return 0;
    }

    const auto ds = load_index(a.index);
    const auto ts = assemble_test_set(ds, PcaReducer{}, DbscanClusterer{}, default_counters(), *client, params);
    save_testset(ts, a.out);
    std::cout << ts.clusters.size() << " cluster(s) kept, " << ts.dropped.size() << " dropped, " << ts.pairs.size()
              << " test pair(s) -> " << a.out << "\n";
    report_warnings(g, ts.warnings);
    return 0;
}

// ask ---------------------------------------------------------------------------------

struct AskArgs {
    std::string question;
    std::string index;
    double threshold = 0.5;
    std::optional<std::string> reference;
    std::optional<std::string> endpoint;
};

int run_ask(const Globals &g, const AskArgs &a) {
    auto cfg = load_config(g);
    set_if(cfg, "gen.endpoint", a.endpoint);
    const auto gen_cfg = gen_settings(cfg);
    const auto rag = rag_settings(cfg, gen_cfg);
    const auto embedder = make_embedder(cfg);
    const auto gen = make_generation_client(cfg);
    require_file("--index", a.index);
    if (!(a.threshold >= 0.0 && a.threshold <= 1.0)) throw Error(ErrorCode::config, "--threshold must lie in [0, 1]");
    if (g.dry_run) {
        std::cout << "answer one question against " << a.index << " at threshold " << format_double(a.threshold)
                  << " with " << gen->name() << "\n";
        return 0;
    }

    const auto ds = load_index(a.index);
    RagAnswer ans;
    std::optional<Error> failure;
    try {
        ans = answer(a.question, ds, a.threshold, *embedder, *gen, rag);
    } catch (const GenerationFailure &e) {
        ans = e.partial();
        failure = Error(e.cause_code(), e.what());
    }

    std::cout << "question:  " << ans.question << "\n"
              << "index:     " << to_string(ans.dataset_kind) << " (" << ds.entries.size() << " entries)\n"
              << "threshold: " << format_double(ans.threshold) << "\n"
              << "hits:      " << ans.hits.size() << " passing, " << ans.context.included.size() << " packed, "
              << ans.context.token_count << " context tokens" << (ans.context.truncated ? ", truncated" : "") << "\n";
    for (std::size_t i = 0; i < ans.context.included.size() && i < 10; ++i) {
        const auto &hit = ans.context.included[i];
        std::cout << "  [" << format_double(hit.score) << "] " << ds.entries[hit.entry].key_text << "\n";
    }
    std::cout << "--- context ---\n" << ans.context.text << "\n--- answer ---\n";
    if (failure) {
        std::cout << "(generation failed)\n";
        std::cerr << "error: " << failure->what() << "\n";
        return kExitAborted;
    }
    std::cout << *ans.generated_text << "\n";

    if (a.reference) {
        std::vector<std::string> warnings;
        const auto row = score_row("ask", *ans.generated_text, *a.reference, *embedder, &warnings);
        std::cout << "--- scores ---\n"
                  << "rouge  " << format_double(row.rouge) << "\n"
                  << "meteor " << format_double(row.meteor) << "\n"
                  << "bleu   " << format_double(row.bleu) << "\n"
                  << "cs     " << format_double(row.cs) << "\n";
        report_warnings(g, warnings);
    }
    return 0;
}

// sweep / report ----------------------------------------------------------------------

struct SweepArgs {
    std::optional<std::string> testset;
    std::optional<std::string> index_s;
    std::optional<std::string> index_q;
    std::optional<std::string> thresholds;
    std::optional<std::string> out_dir;
    std::optional<std::string> endpoint;
};

json run_metadata(const ExperimentConfig &ec, const GenerationClient &gen, const Embedder &embedder) {
    return json{{"seed", ec.seed},
                {"thresholds", ec.thresholds},
                {"testset", ec.testset.string()},
                {"index_s", ec.index_s.string()},
                {"index_q", ec.index_q.string()},
                {"generator", gen.name()},
                {"embedder", embedder.name()}};
}

int run_sweep_cmd(const Globals &g, const SweepArgs &a) {
    auto cfg = load_config(g);
    set_if(cfg, "experiment.testset", a.testset);
    set_if(cfg, "experiment.index_s", a.index_s);
    set_if(cfg, "experiment.index_q", a.index_q);
    set_if(cfg, "experiment.thresholds", a.thresholds);
    set_if(cfg, "experiment.output_dir", a.out_dir);
    set_if(cfg, "gen.endpoint", a.endpoint);
    auto ec = experiment_config(cfg);
    const auto gen_cfg = gen_settings(cfg);
    ec.run.max_inflight = gen_cfg.max_inflight;
    ec.run.rag = rag_settings(cfg, gen_cfg);
    const auto embedder = make_embedder(cfg);
    const auto gen = make_generation_client(cfg);
    require_file("experiment.testset", ec.testset);
    if (!ec.index_s.empty()) require_file("experiment.index_s", ec.index_s);
    if (!ec.index_q.empty()) require_file("experiment.index_q", ec.index_q);
    if (g.dry_run) {
        std::cout << "baseline plus " << (!ec.index_s.empty()) + (!ec.index_q.empty()) << " RAG arm(s) over "
                  << ec.thresholds.size() << " threshold(s) with " << gen->name() << "\n";
        for (const char *f : {"report.csv", "report.json", "radar.json", "rows.jsonl"}) plan_write(ec.output_dir / f);
        if (ec.svg) plan_write(ec.output_dir / "radar.svg");
        return 0;
    }

    const auto result = run_experiment(ec, *gen, *embedder);
    emit_report(result.table, ec.output_dir, ec.svg, run_metadata(ec, *gen, *embedder));
    write_jsonl(ec.output_dir / "rows.jsonl", rows_to_jsonl(result.arms));
    std::cout << report_csv(result.table);
    std::cout << "report -> " << ec.output_dir.string() << "\n";
    report_warnings(g, result.warnings);
    return 0;
}

struct ReportArgs {
    std::string rows = "report/rows.jsonl";
    std::optional<std::string> out_dir;
};

int run_report(const Globals &g, const ReportArgs &a) {
    auto cfg = load_config(g);
    set_if(cfg, "experiment.output_dir", a.out_dir);
    const fs::path out = cfg.get_string("experiment.output_dir");
    const bool svg = cfg.get_bool("experiment.svg");
    require_file("--rows", a.rows);
    if (g.dry_run) {
        for (const char *f : {"report.csv", "report.json", "radar.json"}) plan_write(out / f);
        if (svg) plan_write(out / "radar.svg");
        return 0;
    }
    const auto table = summarize(rows_from_jsonl(read_jsonl(a.rows)));
    emit_report(table, out, svg, json{{"rows", a.rows}});
    std::cout << report_csv(table);
    return 0;
}

int run_config_list(const Globals &g) {
    const auto cfg = load_config(g);
    for (const auto &k : config_registry()) {
        const auto &values = cfg.explicit_values();
        const auto it = values.find(k.key);
        std::cout << k.key << " = " << (it == values.end() ? k.default_value : it->second) << "    [" << k.module
                  << "] " << k.description << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"ragmark: retrieval-augmented generation evaluation harness.\n"
                 "Precedence: long-form flags > --set key=value > config file (--config or $RAGMARK_CONFIG) > "
                 "built-in defaults."};
    app.require_subcommand(1);
    // global options may also follow the subcommand
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "flat key=value config file (default: $RAGMARK_CONFIG)");
    app.add_option("--set", g.overrides, "override one config key, key=value (repeatable)")->allow_extra_args(false);
    app.add_flag("--dry-run", g.dry_run, "validate and print the plan without writing anything");
    app.add_flag("-v,--verbose", g.verbosity, "list warnings");

    IngestArgs ingest;
    auto *c_ingest = app.add_subcommand("ingest", "split documents into paragraphs and index sentences");
    c_ingest->add_option("--input", ingest.inputs, "text files, directories or CORD-19 JSON arrays")->required();
    c_ingest->add_option("--out-dir", ingest.out_dir, "output directory")->capture_default_str();

    QaGenArgs qa;
    auto *c_qa = app.add_subcommand("qa-gen", "generate questions per paragraph and split train/validation");
    c_qa->add_option("--paragraphs", qa.paragraphs, "paragraphs JSONL")->capture_default_str();
    c_qa->add_option("--out-dir", qa.out_dir, "output directory")->capture_default_str();
    c_qa->add_option("--endpoint", qa.endpoint, "question generator base URL (qg.endpoint)");
    c_qa->add_option("--k", qa.k, "questions per paragraph (qg.k)");

    IndexArgs idx;
    auto *c_index = app.add_subcommand("index", "embed sentences (ID_s) or questions (ID_q) into an index file");
    c_index->add_option("--kind", idx.kind, "ID_s or ID_q")->capture_default_str();
    c_index->add_option("--input", idx.input, "sentences JSONL for ID_s, QA JSONL for ID_q")->required();
    c_index->add_option("--out", idx.out, "index file (default index_s.jsonl / index_q.jsonl)");
    c_index->add_option("--endpoint", idx.endpoint, "embedding service base URL (embed.endpoint)");

    TestgenArgs tg;
    auto *c_testgen = app.add_subcommand("testgen", "cluster a sentence index into a test set");
    c_testgen->add_option("--index", tg.index, "sentence index")->capture_default_str();
    c_testgen->add_option("--out", tg.out, "test-set JSONL")->capture_default_str();
    c_testgen->add_option("--endpoint", tg.endpoint, "question generator base URL (qg.endpoint)");

    AskArgs ask;
    auto *c_ask = app.add_subcommand("ask", "answer one question with retrieved context");
    c_ask->add_option("--question", ask.question, "question text")->required();
    c_ask->add_option("--index", ask.index, "index file")->required();
    c_ask->add_option("--threshold", ask.threshold, "minimum cosine similarity")->capture_default_str();
    c_ask->add_option("--reference", ask.reference, "reference answer to score against");
    c_ask->add_option("--endpoint", ask.endpoint, "generation base URL or mock:extractive / mock:echo");

    SweepArgs sw;
    auto *c_sweep = app.add_subcommand("sweep", "baseline plus threshold sweeps; writes report files");
    c_sweep->add_option("--testset", sw.testset, "test-set JSONL (experiment.testset)");
    c_sweep->add_option("--index-s", sw.index_s, "sentence index (experiment.index_s)");
    c_sweep->add_option("--index-q", sw.index_q, "question index (experiment.index_q)");
    c_sweep->add_option("--thresholds", sw.thresholds, "comma-separated thresholds (experiment.thresholds)");
    c_sweep->add_option("--out-dir", sw.out_dir, "report directory (experiment.output_dir)");
    c_sweep->add_option("--endpoint", sw.endpoint, "generation base URL (gen.endpoint)");

    ReportArgs rep;
    auto *c_report = app.add_subcommand("report", "rebuild report files from scored rows");
    c_report->add_option("--rows", rep.rows, "rows JSONL written by sweep")->capture_default_str();
    c_report->add_option("--out-dir", rep.out_dir, "report directory (experiment.output_dir)");

    bool list = false;
    auto *c_config = app.add_subcommand("config", "inspect configuration keys");
    c_config->add_flag("--list", list, "print every key with its effective value and owning module")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (c_ingest->parsed()) return run_ingest(g, ingest);
        if (c_qa->parsed()) return run_qa_gen(g, qa);
        if (c_index->parsed()) return run_index(g, idx);
        if (c_testgen->parsed()) return run_testgen(g, tg);
        if (c_ask->parsed()) return run_ask(g, ask);
        if (c_sweep->parsed()) return run_sweep_cmd(g, sw);
        if (c_report->parsed()) return run_report(g, rep);
        if (c_config->parsed()) return run_config_list(g);
    } catch (const Error &e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error &e) {
        std::cerr << "error [io]: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAborted;
    }
    std::cerr << app.help();
    return kExitUsage;
}
