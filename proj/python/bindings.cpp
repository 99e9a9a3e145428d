#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

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

namespace py = pybind11;
using namespace ragmark;

namespace {

// JSON crosses the boundary through the stdlib json module; the payloads are small.
py::object to_py(const json &j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle &o) {
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::list to_py_list(const std::vector<json> &records) {
    py::list out;
    for (const auto &r : records) out.append(to_py(r));
    return out;
}

std::vector<json> from_py_list(const py::list &items) {
    std::vector<json> out;
    for (const auto &i : items) out.push_back(from_py(i));
    return out;
}

Config config_from(const std::map<std::string, std::string> &overrides) {
    Config cfg;
    for (const auto &[k, v] : overrides) cfg.set(k, v);
    return cfg;
}

EmbeddingVector vec(const std::vector<double> &v) { return EmbeddingVector{v}; }

py::list hits_to_py(const std::vector<RetrievalHit> &hits) {
    py::list out;
    for (const auto &h : hits) out.append(py::make_tuple(h.score, h.entry));
    return out;
}

py::dict answer_to_py(const RagAnswer &a) {
    py::dict d;
    d["question"] = a.question;
    d["threshold"] = a.threshold;
    d["kind"] = std::string(to_string(a.dataset_kind));
    d["hits"] = hits_to_py(a.hits);
    d["context"] = a.context.text;
    d["context_tokens"] = a.context.token_count;
    d["truncated"] = a.context.truncated;
    d["prompt"] = a.prompt;
    d["answer"] = a.generated_text ? py::cast(*a.generated_text) : py::none();
    return d;
}

} // namespace

PYBIND11_MODULE(_ragmark, m) {
    m.doc() = "RAG benchmarking core: corpus prep, indexes, retrieval, metrics and experiment sweeps.";

    static py::exception<Error> error(m, "RagmarkError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error &e) {
            py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(std::string(e.what()));
            exc.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(error.ptr(), exc.ptr());
        }
    });

    // text and corpus
    m.def("count_tokens", [](const std::string &s) { return max_token_count(default_counters(), s); });
    m.def("split_sentences", &split_sentences, py::arg("text"));
    m.def(
        "split_paragraphs",
        [](const std::string &body, const std::string &doc_id, std::size_t budget) {
            Document doc{doc_id, doc_id, body, {}};
            std::vector<json> out;
            for (const auto &p : split_paragraphs(doc, default_counters(), budget)) out.push_back(to_json(p));
            return to_py_list(out);
        },
        py::arg("body"), py::arg("doc_id") = "doc", py::arg("budget") = 256);
    m.def(
        "extract_sentences",
        [](const py::list &paragraphs, int min_words, int max_words) {
            std::vector<Paragraph> ps;
            for (const auto &j : from_py_list(paragraphs)) ps.push_back(paragraph_from_json(j));
            std::vector<json> out;
            for (const auto &s : filter_sentences(extract_sentences(ps), min_words, max_words))
                out.push_back(to_json(s));
            return to_py_list(out);
        },
        py::arg("paragraphs"), py::arg("min_words") = 10, py::arg("max_words") = 30);
    m.def(
        "build_qa",
        [](const py::list &paragraphs, std::uint64_t seed, std::size_t k) {
            std::vector<Paragraph> ps;
            for (const auto &j : from_py_list(paragraphs)) ps.push_back(paragraph_from_json(j));
            return to_py_list(to_jsonl(build_qa_dataset(ps, MockQuestionGenClient(seed), k).dataset));
        },
        py::arg("paragraphs"), py::arg("seed") = 0, py::arg("k") = 5,
        "Question/answer records from the seeded mock question generator.");

    // embedding and generation
    py::class_<Embedder>(m, "Embedder")
        .def_property_readonly("name", &Embedder::name)
        .def_property_readonly("dim", &Embedder::dim)
        .def("embed", [](const Embedder &e, const std::string &t) { return e.embed(t).values; })
        .def("embed_batch", [](const Embedder &e, const std::vector<std::string> &texts) {
            std::vector<std::vector<double>> out;
            for (auto &v : e.embed_batch(texts)) out.push_back(std::move(v.values));
            return out;
        });
    py::class_<LocalTestEmbedder, Embedder>(m, "LocalEmbedder").def(py::init<std::size_t>(), py::arg("dim") = 64);
    m.def("make_embedder", [](const std::map<std::string, std::string> &o) { return make_embedder(config_from(o)); },
          py::arg("settings") = std::map<std::string, std::string>{});
    m.def("cosine", [](const std::vector<double> &a, const std::vector<double> &b) { return cosine(vec(a), vec(b)); });

    py::class_<GenerationClient>(m, "Generator")
        .def_property_readonly("name", &GenerationClient::name)
        .def(
            "generate",
            [](const GenerationClient &g, const std::string &prompt, int max_new_tokens, double temperature,
               const std::vector<std::string> &stop) {
                py::gil_scoped_release release;
                return g.generate({prompt, max_new_tokens, temperature, stop});
            },
            py::arg("prompt"), py::arg("max_new_tokens") = 256, py::arg("temperature") = 0.0,
            py::arg("stop") = std::vector<std::string>{});
    m.def(
        "make_generator",
        [](const std::string &endpoint, const std::map<std::string, std::string> &o) {
            auto cfg = config_from(o);
            cfg.set("gen.endpoint", endpoint);
            return make_generation_client(cfg);
        },
        py::arg("endpoint") = "mock:extractive", py::arg("settings") = std::map<std::string, std::string>{});

    // indexes
    py::class_<IndexedDataset>(m, "Index")
        .def_static(
            "from_sentences",
            [](const py::list &sentences, const Embedder &e) {
                std::vector<Sentence> ss;
                for (const auto &j : from_py_list(sentences)) ss.push_back(sentence_from_json(j));
                return build_sentence_index(ss, e).dataset;
            },
            py::arg("sentences"), py::arg("embedder"))
        .def_static(
            "from_questions",
            [](const py::list &qa, const Embedder &e) {
                return build_question_index(qa_dataset_from_jsonl(from_py_list(qa)), e).dataset;
            },
            py::arg("qa"), py::arg("embedder"))
        .def_static("load", &load_index, py::arg("path"))
        .def("save", [](const IndexedDataset &ds, const std::filesystem::path &p) { save_index(ds, p); })
        .def_property_readonly("kind", [](const IndexedDataset &ds) { return std::string(to_string(ds.kind)); })
        .def_property_readonly("dim", [](const IndexedDataset &ds) { return ds.dim; })
        .def_property_readonly("embedder_name", [](const IndexedDataset &ds) { return ds.embedder_name; })
        .def("__len__", [](const IndexedDataset &ds) { return ds.entries.size(); })
        .def("payload", [](const IndexedDataset &ds, std::size_t i) { return ds.entries.at(i).payload_text; })
        .def("key", [](const IndexedDataset &ds, std::size_t i) { return ds.entries.at(i).key_text; })
        .def(
            "search",
            [](const IndexedDataset &ds, const std::vector<double> &query, double threshold) {
                return hits_to_py(search(ds, vec(query), threshold));
            },
            py::arg("query"), py::arg("threshold"), "(score, entry) pairs, best first.");

    m.def(
        "answer",
        [](const std::string &question, const IndexedDataset &ds, double threshold, const Embedder &e,
           const GenerationClient &g) {
            RagAnswer a;
            {
                py::gil_scoped_release release;
                a = answer(question, ds, threshold, e, g);
            }
            return answer_to_py(a);
        },
        py::arg("question"), py::arg("index"), py::arg("threshold"), py::arg("embedder"), py::arg("generator"));
    m.def(
        "prepare_answer",
        [](const std::string &question, const IndexedDataset &ds, double threshold, const Embedder &e) {
            return answer_to_py(prepare_answer(question, e.embed(question), ds, threshold, RagSettings{}));
        },
        py::arg("question"), py::arg("index"), py::arg("threshold"), py::arg("embedder"));

    // metrics
    m.def("bleu", [](const std::string &c, const std::string &r, int n) { return bleu(c, r, n); }, py::arg("candidate"),
          py::arg("reference"), py::arg("max_n") = 4);
    m.def("rouge", [](const std::string &c, const std::string &r) { return rouge(c, r); }, py::arg("candidate"),
          py::arg("reference"));
    m.def("meteor", [](const std::string &c, const std::string &r) { return meteor(c, r); }, py::arg("candidate"),
          py::arg("reference"));
    m.def("cs_score", [](const std::string &g, const std::string &r, const Embedder &e) { return cs_score(g, r, e); },
          py::arg("generated"), py::arg("reference"), py::arg("embedder"));
    m.def(
        "score",
        [](const std::string &generated, const std::string &reference, const Embedder &e, const std::string &qid) {
            return to_py(to_json(score_row(qid, generated, reference, e)));
        },
        py::arg("generated"), py::arg("reference"), py::arg("embedder"), py::arg("question_id") = "q00000");

    // test sets and experiments
    m.def(
        "assemble_test_set",
        [](const IndexedDataset &ds, std::uint64_t qg_seed) {
            return to_py_list(to_jsonl(assemble_test_set(ds, PcaReducer{}, DbscanClusterer{}, default_counters(),
                                                         MockQuestionGenClient(qg_seed))));
        },
        py::arg("index"), py::arg("qg_seed") = 5);
    m.def(
        "summarize",
        [](const py::list &rows) { return to_py(report_json(summarize(rows_from_jsonl(from_py_list(rows))))); },
        py::arg("rows"), "Report (arms, per-threshold means, deltas) from tagged score rows.");
    m.def(
        "report_csv", [](const py::object &report) { return report_csv(report_from_json(from_py(report))); },
        py::arg("report"));
    m.def(
        "run_experiment",
        [](const std::filesystem::path &testset, std::optional<std::filesystem::path> index_s,
           std::optional<std::filesystem::path> index_q, const Embedder &e, const GenerationClient &g,
           std::optional<std::vector<double>> thresholds) {
            ExperimentConfig cfg;
            cfg.testset = testset;
            if (index_s) cfg.index_s = *index_s;
            if (index_q) cfg.index_q = *index_q;
            if (thresholds) cfg.thresholds = *thresholds;
            ExperimentResult r;
            {
                py::gil_scoped_release release;
                r = run_experiment(cfg, g, e);
            }
            py::dict d;
            d["report"] = to_py(report_json(r.table));
            d["rows"] = to_py_list(rows_to_jsonl(r.arms));
            d["warnings"] = r.warnings;
            return d;
        },
        py::arg("testset"), py::arg("index_s") = py::none(), py::arg("index_q") = py::none(), py::arg("embedder"),
        py::arg("generator"), py::arg("thresholds") = py::none());

    m.def("config_keys", [] {
        py::list out;
        for (const auto &k : config_registry()) out.append(py::make_tuple(k.key, k.module, k.default_value));
        return out;
    });
}
