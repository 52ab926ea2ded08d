#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "realvul/chunker.hpp"
#include "realvul/cli.hpp"
#include "realvul/corpus.hpp"
#include "realvul/embedder.hpp"
#include "realvul/error.hpp"
#include "realvul/evaluator.hpp"
#include "realvul/harness.hpp"
#include "realvul/promptkit.hpp"
#include "realvul/report.hpp"
#include "realvul/vectorstore.hpp"

namespace py = pybind11;
using namespace realvul;

namespace {

template <typename T>
T parse_or_throw(std::optional<T> v, const char* what, const std::string& s) {
  if (!v) throw Error(ErrorCode::kInvalidConfig, std::string("unknown ") + what + " '" + s + "'");
  return *v;
}

py::dict record_dict(const corpus::CveRecord& r) {
  py::dict d;
  d["cve_id"] = r.cve_id;
  d["cwe_id"] = r.cwe_id;
  d["mitre_rank"] = r.mitre_rank;
  d["project"] = r.project;
  d["language"] = r.language;
  d["description"] = r.description;
  d["vulnerable_code"] = r.vulnerable_code;
  d["patched_code"] = r.patched_code;
  d["commit_message"] = r.commit_message;
  return d;
}

py::dict verdict_dict(const evaluator::Verdict& v) {
  py::dict d;
  d["prediction"] = std::string(evaluator::to_string(v.prediction));
  d["reason_summary"] = v.reason_summary;
  d["claimed_cwe"] = v.claimed_cwe ? py::cast(*v.claimed_cwe) : py::none();
  d["claimed_location"] = v.claimed_location ? py::cast(*v.claimed_location) : py::none();
  return d;
}

const corpus::Sample& find_sample(const std::vector<corpus::Sample>& samples, const std::string& cve,
                                  corpus::SampleKind kind) {
  for (const auto& s : samples) {
    if (s.cve_id == cve && s.kind == kind) return s;
  }
  throw Error(ErrorCode::kUnresolvableParent, "no sample for " + cve);
}

}  // namespace

PYBIND11_MODULE(_realvul, m) {
  m.doc() = "Vulnerability detection and reasoning benchmark core";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&]() { return py::exception<Error>(m, "RealvulError"); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = error_type.get_stored();
      py::object instance = type(e.what());
      instance.attr("code") = std::string(error_code_name(e.code()));
      py::set_error(type, instance);
    }
  });

  // scoring
  m.def("score", [](int acc, double cs, double pcs) { return evaluator::score(acc, cs, pcs); }, py::arg("acc"),
        py::arg("cs"), py::arg("pcs"));
  m.def("classify", [](int acc, bool aligned) { return std::string(evaluator::to_string(evaluator::classify(acc, aligned))); });
  m.def("parse_verdict", [](const std::string& text) { return verdict_dict(evaluator::parse_verdict(text)); });
  m.def("format_percent", &report::format_percent);

  // embedding and chunking
  m.def(
      "mock_embed",
      [](const std::string& text, std::size_t dim) {
        embedder::EmbedderProfile p;
        p.dimension = dim;
        return embedder::mock_embed(text, p).values;
      },
      py::arg("text"), py::arg("dimension") = 1536);
  m.def(
      "chunk",
      [](const std::string& doc, const std::string& mode, double percentile, std::size_t max_tokens) {
        chunker::ChunkParams params;
        if (mode == "sentence") {
          params.unit_mode = chunker::UnitMode::kSentence;
        } else if (mode == "code") {
          params.unit_mode = chunker::UnitMode::kCodeBlock;
        } else {
          throw Error(ErrorCode::kInvalidConfig, "mode must be 'sentence' or 'code'");
        }
        params.breakpoint_percentile = percentile;
        params.max_chunk_tokens = max_tokens;
        embedder::MockEmbedder e;
        std::vector<std::string> out;
        for (auto& c : chunker::chunk(doc, params, e)) out.push_back(std::move(c.text));
        return out;
      },
      py::arg("doc"), py::arg("mode") = "sentence", py::arg("percentile") = 95.0, py::arg("max_tokens") = 512);

  // corpus
  m.def(
      "load_corpus",
      [](const std::string& location) {
        py::list out;
        for (const auto& r : cli::load_corpus(location).records) out.append(record_dict(r));
        return out;
      },
      py::arg("location") = "builtin:table1");
  m.def("cwe_distribution", [](const std::string& location) { return corpus::cwe_distribution(cli::load_corpus(location)); },
        py::arg("location") = "builtin:table1");

  // vector store
  py::class_<vectorstore::VectorStore>(m, "VectorStore")
      .def(py::init<std::size_t>(), py::arg("dimension"))
      .def(
          "upsert",
          [](vectorstore::VectorStore& s, std::vector<double> v, const std::string& cve_id, const std::string& cwe_id) {
            vectorstore::Payload p;
            p.cve_id = cve_id;
            p.cwe_id = cwe_id;
            p.parent_doc_id = cve_id;
            return s.upsert(embedder::Vector{std::move(v)}, p);
          },
          py::arg("vector"), py::arg("cve_id"), py::arg("cwe_id") = "")
      .def(
          "search",
          [](const vectorstore::VectorStore& s, std::vector<double> q, std::size_t k, const std::string& exclude) {
            auto hits = exclude.empty() ? s.search(embedder::Vector{std::move(q)}, k)
                                        : s.search(embedder::Vector{std::move(q)}, k, vectorstore::exclude_filter(exclude));
            std::vector<std::tuple<std::uint64_t, double, std::string>> out;
            for (const auto& h : hits) out.emplace_back(h.point_id, h.score, h.payload.cve_id);
            return out;
          },
          py::arg("query"), py::arg("k"), py::arg("exclude") = "")
      .def("persist", &vectorstore::VectorStore::persist)
      .def_static("load", &vectorstore::VectorStore::load)
      .def("__len__", &vectorstore::VectorStore::size)
      .def_property_readonly("dimension", &vectorstore::VectorStore::dimension);

  // prompts and planning
  m.def(
      "render_prompt",
      [](const std::string& strategy, const std::string& cve_id, const std::string& kind, const std::string& location) {
        auto samples = corpus::to_samples(cli::load_corpus(location));
        const auto& s = find_sample(samples, cve_id, parse_or_throw(corpus::parse_sample_kind(kind), "kind", kind));
        auto p = promptkit::render(parse_or_throw(promptkit::parse_strategy(strategy), "strategy", strategy),
                                   promptkit::Setting::kZeroShot, s);
        return py::make_tuple(p.system_text, p.user_text);
      },
      py::arg("strategy"), py::arg("cve_id"), py::arg("kind") = "vulnerable", py::arg("corpus") = "builtin:table1");
  m.def(
      "plan_size",
      [](std::size_t models, const std::vector<std::string>& strategies, const std::vector<std::string>& settings,
         const std::string& location, int repeats) {
        harness::PlanConfig c;
        for (std::size_t i = 0; i < models; ++i) {
          llm::ModelProfile p;
          p.name = "model-" + std::to_string(i);
          c.models.push_back(p);
        }
        for (const auto& s : strategies) c.strategies.push_back(parse_or_throw(promptkit::parse_strategy(s), "strategy", s));
        for (const auto& s : settings) c.settings.push_back(parse_or_throw(promptkit::parse_setting(s), "setting", s));
        c.samples = corpus::to_samples(cli::load_corpus(location));
        c.repeats = repeats;
        return harness::plan_matrix(c).cells.size();
      },
      py::arg("models"), py::arg("strategies"), py::arg("settings"), py::arg("corpus") = "builtin:table1",
      py::arg("repeats") = 2);

  // pipeline
  m.def("run_demo", [](const std::filesystem::path& out_dir) {
    std::ostringstream progress;
    auto r = cli::run_demo(out_dir, progress);
    py::dict d;
    d["executed"] = r.summary.executed;
    d["skipped"] = r.summary.skipped;
    d["errors"] = r.summary.errors;
    d["chunks"] = r.ingest.total_chunks();
    d["log"] = r.log_path;
    d["report_files"] = r.report_files;
    return d;
  });
  m.def("outcome_breakdown", [](const std::filesystem::path& log_path) {
    auto b = report::outcome_breakdown(harness::read_log(log_path));
    py::list rows;
    for (const auto& r : b.rows) {
      py::dict d;
      d["model"] = r.model;
      d["setting"] = std::string(promptkit::to_string(r.setting));
      d["cp_cr"] = r.cp_cr;
      d["cp_icr"] = r.cp_icr;
      d["icp_icr"] = r.icp_icr;
      d["total"] = r.total;
      rows.append(d);
    }
    return rows;
  });
  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "realvul");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  });
}
