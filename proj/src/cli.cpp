#include "realvul/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "realvul/error.hpp"
#include "realvul/http.hpp"
#include "realvul/report.hpp"
#include "realvul/resources.hpp"
#include "realvul/text.hpp"

namespace realvul::cli {

namespace fs = std::filesystem;

namespace {

std::optional<std::string_view> builtin_name(std::string_view location) {
  if (!location.starts_with(config::kBuiltinPrefix)) return std::nullopt;
  return location.substr(config::kBuiltinPrefix.size());
}

void echo_config(const config::Config& c) {
  fs::create_directories(c.output_dir);
  text::write_file(c.output_dir / "effective_config.json", config::to_json(c));
}

void require_credentials(const config::Config& c) {
  if (c.mode != config::Mode::kLive) return;
  auto check = [](const std::string& env, const std::string& who) {
    if (env.empty()) return;
    const char* v = std::getenv(env.c_str());
    if (v == nullptr || *v == '\0') {
      throw Error(ErrorCode::kInvalidConfig, "live mode needs " + env + " for " + who);
    }
  };
  for (const auto& m : c.models) check(m.api_key_env, m.name);
  if (c.judge) check(c.judge->api_key_env, c.judge->name);
  if (c.embedder.kind == "http") check(c.embedder.http.api_key_env, "the embedder");
}

vectorstore::VectorStore load_store_for(const Pipeline& p) {
  if (!fs::exists(p.config.store)) {
    throw Error(ErrorCode::kNoContextAvailable,
                "few-shot setting needs a vector store at " + p.config.store.string() + " (run 'realvul ingest')");
  }
  auto store = vectorstore::VectorStore::load(p.config.store);
  if (store.dimension() != p.embedder->profile().dimension) {
    throw Error(ErrorCode::kDimensionMismatch, "store dimension " + std::to_string(store.dimension()) +
                                                   " differs from embedder dimension " +
                                                   std::to_string(p.embedder->profile().dimension));
  }
  return store;
}

void print_progress(std::ostream& out, const harness::RunResult& r, std::size_t done, std::size_t total) {
  out << "[" << done << "/" << total << "] " << r.model << " " << promptkit::label(r.strategy) << " "
      << promptkit::to_string(r.setting) << " " << r.cve_id << " " << corpus::to_string(r.kind) << " #" << r.repeat
      << " -> ";
  if (r.evaluation) {
    out << evaluator::label(r.evaluation->outcome) << " sm=" << std::fixed << std::setprecision(3) << r.evaluation->sm
        << std::defaultfloat;
  } else {
    out << "error " << r.error_code;
  }
  out << "\n";
}

void print_ingest(std::ostream& out, const harness::IngestStats& stats, const vectorstore::VectorStore& store,
                  const fs::path& path) {
  out << "ingested " << stats.records << " records, " << stats.total_chunks() << " chunks into " << path.string()
      << " (dim " << store.dimension() << ")\n";
  for (auto kind : {vectorstore::FieldKind::kDescription, vectorstore::FieldKind::kVulnerableCode,
                    vectorstore::FieldKind::kPatchedCode, vectorstore::FieldKind::kCommitMessage}) {
    auto it = stats.chunks_per_field.find(kind);
    out << "  " << vectorstore::to_string(kind) << ": " << (it == stats.chunks_per_field.end() ? 0 : it->second)
        << "\n";
  }
}

std::set<report::Format> parse_formats(const std::string& spec) {
  std::set<report::Format> formats;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = std::string(text::trim(item));
    if (item.empty()) continue;
    if (item == "all") {
      formats = {report::Format::kTable, report::Format::kPlot};
      continue;
    }
    auto f = report::parse_format(item);
    if (!f) throw CLI::ValidationError("--formats", "unknown format '" + item + "'");
    formats.insert(*f);
  }
  return formats;
}

// Options shared by every subcommand.
struct Common {
  std::string config_path;
  bool live = false;
  bool lenient = false;
  std::string corpus;
  std::string store;
  std::string out_dir;
  int workers = 0;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app->add_flag("--live", live, "allow live provider calls (needs credentials)");
    app->add_flag("--lenient", lenient, "skip malformed corpus records with a warning");
    app->add_option("--corpus", corpus, "corpus manifest path or builtin:<name>");
    app->add_option("--store", store, "vector store path");
    app->add_option("--out", out_dir, "output directory");
    app->add_option("--workers", workers, "concurrent cells")->check(CLI::PositiveNumber);
  }

  config::Config resolve() const {
    std::optional<config::Mode> mode = live ? std::optional(config::Mode::kLive) : std::nullopt;
    config::Config c = config_path.empty() ? config::demo_config("out") : config::load_config(config_path, mode);
    if (!live && c.mode == config::Mode::kLive) {
      throw Error(ErrorCode::kInvalidConfig, "config requests live mode; pass --live to confirm");
    }
    if (live) c.mode = config::Mode::kLive;
    if (lenient) c.lenient = true;
    if (!corpus.empty()) c.corpus = corpus;
    if (!out_dir.empty()) {
      if (store.empty() && c.store == fs::path(c.output_dir) / "store.rvidx") c.store = fs::path(out_dir) / "store.rvidx";
      c.output_dir = out_dir;
    }
    if (!store.empty()) c.store = store;
    if (workers > 0) c.workers = workers;
    c.validate();
    require_credentials(c);
    return c;
  }
};

int fail(std::ostream& err, int code, const std::exception& e) {
  err << "error: " << e.what() << "\n";
  return code;
}

}  // namespace

corpus::CorpusManifest load_corpus(const std::string& location, const corpus::LoadOptions& options) {
  if (auto name = builtin_name(location)) {
    if (*name == "demo") return corpus::parse_manifest(resources::get("demo/corpus.jsonl"), "demo", options);
    if (*name == "table1") {
      return corpus::parse_manifest(resources::get("fixtures/table1_cves.jsonl"), "table1_cves", options);
    }
    throw Error(ErrorCode::kIoError, "unknown builtin corpus '" + std::string(*name) + "'");
  }
  return corpus::load_manifest(location, options);
}

std::shared_ptr<llm::ReplayFixture> load_fixture(const std::string& location) {
  if (location.empty()) return std::make_shared<llm::ReplayFixture>();
  if (auto name = builtin_name(location)) return llm::ReplayFixture::from_string(resources::get(*name));
  return std::make_shared<llm::ReplayFixture>(fs::path(location));
}

Pipeline make_pipeline(const config::Config& cfg, std::shared_ptr<http::Transport> transport) {
  cfg.validate();
  Pipeline p;
  p.config = cfg;
  corpus::LoadOptions load;
  load.lenient = cfg.lenient;
  p.corpus = load_corpus(cfg.corpus, load);

  bool live = cfg.mode == config::Mode::kLive;
  if (!transport && live) transport = std::shared_ptr<http::Transport>(http::make_httplib_transport());
  if (cfg.embedder.kind == "http") {
    if (!live) throw Error(ErrorCode::kInvalidConfig, "the http embedder requires live mode");
    p.embedder = std::make_unique<embedder::HttpEmbedder>(cfg.embedder.profile, cfg.embedder.http, transport);
  } else {
    p.embedder = std::make_unique<embedder::MockEmbedder>(cfg.embedder.profile);
  }

  p.fixture = load_fixture(cfg.replay_fixture);
  llm::GatewayOptions gopts;
  gopts.offline = !live;
  gopts.max_retries = cfg.max_retries;
  gopts.max_in_flight = cfg.max_in_flight;
  gopts.record_live = cfg.record_live;
  p.gateway = std::make_unique<llm::Gateway>(gopts, transport, p.fixture);

  evaluator::EvaluatorOptions eopts;
  eopts.weights = cfg.weights;
  eopts.alignment_threshold = cfg.alignment_threshold;
  eopts.judge = cfg.judge;
  p.evaluator = std::make_unique<evaluator::Evaluator>(eopts, *p.embedder, p.gateway.get());
  return p;
}

std::vector<corpus::Sample> select_samples(const Pipeline& p) {
  auto all = corpus::to_samples(p.corpus);
  if (p.config.axes.cves.empty()) return all;
  std::set<std::string> wanted(p.config.axes.cves.begin(), p.config.axes.cves.end());
  for (const auto& id : wanted) {
    if (p.corpus.find(id) == nullptr) throw Error(ErrorCode::kInvalidConfig, id + " is not in the corpus");
  }
  std::vector<corpus::Sample> out;
  for (auto& s : all) {
    if (wanted.contains(s.cve_id)) out.push_back(std::move(s));
  }
  return out;
}

harness::RunPlan make_plan(const Pipeline& p) {
  harness::PlanConfig pc;
  pc.models = p.config.models;
  pc.strategies = p.config.axes.strategies;
  pc.settings = p.config.axes.settings;
  pc.samples = select_samples(p);
  pc.repeats = p.config.axes.repeats;
  pc.retrieval_k = p.config.axes.retrieval_k;
  return harness::plan_matrix(pc);
}

DemoResult run_demo(const fs::path& out_dir, std::ostream& progress, std::shared_ptr<http::Transport> transport) {
  auto cfg = config::demo_config(out_dir);
  echo_config(cfg);
  auto p = make_pipeline(cfg, std::move(transport));

  DemoResult result;
  vectorstore::VectorStore store(p.embedder->profile().dimension);
  result.ingest = harness::ingest(p.corpus, *p.embedder, cfg.chunking, store);
  store.persist(cfg.store);
  print_ingest(progress, result.ingest, store, cfg.store);

  auto plan = make_plan(p);
  harness::ExecuteOptions eo;
  eo.log_path = out_dir / "results.jsonl";
  eo.workers = cfg.workers;
  eo.context_budget = cfg.context_budget;
  result.log_path = eo.log_path;
  harness::Resources res{&p.corpus, &store, p.embedder.get(), p.gateway.get(), p.evaluator.get()};
  result.summary = harness::execute(plan, res, eo);
  result.network_requests = p.gateway->network_requests();
  progress << result.summary.executed << " executed, " << result.summary.skipped << " skipped, "
           << result.summary.errors << " errors\n";

  std::vector<std::string> universe;
  for (const auto& r : p.corpus.records) universe.push_back(r.cve_id);
  auto artifacts = report::aggregate(harness::read_log(eo.log_path), universe);
  result.report_files = report::emit(artifacts, out_dir / "report", {report::Format::kTable, report::Format::kPlot});
  progress << result.report_files.size() << " report files in " << (out_dir / "report").string() << "\n";
  return result;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vulnerability detection and reasoning benchmark for language models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "realvul 1.0.0");

  int code = kExitOk;

  // ingest -------------------------------------------------------------------
  Common ingest_c;
  auto* ingest_cmd = app.add_subcommand("ingest", "chunk, embed and index the corpus");
  ingest_c.attach(ingest_cmd);
  ingest_cmd->callback([&] {
    try {
      auto cfg = ingest_c.resolve();
      auto p = make_pipeline(cfg);
      vectorstore::VectorStore store(p.embedder->profile().dimension);
      auto stats = harness::ingest(p.corpus, *p.embedder, cfg.chunking, store);
      store.persist(cfg.store);
      echo_config(cfg);
      print_ingest(out, stats, store, cfg.store);
    } catch (const std::exception& e) {
      code = fail(err, kExitIngest, e);
    }
  });

  // index-info ---------------------------------------------------------------
  Common info_c;
  auto* info_cmd = app.add_subcommand("index-info", "describe a persisted vector store");
  info_c.attach(info_cmd);
  info_cmd->callback([&] {
    try {
      auto cfg = info_c.resolve();
      auto store = vectorstore::VectorStore::load(cfg.store);
      std::map<std::string, std::size_t> per_field;
      std::set<std::string> cves;
      for (const auto& pt : store.points()) {
        ++per_field[std::string(vectorstore::to_string(pt.payload.field_kind))];
        cves.insert(pt.payload.cve_id);
      }
      out << cfg.store.string() << ": " << store.size() << " points, dimension " << store.dimension() << ", "
          << cves.size() << " CVEs\n";
      for (const auto& [field, n] : per_field) out << "  " << field << ": " << n << "\n";
    } catch (const std::exception& e) {
      code = fail(err, kExitIngest, e);
    }
  });

  // query --------------------------------------------------------------------
  Common query_c;
  std::string query_text;
  std::string query_file;
  std::size_t query_k = 5;
  std::string query_exclude;
  auto* query_cmd = app.add_subcommand("query", "ad-hoc nearest-neighbour search");
  query_c.attach(query_cmd);
  auto* text_opt = query_cmd->add_option("--text", query_text, "query text");
  query_cmd->add_option("--file", query_file, "read the query from a file")->excludes(text_opt)->check(CLI::ExistingFile);
  query_cmd->add_option("-k", query_k, "number of hits")->check(CLI::PositiveNumber);
  query_cmd->add_option("--exclude", query_exclude, "leave out chunks of this CVE");
  query_cmd->callback([&] {
    try {
      if (query_text.empty() && query_file.empty()) throw Error(ErrorCode::kEmptyInput, "pass --text or --file");
      auto cfg = query_c.resolve();
      auto p = make_pipeline(cfg);
      auto store = load_store_for(p);
      std::string q = query_file.empty() ? query_text : text::read_file(query_file);
      auto v = p.embedder->embed(harness::retrieval_query(q, p.embedder->profile()));
      auto hits = store.search(v, query_k,
                               query_exclude.empty() ? vectorstore::PayloadFilter{}
                                                     : vectorstore::exclude_filter(query_exclude));
      for (std::size_t i = 0; i < hits.size(); ++i) {
        const auto& h = hits[i];
        out << i + 1 << "  " << std::fixed << std::setprecision(4) << h.score << std::defaultfloat << "  "
            << h.payload.cve_id << "  " << vectorstore::to_string(h.payload.field_kind) << "#"
            << h.payload.chunk_index << "\n";
      }
    } catch (const std::exception& e) {
      code = fail(err, kExitIngest, e);
    }
  });

  // run ----------------------------------------------------------------------
  Common run_c;
  std::string run_log;
  bool resume = false;
  bool fail_fast = false;
  bool allow_errors = false;
  bool quiet = false;
  auto* run_cmd = app.add_subcommand("run", "execute the evaluation matrix");
  run_c.attach(run_cmd);
  run_cmd->add_option("--log", run_log, "result log (default <out>/results.jsonl)");
  run_cmd->add_flag("--resume", resume, "skip cells already in the log");
  run_cmd->add_flag("--fail-fast", fail_fast, "stop at the first failing cell");
  run_cmd->add_flag("--allow-errors", allow_errors, "exit 0 even when cells failed");
  run_cmd->add_flag("-q,--quiet", quiet, "no per-cell progress");
  run_cmd->callback([&] {
    try {
      auto cfg = run_c.resolve();
      auto p = make_pipeline(cfg);
      auto plan = make_plan(p);
      std::optional<vectorstore::VectorStore> store;
      bool few_shot = std::find(cfg.axes.settings.begin(), cfg.axes.settings.end(), promptkit::Setting::kFewShot) !=
                      cfg.axes.settings.end();
      if (few_shot) store = load_store_for(p);
      echo_config(cfg);

      harness::ExecuteOptions eo;
      eo.log_path = run_log.empty() ? cfg.output_dir / "results.jsonl" : fs::path(run_log);
      eo.resume = resume;
      eo.fail_fast = fail_fast;
      eo.workers = cfg.workers;
      eo.context_budget = cfg.context_budget;
      if (!quiet) {
        eo.on_progress = [&](const harness::RunResult& r, std::size_t done, std::size_t total) {
          print_progress(out, r, done, total);
        };
      }
      harness::Resources res{&p.corpus, store ? &*store : nullptr, p.embedder.get(), p.gateway.get(),
                             p.evaluator.get()};
      auto s = harness::execute(plan, res, eo);
      out << s.executed << " executed, " << s.skipped << " skipped (" << s.ok << " ok, " << s.errors
          << " errors); log: " << eo.log_path.string() << "\n";
      if (s.errors > 0 && !allow_errors) code = kExitRun;
    } catch (const std::exception& e) {
      code = fail(err, kExitRun, e);
    }
  });

  // evaluate -----------------------------------------------------------------
  Common eval_c;
  std::string eval_log;
  std::string eval_out;
  std::vector<double> eval_weights;
  auto* eval_cmd = app.add_subcommand("evaluate", "re-score an existing log");
  eval_c.attach(eval_cmd);
  eval_cmd->add_option("--log", eval_log, "result log to re-score")->required();
  eval_cmd->add_option("--output", eval_out, "rescored log (default <log>.rescored.jsonl)");
  eval_cmd->add_option("--weights", eval_weights, "accuracy,similarity,partial")->expected(3)->delimiter(',');
  eval_cmd->callback([&] {
    harness::ResultLog log;
    try {
      log = harness::read_log(eval_log);
    } catch (const std::exception& e) {
      code = fail(err, kExitReport, e);
      return;
    }
    try {
      auto cfg = eval_c.resolve();
      if (!eval_weights.empty()) {
        cfg.weights = {eval_weights[0], eval_weights[1], eval_weights[2]};
        cfg.validate();
      }
      auto p = make_pipeline(cfg);
      auto rescored = harness::rescore(log, p.corpus, *p.evaluator);
      fs::path target = eval_out.empty() ? fs::path(eval_log).replace_extension(".rescored.jsonl") : fs::path(eval_out);
      text::write_file(target, harness::serialize_log(rescored));
      std::size_t ok = 0;
      for (const auto& r : rescored.results) ok += r.evaluation ? 1 : 0;
      out << "rescored " << ok << " of " << rescored.results.size() << " results into " << target.string() << "\n";
    } catch (const std::exception& e) {
      code = fail(err, kExitRun, e);
    }
  });

  // report -------------------------------------------------------------------
  std::string report_log;
  std::string report_out = "report";
  std::string report_formats = "table,plot";
  std::string report_corpus;
  auto* report_cmd = app.add_subcommand("report", "aggregate a log into tables and plots");
  std::string report_config;
  report_cmd->add_option("--config", report_config, "JSON config file (unused by report)")
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--log", report_log, "result log")->required();
  report_cmd->add_option("--out", report_out, "output directory");
  report_cmd->add_option("--formats", report_formats, "comma list of table, plot");
  report_cmd->add_option("--corpus", report_corpus, "list every CVE of this corpus in the heatmap");
  report_cmd->callback([&] {
    try {
      auto formats = parse_formats(report_formats);
      auto log = harness::read_log(report_log);
      std::vector<std::string> universe;
      if (!report_corpus.empty()) {
        for (const auto& r : load_corpus(report_corpus).records) universe.push_back(r.cve_id);
      }
      auto files = report::emit(report::aggregate(log, universe), report_out, formats);
      for (const auto& f : files) out << f.string() << "\n";
      out << files.size() << " files\n";
    } catch (const std::exception& e) {
      code = fail(err, kExitReport, e);
    }
  });

  // demo ---------------------------------------------------------------------
  std::string demo_out = "demo_out";
  auto* demo_cmd = app.add_subcommand("demo", "offline end-to-end run on bundled data");
  std::string demo_config_path;
  demo_cmd->add_option("--config", demo_config_path, "ignored; the demo always uses bundled data")
      ->check(CLI::ExistingFile);
  demo_cmd->add_option("--out", demo_out, "output directory");
  demo_cmd->callback([&] {
    try {
      auto r = run_demo(demo_out, out);
      if (r.summary.errors > 0) code = kExitRun;
    } catch (const std::exception& e) {
      code = fail(err, kExitRun, e);
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << app.version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    for (auto* sub : app.get_subcommands()) {
      err << sub->help();
      return kExitUsage;
    }
    err << app.help();
    return kExitUsage;
  }
  return code;
}

}  // namespace realvul::cli
