#include "realvul/harness.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "realvul/error.hpp"
#include "realvul/text.hpp"

namespace realvul::harness {

using json = nlohmann::json;

namespace {

// FS prompts carry the system template around the context block.
constexpr std::size_t kFewShotOverhead = 128;

const llm::ModelProfile& profile_named(const RunPlan& plan, const std::string& name) {
  for (const auto& m : plan.models) {
    if (m.name == name) return m;
  }
  throw Error(ErrorCode::kInvalidConfig, "model " + name + " is not part of the plan");
}

json verdict_json(const evaluator::Verdict& v) {
  json j{{"prediction", evaluator::to_string(v.prediction)}, {"reason_summary", v.reason_summary}};
  j["claimed_cwe"] = v.claimed_cwe ? json(*v.claimed_cwe) : json(nullptr);
  j["claimed_location"] = v.claimed_location ? json(*v.claimed_location) : json(nullptr);
  return j;
}

json evaluation_json(const evaluator::Evaluation& e) {
  return json{{"verdict", verdict_json(e.verdict)},
              {"acc", e.acc},
              {"cs", e.cs},
              {"pcs", e.pcs},
              {"aligned", e.aligned},
              {"sm", e.sm},
              {"outcome", evaluator::to_string(e.outcome)},
              {"judge", e.judge},
              {"judge_prompt_hash", e.judge_prompt_hash},
              {"n_a_policy", "acc=0, ICP_ICR"}};
}

std::optional<std::string> opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

evaluator::Evaluation evaluation_from_json(const json& j) {
  evaluator::Evaluation e;
  const json& v = j.at("verdict");
  auto pred = evaluator::parse_prediction(v.at("prediction").get<std::string>());
  e.verdict.prediction = pred.value_or(evaluator::Prediction::kNotAnswered);
  e.verdict.reason_summary = v.at("reason_summary").get<std::string>();
  e.verdict.claimed_cwe = opt_string(v, "claimed_cwe");
  e.verdict.claimed_location = opt_string(v, "claimed_location");
  e.acc = j.at("acc").get<int>();
  e.cs = j.at("cs").get<double>();
  e.pcs = j.at("pcs").get<double>();
  e.aligned = j.at("aligned").get<bool>();
  e.sm = j.at("sm").get<double>();
  auto outcome = evaluator::parse_outcome(j.at("outcome").get<std::string>());
  if (!outcome) throw Error(ErrorCode::kCorruptLog, "unknown outcome");
  e.outcome = *outcome;
  e.judge = j.value("judge", "");
  e.judge_prompt_hash = j.value("judge_prompt_hash", "");
  return e;
}

}  // namespace

std::string RunPlan::digest() const {
  json j;
  for (const auto& m : models) j["models"].push_back({m.name, m.temperature, m.max_output_tokens});
  for (auto s : strategies) j["strategies"].push_back(promptkit::to_string(s));
  for (auto s : settings) j["settings"].push_back(promptkit::to_string(s));
  for (const auto& s : samples) j["samples"].push_back({s.cve_id, corpus::to_string(s.kind), text::sha256_hex(s.code)});
  j["repeats"] = repeats;
  j["retrieval_k"] = retrieval_k;
  return text::sha256_hex(j.dump());
}

std::string cell_id(const std::string& model, promptkit::Strategy strategy, promptkit::Setting setting,
                    const std::string& cve_id, corpus::SampleKind kind, int repeat) {
  std::string key = model + '\x1f' + std::string(promptkit::to_string(strategy)) + '\x1f' +
                    std::string(promptkit::to_string(setting)) + '\x1f' + cve_id + '\x1f' +
                    std::string(corpus::to_string(kind)) + '\x1f' + std::to_string(repeat);
  return text::sha256_hex(key).substr(0, 16);
}

RunPlan plan_matrix(const PlanConfig& config) {
  if (config.models.empty()) throw Error(ErrorCode::kEmptyAxis, "no models");
  if (config.strategies.empty()) throw Error(ErrorCode::kEmptyAxis, "no strategies");
  if (config.settings.empty()) throw Error(ErrorCode::kEmptyAxis, "no settings");
  if (config.samples.empty()) throw Error(ErrorCode::kEmptyAxis, "no samples");
  if (config.repeats < 1) throw Error(ErrorCode::kEmptyAxis, "repeats must be >= 1");

  RunPlan plan{config.models, config.strategies, config.settings, config.samples,
               config.repeats, std::max<std::size_t>(config.retrieval_k, 1), {}};
  plan.cells.reserve(config.models.size() * config.strategies.size() * config.settings.size() *
                     config.samples.size() * static_cast<std::size_t>(config.repeats));
  std::unordered_set<std::string> ids;
  for (const auto& model : config.models) {
    for (auto strategy : config.strategies) {
      for (auto setting : config.settings) {
        for (std::size_t s = 0; s < config.samples.size(); ++s) {
          const auto& sample = config.samples[s];
          for (int r = 0; r < config.repeats; ++r) {
            RunCell c{model.name, strategy, setting, s, sample.cve_id, sample.kind, r,
                      cell_id(model.name, strategy, setting, sample.cve_id, sample.kind, r)};
            if (!ids.insert(c.cell_id).second) {
              throw Error(ErrorCode::kInvalidConfig, "duplicate cell " + c.cell_id + " (repeated model or sample?)");
            }
            plan.cells.push_back(std::move(c));
          }
        }
      }
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Log format

std::string header_line(const LogHeader& h) {
  return json{{"format", kLogFormat},
              {"version", kLogVersion},
              {"plan_digest", h.plan_digest},
              {"template_hash", h.template_hash},
              {"cell_count", h.cell_count}}
             .dump() +
         "\n";
}

std::string result_line(const RunResult& r) {
  json j{{"cell_id", r.cell_id},
         {"model", r.model},
         {"strategy", promptkit::to_string(r.strategy)},
         {"setting", promptkit::to_string(r.setting)},
         {"cve_id", r.cve_id},
         {"kind", corpus::to_string(r.kind)},
         {"repeat", r.repeat},
         {"status", r.status == CellStatus::kOk ? "ok" : "error"},
         {"system_hash", r.system_hash},
         {"user_hash", r.user_hash},
         {"template_hash", r.template_hash},
         {"context_cve", r.context_cve ? json(*r.context_cve) : json(nullptr)},
         {"wall_ms", r.wall_ms}};
  if (r.status == CellStatus::kError) {
    j["error"] = {{"code", r.error_code}, {"message", r.error_message}};
  }
  if (r.response) {
    j["response"] = {{"text", r.response->text},
                     {"model_name", r.response->model_name},
                     {"latency_ms", r.response->latency_ms},
                     {"request_hash", r.response->request_hash},
                     {"finish_reason", llm::to_string(r.response->finish_reason)}};
  }
  if (r.evaluation) j["evaluation"] = evaluation_json(*r.evaluation);
  return j.dump() + "\n";
}

RunResult parse_result_line(std::string_view line, std::size_t line_number) {
  auto fail = [&](const std::string& what) -> Error {
    return Error(ErrorCode::kCorruptLog, "line " + std::to_string(line_number) + ": " + what);
  };
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw fail("not a JSON object");
  try {
    RunResult r;
    r.cell_id = j.at("cell_id").get<std::string>();
    r.model = j.at("model").get<std::string>();
    auto strategy = promptkit::parse_strategy(j.at("strategy").get<std::string>());
    auto setting = promptkit::parse_setting(j.at("setting").get<std::string>());
    auto kind = corpus::parse_sample_kind(j.at("kind").get<std::string>());
    if (!strategy || !setting || !kind) throw fail("unknown strategy, setting or kind");
    r.strategy = *strategy;
    r.setting = *setting;
    r.kind = *kind;
    r.cve_id = j.at("cve_id").get<std::string>();
    r.repeat = j.at("repeat").get<int>();
    auto status = j.at("status").get<std::string>();
    if (status != "ok" && status != "error") throw fail("unknown status " + status);
    r.status = status == "ok" ? CellStatus::kOk : CellStatus::kError;
    r.system_hash = j.value("system_hash", "");
    r.user_hash = j.value("user_hash", "");
    r.template_hash = j.value("template_hash", "");
    r.context_cve = opt_string(j, "context_cve");
    r.wall_ms = j.value("wall_ms", std::int64_t{0});
    if (auto it = j.find("error"); it != j.end()) {
      r.error_code = it->value("code", "");
      r.error_message = it->value("message", "");
    }
    if (auto it = j.find("response"); it != j.end()) {
      r.response = llm::RawResponse{it->at("text").get<std::string>(), it->value("model_name", ""),
                                    it->value("latency_ms", std::int64_t{0}), it->value("request_hash", ""),
                                    llm::parse_finish_reason(it->value("finish_reason", "stop"))};
    }
    if (auto it = j.find("evaluation"); it != j.end()) r.evaluation = evaluation_from_json(*it);
    if (r.status == CellStatus::kOk && !r.evaluation) throw fail("ok result without evaluation");
    return r;
  } catch (const json::exception& e) {
    throw fail(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptLog) throw;
    throw fail(e.what());
  }
}

ResultLog parse_log(std::string_view contents) {
  auto lines = text::split_lines(contents);
  std::size_t i = 0;
  while (i < lines.size() && text::is_blank(lines[i])) ++i;
  if (i == lines.size()) throw Error(ErrorCode::kEmptyLog, "log has no header");

  json h = json::parse(lines[i], nullptr, false);
  if (h.is_discarded() || !h.is_object() || h.value("format", "") != kLogFormat) {
    throw Error(ErrorCode::kCorruptLog, "line " + std::to_string(i + 1) + ": missing results header");
  }
  if (h.value("version", 0) != kLogVersion) {
    throw Error(ErrorCode::kCorruptLog, "line " + std::to_string(i + 1) + ": unsupported log version");
  }
  ResultLog log;
  log.header = {h.value("plan_digest", ""), h.value("template_hash", ""), h.value("cell_count", std::size_t{0})};
  for (++i; i < lines.size(); ++i) {
    if (text::is_blank(lines[i])) continue;
    log.results.push_back(parse_result_line(lines[i], i + 1));
  }
  return log;
}

ResultLog read_log(const std::filesystem::path& path) { return parse_log(text::read_file(path)); }

std::string serialize_log(const ResultLog& log) {
  std::string out = header_line(log.header);
  for (const auto& r : log.results) out += result_line(r);
  return out;
}

// ---------------------------------------------------------------------------
// Execution

std::string retrieval_query(std::string_view code, const embedder::EmbedderProfile& profile) {
  return std::string(text::leading_tokens(code, profile.max_tokens));
}

promptkit::RenderedPrompt build_prompt(const RunPlan& plan, const RunCell& cell, const Resources& res,
                                       std::size_t context_budget) {
  const auto& sample = plan.samples.at(cell.sample_index);
  if (cell.setting == promptkit::Setting::kZeroShot) return promptkit::render(cell.strategy, cell.setting, sample);

  const auto& profile = profile_named(plan, cell.model);
  if (res.store == nullptr || res.store->size() == 0) {
    throw Error(ErrorCode::kNoContextAvailable, "few-shot cell without a populated vector store");
  }
  auto query = res.embedder->embed(retrieval_query(sample.code, res.embedder->profile()));
  auto hits = res.store->search(query, plan.retrieval_k, vectorstore::exclude_filter(sample.cve_id));
  if (hits.empty()) throw Error(ErrorCode::kNoContextAvailable, "store holds nothing besides " + sample.cve_id);

  auto base = promptkit::render(cell.strategy, promptkit::Setting::kZeroShot, sample);
  std::size_t reserved = base.token_estimate + profile.max_output_tokens + kFewShotOverhead;
  if (reserved >= profile.context_window) {
    throw Error(ErrorCode::kContextOverflow, "no room for context in the window of " + profile.name);
  }
  std::size_t budget = std::min(context_budget, profile.context_window - reserved);
  auto contexts = promptkit::assemble_contexts(hits, *res.corpus, budget, plan.retrieval_k);
  return promptkit::render(cell.strategy, cell.setting, sample, contexts);
}

RunResult run_cell(const RunPlan& plan, const RunCell& cell, const Resources& res, std::size_t context_budget) {
  auto start = std::chrono::steady_clock::now();
  RunResult r;
  r.cell_id = cell.cell_id;
  r.model = cell.model;
  r.strategy = cell.strategy;
  r.setting = cell.setting;
  r.cve_id = cell.cve_id;
  r.kind = cell.kind;
  r.repeat = cell.repeat;
  r.template_hash = promptkit::template_set_hash();

  try {
    const auto& sample = plan.samples.at(cell.sample_index);
    const auto& profile = profile_named(plan, cell.model);
    const corpus::CveRecord* record = res.corpus->find(sample.cve_id);
    if (record == nullptr) throw Error(ErrorCode::kUnresolvableParent, sample.cve_id + " is not in the corpus");

    promptkit::RenderedPrompt prompt = build_prompt(plan, cell, res, context_budget);
    r.context_cve = prompt.context_ref;
    r.system_hash = text::sha256_hex(prompt.system_text);
    r.user_hash = text::sha256_hex(prompt.user_text);

    r.response = res.gateway->complete(profile, prompt);
    r.evaluation = res.evaluator->evaluate(*r.response, sample, *record);
    r.status = CellStatus::kOk;
  } catch (const Error& e) {
    r.status = CellStatus::kError;
    r.error_code = std::string(error_code_name(e.code()));
    r.error_message = e.what();
  } catch (const std::exception& e) {
    r.status = CellStatus::kError;
    r.error_code = "Internal";
    r.error_message = e.what();
  }
  r.wall_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return r;
}

ExecuteSummary execute(const RunPlan& plan, const Resources& res, const ExecuteOptions& options) {
  if (!res.corpus || !res.embedder || !res.gateway || !res.evaluator) {
    throw Error(ErrorCode::kInvalidConfig, "execute needs corpus, embedder, gateway and evaluator");
  }

  std::unordered_set<std::string> done;
  bool append = options.resume && std::filesystem::exists(options.log_path);
  if (append) {
    for (const auto& r : read_log(options.log_path).results) done.insert(r.cell_id);
  }

  std::vector<const RunCell*> pending;
  for (const auto& c : plan.cells) {
    if (!done.contains(c.cell_id)) pending.push_back(&c);
  }

  if (options.log_path.has_parent_path()) std::filesystem::create_directories(options.log_path.parent_path());
  std::ofstream out(options.log_path, append ? std::ios::app | std::ios::binary : std::ios::trunc | std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open log " + options.log_path.string());
  if (!append) {
    out << header_line({plan.digest(), promptkit::template_set_hash(), plan.cells.size()});
    out.flush();
  }

  ExecuteSummary summary;
  summary.skipped = plan.cells.size() - pending.size();

  std::vector<std::optional<RunResult>> results(pending.size());
  std::size_t next_flush = 0;
  std::mutex mu;
  std::atomic<std::size_t> next_cell{0};
  std::atomic<bool> stop{false};

  // Results are written in plan order regardless of completion order.
  auto flush_ready = [&] {
    while (next_flush < results.size() && results[next_flush]) {
      const RunResult& r = *results[next_flush];
      out << result_line(r);
      out.flush();
      ++summary.executed;
      (r.status == CellStatus::kOk ? summary.ok : summary.errors)++;
      if (options.on_progress) options.on_progress(r, summary.executed + summary.skipped, plan.cells.size());
      ++next_flush;
    }
  };

  auto worker = [&] {
    while (!stop.load()) {
      std::size_t i = next_cell.fetch_add(1);
      if (i >= pending.size()) return;
      RunResult r = run_cell(plan, *pending[i], res, options.context_budget);
      std::lock_guard lock(mu);
      if (r.status == CellStatus::kError && options.fail_fast) stop = true;
      results[i] = std::move(r);
      flush_ready();
    }
  };

  int workers = std::max(1, options.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  // After a fail-fast stop, write whatever finished past the first gap.
  for (std::size_t i = next_flush; i < results.size(); ++i) {
    if (!results[i]) continue;
    out << result_line(*results[i]);
    ++summary.executed;
    (results[i]->status == CellStatus::kOk ? summary.ok : summary.errors)++;
  }
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + options.log_path.string());
  return summary;
}

ResultLog rescore(const ResultLog& log, const corpus::CorpusManifest& corpus, const evaluator::Evaluator& ev) {
  ResultLog out = log;
  for (auto& r : out.results) {
    if (!r.response) continue;
    const corpus::CveRecord* record = corpus.find(r.cve_id);
    if (record == nullptr) continue;
    corpus::CorpusManifest single{{*record}, corpus.source_tag, corpus.loaded_at};
    for (const auto& sample : corpus::to_samples(single)) {
      if (sample.kind != r.kind) continue;
      try {
        r.evaluation = ev.evaluate(*r.response, sample, *record);
        r.status = CellStatus::kOk;
        r.error_code.clear();
        r.error_message.clear();
      } catch (const Error& e) {
        r.evaluation.reset();
        r.status = CellStatus::kError;
        r.error_code = std::string(error_code_name(e.code()));
        r.error_message = e.what();
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ingestion

std::size_t IngestStats::total_chunks() const {
  std::size_t n = 0;
  for (const auto& [kind, count] : chunks_per_field) n += count;
  return n;
}

IngestParams default_ingest_params() {
  IngestParams p;
  p.prose.unit_mode = chunker::UnitMode::kSentence;
  p.code.unit_mode = chunker::UnitMode::kCodeBlock;
  return p;
}

IngestStats ingest(const corpus::CorpusManifest& corpus, const embedder::Embedder& embedder,
                   const IngestParams& params, vectorstore::VectorStore& store) {
  IngestStats stats;
  for (const auto& record : corpus.records) {
    ++stats.records;
    const std::pair<vectorstore::FieldKind, const std::string*> fields[] = {
        {vectorstore::FieldKind::kDescription, &record.description},
        {vectorstore::FieldKind::kVulnerableCode, &record.vulnerable_code},
        {vectorstore::FieldKind::kPatchedCode, &record.patched_code},
        {vectorstore::FieldKind::kCommitMessage, &record.commit_message},
    };
    for (const auto& [kind, body] : fields) {
      if (text::is_blank(*body)) continue;
      bool is_code = kind == vectorstore::FieldKind::kVulnerableCode || kind == vectorstore::FieldKind::kPatchedCode;
      std::string doc_id = record.cve_id + "#" + std::string(vectorstore::to_string(kind));
      auto chunks = chunker::chunk(*body, is_code ? params.code : params.prose, embedder, doc_id);

      std::vector<std::string> texts;
      texts.reserve(chunks.size());
      for (const auto& c : chunks) texts.push_back(c.text);
      auto vectors = embedder.embed_batch(texts);
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        store.upsert(vectors[i], {record.cve_id, record.cwe_id, record.project, record.language, kind,
                                  static_cast<std::uint32_t>(chunks[i].index), doc_id});
      }
      stats.chunks_per_field[kind] += chunks.size();
    }
  }
  return stats;
}

}  // namespace realvul::harness
