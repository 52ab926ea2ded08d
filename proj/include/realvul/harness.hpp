#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "realvul/chunker.hpp"
#include "realvul/corpus.hpp"
#include "realvul/embedder.hpp"
#include "realvul/evaluator.hpp"
#include "realvul/llm_gateway.hpp"
#include "realvul/promptkit.hpp"
#include "realvul/vectorstore.hpp"

namespace realvul::harness {

inline constexpr std::string_view kLogFormat = "realvul-results";
inline constexpr int kLogVersion = 1;

struct RunCell {
  std::string model;
  promptkit::Strategy strategy = promptkit::Strategy::kStandard;
  promptkit::Setting setting = promptkit::Setting::kZeroShot;
  std::size_t sample_index = 0;
  std::string cve_id;
  corpus::SampleKind kind = corpus::SampleKind::kVulnerable;
  int repeat = 0;
  std::string cell_id;
};

struct PlanConfig {
  std::vector<llm::ModelProfile> models;
  std::vector<promptkit::Strategy> strategies;
  std::vector<promptkit::Setting> settings;
  std::vector<corpus::Sample> samples;
  int repeats = 2;
  std::size_t retrieval_k = 1;
};

struct RunPlan {
  std::vector<llm::ModelProfile> models;
  std::vector<promptkit::Strategy> strategies;
  std::vector<promptkit::Setting> settings;
  std::vector<corpus::Sample> samples;
  int repeats = 1;
  std::size_t retrieval_k = 1;
  std::vector<RunCell> cells;

  // Digest of the axes, including a hash of every sample body.
  std::string digest() const;
};

std::string cell_id(const std::string& model, promptkit::Strategy strategy, promptkit::Setting setting,
                    const std::string& cve_id, corpus::SampleKind kind, int repeat);

// Cells in model > strategy > setting > sample > repeat order. Throws EmptyAxis.
RunPlan plan_matrix(const PlanConfig& config);

enum class CellStatus { kOk, kError };

struct RunResult {
  std::string cell_id;
  std::string model;
  promptkit::Strategy strategy = promptkit::Strategy::kStandard;
  promptkit::Setting setting = promptkit::Setting::kZeroShot;
  std::string cve_id;
  corpus::SampleKind kind = corpus::SampleKind::kVulnerable;
  int repeat = 0;
  CellStatus status = CellStatus::kOk;
  std::string error_code;
  std::string error_message;
  std::string system_hash;
  std::string user_hash;
  std::string template_hash;
  std::optional<std::string> context_cve;
  std::optional<llm::RawResponse> response;
  std::optional<evaluator::Evaluation> evaluation;
  std::int64_t wall_ms = 0;
};

struct LogHeader {
  std::string plan_digest;
  std::string template_hash;
  std::size_t cell_count = 0;
};

std::string header_line(const LogHeader& header);
std::string result_line(const RunResult& result);
RunResult parse_result_line(std::string_view line, std::size_t line_number);

struct ResultLog {
  LogHeader header;
  std::vector<RunResult> results;
};

// Throws CorruptLog naming the offending line, EmptyLog when there is no header.
ResultLog parse_log(std::string_view contents);
ResultLog read_log(const std::filesystem::path& path);
std::string serialize_log(const ResultLog& log);

struct ExecuteOptions {
  std::filesystem::path log_path;
  bool resume = false;
  bool fail_fast = false;
  int workers = 1;
  // Token budget for the retrieved context block.
  std::size_t context_budget = 2048;
  std::function<void(const RunResult&, std::size_t done, std::size_t total)> on_progress;
};

struct ExecuteSummary {
  std::size_t executed = 0;
  std::size_t skipped = 0;
  std::size_t ok = 0;
  std::size_t errors = 0;
};

struct Resources {
  const corpus::CorpusManifest* corpus = nullptr;
  const vectorstore::VectorStore* store = nullptr;  // required for FS cells
  const embedder::Embedder* embedder = nullptr;
  llm::Gateway* gateway = nullptr;
  const evaluator::Evaluator* evaluator = nullptr;
};

// Prompt for one cell: for FS cells, retrieval with the target excluded and
// context assembly within the model window. Throws on failure.
promptkit::RenderedPrompt build_prompt(const RunPlan& plan, const RunCell& cell, const Resources& res,
                                       std::size_t context_budget);

// Runs one cell; never throws for per-cell failures (status=error instead).
RunResult run_cell(const RunPlan& plan, const RunCell& cell, const Resources& res, std::size_t context_budget);

// Executes every cell not already in the log and appends results in plan order.
ExecuteSummary execute(const RunPlan& plan, const Resources& res, const ExecuteOptions& options);

// Re-evaluates every stored response, e.g. under new weights or a judge.
// Error cells and cells whose CVE is missing from the corpus are kept as is.
ResultLog rescore(const ResultLog& log, const corpus::CorpusManifest& corpus, const evaluator::Evaluator& evaluator);

// Leading part of `code` that fits the embedder budget, used as the retrieval query.
std::string retrieval_query(std::string_view code, const embedder::EmbedderProfile& profile);

// Ingestion: chunk every record field, embed, upsert.
struct IngestStats {
  std::size_t records = 0;
  std::map<vectorstore::FieldKind, std::size_t> chunks_per_field;
  std::size_t total_chunks() const;
};

struct IngestParams {
  chunker::ChunkParams prose;  // description and commit message
  chunker::ChunkParams code;   // vulnerable and patched code
};
IngestParams default_ingest_params();

IngestStats ingest(const corpus::CorpusManifest& corpus, const embedder::Embedder& embedder,
                   const IngestParams& params, vectorstore::VectorStore& store);

}  // namespace realvul::harness
