#pragma once

#include <cstddef>
#include <filesystem>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "realvul/chunker.hpp"
#include "realvul/embedder.hpp"
#include "realvul/evaluator.hpp"
#include "realvul/harness.hpp"
#include "realvul/llm_gateway.hpp"
#include "realvul/promptkit.hpp"

namespace realvul::config {

enum class Mode { kOffline, kLive };

// Corpus, fixture and store locations accept "builtin:<name>" for embedded data.
inline constexpr std::string_view kBuiltinPrefix = "builtin:";

struct EmbedderConfig {
  std::string kind = "mock";  // "mock" or "http"
  embedder::EmbedderProfile profile;
  embedder::HttpEmbedderOptions http;
};

struct AxesConfig {
  std::vector<promptkit::Strategy> strategies{std::begin(promptkit::kAllStrategies), std::end(promptkit::kAllStrategies)};
  std::vector<promptkit::Setting> settings{std::begin(promptkit::kAllSettings), std::end(promptkit::kAllSettings)};
  std::vector<std::string> cves;  // empty: every record in the corpus
  int repeats = 2;
  std::size_t retrieval_k = 1;
};

struct Config {
  Mode mode = Mode::kOffline;
  std::string corpus = "builtin:demo";
  bool lenient = false;
  EmbedderConfig embedder;
  harness::IngestParams chunking = harness::default_ingest_params();
  std::filesystem::path store = "out/store.rvidx";
  std::vector<llm::ModelProfile> models;
  std::optional<llm::ModelProfile> judge;
  evaluator::ScoringWeights weights;
  double alignment_threshold = evaluator::kDefaultAlignmentThreshold;
  AxesConfig axes;
  std::string replay_fixture;  // empty: none
  bool record_live = false;
  std::filesystem::path output_dir = "out";
  int workers = 1;
  std::size_t context_budget = 2048;
  int max_retries = 3;
  int max_in_flight = 2;

  // Throws InvalidConfig when an invariant is violated.
  void validate() const;
};

// Model entries are either a roster name or a full profile object. In offline
// mode roster names resolve to replay profiles with the same window.
// `mode` overrides the file's mode before model names are resolved.
// The result is validated.
Config parse_config(std::string_view json_text, std::optional<Mode> mode = std::nullopt);
Config load_config(const std::filesystem::path& path, std::optional<Mode> mode = std::nullopt);
std::string to_json(const Config& config);

// Offline demo: bundled corpus, replay fixture and the demo model.
Config demo_config(const std::filesystem::path& output_dir);
llm::ModelProfile demo_model();

}  // namespace realvul::config
