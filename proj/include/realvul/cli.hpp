#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "realvul/config.hpp"
#include "realvul/corpus.hpp"
#include "realvul/embedder.hpp"
#include "realvul/evaluator.hpp"
#include "realvul/harness.hpp"
#include "realvul/llm_gateway.hpp"
#include "realvul/vectorstore.hpp"

namespace realvul::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIngest = 2;
inline constexpr int kExitRun = 3;
inline constexpr int kExitReport = 4;
inline constexpr int kExitUsage = 64;

// Everything a run needs, built from a validated config.
struct Pipeline {
  config::Config config;
  corpus::CorpusManifest corpus;
  std::unique_ptr<embedder::Embedder> embedder;
  std::shared_ptr<llm::ReplayFixture> fixture;
  std::unique_ptr<llm::Gateway> gateway;
  std::unique_ptr<evaluator::Evaluator> evaluator;
};

corpus::CorpusManifest load_corpus(const std::string& location, const corpus::LoadOptions& options = {});
std::shared_ptr<llm::ReplayFixture> load_fixture(const std::string& location);
Pipeline make_pipeline(const config::Config& config, std::shared_ptr<http::Transport> transport = nullptr);

// Samples selected by the config's CVE axis, in corpus order.
std::vector<corpus::Sample> select_samples(const Pipeline& p);
harness::RunPlan make_plan(const Pipeline& p);

struct DemoResult {
  harness::IngestStats ingest;
  harness::ExecuteSummary summary;
  std::filesystem::path log_path;
  std::vector<std::filesystem::path> report_files;
  std::size_t network_requests = 0;
};

// Full offline pipeline on the bundled demo data. `transport` is only handed to
// the gateway, which must never use it offline.
DemoResult run_demo(const std::filesystem::path& out_dir, std::ostream& progress,
                    std::shared_ptr<http::Transport> transport = nullptr);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace realvul::cli
