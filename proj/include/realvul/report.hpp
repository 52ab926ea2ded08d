#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "realvul/evaluator.hpp"
#include "realvul/harness.hpp"
#include "realvul/promptkit.hpp"

namespace realvul::report {

// Aggregations read only results with status ok; error cells carry no outcome.

struct BreakdownRow {
  std::string model;
  promptkit::Setting setting = promptkit::Setting::kZeroShot;
  std::size_t cp_cr = 0;
  std::size_t cp_icr = 0;
  std::size_t icp_icr = 0;
  std::size_t total = 0;

  std::size_t count(evaluator::Outcome o) const;
};

struct OutcomeBreakdown {
  std::vector<BreakdownRow> rows;  // sorted by model, then ZS before FS
  const BreakdownRow* find(std::string_view model, promptkit::Setting setting) const;
};

struct HeatmapMatrix {
  std::vector<std::string> models;
  std::vector<std::string> cve_ids;
  std::vector<std::vector<std::size_t>> cells;  // [model][cve]

  std::size_t at(std::string_view model, std::string_view cve_id) const;
};

struct PromptCurve {
  std::vector<promptkit::Strategy> strategies;  // every strategy seen in the log
  std::map<std::string, std::map<promptkit::Strategy, std::size_t>> counts;
};

struct SmHistogram {
  std::vector<double> edges;  // bins + 1 edges over [0, 1]
  std::map<evaluator::Outcome, std::vector<std::size_t>> counts;

  std::size_t bins() const { return edges.empty() ? 0 : edges.size() - 1; }
  std::size_t total() const;
};

inline constexpr std::size_t kDefaultBins = 20;

OutcomeBreakdown outcome_breakdown(const harness::ResultLog& log);
// `cve_universe` adds columns for CVEs the log never mentions.
HeatmapMatrix heatmap_matrix(const harness::ResultLog& log, const std::vector<std::string>& cve_universe = {});
PromptCurve prompt_curves(const harness::ResultLog& log);
SmHistogram sm_histogram(const harness::ResultLog& log, std::size_t bins = kDefaultBins);

// Bin for `sm` such that edges[i] <= sm < edges[i+1]; 1.0 lands in the last bin.
std::size_t bin_index(const std::vector<double>& edges, double sm);

// Percentage with one decimal, ties rounded away from zero ("31.3" for 25/80).
std::string format_percent(std::size_t count, std::size_t total);

struct Artifacts {
  OutcomeBreakdown breakdown;
  HeatmapMatrix heatmap;
  PromptCurve curves;
  SmHistogram histogram;
};

Artifacts aggregate(const harness::ResultLog& log, const std::vector<std::string>& cve_universe = {});

std::string breakdown_csv(const OutcomeBreakdown& b);
std::string heatmap_csv(const HeatmapMatrix& h);
std::string curves_csv(const PromptCurve& c);
std::string histogram_csv(const SmHistogram& h);

std::string breakdown_svg(const OutcomeBreakdown& b);
std::string heatmap_svg(const HeatmapMatrix& h);
std::string curves_svg(const PromptCurve& c);
std::string histogram_svg(const SmHistogram& h);

enum class Format { kTable, kPlot };
std::optional<Format> parse_format(std::string_view s);

// Writes the requested artifact files and returns their paths in a fixed order.
std::vector<std::filesystem::path> emit(const Artifacts& artifacts, const std::filesystem::path& out_dir,
                                        const std::set<Format>& formats);

}  // namespace realvul::report
