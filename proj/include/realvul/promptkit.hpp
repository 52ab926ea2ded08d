#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "realvul/corpus.hpp"
#include "realvul/vectorstore.hpp"

namespace realvul::promptkit {

enum class Strategy { kStandard, kChainOfThought, kDecomposition, kPlanAndSolve };
enum class Setting { kZeroShot, kFewShot };

inline constexpr Strategy kAllStrategies[] = {Strategy::kStandard, Strategy::kChainOfThought,
                                              Strategy::kDecomposition, Strategy::kPlanAndSolve};
inline constexpr Setting kAllSettings[] = {Setting::kZeroShot, Setting::kFewShot};

// "standard", "chain_of_thought", "decomposition", "plan_and_solve".
std::string_view to_string(Strategy s);
// Report label: "P-S", "P-CoT", "P-Decomp", "P-P&S".
std::string_view label(Strategy s);
// Accepts either spelling.
std::optional<Strategy> parse_strategy(std::string_view s);

// "ZS" / "FS".
std::string_view to_string(Setting s);
std::optional<Setting> parse_setting(std::string_view s);

inline constexpr std::string_view kContextMarkers[] = {"--DESCRIPTION--", "Vulnerable Code:", "Fixed Code:",
                                                       "--COMMITMSG--"};
inline constexpr std::string_view kTruncationMarker = "[... truncated to fit the context budget ...]";

struct ContextBlock {
  std::string description;
  std::string vulnerable_code;
  std::string fixed_code;
  std::string commit_message;
  std::string source_cve_id;
};

struct RenderedPrompt {
  std::string system_text;
  std::string user_text;
  Strategy strategy = Strategy::kStandard;
  Setting setting = Setting::kZeroShot;
  std::string target_cve_id;
  corpus::SampleKind target_kind = corpus::SampleKind::kVulnerable;
  std::optional<std::string> context_ref;
  std::size_t token_estimate = 0;
};

// Bundled template text by short name (e.g. "user_standard").
std::string_view template_text(std::string_view name);
// Digest over every bundled template, recorded with each run for provenance.
const std::string& template_set_hash();

// Replaces {{name}} placeholders in one pass; substituted values are never
// rescanned. Unknown placeholders throw InvalidConfig.
std::string fill(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values);

ContextBlock context_from_record(const corpus::CveRecord& record);
std::string render_context(const ContextBlock& block);

// Context from the top hit's parent record, with both code sections cut to the
// same number of leading lines so the rendered block fits `budget` tokens.
ContextBlock assemble_context(std::span<const vectorstore::SearchHit> hits, const corpus::CorpusManifest& corpus,
                              std::size_t budget);
// Up to `max_blocks` blocks from distinct parent records in hit order; the
// budget is split evenly across blocks.
std::vector<ContextBlock> assemble_contexts(std::span<const vectorstore::SearchHit> hits,
                                            const corpus::CorpusManifest& corpus, std::size_t budget,
                                            std::size_t max_blocks);

RenderedPrompt render(Strategy strategy, Setting setting, const corpus::Sample& sample,
                      std::span<const ContextBlock> contexts);
RenderedPrompt render(Strategy strategy, Setting setting, const corpus::Sample& sample,
                      const std::optional<ContextBlock>& context = std::nullopt);

}  // namespace realvul::promptkit
