#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "realvul/corpus.hpp"
#include "realvul/embedder.hpp"
#include "realvul/llm_gateway.hpp"

namespace realvul::evaluator {

enum class Prediction { kYes, kNo, kNotAnswered };
std::string_view to_string(Prediction p);  // "yes" / "no" / "n/a"
std::optional<Prediction> parse_prediction(std::string_view s);

struct Verdict {
  Prediction prediction = Prediction::kNotAnswered;
  std::string reason_summary;
  std::optional<std::string> claimed_cwe;
  std::optional<std::string> claimed_location;
};

struct ScoringWeights {
  double accuracy = 0.6;
  double similarity = 0.3;
  double partial = 0.1;

  // Throws InvalidConfig unless all weights are >= 0 and sum to 1.
  void validate() const;
};

enum class Outcome { kCpCr, kCpIcr, kIcpIcr };
std::string_view to_string(Outcome o);  // "CP_CR", "CP_ICR", "ICP_ICR"
std::string_view label(Outcome o);      // "CP-CR", ...
std::optional<Outcome> parse_outcome(std::string_view s);

struct Evaluation {
  Verdict verdict;
  int acc = 0;
  double cs = 0.0;
  double pcs = 0.0;
  bool aligned = false;
  double sm = 0.0;
  Outcome outcome = Outcome::kIcpIcr;
  std::string judge;              // judge profile name, or "fallback"
  std::string judge_prompt_hash;  // digest of the judge prompts or rubric version
};

inline constexpr double kDefaultAlignmentThreshold = 0.75;
inline constexpr std::string_view kRubricVersion = "rubric-v1";

// A judge model reached through the gateway. Functions below take a nullable
// pointer; nullptr selects the deterministic fallback.
struct Judge {
  llm::Gateway* gateway = nullptr;
  llm::ModelProfile profile;
};

// Parses the "Prediction: ... / Reason: ..." answer contract, case-insensitively.
Verdict parse_verdict(std::string_view response);
// Lenient parse of the judge's structured object (wrapping prose is ignored).
Verdict parse_judge_verdict(std::string_view reply);

Verdict extract_verdict(const llm::RawResponse& raw, const Judge* judge = nullptr);

int accuracy(const Verdict& verdict, corpus::Label ground_truth);

// max(0, cosine(embed(reason), embed(gt_reason))); 0 for an empty reason.
double reasoning_similarity(std::string_view reason, std::string_view gt_reason, const embedder::Embedder& embedder);

bool semantic_alignment(std::string_view reason, std::string_view gt_reason, const embedder::Embedder& embedder,
                        const Judge* judge = nullptr, double threshold = kDefaultAlignmentThreshold);
bool parse_alignment_reply(std::string_view reply);

// Rubric: 0.4 CWE family + 0.3 location overlap + 0.3 mechanism keywords;
// without ground-truth locations the location term is dropped and the rest
// renormalised.
double rubric_partial_credit(const Verdict& verdict, const corpus::CveRecord& record);
double partial_credit(const Verdict& verdict, const corpus::CveRecord& record, const Judge* judge = nullptr);
double parse_partial_credit_reply(std::string_view reply);

// min(1, w1*acc + w2*cs + w3*pcs). Throws RangeViolation for out-of-range inputs.
double score(int acc, double cs, double pcs, const ScoringWeights& weights = {});

Outcome classify(int acc, bool aligned);

// Line ranges mentioned in free text ("line 12", "lines 3-7").
std::vector<corpus::LineRange> parse_line_ranges(std::string_view text);

struct EvaluatorOptions {
  ScoringWeights weights;
  double alignment_threshold = kDefaultAlignmentThreshold;
  std::optional<llm::ModelProfile> judge;
  // Use the deterministic fallback when the judge is unavailable.
  bool fallback_on_judge_error = true;
};

class Evaluator {
 public:
  Evaluator(EvaluatorOptions options, const embedder::Embedder& embedder, llm::Gateway* gateway = nullptr);

  Evaluation evaluate(const llm::RawResponse& raw, const corpus::Sample& sample,
                      const corpus::CveRecord& record) const;
  const EvaluatorOptions& options() const { return options_; }

 private:
  EvaluatorOptions options_;
  const embedder::Embedder& embedder_;
  std::optional<Judge> judge_;
};

}  // namespace realvul::evaluator
