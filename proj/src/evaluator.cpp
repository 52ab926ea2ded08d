#include "realvul/evaluator.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>

#include "realvul/cwe.hpp"
#include "realvul/error.hpp"
#include "realvul/promptkit.hpp"
#include "realvul/text.hpp"

namespace realvul::evaluator {

using json = nlohmann::json;

namespace {

constexpr std::string_view kKnownKeys[] = {"prediction", "reason", "location", "cwe", "step 1", "step 2", "step 3"};

struct KeyValue {
  std::string key;  // lowercase
  std::string value;
};

std::string_view strip_decoration(std::string_view s) {
  auto junk = [](char c) { return std::isspace(static_cast<unsigned char>(c)) || c == '*' || c == '#' || c == '>' ||
                                  c == '-' || c == '`' || c == '_'; };
  while (!s.empty() && junk(s.front())) s.remove_prefix(1);
  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.back())) || s.back() == '*' || s.back() == '`')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<KeyValue> key_value(std::string_view line) {
  line = strip_decoration(line);
  auto colon = line.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon > 24) return std::nullopt;
  std::string key = text::to_lower(strip_decoration(line.substr(0, colon)));
  bool known = std::any_of(std::begin(kKnownKeys), std::end(kKnownKeys), [&](auto k) { return key == k; });
  if (!known) return std::nullopt;
  return KeyValue{key, std::string(strip_decoration(line.substr(colon + 1)))};
}

std::optional<Prediction> yes_no(std::string_view value) {
  std::string v = text::to_lower(value);
  auto start = v.find_first_not_of(" \t[(\"'*");
  if (start == std::string::npos) return std::nullopt;
  v = v.substr(start);
  auto word_end = [&](std::size_t n) { return v.size() == n || !std::isalpha(static_cast<unsigned char>(v[n])); };
  if (v.rfind("yes", 0) == 0 && word_end(3)) return Prediction::kYes;
  if (v.rfind("no", 0) == 0 && word_end(2)) return Prediction::kNo;
  if (v.rfind("n/a", 0) == 0) return Prediction::kNotAnswered;
  return std::nullopt;
}

std::string strip_cwe_parentheticals(std::string s) {
  static const std::regex paren(R"(\s*\(\s*[Cc][Ww][Ee]-\d+[^)]*\))");
  s = std::regex_replace(s, paren, "");
  return std::string(text::trim(s));
}

std::optional<std::string> json_string_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) {
    std::string v = it->get<std::string>();
    std::string l = text::to_lower(text::trim(v));
    if (l.empty() || l == "null" || l == "none" || l == "n/a") return std::nullopt;
    return v;
  }
  return it->dump();
}

// First {...} object in `reply` that parses as JSON.
std::optional<json> find_json_object(std::string_view reply) {
  for (auto open = reply.find('{'); open != std::string_view::npos; open = reply.find('{', open + 1)) {
    for (auto close = reply.rfind('}'); close != std::string_view::npos && close > open;
         close = close == 0 ? std::string_view::npos : reply.rfind('}', close - 1)) {
      json j = json::parse(reply.substr(open, close - open + 1), nullptr, false);
      if (!j.is_discarded() && j.is_object()) return j;
    }
  }
  return std::nullopt;
}

const std::string& judge_prompt_hash() {
  static const std::string hash = text::sha256_hex(
      std::string(promptkit::template_text("judge_system")) + '\0' +
      std::string(promptkit::template_text("judge_extract")) + '\0' +
      std::string(promptkit::template_text("judge_align")) + '\0' + std::string(promptkit::template_text("judge_pcs")));
  return hash;
}

std::string ask_judge(const Judge& judge, const std::string& user) {
  std::string system(promptkit::template_text("judge_system"));
  try {
    return judge.gateway->complete(judge.profile, system, user, text::estimate_tokens(system) + text::estimate_tokens(user))
        .text;
  } catch (const Error& e) {
    throw Error(ErrorCode::kJudgeUnavailable, judge.profile.name + ": " + e.what());
  }
}

std::string describe_locations(const std::vector<corpus::LineRange>& locs) {
  if (locs.empty()) return "unknown";
  std::string out;
  for (const auto& l : locs) {
    if (!out.empty()) out += ", ";
    out += l.first == l.last ? "line " + std::to_string(l.first)
                             : "lines " + std::to_string(l.first) + "-" + std::to_string(l.last);
  }
  return out;
}

}  // namespace

std::string_view to_string(Prediction p) {
  switch (p) {
    case Prediction::kYes: return "yes";
    case Prediction::kNo: return "no";
    case Prediction::kNotAnswered: return "n/a";
  }
  return "n/a";
}

std::optional<Prediction> parse_prediction(std::string_view s) { return yes_no(s); }

void ScoringWeights::validate() const {
  if (accuracy < 0 || similarity < 0 || partial < 0) throw Error(ErrorCode::kInvalidConfig, "negative weight");
  if (std::abs(accuracy + similarity + partial - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidConfig, "weights must sum to 1");
  }
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kCpCr: return "CP_CR";
    case Outcome::kCpIcr: return "CP_ICR";
    case Outcome::kIcpIcr: return "ICP_ICR";
  }
  return "ICP_ICR";
}

std::string_view label(Outcome o) {
  switch (o) {
    case Outcome::kCpCr: return "CP-CR";
    case Outcome::kCpIcr: return "CP-ICR";
    case Outcome::kIcpIcr: return "ICP-ICR";
  }
  return "ICP-ICR";
}

std::optional<Outcome> parse_outcome(std::string_view s) {
  for (auto o : {Outcome::kCpCr, Outcome::kCpIcr, Outcome::kIcpIcr}) {
    if (s == to_string(o) || s == label(o)) return o;
  }
  return std::nullopt;
}

std::vector<corpus::LineRange> parse_line_ranges(std::string_view text) {
  static const std::regex re(R"(\blines?\s*(\d+)(?:\s*(?:-|–|to|and)\s*(\d+))?)", std::regex::icase);
  std::vector<corpus::LineRange> out;
  std::string s(text);
  for (std::sregex_iterator it(s.begin(), s.end(), re), end; it != end; ++it) {
    int a = std::stoi((*it)[1].str());
    int b = (*it)[2].matched ? std::stoi((*it)[2].str()) : a;
    out.push_back({std::min(a, b), std::max(a, b)});
  }
  return out;
}

Verdict parse_verdict(std::string_view response) {
  Verdict v;
  auto lines = text::split_lines(response);
  std::optional<Prediction> pred, step2;
  std::optional<std::size_t> reason_line;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto kv = key_value(lines[i]);
    if (!kv) continue;
    if (kv->key == "prediction" && !pred) {
      pred = yes_no(kv->value);
    } else if (kv->key == "reason" && !reason_line) {
      reason_line = i;
      v.reason_summary = kv->value;
    } else if (kv->key == "location" && !v.claimed_location && !kv->value.empty()) {
      v.claimed_location = kv->value;
    } else if (kv->key == "step 2" && !step2) {
      step2 = yes_no(kv->value);
    }
  }
  if (!pred) pred = step2;
  if (!pred || *pred == Prediction::kNotAnswered) return Verdict{};
  v.prediction = *pred;

  if (reason_line) {
    for (std::size_t i = *reason_line + 1; i < lines.size(); ++i) {
      if (text::is_blank(lines[i]) || key_value(lines[i])) break;
      v.reason_summary += ' ';
      v.reason_summary += text::trim(lines[i]);
    }
  }
  std::string cwe_id = cwe::find_cwe_id(response);
  if (!cwe_id.empty()) v.claimed_cwe = cwe_id;
  v.reason_summary = strip_cwe_parentheticals(v.reason_summary);
  if (!v.claimed_location) {
    auto ranges = parse_line_ranges(v.reason_summary);
    if (!ranges.empty()) v.claimed_location = describe_locations(ranges);
  }
  return v;
}

Verdict parse_judge_verdict(std::string_view reply) {
  auto j = find_json_object(reply);
  if (!j) return Verdict{};
  Verdict v;
  auto pred = json_string_field(*j, "prediction");
  auto p = pred ? yes_no(*pred) : std::nullopt;
  if (!p || *p == Prediction::kNotAnswered) return Verdict{};
  v.prediction = *p;
  v.reason_summary = json_string_field(*j, "reason_summary").value_or("");
  if (auto c = json_string_field(*j, "cwe")) {
    std::string id = cwe::find_cwe_id(*c);
    if (!id.empty()) v.claimed_cwe = id;
  }
  v.claimed_location = json_string_field(*j, "location");
  return v;
}

Verdict extract_verdict(const llm::RawResponse& raw, const Judge* judge) {
  if (judge == nullptr) return parse_verdict(raw.text);
  std::string user = promptkit::fill(promptkit::template_text("judge_extract"), {{"response", raw.text}});
  return parse_judge_verdict(ask_judge(*judge, user));
}

int accuracy(const Verdict& verdict, corpus::Label ground_truth) {
  switch (verdict.prediction) {
    case Prediction::kYes: return ground_truth == corpus::Label::kYes ? 1 : 0;
    case Prediction::kNo: return ground_truth == corpus::Label::kNo ? 1 : 0;
    case Prediction::kNotAnswered: return 0;
  }
  return 0;
}

double reasoning_similarity(std::string_view reason, std::string_view gt_reason, const embedder::Embedder& embedder) {
  if (text::is_blank(gt_reason)) throw Error(ErrorCode::kEmptyInput, "ground-truth reasoning is empty");
  if (text::is_blank(reason)) return 0.0;
  double c = embedder::cosine(embedder.embed(reason), embedder.embed(gt_reason));
  return std::max(0.0, c);
}

bool parse_alignment_reply(std::string_view reply) {
  if (auto j = find_json_object(reply)) {
    auto it = j->find("aligned");
    if (it != j->end()) {
      if (it->is_boolean()) return it->get<bool>();
      if (it->is_string()) return yes_no(it->get<std::string>()) == Prediction::kYes;
    }
  }
  return yes_no(text::trim(reply)) == Prediction::kYes;
}

bool semantic_alignment(std::string_view reason, std::string_view gt_reason, const embedder::Embedder& embedder,
                        const Judge* judge, double threshold) {
  if (judge == nullptr) return reasoning_similarity(reason, gt_reason, embedder) >= threshold;
  std::string user = promptkit::fill(promptkit::template_text("judge_align"),
                                     {{"reason", std::string(reason)}, {"gt_reason", std::string(gt_reason)}});
  return parse_alignment_reply(ask_judge(*judge, user));
}

double rubric_partial_credit(const Verdict& verdict, const corpus::CveRecord& record) {
  double cwe_term = verdict.claimed_cwe && cwe::same_family(*verdict.claimed_cwe, record.cwe_id) ? 1.0 : 0.0;

  std::string reason = text::to_lower(verdict.reason_summary);
  auto keywords = cwe::mechanism_keywords(record.cwe_id);
  double mechanism_term =
      std::any_of(keywords.begin(), keywords.end(), [&](auto k) { return reason.find(k) != std::string::npos; })
          ? 1.0
          : 0.0;

  if (record.flaw_locations.empty()) return (0.4 * cwe_term + 0.3 * mechanism_term) / 0.7;

  double location_term = 0.0;
  if (verdict.claimed_location) {
    for (const auto& claimed : parse_line_ranges(*verdict.claimed_location)) {
      for (const auto& truth : record.flaw_locations) {
        if (claimed.overlaps(truth)) location_term = 1.0;
      }
    }
  }
  return 0.4 * cwe_term + 0.3 * location_term + 0.3 * mechanism_term;
}

double parse_partial_credit_reply(std::string_view reply) {
  double value = 0.0;
  if (auto j = find_json_object(reply); j && j->contains("pcs") && (*j)["pcs"].is_number()) {
    value = (*j)["pcs"].get<double>();
  } else {
    static const std::regex number(R"((\d+(?:\.\d+)?))");
    std::string s(reply);
    std::smatch m;
    if (std::regex_search(s, m, number)) value = std::stod(m[1].str());
  }
  if (!std::isfinite(value)) return 0.0;
  return std::clamp(value, 0.0, 1.0);
}

double partial_credit(const Verdict& verdict, const corpus::CveRecord& record, const Judge* judge) {
  if (judge == nullptr) return rubric_partial_credit(verdict, record);
  std::string user = promptkit::fill(
      promptkit::template_text("judge_pcs"),
      {{"cwe_id", record.cwe_id},
       {"locations", describe_locations(record.flaw_locations)},
       {"gt_reason", corpus::reference_reasoning(record, corpus::SampleKind::kVulnerable)},
       {"claimed_cwe", verdict.claimed_cwe.value_or("none")},
       {"claimed_location", verdict.claimed_location.value_or("none")},
       {"reason", verdict.reason_summary}});
  return parse_partial_credit_reply(ask_judge(*judge, user));
}

double score(int acc, double cs, double pcs, const ScoringWeights& w) {
  if (acc != 0 && acc != 1) throw Error(ErrorCode::kRangeViolation, "acc must be 0 or 1");
  if (!(cs >= 0.0 && cs <= 1.0)) throw Error(ErrorCode::kRangeViolation, "cs outside [0, 1]");
  if (!(pcs >= 0.0 && pcs <= 1.0)) throw Error(ErrorCode::kRangeViolation, "pcs outside [0, 1]");
  // Extended precision so that full marks sum to exactly 1.0 before rounding.
  long double sum = static_cast<long double>(w.accuracy) * acc + static_cast<long double>(w.similarity) * cs +
                    static_cast<long double>(w.partial) * pcs;
  return std::min(1.0, static_cast<double>(sum));
}

Outcome classify(int acc, bool aligned) {
  if (acc != 1) return Outcome::kIcpIcr;
  return aligned ? Outcome::kCpCr : Outcome::kCpIcr;
}

Evaluator::Evaluator(EvaluatorOptions options, const embedder::Embedder& embedder, llm::Gateway* gateway)
    : options_(std::move(options)), embedder_(embedder) {
  options_.weights.validate();
  if (options_.judge) {
    if (gateway == nullptr) throw Error(ErrorCode::kInvalidConfig, "a judge profile needs a gateway");
    judge_ = Judge{gateway, *options_.judge};
  }
}

Evaluation Evaluator::evaluate(const llm::RawResponse& raw, const corpus::Sample& sample,
                               const corpus::CveRecord& record) const {
  Evaluation e;
  const Judge* judge = judge_ ? &*judge_ : nullptr;
  auto with_fallback = [&](auto&& fn) {
    if (judge == nullptr) return fn(nullptr);
    try {
      return fn(judge);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kJudgeUnavailable || !options_.fallback_on_judge_error) throw;
      judge = nullptr;
      return fn(nullptr);
    }
  };

  e.verdict = with_fallback([&](const Judge* j) { return extract_verdict(raw, j); });
  e.acc = accuracy(e.verdict, sample.ground_truth);
  e.cs = reasoning_similarity(e.verdict.reason_summary, sample.gt_reason, embedder_);
  e.aligned = with_fallback([&](const Judge* j) {
    if (j == nullptr) return e.cs >= options_.alignment_threshold;
    return semantic_alignment(e.verdict.reason_summary, sample.gt_reason, embedder_, j, options_.alignment_threshold);
  });
  e.pcs = with_fallback([&](const Judge* j) { return partial_credit(e.verdict, record, j); });
  e.sm = score(e.acc, e.cs, e.pcs, options_.weights);
  e.outcome = classify(e.acc, e.aligned);
  e.judge = judge ? judge->profile.name : "fallback";
  e.judge_prompt_hash = judge ? judge_prompt_hash() : std::string(kRubricVersion);
  return e;
}

}  // namespace realvul::evaluator
