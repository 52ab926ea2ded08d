#include "realvul/promptkit.hpp"

#include <algorithm>

#include "realvul/cwe.hpp"
#include "realvul/error.hpp"
#include "realvul/resources.hpp"
#include "realvul/text.hpp"

namespace realvul::promptkit {

namespace {

std::string_view user_template_name(Strategy s) {
  switch (s) {
    case Strategy::kStandard: return "user_standard";
    case Strategy::kChainOfThought: return "user_chain_of_thought";
    case Strategy::kDecomposition: return "user_decomposition";
    case Strategy::kPlanAndSolve: return "user_plan_and_solve";
  }
  return "user_standard";
}

// First `keep` lines of `code`, followed by the truncation marker when lines were dropped.
std::string head_lines(const std::vector<std::string_view>& lines, std::size_t keep) {
  std::string out;
  for (std::size_t i = 0; i < std::min(keep, lines.size()); ++i) {
    out.append(lines[i]);
    out.push_back('\n');
  }
  if (keep < lines.size()) out.append(kTruncationMarker);
  else if (!out.empty()) out.pop_back();
  return out;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kStandard: return "standard";
    case Strategy::kChainOfThought: return "chain_of_thought";
    case Strategy::kDecomposition: return "decomposition";
    case Strategy::kPlanAndSolve: return "plan_and_solve";
  }
  return "standard";
}

std::string_view label(Strategy s) {
  switch (s) {
    case Strategy::kStandard: return "P-S";
    case Strategy::kChainOfThought: return "P-CoT";
    case Strategy::kDecomposition: return "P-Decomp";
    case Strategy::kPlanAndSolve: return "P-P&S";
  }
  return "P-S";
}

std::optional<Strategy> parse_strategy(std::string_view s) {
  for (auto st : kAllStrategies) {
    if (s == to_string(st) || s == label(st)) return st;
  }
  return std::nullopt;
}

std::string_view to_string(Setting s) { return s == Setting::kZeroShot ? "ZS" : "FS"; }

std::optional<Setting> parse_setting(std::string_view s) {
  if (s == "ZS" || s == "zs") return Setting::kZeroShot;
  if (s == "FS" || s == "fs") return Setting::kFewShot;
  return std::nullopt;
}

std::string_view template_text(std::string_view name) {
  return resources::get("templates/" + std::string(name) + ".tmpl");
}

const std::string& template_set_hash() {
  static const std::string hash = [] {
    std::string all;
    for (auto name : resources::names()) {
      if (name.substr(0, 10) != "templates/") continue;
      all.append(name);
      all.push_back('\0');
      all.append(resources::get(name));
      all.push_back('\0');
    }
    return text::sha256_hex(all);
  }();
  return hash;
}

std::string fill(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) throw Error(ErrorCode::kInvalidConfig, "unterminated placeholder");
    out.append(tmpl.substr(pos, open - pos));
    auto key = tmpl.substr(open + 2, close - open - 2);
    auto it = values.find(key);
    if (it == values.end()) throw Error(ErrorCode::kInvalidConfig, "no value for placeholder " + std::string(key));
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

ContextBlock context_from_record(const corpus::CveRecord& r) {
  ContextBlock b;
  b.description = fill(template_text("context_description"), {{"project", r.project},
                                                              {"language", r.language},
                                                              {"cwe_id", r.cwe_id},
                                                              {"cwe_name", cwe::name_of(r.cwe_id)},
                                                              {"description", std::string(text::trim(r.description))}});
  b.vulnerable_code = r.vulnerable_code;
  b.fixed_code = r.patched_code;
  b.commit_message = r.commit_message;
  b.source_cve_id = r.cve_id;
  return b;
}

std::string render_context(const ContextBlock& b) {
  return fill(template_text("context_block"), {{"description", b.description},
                                               {"vulnerable_code", b.vulnerable_code},
                                               {"fixed_code", b.fixed_code},
                                               {"commit_message", b.commit_message}});
}

ContextBlock assemble_context(std::span<const vectorstore::SearchHit> hits, const corpus::CorpusManifest& corpus,
                              std::size_t budget) {
  if (hits.empty()) throw Error(ErrorCode::kNoContextAvailable, "no retrieval hits to build context from");
  const auto& top = hits.front().payload;
  const corpus::CveRecord* parent = corpus.find(top.cve_id);
  if (parent == nullptr) throw Error(ErrorCode::kUnresolvableParent, top.cve_id + " is not in the corpus");

  ContextBlock full = context_from_record(*parent);
  if (text::estimate_tokens(render_context(full)) <= budget) return full;

  auto vuln_lines = text::split_lines(parent->vulnerable_code);
  auto fix_lines = text::split_lines(parent->patched_code);
  auto with_lines = [&](std::size_t keep) {
    ContextBlock b = full;
    b.vulnerable_code = head_lines(vuln_lines, keep);
    b.fixed_code = head_lines(fix_lines, keep);
    return b;
  };

  ContextBlock skeleton = with_lines(0);
  if (text::estimate_tokens(render_context(skeleton)) > budget) {
    throw Error(ErrorCode::kBudgetTooSmall, "context budget " + std::to_string(budget) + " is below the skeleton size " +
                                                std::to_string(text::estimate_tokens(render_context(skeleton))));
  }
  // Largest line count that fits; the estimate is monotone in the line count.
  std::size_t lo = 0, hi = std::max(vuln_lines.size(), fix_lines.size());
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo + 1) / 2;
    if (text::estimate_tokens(render_context(with_lines(mid))) <= budget) lo = mid;
    else hi = mid - 1;
  }
  return with_lines(lo);
}

std::vector<ContextBlock> assemble_contexts(std::span<const vectorstore::SearchHit> hits,
                                            const corpus::CorpusManifest& corpus, std::size_t budget,
                                            std::size_t max_blocks) {
  std::vector<vectorstore::SearchHit> firsts;
  for (const auto& h : hits) {
    bool seen = std::any_of(firsts.begin(), firsts.end(),
                            [&](const auto& f) { return f.payload.cve_id == h.payload.cve_id; });
    if (!seen) firsts.push_back(h);
    if (firsts.size() == std::max<std::size_t>(max_blocks, 1)) break;
  }
  if (firsts.empty()) throw Error(ErrorCode::kNoContextAvailable, "no retrieval hits to build context from");
  std::vector<ContextBlock> out;
  const std::size_t share = budget / firsts.size();
  for (const auto& h : firsts) out.push_back(assemble_context(std::span(&h, 1), corpus, share));
  return out;
}

RenderedPrompt render(Strategy strategy, Setting setting, const corpus::Sample& sample,
                      std::span<const ContextBlock> contexts) {
  if (setting == Setting::kFewShot && contexts.empty()) {
    throw Error(ErrorCode::kMissingContext, "few-shot prompt needs a context block");
  }
  if (setting == Setting::kZeroShot && !contexts.empty()) {
    throw Error(ErrorCode::kUnexpectedContext, "zero-shot prompt must not carry context");
  }

  RenderedPrompt p;
  p.strategy = strategy;
  p.setting = setting;
  p.target_cve_id = sample.cve_id;
  p.target_kind = sample.kind;

  if (setting == Setting::kFewShot) {
    std::string joined;
    for (const auto& c : contexts) {
      if (c.source_cve_id == sample.cve_id) {
        throw Error(ErrorCode::kContextLeak, "context comes from the target " + sample.cve_id);
      }
      if (c.description.empty() || c.vulnerable_code.empty() || c.fixed_code.empty() || c.commit_message.empty()) {
        throw Error(ErrorCode::kMissingContext, "context block from " + c.source_cve_id + " has an empty section");
      }
      if (!joined.empty()) joined += "\n\n";
      joined += render_context(c);
    }
    p.system_text = fill(template_text("system_fs"), {{"context", joined}});
    p.context_ref = contexts.front().source_cve_id;
  } else {
    p.system_text = std::string(template_text("system_zs"));
  }

  p.user_text = fill(template_text(user_template_name(strategy)),
                     {{"format_contract", std::string(template_text("format_contract"))}, {"code", sample.code}});
  p.token_estimate = text::estimate_tokens(p.system_text) + text::estimate_tokens(p.user_text);
  return p;
}

RenderedPrompt render(Strategy strategy, Setting setting, const corpus::Sample& sample,
                      const std::optional<ContextBlock>& context) {
  if (context) return render(strategy, setting, sample, std::span<const ContextBlock>(&*context, 1));
  return render(strategy, setting, sample, std::span<const ContextBlock>());
}

}  // namespace realvul::promptkit
