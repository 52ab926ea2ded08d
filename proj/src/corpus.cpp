#include "realvul/corpus.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "realvul/error.hpp"
#include "realvul/resources.hpp"
#include "realvul/text.hpp"

namespace realvul::corpus {

using json = nlohmann::json;

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

[[noreturn]] void malformed(std::size_t line, std::string_view field, std::string_view what) {
  throw Error(ErrorCode::kMalformedRecord,
              "line " + std::to_string(line) + ", field '" + std::string(field) + "': " + std::string(what));
}

std::string require_string(const json& obj, std::string_view field, std::size_t line,
                           bool allow_missing = false) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    if (allow_missing) return {};
    malformed(line, field, "missing");
  }
  if (!it->is_string()) malformed(line, field, "expected string");
  return it->get<std::string>();
}

std::vector<LineRange> parse_locations(const json& obj, std::string_view field, std::size_t line) {
  std::vector<LineRange> out;
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return out;
  if (!it->is_array()) malformed(line, field, "expected array");
  for (const auto& loc : *it) {
    if (!loc.is_object() || !loc.contains("first") || !loc.contains("last") ||
        !loc["first"].is_number_integer() || !loc["last"].is_number_integer()) {
      malformed(line, field, "expected {first, last} integers");
    }
    LineRange r{loc["first"].get<int>(), loc["last"].get<int>()};
    if (r.first < 1 || r.last < r.first) malformed(line, field, "invalid line range");
    out.push_back(r);
  }
  return out;
}

CveRecord record_from_json(const json& obj, std::size_t line) {
  if (!obj.is_object()) malformed(line, "<record>", "expected object");
  CveRecord r;
  r.cve_id = require_string(obj, "cve_id", line);
  r.cwe_id = require_string(obj, "cwe_id", line);
  auto rank = obj.find("mitre_rank");
  if (rank == obj.end() || !rank->is_number_integer()) malformed(line, "mitre_rank", "expected integer");
  r.mitre_rank = rank->get<int>();
  r.project = require_string(obj, "project", line);
  r.language = require_string(obj, "language", line);
  r.description = require_string(obj, "description", line);
  r.vulnerable_code = require_string(obj, "vulnerable_code", line);
  r.patched_code = require_string(obj, "patched_code", line);
  r.commit_message = require_string(obj, "commit_message", line);
  r.commit_hash = require_string(obj, "commit_hash", line, true);
  r.flaw_locations = parse_locations(obj, "flaw_locations", line);
  return r;
}

json record_to_json(const CveRecord& r) {
  json locs = json::array();
  for (const auto& l : r.flaw_locations) locs.push_back({{"first", l.first}, {"last", l.last}});
  return json{{"cve_id", r.cve_id},
              {"cwe_id", r.cwe_id},
              {"mitre_rank", r.mitre_rank},
              {"project", r.project},
              {"language", r.language},
              {"description", r.description},
              {"vulnerable_code", r.vulnerable_code},
              {"patched_code", r.patched_code},
              {"commit_message", r.commit_message},
              {"commit_hash", r.commit_hash},
              {"flaw_locations", std::move(locs)}};
}

void validate_at(const CveRecord& r, std::size_t line) {
  if (!is_valid_cve_id(r.cve_id)) malformed(line, "cve_id", "does not match CVE-YYYY-NNNN");
  if (!is_valid_cwe_id(r.cwe_id)) malformed(line, "cwe_id", "does not match CWE-N");
  if (r.mitre_rank < 1) malformed(line, "mitre_rank", "must be >= 1");
  if (r.vulnerable_code.empty()) malformed(line, "vulnerable_code", "empty");
  if (r.patched_code.empty()) malformed(line, "patched_code", "empty");
  if (r.vulnerable_code == r.patched_code) malformed(line, "patched_code", "identical to vulnerable_code");
}

struct Header {
  std::string format;
  int version = 0;
  std::string source_tag;
};

Header parse_header(std::string_view line_text) {
  json h = json::parse(line_text, nullptr, false);
  if (h.is_discarded() || !h.is_object() || !h.contains("format") || !h["format"].is_string()) {
    malformed(1, "format", "missing header line");
  }
  Header out;
  out.format = h["format"].get<std::string>();
  if (!h.contains("version")) malformed(1, "version", "missing");
  const json& v = h["version"];
  if (v.is_number_integer()) {
    out.version = v.get<int>();
  } else if (v.is_string()) {
    // Tolerate "1" and "v1"; anything else is a version this build cannot read.
    std::string s = v.get<std::string>();
    std::string_view digits = s;
    if (!digits.empty() && (digits.front() == 'v' || digits.front() == 'V')) digits.remove_prefix(1);
    bool numeric = !digits.empty() && digits.size() < 9 &&
                   std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; });
    if (!numeric) throw Error(ErrorCode::kUnsupportedVersion, "unsupported format version \"" + s + "\"");
    out.version = std::stoi(std::string(digits));
  } else {
    malformed(1, "version", "must be an integer");
  }
  if (h.contains("source_tag") && h["source_tag"].is_string()) out.source_tag = h["source_tag"].get<std::string>();
  return out;
}

// Yields (1-based line number, text) for every non-blank line.
std::vector<std::pair<std::size_t, std::string_view>> content_lines(std::string_view contents) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  auto lines = text::split_lines(contents);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto l = lines[i];
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    if (!text::is_blank(l)) out.emplace_back(i + 1, l);
  }
  return out;
}

}  // namespace

const CveRecord* CorpusManifest::find(std::string_view cve_id) const {
  for (const auto& r : records) {
    if (r.cve_id == cve_id) return &r;
  }
  return nullptr;
}

std::string_view to_string(SampleKind kind) {
  return kind == SampleKind::kVulnerable ? "vulnerable" : "patched";
}

std::optional<SampleKind> parse_sample_kind(std::string_view s) {
  if (s == "vulnerable") return SampleKind::kVulnerable;
  if (s == "patched") return SampleKind::kPatched;
  return std::nullopt;
}

bool is_valid_cve_id(std::string_view id) {
  if (id.size() < 13 || id.substr(0, 4) != "CVE-") return false;
  auto year = id.substr(4, 4);
  if (!all_digits(year) || id[8] != '-') return false;
  return id.size() - 9 >= 4 && all_digits(id.substr(9));
}

bool is_valid_cwe_id(std::string_view id) {
  return id.size() > 4 && id.substr(0, 4) == "CWE-" && all_digits(id.substr(4));
}

void validate_record(const CveRecord& record) { validate_at(record, 0); }

CorpusManifest parse_manifest(std::string_view contents, std::string source_tag, const LoadOptions& options) {
  auto lines = content_lines(contents);
  if (lines.empty()) throw Error(ErrorCode::kEmptyManifest, source_tag + " contains no lines");

  Header header = parse_header(lines.front().second);
  if (header.format != kCorpusFormat) malformed(lines.front().first, "format", "expected realvul-corpus");
  if (header.version != kCorpusVersion) {
    throw Error(ErrorCode::kUnsupportedVersion, "corpus version " + std::to_string(header.version));
  }

  CorpusManifest manifest;
  manifest.source_tag = header.source_tag.empty() ? std::move(source_tag) : header.source_tag;
  manifest.loaded_at = std::chrono::system_clock::now();

  std::unordered_set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto [lineno, body] = lines[i];
    try {
      json obj = json::parse(body, nullptr, false);
      if (obj.is_discarded()) malformed(lineno, "<record>", "invalid JSON");
      CveRecord r = record_from_json(obj, lineno);
      validate_at(r, lineno);
      if (!seen.insert(r.cve_id).second) {
        throw Error(ErrorCode::kDuplicateCve, r.cve_id + " repeated at line " + std::to_string(lineno));
      }
      manifest.records.push_back(std::move(r));
    } catch (const Error& e) {
      if (!options.lenient || e.code() != ErrorCode::kMalformedRecord) throw;
      if (options.on_warning) options.on_warning(e.what());
    }
  }
  if (manifest.records.empty()) throw Error(ErrorCode::kEmptyManifest, manifest.source_tag + " has no records");
  return manifest;
}

CorpusManifest load_manifest(const std::filesystem::path& path, const LoadOptions& options) {
  return parse_manifest(text::read_file(path), path.filename().string(), options);
}

std::string serialize_manifest(const CorpusManifest& manifest) {
  json header{{"format", kCorpusFormat}, {"version", kCorpusVersion}};
  if (!manifest.source_tag.empty()) header["source_tag"] = manifest.source_tag;
  std::string out = header.dump() + "\n";
  for (const auto& r : manifest.records) out += record_to_json(r).dump() + "\n";
  return out;
}

std::map<std::string, std::size_t> cwe_distribution(const CorpusManifest& manifest) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : manifest.records) ++counts[r.cwe_id];
  return counts;
}

std::string reference_reasoning(const CveRecord& record, SampleKind kind) {
  std::string where;
  for (std::size_t i = 0; i < record.flaw_locations.size(); ++i) {
    const auto& l = record.flaw_locations[i];
    where += i == 0 ? "" : ", ";
    where += l.first == l.last ? "line " + std::to_string(l.first)
                               : "lines " + std::to_string(l.first) + "-" + std::to_string(l.last);
  }
  if (kind == SampleKind::kVulnerable) {
    std::string out = "Vulnerable (" + record.cwe_id + "): " + std::string(text::trim(record.description));
    if (!where.empty()) out += " Flaw location: " + where + ".";
    return out;
  }
  std::string out = "Not vulnerable: this is the patched version in which the " + record.cwe_id +
                    " weakness is fixed. Fixed flaw: " + std::string(text::trim(record.description));
  if (!where.empty()) out += " Previously at " + where + ".";
  return out;
}

std::vector<Sample> to_samples(const CorpusManifest& manifest) {
  std::vector<Sample> out;
  out.reserve(manifest.records.size() * 2);
  for (const auto& r : manifest.records) {
    out.push_back({r.cve_id, SampleKind::kVulnerable, r.vulnerable_code, Label::kYes,
                   reference_reasoning(r, SampleKind::kVulnerable)});
    out.push_back({r.cve_id, SampleKind::kPatched, r.patched_code, Label::kNo,
                   reference_reasoning(r, SampleKind::kPatched)});
  }
  return out;
}

bool ImportFilter::admits(const CveRecord& record) const {
  if (!cwe_ids.empty() && !cwe_ids.contains(record.cwe_id)) return false;
  if (!projects.empty() && !projects.contains(record.project)) return false;
  return true;
}

std::map<std::string, int> default_rank_table() {
  return {{"CWE-787", 1}, {"CWE-416", 4}, {"CWE-476", 12}, {"CWE-190", 14}};
}

std::vector<CveRecord> parse_cvefixes(std::string_view contents, const std::optional<ImportFilter>& filter,
                                      const std::map<std::string, int>& ranks) {
  auto lines = content_lines(contents);
  if (lines.empty()) throw Error(ErrorCode::kMalformedRecord, "line 1, field 'format': missing header line");
  Header header = parse_header(lines.front().second);
  if (header.format != kCvefixesFormat) malformed(lines.front().first, "format", "expected cvefixes-export");
  if (header.version != kCvefixesVersion) {
    throw Error(ErrorCode::kUnsupportedVersion, "cvefixes export version " + std::to_string(header.version));
  }

  std::vector<CveRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto [lineno, body] = lines[i];
    json obj = json::parse(body, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) malformed(lineno, "<record>", "invalid JSON object");

    // Column names follow the CVEfixes schema (fixes/commits/method_change tables).
    CveRecord r;
    r.cve_id = require_string(obj, "cve_id", lineno);
    r.cwe_id = require_string(obj, "cwe_id", lineno);
    r.project = require_string(obj, "repo_name", lineno);
    r.language = require_string(obj, "programming_language", lineno);
    r.description = require_string(obj, "description", lineno);
    r.vulnerable_code = require_string(obj, "code_before", lineno);
    r.patched_code = require_string(obj, "code_after", lineno);
    r.commit_message = require_string(obj, "msg", lineno);
    r.commit_hash = require_string(obj, "hash", lineno, true);
    r.flaw_locations = parse_locations(obj, "flaw_locations", lineno);
    if (auto it = obj.find("mitre_rank"); it != obj.end() && it->is_number_integer()) {
      r.mitre_rank = it->get<int>();
    } else if (auto rk = ranks.find(r.cwe_id); rk != ranks.end()) {
      r.mitre_rank = rk->second;
    } else {
      malformed(lineno, "mitre_rank", "absent and no rank known for " + r.cwe_id);
    }
    validate_at(r, lineno);
    if (!filter || filter->admits(r)) out.push_back(std::move(r));
  }
  return out;
}

std::vector<CveRecord> import_cvefixes(const std::filesystem::path& path, const std::optional<ImportFilter>& filter,
                                       const std::map<std::string, int>& ranks) {
  return parse_cvefixes(text::read_file(path), filter, ranks);
}

CorpusManifest table1_manifest() {
  return parse_manifest(resources::get("fixtures/table1_cves.jsonl"), "table1_cves");
}

CorpusManifest demo_manifest() {
  return parse_manifest(resources::get("demo/corpus.jsonl"), "demo");
}

}  // namespace realvul::corpus
