#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace realvul::corpus {

inline constexpr std::string_view kCorpusFormat = "realvul-corpus";
inline constexpr int kCorpusVersion = 1;
inline constexpr std::string_view kCvefixesFormat = "cvefixes-export";
inline constexpr int kCvefixesVersion = 1;

// Inclusive 1-based line range inside the vulnerable code body.
struct LineRange {
  int first = 0;
  int last = 0;

  bool overlaps(const LineRange& other) const { return first <= other.last && other.first <= last; }
  bool operator==(const LineRange&) const = default;
};

struct CveRecord {
  std::string cve_id;
  std::string cwe_id;
  int mitre_rank = 0;
  std::string project;
  std::string language;
  std::string description;
  std::string vulnerable_code;
  std::string patched_code;
  std::string commit_message;
  std::string commit_hash;
  std::vector<LineRange> flaw_locations;

  bool operator==(const CveRecord&) const = default;
};

struct CorpusManifest {
  std::vector<CveRecord> records;
  std::string source_tag;
  std::chrono::system_clock::time_point loaded_at;

  const CveRecord* find(std::string_view cve_id) const;
};

enum class SampleKind { kVulnerable, kPatched };
enum class Label { kYes, kNo };

std::string_view to_string(SampleKind kind);
std::optional<SampleKind> parse_sample_kind(std::string_view s);

struct Sample {
  std::string cve_id;
  SampleKind kind = SampleKind::kVulnerable;
  std::string code;
  Label ground_truth = Label::kYes;
  std::string gt_reason;
};

struct LoadOptions {
  // Downgrade per-record validation failures to warnings; the record is skipped.
  bool lenient = false;
  std::function<void(const std::string&)> on_warning;
};

bool is_valid_cve_id(std::string_view id);
bool is_valid_cwe_id(std::string_view id);

// Throws MalformedRecord describing the first violated invariant.
void validate_record(const CveRecord& record);

CorpusManifest parse_manifest(std::string_view contents, std::string source_tag,
                              const LoadOptions& options = {});
CorpusManifest load_manifest(const std::filesystem::path& path, const LoadOptions& options = {});
std::string serialize_manifest(const CorpusManifest& manifest);

std::map<std::string, std::size_t> cwe_distribution(const CorpusManifest& manifest);

std::vector<Sample> to_samples(const CorpusManifest& manifest);
std::string reference_reasoning(const CveRecord& record, SampleKind kind);

struct ImportFilter {
  std::set<std::string> cwe_ids;
  std::set<std::string> projects;

  bool admits(const CveRecord& record) const;
};

// CWE -> MITRE rank used when an export line carries no rank of its own.
// Defaults to the ranks of the four weakness classes in the bundled fixture.
std::map<std::string, int> default_rank_table();

std::vector<CveRecord> import_cvefixes(const std::filesystem::path& path,
                                       const std::optional<ImportFilter>& filter = std::nullopt,
                                       const std::map<std::string, int>& ranks = default_rank_table());
std::vector<CveRecord> parse_cvefixes(std::string_view contents,
                                      const std::optional<ImportFilter>& filter = std::nullopt,
                                      const std::map<std::string, int>& ranks = default_rank_table());

// Bundled Table I manifest (15 CVEs, stub code bodies).
CorpusManifest table1_manifest();
// Bundled demo manifest with small illustrative code bodies.
CorpusManifest demo_manifest();

}  // namespace realvul::corpus
