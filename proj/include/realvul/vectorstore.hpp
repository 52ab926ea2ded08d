#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "realvul/embedder.hpp"

namespace realvul::vectorstore {

inline constexpr std::uint32_t kIndexVersion = 1;

enum class FieldKind : std::uint8_t { kDescription = 0, kVulnerableCode = 1, kPatchedCode = 2, kCommitMessage = 3 };

std::string_view to_string(FieldKind kind);
std::optional<FieldKind> parse_field_kind(std::string_view s);

struct Payload {
  std::string cve_id;
  std::string cwe_id;
  std::string project;
  std::string language;
  FieldKind field_kind = FieldKind::kDescription;
  std::uint32_t chunk_index = 0;
  std::string parent_doc_id;

  bool operator==(const Payload&) const = default;
};

struct Point {
  std::uint64_t id = 0;
  std::vector<float> vector;
  Payload payload;
};

struct SearchHit {
  std::uint64_t point_id = 0;
  double score = 0.0;
  Payload payload;
};

using PayloadFilter = std::function<bool(const Payload&)>;

// Admits every payload whose cve_id differs from `cve_id`.
PayloadFilter exclude_filter(std::string cve_id);

// Exact cosine index. Vectors are held as float32; scores accumulate in double.
// Readers share the lock, upserts take it exclusively.
class VectorStore {
 public:
  explicit VectorStore(std::size_t dimension);
  VectorStore(VectorStore&& other) noexcept;
  VectorStore& operator=(VectorStore&& other) noexcept;
  VectorStore(const VectorStore&) = delete;
  VectorStore& operator=(const VectorStore&) = delete;

  // Inserts a point, or replaces it when `id` names an existing one.
  std::uint64_t upsert(const embedder::Vector& vector, Payload payload, std::optional<std::uint64_t> id = {});

  // Top-k by cosine among points admitted by `filter`, ordered by score
  // descending then id ascending.
  std::vector<SearchHit> search(const embedder::Vector& query, std::size_t k, const PayloadFilter& filter = {}) const;

  std::size_t size() const;
  std::size_t dimension() const { return dimension_; }
  std::optional<Point> get(std::uint64_t id) const;
  std::vector<Point> points() const;

  std::string serialize() const;
  static VectorStore deserialize(std::string_view bytes);
  void persist(const std::filesystem::path& path) const;
  static VectorStore load(const std::filesystem::path& path);

 private:
  struct Entry {
    Point point;
    double norm = 0.0;
  };

  std::size_t dimension_;
  std::vector<Entry> entries_;
  std::unordered_map<std::uint64_t, std::size_t> by_id_;
  std::uint64_t next_id_ = 0;
  mutable std::unique_ptr<std::shared_mutex> mu_;
};

}  // namespace realvul::vectorstore
