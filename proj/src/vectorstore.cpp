#include "realvul/vectorstore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>

#include "realvul/error.hpp"
#include "realvul/text.hpp"

namespace realvul::vectorstore {

namespace {

constexpr char kMagic[8] = {'R', 'V', 'S', 'T', 'O', 'R', 'E', '\0'};
// magic + version + dimension + count + next_id + checksum
constexpr std::size_t kHeaderSize = 8 + 4 + 4 + 8 + 8 + 8;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    u32(bits);
  }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(b_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  float f32() {
    std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
  }
  std::string str() {
    auto n = u32();
    need(n);
    std::string s(b_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw Error(ErrorCode::kCorruptIndex, "index truncated");
  }
  std::string_view b_;
  std::size_t pos_ = 0;
};

double norm_of(const std::vector<float>& v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(s);
}

}  // namespace

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::kDescription: return "description";
    case FieldKind::kVulnerableCode: return "vulnerable_code";
    case FieldKind::kPatchedCode: return "patched_code";
    case FieldKind::kCommitMessage: return "commit_message";
  }
  return "unknown";
}

std::optional<FieldKind> parse_field_kind(std::string_view s) {
  for (auto k : {FieldKind::kDescription, FieldKind::kVulnerableCode, FieldKind::kPatchedCode,
                 FieldKind::kCommitMessage}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

PayloadFilter exclude_filter(std::string cve_id) {
  return [cve = std::move(cve_id)](const Payload& p) { return p.cve_id != cve; };
}

VectorStore::VectorStore(std::size_t dimension) : dimension_(dimension), mu_(std::make_unique<std::shared_mutex>()) {
  if (dimension == 0) throw Error(ErrorCode::kDimensionMismatch, "store dimension must be positive");
}

VectorStore::VectorStore(VectorStore&& other) noexcept
    : dimension_(other.dimension_),
      entries_(std::move(other.entries_)),
      by_id_(std::move(other.by_id_)),
      next_id_(other.next_id_),
      mu_(std::move(other.mu_)) {
  other.mu_ = std::make_unique<std::shared_mutex>();
}

VectorStore& VectorStore::operator=(VectorStore&& other) noexcept {
  if (this != &other) {
    dimension_ = other.dimension_;
    entries_ = std::move(other.entries_);
    by_id_ = std::move(other.by_id_);
    next_id_ = other.next_id_;
    mu_ = std::move(other.mu_);
    other.mu_ = std::make_unique<std::shared_mutex>();
  }
  return *this;
}

std::uint64_t VectorStore::upsert(const embedder::Vector& vector, Payload payload, std::optional<std::uint64_t> id) {
  if (vector.dimension() != dimension_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "vector dimension " + std::to_string(vector.dimension()) + ", store " + std::to_string(dimension_));
  }
  std::vector<float> stored(vector.values.size());
  for (std::size_t i = 0; i < stored.size(); ++i) {
    if (!std::isfinite(vector.values[i])) throw Error(ErrorCode::kRangeViolation, "non-finite vector component");
    stored[i] = static_cast<float>(vector.values[i]);
  }
  double norm = norm_of(stored);
  if (norm == 0.0) throw Error(ErrorCode::kZeroVector, "cannot index a zero vector");

  std::unique_lock lock(*mu_);
  std::uint64_t pid = id.value_or(next_id_);
  if (auto it = by_id_.find(pid); it != by_id_.end()) {
    entries_[it->second] = {{pid, std::move(stored), std::move(payload)}, norm};
  } else {
    by_id_.emplace(pid, entries_.size());
    entries_.push_back({{pid, std::move(stored), std::move(payload)}, norm});
  }
  next_id_ = std::max(next_id_, pid + 1);
  return pid;
}

std::vector<SearchHit> VectorStore::search(const embedder::Vector& query, std::size_t k,
                                           const PayloadFilter& filter) const {
  if (query.dimension() != dimension_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "query dimension " + std::to_string(query.dimension()) + ", store " + std::to_string(dimension_));
  }
  if (k == 0) throw Error(ErrorCode::kRangeViolation, "k must be >= 1");
  double qnorm = 0.0;
  for (double x : query.values) qnorm += x * x;
  qnorm = std::sqrt(qnorm);
  if (qnorm == 0.0) throw Error(ErrorCode::kZeroVector, "zero query vector");

  std::shared_lock lock(*mu_);
  struct Scored {
    double score;
    std::uint64_t id;
    std::size_t slot;
  };
  std::vector<Scored> scored;
  scored.reserve(entries_.size());
  for (std::size_t s = 0; s < entries_.size(); ++s) {
    const auto& e = entries_[s];
    if (filter && !filter(e.point.payload)) continue;
    double dot = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i) dot += query.values[i] * static_cast<double>(e.point.vector[i]);
    scored.push_back({dot / (qnorm * e.norm), e.point.id, s});
  }
  auto better = [](const Scored& a, const Scored& b) { return a.score != b.score ? a.score > b.score : a.id < b.id; };
  std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), better);

  std::vector<SearchHit> hits;
  hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    hits.push_back({scored[i].id, scored[i].score, entries_[scored[i].slot].point.payload});
  }
  return hits;
}

std::size_t VectorStore::size() const {
  std::shared_lock lock(*mu_);
  return entries_.size();
}

std::optional<Point> VectorStore::get(std::uint64_t id) const {
  std::shared_lock lock(*mu_);
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return entries_[it->second].point;
}

std::vector<Point> VectorStore::points() const {
  std::shared_lock lock(*mu_);
  std::vector<Point> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.point);
  return out;
}

std::string VectorStore::serialize() const {
  std::shared_lock lock(*mu_);
  Writer body;
  for (const auto& e : entries_) {
    body.u64(e.point.id);
    for (float x : e.point.vector) body.f32(x);
  }
  for (const auto& e : entries_) {
    const auto& p = e.point.payload;
    body.str(p.cve_id);
    body.str(p.cwe_id);
    body.str(p.project);
    body.str(p.language);
    body.u8(static_cast<std::uint8_t>(p.field_kind));
    body.u32(p.chunk_index);
    body.str(p.parent_doc_id);
  }

  Writer out;
  out.bytes().append(kMagic, sizeof kMagic);
  out.u32(kIndexVersion);
  out.u32(static_cast<std::uint32_t>(dimension_));
  out.u64(entries_.size());
  out.u64(next_id_);
  out.u64(text::fnv1a64(body.bytes()));
  out.bytes() += body.bytes();
  return std::move(out.bytes());
}

VectorStore VectorStore::deserialize(std::string_view bytes) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::kCorruptIndex, "bad magic or short header");
  }
  Reader header(bytes.substr(sizeof kMagic, kHeaderSize - sizeof kMagic));
  auto version = header.u32();
  if (version != kIndexVersion) {
    throw Error(ErrorCode::kVersionMismatch, "index format version " + std::to_string(version));
  }
  auto dimension = header.u32();
  auto count = header.u64();
  auto next_id = header.u64();
  auto checksum = header.u64();

  std::string_view body = bytes.substr(kHeaderSize);
  if (text::fnv1a64(body) != checksum) throw Error(ErrorCode::kCorruptIndex, "checksum mismatch");
  if (dimension == 0) throw Error(ErrorCode::kCorruptIndex, "zero dimension");
  if (count > body.size() / (8 + 4ULL * dimension)) throw Error(ErrorCode::kCorruptIndex, "point count too large");

  VectorStore store(dimension);
  Reader r(body);
  std::vector<Point> points(count);
  for (auto& p : points) {
    p.id = r.u64();
    p.vector.resize(dimension);
    for (auto& x : p.vector) x = r.f32();
  }
  for (auto& p : points) {
    p.payload.cve_id = r.str();
    p.payload.cwe_id = r.str();
    p.payload.project = r.str();
    p.payload.language = r.str();
    auto kind = r.u8();
    if (kind > static_cast<std::uint8_t>(FieldKind::kCommitMessage)) {
      throw Error(ErrorCode::kCorruptIndex, "unknown field kind");
    }
    p.payload.field_kind = static_cast<FieldKind>(kind);
    p.payload.chunk_index = r.u32();
    p.payload.parent_doc_id = r.str();
  }
  if (!r.done()) throw Error(ErrorCode::kCorruptIndex, "trailing bytes");

  for (auto& p : points) {
    double norm = norm_of(p.vector);
    if (norm == 0.0 || store.by_id_.contains(p.id)) throw Error(ErrorCode::kCorruptIndex, "invalid point");
    store.by_id_.emplace(p.id, store.entries_.size());
    store.entries_.push_back({std::move(p), norm});
  }
  store.next_id_ = next_id;
  return store;
}

void VectorStore::persist(const std::filesystem::path& path) const { text::write_file(path, serialize()); }

VectorStore VectorStore::load(const std::filesystem::path& path) { return deserialize(text::read_file(path)); }

}  // namespace realvul::vectorstore
