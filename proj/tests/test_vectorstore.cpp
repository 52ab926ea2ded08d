#include <doctest.h>

#include <cstring>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "realvul/text.hpp"
#include "realvul/vectorstore.hpp"
#include "support.hpp"

using namespace realvul;
using namespace realvul::vectorstore;

namespace {

Payload payload(const std::string& cve, FieldKind kind = FieldKind::kDescription, std::uint32_t chunk = 0) {
  return {cve, "CWE-787", "proj", "C", kind, chunk, cve + "#" + std::string(to_string(kind))};
}

embedder::Vector random_vector(std::mt19937& rng, std::size_t dim) {
  std::normal_distribution<double> g;
  embedder::Vector v{std::vector<double>(dim)};
  for (auto& x : v.values) x = g(rng);
  return v;
}

embedder::Vector as_query(const std::vector<float>& v) { return {{v.begin(), v.end()}}; }

std::vector<std::uint64_t> ids_of(const std::vector<SearchHit>& hits) {
  std::vector<std::uint64_t> out;
  for (const auto& h : hits) out.push_back(h.point_id);
  return out;
}

}  // namespace

TEST_SUITE("vectorstore") {
  TEST_CASE("upsert semantics") {
    VectorStore s(4);
    std::mt19937 rng(1);
    auto id = s.upsert(random_vector(rng, 4), payload("CVE-2023-0001"));
    CHECK(s.size() == 1);
    s.upsert(random_vector(rng, 4), payload("CVE-2023-0002"), id);
    CHECK(s.size() == 1);
    CHECK(s.get(id)->payload.cve_id == "CVE-2023-0002");
    CHECK_RV_THROWS(s.upsert(random_vector(rng, 5), payload("x")), ErrorCode::kDimensionMismatch);
    CHECK_RV_THROWS(s.upsert(embedder::Vector{{0, 0, 0, 0}}, payload("x")), ErrorCode::kZeroVector);

    VectorStore bulk(8);
    for (int i = 0; i < 1000; ++i) bulk.upsert(random_vector(rng, 8), payload("CVE-2023-0001"));
    CHECK(bulk.size() == 1000);
  }

  TEST_CASE("search basics") {
    std::mt19937 rng(2);
    VectorStore s(16);
    for (int i = 0; i < 30; ++i) s.upsert(random_vector(rng, 16), payload(i % 2 ? "CVE-2023-0001" : "CVE-2023-0002"));
    auto target = s.get(7);
    REQUIRE(target);
    auto hits = s.search(as_query(target->vector), 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].point_id == 7);
    CHECK(std::abs(hits[0].score - 1.0) < 1e-9);

    auto only_odd = s.search(random_vector(rng, 16), 100, [](const Payload& p) { return p.cve_id == "CVE-2023-0001"; });
    CHECK(only_odd.size() == 15);
    for (std::size_t i = 1; i < only_odd.size(); ++i) CHECK(only_odd[i - 1].score >= only_odd[i].score);

    CHECK_RV_THROWS(s.search(random_vector(rng, 3), 1), ErrorCode::kDimensionMismatch);
    CHECK_RV_THROWS(s.search(random_vector(rng, 16), 0), ErrorCode::kRangeViolation);
    CHECK(VectorStore(16).search(random_vector(rng, 16), 3).empty());
  }

  TEST_CASE("ties break by ascending id") {
    VectorStore s(2);
    embedder::Vector v{{1, 1}};
    for (int i = 0; i < 5; ++i) s.upsert(v, payload("CVE-2023-0001"), 10 - i);
    auto hits = s.search(v, 5);
    CHECK(ids_of(hits) == std::vector<std::uint64_t>{6, 7, 8, 9, 10});
  }

  TEST_CASE("agrees with the naive oracle") {
    std::mt19937 rng(3);
    std::vector<std::pair<std::uint64_t, std::vector<float>>> raw;
    VectorStore s(32);
    for (int i = 0; i < 200; ++i) {
      auto v = random_vector(rng, 32);
      auto id = s.upsert(v, payload("CVE-2023-" + std::to_string(1000 + i % 7)));
      raw.emplace_back(id, s.get(id)->vector);
    }
    for (std::size_t k : {1u, 5u, 20u}) {
      for (int q = 0; q < 10; ++q) {
        auto query = random_vector(rng, 32);
        CHECK(ids_of(s.search(query, k)) == oracle::top_k(raw, query.values, k));
        CHECK(ids_of(s.search(query, k)) == ids_of(s.search(query, k)));
      }
    }
  }

  TEST_CASE("exclude filter") {
    std::mt19937 rng(4);
    VectorStore s(8);
    for (const char* cve : {"CVE-2023-0001", "CVE-2023-0002", "CVE-2023-0003"}) {
      for (int i = 0; i < 4; ++i) s.upsert(random_vector(rng, 8), payload(cve, FieldKind::kVulnerableCode, i));
    }
    auto own = s.get(0);
    auto hits = s.search(as_query(own->vector), 12, exclude_filter("CVE-2023-0001"));
    CHECK(hits.size() == 8);
    for (const auto& h : hits) CHECK(h.payload.cve_id != "CVE-2023-0001");

    VectorStore only(8);
    only.upsert(random_vector(rng, 8), payload("CVE-2023-0001"));
    CHECK(only.search(random_vector(rng, 8), 5, exclude_filter("CVE-2023-0001")).empty());
  }

  TEST_CASE("persistence round trip") {
    testsupport::TempDir dir("store");
    std::mt19937 rng(5);
    VectorStore s(24);
    for (int i = 0; i < 100; ++i) {
      s.upsert(random_vector(rng, 24), payload("CVE-2023-" + std::to_string(2000 + i % 9),
                                               static_cast<FieldKind>(i % 4), static_cast<std::uint32_t>(i)));
    }
    s.upsert(random_vector(rng, 24), payload("CVE-2023-9999"), 500);
    s.persist(dir / "idx");
    auto back = VectorStore::load(dir / "idx");
    REQUIRE(back.size() == s.size());
    CHECK(back.dimension() == 24);
    auto a = s.points();
    auto b = back.points();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].id == b[i].id);
      CHECK(a[i].payload == b[i].payload);
      CHECK(std::memcmp(a[i].vector.data(), b[i].vector.data(), a[i].vector.size() * sizeof(float)) == 0);
    }
    for (int q = 0; q < 10; ++q) {
      auto query = random_vector(rng, 24);
      auto x = s.search(query, 7);
      auto y = back.search(query, 7);
      CHECK(ids_of(x) == ids_of(y));
      for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i].score == y[i].score);
    }
    // Fresh ids continue after the highest persisted id.
    CHECK(back.upsert(random_vector(rng, 24), payload("CVE-2023-0001")) > 500);
  }

  TEST_CASE("damaged index files") {
    testsupport::TempDir dir("damaged");
    std::mt19937 rng(6);
    VectorStore s(4);
    for (int i = 0; i < 3; ++i) s.upsert(random_vector(rng, 4), payload("CVE-2023-0001"));
    std::string bytes = s.serialize();

    CHECK_RV_THROWS(VectorStore::deserialize(bytes.substr(0, bytes.size() - 5)), ErrorCode::kCorruptIndex);
    CHECK_RV_THROWS(VectorStore::deserialize(bytes.substr(0, 10)), ErrorCode::kCorruptIndex);

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_RV_THROWS(VectorStore::deserialize(bad_magic), ErrorCode::kCorruptIndex);

    std::string flipped = bytes;
    flipped[bytes.size() - 1] ^= 0x01;
    CHECK_RV_THROWS(VectorStore::deserialize(flipped), ErrorCode::kCorruptIndex);

    std::string v0 = bytes;
    std::memset(v0.data() + 8, 0, 4);
    CHECK_RV_THROWS(VectorStore::deserialize(v0), ErrorCode::kVersionMismatch);

    CHECK_RV_THROWS(VectorStore::load(dir / "missing"), ErrorCode::kIoError);
  }

  TEST_CASE("concurrent readers and a writer") {
    std::mt19937 rng(7);
    VectorStore s(8);
    for (int i = 0; i < 50; ++i) s.upsert(random_vector(rng, 8), payload("CVE-2023-0001"));
    auto q = random_vector(rng, 8);
    std::vector<std::thread> readers;
    std::atomic<int> bad{0};
    for (int t = 0; t < 4; ++t) {
      readers.emplace_back([&] {
        for (int i = 0; i < 200; ++i) {
          auto hits = s.search(q, 5);
          if (hits.size() != 5) ++bad;
        }
      });
    }
    std::mt19937 wrng(8);
    for (int i = 0; i < 100; ++i) s.upsert(random_vector(wrng, 8), payload("CVE-2023-0002"));
    for (auto& r : readers) r.join();
    CHECK(bad == 0);
    CHECK(s.size() == 150);
  }

  TEST_CASE("field kind names") {
    for (auto k : {FieldKind::kDescription, FieldKind::kVulnerableCode, FieldKind::kPatchedCode,
                   FieldKind::kCommitMessage}) {
      CHECK(parse_field_kind(to_string(k)) == k);
    }
    CHECK_FALSE(parse_field_kind("summary"));
  }
}
