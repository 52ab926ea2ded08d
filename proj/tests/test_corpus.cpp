#include <doctest.h>

#include <set>

#include "realvul/corpus.hpp"
#include "realvul/error.hpp"
#include "realvul/text.hpp"
#include "support.hpp"

using namespace realvul;
using namespace realvul::corpus;
using testsupport::make_record;

namespace {

const char* kHeader = R"({"format":"realvul-corpus","version":1,"source_tag":"t"})";

std::string line_for(const CveRecord& r) {
  CorpusManifest m = testsupport::make_manifest({r});
  auto text = serialize_manifest(m);
  return text.substr(text.find('\n') + 1);
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("bundled table manifest") {
    auto m = table1_manifest();
    CHECK(m.records.size() == 15);
    std::set<std::string> projects;
    for (const auto& r : m.records) projects.insert(r.project);
    CHECK(projects == std::set<std::string>{"gpac", "libtiff", "linux", "pjsip"});

    auto dist = cwe_distribution(m);
    CHECK(dist == std::map<std::string, std::size_t>{{"CWE-787", 6}, {"CWE-416", 1}, {"CWE-476", 4}, {"CWE-190", 4}});

    std::map<std::string, int> ranks;
    for (const auto& r : m.records) ranks[r.cwe_id] = r.mitre_rank;
    CHECK(ranks == std::map<std::string, int>{{"CWE-787", 1}, {"CWE-416", 4}, {"CWE-476", 12}, {"CWE-190", 14}});

    auto samples = to_samples(m);
    CHECK(samples.size() == 30);
    std::size_t yes = 0;
    for (const auto& s : samples) yes += s.ground_truth == Label::kYes ? 1 : 0;
    CHECK(yes == 15);
  }

  TEST_CASE("empty and header-only files") {
    CHECK_RV_THROWS(parse_manifest("", "t"), ErrorCode::kEmptyManifest);
    CHECK_RV_THROWS(parse_manifest(std::string(kHeader) + "\n", "t"), ErrorCode::kEmptyManifest);
  }

  TEST_CASE("duplicate cve") {
    auto a = make_record("CVE-2023-1452", "CWE-787", "gpac");
    auto b = make_record("CVE-2023-1452", "CWE-476", "libtiff");
    CHECK_RV_THROWS(parse_manifest(std::string(kHeader) + "\n" + line_for(a) + line_for(b), "t"),
                    ErrorCode::kDuplicateCve);
  }

  TEST_CASE("malformed record names line and field") {
    auto a = make_record("CVE-2023-0001", "CWE-787");
    auto b = make_record("CVE-2023-0002", "CWE-787");
    b.patched_code = b.vulnerable_code;
    std::string text = std::string(kHeader) + "\n" + line_for(a) + line_for(b);
    try {
      parse_manifest(text, "t");
      FAIL("expected MalformedRecord");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMalformedRecord);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    std::vector<std::string> warnings;
    LoadOptions lenient{true, [&](const std::string& w) { warnings.push_back(w); }};
    auto m = parse_manifest(text, "t", lenient);
    CHECK(m.records.size() == 1);
    CHECK(warnings.size() == 1);
  }

  TEST_CASE("record invariants") {
    CHECK(is_valid_cve_id("CVE-2023-1452"));
    CHECK(is_valid_cve_id("CVE-2023-123456"));
    CHECK_FALSE(is_valid_cve_id("CVE-2023-145"));
    CHECK_FALSE(is_valid_cve_id("cve-2023-1452"));
    CHECK(is_valid_cwe_id("CWE-787"));
    CHECK_FALSE(is_valid_cwe_id("CWE787"));
    auto r = make_record("CVE-2023-0001", "CWE-787");
    r.mitre_rank = 0;
    CHECK_RV_THROWS(validate_record(r), ErrorCode::kMalformedRecord);
  }

  TEST_CASE("unsupported corpus version") {
    auto r = make_record("CVE-2023-0001", "CWE-787");
    CHECK_RV_THROWS(parse_manifest(R"({"format":"realvul-corpus","version":2})"
                                   "\n" +
                                       line_for(r),
                                   "t"),
                    ErrorCode::kUnsupportedVersion);
  }

  TEST_CASE("cwe distribution on a hand-counted fixture") {
    auto m = testsupport::make_manifest({make_record("CVE-2020-0001", "CWE-787"), make_record("CVE-2020-0002", "CWE-416"),
                                         make_record("CVE-2020-0003", "CWE-787"), make_record("CVE-2020-0004", "CWE-787"),
                                         make_record("CVE-2020-0005", "CWE-416"), make_record("CVE-2020-0006", "CWE-787")});
    CHECK(cwe_distribution(m) == std::map<std::string, std::size_t>{{"CWE-416", 2}, {"CWE-787", 4}});
    auto single = testsupport::make_manifest({make_record("CVE-2020-0009", "CWE-190")});
    CHECK(cwe_distribution(single) == std::map<std::string, std::size_t>{{"CWE-190", 1}});
  }

  TEST_CASE("samples pair up with opposite labels") {
    auto m = testsupport::make_manifest({make_record("CVE-2020-0001", "CWE-787"), make_record("CVE-2020-0002", "CWE-416"),
                                         make_record("CVE-2020-0003", "CWE-476")});
    auto samples = to_samples(m);
    REQUIRE(samples.size() == 6);
    for (std::size_t i = 0; i < samples.size(); i += 2) {
      CHECK(samples[i].cve_id == samples[i + 1].cve_id);
      CHECK(samples[i].ground_truth != samples[i + 1].ground_truth);
      const auto* rec = m.find(samples[i].cve_id);
      CHECK(samples[i].code == rec->vulnerable_code);
      CHECK(samples[i + 1].code == rec->patched_code);
      CHECK(samples[i].gt_reason.find(rec->description) != std::string::npos);
    }
  }

  TEST_CASE("reference reasoning mentions flaw location when known") {
    auto r = make_record("CVE-2020-0001", "CWE-787");
    CHECK(reference_reasoning(r, SampleKind::kVulnerable).find("Flaw location") == std::string::npos);
    r.flaw_locations = {{3, 4}};
    auto text = reference_reasoning(r, SampleKind::kVulnerable);
    CHECK(text.find("CWE-787") != std::string::npos);
    CHECK(text.find("lines 3-4") != std::string::npos);
  }

  TEST_CASE("serialize then parse is the identity") {
    auto a = make_record("CVE-2021-0001", "CWE-787");
    a.flaw_locations = {{2, 3}, {7, 7}};
    a.description = "Quotes \" and unicode \xc3\xa9 survive.";
    auto b = make_record("CVE-2021-0002", "CWE-190");
    b.commit_hash = "";
    auto m = testsupport::make_manifest({a, b});
    auto back = parse_manifest(serialize_manifest(m), "test");
    CHECK(back.records == m.records);
    CHECK(serialize_manifest(back) == serialize_manifest(m));

    auto t = table1_manifest();
    CHECK(parse_manifest(serialize_manifest(t), "x").records == t.records);
  }

  TEST_CASE("cvefixes import") {
    auto row = [](const std::string& cve, const std::string& cwe, const std::string& repo) {
      return R"({"cve_id":")" + cve + R"(","cwe_id":")" + cwe + R"(","repo_name":")" + repo +
             R"(","programming_language":"C","description":"d","code_before":"a();","code_after":"b();","msg":"m","hash":"h"})" +
             "\n";
    };
    std::string export_text = std::string(R"({"format":"cvefixes-export","version":1})") + "\n" +
                              row("CVE-2022-0001", "CWE-787", "gpac") + row("CVE-2022-0002", "CWE-476", "linux") +
                              row("CVE-2022-0003", "CWE-787", "libtiff");
    auto all = parse_cvefixes(export_text);
    REQUIRE(all.size() == 3);
    CHECK(all[0].mitre_rank == 1);
    CHECK(all[1].mitre_rank == 12);

    ImportFilter only787;
    only787.cwe_ids = {"CWE-787"};
    auto filtered = parse_cvefixes(export_text, only787);
    REQUIRE(filtered.size() == 2);
    for (const auto& r : filtered) CHECK(r.cwe_id == "CWE-787");

    ImportFilter linux_only;
    linux_only.projects = {"linux"};
    CHECK(parse_cvefixes(export_text, linux_only).size() == 1);

    std::string v0 = std::string(R"({"format":"cvefixes-export","version":"v0"})") + "\n" + row("CVE-2022-0001", "CWE-787", "gpac");
    CHECK_RV_THROWS(parse_cvefixes(v0), ErrorCode::kUnsupportedVersion);

    std::string unknown_rank = std::string(R"({"format":"cvefixes-export","version":1})") + "\n" +
                               row("CVE-2022-0009", "CWE-20", "gpac");
    CHECK_RV_THROWS(parse_cvefixes(unknown_rank), ErrorCode::kMalformedRecord);
  }

  TEST_CASE("load from a file") {
    testsupport::TempDir dir("corpus");
    auto m = testsupport::make_manifest({make_record("CVE-2021-0001", "CWE-787")});
    text::write_file(dir / "c.jsonl", serialize_manifest(m));
    auto back = load_manifest(dir / "c.jsonl");
    CHECK(back.records == m.records);
    CHECK_RV_THROWS(load_manifest(dir / "missing.jsonl"), ErrorCode::kIoError);
  }
}
