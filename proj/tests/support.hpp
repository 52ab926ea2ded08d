#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "realvul/corpus.hpp"
#include "realvul/error.hpp"
#include "realvul/harness.hpp"
#include "realvul/http.hpp"

// Checks that `expr` throws realvul::Error with the given code.
#define CHECK_RV_THROWS(expr, ecode)                                   \
  do {                                                                 \
    bool rv_thrown_ = false;                                           \
    try {                                                              \
      (void)(expr);                                                    \
    } catch (const realvul::Error& rv_e_) {                            \
      rv_thrown_ = true;                                               \
      CHECK_MESSAGE(rv_e_.code() == (ecode), rv_e_.what());            \
    }                                                                  \
    CHECK_MESSAGE(rv_thrown_, "expected " #ecode " from " #expr);      \
  } while (0)

namespace testsupport {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("realvul-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline realvul::corpus::CveRecord make_record(const std::string& cve, const std::string& cwe,
                                              const std::string& project = "demo") {
  realvul::corpus::CveRecord r;
  r.cve_id = cve;
  r.cwe_id = cwe;
  r.mitre_rank = 1;
  r.project = project;
  r.language = "C";
  r.description = "Description of " + cve + " in " + project + ".";
  r.vulnerable_code = "int f_" + project + "(char *p)\n{\n    return p[0];\n}\n";
  r.patched_code = "int f_" + project + "(char *p)\n{\n    return p ? p[0] : 0;\n}\n";
  r.commit_message = "fix " + cve;
  r.commit_hash = "abc";
  return r;
}

inline realvul::corpus::CorpusManifest make_manifest(const std::vector<realvul::corpus::CveRecord>& records) {
  realvul::corpus::CorpusManifest m;
  m.records = records;
  m.source_tag = "test";
  return m;
}

// Result carrying only what the report layer reads.
inline realvul::harness::RunResult synthetic_result(const std::string& model, realvul::promptkit::Strategy strategy,
                                                    realvul::promptkit::Setting setting, const std::string& cve,
                                                    realvul::evaluator::Outcome outcome, double sm = 0.5,
                                                    int serial = 0) {
  realvul::harness::RunResult r;
  r.model = model;
  r.strategy = strategy;
  r.setting = setting;
  r.cve_id = cve;
  r.repeat = serial;
  r.cell_id = realvul::harness::cell_id(model, strategy, setting, cve, r.kind, serial);
  realvul::evaluator::Evaluation e;
  e.outcome = outcome;
  e.acc = outcome == realvul::evaluator::Outcome::kIcpIcr ? 0 : 1;
  e.aligned = outcome == realvul::evaluator::Outcome::kCpCr;
  e.sm = sm;
  r.evaluation = e;
  return r;
}

// Transport that counts requests and answers with a fixed reply.
class CountingTransport final : public realvul::http::Transport {
 public:
  explicit CountingTransport(realvul::http::Reply reply = {200, "{}", ""}) : reply_(std::move(reply)) {}
  realvul::http::Reply post(const realvul::http::Request& request) override {
    ++calls;
    last = request;
    if (!script.empty()) {
      auto r = script.front();
      script.erase(script.begin());
      return r;
    }
    return reply_;
  }
  std::atomic<int> calls{0};
  realvul::http::Request last;
  std::vector<realvul::http::Reply> script;

 private:
  realvul::http::Reply reply_;
};

}  // namespace testsupport
