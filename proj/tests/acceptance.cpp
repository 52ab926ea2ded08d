// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any of them fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "realvul/chunker.hpp"
#include "realvul/cli.hpp"
#include "realvul/corpus.hpp"
#include "realvul/error.hpp"
#include "realvul/evaluator.hpp"
#include "realvul/harness.hpp"
#include "realvul/http.hpp"
#include "realvul/promptkit.hpp"
#include "realvul/report.hpp"
#include "realvul/text.hpp"
#include "realvul/vectorstore.hpp"

using namespace realvul;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string why;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      why = what;
    }
  }
};

fs::path scratch(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("realvul-accept-" + tag + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class NoNetwork final : public http::Transport {
 public:
  http::Reply post(const http::Request&) override {
    ++calls;
    return {599, "", "network disabled"};
  }
  int calls = 0;
};

llm::ModelProfile replay_model(const std::string& name) {
  llm::ModelProfile p;
  p.name = name;
  p.provider = llm::Provider::kReplay;
  p.context_window = 16384;
  p.max_output_tokens = 256;
  return p;
}

// 1
Check sm_exactness() {
  Check c;
  c.expect(std::abs(evaluator::score(1, 0.2, 0.3) - 0.69) <= 1e-9, "score(1,0.2,0.3)");
  c.expect(std::abs(evaluator::score(1, 0.85, 0.85) - 0.94) <= 1e-9, "score(1,0.85,0.85)");
  c.expect(std::abs(evaluator::score(0, 0, 0) - 0.0) <= 1e-9, "score(0,0,0)");
  c.expect(std::abs(evaluator::score(1, 1, 1) - 1.0) <= 1e-9, "score(1,1,1)");
  return c;
}

// 2
Check sm_properties() {
  Check c;
  std::mt19937_64 rng(20250101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000 && c.ok; ++i) {
    int acc = static_cast<int>(rng() % 2);
    double cs = u(rng), pcs = u(rng);
    double sm = evaluator::score(acc, cs, pcs);
    c.expect(sm >= 0.0 && sm <= 1.0, "bounds");
    c.expect(acc == 0 || sm >= 0.6, "acc=1 separation");
    c.expect(acc == 1 || sm <= 0.4 + 1e-12, "acc=0 separation");
    double cs2 = cs + u(rng) * (1.0 - cs), pcs2 = pcs + u(rng) * (1.0 - pcs);
    c.expect(evaluator::score(acc, cs2, pcs) >= sm, "monotone in cs");
    c.expect(evaluator::score(acc, cs, pcs2) >= sm, "monotone in pcs");
    c.expect(evaluator::score(1, cs, pcs) >= evaluator::score(0, cs, pcs), "monotone in acc");
  }
  return c;
}

// 3
Check corpus_fixture() {
  Check c;
  auto m = corpus::table1_manifest();
  c.expect(m.records.size() == 15, "15 records");
  auto dist = corpus::cwe_distribution(m);
  std::map<std::string, std::size_t> want{{"CWE-787", 6}, {"CWE-416", 1}, {"CWE-476", 4}, {"CWE-190", 4}};
  c.expect(dist == want, "cwe distribution");
  c.expect(corpus::to_samples(m).size() == 30, "30 samples");
  return c;
}

// 4
Check search_oracle() {
  Check c;
  std::mt19937_64 rng(4242);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t dims[] = {8, 32, 64};
  const std::size_t ks[] = {1, 5, 20};
  for (int trial = 0; trial < 50 && c.ok; ++trial) {
    std::size_t dim = dims[trial % 3];
    std::size_t n = 1 + rng() % 500;
    vectorstore::VectorStore store(dim);
    std::vector<std::pair<std::uint64_t, std::vector<float>>> pts;
    std::vector<std::string> cves;
    for (std::size_t i = 0; i < n; ++i) {
      embedder::Vector v;
      for (std::size_t d = 0; d < dim; ++d) v.values.push_back(trial % 5 == 0 ? std::round(g(rng)) : g(rng));
      if (std::all_of(v.values.begin(), v.values.end(), [](double x) { return x == 0.0; })) v.values[0] = 1.0;
      std::string cve = "CVE-" + std::to_string(rng() % 10);
      auto id = store.upsert(v, {cve, "CWE-787", "p", "C", vectorstore::FieldKind::kDescription, 0, cve});
      pts.emplace_back(id, std::vector<float>(v.values.begin(), v.values.end()));
      cves.push_back(cve);
    }
    auto reloaded = vectorstore::VectorStore::deserialize(store.serialize());
    for (std::size_t k : ks) {
      std::vector<double> q;
      for (std::size_t d = 0; d < dim; ++d) q.push_back(g(rng));
      embedder::Vector qv{q};
      std::string excluded = "CVE-" + std::to_string(rng() % 10);
      std::vector<bool> admitted;
      for (const auto& cv : cves) admitted.push_back(cv != excluded);

      for (bool filtered : {false, true}) {
        auto hits = filtered ? store.search(qv, k, vectorstore::exclude_filter(excluded)) : store.search(qv, k);
        auto hits2 = filtered ? reloaded.search(qv, k, vectorstore::exclude_filter(excluded)) : reloaded.search(qv, k);
        auto want = oracle::top_k(pts, q, k, filtered ? admitted : std::vector<bool>{});
        std::vector<std::uint64_t> got;
        for (const auto& h : hits) got.push_back(h.point_id);
        c.expect(got == want, "ids/order vs oracle (trial " + std::to_string(trial) + ")");
        c.expect(hits.size() == hits2.size(), "round trip size");
        for (std::size_t i = 0; i < hits.size() && i < hits2.size(); ++i) {
          c.expect(hits[i].point_id == hits2[i].point_id && hits[i].score == hits2[i].score &&
                       hits[i].payload == hits2[i].payload,
                   "round trip bit-exact");
        }
      }
    }
  }
  return c;
}

std::string random_doc(std::mt19937& rng, bool code) {
  static const char* words[] = {"alloc", "free", "buffer", "index", "len",   "ptr",   "check", "bound", "copy",
                                "node",  "list", "lock",   "ref",   "count", "size",  "width", "row",   "header"};
  static const char* ends[] = {".", "!", "?", ";", ""};
  std::string doc;
  int units = 1 + static_cast<int>(rng() % 30);
  for (int u = 0; u < units; ++u) {
    int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      if (i > 0) doc += (rng() % 9 == 0) ? "  " : (rng() % 13 == 0 ? "\t" : " ");
      doc += words[rng() % std::size(words)];
    }
    doc += ends[rng() % std::size(ends)];
    if (u + 1 < units) doc += code ? (rng() % 2 ? "\n\n" : "\n") : (rng() % 3 ? " " : "\n");
  }
  if (rng() % 4 == 0) doc += "\n";
  return doc;
}

// 5
Check chunker_properties() {
  Check c;
  embedder::MockEmbedder emb;
  std::mt19937 rng(1000);
  for (int t = 0; t < 1000 && c.ok; ++t) {
    bool code = t % 2 == 1;
    auto doc = random_doc(rng, code);
    chunker::ChunkParams params;
    params.unit_mode = code ? chunker::UnitMode::kCodeBlock : chunker::UnitMode::kSentence;
    params.max_chunk_tokens = 1 + rng() % 64;
    params.min_units_per_chunk = 1 + rng() % 3;
    params.breakpoint_percentile = 50 + static_cast<double>(rng() % 51);
    auto a = chunker::chunk(doc, params, emb, "d");
    c.expect(chunker::join_chunks(a) == doc, "lossless (doc " + std::to_string(t) + ")");
    for (const auto& ch : a) c.expect(text::count_tokens(ch.text) <= params.max_chunk_tokens, "budget");
    c.expect(chunker::chunk(doc, params, emb, "d") == a, "deterministic");
  }
  // Breakpoints agree with the independent oracle and shrink as p grows.
  for (int t = 0; t < 50 && c.ok; ++t) {
    auto split = chunker::split_units(random_doc(rng, false), chunker::UnitMode::kSentence);
    std::size_t prev = SIZE_MAX;
    for (double p : {50.0, 75.0, 90.0, 95.0, 100.0}) {
      chunker::ChunkParams params;
      params.breakpoint_percentile = p;
      auto got = chunker::semantic_breakpoints(split, params, emb);
      c.expect(got == oracle::breakpoints(split.units, p, emb.profile().dimension), "breakpoints vs oracle");
      c.expect(got.size() <= prev, "percentile monotonicity");
      prev = got.size();
    }
  }
  return c;
}

// 6
Check prompt_conformance() {
  Check c;
  auto samples = corpus::to_samples(corpus::table1_manifest());
  const auto& target = samples.front();
  auto ctx = promptkit::context_from_record(*corpus::table1_manifest().find(samples[2].cve_id));
  for (auto strategy : promptkit::kAllStrategies) {
    for (auto setting : promptkit::kAllSettings) {
      auto p = setting == promptkit::Setting::kFewShot ? promptkit::render(strategy, setting, target, ctx)
                                                       : promptkit::render(strategy, setting, target);
      std::string all = p.system_text + "\n" + p.user_text;
      for (auto m : promptkit::kContextMarkers) {
        bool has = all.find(m) != std::string::npos;
        c.expect(has == (setting == promptkit::Setting::kFewShot),
                 std::string(promptkit::label(strategy)) + " marker " + std::string(m));
      }
      bool cot = all.find("Let's think step by step") != std::string::npos;
      c.expect(cot == (strategy == promptkit::Strategy::kChainOfThought), "CoT trigger");
      if (strategy == promptkit::Strategy::kDecomposition) {
        auto s1 = all.find("Step 1:"), s2 = all.find("Step 2:"), s3 = all.find("Step 3:");
        c.expect(s1 != std::string::npos && s2 != std::string::npos && s3 != std::string::npos && s1 < s2 && s2 < s3,
                 "decomposition skeleton");
      }
    }
  }
  return c;
}

// 7
Check leakage_guard() {
  Check c;
  embedder::MockEmbedder emb;
  std::mt19937 rng(7);
  auto table = corpus::table1_manifest();
  for (int trial = 0; trial < 25 && c.ok; ++trial) {
    corpus::CorpusManifest m;
    std::vector<corpus::CveRecord> pool = table.records;
    std::shuffle(pool.begin(), pool.end(), rng);
    m.records.assign(pool.begin(), pool.begin() + 2 + static_cast<long>(rng() % 6));
    vectorstore::VectorStore store(emb.profile().dimension);
    harness::ingest(m, emb, harness::default_ingest_params(), store);
    harness::PlanConfig pc;
    pc.models = {replay_model("m")};
    pc.strategies = {promptkit::kAllStrategies[rng() % 4]};
    pc.settings = {promptkit::Setting::kFewShot};
    pc.samples = corpus::to_samples(m);
    pc.repeats = 1;
    pc.retrieval_k = 1 + rng() % 5;
    auto plan = harness::plan_matrix(pc);
    harness::Resources res{&m, &store, &emb, nullptr, nullptr};
    for (const auto& cell : plan.cells) {
      auto p = harness::build_prompt(plan, cell, res, 2048);
      c.expect(p.context_ref && *p.context_ref != cell.cve_id, "context shares the target cve");
      const auto* rec = m.find(cell.cve_id);
      const auto& sibling = cell.kind == corpus::SampleKind::kVulnerable ? rec->patched_code : rec->vulnerable_code;
      c.expect(p.user_text.find(sibling) == std::string::npos && p.system_text.find(sibling) == std::string::npos,
               "the other version of the target leaked into the prompt");
    }
  }
  corpus::CorpusManifest only;
  only.records = {table.records.front()};
  vectorstore::VectorStore store(emb.profile().dimension);
  harness::ingest(only, emb, harness::default_ingest_params(), store);
  harness::PlanConfig pc;
  pc.models = {replay_model("m")};
  pc.strategies = {promptkit::Strategy::kStandard};
  pc.settings = {promptkit::Setting::kFewShot};
  pc.samples = corpus::to_samples(only);
  pc.repeats = 1;
  auto plan = harness::plan_matrix(pc);
  harness::Resources res{&only, &store, &emb, nullptr, nullptr};
  bool raised = false;
  try {
    harness::build_prompt(plan, plan.cells.front(), res, 2048);
  } catch (const Error& e) {
    raised = e.code() == ErrorCode::kNoContextAvailable;
  }
  c.expect(raised, "store holding only the target must raise NoContextAvailable");
  return c;
}

// 8
Check demo_determinism() {
  Check c;
  auto a = scratch("demo-a"), b = scratch("demo-b");
  std::ostringstream sink;
  auto net_a = std::make_shared<NoNetwork>();
  auto net_b = std::make_shared<NoNetwork>();
  auto ra = cli::run_demo(a, sink, net_a);
  auto rb = cli::run_demo(b, sink, net_b);
  c.expect(ra.summary.errors == 0 && rb.summary.errors == 0, "demo cells failed");
  c.expect(ra.network_requests == 0 && rb.network_requests == 0 && net_a->calls == 0 && net_b->calls == 0,
           "network activity");

  auto log = harness::read_log(ra.log_path);
  std::set<std::string> cves, models;
  std::set<int> strategies, settings, kinds;
  for (const auto& r : log.results) {
    cves.insert(r.cve_id);
    models.insert(r.model);
    strategies.insert(static_cast<int>(r.strategy));
    settings.insert(static_cast<int>(r.setting));
    kinds.insert(static_cast<int>(r.kind));
  }
  c.expect(cves.size() >= 3 && kinds.size() == 2 && settings.size() == 2 && strategies.size() >= 2 &&
               models.size() >= 1,
           "demo matrix too small");

  c.expect(ra.report_files.size() == 8 && rb.report_files.size() == 8, "report file count");
  for (std::size_t i = 0; i < ra.report_files.size() && i < rb.report_files.size(); ++i) {
    c.expect(ra.report_files[i].filename() == rb.report_files[i].filename(), "report file names");
    c.expect(slurp(ra.report_files[i]) == slurp(rb.report_files[i]),
             "report differs: " + ra.report_files[i].filename().string());
  }
  fs::remove_all(a);
  fs::remove_all(b);
  return c;
}

harness::RunResult fake(const std::string& model, promptkit::Strategy s, promptkit::Setting st,
                        evaluator::Outcome o, int serial) {
  harness::RunResult r;
  r.model = model;
  r.strategy = s;
  r.setting = st;
  r.cve_id = "CVE-2023-" + std::to_string(1000 + serial % 15);
  r.repeat = serial;
  r.cell_id = harness::cell_id(model, s, st, r.cve_id, r.kind, serial);
  evaluator::Evaluation e;
  e.outcome = o;
  e.acc = o == evaluator::Outcome::kIcpIcr ? 0 : 1;
  e.aligned = o == evaluator::Outcome::kCpCr;
  e.sm = evaluator::score(e.acc, e.aligned ? 0.9 : 0.2, 0.5);
  r.evaluation = e;
  return r;
}

// 9
Check report_fixtures() {
  Check c;
  harness::ResultLog log;
  int serial = 0;
  auto add = [&](const std::string& m, promptkit::Strategy s, promptkit::Setting st, evaluator::Outcome o, int n) {
    for (int i = 0; i < n; ++i) log.results.push_back(fake(m, s, st, o, serial++));
  };
  using promptkit::Setting;
  using promptkit::Strategy;
  using evaluator::Outcome;
  add("phi-4", Strategy::kStandard, Setting::kFewShot, Outcome::kCpCr, 25);
  add("phi-4", Strategy::kStandard, Setting::kFewShot, Outcome::kCpIcr, 22);
  add("phi-4", Strategy::kStandard, Setting::kFewShot, Outcome::kIcpIcr, 33);
  add("gpt-4", Strategy::kStandard, Setting::kZeroShot, Outcome::kCpCr, 9);
  add("gpt-4", Strategy::kChainOfThought, Setting::kFewShot, Outcome::kCpCr, 9);
  add("gpt-4", Strategy::kDecomposition, Setting::kZeroShot, Outcome::kCpCr, 9);
  add("gpt-4", Strategy::kPlanAndSolve, Setting::kFewShot, Outcome::kCpCr, 11);
  add("gpt-4", Strategy::kPlanAndSolve, Setting::kZeroShot, Outcome::kIcpIcr, 6);
  log.header = {"fixture", "fixture", log.results.size()};

  auto b = report::outcome_breakdown(log);
  const auto* row = b.find("phi-4", Setting::kFewShot);
  c.expect(row && row->cp_cr == 25 && row->cp_icr == 22 && row->icp_icr == 33, "Phi-4 FS counts");
  if (row) {
    c.expect(report::format_percent(row->cp_cr, row->total) == "31.3", "31.3%");
    c.expect(report::format_percent(row->cp_icr, row->total) == "27.5", "27.5%");
    c.expect(report::format_percent(row->icp_icr, row->total) == "41.3", "41.3%");
  }
  c.expect(report::breakdown_csv(b).find("phi-4,FS,25,22,33,80,31.3,27.5,41.3\n") != std::string::npos,
           "breakdown table row");
  auto curves = report::prompt_curves(log);
  auto it = curves.counts.find("gpt-4");
  c.expect(it != curves.counts.end(), "GPT-4 curve present");
  if (it != curves.counts.end()) {
    const auto& g = it->second;
    c.expect(g.at(Strategy::kStandard) == 9 && g.at(Strategy::kChainOfThought) == 9 &&
                 g.at(Strategy::kDecomposition) == 9 && g.at(Strategy::kPlanAndSolve) == 11,
             "GPT-4 curve 9/9/9/11");
  }
  return c;
}

// 10
Check matrix_cardinality() {
  Check c;
  auto samples = corpus::to_samples(corpus::table1_manifest());
  harness::PlanConfig pc;
  pc.models = {replay_model("phi-4")};
  pc.strategies = {promptkit::Strategy::kStandard};
  pc.settings = {promptkit::Setting::kZeroShot, promptkit::Setting::kFewShot};
  pc.samples = samples;
  pc.repeats = 2;
  c.expect(harness::plan_matrix(pc).cells.size() == 120, "paper factors give 120 cells");

  std::mt19937 rng(10);
  for (int t = 0; t < 500 && c.ok; ++t) {
    harness::PlanConfig f;
    std::size_t nm = 1 + rng() % 4, ns = 1 + rng() % 4, nt = 1 + rng() % 2, nx = 1 + rng() % samples.size();
    for (std::size_t i = 0; i < nm; ++i) f.models.push_back(replay_model("model-" + std::to_string(i)));
    f.strategies.assign(std::begin(promptkit::kAllStrategies), std::begin(promptkit::kAllStrategies) + ns);
    f.settings.assign(std::begin(promptkit::kAllSettings), std::begin(promptkit::kAllSettings) + nt);
    f.samples.assign(samples.begin(), samples.begin() + static_cast<long>(nx));
    f.repeats = 1 + static_cast<int>(rng() % 4);
    auto plan = harness::plan_matrix(f);
    c.expect(plan.cells.size() == nm * ns * nt * nx * static_cast<std::size_t>(f.repeats), "fuzzed product");
  }
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "SM exactness", sm_exactness},
      {2, "SM monotonicity and bounds", sm_properties},
      {3, "corpus fixture fidelity", corpus_fixture},
      {4, "vector search oracle equivalence", search_oracle},
      {5, "chunker properties", chunker_properties},
      {6, "prompt conformance", prompt_conformance},
      {7, "leakage guard", leakage_guard},
      {8, "offline end-to-end determinism", demo_determinism},
      {9, "report fixture reproduction", report_fixtures},
      {10, "matrix cardinality", matrix_cardinality},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    auto start = std::chrono::steady_clock::now();
    Check result;
    try {
      result = cr.run();
    } catch (const std::exception& e) {
      result.ok = false;
      result.why = std::string("exception: ") + e.what();
    }
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    std::cout << (result.ok ? "PASS" : "FAIL") << " criterion " << cr.number << ": " << cr.name << " (" << ms << " ms)";
    if (!result.ok) std::cout << " - " << result.why;
    std::cout << "\n";
    failed += result.ok ? 0 : 1;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
