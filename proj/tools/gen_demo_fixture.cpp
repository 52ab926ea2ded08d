// Writes the replay fixture for the offline demo: one synthetic answer per
// distinct request of the demo plan.
#include <cstdio>
#include <iostream>
#include <string>

#include "realvul/cli.hpp"
#include "realvul/cwe.hpp"
#include "realvul/text.hpp"

using namespace realvul;

namespace {

enum class Flavor { kSound, kRightButVague, kWrong };

Flavor pick(const corpus::Sample& s, promptkit::Strategy strategy, promptkit::Setting setting) {
  std::string key = s.cve_id + "/" + std::string(corpus::to_string(s.kind)) + "/" +
                    std::string(promptkit::to_string(strategy)) + "/" + std::string(promptkit::to_string(setting));
  auto roll = text::fnv1a64(key) % 10;
  // Retrieved context helps: FS answers are sound more often.
  auto sound = setting == promptkit::Setting::kFewShot ? 6u : 4u;
  if (roll < sound) return Flavor::kSound;
  if (roll < 8) return Flavor::kRightButVague;
  return Flavor::kWrong;
}

std::string first_line(const corpus::CveRecord& r) {
  return r.flaw_locations.empty() ? std::string("1") : std::to_string(r.flaw_locations.front().first);
}

std::string verdict(const corpus::CveRecord& r, const corpus::Sample& s, Flavor f) {
  bool vulnerable = s.kind == corpus::SampleKind::kVulnerable;
  bool says_yes = f == Flavor::kWrong ? !vulnerable : vulnerable;
  std::string out = std::string("Prediction: ") + (says_yes ? "Yes" : "No") + "\nReason: ";
  if (f == Flavor::kSound && vulnerable) {
    out += r.description + " (" + r.cwe_id + ")\nLocation: line " + first_line(r);
  } else if (f == Flavor::kSound) {
    out += "This is the patched version in which the " + r.cwe_id + " weakness is fixed. " + r.description;
  } else if (says_yes) {
    out += "The function does not log failures, so errors may go unnoticed by callers.";
  } else {
    out += "The code looks straightforward and every operation appears safe.";
  }
  return out;
}

std::string answer(const corpus::CveRecord& r, const corpus::Sample& s, promptkit::Strategy strategy, Flavor f) {
  std::string v = verdict(r, s, f);
  switch (strategy) {
    case promptkit::Strategy::kStandard:
      return v;
    case promptkit::Strategy::kChainOfThought:
      return "Let me walk through the function line by line, checking every buffer, pointer and size "
             "computation.\n\n" + v;
    case promptkit::Strategy::kDecomposition:
      return "Step 1: The function handles " + std::string(cwe::name_of(r.cwe_id)) +
             "-prone data for " + r.project + ".\nStep 2: see the final answer.\nStep 3: see the final answer.\n\n" + v;
    case promptkit::Strategy::kPlanAndSolve:
      return "Plan: 1) read the inputs 2) track sizes and pointers 3) decide.\n\n**" + v.substr(0, v.find('\n')) +
             "**" + v.substr(v.find('\n'));
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gen_demo_fixture <output.jsonl>\n";
    return 64;
  }
  auto cfg = config::demo_config("gen_demo_fixture.tmp");
  cfg.replay_fixture.clear();
  auto p = cli::make_pipeline(cfg);
  vectorstore::VectorStore store(p.embedder->profile().dimension);
  harness::ingest(p.corpus, *p.embedder, cfg.chunking, store);
  auto plan = cli::make_plan(p);
  harness::Resources res{&p.corpus, &store, p.embedder.get(), p.gateway.get(), p.evaluator.get()};

  std::remove(argv[1]);
  llm::ReplayFixture fixture{std::filesystem::path(argv[1])};
  for (const auto& cell : plan.cells) {
    const auto& sample = plan.samples[cell.sample_index];
    const auto* record = p.corpus.find(sample.cve_id);
    auto prompt = harness::build_prompt(plan, cell, res, cfg.context_budget);
    const auto& profile = plan.models.front();
    auto text = answer(*record, sample, cell.strategy, pick(sample, cell.strategy, cell.setting));
    fixture.record({llm::request_hash(profile, prompt.system_text, prompt.user_text), profile.name, text,
                    static_cast<std::int64_t>(200 + text.size()), llm::FinishReason::kStop});
  }
  std::cout << fixture.size() << " entries for " << plan.cells.size() << " cells\n";
  return 0;
}
