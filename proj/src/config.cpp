#include "realvul/config.hpp"

#include <nlohmann/json.hpp>

#include "realvul/error.hpp"
#include "realvul/text.hpp"

namespace realvul::config {

using json = nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    invalid(std::string("field '") + key + "' has the wrong type");
  }
}

chunker::ChunkParams parse_chunk_params(const json& j, chunker::ChunkParams p) {
  p.breakpoint_percentile = get_or(j, "breakpoint_percentile", p.breakpoint_percentile);
  p.max_chunk_tokens = get_or(j, "max_chunk_tokens", p.max_chunk_tokens);
  p.min_units_per_chunk = get_or(j, "min_units_per_chunk", p.min_units_per_chunk);
  return p;
}

json chunk_params_json(const chunker::ChunkParams& p) {
  return {{"breakpoint_percentile", p.breakpoint_percentile},
          {"max_chunk_tokens", p.max_chunk_tokens},
          {"min_units_per_chunk", p.min_units_per_chunk}};
}

llm::ModelProfile parse_model(const json& j, Mode mode) {
  if (j.is_string()) {
    auto name = j.get<std::string>();
    auto profile = llm::find_profile(name);
    if (!profile) {
      if (name == demo_model().name) return demo_model();
      invalid("unknown model '" + name + "'");
    }
    if (mode == Mode::kOffline) profile->provider = llm::Provider::kReplay;
    return *profile;
  }
  if (!j.is_object()) invalid("model entries must be names or objects");
  llm::ModelProfile p;
  p.name = get_or<std::string>(j, "name", "");
  if (p.name.empty()) invalid("model object without a name");
  if (auto base = llm::find_profile(p.name)) p = *base;
  if (j.contains("provider")) {
    auto provider = llm::parse_provider(get_or<std::string>(j, "provider", ""));
    if (!provider) invalid("unknown provider for model '" + p.name + "'");
    p.provider = *provider;
  }
  p.context_window = get_or(j, "context_window", p.context_window);
  p.endpoint = get_or(j, "endpoint", p.endpoint);
  p.temperature = get_or(j, "temperature", p.temperature);
  p.max_output_tokens = get_or(j, "max_output_tokens", p.max_output_tokens);
  p.api_model = get_or(j, "api_model", p.api_model);
  p.api_key_env = get_or(j, "api_key_env", p.api_key_env);
  return p;
}

json model_json(const llm::ModelProfile& p) {
  return {{"name", p.name},
          {"provider", llm::to_string(p.provider)},
          {"context_window", p.context_window},
          {"endpoint", p.endpoint},
          {"temperature", p.temperature},
          {"max_output_tokens", p.max_output_tokens},
          {"api_model", p.api_model},
          {"api_key_env", p.api_key_env}};
}

}  // namespace

llm::ModelProfile demo_model() {
  llm::ModelProfile p;
  p.name = "demo-model";
  p.provider = llm::Provider::kReplay;
  p.context_window = 8192;
  p.max_output_tokens = 512;
  return p;
}

void Config::validate() const {
  weights.validate();
  if (alignment_threshold < 0.0 || alignment_threshold > 1.0) invalid("alignment_threshold must lie in [0, 1]");
  if (models.empty()) invalid("config lists no models");
  if (workers < 1) invalid("workers must be >= 1");
  if (axes.repeats < 1) invalid("repeats must be >= 1");
  if (axes.retrieval_k < 1) invalid("retrieval_k must be >= 1");
  if (embedder.kind != "mock" && embedder.kind != "http") invalid("embedder kind must be 'mock' or 'http'");
  if (mode == Mode::kOffline) {
    for (const auto& m : models) {
      if (m.provider != llm::Provider::kReplay) {
        invalid("offline mode forbids live profile '" + m.name + "' (" + std::string(llm::to_string(m.provider)) +
                ")");
      }
    }
    if (judge && judge->provider != llm::Provider::kReplay) invalid("offline mode forbids live judge '" + judge->name + "'");
    if (embedder.kind == "http") invalid("offline mode forbids the http embedder");
  }
}

Config parse_config(std::string_view json_text, std::optional<Mode> mode_override) {
  json j = json::parse(json_text, nullptr, false, true);
  if (j.is_discarded() || !j.is_object()) invalid("config is not a JSON object");

  Config c;
  auto mode = get_or<std::string>(j, "mode", "offline");
  if (mode == "offline") {
    c.mode = Mode::kOffline;
  } else if (mode == "live") {
    c.mode = Mode::kLive;
  } else {
    invalid("mode must be 'offline' or 'live'");
  }
  if (mode_override) c.mode = *mode_override;
  c.corpus = get_or(j, "corpus", c.corpus);
  c.lenient = get_or(j, "lenient", c.lenient);

  if (auto it = j.find("embedder"); it != j.end()) {
    c.embedder.kind = get_or(*it, "kind", c.embedder.kind);
    c.embedder.profile.name = get_or(*it, "name", c.embedder.profile.name);
    c.embedder.profile.dimension = get_or(*it, "dimension", c.embedder.profile.dimension);
    c.embedder.profile.max_tokens = get_or(*it, "max_tokens", c.embedder.profile.max_tokens);
    c.embedder.http.endpoint = get_or(*it, "endpoint", c.embedder.http.endpoint);
    c.embedder.http.model = get_or(*it, "model", c.embedder.http.model);
    c.embedder.http.api_key_env = get_or(*it, "api_key_env", c.embedder.http.api_key_env);
    c.embedder.http.batch_size = get_or(*it, "batch_size", c.embedder.http.batch_size);
  }
  if (auto it = j.find("chunking"); it != j.end()) {
    if (auto p = it->find("prose"); p != it->end()) c.chunking.prose = parse_chunk_params(*p, c.chunking.prose);
    if (auto p = it->find("code"); p != it->end()) c.chunking.code = parse_chunk_params(*p, c.chunking.code);
  }
  c.store = get_or<std::string>(j, "store", c.store.string());

  if (auto it = j.find("models"); it != j.end()) {
    if (!it->is_array()) invalid("models must be an array");
    for (const auto& m : *it) c.models.push_back(parse_model(m, c.mode));
  }
  if (auto it = j.find("judge"); it != j.end() && !it->is_null()) c.judge = parse_model(*it, c.mode);

  if (auto it = j.find("weights"); it != j.end()) {
    c.weights.accuracy = get_or(*it, "accuracy", c.weights.accuracy);
    c.weights.similarity = get_or(*it, "similarity", c.weights.similarity);
    c.weights.partial = get_or(*it, "partial", c.weights.partial);
  }
  c.alignment_threshold = get_or(j, "alignment_threshold", c.alignment_threshold);

  if (auto it = j.find("axes"); it != j.end()) {
    if (auto s = it->find("strategies"); s != it->end()) {
      c.axes.strategies.clear();
      for (const auto& v : *s) {
        auto st = promptkit::parse_strategy(v.get<std::string>());
        if (!st) invalid("unknown strategy '" + v.get<std::string>() + "'");
        c.axes.strategies.push_back(*st);
      }
    }
    if (auto s = it->find("settings"); s != it->end()) {
      c.axes.settings.clear();
      for (const auto& v : *s) {
        auto st = promptkit::parse_setting(v.get<std::string>());
        if (!st) invalid("unknown setting '" + v.get<std::string>() + "'");
        c.axes.settings.push_back(*st);
      }
    }
    c.axes.cves = get_or(*it, "cves", c.axes.cves);
    c.axes.repeats = get_or(*it, "repeats", c.axes.repeats);
    c.axes.retrieval_k = get_or(*it, "retrieval_k", c.axes.retrieval_k);
  }
  c.replay_fixture = get_or(j, "replay_fixture", c.replay_fixture);
  c.record_live = get_or(j, "record_live", c.record_live);
  c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir.string());
  c.workers = get_or(j, "workers", c.workers);
  c.context_budget = get_or(j, "context_budget", c.context_budget);
  c.max_retries = get_or(j, "max_retries", c.max_retries);
  c.max_in_flight = get_or(j, "max_in_flight", c.max_in_flight);
  c.validate();
  return c;
}

Config load_config(const std::filesystem::path& path, std::optional<Mode> mode) {
  return parse_config(text::read_file(path), mode);
}

std::string to_json(const Config& c) {
  json j;
  j["mode"] = c.mode == Mode::kOffline ? "offline" : "live";
  j["corpus"] = c.corpus;
  j["lenient"] = c.lenient;
  j["embedder"] = {{"kind", c.embedder.kind},
                   {"name", c.embedder.profile.name},
                   {"dimension", c.embedder.profile.dimension},
                   {"max_tokens", c.embedder.profile.max_tokens}};
  if (c.embedder.kind == "http") {
    j["embedder"]["endpoint"] = c.embedder.http.endpoint;
    j["embedder"]["model"] = c.embedder.http.model;
    j["embedder"]["api_key_env"] = c.embedder.http.api_key_env;
    j["embedder"]["batch_size"] = c.embedder.http.batch_size;
  }
  j["chunking"] = {{"prose", chunk_params_json(c.chunking.prose)}, {"code", chunk_params_json(c.chunking.code)}};
  j["store"] = c.store.string();
  j["models"] = json::array();
  for (const auto& m : c.models) j["models"].push_back(model_json(m));
  j["judge"] = c.judge ? model_json(*c.judge) : json(nullptr);
  j["weights"] = {{"accuracy", c.weights.accuracy}, {"similarity", c.weights.similarity}, {"partial", c.weights.partial}};
  j["alignment_threshold"] = c.alignment_threshold;
  json axes;
  axes["strategies"] = json::array();
  for (auto s : c.axes.strategies) axes["strategies"].push_back(promptkit::to_string(s));
  axes["settings"] = json::array();
  for (auto s : c.axes.settings) axes["settings"].push_back(promptkit::to_string(s));
  axes["cves"] = c.axes.cves;
  axes["repeats"] = c.axes.repeats;
  axes["retrieval_k"] = c.axes.retrieval_k;
  j["axes"] = axes;
  j["replay_fixture"] = c.replay_fixture;
  j["record_live"] = c.record_live;
  j["output_dir"] = c.output_dir.string();
  j["workers"] = c.workers;
  j["context_budget"] = c.context_budget;
  j["max_retries"] = c.max_retries;
  j["max_in_flight"] = c.max_in_flight;
  return j.dump(2) + "\n";
}

Config demo_config(const std::filesystem::path& output_dir) {
  Config c;
  c.corpus = "builtin:demo";
  c.replay_fixture = "builtin:demo/replay.jsonl";
  c.models = {demo_model()};
  c.output_dir = output_dir;
  c.store = output_dir / "store.rvidx";
  return c;
}

}  // namespace realvul::config
