#include "realvul/llm_gateway.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "realvul/error.hpp"
#include "realvul/text.hpp"

namespace realvul::llm {

using json = nlohmann::json;

std::string_view to_string(Provider p) {
  switch (p) {
    case Provider::kOpenAiLike: return "openai_like";
    case Provider::kGoogleLike: return "google_like";
    case Provider::kLocalHttp: return "local_http";
    case Provider::kReplay: return "replay";
  }
  return "replay";
}

std::optional<Provider> parse_provider(std::string_view s) {
  for (auto p : {Provider::kOpenAiLike, Provider::kGoogleLike, Provider::kLocalHttp, Provider::kReplay}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

std::vector<ModelProfile> default_profiles() {
  const std::string openai = "https://api.openai.com/v1/chat/completions";
  const std::string gemini =
      "https://generativelanguage.googleapis.com/v1beta/models/gemini-1.5-flash-002:generateContent";
  const std::string local = "http://localhost:11434/v1/chat/completions";
  return {
      {"gpt-4", Provider::kOpenAiLike, 128000, openai, 0.0, 1024, "gpt-4", "OPENAI_API_KEY"},
      {"gemini-1.5-flash-002", Provider::kGoogleLike, 1000000, gemini, 0.0, 1024, "gemini-1.5-flash-002",
       "GOOGLE_API_KEY"},
      {"qwen2.5-coder-14b", Provider::kLocalHttp, 128000, local, 0.0, 1024, "qwen2.5-coder:14b", ""},
      {"llama-3-8b", Provider::kLocalHttp, 8192, local, 0.0, 1024, "llama3:8b", ""},
      {"phi-4", Provider::kLocalHttp, 128000, local, 0.0, 1024, "phi4", ""},
      {"gpt-4o-mini", Provider::kOpenAiLike, 128000, openai, 0.0, 512, "gpt-4o-mini", "OPENAI_API_KEY"},
  };
}

std::optional<ModelProfile> find_profile(std::string_view name) {
  for (auto& p : default_profiles()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

std::string_view to_string(FinishReason f) {
  switch (f) {
    case FinishReason::kStop: return "stop";
    case FinishReason::kLength: return "length";
    case FinishReason::kError: return "error";
  }
  return "error";
}

FinishReason parse_finish_reason(std::string_view s) {
  std::string l = text::to_lower(s);
  if (l == "stop" || l == "eos" || l == "end_turn") return FinishReason::kStop;
  if (l == "length" || l == "max_tokens") return FinishReason::kLength;
  return FinishReason::kError;
}

std::string request_hash(const ModelProfile& profile, std::string_view system_text, std::string_view user_text) {
  json key = json::array({profile.name, system_text, user_text, profile.temperature, profile.max_output_tokens});
  return text::sha256_hex(key.dump());
}

// ---------------------------------------------------------------------------
// Replay fixture

namespace {

FixtureEntry entry_from_json(const json& j) {
  FixtureEntry e;
  e.request_hash = j.at("request_hash").get<std::string>();
  e.model = j.value("model", "");
  e.text = j.at("text").get<std::string>();
  e.latency_ms = j.value("latency_ms", std::int64_t{0});
  e.finish_reason = parse_finish_reason(j.value("finish_reason", "stop"));
  return e;
}

std::string entry_line(const FixtureEntry& e) {
  json j{{"request_hash", e.request_hash},
         {"model", e.model},
         {"text", e.text},
         {"latency_ms", e.latency_ms},
         {"finish_reason", to_string(e.finish_reason)}};
  return j.dump() + "\n";
}

}  // namespace

ReplayFixture::ReplayFixture(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(*path_)) ingest(text::read_file(*path_));
}

std::shared_ptr<ReplayFixture> ReplayFixture::from_string(std::string_view contents) {
  auto f = std::make_shared<ReplayFixture>();
  f->ingest(contents);
  return f;
}

void ReplayFixture::ingest(std::string_view contents) {
  auto lines = text::split_lines(contents);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::is_blank(lines[i])) continue;
    json j = json::parse(lines[i], nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("request_hash") || !j.contains("text")) {
      throw Error(ErrorCode::kCorruptLog, "replay fixture line " + std::to_string(i + 1) + " is not a fixture record");
    }
    auto e = entry_from_json(j);
    if (entries_.emplace(e.request_hash, e).second) order_.push_back(e.request_hash);
  }
}

std::optional<FixtureEntry> ReplayFixture::lookup(std::string_view hash) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(hash);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool ReplayFixture::record(const FixtureEntry& entry) {
  std::lock_guard lock(mu_);
  if (entries_.contains(entry.request_hash)) return false;
  if (path_) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    std::FILE* f = std::fopen(path_->c_str(), "ab");
    if (f == nullptr) throw Error(ErrorCode::kIoError, "cannot append to " + path_->string());
    std::string line = entry_line(entry);
    bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size();
    ok = std::fclose(f) == 0 && ok;
    if (!ok) throw Error(ErrorCode::kIoError, "short write to " + path_->string());
  }
  entries_.emplace(entry.request_hash, entry);
  order_.push_back(entry.request_hash);
  return true;
}

std::size_t ReplayFixture::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::string ReplayFixture::serialize() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& h : order_) out += entry_line(entries_.find(h)->second);
  return out;
}

// ---------------------------------------------------------------------------
// Gateway

namespace {

bool transient(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

std::string api_key(const ModelProfile& profile) {
  if (profile.api_key_env.empty()) return {};
  const char* v = std::getenv(profile.api_key_env.c_str());
  if (v == nullptr || *v == '\0') {
    throw Error(ErrorCode::kProviderError, "environment variable " + profile.api_key_env + " is not set");
  }
  return v;
}

http::Request build_request(const ModelProfile& profile, std::string_view system_text, std::string_view user_text) {
  const std::string model = profile.api_model.empty() ? profile.name : profile.api_model;
  http::Request req;
  req.url = profile.endpoint;
  std::string key = api_key(profile);
  if (profile.provider == Provider::kGoogleLike) {
    json body{{"systemInstruction", {{"parts", json::array({{{"text", system_text}}})}}},
              {"contents", json::array({{{"role", "user"}, {"parts", json::array({{{"text", user_text}}})}}})},
              {"generationConfig", {{"temperature", profile.temperature}, {"maxOutputTokens", profile.max_output_tokens}}}};
    req.body = body.dump();
    if (!key.empty()) req.headers.emplace_back("x-goog-api-key", key);
  } else {
    json body{{"model", model},
              {"messages", json::array({{{"role", "system"}, {"content", system_text}},
                                        {{"role", "user"}, {"content", user_text}}})},
              {"temperature", profile.temperature},
              {"max_tokens", profile.max_output_tokens}};
    req.body = body.dump();
    if (!key.empty()) req.headers.emplace_back("Authorization", "Bearer " + key);
  }
  return req;
}

std::pair<std::string, FinishReason> parse_reply(const ModelProfile& profile, const std::string& body) {
  json j = json::parse(body, nullptr, false);
  try {
    if (profile.provider == Provider::kGoogleLike) {
      const auto& cand = j.at("candidates").at(0);
      std::string text;
      for (const auto& part : cand.at("content").at("parts")) text += part.value("text", "");
      return {text, parse_finish_reason(cand.value("finishReason", "STOP"))};
    }
    const auto& choice = j.at("choices").at(0);
    return {choice.at("message").at("content").get<std::string>(),
            parse_finish_reason(choice.value("finish_reason", "stop"))};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderError, std::string("unexpected response body: ") + e.what());
  }
}

}  // namespace

Gateway::Gateway(GatewayOptions options, std::shared_ptr<http::Transport> transport,
                 std::shared_ptr<ReplayFixture> fixture)
    : options_(std::move(options)), transport_(std::move(transport)), fixture_(std::move(fixture)) {
  if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (!transport_) transport_ = std::make_shared<http::OfflineTransport>();
}

http::InFlightLimiter& Gateway::limiter_for(Provider p) {
  std::lock_guard lock(mu_);
  auto it = limiters_.find(p);
  if (it == limiters_.end()) it = limiters_.emplace(p, http::InFlightLimiter(options_.max_in_flight)).first;
  return it->second;
}

RawResponse Gateway::complete(const ModelProfile& profile, const promptkit::RenderedPrompt& prompt) {
  return complete(profile, prompt.system_text, prompt.user_text, prompt.token_estimate);
}

RawResponse Gateway::complete(const ModelProfile& profile, std::string_view system_text, std::string_view user_text,
                              std::size_t token_estimate) {
  if (token_estimate + profile.max_output_tokens > profile.context_window) {
    throw Error(ErrorCode::kContextOverflow, "prompt estimate " + std::to_string(token_estimate) + " + " +
                                                 std::to_string(profile.max_output_tokens) +
                                                 " output tokens exceeds the " + std::to_string(profile.context_window) +
                                                 "-token window of " + profile.name);
  }
  std::string hash = request_hash(profile, system_text, user_text);
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(hash); it != cache_.end()) {
      ++cache_hits_;
      return it->second;
    }
  }

  RawResponse response;
  if (profile.provider == Provider::kReplay) {
    auto entry = fixture_ ? fixture_->lookup(hash) : std::nullopt;
    if (!entry) throw Error(ErrorCode::kReplayMiss, "no fixture entry for " + hash + " (" + profile.name + ")");
    ++provider_calls_;
    response = {entry->text, profile.name, entry->latency_ms, hash, entry->finish_reason};
  } else {
    response = call_live(profile, system_text, user_text, hash);
    if (options_.record_live && fixture_) {
      fixture_->record({hash, profile.name, response.text, response.latency_ms, response.finish_reason});
    }
  }

  std::lock_guard lock(mu_);
  cache_.emplace(hash, response);
  return response;
}

RawResponse Gateway::call_live(const ModelProfile& profile, std::string_view system_text, std::string_view user_text,
                               const std::string& hash) {
  if (options_.offline) {
    throw Error(ErrorCode::kNetworkForbidden, "offline mode cannot call live profile " + profile.name);
  }
  http::Request req = build_request(profile, system_text, user_text);
  ++provider_calls_;

  http::Reply reply;
  auto backoff = options_.base_backoff;
  for (int attempt = 0;; ++attempt) {
    auto start = std::chrono::steady_clock::now();
    {
      http::InFlightLimiter::Slot slot(limiter_for(profile.provider));
      ++network_requests_;
      reply = transport_->post(req);
    }
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    if (reply.status >= 200 && reply.status < 300) {
      auto [text, finish] = parse_reply(profile, reply.body);
      return {std::move(text), profile.name, elapsed.count(), hash, finish};
    }
    if (!transient(reply.status) || attempt >= options_.max_retries) break;
    options_.sleep(backoff);
    backoff = std::min(backoff * 2, options_.max_backoff);
  }
  throw Error(ErrorCode::kProviderError, profile.name + " status " + std::to_string(reply.status) + ": " +
                                             (reply.error.empty() ? reply.body : reply.error));
}

bool Gateway::record(const ModelProfile& profile, const promptkit::RenderedPrompt& prompt,
                     const RawResponse& response) {
  if (!fixture_) throw Error(ErrorCode::kIoError, "gateway has no fixture to record into");
  std::string hash = request_hash(profile, prompt.system_text, prompt.user_text);
  return fixture_->record({hash, profile.name, response.text, response.latency_ms, response.finish_reason});
}

}  // namespace realvul::llm
