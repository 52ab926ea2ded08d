#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "realvul/http.hpp"
#include "realvul/promptkit.hpp"

namespace realvul::llm {

enum class Provider { kOpenAiLike, kGoogleLike, kLocalHttp, kReplay };

std::string_view to_string(Provider p);
std::optional<Provider> parse_provider(std::string_view s);

struct ModelProfile {
  std::string name;
  Provider provider = Provider::kReplay;
  std::size_t context_window = 8192;
  std::string endpoint;
  double temperature = 0.0;
  std::size_t max_output_tokens = 1024;
  // Model identifier sent to the provider; defaults to `name`.
  std::string api_model;
  std::string api_key_env;
};

// Roster of the evaluated models (context windows as published) plus the judge.
std::vector<ModelProfile> default_profiles();
std::optional<ModelProfile> find_profile(std::string_view name);

enum class FinishReason { kStop, kLength, kError };
std::string_view to_string(FinishReason f);
FinishReason parse_finish_reason(std::string_view s);

struct RawResponse {
  std::string text;
  std::string model_name;
  std::int64_t latency_ms = 0;
  std::string request_hash;
  FinishReason finish_reason = FinishReason::kStop;

  bool operator==(const RawResponse&) const = default;
};

// SHA-256 over (model name, system text, user text, temperature, max_output_tokens).
std::string request_hash(const ModelProfile& profile, std::string_view system_text, std::string_view user_text);

struct FixtureEntry {
  std::string request_hash;
  std::string model;
  std::string text;
  std::int64_t latency_ms = 0;
  FinishReason finish_reason = FinishReason::kStop;
};

// Line-delimited request_hash -> response map. Appends go through one writer.
class ReplayFixture {
 public:
  ReplayFixture() = default;
  // Loads `path` when it exists; appends from record() go to `path`.
  explicit ReplayFixture(std::filesystem::path path);
  static std::shared_ptr<ReplayFixture> from_string(std::string_view contents);

  std::optional<FixtureEntry> lookup(std::string_view hash) const;
  // Returns false (and writes nothing) when the hash is already present.
  bool record(const FixtureEntry& entry);
  std::size_t size() const;
  std::string serialize() const;

 private:
  void ingest(std::string_view contents);

  std::optional<std::filesystem::path> path_;
  std::map<std::string, FixtureEntry, std::less<>> entries_;
  std::vector<std::string> order_;
  mutable std::mutex mu_;
};

struct GatewayOptions {
  // Strict offline: live providers fail with NetworkForbidden before any I/O.
  bool offline = true;
  int max_retries = 3;
  std::chrono::milliseconds base_backoff{500};
  std::chrono::milliseconds max_backoff{8000};
  int max_in_flight = 2;
  // Record successful live responses into the fixture.
  bool record_live = false;
  std::function<void(std::chrono::milliseconds)> sleep;
};

class Gateway {
 public:
  Gateway(GatewayOptions options, std::shared_ptr<http::Transport> transport,
          std::shared_ptr<ReplayFixture> fixture = nullptr);

  RawResponse complete(const ModelProfile& profile, const promptkit::RenderedPrompt& prompt);
  RawResponse complete(const ModelProfile& profile, std::string_view system_text, std::string_view user_text,
                       std::size_t token_estimate);

  // Appends the response to the fixture; idempotent per request hash.
  bool record(const ModelProfile& profile, const promptkit::RenderedPrompt& prompt, const RawResponse& response);

  // Requests served by a backend (replay lookup or live call), not by the cache.
  std::size_t provider_calls() const { return provider_calls_.load(); }
  // HTTP attempts, including retries.
  std::size_t network_requests() const { return network_requests_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }
  const GatewayOptions& options() const { return options_; }

 private:
  RawResponse call_live(const ModelProfile& profile, std::string_view system_text, std::string_view user_text,
                        const std::string& hash);
  http::InFlightLimiter& limiter_for(Provider p);

  GatewayOptions options_;
  std::shared_ptr<http::Transport> transport_;
  std::shared_ptr<ReplayFixture> fixture_;
  std::unordered_map<std::string, RawResponse> cache_;
  std::map<Provider, http::InFlightLimiter> limiters_;
  std::mutex mu_;
  std::atomic<std::size_t> provider_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> network_requests_{0};
};

}  // namespace realvul::llm
