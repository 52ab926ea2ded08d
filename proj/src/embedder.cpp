#include "realvul/embedder.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "realvul/error.hpp"
#include "realvul/text.hpp"

namespace realvul::embedder {

using json = nlohmann::json;

std::vector<std::string> lexical_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (c < 0x80 && std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

void check_input(std::string_view text, const EmbedderProfile& profile) {
  if (text::is_blank(text)) throw Error(ErrorCode::kEmptyInput, "cannot embed blank text");
  auto n = text::count_tokens(text);
  if (n > profile.max_tokens) {
    throw Error(ErrorCode::kTokenBudgetExceeded,
                std::to_string(n) + " tokens exceeds budget of " + std::to_string(profile.max_tokens));
  }
}

Vector mock_embed(std::string_view text, const EmbedderProfile& profile) {
  check_input(text, profile);
  if (profile.dimension == 0) throw Error(ErrorCode::kDimensionMismatch, "profile dimension is 0");

  auto tokens = lexical_tokens(text);
  if (tokens.empty()) tokens.emplace_back(text::trim(text));

  Vector v{std::vector<double>(profile.dimension, 0.0)};
  for (const auto& tok : tokens) {
    auto bucket = text::fnv1a64(tok) % profile.dimension;
    v.values[bucket] += (text::fnv1_64(tok) & 1U) ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double x : v.values) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    // Every token cancelled out. Fall back to the first token's bucket so the
    // output stays a unit vector.
    v.values[text::fnv1a64(tokens.front()) % profile.dimension] = 1.0;
    return v;
  }
  for (double& x : v.values) x /= norm;
  return v;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::kZeroVector, "cosine of a zero vector");
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  if (c > 1.0) return 1.0;
  if (c < -1.0) return -1.0;
  return c;
}

double cosine(const Vector& a, const Vector& b) { return cosine(a.values, b.values); }

std::vector<Vector> Embedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

MockEmbedder::MockEmbedder(EmbedderProfile profile) : profile_(std::move(profile)) {
  if (profile_.dimension == 0 || profile_.max_tokens == 0) {
    throw Error(ErrorCode::kInvalidConfig, "embedder dimension and max_tokens must be positive");
  }
}

Vector MockEmbedder::embed(std::string_view text) const { return mock_embed(text, profile_); }

HttpEmbedder::HttpEmbedder(EmbedderProfile profile, HttpEmbedderOptions options,
                           std::shared_ptr<http::Transport> transport)
    : profile_(std::move(profile)),
      options_(std::move(options)),
      transport_(std::move(transport)),
      limiter_(options_.max_in_flight) {
  if (options_.batch_size == 0) options_.batch_size = 1;
}

Vector HttpEmbedder::embed(std::string_view text) const {
  std::string t(text);
  return embed_batch(std::span<const std::string>(&t, 1)).front();
}

std::vector<Vector> HttpEmbedder::embed_batch(std::span<const std::string> texts) const {
  for (const auto& t : texts) check_input(t, profile_);
  const char* key = std::getenv(options_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::kProviderError, "environment variable " + options_.api_key_env + " is not set");
  }

  std::vector<Vector> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += options_.batch_size) {
    auto batch = texts.subspan(start, std::min(options_.batch_size, texts.size() - start));
    json body{{"model", options_.model}, {"input", json::array()}};
    for (const auto& t : batch) body["input"].push_back(t);
    if (profile_.dimension != 1536) body["dimensions"] = profile_.dimension;

    http::Reply reply;
    {
      http::InFlightLimiter::Slot slot(limiter_);
      reply = transport_->post({options_.endpoint, {{"Authorization", std::string("Bearer ") + key}}, body.dump()});
    }
    if (reply.status != 200) {
      throw Error(ErrorCode::kProviderError,
                  "embedding endpoint status " + std::to_string(reply.status) + ": " + reply.error + reply.body);
    }
    json parsed = json::parse(reply.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("data") || !parsed["data"].is_array() ||
        parsed["data"].size() != batch.size()) {
      throw Error(ErrorCode::kProviderError, "unexpected embedding response shape");
    }
    std::vector<Vector> slots(batch.size());
    for (std::size_t i = 0; i < parsed["data"].size(); ++i) {
      const auto& item = parsed["data"][i];
      std::size_t at = item.contains("index") ? item["index"].get<std::size_t>() : i;
      if (at >= slots.size() || !slots[at].values.empty()) {
        throw Error(ErrorCode::kProviderError, "embedding response has a bad index");
      }
      slots[at].values = item.at("embedding").get<std::vector<double>>();
      if (slots[at].dimension() != profile_.dimension) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "provider returned dimension " + std::to_string(slots[at].dimension()));
      }
    }
    for (auto& v : slots) out.push_back(std::move(v));
  }
  return out;
}

}  // namespace realvul::embedder
