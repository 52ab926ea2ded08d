#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "realvul/http.hpp"

namespace realvul::embedder {

struct EmbedderProfile {
  std::string name = "mock-hash";
  std::size_t dimension = 1536;
  std::size_t max_tokens = 8191;
};

// Dense embedding. All components finite.
struct Vector {
  std::vector<double> values;

  std::size_t dimension() const { return values.size(); }
  bool operator==(const Vector&) const = default;
};

// Lowercase ASCII-alphanumeric runs of `text`.
std::vector<std::string> lexical_tokens(std::string_view text);

// Deterministic offline embedding (feature hashing):
//   bucket = fnv1a64(token) mod dimension, sign = +1 if fnv1_64(token) is even else -1,
//   accumulate per token, then L2-normalize. Text without alphanumerics is
//   hashed as a single token of its trimmed form.
Vector mock_embed(std::string_view text, const EmbedderProfile& profile);

double cosine(std::span<const double> a, std::span<const double> b);
double cosine(const Vector& a, const Vector& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual const EmbedderProfile& profile() const = 0;
  virtual Vector embed(std::string_view text) const = 0;
  virtual std::vector<Vector> embed_batch(std::span<const std::string> texts) const;
};

class MockEmbedder final : public Embedder {
 public:
  explicit MockEmbedder(EmbedderProfile profile = {});
  const EmbedderProfile& profile() const override { return profile_; }
  Vector embed(std::string_view text) const override;

 private:
  EmbedderProfile profile_;
};

struct HttpEmbedderOptions {
  std::string endpoint = "https://api.openai.com/v1/embeddings";
  std::string model = "text-embedding-3-small";
  std::string api_key_env = "OPENAI_API_KEY";
  std::size_t batch_size = 64;
  int max_in_flight = 2;
};

// OpenAI-compatible embedding endpoint.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(EmbedderProfile profile, HttpEmbedderOptions options, std::shared_ptr<http::Transport> transport);
  const EmbedderProfile& profile() const override { return profile_; }
  Vector embed(std::string_view text) const override;
  std::vector<Vector> embed_batch(std::span<const std::string> texts) const override;

 private:
  EmbedderProfile profile_;
  HttpEmbedderOptions options_;
  std::shared_ptr<http::Transport> transport_;
  mutable http::InFlightLimiter limiter_;
};

// Shared precondition check: non-blank, within the token budget.
void check_input(std::string_view text, const EmbedderProfile& profile);

}  // namespace realvul::embedder
