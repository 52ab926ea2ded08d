// Independent straight-line reimplementations used as test oracles. They share
// no code with the library beyond plain data types.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h *= 1099511628211ULL;
    h ^= c;
  }
  return h;
}

inline std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    bool alnum = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9');
    if (alnum) {
      cur += (ch >= 'A' && ch <= 'Z') ? static_cast<char>(ch - 'A' + 'a') : ch;
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Feature-hashing embedding for texts that contain at least one alphanumeric word.
inline std::vector<double> mock_embed(const std::string& text, std::size_t dim) {
  std::vector<double> v(dim, 0.0);
  for (const auto& w : words(text)) v[fnv1a(w) % dim] += (fnv1(w) % 2 == 0) ? 1.0 : -1.0;
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// numpy-style "linear" percentile.
inline double percentile(std::vector<double> xs, double p) {
  std::sort(xs.begin(), xs.end());
  double pos = (p / 100.0) * static_cast<double>(xs.size() - 1);
  std::size_t below = static_cast<std::size_t>(pos);
  if (below + 1 >= xs.size()) return xs.back();
  double frac = pos - static_cast<double>(below);
  return xs[below] * (1.0 - frac) + xs[below + 1] * frac;
}

// Breakpoint rule over sentence units joined by single spaces (windows fit the budget).
inline std::vector<std::size_t> breakpoints(const std::vector<std::string>& units, double p, std::size_t dim) {
  std::size_t n = units.size();
  if (n < 2) return {};
  std::vector<std::vector<double>> emb;
  for (std::size_t i = 0; i < n; ++i) {
    std::string w;
    if (i > 0) w += units[i - 1] + " ";
    w += units[i];
    if (i + 1 < n) w += " " + units[i + 1];
    emb.push_back(mock_embed(w, dim));
  }
  std::vector<double> d;
  for (std::size_t i = 0; i + 1 < n; ++i) d.push_back(1.0 - cosine(emb[i], emb[i + 1]));
  double t = percentile(d, p);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > t) out.push_back(i);
  }
  return out;
}

// Naive top-k: score every point, sort everything, keep k.
inline std::vector<std::uint64_t> top_k(const std::vector<std::pair<std::uint64_t, std::vector<float>>>& points,
                                        const std::vector<double>& q, std::size_t k,
                                        const std::vector<bool>& admitted = {}) {
  std::vector<std::pair<double, std::uint64_t>> scored;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!admitted.empty() && !admitted[i]) continue;
    std::vector<double> v(points[i].second.begin(), points[i].second.end());
    scored.emplace_back(cosine(v, q), points[i].first);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::uint64_t> ids;
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) ids.push_back(scored[i].second);
  return ids;
}

// Histogram over [0,1] with `bins` equal bins; value v goes to the largest i with i/bins <= v.
inline std::vector<std::size_t> histogram(const std::vector<double>& values, std::size_t bins) {
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    std::size_t i = 0;
    while (i + 1 < bins && static_cast<double>(i + 1) / static_cast<double>(bins) <= v) ++i;
    ++counts[i];
  }
  return counts;
}

}  // namespace oracle
