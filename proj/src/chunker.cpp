#include "realvul/chunker.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "realvul/error.hpp"
#include "realvul/text.hpp"

namespace realvul::chunker {

namespace {

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

// Splits at every position accepted by `is_boundary(i)`; the boundary consumes
// `sep_len` bytes starting at i.
template <typename Pred>
std::vector<std::string> split_at(std::string_view doc, std::size_t sep_len, Pred is_boundary) {
  std::vector<std::string> units;
  std::size_t last_content = doc.find_last_not_of(" \t\r\n\f\v");
  std::size_t start = 0;
  bool has_content = false;
  for (std::size_t i = 0; i + sep_len <= doc.size(); ++i) {
    if (!has_content && !std::isspace(static_cast<unsigned char>(doc[i]))) has_content = true;
    if (!has_content || i + sep_len > last_content || !is_boundary(i)) continue;
    units.emplace_back(doc.substr(start, i - start));
    start = i + sep_len;
    i = start - 1;
    has_content = false;
  }
  units.emplace_back(doc.substr(start));
  return units;
}

}  // namespace

std::string UnitSplit::join() const {
  std::string out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (i > 0) out += separator;
    out += units[i];
  }
  return out;
}

UnitSplit split_units(std::string_view doc, UnitMode mode) {
  if (text::is_blank(doc)) throw Error(ErrorCode::kEmptyDocument, "document is blank");
  if (mode == UnitMode::kSentence) {
    return {split_at(doc, 1, [&](std::size_t i) { return doc[i] == ' ' && i > 0 && is_terminal(doc[i - 1]); }),
            " "};
  }
  auto blocks = split_at(doc, 2, [&](std::size_t i) {
    return doc[i] == '\n' && doc[i + 1] == '\n' && (i + 2 >= doc.size() || doc[i + 2] != '\n');
  });
  if (blocks.size() > 1) return {std::move(blocks), "\n\n"};
  return {split_at(doc, 1, [&](std::size_t i) { return doc[i] == '\n'; }), "\n"};
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(rank));
  auto hi = static_cast<std::size_t>(std::ceil(rank));
  if (hi >= values.size()) hi = values.size() - 1;
  return values[lo] + (values[hi] - values[lo]) * (rank - static_cast<double>(lo));
}

std::vector<std::size_t> semantic_breakpoints(const UnitSplit& split, const ChunkParams& params,
                                              const embedder::Embedder& embedder) {
  const std::size_t n = split.units.size();
  if (n < 2) return {};

  // Window = unit plus one neighbour on each side, clipped to the embedder budget.
  std::vector<std::string> windows;
  windows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string w;
    for (std::size_t j = (i == 0 ? 0 : i - 1); j <= std::min(n - 1, i + 1); ++j) {
      if (!w.empty()) w += split.separator;
      w += split.units[j];
    }
    windows.emplace_back(text::leading_tokens(w, embedder.profile().max_tokens));
  }
  auto embeddings = embedder.embed_batch(windows);

  std::vector<double> distances(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) distances[i] = 1.0 - embedder::cosine(embeddings[i], embeddings[i + 1]);

  double threshold = percentile(distances, params.breakpoint_percentile);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (distances[i] > threshold) out.push_back(i);
  }
  return out;
}

std::vector<Chunk> chunk(std::string_view doc, const ChunkParams& params, const embedder::Embedder& embedder,
                         std::string_view parent_doc_id) {
  if (!(params.breakpoint_percentile > 0.0 && params.breakpoint_percentile <= 100.0)) {
    throw Error(ErrorCode::kInvalidConfig, "breakpoint_percentile must be in (0, 100]");
  }
  if (params.max_chunk_tokens == 0 || params.max_chunk_tokens > embedder.profile().max_tokens) {
    throw Error(ErrorCode::kInvalidConfig, "max_chunk_tokens must be in [1, embedder max_tokens]");
  }

  UnitSplit split = split_units(doc, params.unit_mode);
  const std::size_t n = split.units.size();

  // Semantic groups as [first, last] unit ranges.
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::size_t first = 0;
  for (std::size_t b : semantic_breakpoints(split, params, embedder)) {
    groups.emplace_back(first, b);
    first = b + 1;
  }
  groups.emplace_back(first, n - 1);

  if (params.min_units_per_chunk > 1 && groups.size() > 1) {
    std::vector<std::pair<std::size_t, std::size_t>> merged;
    for (const auto& g : groups) {
      if (!merged.empty() && merged.back().second - merged.back().first + 1 < params.min_units_per_chunk) {
        merged.back().second = g.second;
      } else {
        merged.push_back(g);
      }
    }
    if (merged.size() > 1 && merged.back().second - merged.back().first + 1 < params.min_units_per_chunk) {
      auto tail = merged.back();
      merged.pop_back();
      merged.back().second = tail.second;
    }
    groups = std::move(merged);
  }

  std::vector<Chunk> chunks;
  auto emit = [&](std::string text, std::size_t fu, std::size_t lu, std::string sep_after) {
    chunks.push_back({std::move(text), std::string(parent_doc_id), chunks.size(), fu, lu, std::move(sep_after)});
  };

  const std::size_t budget = params.max_chunk_tokens;
  for (const auto& [g_first, g_last] : groups) {
    std::string current;
    std::size_t current_tokens = 0;
    std::size_t current_first = g_first;
    bool open = false;

    for (std::size_t u = g_first; u <= g_last; ++u) {
      const std::string& unit = split.units[u];
      std::size_t unit_tokens = text::count_tokens(unit);

      if (open && current_tokens + unit_tokens <= budget) {
        current += split.separator;
        current += unit;
        current_tokens += unit_tokens;
        continue;
      }
      if (open) {
        emit(std::move(current), current_first, u - 1, split.separator);
        current.clear();
        open = false;
      }
      if (unit_tokens <= budget) {
        current = unit;
        current_tokens = unit_tokens;
        current_first = u;
        open = true;
        continue;
      }
      // Last resort: the unit alone is over budget, cut it at token starts.
      std::string_view rest = unit;
      while (text::count_tokens(rest) > budget) {
        auto piece = text::leading_tokens(rest, budget);
        emit(std::string(piece), u, u, "");
        rest.remove_prefix(piece.size());
      }
      current = std::string(rest);
      current_tokens = text::count_tokens(rest);
      current_first = u;
      open = true;
    }
    if (open) emit(std::move(current), current_first, g_last, split.separator);
  }
  chunks.back().separator_after.clear();
  return chunks;
}

std::string join_chunks(const std::vector<Chunk>& chunks) {
  std::string out;
  for (const auto& c : chunks) {
    out += c.text;
    out += c.separator_after;
  }
  return out;
}

}  // namespace realvul::chunker
