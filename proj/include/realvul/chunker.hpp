#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "realvul/embedder.hpp"

namespace realvul::chunker {

enum class UnitMode { kSentence, kCodeBlock };

struct ChunkParams {
  UnitMode unit_mode = UnitMode::kSentence;
  double breakpoint_percentile = 95.0;
  std::size_t max_chunk_tokens = 512;
  std::size_t min_units_per_chunk = 1;
};

// Units of a document plus the separator that rejoins them.
struct UnitSplit {
  std::vector<std::string> units;
  std::string separator;

  std::string join() const;
};

struct Chunk {
  std::string text;
  std::string parent_doc_id;
  std::size_t index = 0;
  std::size_t first_unit = 0;
  std::size_t last_unit = 0;
  // Exact bytes between this chunk and the next one; empty for the last chunk
  // and between pieces of a unit that had to be split mid-unit.
  std::string separator_after;

  bool operator==(const Chunk&) const = default;
};

// Sentence mode splits after [.!?] at the following space (separator " ").
// Code mode splits at blank lines (separator "\n\n"), falling back to single
// lines (separator "\n") when the document has no blank line. A boundary is
// only taken when both sides contain non-whitespace, so units are never blank.
UnitSplit split_units(std::string_view doc, UnitMode mode);

// Linear-interpolated percentile (0 < p <= 100) of `values`.
double percentile(std::vector<double> values, double p);

// Indices i such that a chunk boundary falls between unit i and unit i + 1.
std::vector<std::size_t> semantic_breakpoints(const UnitSplit& split, const ChunkParams& params,
                                              const embedder::Embedder& embedder);

std::vector<Chunk> chunk(std::string_view doc, const ChunkParams& params, const embedder::Embedder& embedder,
                         std::string_view parent_doc_id = {});

// Reassembles the source document from its chunks.
std::string join_chunks(const std::vector<Chunk>& chunks);

}  // namespace realvul::chunker
