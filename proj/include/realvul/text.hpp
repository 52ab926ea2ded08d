#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace realvul::text {

// Whitespace-delimited token count. This is the offline token counter used
// for embedder budgets and chunk sizes.
std::size_t count_tokens(std::string_view s);

// Conservative prompt-size estimate: never below count_tokens(s), and at
// least one token per four bytes to approximate subword tokenizers.
std::size_t estimate_tokens(std::string_view s);

// Prefix of `s` holding at most `max_tokens` whitespace tokens.
std::string_view leading_tokens(std::string_view s, std::size_t max_tokens);

bool is_blank(std::string_view s);
std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
std::vector<std::string_view> split_lines(std::string_view s);

// FNV-1a and FNV-1, 64-bit, with the published offset basis and prime.
std::uint64_t fnv1a64(std::string_view s);
std::uint64_t fnv1_64(std::string_view s);

std::string sha256_hex(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace realvul::text
