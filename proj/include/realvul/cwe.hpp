#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace realvul::cwe {

// Short weakness name ("Out-of-bounds Write"); generic text for unknown ids.
std::string name_of(std::string_view cwe_id);

// Two CWE ids belong to the same family when equal, or when both fall into
// one of the grouped classes (memory bounds, integer arithmetic, NULL
// dereference, freed-memory use).
bool same_family(std::string_view a, std::string_view b);

// Lowercase phrases that describe the mechanism of the weakness class.
std::vector<std::string_view> mechanism_keywords(std::string_view cwe_id);

// First "CWE-<digits>" occurring in `text`, or empty.
std::string find_cwe_id(std::string_view text);

}  // namespace realvul::cwe
