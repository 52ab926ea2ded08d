#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace realvul::resources {

// Files under data/ compiled into the library, keyed by their path relative
// to data/ (e.g. "templates/system_fs.tmpl").
std::optional<std::string_view> find(std::string_view name);
// Throws IoError when the resource does not exist.
std::string_view get(std::string_view name);
std::vector<std::string_view> names();

}  // namespace realvul::resources
