#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace forge::resources {

// Files under resources/ compiled into the library, keyed by their path
// relative to that directory (e.g. "prompts/repair.txt").
std::string_view get(std::string_view name);
bool contains(std::string_view name);
std::vector<std::string> names();

}  // namespace forge::resources
