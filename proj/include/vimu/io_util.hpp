#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vimu {

std::string read_file(const std::filesystem::path& path);

/// Writes `bytes` to `path` via a temporary sibling and rename.
void write_file(const std::filesystem::path& path, std::string_view bytes);

std::vector<std::string_view> split(std::string_view s, char delim);
std::string_view trim(std::string_view s);

/// Strict double parse of the whole token (after trimming). Rejects empty
/// cells, trailing garbage, NaN and infinities.
bool parse_double(std::string_view token, double& out);

/// Shortest text that round-trips to the same double.
std::string format_double(double v);

}  // namespace vimu
