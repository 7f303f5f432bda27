#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace saddle {

// Writes to a sibling temp file and renames it over `path`. Parent
// directories are created. Throws std::runtime_error on failure.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

using ConfigMap = std::map<std::string, std::string>;

// `key = value` lines, `#` starts a comment, blank lines ignored.
// Throws std::invalid_argument naming the line on malformed input or a
// repeated key.
ConfigMap parse_config(std::string_view text);
ConfigMap load_config(const std::filesystem::path& path);

// "k=v" from a --set flag.
std::pair<std::string, std::string> parse_assignment(std::string_view kv);

}  // namespace saddle
