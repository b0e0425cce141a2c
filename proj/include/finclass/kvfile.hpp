#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace finclass {

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

// Parses `key = value` lines. Blank lines and text after `#` are ignored.
// Throws InvalidConfig on a line without `=` or with an empty key.
std::vector<KeyValue> parse_key_values(std::string_view text);
std::vector<KeyValue> read_key_value_file(const std::filesystem::path& path);

// Strict scalar parsing; the whole string must be consumed. Errors name `key`.
double parse_double(std::string_view key, std::string_view value);
long parse_long(std::string_view key, std::string_view value);
std::uint64_t parse_u64(std::string_view key, std::string_view value);
bool parse_bool(std::string_view key, std::string_view value);

}  // namespace finclass
