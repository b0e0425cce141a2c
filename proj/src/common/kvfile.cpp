#include "finclass/kvfile.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "finclass/error.hpp"

namespace finclass {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value,
                            const char* what) {
  throw InvalidConfig("invalid value '" + std::string(value) + "' for key '" +
                      std::string(key) + "': expected " + what);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value, const char* what) {
  const auto v = trim(value);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) {
    bad_value(key, value, what);
  }
  return out;
}

}  // namespace

std::vector<KeyValue> parse_key_values(std::string_view text) {
  std::vector<KeyValue> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidConfig("line " + std::to_string(line_no) +
                          ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw InvalidConfig("line " + std::to_string(line_no) + ": empty key");
    }
    out.push_back({std::string(key), std::string(trim(line.substr(eq + 1))),
                   line_no});
  }
  return out;
}

std::vector<KeyValue> read_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

double parse_double(std::string_view key, std::string_view value) {
  return parse_number<double>(key, value, "a number");
}

long parse_long(std::string_view key, std::string_view value) {
  return parse_number<long>(key, value, "an integer");
}

std::uint64_t parse_u64(std::string_view key, std::string_view value) {
  return parse_number<std::uint64_t>(key, value, "an unsigned integer");
}

bool parse_bool(std::string_view key, std::string_view value) {
  const auto v = trim(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value, "a boolean");
}

}  // namespace finclass
