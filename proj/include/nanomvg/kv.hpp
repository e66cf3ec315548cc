#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace nanomvg {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// `key = value` per line; blank lines and '#' comments ignored. Keys and
// values are trimmed. Throws kParse with the line number on malformed input.
KeyValues parse_key_values(const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

double parse_double(const std::string& key, const std::string& value);
long long parse_int(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);
std::vector<int> parse_int_list(const std::string& key, const std::string& value);

}  // namespace nanomvg
