#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace coldstart::jsonl {

using Json = nlohmann::json;

// Calls `fn(object, line_number)` for every non-blank line. Malformed JSON
// raises ParseError naming the 1-based line number.
void for_each(const std::string& path, const std::function<void(const Json&, std::size_t)>& fn);

std::vector<Json> read_all(const std::string& path);

// One compact object per line, trailing newline, keys in sorted order.
void write_all(const std::string& path, const std::vector<Json>& rows);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace coldstart::jsonl
