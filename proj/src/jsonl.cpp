#include "coldstart/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "coldstart/errors.hpp"

namespace coldstart::jsonl {

void for_each(const std::string& path, const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json obj;
    try {
      obj = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(path + ": malformed JSON: " + e.what(), line_no);
    }
    if (!obj.is_object()) throw ParseError(path + ": expected a JSON object", line_no);
    fn(obj, line_no);
  }
}

std::vector<Json> read_all(const std::string& path) {
  std::vector<Json> rows;
  for_each(path, [&](const Json& j, std::size_t) { rows.push_back(j); });
  return rows;
}

void write_all(const std::string& path, const std::vector<Json>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  for (const auto& row : rows) out << row.dump() << '\n';
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace coldstart::jsonl
