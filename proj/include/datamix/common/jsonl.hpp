#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace datamix {

using json = nlohmann::json;

// Reads one JSON value per non-empty line. Parse failures raise Error
// "bad_jsonl" naming the file and 1-based line number.
std::vector<json> read_jsonl(const std::filesystem::path& path);
std::vector<json> read_jsonl(std::istream& in, const std::string& source_name);

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);
void write_jsonl(std::ostream& out, const std::vector<json>& rows);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& value);

}  // namespace datamix
