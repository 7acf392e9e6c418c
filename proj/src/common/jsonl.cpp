#include "datamix/common/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "datamix/common/error.hpp"

namespace datamix {

std::vector<json> read_jsonl(std::istream& in, const std::string& source_name) {
    std::vector<json> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw Error("bad_jsonl", source_name + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot open " + path.string());
    return read_jsonl(in, path.string());
}

void write_jsonl(std::ostream& out, const std::vector<json>& rows) {
    for (const auto& row : rows) out << row.dump() << '\n';
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io_error", "cannot write " + path.string());
    write_jsonl(out, rows);
    if (!out) throw Error("io_error", "write failed: " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error("bad_json", path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& value) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io_error", "cannot write " + path.string());
    out << value.dump(2) << '\n';
    if (!out) throw Error("io_error", "write failed: " + path.string());
}

}  // namespace datamix
