#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "datamix/common/jsonl.hpp"

namespace datamix::corpus {

// One corpus record; the unit of cleaning.
struct Document {
    std::string id;
    std::string text;
    std::optional<std::string> url;
    std::optional<std::string> domain;
    std::map<std::string, std::string> meta;
    std::optional<std::uint64_t> token_count;

    friend bool operator==(const Document&, const Document&) = default;
};

// Parses a JSONL row. Non-string meta values are stored as their JSON dump.
// Raises Error "bad_document" on missing id/text or a negative token_count.
Document document_from_json(const json& row);
json document_to_json(const Document& doc);

std::vector<Document> read_documents(const std::filesystem::path& path);
void write_documents(const std::filesystem::path& path, const std::vector<Document>& docs);

// Raises Error "duplicate_id" when an id repeats within the stream.
void check_unique_ids(const std::vector<Document>& docs);

}  // namespace datamix::corpus
