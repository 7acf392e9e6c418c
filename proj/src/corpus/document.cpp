#include "datamix/corpus/document.hpp"

#include <unordered_set>

#include "datamix/common/error.hpp"

namespace datamix::corpus {

Document document_from_json(const json& row) {
    if (!row.is_object()) throw Error("bad_document", "document row is not an object");
    Document doc;
    auto id = row.find("id");
    if (id == row.end()) throw Error("bad_document", "document without id");
    doc.id = id->is_string() ? id->get<std::string>() : id->dump();
    auto text = row.find("text");
    if (text == row.end() || !text->is_string()) {
        throw Error("bad_document", "document " + doc.id + " has no string text");
    }
    doc.text = text->get<std::string>();
    if (auto it = row.find("url"); it != row.end() && it->is_string()) doc.url = it->get<std::string>();
    if (auto it = row.find("domain"); it != row.end() && it->is_string()) doc.domain = it->get<std::string>();
    if (auto it = row.find("meta"); it != row.end() && it->is_object()) {
        for (const auto& [k, v] : it->items()) {
            doc.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
    }
    if (auto it = row.find("token_count"); it != row.end() && !it->is_null()) {
        if (!it->is_number_integer()) {
            throw Error("bad_document", "document " + doc.id + ": token_count must be an integer");
        }
        if (it->is_number_unsigned()) {
            doc.token_count = it->get<std::uint64_t>();
        } else {
            const auto v = it->get<std::int64_t>();
            if (v < 0) throw Error("bad_document", "document " + doc.id + ": negative token_count");
            doc.token_count = static_cast<std::uint64_t>(v);
        }
    }
    return doc;
}

json document_to_json(const Document& doc) {
    json row = {{"id", doc.id}, {"text", doc.text}};
    if (doc.url) row["url"] = *doc.url;
    if (doc.domain) row["domain"] = *doc.domain;
    if (!doc.meta.empty()) row["meta"] = doc.meta;
    if (doc.token_count) row["token_count"] = *doc.token_count;
    return row;
}

std::vector<Document> read_documents(const std::filesystem::path& path) {
    std::vector<Document> docs;
    for (const auto& row : read_jsonl(path)) docs.push_back(document_from_json(row));
    return docs;
}

void write_documents(const std::filesystem::path& path, const std::vector<Document>& docs) {
    std::vector<json> rows;
    rows.reserve(docs.size());
    for (const auto& d : docs) rows.push_back(document_to_json(d));
    write_jsonl(path, rows);
}

void check_unique_ids(const std::vector<Document>& docs) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(docs.size());
    for (const auto& d : docs) {
        if (!seen.insert(d.id).second) throw Error("duplicate_id", "duplicate document id: " + d.id);
    }
}

}  // namespace datamix::corpus
