#pragma once

#include <cstddef>
#include <vector>

#include "datamix/common/jsonl.hpp"
#include "datamix/corpus/document.hpp"
#include "datamix/corpus/url.hpp"

namespace datamix::corpus {

struct DedupLevels {
    bool url = true;
    bool document = true;
    bool paragraph = true;
};

struct DedupOptions {
    DedupLevels levels;
    std::size_t min_paragraph_chars = 50;
    UrlOptions url_options;
    std::size_t threads = 1;
};

struct DedupReport {
    std::size_t input = 0;
    std::size_t kept = 0;
    std::size_t removed_url = 0;
    std::size_t removed_document = 0;
    // Documents dropped because paragraph removal left nothing.
    std::size_t removed_emptied = 0;
    std::size_t paragraphs_removed = 0;
    std::size_t documents_modified = 0;
    // URLs that failed to parse; those documents skip URL-level dedup.
    std::size_t unparseable_urls = 0;

    json to_json() const;
};

struct DedupResult {
    std::vector<Document> kept;
    DedupReport report;
};

// Exact multi-level de-duplication with first-occurrence-wins semantics in
// input order. Levels apply per document as url -> document -> paragraph.
// After paragraph removal the rewritten text is also checked against the
// document-level set, which makes the operation idempotent.
DedupResult dedup_stream(const std::vector<Document>& docs, const DedupOptions& options = {});

}  // namespace datamix::corpus
