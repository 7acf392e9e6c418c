#include "datamix/corpus/dedup.hpp"

#include <optional>
#include <string>
#include <unordered_set>

#include "datamix/common/error.hpp"
#include "datamix/common/hash.hpp"
#include "datamix/common/parallel.hpp"
#include "datamix/common/text.hpp"

namespace datamix::corpus {

namespace {

struct Paragraph {
    std::string_view text;
    std::optional<Hash128> hash;  // set only for paragraphs long enough to dedup
};

// Per-document work that needs no shared state; computed in parallel.
struct Prepared {
    std::optional<std::string> canonical_url;
    bool bad_url = false;
    Hash128 doc_hash;
    std::vector<Paragraph> paragraphs;
};

Prepared prepare(const Document& doc, const DedupOptions& opt) {
    Prepared p;
    if (opt.levels.url && doc.url) {
        try {
            p.canonical_url = normalize_url(*doc.url, opt.url_options);
        } catch (const Error&) {
            p.bad_url = true;
        }
    }
    if (opt.levels.document) p.doc_hash = content_hash(text::normalize_for_hash(doc.text));
    if (opt.levels.paragraph) {
        for (std::string_view para : text::split_paragraphs(doc.text)) {
            Paragraph entry{para, std::nullopt};
            const std::string norm = text::normalize_for_hash(para);
            if (text::codepoint_count(norm) >= opt.min_paragraph_chars) entry.hash = content_hash(norm);
            p.paragraphs.push_back(entry);
        }
    }
    return p;
}

}  // namespace

json DedupReport::to_json() const {
    return {
        {"input", input},
        {"kept", kept},
        {"removed_url", removed_url},
        {"removed_document", removed_document},
        {"removed_emptied", removed_emptied},
        {"paragraphs_removed", paragraphs_removed},
        {"documents_modified", documents_modified},
        {"unparseable_urls", unparseable_urls},
    };
}

DedupResult dedup_stream(const std::vector<Document>& docs, const DedupOptions& options) {
    std::vector<Prepared> prepared(docs.size());
    parallel_for(docs.size(), options.threads, [&](std::size_t i) { prepared[i] = prepare(docs[i], options); });

    DedupResult result;
    DedupReport& report = result.report;
    report.input = docs.size();

    std::unordered_set<std::string> seen_urls;
    std::unordered_set<Hash128, Hash128Hasher> seen_docs;
    std::unordered_set<Hash128, Hash128Hasher> seen_paragraphs;

    for (std::size_t i = 0; i < docs.size(); ++i) {
        const Document& doc = docs[i];
        Prepared& prep = prepared[i];

        if (prep.bad_url) ++report.unparseable_urls;
        if (prep.canonical_url && !seen_urls.insert(*prep.canonical_url).second) {
            ++report.removed_url;
            continue;
        }
        if (options.levels.document && !seen_docs.insert(prep.doc_hash).second) {
            ++report.removed_document;
            continue;
        }

        Document out = doc;
        std::vector<Hash128> new_paragraphs;
        if (options.levels.paragraph) {
            std::vector<std::string_view> kept_paragraphs;
            std::unordered_set<Hash128, Hash128Hasher> local;
            std::size_t removed = 0;
            for (const Paragraph& para : prep.paragraphs) {
                if (para.hash && (seen_paragraphs.contains(*para.hash) || !local.insert(*para.hash).second)) {
                    ++removed;
                    continue;
                }
                if (para.hash) new_paragraphs.push_back(*para.hash);
                kept_paragraphs.push_back(para.text);
            }
            if (removed > 0) {
                if (kept_paragraphs.empty()) {
                    report.paragraphs_removed += removed;
                    ++report.removed_emptied;
                    continue;
                }
                std::string rebuilt;
                for (std::size_t p = 0; p < kept_paragraphs.size(); ++p) {
                    if (p > 0) rebuilt += "\n\n";
                    rebuilt += kept_paragraphs[p];
                }
                out.text = std::move(rebuilt);
                // The rewritten text may now equal an earlier survivor.
                if (options.levels.document &&
                    !seen_docs.insert(content_hash(text::normalize_for_hash(out.text))).second) {
                    ++report.removed_document;
                    continue;
                }
                report.paragraphs_removed += removed;
                ++report.documents_modified;
            }
        }
        // Paragraphs are claimed only by surviving documents, so every
        // paragraph in the output has its first occurrence in the output.
        seen_paragraphs.insert(new_paragraphs.begin(), new_paragraphs.end());
        result.kept.push_back(std::move(out));
    }
    report.kept = result.kept.size();
    return result;
}

}  // namespace datamix::corpus
