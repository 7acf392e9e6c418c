#include "datamix/corpus/filter.hpp"

#include <cctype>
#include <charconv>
#include <optional>
#include <fstream>

#include "datamix/common/error.hpp"
#include "datamix/common/parallel.hpp"
#include "datamix/common/text.hpp"

namespace datamix::corpus {

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

// Strips ASCII punctuation from both ends so "word," matches "word".
std::string_view strip_ascii_punct(std::string_view s) {
    auto is_p = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
    while (!s.empty() && is_p(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_p(s.back())) s.remove_suffix(1);
    return s;
}

std::optional<std::uint64_t> parse_stars(const std::string& v) {
    std::uint64_t out = 0;
    const char* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return out;
}

}  // namespace

void FilterRuleSet::validate() const {
    if (min_chars == 0) throw ValidationError("min_chars", "must be positive");
    if (!in_unit(punct_ratio_min)) throw ValidationError("punct_ratio_min", "must lie in [0, 1]");
    if (!in_unit(punct_ratio_max)) throw ValidationError("punct_ratio_max", "must lie in [0, 1]");
    if (punct_ratio_min > punct_ratio_max) {
        throw ValidationError("punct_ratio_min", "must not exceed punct_ratio_max");
    }
    if (!in_unit(dirty_word_max_ratio)) throw ValidationError("dirty_word_max_ratio", "must lie in [0, 1]");
}

HeuristicFilter::HeuristicFilter(FilterRuleSet rules) : rules_(std::move(rules)) {
    rules_.validate();
    for (const auto& w : rules_.dirty_words) dirty_.insert(text::ascii_lower(w));
}

Verdict HeuristicFilter::operator()(const Document& doc) const {
    Verdict v;
    const std::size_t chars = text::codepoint_count(doc.text);
    if (chars < rules_.min_chars) v.reasons.emplace_back(kTooShort);

    const double punct = chars == 0 ? 0.0 : static_cast<double>(text::punctuation_count(doc.text)) / chars;
    if (punct < rules_.punct_ratio_min || punct > rules_.punct_ratio_max) v.reasons.emplace_back(kPunctAnomaly);

    if (!dirty_.empty()) {
        const auto tokens = text::split_whitespace(doc.text);
        std::size_t dirty = 0;
        for (std::string_view tok : tokens) {
            if (dirty_.contains(text::ascii_lower(strip_ascii_punct(tok)))) ++dirty;
        }
        if (!tokens.empty() && static_cast<double>(dirty) / tokens.size() > rules_.dirty_word_max_ratio) {
            v.reasons.emplace_back(kDirtyWords);
        }
    }

    if (doc.domain && *doc.domain == "code") {
        if (auto it = doc.meta.find("stars"); it != doc.meta.end()) {
            if (auto stars = parse_stars(it->second); stars && *stars < rules_.code_min_stars) {
                v.reasons.emplace_back(kLowStars);
            }
        }
    }
    v.keep = v.reasons.empty();
    return v;
}

Verdict heuristic_filter(const Document& doc, const FilterRuleSet& rules) {
    return HeuristicFilter(rules)(doc);
}

json FilterReport::to_json(const std::vector<Document>& docs) const {
    json verdict_rows = json::array();
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        json row = {{"id", i < docs.size() ? docs[i].id : std::to_string(i)}, {"keep", verdicts[i].keep}};
        if (!verdicts[i].keep) row["reasons"] = verdicts[i].reasons;
        verdict_rows.push_back(std::move(row));
    }
    return {
        {"input", kept + dropped},
        {"kept", kept},
        {"dropped", dropped},
        {"dropped_by_reason", dropped_by_reason},
        {"reason_hits", reason_hits},
        {"verdicts", std::move(verdict_rows)},
    };
}

FilterResult filter_documents(const std::vector<Document>& docs, const FilterRuleSet& rules,
                              std::size_t threads) {
    const HeuristicFilter filter(rules);
    FilterResult result;
    auto& report = result.report;
    report.verdicts.resize(docs.size());
    parallel_for(docs.size(), threads, [&](std::size_t i) { report.verdicts[i] = filter(docs[i]); });
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const Verdict& v = report.verdicts[i];
        if (v.keep) {
            ++report.kept;
            result.kept.push_back(docs[i]);
            continue;
        }
        ++report.dropped;
        ++report.dropped_by_reason[v.reasons.front()];
        for (const auto& r : v.reasons) ++report.reason_hits[r];
    }
    return result;
}

std::vector<std::string> load_word_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io_error", "cannot open word list " + path.string());
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        const std::string_view w = text::trim(line);
        if (w.empty() || w.front() == '#') continue;
        words.emplace_back(w);
    }
    return words;
}

}  // namespace datamix::corpus
