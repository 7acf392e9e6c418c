#include "datamix/common/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace datamix::text {

namespace {

const icu::Normalizer2& nfc_instance() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
        throw std::runtime_error("ICU NFC normalizer unavailable");
    }
    return *n;
}

template <typename Fn>
void for_each_codepoint(std::string_view s, Fn&& fn) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
    const std::int32_t len = static_cast<std::int32_t>(s.size());
    std::int32_t i = 0;
    while (i < len) {
        const std::int32_t start = i;
        UChar32 c;
        U8_NEXT(p, i, len, c);
        fn(c, start, i);  // c < 0 marks an ill-formed sequence
    }
}

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::string nfc(std::string_view utf8) {
    const icu::Normalizer2& norm = nfc_instance();
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString src = icu::UnicodeString::fromUTF8(
        icu::StringPiece(utf8.data(), static_cast<std::int32_t>(utf8.size())));
    if (norm.isNormalized(src, status) && U_SUCCESS(status)) {
        std::string out;
        src.toUTF8String(out);
        return out;
    }
    status = U_ZERO_ERROR;
    icu::UnicodeString dst = norm.normalize(src, status);
    if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
    std::string out;
    dst.toUTF8String(out);
    return out;
}

std::string collapse_whitespace(std::string_view utf8) {
    std::string out;
    out.reserve(utf8.size());
    bool pending_space = false;
    for_each_codepoint(utf8, [&](UChar32 c, std::int32_t b, std::int32_t e) {
        if (u_isUWhiteSpace(c)) {
            pending_space = !out.empty();
            return;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        if (c < 0) {
            out.append("\xEF\xBF\xBD");
        } else {
            out.append(utf8.substr(static_cast<std::size_t>(b), static_cast<std::size_t>(e - b)));
        }
    });
    return out;
}

std::string normalize_for_hash(std::string_view utf8) {
    return collapse_whitespace(nfc(utf8));
}

std::size_t codepoint_count(std::string_view utf8) {
    std::size_t n = 0;
    for_each_codepoint(utf8, [&](UChar32, std::int32_t, std::int32_t) { ++n; });
    return n;
}

std::size_t punctuation_count(std::string_view utf8) {
    std::size_t n = 0;
    for_each_codepoint(utf8, [&](UChar32 c, std::int32_t, std::int32_t) {
        if (u_ispunct(c)) ++n;
    });
    return n;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_ascii_space(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && !is_ascii_space(s[j])) ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string_view> split_paragraphs(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t para_start = std::string_view::npos;
    std::size_t para_end = 0;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t nl = s.find('\n', pos);
        if (nl == std::string_view::npos) nl = s.size();
        std::string_view line = s.substr(pos, nl - pos);
        const bool blank = std::all_of(line.begin(), line.end(), is_ascii_space);
        if (blank) {
            if (para_start != std::string_view::npos) {
                out.push_back(s.substr(para_start, para_end - para_start));
                para_start = std::string_view::npos;
            }
        } else {
            if (para_start == std::string_view::npos) para_start = pos;
            para_end = nl;
            // Drop a trailing '\r' so CRLF input yields the same paragraph text.
            if (para_end > para_start && s[para_end - 1] == '\r') --para_end;
        }
        if (nl == s.size()) break;
        pos = nl + 1;
    }
    if (para_start != std::string_view::npos) out.push_back(s.substr(para_start, para_end - para_start));
    return out;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_ascii_space(s[b])) ++b;
    while (e > b && is_ascii_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (prefix.size() > s.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i]))) {
            return false;
        }
    }
    return true;
}

}  // namespace datamix::text
