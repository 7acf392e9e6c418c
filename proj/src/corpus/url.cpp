#include "datamix/corpus/url.hpp"

#include <algorithm>
#include <cctype>

#include "datamix/common/error.hpp"
#include "datamix/common/text.hpp"

namespace datamix::corpus {

namespace {

[[noreturn]] void bad(std::string_view url, const char* why) {
    throw Error("bad_url", "unparseable URL '" + std::string(url) + "': " + why);
}

bool valid_scheme(std::string_view s) {
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '+' || c == '-' || c == '.';
    });
}

struct QueryParam {
    std::string_view key;
    std::string_view raw;  // "key=value" or "key"
};

}  // namespace

std::string normalize_url(std::string_view url, const UrlOptions& options) {
    for (unsigned char c : url) {
        if (c <= 0x20 || c == 0x7f) bad(url, "contains whitespace or control characters");
    }
    const std::size_t colon = url.find(':');
    if (colon == std::string_view::npos) bad(url, "missing scheme");
    const std::string_view scheme = url.substr(0, colon);
    if (!valid_scheme(scheme)) bad(url, "invalid scheme");
    std::string_view rest = url.substr(colon + 1);
    if (rest.substr(0, 2) != "//") bad(url, "missing authority");
    rest.remove_prefix(2);

    std::string_view fragmentless = rest.substr(0, rest.find('#'));
    const std::size_t auth_end = fragmentless.find_first_of("/?");
    const std::string_view authority = fragmentless.substr(0, auth_end);
    std::string_view after = auth_end == std::string_view::npos ? std::string_view{} : fragmentless.substr(auth_end);

    // authority = [userinfo@]host[:port]
    const std::size_t at = authority.rfind('@');
    const std::string_view userinfo = at == std::string_view::npos ? std::string_view{} : authority.substr(0, at + 1);
    std::string_view hostport = at == std::string_view::npos ? authority : authority.substr(at + 1);
    std::string_view host = hostport;
    std::string_view port;
    if (!hostport.empty() && hostport.front() == '[') {
        const std::size_t close = hostport.find(']');
        if (close == std::string_view::npos) bad(url, "unterminated IPv6 literal");
        host = hostport.substr(0, close + 1);
        port = hostport.substr(close + 1);
        if (!port.empty() && port.front() != ':') bad(url, "garbage after IPv6 literal");
    } else if (const std::size_t pc = hostport.rfind(':'); pc != std::string_view::npos) {
        host = hostport.substr(0, pc);
        port = hostport.substr(pc);
    }
    if (host.empty()) bad(url, "empty host");
    if (!port.empty()) {
        const std::string_view digits = port.substr(1);
        if (!std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) {
            bad(url, "non-numeric port");
        }
    }
    if (host.front() != '[') {
        for (unsigned char c : host) {
            if (!(std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '%' || c >= 0x80)) {
                bad(url, "invalid host character");
            }
        }
    }

    const std::size_t q = after.find('?');
    const std::string_view path = after.substr(0, q);
    const std::string_view query = q == std::string_view::npos ? std::string_view{} : after.substr(q + 1);

    std::vector<QueryParam> params;
    std::size_t pos = 0;
    while (pos <= query.size() && !query.empty()) {
        std::size_t amp = query.find('&', pos);
        if (amp == std::string_view::npos) amp = query.size();
        const std::string_view raw = query.substr(pos, amp - pos);
        if (!raw.empty()) {
            const std::string_view key = raw.substr(0, raw.find('='));
            const bool tracking = std::any_of(options.tracking_prefixes.begin(), options.tracking_prefixes.end(),
                                              [&](const std::string& p) { return text::starts_with_ci(key, p); });
            if (!tracking) params.push_back({key, raw});
        }
        if (amp == query.size()) break;
        pos = amp + 1;
    }
    std::stable_sort(params.begin(), params.end(),
                     [](const QueryParam& a, const QueryParam& b) { return a.key < b.key; });

    std::string out = text::ascii_lower(scheme);
    out += "://";
    out += userinfo;
    out += text::ascii_lower(host);
    out += port;
    out += path;
    for (std::size_t i = 0; i < params.size(); ++i) {
        out += i == 0 ? '?' : '&';
        out += params[i].raw;
    }
    return out;
}

}  // namespace datamix::corpus
