#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace datamix::corpus {

struct UrlOptions {
    std::vector<std::string> tracking_prefixes{"utm_"};
};

// Canonical form used for URL-level de-duplication: scheme and host
// lowercased, fragment dropped, tracking query parameters removed, remaining
// parameters stably sorted by key. Path is kept byte-for-byte.
//
// Raises Error "bad_url" naming the input when it is not an absolute
// scheme://authority URL.
std::string normalize_url(std::string_view url, const UrlOptions& options = {});

}  // namespace datamix::corpus
