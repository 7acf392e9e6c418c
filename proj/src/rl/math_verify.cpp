#include "datamix/rl/math_verify.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "datamix/common/error.hpp"
#include "datamix/common/text.hpp"

namespace datamix::rl {

std::string_view verdict_name(MathVerdict v) {
    switch (v) {
        case MathVerdict::correct: return "correct";
        case MathVerdict::incorrect: return "incorrect";
        case MathVerdict::no_answer: return "no_answer";
    }
    return "unknown";
}

BoxedExtraction extract_last_boxed(std::string_view response) {
    static constexpr std::string_view tag = "\\boxed{";
    BoxedExtraction out;
    const std::size_t start = response.rfind(tag);
    if (start == std::string_view::npos) return out;
    std::size_t depth = 1;
    const std::size_t body = start + tag.size();
    for (std::size_t i = body; i < response.size(); ++i) {
        const char c = response[i];
        if (c == '\\' && i + 1 < response.size() && (response[i + 1] == '{' || response[i + 1] == '}')) {
            ++i;  // escaped brace
            continue;
        }
        if (c == '{') {
            ++depth;
        } else if (c == '}' && --depth == 0) {
            out.content = std::string(response.substr(body, i - body));
            return out;
        }
    }
    out.unbalanced = true;
    return out;
}

std::string normalize_answer(std::string_view answer) {
    std::string s;
    s.reserve(answer.size());
    for (char c : answer) {
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    }
    for (std::string_view cmd : {"\\left", "\\right"}) {
        for (std::size_t pos; (pos = s.find(cmd)) != std::string::npos;) s.erase(pos, cmd.size());
    }
    while (s.size() >= 2 && s.front() == '$' && s.back() == '$') s = s.substr(1, s.size() - 2);
    return text::ascii_lower(s);
}

namespace {

std::optional<double> parse_decimal(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    if (s.empty() || !(std::isdigit(static_cast<unsigned char>(s.front())) || s.front() == '.' || s.front() == '-')) {
        return std::nullopt;  // rules out "inf", "nan" and hex forms
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::general);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<double> ratio(std::string_view num, std::string_view den) {
    auto n = parse_decimal(num);
    auto d = parse_decimal(den);
    if (!n || !d || *d == 0.0) return std::nullopt;
    return *n / *d;
}

// "{a}{b}" -> (a, b)
bool split_two_groups(std::string_view s, std::string_view& a, std::string_view& b) {
    if (s.size() < 4 || s.front() != '{' || s.back() != '}') return false;
    const std::size_t mid = s.find("}{");
    if (mid == std::string_view::npos || s.find("}{", mid + 1) != std::string_view::npos) return false;
    a = s.substr(1, mid - 1);
    b = s.substr(mid + 2, s.size() - mid - 3);
    return a.find_first_of("{}") == std::string_view::npos && b.find_first_of("{}") == std::string_view::npos;
}

}  // namespace

std::optional<double> parse_numeric(std::string_view answer) {
    const std::string norm = normalize_answer(answer);
    std::string_view s = norm;
    if (auto v = parse_decimal(s)) return v;

    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    std::optional<double> v;
    for (std::string_view cmd : {"\\frac", "\\dfrac", "\\tfrac"}) {
        if (s.substr(0, cmd.size()) == cmd) {
            std::string_view a, b;
            if (split_two_groups(s.substr(cmd.size()), a, b)) v = ratio(a, b);
            break;
        }
    }
    if (!v) {
        const std::size_t slash = s.find('/');
        if (slash != std::string_view::npos && s.find('/', slash + 1) == std::string_view::npos) {
            v = ratio(s.substr(0, slash), s.substr(slash + 1));
        }
    }
    if (!v) return std::nullopt;
    return negative ? -*v : *v;
}

bool answers_equivalent(std::string_view a, std::string_view b) {
    const auto na = parse_numeric(a);
    const auto nb = parse_numeric(b);
    if (na && nb) {
        const double scale = std::max(std::abs(*na), std::abs(*nb));
        return std::abs(*na - *nb) <= 1e-6 * scale;
    }
    return normalize_answer(a) == normalize_answer(b);
}

MathCheck verify_boxed_answer(std::string_view response, std::string_view reference) {
    if (text::trim(reference).empty()) throw ValidationError("reference", "must be non-empty");
    MathCheck check;
    const BoxedExtraction got = extract_last_boxed(response);
    check.unbalanced = got.unbalanced;
    if (!got.content) return check;
    check.extracted = got.content;

    std::string ref(reference);
    if (auto boxed = extract_last_boxed(reference); boxed.content) ref = *boxed.content;
    check.verdict = answers_equivalent(*got.content, ref) ? MathVerdict::correct : MathVerdict::incorrect;
    return check;
}

}  // namespace datamix::rl
