#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace datamix::rl {

enum class MathVerdict { correct, incorrect, no_answer };

std::string_view verdict_name(MathVerdict v);

struct BoxedExtraction {
    std::optional<std::string> content;
    bool unbalanced = false;
};

// Content of the last \boxed{...} using balanced-brace matching.
BoxedExtraction extract_last_boxed(std::string_view response);

// Normalized answer text: whitespace removed, outer $ stripped, \left and
// \right dropped, ASCII lowercased.
std::string normalize_answer(std::string_view answer);

// Decimal, scientific, a/b and \frac{a}{b} forms (after normalization).
std::optional<double> parse_numeric(std::string_view answer);

// Numeric equality within relative 1e-6 when both sides parse, normalized
// string equality otherwise. Symmetric.
bool answers_equivalent(std::string_view a, std::string_view b);

struct MathCheck {
    MathVerdict verdict = MathVerdict::no_answer;
    std::optional<std::string> extracted;
    bool unbalanced = false;
};

// Raises ValidationError when the reference is empty. A reference that
// itself contains \boxed{} is compared by its boxed content.
MathCheck verify_boxed_answer(std::string_view response, std::string_view reference);

}  // namespace datamix::rl
