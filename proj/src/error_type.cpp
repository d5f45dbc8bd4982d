#include "tutor/error_type.hpp"

#include <cctype>
#include <string>

namespace tutor {

std::string_view to_string(ErrorType type)
{
    switch (type) {
    case ErrorType::UnnecessaryCode: return "UnnecessaryCode";
    case ErrorType::RequirementNotMet: return "RequirementNotMet";
    case ErrorType::HardCoding: return "HardCoding";
    case ErrorType::ComputationError: return "ComputationError";
    }
    return "?";
}

namespace {

std::string squash(std::string_view text)
{
    std::string out;
    for (char c : text) {
        if (c == ' ' || c == '_' || c == '-') {
            continue;
        }
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

} // namespace

std::optional<ErrorType> parse_error_type(std::string_view text)
{
    const std::string key = squash(text);
    for (auto type : kAllErrorTypes) {
        if (squash(to_string(type)) == key) {
            return type;
        }
    }
    return std::nullopt;
}

} // namespace tutor
