#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace tutor {

/// Category of learner mistake the correctness judge is expected to catch.
enum class ErrorType {
    UnnecessaryCode,
    RequirementNotMet,
    HardCoding,
    ComputationError,
};

inline constexpr std::array<ErrorType, 4> kAllErrorTypes{
    ErrorType::UnnecessaryCode,
    ErrorType::RequirementNotMet,
    ErrorType::HardCoding,
    ErrorType::ComputationError,
};

std::string_view to_string(ErrorType type);

/// Accepts the canonical name case-insensitively; spaces, '_' and '-' are ignored
/// so "hard coding" and "HARD_CODING" both map to HardCoding.
std::optional<ErrorType> parse_error_type(std::string_view text);

} // namespace tutor
