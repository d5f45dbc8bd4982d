#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tutor {

enum class ValidationErrorKind {
    EmptySource,
    UnbalancedDelimiter,
    UnterminatedString,
    MissingColon,
    BadIndentation,
};

std::string_view to_string(ValidationErrorKind kind);
std::optional<ValidationErrorKind> parse_validation_error_kind(std::string_view name);

struct ValidationFinding {
    ValidationErrorKind kind;
    int line;  // 1-based
    std::string message;

    friend bool operator==(const ValidationFinding&, const ValidationFinding&) = default;
};

/// Structural verdict on learner source. The verdict is Valid exactly when
/// there are no findings, so it is derived rather than stored.
struct ValidationReport {
    std::vector<ValidationFinding> findings;

    bool valid() const { return findings.empty(); }
};

struct ValidatorConfig {
    /// Shell command that receives the source on stdin. Exit status 0 means
    /// valid; anything else yields a single finding built from the first
    /// output line. Unset means the built-in structural check is used.
    std::optional<std::string> external_cmd;
};

/// Removes `#` comments that are outside string literals, trims the trailing
/// whitespace they leave behind and drops lines that become blank. Lines that
/// were already blank are kept.
std::string strip_comments(std::string_view source);

/// Cheap structural check run before any model call. It approximates the
/// Python grammar: delimiters, string termination, block-header colons and
/// indentation consistency. Findings are ordered by line.
ValidationReport validate_source(std::string_view source);

ValidationReport validate_source(std::string_view source, const ValidatorConfig& config);

/// Maps one line of interpreter output (e.g. a SyntaxError message) to a
/// finding kind. Exposed for the external-command path and its tests.
ValidationErrorKind classify_external_message(std::string_view line);

} // namespace tutor
