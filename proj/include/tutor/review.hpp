#pragma once

#include "tutor/code_validation.hpp"
#include "tutor/exercise_bank.hpp"
#include "tutor/llm_gateway.hpp"
#include "tutor/outcome.hpp"
#include "tutor/profile.hpp"
#include "tutor/prompt.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tutor {

enum class RnpVerdict { NeedsReview, NoReviewNeeded };

class UnparseableVerdict : public Error {
public:
    explicit UnparseableVerdict(std::string raw);
    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

/// Inputs to the review prompts. `submitted_code` is already comment-stripped.
struct ReviewRequest {
    const Exercise& exercise;
    std::string_view submitted_code;
    const PromptProfile& profile;
};

/// Values for every `{{placeholder}}` the templates may use.
TemplateValues template_values(const ReviewRequest& req);

/// "Example 1 input:" / "Example 1 output:" pairs, each in a fenced block.
std::string format_io_examples(const Exercise& exercise);

Prompt render_rnp_prompt(const ReviewRequest& req);

/// Reads the leading word of the first non-empty line: yes or no, any case.
RnpVerdict parse_rnp_response(std::string_view raw);

Prompt render_rcg_prompt(const ReviewRequest& req);

struct FixLine {
    int line;  // 1-based, into the submitted code
    std::string hint;

    friend bool operator==(const FixLine&, const FixLine&) = default;
};

struct ParsedReview {
    std::string body_markdown;
    std::vector<FixLine> fix_lines;
    std::vector<std::string> dropped;  // annotations pointing outside the submission
};

/// Pulls `- line <n>: <hint>` bullets out of every heading containing
/// "Code to fix" and returns the remaining markdown as the body.
ParsedReview parse_review_response(std::string_view raw, std::string_view submitted_code);

inline constexpr std::string_view kWithheldText = "[code withheld — try it yourself]";
inline constexpr double kDefaultLeakThreshold = 0.6;

struct RedactionReport {
    bool leaked = false;
    int removed_blocks = 0;
    double max_similarity = 0.0;
};

struct RedactedText {
    std::string markdown;
    RedactionReport report;
};

/// Lexical tokens after comment stripping: identifier/number runs, string
/// literals (quote style normalized) and single punctuation characters.
std::vector<std::string> code_tokens(std::string_view code);

/// Jaccard similarity of token 3-gram sets. Sequences shorter than three
/// tokens contribute a single gram made of the whole sequence.
double leak_similarity(std::string_view code, std::string_view solution);

/// Contents of every fenced code block; an unclosed fence runs to the end.
std::vector<std::string> fenced_blocks(std::string_view markdown);

/// Replaces each fenced block whose similarity to `solution` is >= threshold
/// with kWithheldText.
RedactedText redact_solution_leak(std::string_view body, std::string_view solution, double threshold);

inline constexpr std::string_view kLooksGoodText =
    "Your code looks good! Nothing needs to be fixed for this exercise. Keep it up!";

struct ReviewComment {
    bool review_needed = true;  // false when the necessity check said no
    std::string body_markdown;
    std::vector<FixLine> fix_lines;
    int dropped_annotations = 0;
    RedactionReport redaction;
    LlmUsage usage;
};

struct ReviewOptions {
    double leak_threshold = kDefaultLeakThreshold;
    ValidatorConfig validator;
};

struct ReviewResult {
    std::variant<ReviewComment, EmptySubmission, RejectedSubmission> outcome;
    LlmUsage usage;  // over every model call made, 0 to 3
};

/// The improved review flow: empty check, comment strip, validation gate,
/// necessity check, comment generation, then parse and redact. Under the
/// initial profile the empty check and validation gate are skipped.
/// Gateway failures propagate as GatewayError tagged with the stage.
ReviewResult run_review_pipeline(const Exercise& exercise, std::string_view submitted_code_raw,
                                 const PromptProfile& profile, const Gateway& gateway,
                                 const ReviewOptions& options = {});

} // namespace tutor
