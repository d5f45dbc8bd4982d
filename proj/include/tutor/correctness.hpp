#pragma once

#include "tutor/code_validation.hpp"
#include "tutor/error_type.hpp"
#include "tutor/exercise_bank.hpp"
#include "tutor/llm_gateway.hpp"
#include "tutor/outcome.hpp"
#include "tutor/profile.hpp"
#include "tutor/prompt.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace tutor {

/// Correct: runs and meets every requirement. Wrong: runs but gives a wrong
/// answer or breaks a strictness rule. Error: would not run.
enum class JudgeState { Correct, Wrong, Error };

std::string_view to_string(JudgeState state);
std::optional<JudgeState> parse_judge_state(std::string_view name);

struct CorrectnessVerdict {
    JudgeState state = JudgeState::Error;
    std::string reason;
    std::optional<ErrorType> error_type;  // never set when state is Correct

    friend bool operator==(const CorrectnessVerdict&, const CorrectnessVerdict&) = default;
};

inline constexpr std::string_view kUnparseableJudgeReason = "judge response unparseable";

/// Judge prompt: the model plays the interpreter, runs the submission against
/// every example and applies the four strictness rules.
Prompt render_judge_prompt(const Exercise& exercise, std::string_view submitted_code);

/// First non-empty line must be `VERDICT: CORRECT|WRONG|ERROR` (any case).
/// An optional `TYPE: <name>` line fills error_type; other lines form the reason.
/// Throws UnparseableVerdict.
CorrectnessVerdict parse_judge_response(std::string_view raw);

struct OracleReport {
    int cases = 0;
    int passed = 0;
    bool agrees = true;  // local run and judge reach the same pass/fail
};

struct SubmissionOptions {
    ValidatorConfig validator;
    /// Interpreter command for the local test-case cross-check; disabled when unset.
    std::optional<std::string> oracle_python_cmd;
    int oracle_timeout_seconds = 10;
    double leak_threshold = 0.6;
    std::function<void(std::string_view)> log;
};

struct SubmissionResult {
    std::variant<CorrectnessVerdict, EmptySubmission, RejectedSubmission> outcome;
    LlmUsage usage;
    std::optional<OracleReport> oracle;
};

/// Runs `source` once per I/O example with `python_cmd` and compares stdout to
/// the expected output after trailing-whitespace normalization.
OracleReport run_test_case_oracle(const Exercise& exercise, std::string_view source,
                                  const std::string& python_cmd, int timeout_seconds);

/// Improved profile: empty check, comment strip, validation gate, one judge
/// call. Initial profile: straight to the judge with the raw code. An
/// unparseable judge answer is retried once and then reported as Error.
SubmissionResult run_submission_flow(const Exercise& exercise, std::string_view submitted_code_raw,
                                     const PromptProfile& profile, const Gateway& gateway,
                                     const SubmissionOptions& options = {});

} // namespace tutor
