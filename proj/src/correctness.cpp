#include "tutor/correctness.hpp"

#include "process.hpp"
#include "text.hpp"
#include "tutor/review.hpp"

#include <regex>

namespace tutor {

std::string_view to_string(JudgeState state)
{
    switch (state) {
    case JudgeState::Correct: return "Correct";
    case JudgeState::Wrong: return "Wrong";
    case JudgeState::Error: return "Error";
    }
    return "?";
}

std::optional<JudgeState> parse_judge_state(std::string_view name)
{
    const auto lower = text::to_lower(name);
    for (auto state : {JudgeState::Correct, JudgeState::Wrong, JudgeState::Error}) {
        if (text::to_lower(to_string(state)) == lower) {
            return state;
        }
    }
    return std::nullopt;
}

namespace {

constexpr std::string_view kJudgeSystem =
    "You are the compiler and grader of an online judge for an introductory Python course. "
    "You never help the student write code; you only judge it.";

constexpr std::string_view kJudgeTemplate =
    "## Correctness check\n\n"
    "### Exercise\n{{exercise_description}}\n\n"
    "### Examples\n{{io_examples}}\n\n"
    "### Instructor solution\n```python\n{{solution}}\n```\n\n"
    "### Submitted code\n```python\n{{submitted_code}}\n```\n\n"
    "### How to judge\n"
    "Act as the Python interpreter: run the submitted code on each example input and compare what it prints "
    "with the expected output.\n"
    "Be strict. Fail the submission for UnnecessaryCode (statements that do not contribute to the result), "
    "RequirementNotMet (part of the requirements is ignored, such as reading the input or the output format), "
    "HardCoding (expected outputs are printed as literals instead of being computed) or ComputationError "
    "(a value is computed wrongly), even when the printed output happens to match the examples.\n"
    "Single-quoted and double-quoted strings are equivalent.\n"
    "Reply with a first line that is exactly one of:\n"
    "VERDICT: CORRECT\n"
    "VERDICT: WRONG\n"
    "VERDICT: ERROR\n"
    "Use ERROR when the code would not run. After WRONG or ERROR add a line `TYPE: <name>` using one of the "
    "error names above when one applies, then one sentence explaining why. Never include corrected code.";

const std::regex& verdict_pattern()
{
    static const std::regex pattern(R"(^[^A-Za-z]*verdict\s*:\s*[*_`]*\s*(correct|wrong|error)\b.*$)",
                                    std::regex::icase);
    return pattern;
}

const std::regex& type_pattern()
{
    static const std::regex pattern(R"(^[^A-Za-z]*type\s*:\s*[*_`]*\s*([A-Za-z _-]+?)[*_`.\s]*$)",
                                    std::regex::icase);
    return pattern;
}

} // namespace

Prompt render_judge_prompt(const Exercise& exercise, std::string_view submitted_code)
{
    const TemplateValues values{
        {"exercise_description", exercise.description},
        {"io_examples", format_io_examples(exercise)},
        {"solution", exercise.solution},
        {"submitted_code", std::string(submitted_code)},
    };
    return Prompt{std::string(kJudgeSystem), render_template(kJudgeTemplate, values)};
}

CorrectnessVerdict parse_judge_response(std::string_view raw)
{
    const auto lines = text::split_lines(raw);
    std::size_t i = 0;
    while (i < lines.size() && text::trim(lines[i]).empty()) {
        ++i;
    }
    if (i == lines.size()) {
        throw UnparseableVerdict(std::string(raw));
    }
    const std::string first(text::trim(lines[i]));
    std::smatch m;
    if (!std::regex_match(first, m, verdict_pattern())) {
        throw UnparseableVerdict(std::string(raw));
    }
    CorrectnessVerdict verdict;
    verdict.state = *parse_judge_state(m[1].str());

    std::vector<std::string> reason;
    for (++i; i < lines.size(); ++i) {
        const std::string line(text::rtrim(lines[i]));
        if (line.empty() && reason.empty()) {
            continue;
        }
        std::smatch t;
        const std::string trimmed(text::trim(line));
        if (!verdict.error_type && reason.empty() && std::regex_match(trimmed, t, type_pattern())) {
            if (auto type = parse_error_type(text::trim(t[1].str()))) {
                verdict.error_type = type;
                continue;
            }
        }
        reason.push_back(line);
    }
    while (!reason.empty() && reason.back().empty()) {
        reason.pop_back();
    }
    // Newlines are kept so fenced code in the reason stays redactable.
    verdict.reason = text::join(reason, "\n");
    if (verdict.state == JudgeState::Correct) {
        verdict.error_type.reset();
    }
    return verdict;
}

namespace {

std::string normalize_output(std::string_view out)
{
    std::vector<std::string> lines;
    for (auto line : text::split_lines(out)) {
        lines.emplace_back(text::rtrim(line));
    }
    while (!lines.empty() && lines.back().empty()) {
        lines.pop_back();
    }
    return text::join(lines, "\n");
}

} // namespace

OracleReport run_test_case_oracle(const Exercise& exercise, std::string_view source,
                                  const std::string& python_cmd, int timeout_seconds)
{
    const detail::TempFile program(source, ".py");
    const std::string command = "timeout " + std::to_string(timeout_seconds) + " " + python_cmd + " " +
                                detail::shell_quote(program.path().string());
    OracleReport report;
    for (std::size_t i = 0; i < exercise.input_examples.size(); ++i) {
        const auto run = detail::run_command(command, exercise.input_examples[i]);
        ++report.cases;
        if (run.exit_code == 0 && normalize_output(run.output) == normalize_output(exercise.output_examples[i])) {
            ++report.passed;
        }
    }
    return report;
}

SubmissionResult run_submission_flow(const Exercise& exercise, std::string_view submitted_code_raw,
                                     const PromptProfile& profile, const Gateway& gateway,
                                     const SubmissionOptions& options)
{
    SubmissionResult result{EmptySubmission{}, {}, std::nullopt};
    std::string code(submitted_code_raw);
    if (profile.gates_submissions()) {
        code = strip_comments(submitted_code_raw);
        if (text::trim(code).empty()) {
            return result;
        }
        auto report = validate_source(code, options.validator);
        if (!report.valid()) {
            result.outcome = RejectedSubmission{std::move(report)};
            return result;
        }
    }

    const auto prompt = render_judge_prompt(exercise, code);
    LlmRequest req;
    req.system_text = prompt.system;
    req.user_text = prompt.user;
    req.max_output_tokens = profile.max_output_tokens;
    req.temperature = profile.temperature;
    req.top_p = profile.top_p;
    req.model_id = gateway.model_id();

    std::optional<CorrectnessVerdict> verdict;
    for (int attempt = 0; attempt < 2 && !verdict; ++attempt) {
        LlmResponse response;
        try {
            response = gateway.send(req);
        } catch (const GatewayError& e) {
            throw e.with_stage("judge");
        }
        result.usage += response.usage;
        try {
            verdict = parse_judge_response(response.text);
        } catch (const UnparseableVerdict&) {
        }
    }
    if (!verdict) {
        verdict = CorrectnessVerdict{JudgeState::Error, std::string(kUnparseableJudgeReason), std::nullopt};
    }
    // The judge sees the solution; never let it flow back to the learner.
    verdict->reason = redact_solution_leak(verdict->reason, exercise.solution, options.leak_threshold).markdown;

    if (options.oracle_python_cmd) {
        auto oracle = run_test_case_oracle(exercise, code, *options.oracle_python_cmd, options.oracle_timeout_seconds);
        const bool local_pass = oracle.passed == oracle.cases;
        oracle.agrees = local_pass == (verdict->state == JudgeState::Correct);
        if (!oracle.agrees && options.log) {
            options.log("oracle disagreement on exercise '" + exercise.id + "': judge said " +
                        std::string(to_string(verdict->state)) + ", local run passed " +
                        std::to_string(oracle.passed) + "/" + std::to_string(oracle.cases));
        }
        result.oracle = oracle;
    }
    result.outcome = std::move(*verdict);
    return result;
}

} // namespace tutor
