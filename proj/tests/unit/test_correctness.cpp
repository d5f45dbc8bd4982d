#include "tutor/correctness.hpp"
#include "tutor/mock_provider.hpp"
#include "tutor/review.hpp"

#include "doctest.h"
#include "json.hpp"

using namespace tutor;
using nlohmann::json;

namespace {

Exercise sample_exercise()
{
    Exercise ex;
    ex.id = "sum";
    ex.title = "Sum of two numbers";
    ex.description = "Read two integers and print their sum.";
    ex.input_examples = {"3\n4", "10\n-2"};
    ex.output_examples = {"7", "8"};
    ex.solution = "a = int(input())\nb = int(input())\nprint(a + b)";
    return ex;
}

struct Rig {
    std::shared_ptr<MockProvider> provider;
    Gateway gateway;

    explicit Rig(const json& script)
        : provider(std::make_shared<MockProvider>(parse_mock_script(script))),
          gateway(provider, "gpt-4", RetryPolicy{2, std::chrono::milliseconds(0)})
    {
    }
};

std::size_t count(const std::string& haystack, const std::string& needle)
{
    std::size_t n = 0;
    for (auto at = haystack.find(needle); at != std::string::npos; at = haystack.find(needle, at + 1)) {
        ++n;
    }
    return n;
}

const PromptProfile& improved()
{
    static const auto p = builtin_profile(ProfileName::Improved);
    return p;
}

const PromptProfile& initial()
{
    static const auto p = builtin_profile(ProfileName::Initial);
    return p;
}

} // namespace

TEST_CASE("render_judge_prompt")
{
    const auto ex = sample_exercise();
    const auto p = render_judge_prompt(ex, "print(7)");
    for (std::size_t i = 0; i < ex.input_examples.size(); ++i) {
        CHECK(p.user.find(ex.input_examples[i]) != std::string::npos);
        CHECK(p.user.find(ex.output_examples[i]) != std::string::npos);
    }
    CHECK(p.user.find(ex.description) != std::string::npos);
    CHECK(p.user.find(ex.solution) != std::string::npos);
    CHECK(p.user.find("```python\nprint(7)\n```") != std::string::npos);
    for (const char* v : {"VERDICT: CORRECT", "VERDICT: WRONG", "VERDICT: ERROR"}) {
        CHECK(p.user.find(v) != std::string::npos);
    }
    for (auto t : kAllErrorTypes) {
        CHECK(count(p.user, std::string(to_string(t))) == 1);
    }
    CHECK(p.user.find("Single-quoted and double-quoted strings are equivalent") != std::string::npos);
    CHECK(render_judge_prompt(ex, "print(7)").text() == p.text());
}

TEST_CASE("parse_judge_response documented examples")
{
    CHECK(parse_judge_response("VERDICT: CORRECT").state == JudgeState::Correct);
    const auto v = parse_judge_response("VERDICT: WRONG\nTYPE: HardCoding\nOutput is pasted from the example.");
    CHECK(v.state == JudgeState::Wrong);
    CHECK(v.error_type == ErrorType::HardCoding);
    CHECK(v.reason == "Output is pasted from the example.");
    CHECK_THROWS_AS(parse_judge_response("The code is great!"), UnparseableVerdict);
}

TEST_CASE("parse_judge_response tolerances")
{
    CHECK(parse_judge_response("\n**Verdict: error**\nIt does not run.").state == JudgeState::Error);
    CHECK(parse_judge_response("VERDICT: WRONG\nTYPE: computation error").error_type == ErrorType::ComputationError);
    CHECK_FALSE(parse_judge_response("VERDICT: WRONG\nTYPE: Vibes\nbad").error_type.has_value());
    CHECK_FALSE(parse_judge_response("VERDICT: CORRECT\nTYPE: HardCoding").error_type.has_value());
    CHECK_THROWS_AS(parse_judge_response(""), UnparseableVerdict);
    CHECK_THROWS_AS(parse_judge_response("VERDICT: MAYBE"), UnparseableVerdict);
}

TEST_CASE("parse of a rendered verdict is the identity on (state, error_type)")
{
    int combos = 0;
    for (auto state : {JudgeState::Correct, JudgeState::Wrong, JudgeState::Error}) {
        std::vector<std::optional<ErrorType>> types{std::nullopt};
        types.insert(types.end(), kAllErrorTypes.begin(), kAllErrorTypes.end());
        for (const auto& type : types) {
            ++combos;
            std::string raw = "VERDICT: " + [&] {
                std::string s(to_string(state));
                for (auto& c : s) {
                    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
                }
                return s;
            }();
            if (type) {
                raw += "\nTYPE: " + std::string(to_string(*type));
            }
            raw += "\nBecause.";
            const auto v = parse_judge_response(raw);
            CHECK(v.state == state);
            // Correct never carries a type, so it normalizes to none.
            CHECK(v.error_type == (state == JudgeState::Correct ? std::nullopt : type));
            CHECK(v.reason == "Because.");
        }
    }
    CHECK(combos == 15);
}

TEST_CASE("submission flow")
{
    const auto ex = sample_exercise();
    SUBCASE("unbalanced paren under improved: report, no calls")
    {
        Rig rig(json{{"default", "VERDICT: CORRECT"}});
        const auto r = run_submission_flow(ex, "print((1)", improved(), rig.gateway);
        REQUIRE(std::holds_alternative<RejectedSubmission>(r.outcome));
        CHECK(std::get<RejectedSubmission>(r.outcome).report.findings.at(0).kind ==
              ValidationErrorKind::UnbalancedDelimiter);
        CHECK(rig.provider->call_count() == 0);
    }
    SUBCASE("empty under improved: no calls; under initial: the judge is asked")
    {
        Rig rig(json{{"default", "VERDICT: ERROR\nNothing to run."}});
        CHECK(std::holds_alternative<EmptySubmission>(run_submission_flow(ex, " \n", improved(), rig.gateway).outcome));
        CHECK(rig.provider->call_count() == 0);
        const auto r = run_submission_flow(ex, " \n", initial(), rig.gateway);
        CHECK(std::get<CorrectnessVerdict>(r.outcome).state == JudgeState::Error);
        CHECK(rig.provider->call_count() == 1);
    }
    SUBCASE("valid code judged correct with one call")
    {
        Rig rig(json{{"default", "VERDICT: CORRECT"}});
        const auto r = run_submission_flow(ex, ex.solution, improved(), rig.gateway);
        CHECK(std::get<CorrectnessVerdict>(r.outcome).state == JudgeState::Correct);
        CHECK(rig.provider->call_count() == 1);
        CHECK(r.usage.call_count == 1);
    }
    SUBCASE("garbage twice becomes an Error verdict")
    {
        Rig rig(json{{"sequence", {"I think so", "lgtm"}}});
        const auto r = run_submission_flow(ex, ex.solution, improved(), rig.gateway);
        const auto& v = std::get<CorrectnessVerdict>(r.outcome);
        CHECK(v.state == JudgeState::Error);
        CHECK(v.reason == "judge response unparseable");
        CHECK(rig.provider->call_count() == 2);
    }
    SUBCASE("comments reach the judge only under the initial flow")
    {
        Rig rig(json{{"default", "VERDICT: CORRECT"}});
        run_submission_flow(ex, ex.solution + "  # secret note", improved(), rig.gateway);
        run_submission_flow(ex, ex.solution + "  # secret note", initial(), rig.gateway);
        const auto calls = rig.provider->calls();
        REQUIRE(calls.size() == 2);
        CHECK(calls[0].request.user_text.find("secret note") == std::string::npos);
        CHECK(calls[1].request.user_text.find("secret note") != std::string::npos);
    }
    SUBCASE("solution quoted back by the judge is withheld")
    {
        Rig rig(json{{"default", "VERDICT: WRONG\nTYPE: ComputationError\nUse this:\n```python\n" + ex.solution + "\n```"}});
        const auto r = run_submission_flow(ex, "a = int(input())\nb = int(input())\nprint(a - b)", improved(),
                                           rig.gateway);
        const auto& v = std::get<CorrectnessVerdict>(r.outcome);
        CHECK(v.error_type == ErrorType::ComputationError);
        for (const auto& block : fenced_blocks(v.reason)) {
            CHECK(leak_similarity(block, ex.solution) < 0.6);
        }
        CHECK(v.reason.find("print(a + b)") == std::string::npos);
    }
    SUBCASE("gateway failure names the judge stage")
    {
        Rig rig(json{{"default", {{"text", "x"}, {"fail", "Protocol"}, {"fail_times", 9}}}});
        try {
            run_submission_flow(ex, ex.solution, improved(), rig.gateway);
            FAIL("expected GatewayError");
        } catch (const GatewayError& e) {
            CHECK(e.stage() == "judge");
        }
    }
}

TEST_CASE("local test-case oracle")
{
    const auto ex = sample_exercise();
    const auto pass = run_test_case_oracle(ex, ex.solution, "python3", 10);
    CHECK(pass.cases == 2);
    CHECK(pass.passed == 2);

    const auto wrong = run_test_case_oracle(ex, "a = int(input())\nb = int(input())\nprint(a - b)", "python3", 10);
    CHECK(wrong.passed == 0);

    // Hard-coded output passes only the example it copied.
    const auto hard = run_test_case_oracle(ex, "print(7)", "python3", 10);
    CHECK(hard.passed == 1);

    const auto hangs = run_test_case_oracle(ex, "while True:\n    pass", "python3", 1);
    CHECK(hangs.passed == 0);

    // Quote style of the source does not matter, only what it prints.
    Exercise hello = ex;
    hello.input_examples = {"Ann"};
    hello.output_examples = {"Hello, Ann!"};
    CHECK(run_test_case_oracle(hello, "print('Hello, ' + input() + '!')", "python3", 10).passed == 1);
}

TEST_CASE("oracle disagreement is logged but the judge wins")
{
    const auto ex = sample_exercise();
    Rig rig(json{{"default", "VERDICT: CORRECT"}});
    SubmissionOptions options;
    options.oracle_python_cmd = "python3";
    std::vector<std::string> log;
    options.log = [&](std::string_view line) { log.emplace_back(line); };

    const auto r = run_submission_flow(ex, "print(7)", improved(), rig.gateway, options);
    CHECK(std::get<CorrectnessVerdict>(r.outcome).state == JudgeState::Correct);
    REQUIRE(r.oracle.has_value());
    CHECK_FALSE(r.oracle->agrees);
    CHECK(log.size() == 1);

    log.clear();
    const auto ok = run_submission_flow(ex, ex.solution, improved(), rig.gateway, options);
    CHECK(ok.oracle->agrees);
    CHECK(log.empty());
}

TEST_CASE("error type names")
{
    for (auto t : kAllErrorTypes) {
        CHECK(parse_error_type(to_string(t)) == t);
    }
    CHECK(parse_error_type("hard-coding") == ErrorType::HardCoding);
    CHECK(parse_error_type("Requirement not met") == ErrorType::RequirementNotMet);
    CHECK_FALSE(parse_error_type("Typo").has_value());
    CHECK(parse_judge_state("wrong") == JudgeState::Wrong);
}
