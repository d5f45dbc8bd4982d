#include "tutor/mock_provider.hpp"
#include "tutor/profile.hpp"
#include "tutor/review.hpp"

#include "doctest.h"
#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

using namespace tutor;
using nlohmann::json;
namespace fs = std::filesystem;

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
    ex.category_path = {"basics"};
    return ex;
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

struct Rig {
    std::shared_ptr<MockProvider> provider;
    Gateway gateway;

    explicit Rig(const json& script)
        : provider(std::make_shared<MockProvider>(parse_mock_script(script))),
          gateway(provider, "gpt-4", RetryPolicy{2, std::chrono::milliseconds(0)})
    {
    }
};

json rnp_rcg(const std::string& rnp, const std::string& rcg)
{
    return json{{"rules",
                 {{{"contains", "Answer with exactly one word: yes or no."}, {"text", rnp}},
                  {{"contains", "## Restriction"}, {"text", rcg}, {"input_tokens", 100}, {"output_tokens", 40}}}}};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_CASE("builtin profiles carry the declared constants")
{
    CHECK(initial().max_output_tokens == 1024);
    CHECK(initial().temperature == 0.7);
    CHECK(initial().top_p == 1.0);
    CHECK_FALSE(initial().max_sentences.has_value());
    CHECK(improved().max_output_tokens == 512);
    CHECK(improved().temperature == 0.2);
    CHECK(improved().top_p == 0.9);
    CHECK(improved().max_sentences == 8);
    CHECK(improved().max_output_tokens <= initial().max_output_tokens);
    for (const auto* p : {&initial(), &improved()}) {
        CHECK_NOTHROW(check_profile(*p));
        REQUIRE(p->rcg_sections.size() == 7);
        for (std::size_t i = 0; i < 7; ++i) {
            CHECK(p->rcg_sections[i].first == kRcgSectionOrder[i]);
        }
    }
    CHECK_THROWS_AS(builtin_profile(ProfileName::Improved, Locale::Ko), ProfileError);
}

TEST_CASE("shipped profile files match the builtins")
{
    CHECK(load_profile(fs::path(TUTOR_DATA_DIR) / "profiles" / "initial.json") == initial());
    CHECK(load_profile(fs::path(TUTOR_DATA_DIR) / "profiles" / "improved.json") == improved());
    CHECK(resolve_profile("improved") == improved());
    CHECK(resolve_profile((fs::path(TUTOR_DATA_DIR) / "profiles" / "initial.json").string()) == initial());
    CHECK(parse_profile(json::parse(profile_to_json(improved()).dump())) == improved());
}

TEST_CASE("profile validation")
{
    auto doc = json::parse(profile_to_json(improved()).dump());
    auto broken = doc;
    broken["temperature"] = 3.0;
    CHECK_THROWS_AS(parse_profile(broken), ProfileError);
    broken = doc;
    broken["top_p"] = 0.0;
    CHECK_THROWS_AS(parse_profile(broken), ProfileError);
    broken = doc;
    broken["max_output_tokens"] = 0;
    CHECK_THROWS_AS(parse_profile(broken), ProfileError);
    broken = doc;
    std::swap(broken["rcg_sections"][0], broken["rcg_sections"][1]);
    CHECK_THROWS_AS(parse_profile(broken), ProfileError);
    broken = doc;
    broken["rcg_sections"].erase(6);
    CHECK_THROWS_AS(parse_profile(broken), ProfileError);
    broken = doc;
    broken["name"] = "fancy";
    CHECK_THROWS_AS(parse_profile(broken), ProfileError);
    CHECK_THROWS_AS(resolve_profile("/nonexistent/profile.json"), Error);
}

TEST_CASE("render_template")
{
    const TemplateValues v{{"a", "1"}, {"b", "{{a}}"}};
    CHECK(render_template("x={{a}} y={{ a }}", v) == "x=1 y=1");
    CHECK(render_template("{{b}}", v) == "{{a}}");  // substituted text is not rescanned
    CHECK(render_template("no placeholders", v) == "no placeholders");
    try {
        render_template("hello {{foo}}", v);
        FAIL("expected PlaceholderUnresolved");
    } catch (const PlaceholderUnresolved& e) {
        CHECK(e.name() == "foo");
    }
}

TEST_CASE("render_rnp_prompt")
{
    auto ex = sample_exercise();
    ex.description = "Minimal.";
    const ReviewRequest req{ex, "x=1", improved()};
    const auto p = render_rnp_prompt(req);
    CHECK(p.system == improved().role_text);
    CHECK(p.text().find(improved().role_text) != std::string::npos);
    CHECK(p.user.find("Minimal.") != std::string::npos);
    CHECK(p.user.find("```python\nx=1\n```") != std::string::npos);
    CHECK(p.user.find("yes or no") != std::string::npos);
    CHECK(render_rnp_prompt(req).user == p.user);

    auto custom = improved();
    custom.rnp_template = "Check {{foo}}";
    CHECK_THROWS_AS(render_rnp_prompt(ReviewRequest{ex, "x=1", custom}), PlaceholderUnresolved);
}

TEST_CASE("parse_rnp_response")
{
    CHECK(parse_rnp_response("yes") == RnpVerdict::NeedsReview);
    CHECK(parse_rnp_response("No.") == RnpVerdict::NoReviewNeeded);
    CHECK(parse_rnp_response("\n  **YES**, because") == RnpVerdict::NeedsReview);
    CHECK_THROWS_AS(parse_rnp_response("maybe"), UnparseableVerdict);
    CHECK_THROWS_AS(parse_rnp_response("nope"), UnparseableVerdict);
    CHECK_THROWS_AS(parse_rnp_response(""), UnparseableVerdict);
}

TEST_CASE("render_rcg_prompt")
{
    const auto ex = sample_exercise();
    const std::string code = "a = int(input())\nb = int(input())\nprint(a - b)";
    for (const auto* profile : {&initial(), &improved()}) {
        const auto p = render_rcg_prompt(ReviewRequest{ex, code, *profile});
        std::size_t last = 0;
        for (auto section : kRcgSectionOrder) {
            const auto at = p.user.find("## " + std::string(section_label(section)) + "\n");
            REQUIRE(at != std::string::npos);
            CHECK(at >= last);
            last = at;
        }
        CHECK(p.user.find("```python\n" + code + "\n```") != std::string::npos);
        CHECK(p.user.find("```python\n" + ex.solution + "\n```") != std::string::npos);
        CHECK(p.user.find("### Code to fix") != std::string::npos);
        CHECK(p.user.find("`- line <n>: <") != std::string::npos);
        CHECK(render_rcg_prompt(ReviewRequest{ex, code, *profile}).text() == p.text());
    }
    const auto improved_render = render_rcg_prompt(ReviewRequest{ex, code, improved()}).text();
    CHECK(improved_render.find("at most 8 sentences") != std::string::npos);
    CHECK(improved_render.size() <= render_rcg_prompt(ReviewRequest{ex, code, initial()}).text().size());
}

TEST_CASE("parse_review_response documented examples")
{
    const std::string five = "a\nb\nc\nd\ne";
    const auto r = parse_review_response("Nice try!\n### Code to fix\n- line 3: loop bound off by one", five);
    CHECK(r.fix_lines == std::vector<FixLine>{{3, "loop bound off by one"}});
    CHECK(r.body_markdown == "Nice try!");
    CHECK(r.dropped.empty());

    const auto none = parse_review_response("Looks fine overall.", five);
    CHECK(none.fix_lines.empty());
    CHECK(none.body_markdown == "Looks fine overall.");

    const auto out = parse_review_response("### Code to fix\n- line 9: nope", "a\nb\nc\nd");
    CHECK(out.fix_lines.empty());
    CHECK(out.dropped.size() == 1);
}

TEST_CASE("parse_review_response keeps other sections and ignores fenced look-alikes")
{
    const std::string raw =
        "## Feedback\nGood.\n\n## code to fix\n- Line 1: rename x\n- line 2: add a colon\n\n## Next steps\nTry again.\n"
        "```\n### Code to fix\n- line 1: inside a fence\n```";
    const auto r = parse_review_response(raw, "x=1\nif x\n");
    CHECK(r.fix_lines == std::vector<FixLine>{{1, "rename x"}, {2, "add a colon"}});
    CHECK(r.body_markdown.find("Next steps") != std::string::npos);
    CHECK(r.body_markdown.find("inside a fence") != std::string::npos);
    CHECK(r.body_markdown.find("rename x") == std::string::npos);
}

TEST_CASE("annotation round-trip over randomized synthetic reviews")
{
    std::mt19937 rng(4242);
    const std::vector<std::string> words{"check", "the", "loop", "bound", "variable", "name", "input", "type", "+1"};
    for (int trial = 0; trial < 200; ++trial) {
        const int lines = std::uniform_int_distribution<int>(1, 40)(rng);
        std::string code;
        for (int i = 0; i < lines; ++i) {
            code += "x" + std::to_string(i) + " = " + std::to_string(i) + "\n";
        }
        std::set<std::pair<int, std::string>> expected;
        std::vector<std::pair<int, std::string>> bullets;
        for (int i = 1; i <= lines; ++i) {
            if (rng() % 3 == 0) {
                std::string hint;
                const int n = std::uniform_int_distribution<int>(1, 6)(rng);
                for (int w = 0; w < n; ++w) {
                    hint += (w ? " " : "") + words[rng() % words.size()];
                }
                expected.emplace(i, hint);
                bullets.emplace_back(i, hint);
            }
        }
        int out_of_bounds = 0;
        const int extra = std::uniform_int_distribution<int>(0, 3)(rng);
        for (int k = 0; k < extra; ++k) {
            bullets.emplace_back(rng() % 2 ? 0 : lines + 1 + static_cast<int>(rng() % 50), "stray");
            ++out_of_bounds;
        }
        std::shuffle(bullets.begin(), bullets.end(), rng);
        std::string raw = "Some prose about the code.\n\n### Code to fix\n";
        for (const auto& [line, hint] : bullets) {
            raw += "- line " + std::to_string(line) + ": " + hint + "\n";
        }
        const auto parsed = parse_review_response(raw, code);
        std::set<std::pair<int, std::string>> got;
        for (const auto& f : parsed.fix_lines) {
            got.emplace(f.line, f.hint);
        }
        CHECK(got == expected);
        CHECK(parsed.fix_lines.size() == expected.size());
        CHECK(static_cast<int>(parsed.dropped.size()) == out_of_bounds);
        CHECK(parsed.body_markdown == "Some prose about the code.");
    }
}

TEST_CASE("leak similarity and redaction")
{
    SUBCASE("hand-computed Jaccard example is kept")
    {
        CHECK(leak_similarity("a b c x y", "a b c d e") == doctest::Approx(0.2));
        const auto r = redact_solution_leak("Try this:\n```\na b c x y\n```\n", "a b c d e", 0.6);
        CHECK_FALSE(r.report.leaked);
        CHECK(r.report.removed_blocks == 0);
        CHECK(r.report.max_similarity == doctest::Approx(0.2));
        CHECK(r.markdown == "Try this:\n```\na b c x y\n```\n");
    }
    SUBCASE("verbatim solution is withheld")
    {
        const auto ex = sample_exercise();
        const auto body = "Here is how:\n```python\n" + ex.solution + "\n```\nGood luck.";
        const auto r = redact_solution_leak(body, ex.solution, 0.6);
        CHECK(r.report.leaked);
        CHECK(r.report.removed_blocks == 1);
        CHECK(r.report.max_similarity == doctest::Approx(1.0));
        CHECK(r.markdown.find(std::string(kWithheldText)) != std::string::npos);
        CHECK(r.markdown.find("print(a + b)") == std::string::npos);
        CHECK(r.markdown.find("Good luck.") != std::string::npos);
    }
    SUBCASE("no fenced blocks")
    {
        const auto r = redact_solution_leak("Just words.", "print(1)", 0.6);
        CHECK(r.markdown == "Just words.");
        CHECK_FALSE(r.report.leaked);
        CHECK(r.report.max_similarity == 0.0);
    }
    SUBCASE("comments, whitespace and quote style do not hide a leak")
    {
        const std::string solution = "name = input()\nprint(\"Hello, \" + name + \"!\")";
        const std::string disguised = "name  =  input()   # read it\nprint('Hello, ' + name + '!')";
        CHECK(leak_similarity(disguised, solution) == doctest::Approx(1.0));
    }
    SUBCASE("unclosed fence runs to the end")
    {
        CHECK(fenced_blocks("intro\n~~~\nx = 1\ny = 2") == std::vector<std::string>{"x = 1\ny = 2"});
    }
}

TEST_CASE("post-redaction no fenced block meets the threshold")
{
    std::mt19937 rng(11);
    const auto ex = sample_exercise();
    const std::vector<std::string> pieces{"a = int(input())", "b = int(input())", "print(a + b)", "print(a - b)",
                                          "total = a", "x = 1", "for i in range(3):", "    print(i)"};
    int leaks = 0;
    for (int trial = 0; trial < 300; ++trial) {
        std::string body = "Intro.\n";
        const int blocks = std::uniform_int_distribution<int>(0, 3)(rng);
        for (int b = 0; b < blocks; ++b) {
            body += "```python\n";
            const int n = std::uniform_int_distribution<int>(1, 4)(rng);
            for (int k = 0; k < n; ++k) {
                body += pieces[rng() % pieces.size()] + "\n";
            }
            body += "```\ntext\n";
        }
        const double threshold = std::uniform_real_distribution<double>(0.3, 1.0)(rng);
        const auto r = redact_solution_leak(body, ex.solution, threshold);
        CHECK(r.report.leaked == (r.report.removed_blocks > 0));
        for (const auto& block : fenced_blocks(r.markdown)) {
            CHECK(leak_similarity(block, ex.solution) < threshold);
        }
        leaks += r.report.leaked ? 1 : 0;
    }
    CHECK(leaks > 0);
}

TEST_CASE("review pipeline flow")
{
    const auto ex = sample_exercise();
    const std::string good = "a = int(input())\nb = int(input())\nprint(a - b)";

    SUBCASE("empty source under improved: no calls")
    {
        Rig rig(rnp_rcg("yes", "x"));
        const auto r = run_review_pipeline(ex, "   \n# only a comment\n", improved(), rig.gateway);
        CHECK(std::holds_alternative<EmptySubmission>(r.outcome));
        CHECK(rig.provider->call_count() == 0);
        CHECK(r.usage.call_count == 0);
    }
    SUBCASE("missing colon: improved short-circuits, initial calls the model")
    {
        Rig rig(rnp_rcg("yes", "Check line 1.\n### Code to fix\n- line 1: add ':'"));
        const auto r = run_review_pipeline(ex, "if x > 0\n  print(x)", improved(), rig.gateway);
        REQUIRE(std::holds_alternative<RejectedSubmission>(r.outcome));
        CHECK(std::get<RejectedSubmission>(r.outcome).report.findings.at(0).kind == ValidationErrorKind::MissingColon);
        CHECK(rig.provider->call_count() == 0);

        const auto r2 = run_review_pipeline(ex, "if x > 0\n  print(x)", initial(), rig.gateway);
        CHECK(std::holds_alternative<ReviewComment>(r2.outcome));
        CHECK(rig.provider->call_count() >= 1);
    }
    SUBCASE("RNP says no: one call and the fixed message")
    {
        Rig rig(rnp_rcg("no", "unused"));
        const auto r = run_review_pipeline(ex, good, improved(), rig.gateway);
        const auto& c = std::get<ReviewComment>(r.outcome);
        CHECK_FALSE(c.review_needed);
        CHECK(c.body_markdown == kLooksGoodText);
        CHECK(c.fix_lines.empty());
        CHECK(rig.provider->call_count() == 1);
    }
    SUBCASE("full review: two calls, parsed and aggregated")
    {
        Rig rig(rnp_rcg("yes", "Almost!\n### Code to fix\n- line 3: which operator adds numbers?"));
        const auto r = run_review_pipeline(ex, good + "  # mine", improved(), rig.gateway);
        const auto& c = std::get<ReviewComment>(r.outcome);
        CHECK(c.review_needed);
        CHECK(c.body_markdown == "Almost!");
        CHECK(c.fix_lines == std::vector<FixLine>{{3, "which operator adds numbers?"}});
        CHECK(rig.provider->call_count() == 2);
        CHECK(r.usage.call_count == 2);
        CHECK(r.usage.output_tokens == 40 + approximate_tokens("yes"));
        CHECK(c.usage == r.usage);
        // The model only ever sees comment-free code, with profile sampling.
        const auto calls = rig.provider->calls();
        for (const auto& call : calls) {
            CHECK(call.request.user_text.find("# mine") == std::string::npos);
            CHECK(call.request.max_output_tokens == 512);
            CHECK(call.request.temperature == 0.2);
            CHECK(call.request.top_p == 0.9);
            CHECK(call.request.system_text == improved().role_text);
        }
    }
    SUBCASE("solution in the review is withheld")
    {
        Rig rig(rnp_rcg("yes", "Compare:\n```python\n" + ex.solution + "\n```"));
        const auto r = run_review_pipeline(ex, good, improved(), rig.gateway);
        const auto& c = std::get<ReviewComment>(r.outcome);
        CHECK(c.redaction.leaked);
        CHECK(c.body_markdown.find(std::string(kWithheldText)) != std::string::npos);
    }
    SUBCASE("unparseable RNP is retried once, then a review is assumed")
    {
        Rig rig(json{{"sequence", {"hmm", "perhaps", "Fine.\n### Code to fix\n- line 1: ok"}}});
        const auto r = run_review_pipeline(ex, good, improved(), rig.gateway);
        CHECK(std::get<ReviewComment>(r.outcome).review_needed);
        CHECK(rig.provider->call_count() == 3);

        Rig rig2(json{{"sequence", {"hmm", "no"}}});
        const auto r2 = run_review_pipeline(ex, good, improved(), rig2.gateway);
        CHECK_FALSE(std::get<ReviewComment>(r2.outcome).review_needed);
        CHECK(rig2.provider->call_count() == 2);
    }
    SUBCASE("gateway failure names the stage")
    {
        Rig rig(json{{"rules",
                      {{{"contains", "Answer with exactly one word"}, {"text", "yes"}},
                       {{"contains", "## Restriction"}, {"text", "x"}, {"fail", "Timeout"}, {"fail_times", 99}}}}});
        try {
            run_review_pipeline(ex, good, improved(), rig.gateway);
            FAIL("expected GatewayError");
        } catch (const GatewayError& e) {
            CHECK(e.stage() == "rcg");
            CHECK(e.kind() == GatewayErrorKind::Timeout);
            CHECK(e.attempts() == 3);
        }
    }
}

TEST_CASE("call-count invariant over random submissions and answers")
{
    const auto ex = sample_exercise();
    std::mt19937 rng(5);
    const std::vector<std::string> sources{"", "  ", "# c", "print(1)", "if x\n  y", "x = (", "a = 1\nprint(a)",
                                           "for i in range(3):\n    print(i)"};
    for (int trial = 0; trial < 120; ++trial) {
        const bool says_yes = rng() % 2 == 0;
        Rig rig(rnp_rcg(says_yes ? "Yes" : "no", "ok\n### Code to fix\n- line 1: hint"));
        const auto& profile = rng() % 2 ? improved() : initial();
        const auto& src = sources[rng() % sources.size()];
        const auto r = run_review_pipeline(ex, src, profile, rig.gateway);
        const auto calls = rig.provider->call_count();
        CHECK(calls <= 2);
        CHECK(r.usage.call_count == calls);
        if (calls == 2) {
            CHECK(says_yes);
        }
        if (profile.gates_submissions() && !std::holds_alternative<ReviewComment>(r.outcome)) {
            CHECK(calls == 0);
        }
        if (profile.gates_submissions() && !validate_source(strip_comments(src)).valid()) {
            CHECK(calls == 0);
        }
    }
}
