#include "tutor/review.hpp"

#include "text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <regex>
#include <set>

namespace tutor {

UnparseableVerdict::UnparseableVerdict(std::string raw)
    : Error("unparseable verdict: '" + raw.substr(0, 80) + "'"), raw_(std::move(raw))
{
}

std::string format_io_examples(const Exercise& exercise)
{
    std::string out;
    auto fenced = [](std::string_view body) {
        std::string block = "```\n";
        block += body;
        if (body.empty() || body.back() != '\n') {
            block += '\n';
        }
        block += "```\n";
        return block;
    };
    for (std::size_t i = 0; i < exercise.input_examples.size(); ++i) {
        const auto n = std::to_string(i + 1);
        out += "Example " + n + " input:\n" + fenced(exercise.input_examples[i]);
        out += "Example " + n + " output:\n" + fenced(exercise.output_examples[i]);
    }
    while (!out.empty() && out.back() == '\n') {
        out.pop_back();
    }
    return out;
}

TemplateValues template_values(const ReviewRequest& req)
{
    TemplateValues values{
        {"exercise_description", req.exercise.description},
        {"submitted_code", std::string(req.submitted_code)},
        {"solution", req.exercise.solution},
        {"io_examples", format_io_examples(req.exercise)},
    };
    if (req.profile.max_sentences) {
        values["max_sentences"] = std::to_string(*req.profile.max_sentences);
    }
    return values;
}

Prompt render_rnp_prompt(const ReviewRequest& req)
{
    return Prompt{req.profile.role_text, render_template(req.profile.rnp_template, template_values(req))};
}

RnpVerdict parse_rnp_response(std::string_view raw)
{
    for (auto line : text::split_lines(raw)) {
        line = text::trim(line);
        if (line.empty()) {
            continue;
        }
        // tolerate markdown emphasis or quotes before the answer
        std::size_t i = 0;
        while (i < line.size() && !std::isalnum(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        std::size_t j = i;
        while (j < line.size() && std::isalpha(static_cast<unsigned char>(line[j]))) {
            ++j;
        }
        const std::string token = text::to_lower(line.substr(i, j - i));
        if (token == "yes") {
            return RnpVerdict::NeedsReview;
        }
        if (token == "no") {
            return RnpVerdict::NoReviewNeeded;
        }
        break;
    }
    throw UnparseableVerdict(std::string(raw));
}

Prompt render_rcg_prompt(const ReviewRequest& req)
{
    const auto values = template_values(req);
    std::string user;
    for (const auto& [section, body] : req.profile.rcg_sections) {
        if (!user.empty()) {
            user += "\n\n";
        }
        user += "## ";
        user += section_label(section);
        user += '\n';
        user += render_template(body, values);
    }
    return Prompt{req.profile.role_text, std::move(user)};
}

namespace {

// Heading level (1-6) of a markdown ATX heading line, 0 otherwise.
int heading_level(std::string_view line)
{
    std::size_t i = 0;
    while (i < line.size() && i < 3 && line[i] == ' ') {
        ++i;
    }
    std::size_t hashes = 0;
    while (i + hashes < line.size() && line[i + hashes] == '#') {
        ++hashes;
    }
    if (hashes == 0 || hashes > 6) {
        return 0;
    }
    if (i + hashes < line.size() && line[i + hashes] != ' ' && line[i + hashes] != '\t') {
        return 0;
    }
    return static_cast<int>(hashes);
}

struct Fence {
    char ch;
    std::size_t length;
};

std::optional<Fence> fence_open(std::string_view line)
{
    std::size_t i = 0;
    while (i < line.size() && i < 3 && line[i] == ' ') {
        ++i;
    }
    if (i >= line.size() || (line[i] != '`' && line[i] != '~')) {
        return std::nullopt;
    }
    const char ch = line[i];
    std::size_t n = 0;
    while (i + n < line.size() && line[i + n] == ch) {
        ++n;
    }
    if (n < 3) {
        return std::nullopt;
    }
    return Fence{ch, n};
}

bool fence_closes(std::string_view line, const Fence& open)
{
    const auto f = fence_open(line);
    if (!f || f->ch != open.ch || f->length < open.length) {
        return false;
    }
    const auto rest = text::trim(line);
    return rest.find_first_not_of(open.ch) == std::string_view::npos;
}

struct Block {
    std::size_t first_line;  // opening fence
    std::size_t end_line;    // one past the closing fence
    std::string content;
};

std::vector<Block> find_blocks(const std::vector<std::string_view>& lines)
{
    std::vector<Block> blocks;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto open = fence_open(lines[i]);
        if (!open) {
            continue;
        }
        Block block{i, lines.size(), {}};
        std::vector<std::string> body;
        std::size_t j = i + 1;
        for (; j < lines.size(); ++j) {
            if (fence_closes(lines[j], *open)) {
                block.end_line = j + 1;
                break;
            }
            body.emplace_back(lines[j]);
        }
        block.content = text::join(body, "\n");
        blocks.push_back(std::move(block));
        i = blocks.back().end_line - 1;
    }
    return blocks;
}

const std::regex& fix_line_pattern()
{
    static const std::regex pattern(R"(^\s*[-*+]\s+line\s+(\d+)\s*:\s*(.*?)\s*$)", std::regex::icase);
    return pattern;
}

} // namespace

ParsedReview parse_review_response(std::string_view raw, std::string_view submitted_code)
{
    const auto lines = text::split_lines(raw);
    const auto max_line = static_cast<long long>(text::line_count(submitted_code));

    ParsedReview parsed;
    std::vector<std::string> kept;
    bool in_section = false;
    std::optional<Fence> fence;
    for (auto line : lines) {
        if (fence) {
            if (fence_closes(line, *fence)) {
                fence.reset();
            }
            if (!in_section) {
                kept.emplace_back(line);
            }
            continue;
        }
        if (heading_level(line) > 0) {
            in_section = text::contains_ci(line, "code to fix");
            if (in_section) {
                continue;
            }
        }
        if (!in_section) {
            if (auto f = fence_open(line)) {
                fence = f;
            }
            kept.emplace_back(line);
            continue;
        }
        std::match_results<std::string_view::const_iterator> m;
        if (!std::regex_match(line.begin(), line.end(), m, fix_line_pattern())) {
            continue;
        }
        const std::string digits = m[1].str();
        long long n = 0;
        const auto [_, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
        if (ec != std::errc{} || n < 1 || n > max_line) {
            parsed.dropped.push_back("annotation for line " + digits + " is outside the submission (1-" +
                                     std::to_string(max_line) + ")");
            continue;
        }
        parsed.fix_lines.push_back({static_cast<int>(n), m[2].str()});
    }

    while (!kept.empty() && text::trim(kept.back()).empty()) {
        kept.pop_back();
    }
    std::size_t first = 0;
    while (first < kept.size() && text::trim(kept[first]).empty()) {
        ++first;
    }
    kept.erase(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(first));
    parsed.body_markdown = text::join(kept, "\n");
    return parsed;
}

std::vector<std::string> code_tokens(std::string_view code)
{
    const std::string src = strip_comments(code);
    std::vector<std::string> tokens;
    std::size_t i = 0;
    auto is_word = [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return std::isalnum(u) || c == '_' || u >= 0x80;
    };
    while (i < src.size()) {
        const char c = src[i];
        if (text::is_space(c)) {
            ++i;
        } else if (is_word(c)) {
            std::size_t j = i;
            while (j < src.size() && is_word(src[j])) {
                ++j;
            }
            tokens.emplace_back(src.substr(i, j - i));
            i = j;
        } else if (c == '\'' || c == '"') {
            const bool triple = i + 2 < src.size() && src[i + 1] == c && src[i + 2] == c;
            const std::size_t quote_len = triple ? 3 : 1;
            std::size_t j = i + quote_len;
            std::string body;
            while (j < src.size()) {
                if (src[j] == '\\' && j + 1 < src.size()) {
                    body += src[j];
                    body += src[j + 1];
                    j += 2;
                    continue;
                }
                if (src[j] == c && (!triple || src.compare(j, 3, std::string(3, c)) == 0)) {
                    j += quote_len;
                    break;
                }
                if (!triple && src[j] == '\n') {
                    break;
                }
                body += src[j++];
            }
            tokens.push_back("\"" + body + "\"");
            i = j;
        } else {
            tokens.emplace_back(1, c);
            ++i;
        }
    }
    return tokens;
}

namespace {

std::set<std::string> trigrams(const std::vector<std::string>& tokens)
{
    constexpr char kSep = '\x1f';
    std::set<std::string> grams;
    if (tokens.empty()) {
        return grams;
    }
    if (tokens.size() < 3) {
        std::string gram;
        for (const auto& t : tokens) {
            gram += t;
            gram += kSep;
        }
        grams.insert(gram);
        return grams;
    }
    for (std::size_t i = 0; i + 2 < tokens.size(); ++i) {
        grams.insert(tokens[i] + kSep + tokens[i + 1] + kSep + tokens[i + 2]);
    }
    return grams;
}

} // namespace

double leak_similarity(std::string_view code, std::string_view solution)
{
    const auto a = trigrams(code_tokens(code));
    const auto b = trigrams(code_tokens(solution));
    if (a.empty() || b.empty()) {
        return 0.0;
    }
    std::size_t shared = 0;
    for (const auto& gram : a) {
        shared += b.count(gram);
    }
    const std::size_t united = a.size() + b.size() - shared;
    return static_cast<double>(shared) / static_cast<double>(united);
}

std::vector<std::string> fenced_blocks(std::string_view markdown)
{
    std::vector<std::string> out;
    for (auto& block : find_blocks(text::split_lines(markdown))) {
        out.push_back(std::move(block.content));
    }
    return out;
}

RedactedText redact_solution_leak(std::string_view body, std::string_view solution, double threshold)
{
    const auto lines = text::split_lines(body);
    const auto blocks = find_blocks(lines);

    RedactedText result;
    if (blocks.empty()) {
        result.markdown = std::string(body);
        return result;
    }
    std::vector<std::string> out;
    std::size_t next = 0;
    for (const auto& block : blocks) {
        for (; next < block.first_line; ++next) {
            out.emplace_back(lines[next]);
        }
        const double similarity = leak_similarity(block.content, solution);
        result.report.max_similarity = std::max(result.report.max_similarity, similarity);
        if (similarity >= threshold) {
            out.emplace_back(kWithheldText);
            ++result.report.removed_blocks;
        } else {
            for (std::size_t i = block.first_line; i < block.end_line; ++i) {
                out.emplace_back(lines[i]);
            }
        }
        next = block.end_line;
    }
    for (; next < lines.size(); ++next) {
        out.emplace_back(lines[next]);
    }
    result.report.leaked = result.report.removed_blocks > 0;
    result.markdown = text::join(out, "\n");
    if (!body.empty() && body.back() == '\n') {
        result.markdown += '\n';
    }
    return result;
}

namespace {

LlmRequest make_request(const Prompt& prompt, const PromptProfile& profile, const Gateway& gateway)
{
    LlmRequest req;
    req.system_text = prompt.system;
    req.user_text = prompt.user;
    req.max_output_tokens = profile.max_output_tokens;
    req.temperature = profile.temperature;
    req.top_p = profile.top_p;
    req.model_id = gateway.model_id();
    return req;
}

LlmResponse send_stage(const Gateway& gateway, const LlmRequest& req, const char* stage)
{
    try {
        return gateway.send(req);
    } catch (const GatewayError& e) {
        throw e.with_stage(stage);
    }
}

} // namespace

ReviewResult run_review_pipeline(const Exercise& exercise, std::string_view submitted_code_raw,
                                 const PromptProfile& profile, const Gateway& gateway,
                                 const ReviewOptions& options)
{
    ReviewResult result{EmptySubmission{}, {}};
    std::string code = strip_comments(submitted_code_raw);
    if (profile.gates_submissions()) {
        if (text::trim(code).empty()) {
            return result;
        }
        auto report = validate_source(code, options.validator);
        if (!report.valid()) {
            result.outcome = RejectedSubmission{std::move(report)};
            return result;
        }
    }

    const ReviewRequest req{exercise, code, profile};

    // One retry on an unparseable answer, then assume a review is needed.
    const auto rnp_request = make_request(render_rnp_prompt(req), profile, gateway);
    auto verdict = RnpVerdict::NeedsReview;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto response = send_stage(gateway, rnp_request, "rnp");
        result.usage += response.usage;
        try {
            verdict = parse_rnp_response(response.text);
            break;
        } catch (const UnparseableVerdict&) {
        }
    }

    ReviewComment comment;
    if (verdict == RnpVerdict::NoReviewNeeded) {
        comment.review_needed = false;
        comment.body_markdown = std::string(kLooksGoodText);
        comment.usage = result.usage;
        result.outcome = std::move(comment);
        return result;
    }

    const auto rcg_response = send_stage(gateway, make_request(render_rcg_prompt(req), profile, gateway), "rcg");
    result.usage += rcg_response.usage;

    auto parsed = parse_review_response(rcg_response.text, code);
    auto redacted = redact_solution_leak(parsed.body_markdown, exercise.solution, options.leak_threshold);
    comment.body_markdown = std::move(redacted.markdown);
    comment.fix_lines = std::move(parsed.fix_lines);
    comment.dropped_annotations = static_cast<int>(parsed.dropped.size());
    comment.redaction = redacted.report;
    comment.usage = result.usage;
    result.outcome = std::move(comment);
    return result;
}

} // namespace tutor
