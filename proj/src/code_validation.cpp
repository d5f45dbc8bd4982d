#include "tutor/code_validation.hpp"

#include "process.hpp"
#include "text.hpp"

#include <algorithm>
#include <limits>
#include <regex>
#include <array>
#include <cctype>

namespace tutor {

namespace {

constexpr std::array<std::string_view, 11> kBlockKeywords{
    "if", "elif", "else", "for", "while", "def", "class", "try", "except", "finally", "with",
};

constexpr int kTabWidth = 4;

struct LogicalLine {
    int line = 0;
    int indent = 0;
    std::string first_word;
    bool has_colon = false;
    bool ends_with_colon = false;  // opens an indented block
};

struct ScanResult {
    // [start, end) byte ranges of comments, in source order
    std::vector<std::pair<std::size_t, std::size_t>> comments;
    std::vector<LogicalLine> lines;
    std::vector<ValidationFinding> findings;
};

bool is_word_char(char c)
{
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || u >= 0x80;
}

bool is_line_end(std::string_view src, std::size_t i)
{
    return i >= src.size() || src[i] == '\n' || (src[i] == '\r' && (i + 1 >= src.size() || src[i + 1] == '\n'));
}

// Single pass over the source tracking strings, comments, bracket depth and
// logical lines (physical lines joined by open brackets or backslashes).
class Scanner {
public:
    explicit Scanner(std::string_view src) : src_(src) {}

    ScanResult run()
    {
        while (pos_ < src_.size()) {
            if (stack_.empty()) {
                begin_physical_line();
            }
            scan_to_line_end();
            if (pos_ < src_.size()) {
                ++pos_;  // '\n'
                ++line_;
            }
        }
        // A bracket left open by an unterminated string is a symptom, not a second error.
        int first_unterminated = std::numeric_limits<int>::max();
        for (const auto& f : out_.findings) {
            if (f.kind == ValidationErrorKind::UnterminatedString) {
                first_unterminated = std::min(first_unterminated, f.line);
            }
        }
        for (const auto& [open, line] : stack_) {
            if (line <= first_unterminated && first_unterminated != std::numeric_limits<int>::max()) {
                continue;
            }
            add(ValidationErrorKind::UnbalancedDelimiter, line,
                std::string("'") + open + "' was never closed");
        }
        flush_logical();
        std::stable_sort(out_.findings.begin(), out_.findings.end(),
                         [](const auto& a, const auto& b) { return a.line < b.line; });
        return std::move(out_);
    }

private:
    void add(ValidationErrorKind kind, int line, std::string message)
    {
        out_.findings.push_back({kind, line, std::move(message)});
    }

    void flush_logical()
    {
        if (current_) {
            out_.lines.push_back(std::move(*current_));
            current_.reset();
        }
    }

    void begin_physical_line()
    {
        int indent = 0;
        std::size_t j = pos_;
        for (; j < src_.size(); ++j) {
            if (src_[j] == ' ') {
                indent += 1;
            } else if (src_[j] == '\t') {
                indent += kTabWidth;
            } else if (src_[j] == '\f') {
                indent = 0;
            } else {
                break;
            }
        }
        pos_ = j;
        if (is_line_end(src_, j) || src_[j] == '#') {
            return;  // blank or comment-only lines carry no structure
        }
        flush_logical();
        LogicalLine logical;
        logical.line = line_;
        logical.indent = indent;
        while (j < src_.size() && is_word_char(src_[j])) {
            logical.first_word += src_[j++];
        }
        current_ = std::move(logical);
    }

    void scan_to_line_end()
    {
        while (pos_ < src_.size() && src_[pos_] != '\n') {
            const char c = src_[pos_];
            if (current_ && c != ' ' && c != '\t' && c != '\r' && c != '#' && c != '\\') {
                current_->ends_with_colon = false;
            }
            switch (c) {
            case '#': {
                const std::size_t end = src_.find('\n', pos_);
                const std::size_t stop = end == std::string_view::npos ? src_.size() : end;
                out_.comments.emplace_back(pos_, stop);
                pos_ = stop;
                return;
            }
            case '\'':
            case '"':
                scan_string(c);
                break;
            case '\\':
                if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
                    pos_ += 2;
                    ++line_;
                } else if (pos_ + 2 < src_.size() && src_[pos_ + 1] == '\r' && src_[pos_ + 2] == '\n') {
                    pos_ += 3;
                    ++line_;
                } else {
                    ++pos_;
                }
                break;
            case '(':
            case '[':
            case '{':
                stack_.emplace_back(c, line_);
                ++pos_;
                break;
            case ')':
            case ']':
            case '}':
                close_delimiter(c);
                ++pos_;
                break;
            case ':':
                // `:=` is an assignment expression, not a block opener
                if (stack_.empty() && current_ && (pos_ + 1 >= src_.size() || src_[pos_ + 1] != '=')) {
                    current_->has_colon = true;
                    current_->ends_with_colon = true;
                }
                ++pos_;
                break;
            default:
                ++pos_;
                break;
            }
        }
    }

    void close_delimiter(char close)
    {
        const char expected_open = close == ')' ? '(' : close == ']' ? '[' : '{';
        if (stack_.empty()) {
            add(ValidationErrorKind::UnbalancedDelimiter, line_, std::string("unmatched '") + close + "'");
            return;
        }
        const auto [open, open_line] = stack_.back();
        stack_.pop_back();
        if (open != expected_open) {
            add(ValidationErrorKind::UnbalancedDelimiter, line_,
                std::string("'") + close + "' does not match '" + open + "' opened on line " +
                    std::to_string(open_line));
        }
    }

    void scan_string(char quote)
    {
        const int open_line = line_;
        const bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
        pos_ += triple ? 3 : 1;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '\\') {
                if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
                    ++line_;
                }
                pos_ += 2;
                continue;
            }
            if (c == '\n') {
                if (!triple) {
                    break;
                }
                ++line_;
                ++pos_;
                continue;
            }
            if (c == quote) {
                if (!triple) {
                    ++pos_;
                    return;
                }
                if (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote) {
                    pos_ += 3;
                    return;
                }
            }
            ++pos_;
        }
        pos_ = std::min(pos_, src_.size());
        add(ValidationErrorKind::UnterminatedString, open_line,
            triple ? "triple-quoted string is never closed" : "string literal is not terminated");
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::vector<std::pair<char, int>> stack_;
    std::optional<LogicalLine> current_;
    ScanResult out_;
};

bool is_block_keyword(std::string_view word)
{
    return std::find(kBlockKeywords.begin(), kBlockKeywords.end(), word) != kBlockKeywords.end();
}

void check_block_headers(const std::vector<LogicalLine>& lines, std::vector<ValidationFinding>& findings)
{
    for (const auto& logical : lines) {
        if (is_block_keyword(logical.first_word) && !logical.has_colon) {
            findings.push_back({ValidationErrorKind::MissingColon, logical.line,
                                "expected ':' at the end of the '" + logical.first_word + "' line"});
        }
    }
}

void check_indentation(const std::vector<LogicalLine>& lines, std::vector<ValidationFinding>& findings)
{
    std::vector<int> levels{0};
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& logical = lines[i];
        if (i > 0 && lines[i - 1].ends_with_colon && logical.indent <= lines[i - 1].indent) {
            findings.push_back({ValidationErrorKind::BadIndentation, logical.line,
                                "expected an indented block after line " + std::to_string(lines[i - 1].line)});
            continue;
        }
        if (logical.indent > levels.back()) {
            // Deeper lines inside a block are tolerated; at module level
            // they can only follow a block header.
            const bool after_header =
                i > 0 && (lines[i - 1].ends_with_colon || is_block_keyword(lines[i - 1].first_word));
            if (levels.size() == 1 && !after_header) {
                findings.push_back({ValidationErrorKind::BadIndentation, logical.line, "unexpected indent"});
            }
            levels.push_back(logical.indent);
            continue;
        }
        while (logical.indent < levels.back()) {
            levels.pop_back();
            if (levels.empty()) {
                break;
            }
        }
        if (levels.empty() || levels.back() != logical.indent) {
            findings.push_back({ValidationErrorKind::BadIndentation, logical.line,
                                "indentation of " + std::to_string(logical.indent) +
                                    " does not match any outer block"});
            // Adopt the new level so one bad line yields one finding.
            levels.push_back(logical.indent);
        }
    }
    if (!lines.empty() && lines.back().ends_with_colon) {
        findings.push_back({ValidationErrorKind::BadIndentation, lines.back().line,
                            "expected an indented block after line " + std::to_string(lines.back().line)});
    }
}

} // namespace

std::string_view to_string(ValidationErrorKind kind)
{
    switch (kind) {
    case ValidationErrorKind::EmptySource: return "EmptySource";
    case ValidationErrorKind::UnbalancedDelimiter: return "UnbalancedDelimiter";
    case ValidationErrorKind::UnterminatedString: return "UnterminatedString";
    case ValidationErrorKind::MissingColon: return "MissingColon";
    case ValidationErrorKind::BadIndentation: return "BadIndentation";
    }
    return "?";
}

std::optional<ValidationErrorKind> parse_validation_error_kind(std::string_view name)
{
    for (auto kind : {ValidationErrorKind::EmptySource, ValidationErrorKind::UnbalancedDelimiter,
                      ValidationErrorKind::UnterminatedString, ValidationErrorKind::MissingColon,
                      ValidationErrorKind::BadIndentation}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    return std::nullopt;
}

std::string strip_comments(std::string_view source)
{
    const auto scan = Scanner(source).run();
    std::string out;
    out.reserve(source.size());

    auto comment = scan.comments.begin();
    std::size_t line_start = 0;
    bool first = true;
    while (line_start <= source.size()) {
        const std::size_t nl = source.find('\n', line_start);
        const std::size_t line_end = nl == std::string_view::npos ? source.size() : nl;
        std::string_view line = source.substr(line_start, line_end - line_start);

        bool keep = true;
        if (comment != scan.comments.end() && comment->first < line_end) {
            line = text::rtrim(source.substr(line_start, comment->first - line_start));
            keep = !line.empty();
            ++comment;
        }
        if (keep) {
            if (!first) {
                out += '\n';
            }
            out += line;
            first = false;
        }
        if (nl == std::string_view::npos) {
            break;
        }
        line_start = nl + 1;
    }
    return out;
}

ValidationReport validate_source(std::string_view source)
{
    auto scan = Scanner(source).run();
    ValidationReport report;
    if (scan.lines.empty()) {
        report.findings.push_back({ValidationErrorKind::EmptySource, 1, "no code was submitted"});
        return report;
    }
    report.findings = std::move(scan.findings);
    check_block_headers(scan.lines, report.findings);
    check_indentation(scan.lines, report.findings);
    std::stable_sort(report.findings.begin(), report.findings.end(),
                     [](const auto& a, const auto& b) { return a.line < b.line; });
    return report;
}

ValidationErrorKind classify_external_message(std::string_view line)
{
    for (auto kind : {ValidationErrorKind::EmptySource, ValidationErrorKind::UnbalancedDelimiter,
                      ValidationErrorKind::UnterminatedString, ValidationErrorKind::MissingColon,
                      ValidationErrorKind::BadIndentation}) {
        if (line.find(to_string(kind)) != std::string_view::npos) {
            return kind;
        }
    }
    const std::string lower = text::to_lower(line);
    auto has = [&](std::string_view needle) { return lower.find(needle) != std::string::npos; };
    if (has("indent")) {
        return ValidationErrorKind::BadIndentation;
    }
    if (has("unterminated") || has("eol while scanning") || has("eof while scanning")) {
        return ValidationErrorKind::UnterminatedString;
    }
    if (has("expected ':'")) {
        return ValidationErrorKind::MissingColon;
    }
    return ValidationErrorKind::UnbalancedDelimiter;
}

ValidationReport validate_source(std::string_view source, const ValidatorConfig& config)
{
    if (!config.external_cmd) {
        return validate_source(source);
    }
    if (text::trim(source).empty()) {
        return ValidationReport{{{ValidationErrorKind::EmptySource, 1, "no code was submitted"}}};
    }
    const auto result = detail::run_command(*config.external_cmd, source);
    if (result.exit_code == 0) {
        return {};
    }
    // The first output line names the problem. A raw interpreter traceback
    // is also accepted: its "...Error:" line is used instead of "Traceback".
    const auto lines = text::split_lines(result.output);
    std::string first;
    std::size_t first_index = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto l = text::trim(lines[i]);
        if (!l.empty()) {
            first = std::string(l);
            first_index = i;
            break;
        }
    }
    if (first.starts_with("Traceback")) {
        for (std::size_t i = first_index; i < lines.size(); ++i) {
            const auto l = text::trim(lines[i]);
            if (l.find("Error") != std::string_view::npos && l.find(':') != std::string_view::npos &&
                !l.starts_with("File ")) {
                first = std::string(l);
                first_index = i;
                break;
            }
        }
    }
    // Line number: the nearest "line N" at or above the message line.
    int line_no = 1;
    static const std::regex line_ref(R"(line (\d+))");
    for (std::size_t i = 0; i <= first_index && i < lines.size(); ++i) {
        const std::string l(lines[i]);
        for (std::sregex_iterator it(l.begin(), l.end(), line_ref), end; it != end; ++it) {
            line_no = std::max(1, std::stoi((*it)[1].str()));
        }
    }
    return ValidationReport{{{classify_external_message(first), line_no,
                              first.empty() ? "external validator rejected the code" : first}}};
}

} // namespace tutor
