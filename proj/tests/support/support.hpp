#pragma once

// Helpers shared by the unit tests and the acceptance run.

#include "tutor/exercise_bank.hpp"

#include "json.hpp"

#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace tutor::testing {

inline constexpr std::string_view kRnpMarker = "Answer with exactly one word: yes or no.";
inline constexpr std::string_view kRcgMarker = "## Restriction";

// Random programs built from well-formed snippets, sprinkled with comments
// (some containing balanced quotes and `#`) and, half the time, one defect.
class Corpus {
public:
    explicit Corpus(unsigned seed) : rng_(seed) {}

    std::string program()
    {
        std::vector<std::string> lines;
        const int blocks = pick(1, 5);
        for (int b = 0; b < blocks; ++b) {
            block(lines, 0);
        }
        if (pick(0, 1) == 1) {
            defect(lines);
        }
        std::string out;
        for (const auto& l : lines) {
            out += l + "\n";
        }
        return out;
    }

private:
    int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    std::string comment()
    {
        static const std::vector<std::string> c{"# note", "# it's fine: \"ok\"", "# (unbalanced in comment",
                                                "# if x without colon", "#", "# value = '#'"};
        return c[pick(0, static_cast<int>(c.size()) - 1)];
    }

    std::string maybe_comment(std::string line)
    {
        if (pick(0, 2) == 0) {
            line += "  " + comment();
        }
        return line;
    }

    void block(std::vector<std::string>& lines, int depth)
    {
        const std::string pad(depth * 4, ' ');
        if (pick(0, 3) == 0) {
            lines.push_back(pad + comment());
        }
        switch (depth < 2 ? pick(0, 5) : pick(0, 2)) {
        case 0: lines.push_back(maybe_comment(pad + "x = (1 + 2) * [3, 4][0]")); break;
        case 1: lines.push_back(maybe_comment(pad + "print('a # b', \"c\")")); break;
        case 2: lines.push_back(maybe_comment(pad + "d = {'k': [1, 2]}")); break;
        case 3:
            lines.push_back(maybe_comment(pad + "if x > 0:"));
            block(lines, depth + 1);
            if (pick(0, 1) == 1) {
                lines.push_back(pad + "else:");
                block(lines, depth + 1);
            }
            break;
        case 4:
            lines.push_back(maybe_comment(pad + "for i in range(3):"));
            block(lines, depth + 1);
            break;
        default:
            lines.push_back(pad + "def f(a,");
            lines.push_back(pad + "      b):");
            block(lines, depth + 1);
            break;
        }
    }

    void defect(std::vector<std::string>& lines)
    {
        const auto at = static_cast<std::size_t>(pick(0, static_cast<int>(lines.size())));
        switch (pick(0, 3)) {
        case 0: lines.insert(lines.begin() + at, "y = (1, 2"); break;
        case 1: lines.insert(lines.begin() + at, "s = 'open"); break;
        case 2: lines.insert(lines.begin() + at, "while True"); break;
        default: lines.insert(lines.begin() + at, "  z = 1"); break;
        }
    }

    std::mt19937 rng_;
};

inline bool has_key(const nlohmann::json& j, const std::string& key)
{
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) {
            if (k == key || has_key(v, key)) {
                return true;
            }
        }
    } else if (j.is_array()) {
        for (const auto& v : j) {
            if (has_key(v, key)) {
                return true;
            }
        }
    }
    return false;
}

inline void collect_strings(const nlohmann::json& j, std::vector<std::string>& out)
{
    if (j.is_string()) {
        out.push_back(j.get<std::string>());
    } else if (j.is_structured()) {
        for (const auto& v : j) {
            collect_strings(v, out);
        }
    }
}

/// Mock rules that answer yes to the necessity check and otherwise try to
/// hand out the exercise's solution, once verbatim and once with swapped
/// quote style. The reply also parses as a judge verdict.
inline nlohmann::json leaking_rules(const Bank& bank)
{
    auto rules = nlohmann::json::array({{{"contains", kRnpMarker}, {"text", "yes"}}});
    for (const auto& [id, ex] : bank.exercises) {
        std::string swapped = ex.solution;
        for (auto& c : swapped) {
            c = c == '"' ? '\'' : c == '\'' ? '"' : c;
        }
        rules.push_back({{"contains", ex.description},
                         {"text", "VERDICT: WRONG\nTYPE: ComputationError\nCompare with:\n```python\n" + ex.solution +
                                      "\n```\nor\n```\n" + swapped + "\n```"}});
    }
    return rules;
}

} // namespace tutor::testing
