#pragma once

#include "tutor/error.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace tutor {

enum class ProfileName { Initial, Improved };
enum class Locale { En, Ko };

/// Sub-prompts of the review-comment prompt, in their mandatory order.
enum class RcgSection { StyleTone, Instruction, Restriction, Exercise, SubmittedCode, Solution, Example };

inline constexpr std::array<RcgSection, 7> kRcgSectionOrder{
    RcgSection::StyleTone, RcgSection::Instruction,   RcgSection::Restriction, RcgSection::Exercise,
    RcgSection::SubmittedCode, RcgSection::Solution, RcgSection::Example,
};

std::string_view to_string(ProfileName name);
std::string_view to_string(Locale locale);
std::string_view to_string(RcgSection section);
/// Header text printed above the section in the rendered prompt.
std::string_view section_label(RcgSection section);

/// Template texts plus sampling parameters. Templates use `{{name}}`
/// placeholders drawn from: exercise_description, submitted_code, solution,
/// io_examples, max_sentences.
struct PromptProfile {
    ProfileName name = ProfileName::Improved;
    std::string role_text;
    std::string rnp_template;
    std::vector<std::pair<RcgSection, std::string>> rcg_sections;
    int max_output_tokens = 512;
    double temperature = 0.2;
    double top_p = 0.9;
    std::optional<int> max_sentences;
    Locale locale = Locale::En;
    std::string notes;

    /// Submissions are gated by the empty check and code validation only
    /// under the improved flow.
    bool gates_submissions() const { return name == ProfileName::Improved; }

    friend bool operator==(const PromptProfile&, const PromptProfile&) = default;
};

class ProfileError : public Error {
public:
    using Error::Error;
};

class PlaceholderUnresolved : public Error {
public:
    explicit PlaceholderUnresolved(std::string name);
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

/// Throws ProfileError when a field is out of range or the sections are not
/// exactly the seven in order.
void check_profile(const PromptProfile& profile);

/// Bundled profiles. Only English templates ship; Ko throws ProfileError.
PromptProfile builtin_profile(ProfileName name, Locale locale = Locale::En);

PromptProfile parse_profile(const nlohmann::json& document);
PromptProfile load_profile(const std::filesystem::path& path);
nlohmann::ordered_json profile_to_json(const PromptProfile& profile);

/// "initial", "improved", or a path to a profile file.
PromptProfile resolve_profile(std::string_view spec);

using TemplateValues = std::map<std::string, std::string, std::less<>>;

/// Single-pass substitution of `{{name}}` (inner whitespace ignored).
/// Substituted values are not rescanned.
std::string render_template(std::string_view tmpl, const TemplateValues& values);

} // namespace tutor
