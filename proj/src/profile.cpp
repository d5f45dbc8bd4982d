#include "tutor/profile.hpp"

#include "text.hpp"

#include <fstream>

namespace tutor {

using nlohmann::json;

std::string_view to_string(ProfileName name)
{
    return name == ProfileName::Initial ? "initial" : "improved";
}

std::string_view to_string(Locale locale)
{
    return locale == Locale::En ? "en" : "ko";
}

std::string_view to_string(RcgSection section)
{
    switch (section) {
    case RcgSection::StyleTone: return "StyleTone";
    case RcgSection::Instruction: return "Instruction";
    case RcgSection::Restriction: return "Restriction";
    case RcgSection::Exercise: return "Exercise";
    case RcgSection::SubmittedCode: return "SubmittedCode";
    case RcgSection::Solution: return "Solution";
    case RcgSection::Example: return "Example";
    }
    return "?";
}

std::string_view section_label(RcgSection section)
{
    switch (section) {
    case RcgSection::StyleTone: return "Style & Tone";
    case RcgSection::Instruction: return "Instruction";
    case RcgSection::Restriction: return "Restriction";
    case RcgSection::Exercise: return "Exercise";
    case RcgSection::SubmittedCode: return "Submitted Code";
    case RcgSection::Solution: return "Solution";
    case RcgSection::Example: return "Example";
    }
    return "?";
}

PlaceholderUnresolved::PlaceholderUnresolved(std::string name)
    : Error("template placeholder '{{" + name + "}}' has no value"), name_(std::move(name))
{
}

namespace {

constexpr std::string_view kExampleNote =
    "The Example section is an illustration written for this project, not a production prompt.";

PromptProfile make_initial()
{
    PromptProfile p;
    p.name = ProfileName::Initial;
    p.role_text =
        "You are an AI code tutor. Your job is to help students who are learning the Python programming "
        "language by looking at the code they have written for an exercise and giving them helpful feedback "
        "about it.";
    p.rnp_template =
        "## Review necessity check\n\n"
        "Here is a programming exercise that a student tried to solve:\n\n"
        "{{exercise_description}}\n\n"
        "Here is the code the student submitted:\n\n"
        "```python\n{{submitted_code}}\n```\n\n"
        "Please think about whether this code needs a code review comment. A review is needed if the code has "
        "any problem, for example a bug, a missing requirement, hard-coded output, or code that is not needed.\n"
        "Answer with exactly one word: yes or no.";
    p.rcg_sections = {
        {RcgSection::StyleTone,
         "Respond in a friendly way. The students are children and teenagers, so try to be encouraging and "
         "avoid making them feel bad about their mistakes."},
        {RcgSection::Instruction,
         "Write a code review of the student's code. Use markdown so that the different parts of the review are "
         "easy to tell apart. Explain what the code does well and what problems it has. After the review, add a "
         "section titled `### Code to fix` and list every line that should be changed as a bullet in the form "
         "`- line <n>: <short hint>`, where <n> is the line number in the submitted code."},
        {RcgSection::Restriction,
         "Do not give the student the complete corrected program and do not show the instructor's answer code, "
         "because the student should learn to fix the code by themselves."},
        {RcgSection::Exercise, "The exercise the student is solving:\n\n{{exercise_description}}\n\n{{io_examples}}"},
        {RcgSection::SubmittedCode, "The code the student submitted:\n\n```python\n{{submitted_code}}\n```"},
        {RcgSection::Solution, "The instructor's answer code, for your reference only:\n\n```python\n{{solution}}\n```"},
        {RcgSection::Example,
         "Here is an example of a good review for a different exercise:\n\n"
         "Great job reading both numbers from the input! The loop stops one step too early, so the last value is "
         "never added to the total. Look carefully at where the range ends.\n"
         "### Code to fix\n"
         "- line 3: check where the range should end"},
    };
    p.max_output_tokens = 1024;
    p.temperature = 0.7;
    p.top_p = 1.0;
    p.max_sentences = std::nullopt;
    p.notes = std::string(kExampleNote);
    return p;
}

PromptProfile make_improved()
{
    PromptProfile p;
    p.name = ProfileName::Improved;
    p.role_text = "You are Code Tutor, a kind Python teacher for primary and secondary school students.";
    p.rnp_template =
        "## Review necessity check\n\n"
        "Exercise:\n{{exercise_description}}\n\n"
        "Submitted code:\n```python\n{{submitted_code}}\n```\n\n"
        "Does this code need a review (bug, unmet requirement, hard-coded output, or unnecessary code)?\n"
        "Answer with exactly one word: yes or no.";
    p.rcg_sections = {
        {RcgSection::StyleTone,
         "Be supportive and polite. Use simple words suited to primary and secondary school students and keep "
         "the same polite register throughout."},
        {RcgSection::Instruction,
         "Review the submitted code in markdown, in at most {{max_sentences}} sentences. Then add a "
         "`### Code to fix` section listing each line to change as `- line <n>: <hint>` (n = line number in the "
         "submitted code)."},
        {RcgSection::Restriction,
         "Never write corrected code or reveal the solution. Give hints only, about the submitted code only."},
        {RcgSection::Exercise, "{{exercise_description}}\n\n{{io_examples}}"},
        {RcgSection::SubmittedCode, "```python\n{{submitted_code}}\n```"},
        {RcgSection::Solution, "Reference only, never reveal:\n```python\n{{solution}}\n```"},
        {RcgSection::Example,
         "Nice work reading both numbers! The loop stops one step early, so the last value is never added.\n"
         "### Code to fix\n"
         "- line 3: check where the range should end"},
    };
    p.max_output_tokens = 512;
    p.temperature = 0.2;
    p.top_p = 0.9;
    p.max_sentences = 8;
    p.notes = std::string(kExampleNote);
    return p;
}

std::optional<RcgSection> parse_section(std::string_view name)
{
    for (auto section : kRcgSectionOrder) {
        if (to_string(section) == name) {
            return section;
        }
    }
    return std::nullopt;
}

} // namespace

void check_profile(const PromptProfile& p)
{
    if (p.rcg_sections.size() != kRcgSectionOrder.size()) {
        throw ProfileError("profile must define exactly seven review sections");
    }
    for (std::size_t i = 0; i < kRcgSectionOrder.size(); ++i) {
        if (p.rcg_sections[i].first != kRcgSectionOrder[i]) {
            throw ProfileError("review section " + std::to_string(i + 1) + " must be " +
                               std::string(to_string(kRcgSectionOrder[i])));
        }
    }
    if (p.max_output_tokens < 1) {
        throw ProfileError("max_output_tokens must be positive");
    }
    if (!(p.temperature >= 0.0 && p.temperature <= 2.0)) {
        throw ProfileError("temperature must be in [0, 2]");
    }
    if (!(p.top_p > 0.0 && p.top_p <= 1.0)) {
        throw ProfileError("top_p must be in (0, 1]");
    }
    if (p.max_sentences && *p.max_sentences < 1) {
        throw ProfileError("max_sentences must be positive");
    }
}

PromptProfile builtin_profile(ProfileName name, Locale locale)
{
    if (locale != Locale::En) {
        throw ProfileError("no bundled templates for locale '" + std::string(to_string(locale)) +
                           "'; load a profile file instead");
    }
    return name == ProfileName::Initial ? make_initial() : make_improved();
}

PromptProfile parse_profile(const json& doc)
{
    try {
        PromptProfile p;
        const auto name = doc.at("name").get<std::string>();
        if (name == "initial") {
            p.name = ProfileName::Initial;
        } else if (name == "improved") {
            p.name = ProfileName::Improved;
        } else {
            throw ProfileError("profile name must be 'initial' or 'improved', got '" + name + "'");
        }
        const auto locale = doc.value("locale", std::string("en"));
        if (locale == "en") {
            p.locale = Locale::En;
        } else if (locale == "ko") {
            p.locale = Locale::Ko;
        } else {
            throw ProfileError("unsupported locale '" + locale + "'");
        }
        p.role_text = doc.at("role_text").get<std::string>();
        p.rnp_template = doc.at("rnp_template").get<std::string>();
        for (const auto& node : doc.at("rcg_sections")) {
            const auto section_name = node.at("section").get<std::string>();
            const auto section = parse_section(section_name);
            if (!section) {
                throw ProfileError("unknown review section '" + section_name + "'");
            }
            p.rcg_sections.emplace_back(*section, node.at("text").get<std::string>());
        }
        p.max_output_tokens = doc.at("max_output_tokens").get<int>();
        p.temperature = doc.at("temperature").get<double>();
        p.top_p = doc.at("top_p").get<double>();
        if (doc.contains("max_sentences") && !doc.at("max_sentences").is_null()) {
            p.max_sentences = doc.at("max_sentences").get<int>();
        }
        p.notes = doc.value("notes", std::string{});
        check_profile(p);
        return p;
    } catch (const json::exception& e) {
        throw ProfileError(std::string("malformed profile: ") + e.what());
    }
}

PromptProfile load_profile(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ProfileError("cannot read profile file: " + path.string());
    }
    try {
        return parse_profile(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ProfileError("malformed profile " + path.string() + ": " + e.what());
    }
}

nlohmann::ordered_json profile_to_json(const PromptProfile& p)
{
    nlohmann::ordered_json doc;
    doc["name"] = to_string(p.name);
    doc["locale"] = to_string(p.locale);
    doc["role_text"] = p.role_text;
    doc["rnp_template"] = p.rnp_template;
    doc["rcg_sections"] = nlohmann::ordered_json::array();
    for (const auto& [section, body] : p.rcg_sections) {
        doc["rcg_sections"].push_back({{"section", to_string(section)}, {"text", body}});
    }
    doc["max_output_tokens"] = p.max_output_tokens;
    doc["temperature"] = p.temperature;
    doc["top_p"] = p.top_p;
    doc["max_sentences"] = p.max_sentences ? nlohmann::ordered_json(*p.max_sentences) : nlohmann::ordered_json();
    doc["notes"] = p.notes;
    return doc;
}

PromptProfile resolve_profile(std::string_view spec)
{
    if (spec == "initial") {
        return builtin_profile(ProfileName::Initial);
    }
    if (spec == "improved") {
        return builtin_profile(ProfileName::Improved);
    }
    return load_profile(std::filesystem::path(spec));
}

std::string render_template(std::string_view tmpl, const TemplateValues& values)
{
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            break;
        }
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) {
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        const auto name = text::trim(tmpl.substr(open + 2, close - open - 2));
        const auto it = values.find(name);
        if (it == values.end()) {
            throw PlaceholderUnresolved(std::string(name));
        }
        out += it->second;
        pos = close + 2;
    }
    out.append(tmpl.substr(pos));
    return out;
}

} // namespace tutor
