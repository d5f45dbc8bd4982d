#include "tutor/exercise_bank.hpp"

#include "tutor/code_validation.hpp"
#include "text.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace tutor {

using nlohmann::json;

FileUnreadable::FileUnreadable(const std::filesystem::path& path)
    : Error("cannot read file: " + path.string())
{
}

SchemaViolation::SchemaViolation(std::string section, std::size_t index, std::string reason)
    : Error(section + "[" + std::to_string(index) + "]: " + reason),
      section_(std::move(section)),
      index_(index),
      reason_(std::move(reason))
{
}

SchemaViolation::SchemaViolation(std::string reason) : Error(reason), reason_(std::move(reason)) {}

DanglingExerciseRef::DanglingExerciseRef(std::string ex_id)
    : Error("record references unknown exercise '" + ex_id + "'"), ex_id_(std::move(ex_id))
{
}

const Exercise* Bank::find(std::string_view id) const
{
    const auto it = exercises.find(std::string(id));
    return it == exercises.end() ? nullptr : &it->second;
}

namespace {

const std::set<std::string> kExerciseFields{
    "id", "title", "description", "input_examples", "output_examples", "solution", "category_path",
};
const std::set<std::string> kRecordFields{
    "ex_id", "title", "desc", "solution", "sub_code", "solved_subs", "total_subs", "accuracy", "error_type",
};

// Field readers bound to one array element so every failure names its location.
class FieldReader {
public:
    FieldReader(const json& object, std::string section, std::size_t index,
                const std::set<std::string>& allowed)
        : object_(object), section_(std::move(section)), index_(index)
    {
        if (!object_.is_object()) {
            fail("entry is not an object");
        }
        for (const auto& [key, _] : object_.items()) {
            if (!allowed.count(key)) {
                fail("unknown field '" + key + "'");
            }
        }
    }

    [[noreturn]] void fail(const std::string& reason) const { throw SchemaViolation(section_, index_, reason); }

    bool has(const char* key) const { return object_.contains(key) && !object_.at(key).is_null(); }

    std::string string(const char* key) const
    {
        if (!object_.contains(key) || !object_.at(key).is_string()) {
            fail(std::string("field '") + key + "' must be a string");
        }
        return object_.at(key).get<std::string>();
    }

    std::vector<std::string> strings(const char* key) const
    {
        if (!object_.contains(key) || !object_.at(key).is_array()) {
            fail(std::string("field '") + key + "' must be an array of strings");
        }
        std::vector<std::string> out;
        for (const auto& item : object_.at(key)) {
            if (!item.is_string()) {
                fail(std::string("field '") + key + "' must be an array of strings");
            }
            out.push_back(item.get<std::string>());
        }
        return out;
    }

    std::uint64_t count(const char* key) const
    {
        if (!object_.contains(key) || !object_.at(key).is_number_integer() || object_.at(key).get<std::int64_t>() < 0) {
            fail(std::string("field '") + key + "' must be a non-negative integer");
        }
        return object_.at(key).get<std::uint64_t>();
    }

    double real(const char* key) const
    {
        if (!object_.contains(key) || !object_.at(key).is_number()) {
            fail(std::string("field '") + key + "' must be a number");
        }
        return object_.at(key).get<double>();
    }

private:
    const json& object_;
    std::string section_;
    std::size_t index_;
};

Exercise parse_exercise(const json& node, std::size_t index)
{
    FieldReader reader(node, "exercises", index, kExerciseFields);
    Exercise ex;
    ex.id = reader.string("id");
    ex.title = reader.string("title");
    ex.description = reader.string("description");
    ex.input_examples = reader.strings("input_examples");
    ex.output_examples = reader.strings("output_examples");
    ex.solution = reader.string("solution");
    ex.category_path = reader.has("category_path") ? reader.strings("category_path")
                                                   : std::vector<std::string>{"uncategorized"};
    if (ex.category_path.empty()) {
        ex.category_path = {"uncategorized"};
    }

    if (ex.id.empty()) {
        reader.fail("id must be non-empty");
    }
    if (ex.input_examples.empty() || ex.input_examples.size() != ex.output_examples.size()) {
        reader.fail("input_examples and output_examples must have equal length >= 1");
    }
    if (ex.solution.empty()) {
        reader.fail("solution must be non-empty");
    }
    return ex;
}

DatasetRecord parse_record(const json& node, std::size_t index)
{
    FieldReader reader(node, "records", index, kRecordFields);
    DatasetRecord rec;
    rec.ex_id = reader.string("ex_id");
    rec.title = reader.string("title");
    rec.desc = reader.string("desc");
    rec.solution = reader.string("solution");
    rec.sub_code = reader.string("sub_code");
    rec.solved_subs = reader.count("solved_subs");
    rec.total_subs = reader.count("total_subs");
    rec.accuracy = reader.real("accuracy");
    if (reader.has("error_type")) {
        const auto label = reader.string("error_type");
        rec.error_type = parse_error_type(label);
        if (!rec.error_type) {
            reader.fail("unknown error_type '" + label + "'");
        }
    }

    if (rec.solved_subs > rec.total_subs) {
        reader.fail("solved_subs exceeds total_subs");
    }
    const double expected =
        rec.total_subs == 0 ? 0.0 : static_cast<double>(rec.solved_subs) / static_cast<double>(rec.total_subs);
    if (std::fabs(rec.accuracy - expected) > kAccuracyTolerance) {
        reader.fail("accuracy " + std::to_string(rec.accuracy) + " does not equal solved_subs/total_subs");
    }
    return rec;
}

} // namespace

Bank parse_bank(const json& document)
{
    if (!document.is_object()) {
        throw SchemaViolation("bank document must be an object");
    }
    for (const auto& [key, _] : document.items()) {
        if (key != "exercises" && key != "records") {
            throw SchemaViolation("unknown top-level key '" + key + "'");
        }
    }
    if (!document.contains("exercises") || !document.at("exercises").is_array()) {
        throw SchemaViolation("top-level 'exercises' must be an array");
    }
    if (document.contains("records") && !document.at("records").is_array()) {
        throw SchemaViolation("top-level 'records' must be an array");
    }

    Bank bank;
    const auto& exercises = document.at("exercises");
    for (std::size_t i = 0; i < exercises.size(); ++i) {
        auto ex = parse_exercise(exercises[i], i);
        const std::string id = ex.id;
        if (!bank.exercises.emplace(id, std::move(ex)).second) {
            throw SchemaViolation("exercises", i, "duplicate id '" + id + "'");
        }
    }
    if (document.contains("records")) {
        const auto& records = document.at("records");
        for (std::size_t i = 0; i < records.size(); ++i) {
            auto rec = parse_record(records[i], i);
            if (!bank.exercises.count(rec.ex_id)) {
                throw DanglingExerciseRef(rec.ex_id);
            }
            bank.records.push_back(std::move(rec));
        }
    }
    return bank;
}

Bank load_bank(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileUnreadable(path);
    }
    json document;
    try {
        document = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaViolation(std::string("malformed document: ") + e.what());
    }
    return parse_bank(document);
}

nlohmann::ordered_json bank_to_json(const Bank& bank)
{
    nlohmann::ordered_json doc;
    doc["exercises"] = nlohmann::ordered_json::array();
    for (const auto& [id, ex] : bank.exercises) {
        nlohmann::ordered_json e;
        e["id"] = ex.id;
        e["title"] = ex.title;
        e["description"] = ex.description;
        e["input_examples"] = ex.input_examples;
        e["output_examples"] = ex.output_examples;
        e["solution"] = ex.solution;
        e["category_path"] = ex.category_path;
        doc["exercises"].push_back(std::move(e));
    }
    doc["records"] = nlohmann::ordered_json::array();
    for (const auto& rec : bank.records) {
        nlohmann::ordered_json r;
        r["ex_id"] = rec.ex_id;
        r["title"] = rec.title;
        r["desc"] = rec.desc;
        r["solution"] = rec.solution;
        r["sub_code"] = rec.sub_code;
        r["solved_subs"] = rec.solved_subs;
        r["total_subs"] = rec.total_subs;
        r["accuracy"] = rec.accuracy;
        if (rec.error_type) {
            r["error_type"] = std::string(to_string(*rec.error_type));
        }
        doc["records"].push_back(std::move(r));
    }
    return doc;
}

void save_bank(const Bank& bank, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write file: " + path.string());
    }
    out << bank_to_json(bank).dump(2) << '\n';
}

std::string normalize_submission(std::string_view sub_code)
{
    const std::string stripped = strip_comments(sub_code);
    std::vector<std::string> lines;
    for (auto line : text::split_lines(stripped)) {
        line = text::rtrim(line);
        if (!line.empty()) {
            lines.emplace_back(line);
        }
    }
    return text::join(lines, "\n");
}

std::vector<DatasetRecord> static_filter(const std::vector<DatasetRecord>& records)
{
    std::set<std::pair<std::string, std::string>> seen;
    std::vector<DatasetRecord> survivors;
    for (const auto& rec : records) {
        if (!seen.emplace(rec.ex_id, normalize_submission(rec.sub_code)).second) {
            continue;
        }
        DatasetRecord kept = rec;
        kept.sub_code = strip_comments(rec.sub_code);
        survivors.push_back(std::move(kept));
    }
    return survivors;
}

namespace {

struct TreeBuilder {
    std::map<std::string, TreeBuilder> children;
    std::vector<ExerciseSummary> exercises;

    CategoryNode build(std::string name) const
    {
        CategoryNode node;
        node.name = std::move(name);
        node.exercises = exercises;
        for (const auto& [child_name, child] : children) {
            node.children.push_back(child.build(child_name));
        }
        return node;
    }
};

} // namespace

CategoryNode list_tree(const Bank& bank)
{
    TreeBuilder root;
    for (const auto& [id, ex] : bank.exercises) {
        TreeBuilder* node = &root;
        for (const auto& segment : ex.category_path) {
            node = &node->children[segment];
        }
        node->exercises.push_back({ex.id, ex.title});
    }
    return root.build("");
}

} // namespace tutor
