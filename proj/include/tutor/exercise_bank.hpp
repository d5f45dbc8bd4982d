#pragma once

#include "tutor/error.hpp"
#include "tutor/error_type.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace tutor {

struct Exercise {
    std::string id;
    std::string title;
    std::string description;  // markdown
    std::vector<std::string> input_examples;
    std::vector<std::string> output_examples;  // parallel to input_examples
    std::string solution;
    std::vector<std::string> category_path;

    friend bool operator==(const Exercise&, const Exercise&) = default;
};

/// One row of the eight-label test-data frame, plus the optional error-type
/// label the evaluation harness counts against.
struct DatasetRecord {
    std::string ex_id;
    std::string title;
    std::string desc;
    std::string solution;
    std::string sub_code;
    std::uint64_t solved_subs = 0;
    std::uint64_t total_subs = 0;
    double accuracy = 0.0;
    std::optional<ErrorType> error_type;

    friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

struct Bank {
    std::map<std::string, Exercise> exercises;
    std::vector<DatasetRecord> records;

    const Exercise* find(std::string_view id) const;
};

class FileUnreadable : public Error {
public:
    explicit FileUnreadable(const std::filesystem::path& path);
};

class SchemaViolation : public Error {
public:
    /// `section` is "exercises" or "records"; `index` is the array position.
    SchemaViolation(std::string section, std::size_t index, std::string reason);
    SchemaViolation(std::string reason);

    const std::string& section() const { return section_; }
    std::size_t index() const { return index_; }
    const std::string& reason() const { return reason_; }

private:
    std::string section_;
    std::size_t index_ = 0;
    std::string reason_;
};

class DanglingExerciseRef : public Error {
public:
    explicit DanglingExerciseRef(std::string ex_id);
    const std::string& ex_id() const { return ex_id_; }

private:
    std::string ex_id_;
};

inline constexpr double kAccuracyTolerance = 1e-9;

Bank load_bank(const std::filesystem::path& path);
Bank parse_bank(const nlohmann::json& document);

/// Serializes with field names and order exactly as in the type definitions.
nlohmann::ordered_json bank_to_json(const Bank& bank);
void save_bank(const Bank& bank, const std::filesystem::path& path);

/// Dedup key component: comments stripped, trailing whitespace trimmed per
/// line and blank lines removed.
std::string normalize_submission(std::string_view sub_code);

/// Static-based filtering: strips comments from every submission and drops
/// records whose (ex_id, normalized code) was already seen. First occurrence wins.
std::vector<DatasetRecord> static_filter(const std::vector<DatasetRecord>& records);

struct ExerciseSummary {
    std::string id;
    std::string title;

    friend bool operator==(const ExerciseSummary&, const ExerciseSummary&) = default;
};

struct CategoryNode {
    std::string name;
    std::vector<ExerciseSummary> exercises;  // sorted by id
    std::vector<CategoryNode> children;      // sorted by name

    friend bool operator==(const CategoryNode&, const CategoryNode&) = default;
};

/// Groups exercises by category_path. The returned root is unnamed; an empty
/// bank yields a root with no children and no exercises.
CategoryNode list_tree(const Bank& bank);

} // namespace tutor
