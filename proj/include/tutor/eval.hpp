#pragma once

#include "tutor/correctness.hpp"
#include "tutor/exercise_bank.hpp"
#include "tutor/llm_gateway.hpp"
#include "tutor/profile.hpp"
#include "tutor/review.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace tutor {

struct EvalRecord {
    std::string id;  // "<ex_id>#<index in bank>"
    DatasetRecord record;
    CorrectnessVerdict verdict;
    LlmUsage usage;
    std::string profile_name;
};

class MissingLabel : public Error {
public:
    explicit MissingLabel(std::string record_id);
    const std::string& record_id() const { return record_id_; }

private:
    std::string record_id_;
};

class EmptySample : public Error {
public:
    EmptySample() : Error("no latency samples were collected") {}
};

class FileUnwritable : public Error {
public:
    explicit FileUnwritable(const std::filesystem::path& path) : Error("cannot write file: " + path.string()) {}
};

struct TypeFailureRate {
    std::uint64_t failed = 0;  // n_i
    double rate_pct = 0.0;     // R_i, rounded to 2 decimals

    friend bool operator==(const TypeFailureRate&, const TypeFailureRate&) = default;
};

struct FailureRateReport {
    std::uint64_t total = 0;  // N
    std::map<ErrorType, TypeFailureRate> per_type;

    friend bool operator==(const FailureRateReport&, const FailureRateReport&) = default;
};

/// R_i = n_i / N * 100 where n_i counts records labeled i that the judge did
/// not accept. Every record must carry a label; N = records.size().
FailureRateReport failure_rate(const std::vector<EvalRecord>& records);

double round_to(double value, int decimals);

struct LatencyStats {
    std::size_t count = 0;
    double mean_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
    double p50_ms = 0.0;
    double p90_ms = 0.0;

    friend bool operator==(const LatencyStats&, const LatencyStats&) = default;
};

/// Nearest-rank percentile of a sorted, non-empty sample.
double nearest_rank(const std::vector<double>& sorted, double percentile);

/// Throws EmptySample for an empty input.
LatencyStats latency_stats(std::vector<double> samples_ms);

/// A profile with the label it is reported under ("initial", "improved", or a path).
struct NamedProfile {
    std::string label;
    PromptProfile profile;
};

NamedProfile named_profile(std::string_view spec);

struct RecordFailure {
    std::string record_id;
    std::string profile;
    std::string message;

    friend bool operator==(const RecordFailure&, const RecordFailure&) = default;
};

struct HarnessOptions {
    int trials = 1;
    int workers = 1;
    ReviewOptions review;
    SubmissionOptions submission;
};

struct JudgeRun {
    std::vector<EvalRecord> records;  // sorted by id
    std::vector<RecordFailure> failures;
};

/// Judges every labeled record in the bank. Short-circuited submissions count
/// as Error verdicts; gateway failures are listed and excluded.
JudgeRun evaluate_records(const Bank& bank, const NamedProfile& profile, const Gateway& gateway,
                          const HarnessOptions& options = {});

struct LatencyReport {
    std::vector<std::pair<std::string, LatencyStats>> per_profile;
    std::vector<RecordFailure> failures;

    friend bool operator==(const LatencyReport&, const LatencyReport&) = default;
};

/// Runs each record through the review pipeline `trials` times per profile.
/// A run's sample is the summed gateway latency of its calls.
LatencyReport latency_bench(const Bank& bank, const std::vector<NamedProfile>& profiles, const Gateway& gateway,
                            const HarnessOptions& options = {});

struct ProfileCost {
    std::string profile;
    std::size_t runs = 0;
    double mean_input_tokens = 0.0;
    double mean_output_tokens = 0.0;
    CostEstimate mean_cost;

    friend bool operator==(const ProfileCost&, const ProfileCost&) = default;
};

struct CostReport {
    std::string model_id;
    std::vector<ProfileCost> per_profile;
    double delta_pct = 0.0;  // first profile vs last
    std::vector<RecordFailure> failures;

    friend bool operator==(const CostReport&, const CostReport&) = default;
};

/// (baseline - candidate) / baseline * 100; 0 when the baseline is 0.
double cost_delta_pct(double baseline_usd, double candidate_usd);

/// Mean per-run usage for each profile priced with `pricing`.
CostReport cost_bench(const Bank& bank, const std::vector<NamedProfile>& profiles, const Gateway& gateway,
                      const PricingTable& pricing, const HarnessOptions& options = {});

enum class ReportFormat { Json, Csv };

std::string render_report(const FailureRateReport& report, ReportFormat format);
std::string render_report(const LatencyReport& report, ReportFormat format);
std::string render_report(const CostReport& report, ReportFormat format);

FailureRateReport parse_failure_rate_report(std::string_view json);
LatencyReport parse_latency_report(std::string_view json);
CostReport parse_cost_report(std::string_view json);

/// Writes `content` to `path`; throws FileUnwritable.
void emit_report(std::string_view content, const std::filesystem::path& path);

} // namespace tutor
