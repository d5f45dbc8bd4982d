#include "tutor/eval.hpp"

#include "text.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"

namespace tutor {

MissingLabel::MissingLabel(std::string record_id)
    : Error("record '" + record_id + "' has no error_type label"), record_id_(std::move(record_id))
{
}

double round_to(double value, int decimals)
{
    const double scale = std::pow(10.0, decimals);
    return std::round(value * scale) / scale;
}

FailureRateReport failure_rate(const std::vector<EvalRecord>& records)
{
    FailureRateReport report;
    report.total = records.size();
    for (const auto& rec : records) {
        if (!rec.record.error_type) {
            throw MissingLabel(rec.id);
        }
        auto& slot = report.per_type[*rec.record.error_type];
        if (rec.verdict.state != JudgeState::Correct) {
            ++slot.failed;
        }
    }
    for (auto& [type, slot] : report.per_type) {
        slot.rate_pct = round_to(static_cast<double>(slot.failed) / static_cast<double>(report.total) * 100.0, 2);
    }
    return report;
}

double nearest_rank(const std::vector<double>& sorted, double percentile)
{
    const auto n = sorted.size();
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return sorted[rank - 1];
}

LatencyStats latency_stats(std::vector<double> samples)
{
    if (samples.empty()) {
        throw EmptySample();
    }
    std::sort(samples.begin(), samples.end());
    LatencyStats stats;
    stats.count = samples.size();
    stats.min_ms = samples.front();
    stats.max_ms = samples.back();
    stats.mean_ms = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    stats.mean_ms = std::clamp(stats.mean_ms, stats.min_ms, stats.max_ms);
    stats.p50_ms = nearest_rank(samples, 50.0);
    stats.p90_ms = nearest_rank(samples, 90.0);
    return stats;
}

NamedProfile named_profile(std::string_view spec)
{
    return NamedProfile{std::string(spec), resolve_profile(spec)};
}

double cost_delta_pct(double baseline_usd, double candidate_usd)
{
    if (baseline_usd == 0.0) {
        return 0.0;
    }
    return (baseline_usd - candidate_usd) / baseline_usd * 100.0;
}

namespace {

std::string record_id(const DatasetRecord& rec, std::size_t index)
{
    return fmt::format("{}#{}", rec.ex_id, index);
}

// Calls fn(i) for i in [0, n) on up to `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn)
{
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                fn(i);
            }
        });
    }
}

struct RunSlot {
    std::optional<LlmUsage> usage;
    std::optional<RecordFailure> failure;
};

// Review pipeline over every (record, trial) pair; slots are in record order.
std::vector<RunSlot> review_runs(const Bank& bank, const NamedProfile& profile, const Gateway& gateway,
                                 const HarnessOptions& options)
{
    const std::size_t trials = static_cast<std::size_t>(std::max(1, options.trials));
    std::vector<RunSlot> slots(bank.records.size() * trials);
    parallel_for(slots.size(), options.workers, [&](std::size_t slot) {
        const std::size_t index = slot / trials;
        const auto& rec = bank.records[index];
        const Exercise* exercise = bank.find(rec.ex_id);
        try {
            const auto result = run_review_pipeline(*exercise, rec.sub_code, profile.profile, gateway, options.review);
            slots[slot].usage = result.usage;
        } catch (const std::exception& e) {
            slots[slot].failure =
                RecordFailure{record_id(rec, index), profile.label,
                              trials > 1 ? fmt::format("trial {}: {}", slot % trials + 1, e.what()) : e.what()};
        }
    });
    return slots;
}

std::vector<RecordFailure> sorted_failures(std::vector<RecordFailure> failures)
{
    std::sort(failures.begin(), failures.end(), [](const auto& a, const auto& b) {
        return std::tie(a.profile, a.record_id, a.message) < std::tie(b.profile, b.record_id, b.message);
    });
    return failures;
}

} // namespace

JudgeRun evaluate_records(const Bank& bank, const NamedProfile& profile, const Gateway& gateway,
                          const HarnessOptions& options)
{
    std::vector<std::optional<EvalRecord>> evaluated(bank.records.size());
    std::vector<std::optional<RecordFailure>> failed(bank.records.size());
    parallel_for(bank.records.size(), options.workers, [&](std::size_t index) {
        const auto& rec = bank.records[index];
        const Exercise* exercise = bank.find(rec.ex_id);
        try {
            auto result = run_submission_flow(*exercise, rec.sub_code, profile.profile, gateway, options.submission);
            CorrectnessVerdict verdict;
            if (auto* judged = std::get_if<CorrectnessVerdict>(&result.outcome)) {
                verdict = std::move(*judged);
            } else if (std::holds_alternative<EmptySubmission>(result.outcome)) {
                verdict = {JudgeState::Error, "empty submission", std::nullopt};
            } else {
                verdict = {JudgeState::Error, "code validation failed", std::nullopt};
            }
            evaluated[index] = EvalRecord{record_id(rec, index), rec, std::move(verdict), result.usage, profile.label};
        } catch (const std::exception& e) {
            failed[index] = RecordFailure{record_id(rec, index), profile.label, e.what()};
        }
    });

    JudgeRun run;
    for (auto& rec : evaluated) {
        if (rec) {
            run.records.push_back(std::move(*rec));
        }
    }
    for (auto& f : failed) {
        if (f) {
            run.failures.push_back(std::move(*f));
        }
    }
    std::sort(run.records.begin(), run.records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    run.failures = sorted_failures(std::move(run.failures));
    return run;
}

LatencyReport latency_bench(const Bank& bank, const std::vector<NamedProfile>& profiles, const Gateway& gateway,
                            const HarnessOptions& options)
{
    LatencyReport report;
    for (const auto& profile : profiles) {
        std::vector<double> samples;
        for (auto& slot : review_runs(bank, profile, gateway, options)) {
            if (slot.usage) {
                samples.push_back(slot.usage->latency_ms);
            } else {
                report.failures.push_back(std::move(*slot.failure));
            }
        }
        report.per_profile.emplace_back(profile.label, latency_stats(std::move(samples)));
    }
    report.failures = sorted_failures(std::move(report.failures));
    return report;
}

CostReport cost_bench(const Bank& bank, const std::vector<NamedProfile>& profiles, const Gateway& gateway,
                      const PricingTable& pricing, const HarnessOptions& options)
{
    CostReport report;
    report.model_id = gateway.model_id();
    for (const auto& profile : profiles) {
        LlmUsage total;
        std::size_t runs = 0;
        for (auto& slot : review_runs(bank, profile, gateway, options)) {
            if (slot.usage) {
                total += *slot.usage;
                ++runs;
            } else {
                report.failures.push_back(std::move(*slot.failure));
            }
        }
        if (runs == 0) {
            throw EmptySample();
        }
        // Cost is linear in tokens, so the mean cost is the cost of the total over the run count.
        const auto total_cost = estimate_cost(total, pricing, gateway.model_id());
        const double n = static_cast<double>(runs);
        ProfileCost cost;
        cost.profile = profile.label;
        cost.runs = runs;
        cost.mean_input_tokens = static_cast<double>(total.input_tokens) / n;
        cost.mean_output_tokens = static_cast<double>(total.output_tokens) / n;
        cost.mean_cost = CostEstimate{total_cost.usd / n, total_cost.input_usd / n, total_cost.output_usd / n};
        report.per_profile.push_back(std::move(cost));
    }
    if (report.per_profile.size() >= 2) {
        report.delta_pct =
            cost_delta_pct(report.per_profile.front().mean_cost.usd, report.per_profile.back().mean_cost.usd);
    }
    report.failures = sorted_failures(std::move(report.failures));
    return report;
}

namespace {

std::string json_quote(std::string_view s)
{
    return nlohmann::json(std::string(s)).dump();
}

std::string csv_field(std::string_view s)
{
    if (s.find_first_of(",\"\n") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::string failures_json(const std::vector<RecordFailure>& failures)
{
    if (failures.empty()) {
        return "[]";
    }
    std::string out = "[\n";
    for (std::size_t i = 0; i < failures.size(); ++i) {
        const auto& f = failures[i];
        out += fmt::format("    {{\"record\": {}, \"profile\": {}, \"message\": {}}}{}\n", json_quote(f.record_id),
                           json_quote(f.profile), json_quote(f.message), i + 1 < failures.size() ? "," : "");
    }
    return out + "  ]";
}

std::vector<RecordFailure> parse_failures(const nlohmann::json& node)
{
    std::vector<RecordFailure> out;
    for (const auto& f : node) {
        out.push_back({f.at("record").get<std::string>(), f.at("profile").get<std::string>(),
                       f.at("message").get<std::string>()});
    }
    return out;
}

nlohmann::json parse_document(std::string_view text)
{
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("malformed report: ") + e.what());
    }
}

} // namespace

std::string render_report(const FailureRateReport& report, ReportFormat format)
{
    std::string out;
    if (format == ReportFormat::Csv) {
        out = "error_type,n_i,N,R_i\n";
        for (const auto& [type, slot] : report.per_type) {
            out += fmt::format("{},{},{},{:.2f}\n", to_string(type), slot.failed, report.total, slot.rate_pct);
        }
        return out;
    }
    out = fmt::format("{{\n  \"N\": {},\n  \"per_type\": ", report.total);
    if (report.per_type.empty()) {
        out += "[]";
    } else {
        out += "[\n";
        std::size_t i = 0;
        for (const auto& [type, slot] : report.per_type) {
            out += fmt::format("    {{\"error_type\": {}, \"n_i\": {}, \"R_i\": {:.2f}}}{}\n", json_quote(to_string(type)),
                               slot.failed, slot.rate_pct, ++i < report.per_type.size() ? "," : "");
        }
        out += "  ]";
    }
    return out + "\n}\n";
}

std::string render_report(const LatencyReport& report, ReportFormat format)
{
    std::string out;
    if (format == ReportFormat::Csv) {
        out = "profile,count,mean_ms,min_ms,max_ms,p50_ms,p90_ms\n";
        for (const auto& [label, s] : report.per_profile) {
            out += fmt::format("{},{},{:.1f},{:.1f},{:.1f},{:.1f},{:.1f}\n", csv_field(label), s.count, s.mean_ms,
                               s.min_ms, s.max_ms, s.p50_ms, s.p90_ms);
        }
        return out;
    }
    out = "{\n  \"profiles\": ";
    if (report.per_profile.empty()) {
        out += "[]";
    } else {
        out += "[\n";
        for (std::size_t i = 0; i < report.per_profile.size(); ++i) {
            const auto& [label, s] = report.per_profile[i];
            out += fmt::format("    {{\"profile\": {}, \"count\": {}, \"mean_ms\": {:.1f}, \"min_ms\": {:.1f}, "
                               "\"max_ms\": {:.1f}, \"p50_ms\": {:.1f}, \"p90_ms\": {:.1f}}}{}\n",
                               json_quote(label), s.count, s.mean_ms, s.min_ms, s.max_ms, s.p50_ms, s.p90_ms,
                               i + 1 < report.per_profile.size() ? "," : "");
        }
        out += "  ]";
    }
    out += ",\n  \"failures\": " + failures_json(report.failures) + "\n}\n";
    return out;
}

std::string render_report(const CostReport& report, ReportFormat format)
{
    std::string out;
    if (format == ReportFormat::Csv) {
        out = "profile,runs,mean_input_tokens,mean_output_tokens,input_usd,output_usd,usd,delta_pct\n";
        const double baseline = report.per_profile.empty() ? 0.0 : report.per_profile.front().mean_cost.usd;
        for (const auto& p : report.per_profile) {
            out += fmt::format("{},{},{:.2f},{:.2f},{:.5f},{:.5f},{:.5f},{:.2f}\n", csv_field(p.profile), p.runs,
                               p.mean_input_tokens, p.mean_output_tokens, p.mean_cost.input_usd,
                               p.mean_cost.output_usd, p.mean_cost.usd, cost_delta_pct(baseline, p.mean_cost.usd));
        }
        return out;
    }
    out = fmt::format("{{\n  \"model\": {},\n  \"profiles\": ", json_quote(report.model_id));
    if (report.per_profile.empty()) {
        out += "[]";
    } else {
        out += "[\n";
        for (std::size_t i = 0; i < report.per_profile.size(); ++i) {
            const auto& p = report.per_profile[i];
            out += fmt::format("    {{\"profile\": {}, \"runs\": {}, \"mean_input_tokens\": {:.2f}, "
                               "\"mean_output_tokens\": {:.2f}, \"input_usd\": {:.5f}, \"output_usd\": {:.5f}, "
                               "\"usd\": {:.5f}}}{}\n",
                               json_quote(p.profile), p.runs, p.mean_input_tokens, p.mean_output_tokens,
                               p.mean_cost.input_usd, p.mean_cost.output_usd, p.mean_cost.usd,
                               i + 1 < report.per_profile.size() ? "," : "");
        }
        out += "  ]";
    }
    out += fmt::format(",\n  \"delta_pct\": {:.2f},\n  \"failures\": {}\n}}\n", report.delta_pct,
                       failures_json(report.failures));
    return out;
}

FailureRateReport parse_failure_rate_report(std::string_view text)
{
    const auto doc = parse_document(text);
    try {
        FailureRateReport report;
        report.total = doc.at("N").get<std::uint64_t>();
        for (const auto& row : doc.at("per_type")) {
            const auto name = row.at("error_type").get<std::string>();
            const auto type = parse_error_type(name);
            if (!type) {
                throw Error("unknown error type '" + name + "' in report");
            }
            report.per_type[*type] = {row.at("n_i").get<std::uint64_t>(), row.at("R_i").get<double>()};
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed failure-rate report: ") + e.what());
    }
}

LatencyReport parse_latency_report(std::string_view text)
{
    const auto doc = parse_document(text);
    try {
        LatencyReport report;
        for (const auto& row : doc.at("profiles")) {
            LatencyStats s;
            s.count = row.at("count").get<std::size_t>();
            s.mean_ms = row.at("mean_ms").get<double>();
            s.min_ms = row.at("min_ms").get<double>();
            s.max_ms = row.at("max_ms").get<double>();
            s.p50_ms = row.at("p50_ms").get<double>();
            s.p90_ms = row.at("p90_ms").get<double>();
            report.per_profile.emplace_back(row.at("profile").get<std::string>(), s);
        }
        report.failures = parse_failures(doc.at("failures"));
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed latency report: ") + e.what());
    }
}

CostReport parse_cost_report(std::string_view text)
{
    const auto doc = parse_document(text);
    try {
        CostReport report;
        report.model_id = doc.at("model").get<std::string>();
        for (const auto& row : doc.at("profiles")) {
            ProfileCost p;
            p.profile = row.at("profile").get<std::string>();
            p.runs = row.at("runs").get<std::size_t>();
            p.mean_input_tokens = row.at("mean_input_tokens").get<double>();
            p.mean_output_tokens = row.at("mean_output_tokens").get<double>();
            p.mean_cost.input_usd = row.at("input_usd").get<double>();
            p.mean_cost.output_usd = row.at("output_usd").get<double>();
            p.mean_cost.usd = row.at("usd").get<double>();
            report.per_profile.push_back(std::move(p));
        }
        report.delta_pct = doc.at("delta_pct").get<double>();
        report.failures = parse_failures(doc.at("failures"));
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed cost report: ") + e.what());
    }
}

void emit_report(std::string_view content, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FileUnwritable(path);
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw FileUnwritable(path);
    }
}

} // namespace tutor
