#include "tutor/api.hpp"

#include "tutor/correctness.hpp"
#include "tutor/review.hpp"

#include "httplib.h"
#include "json.hpp"

#include <cstdlib>
#include <set>

namespace tutor {

using nlohmann::json;

std::string_view to_string(ApiErrorCode code)
{
    switch (code) {
    case ApiErrorCode::NotFound: return "NotFound";
    case ApiErrorCode::EmptyCode: return "EmptyCode";
    case ApiErrorCode::InvalidCode: return "InvalidCode";
    case ApiErrorCode::Upstream: return "Upstream";
    case ApiErrorCode::BadRequest: return "BadRequest";
    }
    return "?";
}

namespace {

std::optional<std::string> env(const char* name)
{
    const char* value = std::getenv(name);
    if (value == nullptr || *value == '\0') {
        return std::nullopt;
    }
    return std::string(value);
}

HttpResponse ok(const json& body)
{
    return {200, body.dump()};
}

HttpResponse fail(int status, ApiErrorCode code, std::string message, std::optional<json> details = std::nullopt)
{
    json error{{"code", to_string(code)}, {"message", std::move(message)}};
    if (details) {
        error["details"] = std::move(*details);
    }
    return {status, json{{"error", std::move(error)}}.dump()};
}

json usage_json(const LlmUsage& usage)
{
    return {{"input_tokens", usage.input_tokens},
            {"output_tokens", usage.output_tokens},
            {"latency_ms", usage.latency_ms},
            {"call_count", usage.call_count}};
}

json findings_json(const ValidationReport& report)
{
    json findings = json::array();
    for (const auto& f : report.findings) {
        findings.push_back({{"kind", to_string(f.kind)}, {"line", f.line}, {"message", f.message}});
    }
    return findings;
}

json tree_json(const CategoryNode& node)
{
    json exercises = json::array();
    for (const auto& e : node.exercises) {
        exercises.push_back({{"id", e.id}, {"title", e.title}});
    }
    json children = json::array();
    for (const auto& c : node.children) {
        children.push_back(tree_json(c));
    }
    return {{"name", node.name}, {"exercises", std::move(exercises)}, {"children", std::move(children)}};
}

std::string percent_decode(std::string_view in)
{
    std::string out;
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i] == '%' && i + 2 < in.size()) {
            const auto hex = std::string(in.substr(i + 1, 2));
            char* end = nullptr;
            const long v = std::strtol(hex.c_str(), &end, 16);
            if (end == hex.c_str() + 2) {
                out.push_back(static_cast<char>(v));
                i += 2;
                continue;
            }
        }
        out.push_back(in[i]);
    }
    return out;
}

struct CodeRequest {
    std::string exercise_id;
    std::string source;
    std::optional<std::string> profile;
};

// Returns an error message, or nothing when the body is well formed.
std::optional<std::string> parse_code_request(std::string_view body, CodeRequest& out)
{
    const auto doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        return "request body must be a JSON object";
    }
    static const std::set<std::string> allowed{"exercise_id", "source", "profile"};
    for (const auto& [key, _] : doc.items()) {
        if (!allowed.contains(key)) {
            return "unknown field '" + key + "'";
        }
    }
    if (!doc.contains("exercise_id") || !doc["exercise_id"].is_string() ||
        doc["exercise_id"].get<std::string>().empty()) {
        return "exercise_id must be a non-empty string";
    }
    if (!doc.contains("source") || !doc["source"].is_string()) {
        return "source must be a string";
    }
    out.exercise_id = doc["exercise_id"].get<std::string>();
    out.source = doc["source"].get<std::string>();
    if (doc.contains("profile")) {
        if (!doc["profile"].is_string()) {
            return "profile must be a string";
        }
        out.profile = doc["profile"].get<std::string>();
    }
    return std::nullopt;
}

HttpResponse upstream(const GatewayError& e)
{
    json details{{"kind", to_string(e.kind())}, {"attempts", e.attempts()}};
    if (!e.stage().empty()) {
        details["stage"] = e.stage();
    }
    return fail(502, ApiErrorCode::Upstream, "the language model is unavailable", std::move(details));
}

} // namespace

ServiceConfig ServiceConfig::from_env()
{
    ServiceConfig config;
    if (auto v = env("PROFILE_DEFAULT")) {
        config.default_profile = *v;
    }
    if (auto v = env("LEAK_THRESHOLD")) {
        config.leak_threshold = std::stod(*v);
    }
    if (auto v = env("RATE_LIMIT_PER_MIN")) {
        config.rate_limit_per_minute = std::stoi(*v);
    }
    if (auto v = env("CORS_ORIGIN")) {
        config.cors_origin = *v;
    }
    if (auto v = env("VALIDATOR_EXTERNAL_CMD")) {
        config.validator.external_cmd = *v;
    }
    if (auto v = env("ORACLE_PYTHON_CMD")) {
        config.oracle_python_cmd = *v;
    }
    return config;
}

RateLimiter::RateLimiter(int per_minute, std::function<Clock::time_point()> now)
    : per_minute_(per_minute), now_(std::move(now))
{
}

bool RateLimiter::allow(const std::string& client)
{
    if (per_minute_ <= 0) {
        return true;
    }
    const auto now = now_();
    std::lock_guard lock(mutex_);
    auto [it, inserted] = buckets_.try_emplace(client, Bucket{static_cast<double>(per_minute_), now});
    auto& bucket = it->second;
    if (!inserted) {
        const double minutes = std::chrono::duration<double, std::ratio<60>>(now - bucket.last).count();
        bucket.tokens = std::min<double>(per_minute_, bucket.tokens + std::max(0.0, minutes) * per_minute_);
        bucket.last = now;
    }
    if (bucket.tokens < 1.0) {
        return false;
    }
    bucket.tokens -= 1.0;
    return true;
}

TutorService::TutorService(std::shared_ptr<const Gateway> gateway, ServiceConfig config,
                           std::function<RateLimiter::Clock::time_point()> clock)
    : gateway_(std::move(gateway)), config_(std::move(config)), limiter_(config_.rate_limit_per_minute, std::move(clock))
{
    profiles_.emplace("initial", builtin_profile(ProfileName::Initial));
    profiles_.emplace("improved", builtin_profile(ProfileName::Improved));
    default_label_ = config_.default_profile;
    if (!profiles_.contains(default_label_)) {
        profiles_.emplace(default_label_, resolve_profile(default_label_));
    }
}

void TutorService::set_bank(std::shared_ptr<const Bank> bank)
{
    std::lock_guard lock(bank_mutex_);
    bank_ = std::move(bank);
}

std::shared_ptr<const Bank> TutorService::bank() const
{
    std::lock_guard lock(bank_mutex_);
    return bank_;
}

HttpResponse TutorService::handle(std::string_view method, std::string_view path, std::string_view body,
                                  const std::string& client)
{
    if (const auto q = path.find('?'); q != std::string_view::npos) {
        path = path.substr(0, q);
    }
    if (path.size() > 1 && path.back() == '/') {
        path.remove_suffix(1);
    }
    const auto bank = this->bank();
    if (method == "GET" && path == "/health") {
        if (!bank) {
            return {503, json{{"status", "loading"}}.dump()};
        }
        return health();
    }
    if (!bank) {
        return fail(503, ApiErrorCode::Upstream, "the exercise bank is still loading");
    }
    if (method == "GET" && path == "/exercises") {
        return list_exercises(*bank);
    }
    constexpr std::string_view prefix = "/exercises/";
    if (method == "GET" && path.starts_with(prefix) && path.size() > prefix.size()) {
        const auto id = path.substr(prefix.size());
        if (id.find('/') == std::string_view::npos) {
            return exercise_detail(*bank, percent_decode(id));
        }
    }
    if (method == "POST" && path == "/submissions") {
        return submit(*bank, body, client);
    }
    if (method == "POST" && path == "/reviews") {
        return review(*bank, body, client);
    }
    return fail(404, ApiErrorCode::NotFound, "no route for " + std::string(method) + " " + std::string(path));
}

HttpResponse TutorService::health() const
{
    return ok({{"status", "ok"}, {"model", gateway_->model_id()}, {"mock", gateway_->mock_mode()},
               {"profile", default_label_}});
}

HttpResponse TutorService::list_exercises(const Bank& bank) const
{
    return ok(tree_json(list_tree(bank)));
}

HttpResponse TutorService::exercise_detail(const Bank& bank, std::string_view id) const
{
    const Exercise* ex = bank.find(id);
    if (ex == nullptr) {
        return fail(404, ApiErrorCode::NotFound, "unknown exercise '" + std::string(id) + "'");
    }
    json examples = json::array();
    for (std::size_t i = 0; i < ex->input_examples.size(); ++i) {
        examples.push_back({{"input", ex->input_examples[i]}, {"output", ex->output_examples[i]}});
    }
    return ok({{"id", ex->id},
               {"title", ex->title},
               {"description", ex->description},
               {"examples", std::move(examples)},
               {"category_path", ex->category_path}});
}

HttpResponse TutorService::submit(const Bank& bank, std::string_view body, const std::string& client)
{
    CodeRequest req;
    if (auto error = parse_code_request(body, req)) {
        return fail(400, ApiErrorCode::BadRequest, *error);
    }
    const auto profile = profiles_.find(req.profile.value_or(default_label_));
    if (profile == profiles_.end()) {
        return fail(400, ApiErrorCode::BadRequest, "unknown profile '" + *req.profile + "'");
    }
    const Exercise* ex = bank.find(req.exercise_id);
    if (ex == nullptr) {
        return fail(404, ApiErrorCode::NotFound, "unknown exercise '" + req.exercise_id + "'");
    }
    if (!limiter_.allow(client)) {
        return fail(429, ApiErrorCode::BadRequest, "too many requests, try again in a minute");
    }
    SubmissionOptions options;
    options.validator = config_.validator;
    options.oracle_python_cmd = config_.oracle_python_cmd;
    options.leak_threshold = config_.leak_threshold;
    SubmissionResult result;
    try {
        result = run_submission_flow(*ex, req.source, profile->second, *gateway_, options);
    } catch (const GatewayError& e) {
        return upstream(e);
    }
    if (std::holds_alternative<EmptySubmission>(result.outcome)) {
        return fail(422, ApiErrorCode::EmptyCode, "the submission contains no code");
    }
    if (const auto* rejected = std::get_if<RejectedSubmission>(&result.outcome)) {
        return fail(422, ApiErrorCode::InvalidCode, "the submission has structural errors",
                    json{{"findings", findings_json(rejected->report)}});
    }
    const auto& verdict = std::get<CorrectnessVerdict>(result.outcome);
    json out{{"state", to_string(verdict.state)},
             {"reason", verdict.reason},
             {"error_type", verdict.error_type ? json(to_string(*verdict.error_type)) : json(nullptr)},
             {"usage", usage_json(result.usage)}};
    if (result.oracle) {
        out["oracle"] = {{"cases", result.oracle->cases},
                         {"passed", result.oracle->passed},
                         {"agrees", result.oracle->agrees}};
    }
    return ok(out);
}

HttpResponse TutorService::review(const Bank& bank, std::string_view body, const std::string& client)
{
    CodeRequest req;
    if (auto error = parse_code_request(body, req)) {
        return fail(400, ApiErrorCode::BadRequest, *error);
    }
    const auto profile = profiles_.find(req.profile.value_or(default_label_));
    if (profile == profiles_.end()) {
        return fail(400, ApiErrorCode::BadRequest, "unknown profile '" + *req.profile + "'");
    }
    const Exercise* ex = bank.find(req.exercise_id);
    if (ex == nullptr) {
        return fail(404, ApiErrorCode::NotFound, "unknown exercise '" + req.exercise_id + "'");
    }
    if (!limiter_.allow(client)) {
        return fail(429, ApiErrorCode::BadRequest, "too many requests, try again in a minute");
    }
    ReviewOptions options;
    options.validator = config_.validator;
    options.leak_threshold = config_.leak_threshold;
    ReviewResult result;
    try {
        result = run_review_pipeline(*ex, req.source, profile->second, *gateway_, options);
    } catch (const GatewayError& e) {
        return upstream(e);
    }
    if (std::holds_alternative<EmptySubmission>(result.outcome)) {
        return fail(422, ApiErrorCode::EmptyCode, "the submission contains no code");
    }
    if (const auto* rejected = std::get_if<RejectedSubmission>(&result.outcome)) {
        return fail(422, ApiErrorCode::InvalidCode, "the submission has structural errors",
                    json{{"findings", findings_json(rejected->report)}});
    }
    const auto& comment = std::get<ReviewComment>(result.outcome);
    json fixes = json::array();
    for (const auto& f : comment.fix_lines) {
        fixes.push_back({{"line", f.line}, {"hint", f.hint}});
    }
    return ok({{"review_needed", comment.review_needed},
               {"body_markdown", comment.body_markdown},
               {"fix_lines", std::move(fixes)},
               {"dropped_annotations", comment.dropped_annotations},
               {"redaction",
                {{"leaked", comment.redaction.leaked},
                 {"removed_blocks", comment.redaction.removed_blocks},
                 {"max_similarity", comment.redaction.max_similarity}}},
               {"usage", usage_json(result.usage)}});
}

void TutorService::mount(httplib::Server& server)
{
    server.set_default_headers({{"Access-Control-Allow-Origin", config_.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
        const auto out = handle(req.method, req.path, req.body, req.remote_addr);
        res.status = out.status;
        res.set_content(out.body, "application/json");
    };
    server.Get("/health", route);
    server.Get("/exercises", route);
    server.Get(R"(/exercises/[^/]+)", route);
    server.Post("/submissions", route);
    server.Post("/reviews", route);
    server.set_error_handler([this](const httplib::Request& req, httplib::Response& res) {
        if (res.status == 404 && res.body.empty()) {
            const auto out = handle(req.method, req.path, req.body, req.remote_addr);
            res.status = out.status;
            res.set_content(out.body, "application/json");
        }
    });
}

} // namespace tutor
