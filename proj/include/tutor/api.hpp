#pragma once

#include "tutor/code_validation.hpp"
#include "tutor/exercise_bank.hpp"
#include "tutor/llm_gateway.hpp"
#include "tutor/profile.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace httplib {
class Server;
}

namespace tutor {

enum class ApiErrorCode { NotFound, EmptyCode, InvalidCode, Upstream, BadRequest };

std::string_view to_string(ApiErrorCode code);

struct ServiceConfig {
    std::string default_profile = "improved";  // "initial", "improved" or a profile path
    double leak_threshold = 0.6;
    int rate_limit_per_minute = 10;  // 0 disables
    std::string cors_origin = "*";
    ValidatorConfig validator;
    std::optional<std::string> oracle_python_cmd;

    /// PROFILE_DEFAULT, LEAK_THRESHOLD, RATE_LIMIT_PER_MIN, CORS_ORIGIN,
    /// VALIDATOR_EXTERNAL_CMD, ORACLE_PYTHON_CMD.
    static ServiceConfig from_env();
};

/// Per-client token bucket: `per_minute` tokens, refilled continuously.
class RateLimiter {
public:
    using Clock = std::chrono::steady_clock;

    explicit RateLimiter(int per_minute, std::function<Clock::time_point()> now = Clock::now);

    bool allow(const std::string& client);

private:
    struct Bucket {
        double tokens;
        Clock::time_point last;
    };

    int per_minute_;
    std::function<Clock::time_point()> now_;
    std::mutex mutex_;
    std::map<std::string, Bucket> buckets_;
};

struct HttpResponse {
    int status = 200;
    std::string body;  // JSON
};

/// The learner-facing REST surface and the only path to the model. Request
/// bodies carry exercise_id, source and an optional profile; nothing else is
/// accepted, so no free text reaches the model. Solutions never appear in a
/// response.
class TutorService {
public:
    TutorService(std::shared_ptr<const Gateway> gateway, ServiceConfig config = {},
                 std::function<RateLimiter::Clock::time_point()> clock = RateLimiter::Clock::now);

    /// Publishes a bank; until the first call every endpoint answers 503.
    void set_bank(std::shared_ptr<const Bank> bank);
    std::shared_ptr<const Bank> bank() const;

    HttpResponse handle(std::string_view method, std::string_view path, std::string_view body = {},
                        const std::string& client = "local");

    /// Registers routes and CORS headers on an httplib server.
    void mount(httplib::Server& server);

    const std::string& default_profile_label() const { return default_label_; }

private:
    HttpResponse health() const;
    HttpResponse list_exercises(const Bank& bank) const;
    HttpResponse exercise_detail(const Bank& bank, std::string_view id) const;
    HttpResponse submit(const Bank& bank, std::string_view body, const std::string& client);
    HttpResponse review(const Bank& bank, std::string_view body, const std::string& client);

    std::shared_ptr<const Gateway> gateway_;
    ServiceConfig config_;
    std::map<std::string, PromptProfile> profiles_;
    std::string default_label_;
    RateLimiter limiter_;
    mutable std::mutex bank_mutex_;
    std::shared_ptr<const Bank> bank_;
};

} // namespace tutor
