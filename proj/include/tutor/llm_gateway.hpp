#pragma once

#include "tutor/error.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace tutor {

struct LlmRequest {
    std::string system_text;
    std::string user_text;
    int max_output_tokens = 256;
    double temperature = 1.0;
    double top_p = 1.0;
    std::string model_id;
};

/// Throws std::invalid_argument when a sampling field is out of range.
void check_request(const LlmRequest& req);

/// Stable hex digest of every request field; keys the mock's digest mode.
std::string request_digest(const LlmRequest& req);

struct LlmUsage {
    std::uint64_t input_tokens = 0;
    std::uint64_t output_tokens = 0;
    double latency_ms = 0.0;
    std::uint64_t call_count = 0;

    LlmUsage& operator+=(const LlmUsage& other);
    friend LlmUsage operator+(LlmUsage a, const LlmUsage& b) { return a += b; }
    friend bool operator==(const LlmUsage&, const LlmUsage&) = default;
};

struct LlmResponse {
    std::string text;
    LlmUsage usage;
    int attempts = 1;
};

enum class GatewayErrorKind { Timeout, Auth, RateLimit, Protocol };

std::string_view to_string(GatewayErrorKind kind);
std::optional<GatewayErrorKind> parse_gateway_error_kind(std::string_view name);

class GatewayError : public Error {
public:
    GatewayError(GatewayErrorKind kind, int attempts, std::string detail, std::string stage = {});

    GatewayErrorKind kind() const { return kind_; }
    int attempts() const { return attempts_; }
    const std::string& detail() const { return detail_; }
    /// Pipeline stage that issued the failing call ("rnp", "rcg", "judge"), empty if unknown.
    const std::string& stage() const { return stage_; }

    GatewayError with_stage(std::string stage) const { return {kind_, attempts_, detail_, std::move(stage)}; }

private:
    GatewayErrorKind kind_;
    int attempts_;
    std::string detail_;
    std::string stage_;
};

/// Thrown by providers for a single failed attempt; the gateway decides whether to retry.
class ProviderFailure : public Error {
public:
    ProviderFailure(GatewayErrorKind kind, std::string detail);
    GatewayErrorKind kind() const { return kind_; }

private:
    GatewayErrorKind kind_;
};

struct ProviderReply {
    std::string text;
    std::optional<std::uint64_t> input_tokens;
    std::optional<std::uint64_t> output_tokens;
    // Set by simulated providers; otherwise the gateway measures wall-clock time.
    std::optional<double> latency_ms;
};

class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    virtual ProviderReply complete(const LlmRequest& req) = 0;
    virtual bool is_mock() const { return false; }
};

struct RetryPolicy {
    int max_retries = 2;
    std::chrono::milliseconds base_delay{250};
};

/// Thread-safe front door to a provider: validates requests, retries
/// transient failures with exponential backoff and accounts tokens and latency.
class Gateway {
public:
    Gateway(std::shared_ptr<LlmProvider> provider, std::string model_id, RetryPolicy retry = {});

    LlmResponse send(const LlmRequest& req) const;

    const std::string& model_id() const { return model_id_; }
    bool mock_mode() const { return provider_->is_mock(); }
    LlmProvider& provider() const { return *provider_; }

private:
    std::shared_ptr<LlmProvider> provider_;
    std::string model_id_;
    RetryPolicy retry_;
};

/// ceil(UTF-8 byte length / 4). Used only when the provider reports no usage.
std::uint64_t approximate_tokens(std::string_view text);

struct ModelPrice {
    double input_usd_per_1k = 0.0;
    double output_usd_per_1k = 0.0;
};

struct PricingTable {
    std::map<std::string, ModelPrice> entries;
};

PricingTable load_pricing(const std::filesystem::path& path);

struct CostEstimate {
    double usd = 0.0;
    double input_usd = 0.0;
    double output_usd = 0.0;

    friend bool operator==(const CostEstimate&, const CostEstimate&) = default;
};

class UnknownModel : public Error {
public:
    explicit UnknownModel(std::string model_id);
};

CostEstimate estimate_cost(const LlmUsage& usage, const PricingTable& pricing, std::string_view model_id);

struct GatewayConfig {
    std::string api_key;
    std::string model_id = "gpt-4";
    std::string base_url = "https://api.openai.com/v1";
    std::optional<std::filesystem::path> mock_script;
    std::chrono::seconds timeout{60};

    /// Reads LLM_API_KEY, LLM_MODEL, LLM_BASE_URL and LLM_MOCK_SCRIPT.
    static GatewayConfig from_env();
};

/// Mock provider when a script is configured, live chat-completion client otherwise.
std::shared_ptr<Gateway> make_gateway(const GatewayConfig& config, RetryPolicy retry = {});

} // namespace tutor
