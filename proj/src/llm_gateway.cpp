#include "tutor/llm_gateway.hpp"

#include "tutor/chat_provider.hpp"
#include "tutor/mock_provider.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"

namespace tutor {

void check_request(const LlmRequest& req)
{
    if (req.max_output_tokens < 1) {
        throw std::invalid_argument("max_output_tokens must be >= 1");
    }
    if (!(req.temperature >= 0.0 && req.temperature <= 2.0)) {
        throw std::invalid_argument("temperature must be in [0, 2]");
    }
    if (!(req.top_p > 0.0 && req.top_p <= 1.0)) {
        throw std::invalid_argument("top_p must be in (0, 1]");
    }
}

std::string request_digest(const LlmRequest& req)
{
    nlohmann::ordered_json canonical;
    canonical["model_id"] = req.model_id;
    canonical["system_text"] = req.system_text;
    canonical["user_text"] = req.user_text;
    canonical["max_output_tokens"] = req.max_output_tokens;
    canonical["temperature"] = req.temperature;
    canonical["top_p"] = req.top_p;

    // FNV-1a, 64-bit
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical.dump()) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", hash);
}

LlmUsage& LlmUsage::operator+=(const LlmUsage& other)
{
    input_tokens += other.input_tokens;
    output_tokens += other.output_tokens;
    latency_ms += other.latency_ms;
    call_count += other.call_count;
    return *this;
}

std::string_view to_string(GatewayErrorKind kind)
{
    switch (kind) {
    case GatewayErrorKind::Timeout: return "Timeout";
    case GatewayErrorKind::Auth: return "Auth";
    case GatewayErrorKind::RateLimit: return "RateLimit";
    case GatewayErrorKind::Protocol: return "Protocol";
    }
    return "?";
}

std::optional<GatewayErrorKind> parse_gateway_error_kind(std::string_view name)
{
    for (auto kind : {GatewayErrorKind::Timeout, GatewayErrorKind::Auth, GatewayErrorKind::RateLimit,
                      GatewayErrorKind::Protocol}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    return std::nullopt;
}

GatewayError::GatewayError(GatewayErrorKind kind, int attempts, std::string detail, std::string stage)
    : Error(fmt::format("{}{} error after {} attempt(s): {}", stage.empty() ? "" : stage + ": ",
                        to_string(kind), attempts, detail)),
      kind_(kind),
      attempts_(attempts),
      detail_(std::move(detail)),
      stage_(std::move(stage))
{
}

ProviderFailure::ProviderFailure(GatewayErrorKind kind, std::string detail)
    : Error(std::move(detail)), kind_(kind)
{
}

Gateway::Gateway(std::shared_ptr<LlmProvider> provider, std::string model_id, RetryPolicy retry)
    : provider_(std::move(provider)), model_id_(std::move(model_id)), retry_(retry)
{
    if (!provider_) {
        throw std::invalid_argument("gateway needs a provider");
    }
}

LlmResponse Gateway::send(const LlmRequest& req) const
{
    check_request(req);
    const int max_attempts = 1 + std::max(0, retry_.max_retries);
    for (int attempt = 1;; ++attempt) {
        try {
            const auto started = std::chrono::steady_clock::now();
            ProviderReply reply = provider_->complete(req);
            const auto elapsed = std::chrono::steady_clock::now() - started;

            LlmResponse response;
            response.attempts = attempt;
            response.usage.call_count = 1;
            response.usage.input_tokens =
                reply.input_tokens.value_or(approximate_tokens(req.system_text) + approximate_tokens(req.user_text));
            response.usage.output_tokens = reply.output_tokens.value_or(approximate_tokens(reply.text));
            response.usage.latency_ms = reply.latency_ms.value_or(
                std::chrono::duration<double, std::milli>(elapsed).count());
            response.text = std::move(reply.text);
            return response;
        } catch (const ProviderFailure& failure) {
            if (failure.kind() == GatewayErrorKind::Auth || attempt >= max_attempts) {
                throw GatewayError(failure.kind(), attempt, failure.what());
            }
        }
        if (retry_.base_delay.count() > 0) {
            std::this_thread::sleep_for(retry_.base_delay * (1 << (attempt - 1)));
        }
    }
}

std::uint64_t approximate_tokens(std::string_view text)
{
    return (text.size() + 3) / 4;
}

PricingTable load_pricing(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read pricing table: " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("malformed pricing table: ") + e.what());
    }
    if (!doc.is_object()) {
        throw Error("pricing table must map model ids to rates");
    }
    PricingTable table;
    for (const auto& [model, rates] : doc.items()) {
        auto rate = [&](const char* key) {
            if (!rates.is_object() || !rates.contains(key) || !rates.at(key).is_number()) {
                throw Error("pricing entry '" + model + "' lacks numeric '" + key + "'");
            }
            const double value = rates.at(key).get<double>();
            if (value < 0.0) {
                throw Error("pricing entry '" + model + "' has a negative rate");
            }
            return value;
        };
        table.entries[model] = ModelPrice{rate("input_usd_per_1k"), rate("output_usd_per_1k")};
    }
    return table;
}

UnknownModel::UnknownModel(std::string model_id)
    : Error("no pricing entry for model '" + model_id + "'")
{
}

CostEstimate estimate_cost(const LlmUsage& usage, const PricingTable& pricing, std::string_view model_id)
{
    const auto it = pricing.entries.find(std::string(model_id));
    if (it == pricing.entries.end()) {
        throw UnknownModel(std::string(model_id));
    }
    CostEstimate cost;
    cost.input_usd = static_cast<double>(usage.input_tokens) / 1000.0 * it->second.input_usd_per_1k;
    cost.output_usd = static_cast<double>(usage.output_tokens) / 1000.0 * it->second.output_usd_per_1k;
    cost.usd = cost.input_usd + cost.output_usd;
    return cost;
}

GatewayConfig GatewayConfig::from_env()
{
    GatewayConfig config;
    auto env = [](const char* name) -> std::optional<std::string> {
        const char* value = std::getenv(name);
        if (value == nullptr || *value == '\0') {
            return std::nullopt;
        }
        return std::string(value);
    };
    config.api_key = env("LLM_API_KEY").value_or("");
    if (auto model = env("LLM_MODEL")) {
        config.model_id = *model;
    }
    if (auto url = env("LLM_BASE_URL")) {
        config.base_url = *url;
    }
    if (auto script = env("LLM_MOCK_SCRIPT")) {
        config.mock_script = *script;
    }
    return config;
}

std::shared_ptr<Gateway> make_gateway(const GatewayConfig& config, RetryPolicy retry)
{
    std::shared_ptr<LlmProvider> provider;
    if (config.mock_script) {
        provider = std::make_shared<MockProvider>(load_mock_script(*config.mock_script));
    } else {
        provider = std::make_shared<ChatCompletionProvider>(config.base_url, config.api_key, config.timeout);
    }
    return std::make_shared<Gateway>(std::move(provider), config.model_id, retry);
}

} // namespace tutor
