#include "tutor/chat_provider.hpp"

#include "httplib.h"
#include "json.hpp"

namespace tutor {

using nlohmann::json;

namespace {

// Splits "https://host:port/v1" into origin and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base_url)
{
    const auto scheme_end = base_url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = base_url.find('/', host_start);
    if (path_start == std::string::npos) {
        return {base_url, ""};
    }
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') {
        prefix.pop_back();
    }
    return {base_url.substr(0, path_start), prefix};
}

} // namespace

ChatCompletionProvider::ChatCompletionProvider(std::string base_url, std::string api_key,
                                               std::chrono::seconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout)
{
    std::tie(origin_, path_prefix_) = split_base_url(base_url);
}

std::string build_chat_body(const LlmRequest& req)
{
    json body;
    body["model"] = req.model_id;
    body["messages"] = json::array({
        {{"role", "system"}, {"content", req.system_text}},
        {{"role", "user"}, {"content", req.user_text}},
    });
    body["max_tokens"] = req.max_output_tokens;
    body["temperature"] = req.temperature;
    body["top_p"] = req.top_p;
    return body.dump();
}

ProviderReply parse_chat_reply(std::string_view raw)
{
    json body;
    try {
        body = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw ProviderFailure(GatewayErrorKind::Protocol, std::string("response is not JSON: ") + e.what());
    }
    try {
        ProviderReply reply;
        reply.text = body.at("choices").at(0).at("message").at("content").get<std::string>();
        if (body.contains("usage") && body.at("usage").is_object()) {
            const auto& usage = body.at("usage");
            if (usage.contains("prompt_tokens")) {
                reply.input_tokens = usage.at("prompt_tokens").get<std::uint64_t>();
            }
            if (usage.contains("completion_tokens")) {
                reply.output_tokens = usage.at("completion_tokens").get<std::uint64_t>();
            }
        }
        return reply;
    } catch (const json::exception& e) {
        throw ProviderFailure(GatewayErrorKind::Protocol, std::string("unexpected response shape: ") + e.what());
    }
}

std::optional<GatewayErrorKind> classify_http_status(int status)
{
    if (status >= 200 && status < 300) {
        return std::nullopt;
    }
    if (status == 401 || status == 403) {
        return GatewayErrorKind::Auth;
    }
    if (status == 429) {
        return GatewayErrorKind::RateLimit;
    }
    if (status == 408 || status == 504) {
        return GatewayErrorKind::Timeout;
    }
    return GatewayErrorKind::Protocol;
}

ProviderReply ChatCompletionProvider::complete(const LlmRequest& req)
{
    if (api_key_.empty()) {
        throw ProviderFailure(GatewayErrorKind::Auth, "LLM_API_KEY is not set");
    }
    httplib::Client client(origin_);
    if (!client.is_valid()) {
        throw ProviderFailure(GatewayErrorKind::Protocol, "unsupported base URL '" + origin_ + "'");
    }
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    client.set_bearer_token_auth(api_key_);

    const auto result = client.Post(path_prefix_ + "/chat/completions", build_chat_body(req), "application/json");
    if (!result) {
        const auto err = result.error();
        const auto kind = err == httplib::Error::Read || err == httplib::Error::Write ||
                                  err == httplib::Error::ConnectionTimeout
                              ? GatewayErrorKind::Timeout
                              : GatewayErrorKind::Protocol;
        throw ProviderFailure(kind, "transport error: " + httplib::to_string(err));
    }
    if (const auto failure = classify_http_status(result->status)) {
        throw ProviderFailure(*failure, "HTTP " + std::to_string(result->status) + ": " + result->body.substr(0, 200));
    }
    return parse_chat_reply(result->body);
}

} // namespace tutor
