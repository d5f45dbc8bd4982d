#pragma once

#include "tutor/llm_gateway.hpp"

namespace tutor {

/// Live provider speaking the OpenAI-style chat-completion HTTP interface.
class ChatCompletionProvider final : public LlmProvider {
public:
    /// `base_url` such as "https://api.openai.com/v1"; requests are posted to
    /// `<base_url>/chat/completions`.
    ChatCompletionProvider(std::string base_url, std::string api_key, std::chrono::seconds timeout);

    ProviderReply complete(const LlmRequest& req) override;

private:
    std::string origin_;       // scheme://host[:port]
    std::string path_prefix_;  // e.g. "/v1"
    std::string api_key_;
    std::chrono::seconds timeout_;
};

/// Request body: role-setting text as the system message, prompt as the user message.
std::string build_chat_body(const LlmRequest& req);

/// Extracts choices[0].message.content and the usage block. Throws
/// ProviderFailure(Protocol) on malformed bodies.
ProviderReply parse_chat_reply(std::string_view body);

/// HTTP status to failure kind; std::nullopt for 2xx.
std::optional<GatewayErrorKind> classify_http_status(int status);

} // namespace tutor
