#pragma once

#include "tutor/llm_gateway.hpp"

#include <filesystem>
#include <mutex>
#include <vector>

#include "json.hpp"

namespace tutor {

/// A canned reply, or a scripted failure.
struct MockEntry {
    std::string text;
    std::optional<std::uint64_t> input_tokens;
    std::optional<std::uint64_t> output_tokens;
    std::optional<GatewayErrorKind> fail;
    // In digest/rule/default position: the first `fail_times` hits fail with
    // `fail` (Timeout when unset), later hits reply normally.
    int fail_times = 0;
};

struct MockRule {
    std::vector<std::string> contains;  // all must occur in system_text + user_text
    std::optional<int> max_output_tokens;
    MockEntry entry;
};

/// Simulated latency = base_ms + per_max_output_token_ms * request.max_output_tokens.
struct MockLatency {
    double base_ms = 0.0;
    double per_max_output_token_ms = 0.0;
};

struct MockScript {
    std::map<std::string, MockEntry> by_digest;
    std::vector<MockEntry> sequence;
    std::vector<MockRule> rules;
    std::optional<MockEntry> fallback;
    std::optional<MockLatency> latency;
};

MockScript parse_mock_script(const nlohmann::json& document);
MockScript load_mock_script(const std::filesystem::path& path);

struct MockCall {
    std::size_t index;  // 0-based order of arrival
    std::string digest;
    LlmRequest request;
    std::string source;  // "digest", "sequence", "rule:<n>", "default"
    bool failed = false;
};

/// Deterministic script-driven provider. Lookup order per call: digest map,
/// next unused sequence entry, first matching rule, default. A call with no
/// match fails with a Protocol error.
class MockProvider final : public LlmProvider {
public:
    explicit MockProvider(MockScript script);

    ProviderReply complete(const LlmRequest& req) override;
    bool is_mock() const override { return true; }

    std::vector<MockCall> calls() const;
    std::size_t call_count() const;
    void clear_log();

private:
    struct Resolved {
        const MockEntry* entry = nullptr;
        int* hit_counter = nullptr;
        std::string source;
    };
    Resolved resolve(const LlmRequest& req, const std::string& digest);

    MockScript script_;
    std::vector<int> rule_hits_;
    std::map<std::string, int> digest_hits_;
    int default_hits_ = 0;
    std::size_t next_sequence_ = 0;
    mutable std::mutex mutex_;
    std::vector<MockCall> log_;
};

} // namespace tutor
