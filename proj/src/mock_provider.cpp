#include "tutor/mock_provider.hpp"

#include <fstream>

namespace tutor {

using nlohmann::json;

namespace {

MockEntry parse_entry(const json& node, const std::string& where)
{
    if (node.is_string()) {
        MockEntry entry;
        entry.text = node.get<std::string>();
        return entry;
    }
    if (!node.is_object()) {
        throw Error("mock script: " + where + " must be a string or an object");
    }
    MockEntry entry;
    entry.text = node.value("text", std::string{});
    if (node.contains("input_tokens")) {
        entry.input_tokens = node.at("input_tokens").get<std::uint64_t>();
    }
    if (node.contains("output_tokens")) {
        entry.output_tokens = node.at("output_tokens").get<std::uint64_t>();
    }
    if (node.contains("fail")) {
        const auto name = node.at("fail").get<std::string>();
        entry.fail = parse_gateway_error_kind(name);
        if (!entry.fail) {
            throw Error("mock script: " + where + " has unknown failure kind '" + name + "'");
        }
    }
    entry.fail_times = node.value("fail_times", 0);
    return entry;
}

} // namespace

MockScript parse_mock_script(const json& doc)
{
    if (!doc.is_object()) {
        throw Error("mock script must be an object");
    }
    MockScript script;
    if (doc.contains("by_digest")) {
        for (const auto& [digest, entry] : doc.at("by_digest").items()) {
            script.by_digest[digest] = parse_entry(entry, "by_digest." + digest);
        }
    }
    if (doc.contains("sequence")) {
        const auto& seq = doc.at("sequence");
        for (std::size_t i = 0; i < seq.size(); ++i) {
            script.sequence.push_back(parse_entry(seq[i], "sequence[" + std::to_string(i) + "]"));
        }
    }
    if (doc.contains("rules")) {
        const auto& rules = doc.at("rules");
        for (std::size_t i = 0; i < rules.size(); ++i) {
            const auto& node = rules[i];
            MockRule rule;
            if (node.contains("contains")) {
                const auto& c = node.at("contains");
                if (c.is_string()) {
                    rule.contains.push_back(c.get<std::string>());
                } else {
                    rule.contains = c.get<std::vector<std::string>>();
                }
            }
            if (node.contains("max_output_tokens")) {
                rule.max_output_tokens = node.at("max_output_tokens").get<int>();
            }
            rule.entry = parse_entry(node, "rules[" + std::to_string(i) + "]");
            script.rules.push_back(std::move(rule));
        }
    }
    if (doc.contains("default")) {
        script.fallback = parse_entry(doc.at("default"), "default");
    }
    if (doc.contains("latency")) {
        const auto& lat = doc.at("latency");
        script.latency = MockLatency{lat.value("base_ms", 0.0), lat.value("per_max_output_token_ms", 0.0)};
    }
    return script;
}

MockScript load_mock_script(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read mock script: " + path.string());
    }
    try {
        return parse_mock_script(json::parse(in));
    } catch (const json::exception& e) {
        throw Error("malformed mock script " + path.string() + ": " + e.what());
    }
}

MockProvider::MockProvider(MockScript script)
    : script_(std::move(script)), rule_hits_(script_.rules.size(), 0)
{
}

MockProvider::Resolved MockProvider::resolve(const LlmRequest& req, const std::string& digest)
{
    if (auto it = script_.by_digest.find(digest); it != script_.by_digest.end()) {
        return {&it->second, &digest_hits_[digest], "digest"};
    }
    if (next_sequence_ < script_.sequence.size()) {
        return {&script_.sequence[next_sequence_++], nullptr, "sequence"};
    }
    const std::string haystack = req.system_text + "\n" + req.user_text;
    for (std::size_t i = 0; i < script_.rules.size(); ++i) {
        const auto& rule = script_.rules[i];
        if (rule.max_output_tokens && *rule.max_output_tokens != req.max_output_tokens) {
            continue;
        }
        bool all = true;
        for (const auto& needle : rule.contains) {
            if (haystack.find(needle) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (all) {
            return {&rule.entry, &rule_hits_[i], "rule:" + std::to_string(i)};
        }
    }
    if (script_.fallback) {
        return {&*script_.fallback, &default_hits_, "default"};
    }
    return {};
}

ProviderReply MockProvider::complete(const LlmRequest& req)
{
    const std::string digest = request_digest(req);
    std::lock_guard lock(mutex_);
    MockCall call{log_.size(), digest, req, {}, false};
    const Resolved found = resolve(req, digest);
    call.source = found.source;

    auto fail = [&](GatewayErrorKind kind, std::string detail) {
        call.failed = true;
        log_.push_back(std::move(call));
        throw ProviderFailure(kind, std::move(detail));
    };

    if (found.entry == nullptr) {
        fail(GatewayErrorKind::Protocol, "mock script has no response for request " + digest);
    }
    const MockEntry& entry = *found.entry;
    if (found.hit_counter != nullptr) {
        const int hit = (*found.hit_counter)++;
        if (hit < entry.fail_times) {
            fail(entry.fail.value_or(GatewayErrorKind::Timeout), "scripted failure");
        }
    } else if (entry.fail) {
        fail(*entry.fail, "scripted failure");
    }

    ProviderReply reply;
    reply.text = entry.text;
    // Respect the output cap the way a real provider truncates.
    const std::size_t cap_bytes = static_cast<std::size_t>(req.max_output_tokens) * 4;
    if (!entry.output_tokens && reply.text.size() > cap_bytes) {
        reply.text.resize(cap_bytes);
    }
    reply.input_tokens = entry.input_tokens;
    reply.output_tokens = entry.output_tokens;
    if (script_.latency) {
        reply.latency_ms = script_.latency->base_ms +
                           script_.latency->per_max_output_token_ms * static_cast<double>(req.max_output_tokens);
    }
    log_.push_back(std::move(call));
    return reply;
}

std::vector<MockCall> MockProvider::calls() const
{
    std::lock_guard lock(mutex_);
    return log_;
}

std::size_t MockProvider::call_count() const
{
    std::lock_guard lock(mutex_);
    return log_.size();
}

void MockProvider::clear_log()
{
    std::lock_guard lock(mutex_);
    log_.clear();
}

} // namespace tutor
