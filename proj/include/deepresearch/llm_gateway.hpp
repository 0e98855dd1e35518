#pragma once

// Uniform client for all chat-completion backends (agent, summarizer,
// reranker, judge) plus a deterministic scripted mock backend for tests.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "deepresearch/core.hpp"
#include "deepresearch/util.hpp"

namespace deepresearch {

enum class ChatRole { system, user, assistant };

struct ChatMessage {
    ChatRole role = ChatRole::user;
    std::string content;
};

struct ChatRequest {
    std::string model_id;
    std::vector<ChatMessage> messages;
    // Absent params means "backend defaults" (used for judge requests).
    std::optional<GenerationParams> params;
    std::vector<std::string> want_logprobs_for;
};

enum class FinishReason { stop_sequence, length, end };

struct ChatResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::end;
    std::optional<std::string> matched_stop;   // present iff finish_reason == stop_sequence
    std::optional<std::map<std::string, double>> logprobs;  // candidate -> log prob
};

const char* chat_role_name(ChatRole role);
void to_json(json& j, const ChatRequest& req);
void to_json(json& j, const ChatResponse& resp);
void from_json(const json& j, ChatResponse& resp);

class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const ChatRequest& req) = 0;
};

// Scripted backend. The script maps request matchers to canned replies:
//   {"replies": [{"match": {"model": ..., "last_contains": ..., "any_contains": ...},
//                 "text": ..., "logprobs": {...}, "finish": "end"|"length",
//                 "error": "transport"|"protocol", "reusable": true}, ...]}
// Non-reusable entries are consumed in file order; the first unconsumed entry
// whose matcher accepts the request wins, so identical request sequences yield
// identical response sequences.
class MockBackend : public Backend {
public:
    explicit MockBackend(const json& script);
    static std::unique_ptr<MockBackend> from_file(const std::string& path);

    ChatResponse complete(const ChatRequest& req) override;

    // Test introspection: every request seen, in arrival order.
    std::vector<ChatRequest> requests() const;

private:
    struct Entry;
    struct State;
    std::shared_ptr<State> state_;
};

struct HttpBackendOptions {
    std::string base_url;   // e.g. http://127.0.0.1:8000/v1
    std::string model;      // wire model name
    std::string api_key;    // empty = no Authorization header
    int connect_timeout_ms = 5000;
    int read_timeout_ms = 120000;
};

// OpenAI-compatible chat-completions client (POST {base_url}/chat/completions).
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendOptions options);
    ~HttpBackend() override;

    ChatResponse complete(const ChatRequest& req) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Record/replay fixture mode: RecordBackend appends {request, response} records
// to a file while delegating; ReplayBackend serves them back in order,
// verifying each request hash against the recording.
class RecordBackend : public Backend {
public:
    RecordBackend(std::unique_ptr<Backend> inner, std::string path);
    ChatResponse complete(const ChatRequest& req) override;

private:
    struct State;
    std::shared_ptr<State> state_;
};

class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(const std::string& path);
    ChatResponse complete(const ChatRequest& req) override;

private:
    struct State;
    std::shared_ptr<State> state_;
};

std::uint64_t chat_request_hash(const ChatRequest& req);

struct GatewayOptions {
    int max_attempts = 3;        // total attempts for transport failures
    int retry_base_ms = 250;     // exponential backoff base, 0 disables sleeping
    int max_inflight_per_backend = 8;
};

// Routes requests to the backend registered for req.model_id, enforces stop
// sequences client-side, retries transport failures, and caps per-backend
// concurrency.
class Gateway {
public:
    explicit Gateway(GatewayOptions options = {});

    void register_backend(const std::string& model_id, std::shared_ptr<Backend> backend);
    bool has_backend(const std::string& model_id) const;
    const GatewayOptions& options() const { return options_; }

    ChatResponse complete(const ChatRequest& req) const;

    // Normalized p(yes) from the reranker prompt over (query, document).
    // Uses logprobs when available, else maps a literal yes/no reply to 1/0.
    double yes_probability(const std::string& model_id, const std::string& query,
                           const std::string& document) const;

private:
    struct Entry {
        std::shared_ptr<Backend> backend;
        std::shared_ptr<Semaphore> inflight;
    };
    GatewayOptions options_;
    std::map<std::string, Entry> backends_;
};

} // namespace deepresearch
