#include "deepresearch/llm_gateway.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "deepresearch/errors.hpp"
#include "deepresearch/prompts.hpp"

namespace deepresearch {

const char* chat_role_name(ChatRole role) {
    switch (role) {
        case ChatRole::system: return "system";
        case ChatRole::user: return "user";
        case ChatRole::assistant: return "assistant";
    }
    return "user";
}

void to_json(json& j, const ChatRequest& req) {
    json messages = json::array();
    for (const auto& m : req.messages) {
        messages.push_back({{"role", chat_role_name(m.role)}, {"content", m.content}});
    }
    j = json{{"model_id", req.model_id}, {"messages", std::move(messages)}};
    if (req.params) j["params"] = *req.params;
    if (!req.want_logprobs_for.empty()) j["want_logprobs_for"] = req.want_logprobs_for;
}

void to_json(json& j, const ChatResponse& resp) {
    const char* finish = resp.finish_reason == FinishReason::stop_sequence ? "stop_sequence"
                         : resp.finish_reason == FinishReason::length      ? "length"
                                                                           : "end";
    j = json{{"text", resp.text}, {"finish_reason", finish}};
    if (resp.matched_stop) j["matched_stop"] = *resp.matched_stop;
    if (resp.logprobs) j["logprobs"] = *resp.logprobs;
}

void from_json(const json& j, ChatResponse& resp) {
    resp.text = j.at("text").get<std::string>();
    const std::string finish = j.at("finish_reason").get<std::string>();
    if (finish == "stop_sequence") resp.finish_reason = FinishReason::stop_sequence;
    else if (finish == "length") resp.finish_reason = FinishReason::length;
    else resp.finish_reason = FinishReason::end;
    if (j.contains("matched_stop")) resp.matched_stop = j.at("matched_stop").get<std::string>();
    else resp.matched_stop.reset();
    if (j.contains("logprobs")) {
        resp.logprobs = j.at("logprobs").get<std::map<std::string, double>>();
    } else {
        resp.logprobs.reset();
    }
}

std::uint64_t chat_request_hash(const ChatRequest& req) {
    json j = req;
    return fnv1a64(j.dump());
}

// --- MockBackend ---------------------------------------------------------------

struct MockBackend::Entry {
    std::optional<std::string> match_model;
    std::optional<std::string> match_last_contains;
    std::optional<std::string> match_any_contains;
    std::string text;
    std::optional<std::map<std::string, double>> logprobs;
    FinishReason finish = FinishReason::end;
    std::string error;  // "", "transport", or "protocol"
    bool reusable = false;
    bool consumed = false;

    bool matches(const ChatRequest& req) const {
        if (match_model && *match_model != req.model_id) return false;
        if (match_last_contains) {
            if (req.messages.empty() ||
                req.messages.back().content.find(*match_last_contains) == std::string::npos) {
                return false;
            }
        }
        if (match_any_contains) {
            bool found = false;
            for (const auto& m : req.messages) {
                if (m.content.find(*match_any_contains) != std::string::npos) {
                    found = true;
                    break;
                }
            }
            if (!found) return false;
        }
        return true;
    }
};

struct MockBackend::State {
    std::vector<Entry> entries;
    std::vector<ChatRequest> seen;
    mutable std::mutex mutex;
};

MockBackend::MockBackend(const json& script) : state_(std::make_shared<State>()) {
    if (!script.is_object() || !script.contains("replies") || !script["replies"].is_array()) {
        throw Error(ErrorCode::config, "mock script must be an object with a 'replies' array");
    }
    for (const auto& item : script["replies"]) {
        Entry e;
        if (item.contains("match")) {
            const auto& m = item["match"];
            if (m.contains("model")) e.match_model = m["model"].get<std::string>();
            if (m.contains("last_contains")) e.match_last_contains = m["last_contains"].get<std::string>();
            if (m.contains("any_contains")) e.match_any_contains = m["any_contains"].get<std::string>();
        }
        e.text = item.value("text", std::string());
        if (item.contains("logprobs")) {
            e.logprobs = item["logprobs"].get<std::map<std::string, double>>();
        }
        const std::string finish = item.value("finish", std::string("end"));
        e.finish = finish == "length" ? FinishReason::length : FinishReason::end;
        e.error = item.value("error", std::string());
        e.reusable = item.value("reusable", false);
        state_->entries.push_back(std::move(e));
    }
}

std::unique_ptr<MockBackend> MockBackend::from_file(const std::string& path) {
    return std::make_unique<MockBackend>(json::parse(read_text_file(path)));
}

ChatResponse MockBackend::complete(const ChatRequest& req) {
    std::lock_guard<std::mutex> lock(state_->mutex);
    state_->seen.push_back(req);
    for (auto& entry : state_->entries) {
        if (entry.consumed && !entry.reusable) continue;
        if (!entry.matches(req)) continue;
        if (!entry.reusable) entry.consumed = true;
        if (entry.error == "transport") {
            throw Error(ErrorCode::transport, "mock backend: scripted transport failure");
        }
        if (entry.error == "protocol") {
            throw Error(ErrorCode::protocol, "mock backend: scripted protocol failure");
        }
        ChatResponse resp;
        resp.text = entry.text;
        resp.finish_reason = entry.finish;
        resp.logprobs = entry.logprobs;
        return resp;
    }
    std::string head = req.messages.empty() ? std::string() : req.messages.back().content;
    if (head.size() > 120) head = head.substr(0, 120) + "...";
    throw Error(ErrorCode::protocol,
                "mock backend: no scripted reply matches request to '" + req.model_id +
                    "' ending with: " + head);
}

std::vector<ChatRequest> MockBackend::requests() const {
    std::lock_guard<std::mutex> lock(state_->mutex);
    return state_->seen;
}

// --- HttpBackend --------------------------------------------------------------

struct HttpBackend::Impl {
    HttpBackendOptions options;
    std::string host;  // scheme://host[:port]
    std::string path;  // path prefix + /chat/completions
};

namespace {

void split_base_url(const std::string& base_url, std::string& host, std::string& prefix) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::config, "backend base_url must include a scheme: " + base_url);
    }
    const auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        host = base_url;
        prefix.clear();
    } else {
        host = base_url.substr(0, path_start);
        prefix = base_url.substr(path_start);
        while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    }
}

} // namespace

HttpBackend::HttpBackend(HttpBackendOptions options) : impl_(std::make_unique<Impl>()) {
    impl_->options = std::move(options);
    std::string prefix;
    split_base_url(impl_->options.base_url, impl_->host, prefix);
    impl_->path = prefix + "/chat/completions";
}

HttpBackend::~HttpBackend() = default;

ChatResponse HttpBackend::complete(const ChatRequest& req) {
    json body;
    body["model"] = impl_->options.model.empty() ? req.model_id : impl_->options.model;
    json messages = json::array();
    for (const auto& m : req.messages) {
        messages.push_back({{"role", chat_role_name(m.role)}, {"content", m.content}});
    }
    body["messages"] = std::move(messages);
    if (req.params) {
        body["temperature"] = req.params->temperature;
        body["top_p"] = req.params->top_p;
        body["max_tokens"] = req.params->max_tokens;
        if (req.params->top_k > 0) body["top_k"] = req.params->top_k;
        if (!req.params->stop_sequences.empty()) body["stop"] = req.params->stop_sequences;
    }
    if (!req.want_logprobs_for.empty()) {
        body["logprobs"] = true;
        body["top_logprobs"] = 20;
    }

    httplib::Client cli(impl_->host);
    cli.set_connection_timeout(0, impl_->options.connect_timeout_ms * 1000);
    cli.set_read_timeout(impl_->options.read_timeout_ms / 1000,
                         (impl_->options.read_timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (!impl_->options.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + impl_->options.api_key);
    }

    auto res = cli.Post(impl_->path, headers, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorCode::transport,
                    "chat-completions request failed: " + httplib::to_string(res.error()));
    }
    if (res->status >= 500) {
        throw Error(ErrorCode::transport,
                    "chat-completions backend returned " + std::to_string(res->status));
    }
    if (res->status != 200) {
        std::string snippet = res->body.substr(0, 200);
        throw Error(ErrorCode::protocol, "chat-completions backend returned " +
                                             std::to_string(res->status) + ": " + snippet);
    }

    json payload;
    try {
        payload = json::parse(res->body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::protocol, std::string("malformed backend payload: ") + e.what());
    }
    if (!payload.contains("choices") || !payload["choices"].is_array() ||
        payload["choices"].empty()) {
        throw Error(ErrorCode::protocol, "backend payload has no choices");
    }
    const json& choice = payload["choices"][0];

    ChatResponse resp;
    try {
        resp.text = choice.at("message").at("content").is_null()
                        ? std::string()
                        : choice.at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::protocol, std::string("backend payload missing message content: ") + e.what());
    }
    const std::string finish = choice.value("finish_reason", std::string("stop"));
    resp.finish_reason = finish == "length" ? FinishReason::length : FinishReason::end;

    if (!req.want_logprobs_for.empty() && choice.contains("logprobs") &&
        choice["logprobs"].is_object() && choice["logprobs"].contains("content") &&
        choice["logprobs"]["content"].is_array() && !choice["logprobs"]["content"].empty()) {
        const json& first = choice["logprobs"]["content"][0];
        if (first.contains("top_logprobs") && first["top_logprobs"].is_array()) {
            std::map<std::string, double> found;
            for (const auto& cand : req.want_logprobs_for) {
                const std::string want = to_lower_ascii(trim(cand));
                for (const auto& item : first["top_logprobs"]) {
                    if (!item.contains("token") || !item.contains("logprob")) continue;
                    if (to_lower_ascii(trim(item["token"].get<std::string>())) != want) continue;
                    const double lp = item["logprob"].get<double>();
                    auto it = found.find(cand);
                    if (it == found.end() || lp > it->second) found[cand] = lp;
                }
            }
            if (!found.empty()) resp.logprobs = std::move(found);
        }
    }
    return resp;
}

// --- Record / replay -------------------------------------------------------------

struct RecordBackend::State {
    std::unique_ptr<Backend> inner;
    std::string path;
    std::mutex mutex;
};

RecordBackend::RecordBackend(std::unique_ptr<Backend> inner, std::string path)
    : state_(std::make_shared<State>()) {
    state_->inner = std::move(inner);
    state_->path = std::move(path);
}

ChatResponse RecordBackend::complete(const ChatRequest& req) {
    ChatResponse resp = state_->inner->complete(req);
    std::lock_guard<std::mutex> lock(state_->mutex);
    std::ofstream out(state_->path, std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot append to recording: " + state_->path);
    json record{{"request_hash", to_hex(chat_request_hash(req))},
                {"request", req},
                {"response", resp}};
    out << record.dump() << "\n";
    return resp;
}

struct ReplayBackend::State {
    struct Item {
        std::string request_hash;
        ChatResponse response;
    };
    std::vector<Item> items;
    std::size_t next = 0;
    std::mutex mutex;
};

ReplayBackend::ReplayBackend(const std::string& path) : state_(std::make_shared<State>()) {
    std::istringstream in(read_text_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json record = json::parse(line);
        State::Item item;
        item.request_hash = record.at("request_hash").get<std::string>();
        item.response = record.at("response").get<ChatResponse>();
        state_->items.push_back(std::move(item));
    }
}

ChatResponse ReplayBackend::complete(const ChatRequest& req) {
    std::lock_guard<std::mutex> lock(state_->mutex);
    if (state_->next >= state_->items.size()) {
        throw Error(ErrorCode::protocol, "replay exhausted: no recorded response left");
    }
    const auto& item = state_->items[state_->next];
    if (item.request_hash != to_hex(chat_request_hash(req))) {
        throw Error(ErrorCode::protocol,
                    "replay mismatch: request differs from the recorded one at position " +
                        std::to_string(state_->next));
    }
    ++state_->next;
    return item.response;
}

// --- Gateway ----------------------------------------------------------------------

Gateway::Gateway(GatewayOptions options) : options_(options) {}

void Gateway::register_backend(const std::string& model_id, std::shared_ptr<Backend> backend) {
    Entry entry;
    entry.backend = std::move(backend);
    entry.inflight = std::make_shared<Semaphore>(options_.max_inflight_per_backend);
    backends_[model_id] = std::move(entry);
}

bool Gateway::has_backend(const std::string& model_id) const {
    return backends_.contains(model_id);
}

ChatResponse Gateway::complete(const ChatRequest& req) const {
    if (req.messages.empty()) {
        throw Error(ErrorCode::invalid_argument, "chat request must carry at least one message");
    }
    if (req.messages.front().role == ChatRole::assistant) {
        throw Error(ErrorCode::invalid_argument,
                    "first chat message must be a system or user message");
    }
    auto it = backends_.find(req.model_id);
    if (it == backends_.end()) {
        throw Error(ErrorCode::config, "no backend configured for model '" + req.model_id + "'");
    }

    ChatResponse resp;
    int attempt = 0;
    for (;;) {
        ++attempt;
        try {
            SemaphoreGuard guard(*it->second.inflight);
            resp = it->second.backend->complete(req);
            break;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::transport || attempt >= options_.max_attempts) {
                if (e.code() == ErrorCode::transport) {
                    throw TransportError(std::string(e.what()) + " (after " +
                                             std::to_string(attempt) + " attempts)",
                                         attempt);
                }
                throw;
            }
            if (options_.retry_base_ms > 0) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(options_.retry_base_ms << (attempt - 1)));
            }
        }
    }

    // Stop sequences are enforced here even when the backend echoes them, so
    // callers never see text past the first matched stop.
    if (req.params && !req.params->stop_sequences.empty()) {
        std::size_t best_pos = std::string::npos;
        std::string best_stop;
        for (const auto& stop : req.params->stop_sequences) {
            if (stop.empty()) continue;
            const std::size_t pos = resp.text.find(stop);
            if (pos != std::string::npos && (best_pos == std::string::npos || pos < best_pos)) {
                best_pos = pos;
                best_stop = stop;
            }
        }
        if (best_pos != std::string::npos) {
            resp.text.resize(best_pos);
            resp.finish_reason = FinishReason::stop_sequence;
            resp.matched_stop = best_stop;
        }
    }
    if (resp.finish_reason != FinishReason::stop_sequence) resp.matched_stop.reset();
    return resp;
}

double Gateway::yes_probability(const std::string& model_id, const std::string& query,
                                const std::string& document) const {
    ChatRequest req;
    req.model_id = model_id;
    req.messages = {{ChatRole::system, std::string(prompts::kRerankerSystem)},
                    {ChatRole::user, prompts::reranker_user_prompt(query, document)}};
    GenerationParams params;
    params.temperature = 0.0;
    params.top_p = 1.0;
    params.top_k = 0;
    params.max_tokens = 4;
    req.params = params;
    req.want_logprobs_for = {"yes", "no"};

    const ChatResponse resp = complete(req);
    if (resp.logprobs) {
        const auto& lp = *resp.logprobs;
        const auto yes_it = lp.find("yes");
        const auto no_it = lp.find("no");
        if (yes_it != lp.end() || no_it != lp.end()) {
            // A missing candidate gets effectively zero probability.
            const double lp_yes = yes_it != lp.end() ? yes_it->second : -1e9;
            const double lp_no = no_it != lp.end() ? no_it->second : -1e9;
            const double m = std::max(lp_yes, lp_no);
            const double py = std::exp(lp_yes - m);
            const double pn = std::exp(lp_no - m);
            return py / (py + pn);
        }
    }
    const std::string reply = to_lower_ascii(trim(resp.text));
    if (reply == "yes") return 1.0;
    if (reply == "no") return 0.0;
    throw Error(ErrorCode::protocol,
                "reranker returned neither logprobs nor a yes/no reply: '" + resp.text + "'");
}

} // namespace deepresearch
