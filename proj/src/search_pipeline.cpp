#include "deepresearch/search_pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

#include <httplib.h>

#include "deepresearch/citation.hpp"
#include "deepresearch/errors.hpp"
#include "deepresearch/prompts.hpp"

namespace deepresearch {

void validate(const SearchToolConfig& cfg) {
    if (cfg.rerank_top_n < 1) {
        throw Error(ErrorCode::invalid_argument, "rerank_top_n must be >= 1");
    }
    if (cfg.search_top_k < cfg.rerank_top_n) {
        throw Error(ErrorCode::invalid_argument, "search_top_k must be >= rerank_top_n");
    }
    if (cfg.doc_char_budget < 1) {
        throw Error(ErrorCode::invalid_argument, "doc_char_budget must be >= 1");
    }
    validate(cfg.summarizer_params);
}

std::uint32_t webpage_id_digest(const std::string& url) {
    return static_cast<std::uint32_t>(fnv1a64(url) % kIdSpace);
}

std::string webpage_id_from_index(std::uint32_t index) {
    static const char* digits = "0123456789abcdefghijklmnopqrstuvwxyz";
    std::string out = "#0000";
    for (int pos = 4; pos >= 1; --pos) {
        out[static_cast<std::size_t>(pos)] = digits[index % 36];
        index /= 36;
    }
    return out;
}

IdRegistry::IdRegistry(std::uint32_t max_ids) : max_ids_(std::min(max_ids, kIdSpace)) {}

IdRegistry::IdRegistry(const IdMap& snapshot, std::uint32_t max_ids)
    : max_ids_(std::min(max_ids, kIdSpace)), id_to_url_(snapshot) {
    for (const auto& [id, url] : id_to_url_) url_to_id_[url] = id;
}

std::string IdRegistry::assign(const std::string& url) {
    if (url.empty()) {
        throw Error(ErrorCode::invalid_argument, "cannot assign an id to an empty url");
    }
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = url_to_id_.find(url); it != url_to_id_.end()) return it->second;
    if (url_to_id_.size() >= max_ids_) {
        throw Error(ErrorCode::capacity, "webpage-id registry exhausted");
    }
    const std::uint32_t start = webpage_id_digest(url);
    for (std::uint32_t probe = 0; probe < kIdSpace; ++probe) {
        const std::string id = webpage_id_from_index((start + probe) % kIdSpace);
        if (id_to_url_.contains(id)) continue;
        id_to_url_[id] = url;
        url_to_id_[url] = id;
        return id;
    }
    throw Error(ErrorCode::capacity, "webpage-id registry exhausted");
}

std::optional<std::string> IdRegistry::id_for(const std::string& url) const {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = url_to_id_.find(url); it != url_to_id_.end()) return it->second;
    return std::nullopt;
}

std::optional<std::string> IdRegistry::url_for(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = id_to_url_.find(id); it != id_to_url_.end()) return it->second;
    return std::nullopt;
}

std::size_t IdRegistry::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return url_to_id_.size();
}

IdMap IdRegistry::id_map() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return id_to_url_;
}

// --- MockCorpusClient ----------------------------------------------------------

MockCorpusClient::MockCorpusClient(const std::string& corpus_dir) : dir_(corpus_dir) {
    for (const auto& file : list_files_sorted(corpus_dir, ".jsonl")) {
        std::istringstream in(read_text_file(file));
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            json record;
            try {
                record = json::parse(line);
            } catch (const json::exception& e) {
                throw Error(ErrorCode::io, file + ":" + std::to_string(lineno) +
                                               ": malformed corpus record: " + e.what());
            }
            CorpusDoc doc;
            doc.url = record.at("url").get<std::string>();
            doc.text = record.at("text").get<std::string>();
            if (!by_url_.contains(doc.url)) by_url_[doc.url] = docs_.size();
            docs_.push_back(std::move(doc));
        }
    }
}

double MockCorpusClient::overlap_score(const std::string& query, const std::string& doc_text) {
    const auto query_tokens = tokenize_words(query);
    if (query_tokens.empty()) return 0.0;
    const std::set<std::string> unique_query(query_tokens.begin(), query_tokens.end());
    const auto doc_tokens = tokenize_words(doc_text);
    const std::set<std::string> doc_set(doc_tokens.begin(), doc_tokens.end());
    std::size_t hit = 0;
    for (const auto& t : unique_query) {
        if (doc_set.contains(t)) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(unique_query.size());
}

std::vector<WebDocument> MockCorpusClient::search(const std::string& query, int k) {
    if (trim(query).empty()) {
        throw Error(ErrorCode::invalid_argument, "search query must be non-empty");
    }
    if (k < 1) throw Error(ErrorCode::invalid_argument, "search k must be >= 1");
    struct Scored {
        double score;
        std::size_t index;
    };
    std::vector<Scored> scored;
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        const double s = overlap_score(query, docs_[i].text);
        if (s > 0.0) scored.push_back({s, i});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.index < b.index;
    });
    if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));
    std::vector<WebDocument> out;
    out.reserve(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i) {
        WebDocument d;
        d.url = docs_[scored[i].index].url;
        d.text = docs_[scored[i].index].text;
        d.retrieval_rank = static_cast<int>(i) + 1;
        out.push_back(std::move(d));
    }
    return out;
}

std::optional<WebDocument> MockCorpusClient::fetch_url(const std::string& url) {
    auto it = by_url_.find(url);
    if (it == by_url_.end()) return std::nullopt;
    WebDocument d;
    d.url = docs_[it->second].url;
    d.text = docs_[it->second].text;
    d.retrieval_rank = 1;
    return d;
}

// --- HttpSearchClient ------------------------------------------------------------

struct HttpSearchClient::Impl {
    HttpSearchOptions options;
    std::string host;
    std::string prefix;
};

namespace {

std::string percent_encode(const std::string& s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        const bool safe = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                          (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.' || c == '~';
        if (safe) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

} // namespace

HttpSearchClient::HttpSearchClient(HttpSearchOptions options)
    : impl_(std::make_unique<Impl>()) {
    impl_->options = std::move(options);
    const auto scheme_end = impl_->options.base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::config,
                    "search base_url must include a scheme: " + impl_->options.base_url);
    }
    const auto path_start = impl_->options.base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        impl_->host = impl_->options.base_url;
    } else {
        impl_->host = impl_->options.base_url.substr(0, path_start);
        impl_->prefix = impl_->options.base_url.substr(path_start);
        while (!impl_->prefix.empty() && impl_->prefix.back() == '/') impl_->prefix.pop_back();
    }
}

HttpSearchClient::~HttpSearchClient() = default;

std::string HttpSearchClient::name() const { return "http:" + impl_->options.base_url; }

std::vector<WebDocument> HttpSearchClient::search(const std::string& query, int k) {
    if (trim(query).empty()) {
        throw Error(ErrorCode::invalid_argument, "search query must be non-empty");
    }
    if (k < 1) throw Error(ErrorCode::invalid_argument, "search k must be >= 1");
    const std::string path =
        impl_->prefix + "/search?query=" + percent_encode(query) + "&k=" + std::to_string(k);

    std::string body;
    int attempt = 0;
    for (;;) {
        ++attempt;
        httplib::Client cli(impl_->host);
        cli.set_connection_timeout(0, impl_->options.connect_timeout_ms * 1000);
        cli.set_read_timeout(impl_->options.read_timeout_ms / 1000,
                             (impl_->options.read_timeout_ms % 1000) * 1000);
        auto res = cli.Get(path);
        if (res && res->status == 200) {
            body = res->body;
            break;
        }
        const std::string reason =
            res ? "status " + std::to_string(res->status) : httplib::to_string(res.error());
        if (attempt >= impl_->options.max_attempts) {
            throw TransportError("search API unreachable: " + reason, attempt);
        }
        if (impl_->options.retry_base_ms > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(impl_->options.retry_base_ms << (attempt - 1)));
        }
    }

    json payload;
    try {
        payload = json::parse(body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::protocol, std::string("malformed search payload: ") + e.what());
    }
    if (!payload.contains("results") || !payload["results"].is_array()) {
        throw Error(ErrorCode::protocol, "search payload has no 'results' array");
    }
    std::vector<WebDocument> out;
    int rank = 0;
    for (const auto& item : payload["results"]) {
        if (rank >= k) break;
        WebDocument d;
        d.url = item.at("url").get<std::string>();
        d.text = item.at("text").get<std::string>();
        d.retrieval_rank = ++rank;
        out.push_back(std::move(d));
    }
    return out;
}

std::optional<WebDocument> HttpSearchClient::fetch_url(const std::string&) {
    // The remote search API serves queries, not documents by url.
    return std::nullopt;
}

// --- rerank ---------------------------------------------------------------------

std::vector<WebDocument> rerank(const Gateway& gateway, const std::string& reranker_model,
                                const std::string& query, std::vector<WebDocument> docs,
                                int n, int concurrency) {
    if (docs.empty()) {
        throw Error(ErrorCode::invalid_argument, "rerank requires a non-empty document list");
    }
    if (n < 1) throw Error(ErrorCode::invalid_argument, "rerank n must be >= 1");

    std::vector<std::optional<double>> scores(docs.size());
    parallel_for(docs.size(), concurrency, [&](std::size_t i) {
        try {
            scores[i] = gateway.yes_probability(reranker_model, query, docs[i].text);
        } catch (const Error& e) {
            warn("rerank: dropping document " + docs[i].url + " (rank " +
                 std::to_string(docs[i].retrieval_rank) + "): " + e.what());
        }
    });

    std::vector<WebDocument> scored;
    scored.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!scores[i]) continue;  // dropped, never silently reordered
        WebDocument d = std::move(docs[i]);
        d.rerank_score = scores[i];
        scored.push_back(std::move(d));
    }
    std::sort(scored.begin(), scored.end(), [](const WebDocument& a, const WebDocument& b) {
        if (*a.rerank_score != *b.rerank_score) return *a.rerank_score > *b.rerank_score;
        return a.retrieval_rank < b.retrieval_rank;
    });
    if (scored.size() > static_cast<std::size_t>(n)) scored.resize(static_cast<std::size_t>(n));
    return scored;
}

// --- summarize ------------------------------------------------------------------

namespace {

struct SummaryFormatError {
    std::string reason;
};

// Checks the reply format and extracts cited ids, or reports why it is invalid.
std::variant<Summary, SummaryFormatError> interpret_summary_reply(
    const std::string& reply, const std::vector<WebDocument>& docs,
    const IdRegistry* registry) {
    if (reply.rfind(kFinalInfoMarker, 0) != 0) {
        return SummaryFormatError{"summary does not begin with the final-information marker"};
    }
    std::set<std::string> allowed;
    for (const auto& d : docs) allowed.insert(d.webpage_id);
    const CitationParse parse = parse_citations(reply);
    std::set<std::string> cited;
    for (const auto& marker : parse.markers) {
        for (const auto& id : marker.ids) {
            if (!allowed.contains(id) && !(registry && registry->url_for(id))) {
                return SummaryFormatError{"summary cites unknown webpage id " + id};
            }
            cited.insert(id);
        }
    }
    Summary s;
    s.text = reply;
    s.cited_ids.assign(cited.begin(), cited.end());
    return s;
}

Summary summarize_common(const Gateway& gateway, const std::string& summarizer_model,
                         const GenerationParams& params, const std::string& prompt,
                         const std::vector<WebDocument>& docs, const IdRegistry* registry) {
    for (const auto& d : docs) {
        if (d.webpage_id.empty()) {
            throw Error(ErrorCode::invalid_argument,
                        "summarize requires documents with assigned webpage ids");
        }
    }
    ChatRequest req;
    req.model_id = summarizer_model;
    req.messages = {{ChatRole::user, prompt}};
    req.params = params;

    std::string last_reason;
    for (int attempt = 0; attempt < 2; ++attempt) {  // one re-ask on format errors
        const ChatResponse resp = gateway.complete(req);
        auto result = interpret_summary_reply(resp.text, docs, registry);
        if (std::holds_alternative<Summary>(result)) return std::get<Summary>(std::move(result));
        last_reason = std::get<SummaryFormatError>(result).reason;
    }
    throw Error(ErrorCode::format, last_reason);
}

} // namespace

Summary summarize_initial(const Gateway& gateway, const std::string& summarizer_model,
                          const GenerationParams& params, const std::string& query,
                          const std::vector<WebDocument>& docs) {
    const std::string prompt = prompts::summarizer_initial_prompt(query, docs);
    return summarize_common(gateway, summarizer_model, params, prompt, docs, nullptr);
}

Summary summarize_with_reasoning(const Gateway& gateway, const std::string& summarizer_model,
                                 const GenerationParams& params, const std::string& query,
                                 const std::vector<WebDocument>& docs,
                                 const std::string& reasoning, const IdRegistry* registry) {
    const std::string prompt = prompts::summarizer_reasoning_prompt(query, docs, reasoning);
    return summarize_common(gateway, summarizer_model, params, prompt, docs, registry);
}

// --- SearchTool --------------------------------------------------------------------

SearchTool::SearchTool(const Gateway& gateway, SearchClient& client, std::string reranker_model,
                       std::string summarizer_model, SearchToolConfig cfg)
    : gateway_(gateway),
      client_(client),
      reranker_model_(std::move(reranker_model)),
      summarizer_model_(std::move(summarizer_model)),
      cfg_(std::move(cfg)) {
    validate(cfg_);
}

Summary SearchTool::run(const std::string& query, const std::optional<std::string>& reasoning,
                        IdRegistry& registry) const {
    std::vector<WebDocument> docs = client_.search(query, cfg_.search_top_k);
    if (docs.empty()) {
        return Summary{std::string(kNoResultsSummaryText), {}};
    }
    for (auto& d : docs) {
        d.webpage_id = registry.assign(d.url);
        d.text = truncate_chars(d.text, static_cast<std::size_t>(cfg_.doc_char_budget));
    }
    std::vector<WebDocument> top =
        rerank(gateway_, reranker_model_, query, std::move(docs), cfg_.rerank_top_n,
               gateway_.options().max_inflight_per_backend);
    if (top.empty()) {
        // every document was dropped by scoring failures
        return Summary{std::string(kNoResultsSummaryText), {}};
    }
    if (reasoning) {
        return summarize_with_reasoning(gateway_, summarizer_model_, cfg_.summarizer_params,
                                        query, top, *reasoning, &registry);
    }
    return summarize_initial(gateway_, summarizer_model_, cfg_.summarizer_params, query, top);
}

} // namespace deepresearch
