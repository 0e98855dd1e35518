#pragma once

// The search tool: query -> search API top-K -> rerank to top-N -> summarize
// with citation markers, plus the per-run webpage-id registry.

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "deepresearch/core.hpp"
#include "deepresearch/llm_gateway.hpp"

namespace deepresearch {

struct SearchToolConfig {
    int search_top_k = 100;   // competition setting: 300
    int rerank_top_n = 10;
    GenerationParams summarizer_params = GenerationParams::summarizer_defaults();
    int doc_char_budget = 4000;  // per-document text cap before rerank/summarize
};

void validate(const SearchToolConfig& cfg);

// Number of distinct webpage ids: 36^4.
inline constexpr std::uint32_t kIdSpace = 36u * 36u * 36u * 36u;

// Stable 4-character digest of a url, as an index into the id space.
std::uint32_t webpage_id_digest(const std::string& url);
std::string webpage_id_from_index(std::uint32_t index);

// Bijective url <-> webpage id map scoped to one agent run. Ids come from the
// url digest, linear-probed on collision, so the same corpus re-run yields
// identical transcripts. Insert-if-absent is safe to call concurrently.
class IdRegistry {
public:
    explicit IdRegistry(std::uint32_t max_ids = kIdSpace);

    // Restores a registry from a snapshot, e.g. to give every sampling run of
    // one question the same view of the shared initial search.
    explicit IdRegistry(const IdMap& snapshot, std::uint32_t max_ids = kIdSpace);

    std::string assign(const std::string& url);
    std::optional<std::string> id_for(const std::string& url) const;
    std::optional<std::string> url_for(const std::string& id) const;
    std::size_t size() const;

    IdMap id_map() const;  // snapshot: id -> url

private:
    std::uint32_t max_ids_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> url_to_id_;
    IdMap id_to_url_;
};

class SearchClient {
public:
    virtual ~SearchClient() = default;

    // At most k documents, retrieval_rank = 1-based position. Empty result
    // sets are not an error.
    virtual std::vector<WebDocument> search(const std::string& query, int k) = 0;

    // Document lookup by url, used for key-point extraction. Returns nothing
    // when the backend cannot serve documents by url.
    virtual std::optional<WebDocument> fetch_url(const std::string& url) = 0;

    virtual std::string name() const = 0;
};

// Local corpus loaded from a directory of .jsonl record files, one
// {"url":..., "text":...} object per line. Queries are ranked by lexical
// overlap: |unique query terms found in doc| / |unique query terms|, ties
// broken by corpus insertion order. Zero-score documents are not returned.
class MockCorpusClient : public SearchClient {
public:
    explicit MockCorpusClient(const std::string& corpus_dir);

    std::vector<WebDocument> search(const std::string& query, int k) override;
    std::optional<WebDocument> fetch_url(const std::string& url) override;
    std::string name() const override { return "corpus:" + dir_; }

    static double overlap_score(const std::string& query, const std::string& doc_text);

    std::size_t corpus_size() const { return docs_.size(); }

private:
    struct CorpusDoc {
        std::string url;
        std::string text;
    };
    std::string dir_;
    std::vector<CorpusDoc> docs_;
    std::map<std::string, std::size_t> by_url_;
};

struct HttpSearchOptions {
    std::string base_url;
    int connect_timeout_ms = 5000;
    int read_timeout_ms = 60000;
    int max_attempts = 3;
    int retry_base_ms = 250;
};

// Remote search API: GET {base_url}/search?query=...&k=... returning
// {"results": [{"url": ..., "text": ...}, ...]} in rank order.
class HttpSearchClient : public SearchClient {
public:
    explicit HttpSearchClient(HttpSearchOptions options);
    ~HttpSearchClient() override;

    std::vector<WebDocument> search(const std::string& query, int k) override;
    std::optional<WebDocument> fetch_url(const std::string& url) override;
    std::string name() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Scores docs with yes_probability(query, text) and returns the top
// min(n, |docs|) sorted by score descending, ties broken by lower retrieval
// rank. Documents whose scoring keeps failing are dropped with a warning.
std::vector<WebDocument> rerank(const Gateway& gateway, const std::string& reranker_model,
                                const std::string& query, std::vector<WebDocument> docs,
                                int n, int concurrency = 8);

// Renders the summarizer prompt, validates the reply format (one re-ask on a
// format violation, then the invocation fails), and extracts cited ids. The
// with-reasoning variant also accepts ids already present in the run registry.
Summary summarize_initial(const Gateway& gateway, const std::string& summarizer_model,
                          const GenerationParams& params, const std::string& query,
                          const std::vector<WebDocument>& docs);

Summary summarize_with_reasoning(const Gateway& gateway, const std::string& summarizer_model,
                                 const GenerationParams& params, const std::string& query,
                                 const std::vector<WebDocument>& docs,
                                 const std::string& reasoning,
                                 const IdRegistry* registry = nullptr);

inline constexpr std::string_view kNoResultsSummaryText =
    "**Final Information**\nNo relevant information found.";

// The full pipeline. Models are gateway model ids.
class SearchTool {
public:
    SearchTool(const Gateway& gateway, SearchClient& client, std::string reranker_model,
               std::string summarizer_model, SearchToolConfig cfg);

    // search -> assign ids -> rerank -> summarize. The registry receives every
    // retrieved url before reranking. Absent reasoning selects the initial
    // summarizer prompt. Empty search results yield the no-results summary.
    Summary run(const std::string& query, const std::optional<std::string>& reasoning,
                IdRegistry& registry) const;

    const SearchToolConfig& config() const { return cfg_; }

private:
    const Gateway& gateway_;
    SearchClient& client_;
    std::string reranker_model_;
    std::string summarizer_model_;
    SearchToolConfig cfg_;
};

} // namespace deepresearch
