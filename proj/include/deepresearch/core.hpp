#pragma once

// Domain types shared by every other module. All types are immutable values;
// validate(...) checks the type's invariants and throws Error(invalid_argument)
// on violation.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace deepresearch {

using json = nlohmann::json;

// Maps webpage id -> url. A plain snapshot of one run's registry, used
// wherever citation checks do not need the live registry.
using IdMap = std::map<std::string, std::string>;

// Half-open character span [begin, end) over UTF-8 text, in bytes.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool operator==(const Span&) const = default;
};

enum class QuestionSource { researchy, natural_questions, validation, other };

const char* question_source_name(QuestionSource s);
QuestionSource question_source_from_name(const std::string& name);

struct Question {
    std::string id;
    std::string text;
    QuestionSource source = QuestionSource::other;
    std::vector<std::string> key_point_urls;  // present only when factuality applies
};

// True iff this question carries the URLs needed for factuality scoring.
bool supports_factuality(const Question& q);

// Webpage ids follow the grammar `#` + exactly 4 characters from [0-9a-z].
bool validate_webpage_id(const std::string& s);

struct WebDocument {
    std::string webpage_id;  // empty until assigned
    std::string url;
    std::string text;
    int retrieval_rank = 0;  // 1-based
    std::optional<double> rerank_score;  // set after reranking, in [0,1]
};

inline constexpr std::string_view kFinalInfoMarker = "**Final Information**";

// Tag protocol literals used by the research agent and the search tool.
inline constexpr std::string_view kBeginSearchQuery = "<|begin_search_query|>";
inline constexpr std::string_view kEndSearchQuery = "<|end_search_query|>";
inline constexpr std::string_view kBeginSearchResult = "<|begin_search_result|>";
inline constexpr std::string_view kEndSearchResult = "<|end_search_result|>";

struct Summary {
    std::string text;  // begins with the final-information marker
    std::vector<std::string> cited_ids;
};

enum class SegmentKind { model, tool_result };

struct Segment {
    SegmentKind kind = SegmentKind::model;
    std::string text;
};

struct SearchInvocation {
    int index = 0;  // 0-based, strictly increasing within a trace
    std::string query;
    Summary summary;
};

struct ReasoningTrace {
    std::vector<Segment> segments;
    std::vector<SearchInvocation> invocations;

    std::string concat_text() const;   // the model's exact context suffix
    std::string model_text() const;    // model segments only, concatenated
};

struct CitationMarker {
    std::vector<std::string> ids;  // in text order, all valid per the grammar
    Span span;                     // the whole parenthesized group
    std::string raw;               // original text slice at span
};

struct FinalAnswer {
    std::string text;
    std::vector<CitationMarker> citations;
    int search_count = 0;        // invocations in the producing trace
    bool marker_missing = false; // final-information marker absent (formatting error)
};

struct MetricScores {
    int clarity = 0;         // 0..10
    int insightfulness = 0;  // 0..10
    std::optional<double> factuality;  // 0..100 when present
};

struct PreferenceScore {
    double value = 0.0;
    int metric_count = 2;  // 2 or 3
};

struct GenerationParams {
    double temperature = 0.6;
    double top_p = 0.95;
    int top_k = 0;  // 0 = disabled
    int max_tokens = 1024;
    std::vector<std::string> stop_sequences;

    static GenerationParams agent_defaults();
    static GenerationParams summarizer_defaults();
};

struct PairSide {
    int run_index = 0;
    std::string prompt;
    ReasoningTrace trace;
    FinalAnswer answer;
    MetricScores metrics;
    PreferenceScore score;
};

struct PreferencePair {
    std::string question_id;
    PairSide chosen;
    PairSide rejected;
    double gap = 0.0;  // chosen.score.value - rejected.score.value, >= 0
};

struct DpoRecord {
    std::string prompt;
    std::string chosen_text;
    std::string rejected_text;
    std::vector<Span> chosen_masks;    // disjoint, sorted, in bounds
    std::vector<Span> rejected_masks;
};

// --- invariant checks --------------------------------------------------------

void validate(const Question& q);
void validate(const WebDocument& d);
void validate(const Summary& s);
void validate(const ReasoningTrace& t, int search_budget);
void validate(const FinalAnswer& a);
void validate(const MetricScores& m);
void validate(const PreferenceScore& s);
void validate(const PreferencePair& p);
void validate(const DpoRecord& r);
void validate(const GenerationParams& p);

bool mask_spans_well_formed(const std::string& text, const std::vector<Span>& spans);

// Splices unmasked and masked slices back together in order; equality with the
// original text is the mask round-trip invariant.
std::string splice_spans(const std::string& text, const std::vector<Span>& masks);

// --- line-delimited record serialization -------------------------------------

void to_json(json& j, const Span& s);
void from_json(const json& j, Span& s);
void to_json(json& j, const Question& q);
void from_json(const json& j, Question& q);
void to_json(json& j, const WebDocument& d);
void from_json(const json& j, WebDocument& d);
void to_json(json& j, const Summary& s);
void from_json(const json& j, Summary& s);
void to_json(json& j, const Segment& s);
void from_json(const json& j, Segment& s);
void to_json(json& j, const SearchInvocation& s);
void from_json(const json& j, SearchInvocation& s);
void to_json(json& j, const ReasoningTrace& t);
void from_json(const json& j, ReasoningTrace& t);
void to_json(json& j, const CitationMarker& m);
void from_json(const json& j, CitationMarker& m);
void to_json(json& j, const FinalAnswer& a);
void from_json(const json& j, FinalAnswer& a);
void to_json(json& j, const MetricScores& m);
void from_json(const json& j, MetricScores& m);
void to_json(json& j, const PreferenceScore& s);
void from_json(const json& j, PreferenceScore& s);
void to_json(json& j, const GenerationParams& p);
void from_json(const json& j, GenerationParams& p);
void to_json(json& j, const PairSide& s);
void from_json(const json& j, PairSide& s);
void to_json(json& j, const PreferencePair& p);
void from_json(const json& j, PreferencePair& p);
void to_json(json& j, const DpoRecord& r);
void from_json(const json& j, DpoRecord& r);

} // namespace deepresearch
