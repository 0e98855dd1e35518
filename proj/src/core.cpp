#include "deepresearch/core.hpp"

#include <algorithm>

#include "deepresearch/errors.hpp"
#include "deepresearch/util.hpp"

namespace deepresearch {

namespace {

[[noreturn]] void invalid(const std::string& what) {
    throw Error(ErrorCode::invalid_argument, what);
}

} // namespace

const char* question_source_name(QuestionSource s) {
    switch (s) {
        case QuestionSource::researchy: return "researchy";
        case QuestionSource::natural_questions: return "natural_questions";
        case QuestionSource::validation: return "validation";
        case QuestionSource::other: return "other";
    }
    return "other";
}

QuestionSource question_source_from_name(const std::string& name) {
    if (name == "researchy") return QuestionSource::researchy;
    if (name == "natural_questions") return QuestionSource::natural_questions;
    if (name == "validation") return QuestionSource::validation;
    if (name == "other") return QuestionSource::other;
    invalid("unknown question source: " + name);
}

bool supports_factuality(const Question& q) {
    return q.source == QuestionSource::researchy && !q.key_point_urls.empty();
}

bool validate_webpage_id(const std::string& s) {
    if (s.size() != 5 || s[0] != '#') return false;
    for (std::size_t i = 1; i < 5; ++i) {
        const char c = s[i];
        const bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z');
        if (!ok) return false;
    }
    return true;
}

std::string ReasoningTrace::concat_text() const {
    std::string out;
    for (const auto& seg : segments) out += seg.text;
    return out;
}

std::string ReasoningTrace::model_text() const {
    std::string out;
    for (const auto& seg : segments) {
        if (seg.kind == SegmentKind::model) out += seg.text;
    }
    return out;
}

GenerationParams GenerationParams::agent_defaults() {
    GenerationParams p;
    p.temperature = 0.6;
    p.top_p = 0.95;
    p.top_k = 20;
    p.max_tokens = 20480;
    p.stop_sequences = {std::string(kEndSearchQuery)};
    return p;
}

GenerationParams GenerationParams::summarizer_defaults() {
    GenerationParams p;
    p.temperature = 0.6;
    p.top_p = 0.95;
    p.top_k = 0;
    p.max_tokens = 8192;
    p.stop_sequences = {};
    return p;
}

void validate(const Question& q) {
    if (q.text.empty()) invalid("Question.text must be non-empty");
    for (const auto& url : q.key_point_urls) {
        if (url.empty()) invalid("Question.key_point_urls entries must be non-empty");
    }
}

void validate(const WebDocument& d) {
    if (!d.webpage_id.empty() && !validate_webpage_id(d.webpage_id)) {
        invalid("WebDocument.webpage_id violates the id grammar: " + d.webpage_id);
    }
    if (d.retrieval_rank < 1) invalid("WebDocument.retrieval_rank must be >= 1");
    if (d.rerank_score && (*d.rerank_score < 0.0 || *d.rerank_score > 1.0)) {
        invalid("WebDocument.rerank_score must lie in [0,1]");
    }
}

void validate(const Summary& s) {
    if (s.text.rfind(kFinalInfoMarker, 0) != 0) {
        invalid("Summary.text must begin with the final-information marker");
    }
    for (const auto& id : s.cited_ids) {
        if (!validate_webpage_id(id)) invalid("Summary cited id violates grammar: " + id);
        if (s.text.find("(" + id) == std::string::npos &&
            s.text.find("," + id) == std::string::npos &&
            s.text.find(", " + id) == std::string::npos) {
            invalid("Summary cited id does not occur in a citation marker: " + id);
        }
    }
}

void validate(const ReasoningTrace& t, int search_budget) {
    int last_index = -1;
    for (const auto& inv : t.invocations) {
        if (inv.index <= last_index) invalid("SearchInvocation.index must be strictly increasing");
        last_index = inv.index;
        if (trim(inv.query).empty()) invalid("SearchInvocation.query must be non-empty after trimming");
    }
    if (static_cast<int>(t.invocations.size()) > search_budget) {
        invalid("trace exceeds the search budget");
    }
    std::size_t tool_segments = 0;
    for (const auto& seg : t.segments) {
        if (seg.kind != SegmentKind::tool_result) continue;
        ++tool_segments;
        const bool wrapped =
            seg.text.rfind(kBeginSearchResult, 0) == 0 &&
            seg.text.size() >= kBeginSearchResult.size() + kEndSearchResult.size() &&
            seg.text.compare(seg.text.size() - kEndSearchResult.size(),
                             kEndSearchResult.size(), kEndSearchResult) == 0;
        if (!wrapped) invalid("tool_result segment must be delimiter-wrapped");
    }
    if (tool_segments != t.invocations.size()) {
        invalid("tool_result segment count must equal invocation count");
    }
}

void validate(const FinalAnswer& a) {
    if (a.text.empty()) invalid("FinalAnswer.text must be non-empty");
    if (a.search_count < 0) invalid("FinalAnswer.search_count must be >= 0");
    for (const auto& m : a.citations) {
        if (m.ids.empty()) invalid("CitationMarker.ids must be non-empty");
        for (const auto& id : m.ids) {
            if (!validate_webpage_id(id)) invalid("CitationMarker id violates grammar: " + id);
        }
    }
}

void validate(const MetricScores& m) {
    if (m.clarity < 0 || m.clarity > 10) invalid("clarity must lie in 0..10");
    if (m.insightfulness < 0 || m.insightfulness > 10) invalid("insightfulness must lie in 0..10");
    if (m.factuality && (*m.factuality < 0.0 || *m.factuality > 100.0)) {
        invalid("factuality must lie in 0..100");
    }
}

void validate(const PreferenceScore& s) {
    if (s.metric_count != 2 && s.metric_count != 3) invalid("metric_count must be 2 or 3");
    if (s.value < 0.0) invalid("preference score must be >= 0");
    if (s.value > static_cast<double>(s.metric_count)) {
        invalid("preference score exceeds metric_count");
    }
}

void validate(const PreferencePair& p) {
    if (p.gap < 0.0) invalid("pair gap must be >= 0");
    validate(p.chosen.score);
    validate(p.rejected.score);
    if (p.chosen.score.value + 1e-12 < p.rejected.score.value) {
        invalid("chosen score must be >= rejected score");
    }
}

void validate(const GenerationParams& p) {
    if (p.top_p <= 0.0 || p.top_p > 1.0) invalid("top_p must lie in (0,1]");
    if (p.top_k < 0) invalid("top_k must be >= 0");
    if (p.max_tokens <= 0) invalid("max_tokens must be > 0");
}

bool mask_spans_well_formed(const std::string& text, const std::vector<Span>& spans) {
    std::size_t prev_end = 0;
    for (const auto& s : spans) {
        if (s.begin > s.end || s.end > text.size()) return false;
        if (s.begin < prev_end) return false;  // overlapping or unsorted
        prev_end = s.end;
    }
    return true;
}

std::string splice_spans(const std::string& text, const std::vector<Span>& masks) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    for (const auto& m : masks) {
        out += text.substr(pos, m.begin - pos);
        out += text.substr(m.begin, m.end - m.begin);
        pos = m.end;
    }
    out += text.substr(pos);
    return out;
}

void validate(const DpoRecord& r) {
    if (!mask_spans_well_formed(r.chosen_text, r.chosen_masks)) {
        invalid("chosen mask spans are not disjoint, sorted, and in bounds");
    }
    if (!mask_spans_well_formed(r.rejected_text, r.rejected_masks)) {
        invalid("rejected mask spans are not disjoint, sorted, and in bounds");
    }
    if (splice_spans(r.chosen_text, r.chosen_masks) != r.chosen_text ||
        splice_spans(r.rejected_text, r.rejected_masks) != r.rejected_text) {
        invalid("mask spans do not splice back to the original text");
    }
}

// --- serialization ------------------------------------------------------------

void to_json(json& j, const Span& s) { j = json::array({s.begin, s.end}); }

void from_json(const json& j, Span& s) {
    s.begin = j.at(0).get<std::size_t>();
    s.end = j.at(1).get<std::size_t>();
}

void to_json(json& j, const Question& q) {
    j = json{{"id", q.id}, {"text", q.text}, {"source", question_source_name(q.source)}};
    if (!q.key_point_urls.empty()) j["key_point_urls"] = q.key_point_urls;
}

void from_json(const json& j, Question& q) {
    q.id = j.at("id").get<std::string>();
    q.text = j.at("text").get<std::string>();
    q.source = question_source_from_name(j.at("source").get<std::string>());
    q.key_point_urls.clear();
    if (j.contains("key_point_urls")) {
        q.key_point_urls = j.at("key_point_urls").get<std::vector<std::string>>();
    }
}

void to_json(json& j, const WebDocument& d) {
    j = json{{"webpage_id", d.webpage_id},
             {"url", d.url},
             {"text", d.text},
             {"retrieval_rank", d.retrieval_rank}};
    if (d.rerank_score) j["rerank_score"] = *d.rerank_score;
}

void from_json(const json& j, WebDocument& d) {
    d.webpage_id = j.value("webpage_id", std::string());
    d.url = j.at("url").get<std::string>();
    d.text = j.at("text").get<std::string>();
    d.retrieval_rank = j.value("retrieval_rank", 1);
    if (j.contains("rerank_score")) d.rerank_score = j.at("rerank_score").get<double>();
    else d.rerank_score.reset();
}

void to_json(json& j, const Summary& s) {
    j = json{{"text", s.text}, {"cited_ids", s.cited_ids}};
}

void from_json(const json& j, Summary& s) {
    s.text = j.at("text").get<std::string>();
    s.cited_ids = j.value("cited_ids", std::vector<std::string>{});
}

void to_json(json& j, const Segment& s) {
    j = json{{"kind", s.kind == SegmentKind::model ? "model" : "tool_result"},
             {"text", s.text}};
}

void from_json(const json& j, Segment& s) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "model") s.kind = SegmentKind::model;
    else if (kind == "tool_result") s.kind = SegmentKind::tool_result;
    else throw Error(ErrorCode::invalid_argument, "unknown segment kind: " + kind);
    s.text = j.at("text").get<std::string>();
}

void to_json(json& j, const SearchInvocation& s) {
    j = json{{"index", s.index}, {"query", s.query}, {"summary", s.summary}};
}

void from_json(const json& j, SearchInvocation& s) {
    s.index = j.at("index").get<int>();
    s.query = j.at("query").get<std::string>();
    s.summary = j.at("summary").get<Summary>();
}

void to_json(json& j, const ReasoningTrace& t) {
    j = json{{"segments", t.segments}, {"invocations", t.invocations}};
}

void from_json(const json& j, ReasoningTrace& t) {
    t.segments = j.at("segments").get<std::vector<Segment>>();
    t.invocations = j.value("invocations", std::vector<SearchInvocation>{});
}

void to_json(json& j, const CitationMarker& m) {
    j = json{{"ids", m.ids}, {"span", m.span}, {"raw", m.raw}};
}

void from_json(const json& j, CitationMarker& m) {
    m.ids = j.at("ids").get<std::vector<std::string>>();
    m.span = j.at("span").get<Span>();
    m.raw = j.value("raw", std::string());
}

void to_json(json& j, const FinalAnswer& a) {
    j = json{{"text", a.text},
             {"citations", a.citations},
             {"search_count", a.search_count},
             {"marker_missing", a.marker_missing}};
}

void from_json(const json& j, FinalAnswer& a) {
    a.text = j.at("text").get<std::string>();
    a.citations = j.value("citations", std::vector<CitationMarker>{});
    a.search_count = j.value("search_count", 0);
    a.marker_missing = j.value("marker_missing", false);
}

void to_json(json& j, const MetricScores& m) {
    j = json{{"clarity", m.clarity}, {"insightfulness", m.insightfulness}};
    if (m.factuality) j["factuality"] = *m.factuality;
}

void from_json(const json& j, MetricScores& m) {
    m.clarity = j.at("clarity").get<int>();
    m.insightfulness = j.at("insightfulness").get<int>();
    if (j.contains("factuality")) m.factuality = j.at("factuality").get<double>();
    else m.factuality.reset();
}

void to_json(json& j, const PreferenceScore& s) {
    j = json{{"value", s.value}, {"metric_count", s.metric_count}};
}

void from_json(const json& j, PreferenceScore& s) {
    s.value = j.at("value").get<double>();
    s.metric_count = j.at("metric_count").get<int>();
}

void to_json(json& j, const GenerationParams& p) {
    j = json{{"temperature", p.temperature},
             {"top_p", p.top_p},
             {"top_k", p.top_k},
             {"max_tokens", p.max_tokens},
             {"stop_sequences", p.stop_sequences}};
}

void from_json(const json& j, GenerationParams& p) {
    p.temperature = j.at("temperature").get<double>();
    p.top_p = j.at("top_p").get<double>();
    p.top_k = j.at("top_k").get<int>();
    p.max_tokens = j.at("max_tokens").get<int>();
    p.stop_sequences = j.value("stop_sequences", std::vector<std::string>{});
}

void to_json(json& j, const PairSide& s) {
    j = json{{"run_index", s.run_index},
             {"prompt", s.prompt},
             {"trace", s.trace},
             {"answer", s.answer},
             {"metrics", s.metrics},
             {"score", s.score}};
}

void from_json(const json& j, PairSide& s) {
    s.run_index = j.at("run_index").get<int>();
    s.prompt = j.at("prompt").get<std::string>();
    s.trace = j.at("trace").get<ReasoningTrace>();
    s.answer = j.at("answer").get<FinalAnswer>();
    s.metrics = j.at("metrics").get<MetricScores>();
    s.score = j.at("score").get<PreferenceScore>();
}

void to_json(json& j, const PreferencePair& p) {
    j = json{{"question_id", p.question_id},
             {"chosen", p.chosen},
             {"rejected", p.rejected},
             {"gap", p.gap}};
}

void from_json(const json& j, PreferencePair& p) {
    p.question_id = j.at("question_id").get<std::string>();
    p.chosen = j.at("chosen").get<PairSide>();
    p.rejected = j.at("rejected").get<PairSide>();
    p.gap = j.at("gap").get<double>();
}

void to_json(json& j, const DpoRecord& r) {
    j = json{{"prompt", r.prompt},
             {"chosen_text", r.chosen_text},
             {"rejected_text", r.rejected_text},
             {"chosen_masks", r.chosen_masks},
             {"rejected_masks", r.rejected_masks}};
}

void from_json(const json& j, DpoRecord& r) {
    r.prompt = j.at("prompt").get<std::string>();
    r.chosen_text = j.at("chosen_text").get<std::string>();
    r.rejected_text = j.at("rejected_text").get<std::string>();
    r.chosen_masks = j.at("chosen_masks").get<std::vector<Span>>();
    r.rejected_masks = j.at("rejected_masks").get<std::vector<Span>>();
}

} // namespace deepresearch
