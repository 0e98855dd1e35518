#include "deepresearch/agent.hpp"

#include <algorithm>
#include <array>

#include "deepresearch/citation.hpp"
#include "deepresearch/errors.hpp"
#include "deepresearch/prompts.hpp"

namespace deepresearch {

void validate(const AgentConfig& cfg) {
    if (cfg.search_budget < 0) {
        throw Error(ErrorCode::invalid_argument, "search_budget must be >= 0");
    }
    validate(cfg.agent_params);
    validate(cfg.tool_cfg);
}

const char* tag_kind_name(TagKind kind) {
    switch (kind) {
        case TagKind::query_open: return "query_open";
        case TagKind::query_close: return "query_close";
        case TagKind::result_open_forged: return "result_open_forged";
        case TagKind::result_close_forged: return "result_close_forged";
        case TagKind::text: return "text";
    }
    return "text";
}

namespace {

struct TagLiteral {
    TagKind kind;
    std::string_view literal;
};

constexpr std::array<TagLiteral, 4> kTagLiterals = {{
    {TagKind::query_open, kBeginSearchQuery},
    {TagKind::query_close, kEndSearchQuery},
    {TagKind::result_open_forged, kBeginSearchResult},
    {TagKind::result_close_forged, kEndSearchResult},
}};

} // namespace

std::vector<TagEvent> scan_tags(const std::string& text) {
    std::vector<TagEvent> events;
    std::size_t text_start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t candidate = text.find("<|", i);
        if (candidate == std::string::npos) break;
        const TagLiteral* hit = nullptr;
        for (const auto& tag : kTagLiterals) {
            if (text.compare(candidate, tag.literal.size(), tag.literal) == 0) {
                hit = &tag;
                break;
            }
        }
        if (!hit) {
            i = candidate + 2;
            continue;
        }
        if (candidate > text_start) {
            events.push_back({TagKind::text, text.substr(text_start, candidate - text_start),
                              {text_start, candidate}});
        }
        events.push_back({hit->kind, "", {candidate, candidate + hit->literal.size()}});
        i = candidate + hit->literal.size();
        text_start = i;
    }
    if (text_start < text.size()) {
        events.push_back(
            {TagKind::text, text.substr(text_start), {text_start, text.size()}});
    }
    return events;
}

QueryScan extract_queries(const std::string& text) {
    QueryScan out;
    std::optional<std::size_t> open_end;  // payload start of the latest unmatched open
    for (const auto& event : scan_tags(text)) {
        if (event.kind == TagKind::query_open) {
            open_end = event.span.end;  // a later open shadows an earlier dangling one
        } else if (event.kind == TagKind::query_close && open_end) {
            out.complete.push_back(
                {text.substr(*open_end, event.span.begin - *open_end),
                 {*open_end, event.span.begin}});
            open_end.reset();
        }
    }
    if (open_end) out.unterminated = text.substr(*open_end);
    return out;
}

std::string build_initial_prompt(const Question& question, const Summary& initial) {
    validate(question);
    validate(initial);
    return prompts::research_agent_prompt(initial.text, question.text);
}

FinalAnswer extract_final_answer(const ReasoningTrace& trace) {
    bool has_model_text = false;
    for (const auto& seg : trace.segments) {
        if (seg.kind == SegmentKind::model && !seg.text.empty()) has_model_text = true;
    }
    if (!has_model_text) {
        throw Error(ErrorCode::invalid_argument,
                    "cannot extract an answer from a trace without model text");
    }

    // Locate the last marker across model segments only; markers inside
    // injected summaries must not truncate the answer.
    std::optional<std::size_t> marker_segment;
    std::size_t marker_offset = 0;
    for (std::size_t s = 0; s < trace.segments.size(); ++s) {
        if (trace.segments[s].kind != SegmentKind::model) continue;
        const std::size_t pos = trace.segments[s].text.rfind(kFinalInfoMarker);
        if (pos != std::string::npos) {
            marker_segment = s;
            marker_offset = pos + kFinalInfoMarker.size();
        }
    }

    FinalAnswer answer;
    if (marker_segment) {
        std::string text = trace.segments[*marker_segment].text.substr(marker_offset);
        for (std::size_t s = *marker_segment + 1; s < trace.segments.size(); ++s) {
            if (trace.segments[s].kind == SegmentKind::model) text += trace.segments[s].text;
        }
        answer.text = std::move(text);
    } else {
        answer.marker_missing = true;
        for (auto it = trace.segments.rbegin(); it != trace.segments.rend(); ++it) {
            if (it->kind == SegmentKind::model && !it->text.empty()) {
                answer.text = it->text;
                break;
            }
        }
        if (answer.text.empty()) answer.text = trace.model_text();
    }
    answer.citations = parse_citations(answer.text).markers;
    answer.search_count = static_cast<int>(trace.invocations.size());
    return answer;
}

ResearchAgent::ResearchAgent(const Gateway& gateway, const SearchTool& tool,
                             std::string agent_model, AgentConfig cfg)
    : gateway_(gateway), tool_(tool), agent_model_(std::move(agent_model)), cfg_(std::move(cfg)) {
    validate(cfg_);
}

AgentRun ResearchAgent::run(const Question& question, IdRegistry& registry) const {
    validate(question);
    const Summary initial = tool_.run(question.text, std::nullopt, registry);
    return run_with_initial(question, initial, registry);
}

AgentRun ResearchAgent::run_with_initial(const Question& question, const Summary& initial,
                                         IdRegistry& registry) const {
    validate(question);

    AgentRun run;
    run.initial_summary = initial;
    run.prompt = build_initial_prompt(question, run.initial_summary);

    int executed = 0;
    // Guards against a degenerate backend that keeps emitting empty or
    // budget-exceeding query tags without ever finishing.
    const int max_rounds = cfg_.search_budget + 16;

    for (int round = 0; round < max_rounds; ++round) {
        ChatRequest req;
        req.model_id = agent_model_;
        req.messages = {{ChatRole::user, run.prompt}};
        const std::string transcript = run.trace.concat_text();
        if (!transcript.empty()) {
            req.messages.push_back({ChatRole::assistant, transcript});
        }
        GenerationParams params = cfg_.agent_params;
        if (executed >= cfg_.search_budget) {
            // Budget exhausted: let generation run to its natural end; any
            // further query tags stay in the text and are not executed.
            params.stop_sequences.clear();
        } else {
            params.stop_sequences = {std::string(kEndSearchQuery)};
        }
        req.params = params;

        const ChatResponse resp = gateway_.complete(req);

        for (const auto& event : scan_tags(resp.text)) {
            if (event.kind == TagKind::result_open_forged ||
                event.kind == TagKind::result_close_forged) {
                ++run.forged_result_tags;
            }
        }

        if (resp.finish_reason == FinishReason::stop_sequence &&
            resp.matched_stop == std::string(kEndSearchQuery)) {
            // The backend consumed the close tag; restore it so the transcript
            // matches the model's context byte for byte.
            run.trace.segments.push_back(
                {SegmentKind::model, resp.text + std::string(kEndSearchQuery)});

            const std::size_t open = resp.text.rfind(kBeginSearchQuery);
            if (open == std::string::npos) {
                continue;  // stray close tag, nothing to execute
            }
            const std::string query =
                trim(resp.text.substr(open + kBeginSearchQuery.size()));
            if (query.empty()) {
                continue;  // blank query, skipped without consuming budget
            }
            const Summary summary = tool_.run(query, run.trace.model_text(), registry);
            run.trace.invocations.push_back({executed, query, summary});
            run.trace.segments.push_back(
                {SegmentKind::tool_result, std::string(kBeginSearchResult) + summary.text +
                                               std::string(kEndSearchResult)});
            ++executed;
            continue;
        }

        // Natural end or token limit; an unterminated query tag, if any, is
        // deliberately not executed.
        if (!resp.text.empty()) {
            run.trace.segments.push_back({SegmentKind::model, resp.text});
        }
        run.answer = extract_final_answer(run.trace);
        return run;
    }
    throw Error(ErrorCode::runtime, "agent did not finish within the round limit");
}

} // namespace deepresearch
