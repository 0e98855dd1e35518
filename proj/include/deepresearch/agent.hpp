#pragma once

// The research agent loop: prompt assembly, tag-protocol scanning, budgeted
// tool calls, and final-answer extraction.

#include <optional>
#include <string>
#include <vector>

#include "deepresearch/core.hpp"
#include "deepresearch/llm_gateway.hpp"
#include "deepresearch/search_pipeline.hpp"

namespace deepresearch {

struct AgentConfig {
    int search_budget = 5;
    GenerationParams agent_params = GenerationParams::agent_defaults();
    SearchToolConfig tool_cfg;
};

void validate(const AgentConfig& cfg);

enum class TagKind { query_open, query_close, result_open_forged, result_close_forged, text };

struct TagEvent {
    TagKind kind = TagKind::text;
    std::string payload;  // the text slice for text events, empty for tags
    Span span;
};

const char* tag_kind_name(TagKind kind);

// Tokenizes the four tag literals plus the text between them. Events are
// non-overlapping and ordered by span; result tags in model output are forged
// by definition and never trigger execution.
std::vector<TagEvent> scan_tags(const std::string& text);

struct ExtractedQuery {
    std::string payload;  // raw text between the open and close tags
    Span span;            // payload span
};

struct QueryScan {
    std::vector<ExtractedQuery> complete;
    std::optional<std::string> unterminated;  // open tag with no close before end-of-text
};

// Pairs each query_close with the nearest preceding unconsumed query_open;
// earlier opens shadowed by a later open are dangling and yield no query.
QueryScan extract_queries(const std::string& text);

// Renders the research-agent prompt with the initial summary and question.
std::string build_initial_prompt(const Question& question, const Summary& initial);

// Extracts the answer after the LAST final-information marker across model
// segments (tool output is never part of the answer). A missing marker flags
// the answer as a formatting error and keeps the final model segment as text.
FinalAnswer extract_final_answer(const ReasoningTrace& trace);

struct AgentRun {
    std::string prompt;       // the fully rendered initial prompt
    Summary initial_summary;  // from the mandatory pre-loop search
    ReasoningTrace trace;
    FinalAnswer answer;
    int forged_result_tags = 0;  // result tags the model emitted itself
};

class ResearchAgent {
public:
    ResearchAgent(const Gateway& gateway, const SearchTool& tool, std::string agent_model,
                  AgentConfig cfg);

    // One full run: mandatory initial search, then generate/search rounds until
    // the model finishes or the budget is exhausted. Deterministic under the
    // scripted mock backend and mock corpus.
    AgentRun run(const Question& question, IdRegistry& registry) const;

    // Same loop with a precomputed initial summary whose urls are already in
    // the registry. Datagen shares one initial search across a question's
    // sampling runs so every run answers from the same prompt.
    AgentRun run_with_initial(const Question& question, const Summary& initial,
                              IdRegistry& registry) const;

    const AgentConfig& config() const { return cfg_; }
    const SearchTool& search_tool() const { return tool_; }

private:
    const Gateway& gateway_;
    const SearchTool& tool_;
    std::string agent_model_;
    AgentConfig cfg_;
};

} // namespace deepresearch
