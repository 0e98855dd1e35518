#pragma once

// Prompt templates and their renderers. Templates are rendered with a
// str.format-style substitution: {name} placeholders, {{ }} for literal braces.

#include <string>
#include <string_view>
#include <vector>

#include "deepresearch/core.hpp"

namespace deepresearch {
namespace prompts {

extern const std::string_view kRerankerSystem;
extern const std::string_view kRerankerUser;
extern const std::string_view kSummarizerInitial;
extern const std::string_view kSummarizerWithReasoning;
extern const std::string_view kResearchAgent;
extern const std::string_view kFactuality;
extern const std::string_view kClarity;
extern const std::string_view kInsightfulness;
extern const std::string_view kKeyPointExtraction;

// One block per document:
//   Webpage ID: <id>
//   "context": <text>, "url": <url>
// joined by newlines, matching the format the summarizer prompt announces.
std::string serialize_documents(const std::vector<WebDocument>& docs);

std::string reranker_user_prompt(const std::string& query, const std::string& document);
std::string summarizer_initial_prompt(const std::string& query,
                                      const std::vector<WebDocument>& docs);
std::string summarizer_reasoning_prompt(const std::string& query,
                                        const std::vector<WebDocument>& docs,
                                        const std::string& reasoning_steps);
std::string research_agent_prompt(const std::string& initial_search_result,
                                  const std::string& question);
std::string factuality_prompt(const std::string& key_point, const std::string& answer);
std::string clarity_prompt(const std::string& question, const std::string& answer);
std::string insightfulness_prompt(const std::string& question, const std::string& answer);
std::string key_point_extraction_prompt(const std::string& document);

} // namespace prompts
} // namespace deepresearch
