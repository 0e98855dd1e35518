#pragma once

// Grammar-level parsing, validation, resolution, and error-rate computation
// for inline citation markers of the form (#ab12) or (#ab12,#cd34).

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deepresearch/core.hpp"

namespace deepresearch {

struct CitationParse {
    std::vector<CitationMarker> markers;
    std::vector<Span> malformed;  // parenthesized groups starting with '#' that break the grammar
};

// Grammar: `(` id (`,` [single space] id)* `)` with id = `#[0-9a-z]{4}`.
// Parenthesized groups not starting with `#` are ordinary text and ignored.
CitationParse parse_citations(const std::string& text);

enum class CitationIssueKind { malformed_marker, unknown_id, missing_citation };

struct CitationIssue {
    CitationIssueKind kind;
    std::optional<Span> span;
    std::string id;      // the offending id, when applicable
    std::string detail;
};

const char* citation_issue_kind_name(CitationIssueKind kind);

std::vector<CitationIssue> validate_answer_citations(const FinalAnswer& answer,
                                                     const IdMap& registry);

struct CitationErrorBreakdown {
    double rate = 0.0;
    int total = 0;
    int flagged = 0;
    int with_malformed = 0;
    int with_unknown_id = 0;
    int with_missing_citation = 0;
    int with_missing_marker = 0;
};

// Fraction of answers with at least one citation issue or a missing
// final-information marker. Errors on empty input.
double citation_error_rate(const std::vector<FinalAnswer>& answers,
                           const std::vector<IdMap>& registries);

CitationErrorBreakdown citation_error_breakdown(const std::vector<FinalAnswer>& answers,
                                                const std::vector<IdMap>& registries);

inline constexpr std::string_view kUnresolvedUrl = "(unresolved)";

// Every well-formed cited id maps to its url; unknown ids map to the
// unresolved sentinel.
std::map<std::string, std::string> resolve_citations(const FinalAnswer& answer,
                                                     const IdMap& registry);

void to_json(json& j, const CitationIssue& issue);

} // namespace deepresearch
