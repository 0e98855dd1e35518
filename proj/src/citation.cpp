#include "deepresearch/citation.hpp"

#include "deepresearch/errors.hpp"

namespace deepresearch {

namespace {

bool is_id_char(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z');
}

// Parses the inside of a parenthesized group. Returns the ids on success,
// nothing if the group violates the grammar.
std::optional<std::vector<std::string>> parse_group(std::string_view inner) {
    std::vector<std::string> ids;
    std::size_t pos = 0;
    for (;;) {
        if (pos >= inner.size() || inner[pos] != '#') return std::nullopt;
        if (pos + 5 > inner.size()) return std::nullopt;
        for (std::size_t k = 1; k <= 4; ++k) {
            if (!is_id_char(inner[pos + k])) return std::nullopt;
        }
        ids.push_back(std::string(inner.substr(pos, 5)));
        pos += 5;
        if (pos == inner.size()) break;
        if (inner[pos] != ',') return std::nullopt;
        ++pos;
        if (pos < inner.size() && inner[pos] == ' ') ++pos;  // one space tolerated
    }
    return ids;
}

} // namespace

CitationParse parse_citations(const std::string& text) {
    CitationParse out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '(') {
            ++i;
            continue;
        }
        if (i + 1 >= text.size() || text[i + 1] != '#') {
            ++i;
            continue;
        }
        const std::size_t close = text.find(')', i + 1);
        if (close == std::string::npos) {
            ++i;
            continue;
        }
        const Span span{i, close + 1};
        const std::string_view inner =
            std::string_view(text).substr(i + 1, close - i - 1);
        if (auto ids = parse_group(inner)) {
            out.markers.push_back(
                CitationMarker{std::move(*ids), span, text.substr(i, close + 1 - i)});
        } else {
            out.malformed.push_back(span);
        }
        i = close + 1;
    }
    return out;
}

const char* citation_issue_kind_name(CitationIssueKind kind) {
    switch (kind) {
        case CitationIssueKind::malformed_marker: return "malformed_marker";
        case CitationIssueKind::unknown_id: return "unknown_id";
        case CitationIssueKind::missing_citation: return "missing_citation";
    }
    return "unknown";
}

std::vector<CitationIssue> validate_answer_citations(const FinalAnswer& answer,
                                                     const IdMap& registry) {
    std::vector<CitationIssue> issues;
    const CitationParse parse = parse_citations(answer.text);
    for (const Span& span : parse.malformed) {
        issues.push_back({CitationIssueKind::malformed_marker, span, "",
                          "group violates the citation grammar"});
    }
    for (const CitationMarker& marker : parse.markers) {
        for (const std::string& id : marker.ids) {
            if (!registry.contains(id)) {
                issues.push_back({CitationIssueKind::unknown_id, marker.span, id,
                                  "cited id not present in the run registry"});
            }
        }
    }
    if (parse.markers.empty()) {
        issues.push_back({CitationIssueKind::missing_citation, std::nullopt, "",
                          "answer contains no citation marker"});
    }
    return issues;
}

CitationErrorBreakdown citation_error_breakdown(const std::vector<FinalAnswer>& answers,
                                                const std::vector<IdMap>& registries) {
    if (answers.empty()) {
        throw Error(ErrorCode::invalid_argument,
                    "citation_error_rate is undefined for an empty answer list");
    }
    if (answers.size() != registries.size()) {
        throw Error(ErrorCode::invalid_argument,
                    "answers and registries must be aligned");
    }
    CitationErrorBreakdown b;
    b.total = static_cast<int>(answers.size());
    for (std::size_t i = 0; i < answers.size(); ++i) {
        const auto issues = validate_answer_citations(answers[i], registries[i]);
        bool malformed = false, unknown = false, missing = false;
        for (const auto& issue : issues) {
            switch (issue.kind) {
                case CitationIssueKind::malformed_marker: malformed = true; break;
                case CitationIssueKind::unknown_id: unknown = true; break;
                case CitationIssueKind::missing_citation: missing = true; break;
            }
        }
        if (malformed) ++b.with_malformed;
        if (unknown) ++b.with_unknown_id;
        if (missing) ++b.with_missing_citation;
        if (answers[i].marker_missing) ++b.with_missing_marker;
        if (malformed || unknown || missing || answers[i].marker_missing) ++b.flagged;
    }
    b.rate = static_cast<double>(b.flagged) / static_cast<double>(b.total);
    return b;
}

double citation_error_rate(const std::vector<FinalAnswer>& answers,
                           const std::vector<IdMap>& registries) {
    return citation_error_breakdown(answers, registries).rate;
}

std::map<std::string, std::string> resolve_citations(const FinalAnswer& answer,
                                                     const IdMap& registry) {
    std::map<std::string, std::string> out;
    for (const CitationMarker& marker : answer.citations) {
        for (const std::string& id : marker.ids) {
            auto it = registry.find(id);
            out[id] = it != registry.end() ? it->second : std::string(kUnresolvedUrl);
        }
    }
    return out;
}

void to_json(json& j, const CitationIssue& issue) {
    j = json{{"kind", citation_issue_kind_name(issue.kind)}, {"detail", issue.detail}};
    if (issue.span) j["span"] = *issue.span;
    if (!issue.id.empty()) j["id"] = issue.id;
}

} // namespace deepresearch
