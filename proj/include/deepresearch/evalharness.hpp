#pragma once

// Evaluation harness: run the agent over an evaluation set, score with the
// judge, and aggregate clarity / insightfulness / factuality / search count /
// citation error rate.

#include <optional>
#include <string>
#include <vector>

#include "deepresearch/agent.hpp"
#include "deepresearch/core.hpp"
#include "deepresearch/judge.hpp"

namespace deepresearch {

struct EvalRow {
    std::string question_id;
    int run_index = 0;
    bool failed = false;
    std::string failure;
    MetricScores metrics;
    int issued_searches = 0;
    bool marker_missing = false;
    int citation_issues = 0;
    std::vector<std::string> issue_kinds;
};

struct EvalReport {
    int n = 0;          // scored samples
    int excluded = 0;   // failed runs, excluded from every mean
    double mean_clarity = 0.0;
    double mean_insightfulness = 0.0;
    std::optional<double> mean_factuality;  // over samples where defined
    int factuality_n = 0;
    double mean_initial_searches = 1.0;  // the mandatory pre-loop search
    double mean_issued_searches = 0.0;
    double mean_total_searches = 0.0;
    double citation_error_rate = 0.0;
    std::vector<EvalRow> rows;
};

struct EvalOptions {
    int runs_per_question = 1;
    int jobs = 1;
};

class EvalHarness {
public:
    EvalHarness(const ResearchAgent& agent, const Judge& judge, SearchClient& client,
                EvalOptions options);

    // Per question: run the agent, score the answer (factuality only where key
    // points exist), and aggregate. Failures are recorded and excluded from
    // the means with a reported exclusion count.
    EvalReport run(const std::vector<Question>& questions,
                   std::uint64_t key_point_seed = 0) const;

private:
    const ResearchAgent& agent_;
    const Judge& judge_;
    SearchClient& client_;
    EvalOptions options_;
};

// Fixed-layout text table: Clarity, Insightfulness, Factuality, Search Count,
// Citation Error Rate. Two decimals for 0-10 metrics and counts, one decimal
// for factuality, two for the rate; absent factuality renders as "-".
std::string render_report(const EvalReport& report);

void to_json(json& j, const EvalRow& row);

} // namespace deepresearch
