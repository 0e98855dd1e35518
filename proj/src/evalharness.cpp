#include "deepresearch/evalharness.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "deepresearch/citation.hpp"
#include "deepresearch/errors.hpp"

namespace deepresearch {

EvalHarness::EvalHarness(const ResearchAgent& agent, const Judge& judge, SearchClient& client,
                         EvalOptions options)
    : agent_(agent), judge_(judge), client_(client), options_(options) {
    if (options_.runs_per_question < 1) {
        throw Error(ErrorCode::invalid_argument, "runs_per_question must be >= 1");
    }
}

EvalReport EvalHarness::run(const std::vector<Question>& questions,
                            std::uint64_t key_point_seed) const {
    if (questions.empty()) {
        throw Error(ErrorCode::invalid_argument, "evaluation needs at least one question");
    }

    struct Unit {
        std::size_t question = 0;
        int run_index = 0;
    };
    std::vector<Unit> units;
    for (std::size_t q = 0; q < questions.size(); ++q) {
        for (int r = 0; r < options_.runs_per_question; ++r) units.push_back({q, r});
    }

    std::vector<EvalRow> rows(units.size());
    std::vector<FinalAnswer> scored_answers(units.size());
    std::vector<IdMap> scored_registries(units.size());
    std::vector<bool> ok(units.size(), false);

    parallel_for(units.size(), options_.jobs, [&](std::size_t u) {
        const Question& question = questions[units[u].question];
        EvalRow& row = rows[u];
        row.question_id = question.id;
        row.run_index = units[u].run_index;
        try {
            IdRegistry registry;
            const AgentRun agent_run = agent_.run(question, registry);
            const IdMap id_map = registry.id_map();

            std::optional<std::vector<KeyPoint>> key_points;
            if (supports_factuality(question)) {
                std::vector<WebDocument> docs;
                for (const auto& url : question.key_point_urls) {
                    if (auto doc = client_.fetch_url(url)) docs.push_back(std::move(*doc));
                }
                if (!docs.empty()) {
                    std::mt19937_64 rng(key_point_seed ^ fnv1a64(question.id));
                    auto points = judge_.extract_key_points(docs, 10, rng);
                    if (!points.empty()) key_points = std::move(points);
                }
                if (!key_points) {
                    warn("question " + question.id +
                         ": factuality skipped, no key points available");
                }
            }
            Question scoring_question = question;
            if (!key_points) scoring_question.key_point_urls.clear();

            row.metrics =
                judge_.score_answer(scoring_question, agent_run.answer.text, key_points);
            row.issued_searches = agent_run.answer.search_count;
            row.marker_missing = agent_run.answer.marker_missing;
            const auto issues = validate_answer_citations(agent_run.answer, id_map);
            row.citation_issues = static_cast<int>(issues.size());
            std::set<std::string> kinds;
            for (const auto& issue : issues) kinds.insert(citation_issue_kind_name(issue.kind));
            row.issue_kinds.assign(kinds.begin(), kinds.end());

            scored_answers[u] = agent_run.answer;
            scored_registries[u] = id_map;
            ok[u] = true;
        } catch (const Error& e) {
            row.failed = true;
            row.failure = e.what();
        }
    });

    EvalReport report;
    report.rows = rows;
    double clarity_sum = 0.0, insight_sum = 0.0, fact_sum = 0.0, issued_sum = 0.0;
    std::vector<FinalAnswer> answers;
    std::vector<IdMap> registries;
    for (std::size_t u = 0; u < units.size(); ++u) {
        if (!ok[u]) {
            ++report.excluded;
            continue;
        }
        ++report.n;
        clarity_sum += rows[u].metrics.clarity;
        insight_sum += rows[u].metrics.insightfulness;
        if (rows[u].metrics.factuality) {
            fact_sum += *rows[u].metrics.factuality;
            ++report.factuality_n;
        }
        issued_sum += rows[u].issued_searches;
        answers.push_back(scored_answers[u]);
        registries.push_back(scored_registries[u]);
    }
    if (report.n == 0) {
        throw Error(ErrorCode::runtime, "every evaluation run failed");
    }
    report.mean_clarity = clarity_sum / report.n;
    report.mean_insightfulness = insight_sum / report.n;
    if (report.factuality_n > 0) report.mean_factuality = fact_sum / report.factuality_n;
    report.mean_issued_searches = issued_sum / report.n;
    report.mean_initial_searches = 1.0;
    report.mean_total_searches = report.mean_initial_searches + report.mean_issued_searches;
    report.citation_error_rate = citation_error_rate(answers, registries);
    return report;
}

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

} // namespace

std::string render_report(const EvalReport& report) {
    const std::vector<std::string> headers = {"Clarity", "Insightfulness", "Factuality",
                                              "Search Count", "Citation Error Rate"};
    const std::vector<std::string> values = {
        fixed(report.mean_clarity, 2),
        fixed(report.mean_insightfulness, 2),
        report.mean_factuality ? fixed(*report.mean_factuality, 1) : std::string("-"),
        fixed(report.mean_total_searches, 2),
        fixed(report.citation_error_rate, 2),
    };

    std::ostringstream out;
    out << "n=" << report.n << " excluded=" << report.excluded;
    if (report.mean_factuality) out << " factuality_n=" << report.factuality_n;
    out << " (search count = " << fixed(report.mean_initial_searches, 2) << " initial + "
        << fixed(report.mean_issued_searches, 2) << " issued)\n";
    for (std::size_t i = 0; i < headers.size(); ++i) {
        if (i > 0) out << "  ";
        const std::size_t width = std::max(headers[i].size(), values[i].size());
        out << headers[i] << std::string(width - headers[i].size(), ' ');
    }
    out << "\n";
    for (std::size_t i = 0; i < headers.size(); ++i) {
        if (i > 0) out << "  ";
        const std::size_t width = std::max(headers[i].size(), values[i].size());
        out << values[i] << std::string(width - values[i].size(), ' ');
    }
    out << "\n";
    return out.str();
}

void to_json(json& j, const EvalRow& row) {
    j = json{{"question_id", row.question_id},
             {"run_index", row.run_index},
             {"failed", row.failed}};
    if (row.failed) {
        j["failure"] = row.failure;
        return;
    }
    j["clarity"] = row.metrics.clarity;
    j["insightfulness"] = row.metrics.insightfulness;
    if (row.metrics.factuality) j["factuality"] = *row.metrics.factuality;
    j["issued_searches"] = row.issued_searches;
    j["total_searches"] = row.issued_searches + 1;
    j["marker_missing"] = row.marker_missing;
    j["citation_issues"] = row.citation_issues;
    j["issue_kinds"] = row.issue_kinds;
}

} // namespace deepresearch
