#pragma once

// Preference-pair construction: question ingestion, multi-run sampling,
// scoring, normalization, pair selection with theta thresholds and tie-breaks,
// the formatting filter, DPO export with mask spans, and dataset statistics.

#include <optional>
#include <string>
#include <vector>

#include "deepresearch/agent.hpp"
#include "deepresearch/core.hpp"
#include "deepresearch/judge.hpp"

namespace deepresearch {

struct PairConstructionConfig {
    int runs_per_question = 20;
    double theta = 0.3;  // minimum chosen-minus-rejected gap, kept when gap >= theta
    std::uint64_t seed = 0;
};

void validate(const PairConstructionConfig& cfg);

struct QuestionFileSpec {
    std::string path;
    QuestionSource source = QuestionSource::other;
};

struct IngestResult {
    std::vector<Question> questions;
    std::vector<std::string> warnings;
};

// Reads line-delimited question records from each file, tagging them with the
// file's source. Malformed records and duplicate ids are errors with file/line
// diagnostics; researchy records without key-point urls are ingested with
// factuality disabled plus a warning.
IngestResult ingest_questions(const std::vector<QuestionFileSpec>& files);

struct AnswerSample {
    int run_index = -1;
    bool failed = false;
    std::string failure;
    std::string prompt;
    ReasoningTrace trace;
    FinalAnswer answer;
    IdMap registry;  // id -> url snapshot of this run's registry
};

// Attempts exactly cfg.runs_per_question agent runs for the question. The
// initial search runs once and is shared; failed runs are recorded as failure
// samples, never silently dropped. Throws only when every run failed.
std::vector<AnswerSample> sample_answers(const Question& question,
                                         const PairConstructionConfig& cfg,
                                         const ResearchAgent& agent);

// value = clarity/10 + insightfulness/10 + factuality/100 (when present).
PreferenceScore normalize_and_sum(const MetricScores& scores);

struct DroppedAnswer {
    std::size_t index = 0;  // into the input list
    std::vector<std::string> reasons;
};

struct FilterOutcome {
    std::vector<std::size_t> kept;
    std::vector<DroppedAnswer> dropped;
};

// Drops an answer iff citation validation reports any issue or the
// final-information marker was missing.
FilterOutcome filter_formatting(const std::vector<AnswerSample>& samples);

struct ScoredCandidate {
    int run_index = 0;
    double score = 0.0;
    int search_count = 0;
};

struct PairSelection {
    std::size_t chosen = 0;    // indices into the scored list
    std::size_t rejected = 0;
};

// chosen: max by (score, then more searches, then lower run index);
// rejected: min by (score, then fewer searches, then lower run index) among
// the remaining candidates. Needs at least two candidates.
std::optional<PairSelection> construct_pair(const std::vector<ScoredCandidate>& scored);

std::vector<PreferencePair> apply_threshold(std::vector<PreferencePair> pairs, double theta);

// prompt = the shared initial prompt; response text = the trace's segments
// concatenated; mask spans cover exactly the tool_result segments including
// their delimiter tags. Throws an export integrity error if the spans do not
// splice back to the trace text.
DpoRecord export_dpo_record(const PreferencePair& pair);
std::vector<DpoRecord> export_dpo(const std::vector<PreferencePair>& pairs);

struct SideStats {
    std::optional<double> preference_score;
    std::optional<double> clarity;
    std::optional<double> insightfulness;
    std::optional<double> factuality;   // over pairs where present
    std::optional<double> search_count; // includes the mandatory initial search
};

struct DatasetStats {
    int pair_count = 0;
    SideStats chosen;
    SideStats rejected;
};

DatasetStats dataset_stats(const std::vector<PreferencePair>& pairs);

void to_json(json& j, const DatasetStats& stats);

struct DatagenOptions {
    PairConstructionConfig pair_cfg;
    int jobs = 1;  // questions processed concurrently
    bool write_transcripts = true;
};

struct QuestionOutcome {
    std::string question_id;
    bool failed = false;       // every run failed
    std::string failure;
    int runs_ok = 0;
    int runs_failed = 0;
    int dropped_by_filter = 0;
    int scoring_failures = 0;
    bool factuality_enabled = false;
    std::optional<PreferencePair> candidate_pair;  // before the theta filter
};

struct DatagenResult {
    std::vector<QuestionOutcome> outcomes;
    std::vector<PreferencePair> pairs;  // after the theta filter
    DatasetStats stats;
    json manifest;
};

// Runs the full pipeline over the questions and writes pairs.jsonl, dpo.jsonl,
// stats.json, manifest.json (plus per-run transcripts) into out_dir. Output
// bytes depend only on inputs, config, and seed.
class DatagenRunner {
public:
    DatagenRunner(const ResearchAgent& agent, const Judge& judge, SearchClient& client,
                  DatagenOptions options);

    DatagenResult run(const std::vector<Question>& questions, const std::string& out_dir,
                      const json& manifest_extra) const;

private:
    QuestionOutcome process_question(const Question& question,
                                     std::vector<AnswerSample>& samples_out) const;

    const ResearchAgent& agent_;
    const Judge& judge_;
    SearchClient& client_;
    DatagenOptions options_;
};

// Filesystem-safe name for a question id, stable across runs.
std::string sanitize_filename(const std::string& name);

} // namespace deepresearch
